"""Scenario catalogue, run orchestration, CSV/JSON persistence and the CLI.

Output layout per run directory:
    manifest.json   config echo, code version, wall time, summary figures
    front_XXXX.csv  2-D snapshots: t,xi,x,y,m,theta,g
    surface_XXXX.csv  3-D snapshots: t,xi1,xi2,x,y,z,m,n1,n2,n3,sol_res
    scalar_XXXX.csv 1-D snapshots: t,x,u
    shock.csv       1-D shock trajectory: t,x_shock
    kinks.csv       persistent kinks: time,xi,theta_jump,m_jump,g_jump,speed_K
    metrics.csv     per snapshot: time,int_h1,int_h2,mean_g,max_abs_theta,
                    sol_res_max,kink_count

All floats are written with 17 significant digits, '.' decimal separator
and '\\n' line endings; repeat runs of one config produce byte-identical
data files (the manifest differs only in its wall_time field).
"""

import argparse
import json
import math
import os
import sys
import time as _time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .closure import init_closure
from .kcl2d import (KclState2, conserved_integral, detect_kinks, evolve,
                    reconstruct_front)
from .kcl3d import KclState3, evolve3, init_closure3, reconstruct_surface, solenoidal_residual
from .scalar_claw import Grid1, burgers, evolve_scalar, fit_shock_speed, locate_shock

SCENARIOS = ("expanding_circle", "wedge", "sinusoidal_shock",
             "periodic_pulse3d", "burgers_riemann")

_DEFAULTS = {
    "expanding_circle": dict(closure="constant_m", cells=512, t_end=1.0,
                             snap_every=0.25,
                             params=dict(r0=1.0, m0=1.0)),
    "wedge": dict(closure="wnlrt", cells=512, t_end=2.0, snap_every=0.25,
                  params=dict(m0=1.2, wedge_angle=0.3, half_width=2.0)),
    "sinusoidal_shock": dict(closure="wnlrt", cells=512, t_end=40.0,
                             snap_every=1.0,
                             params=dict(m0=1.2, amplitude=0.2, period=4.0)),
    "periodic_pulse3d": dict(closure="wnlrt", cells=64, t_end=1.0,
                             snap_every=0.25,
                             params=dict(m0=1.2, kappa=0.1, a=2.0, b=2.0)),
    "burgers_riemann": dict(closure="constant_m", cells=400, t_end=1.0,
                            snap_every=0.05,
                            params=dict(u_l=1.0, u_r=0.0, x_jump=0.0,
                                        x_min=-1.0, x_max=2.0)),
}


@dataclass
class ScenarioConfig:
    scenario: str
    out_dir: str
    closure: str = None
    cells: int = None
    cfl: float = 0.45
    t_end: float = None
    snap_every: float = None
    seed: int = 0          # reserved; scenarios are deterministic
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError("config field 'scenario': unknown value %r" % (self.scenario,))
        base = _DEFAULTS[self.scenario]
        if self.closure is None:
            self.closure = base["closure"]
        if self.cells is None:
            self.cells = base["cells"]
        if self.t_end is None:
            self.t_end = base["t_end"]
        if self.snap_every is None:
            self.snap_every = base["snap_every"]
        self.params = {**base["params"], **(self.params or {})}
        if self.closure not in ("constant_m", "wnlrt"):
            raise ValueError("config field 'closure': unknown value %r" % (self.closure,))
        self.cells = int(self.cells)
        periods = 2 if self.scenario == "periodic_pulse3d" else 1
        if self.cells < 16 * periods:
            raise ValueError("config field 'cells': need at least 16 per period")
        if not self.t_end > 0:
            raise ValueError("config field 't_end': must be positive")
        if not 0 < self.cfl < 1:
            raise ValueError("config field 'cfl': must lie in (0, 1)")
        if not self.snap_every > 0:
            raise ValueError("config field 'snap_every': must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        allowed = {"scenario", "out_dir", "closure", "cells", "cfl",
                   "t_end", "snap_every", "seed", "params"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError("config field %r: unknown field" % (sorted(unknown)[0],))
        return cls(**d)


@dataclass
class InitialData:
    kind: str               # front2 | front3 | scalar1d
    state: object = None
    anchor: tuple = None
    points: object = None   # exact sampled physical points at t=0
    grid: object = None     # scalar1d
    u0: object = None
    claw: object = None


def build_initial(config):
    """Construct the initial state for a scenario."""
    p = config.params
    n = config.cells
    if config.scenario == "expanding_circle":
        r0 = float(p["r0"])
        dxi = 2.0 * np.pi / n
        xi = dxi * np.arange(n)
        state = KclState2(xi_min=0.0, xi_spacing=dxi,
                          m=np.full(n, float(p["m0"])), theta=xi.copy(),
                          g=np.full(n, r0), boundary="periodic")
        pts = np.stack([r0 * np.cos(xi), r0 * np.sin(xi)], axis=1)
        return InitialData(kind="front2", state=state, anchor=(r0, 0.0), points=pts)

    if config.scenario == "wedge":
        ang = float(p["wedge_angle"])
        hw = float(p["half_width"])
        dxi = 2.0 * hw / (n - 1)
        xi = -hw + dxi * np.arange(n)
        theta = np.where(xi < 0, ang, -ang)
        state = KclState2(xi_min=-hw, xi_spacing=dxi,
                          m=np.full(n, float(p["m0"])), theta=theta,
                          g=np.ones(n), boundary="extrapolate")
        # straight segments meeting at the origin, concave toward +x
        x = -np.abs(xi) * np.sin(ang)
        y = xi * np.cos(ang)
        pts = np.stack([x, y], axis=1)
        return InitialData(kind="front2", state=state,
                           anchor=(float(x[0]), float(y[0])), points=pts)

    if config.scenario == "sinusoidal_shock":
        amp = float(p["amplitude"])
        per = float(p["period"])
        dxi = per / n
        y = -per / 2.0 + dxi * np.arange(n)
        k = 2.0 * np.pi / per
        x = amp - amp * np.cos(k * y)
        xp = amp * k * np.sin(k * y)
        state = KclState2(xi_min=-per / 2.0, xi_spacing=dxi,
                          m=np.full(n, float(p["m0"])),
                          theta=-np.arctan(xp),
                          g=np.sqrt(1.0 + xp ** 2), boundary="periodic")
        pts = np.stack([x, y], axis=1)
        return InitialData(kind="front2", state=state,
                           anchor=(float(x[0]), float(y[0])), points=pts)

    if config.scenario == "periodic_pulse3d":
        kap, a, b = float(p["kappa"]), float(p["a"]), float(p["b"])
        ext1, ext2 = 4.0 * a, 4.0 * b      # two periods per direction
        d1, d2 = ext1 / n, ext2 / n
        xi1 = d1 * np.arange(n)
        xi2 = d2 * np.arange(n)
        X1, X2 = np.meshgrid(xi1, xi2, indexing="ij")
        U = np.zeros((n, n, 3))
        U[..., 0] = 1.0
        U[..., 2] = kap * np.pi / a * np.sin(np.pi * X1 / a)
        V = np.zeros((n, n, 3))
        V[..., 1] = 1.0
        V[..., 2] = kap * np.pi / b * np.sin(np.pi * X2 / b)
        x3 = kap * (2.0 - np.cos(np.pi * X1 / a) - np.cos(np.pi * X2 / b))
        pts = np.stack([X1, X2, x3], axis=-1)
        state = KclState3(d1=d1, d2=d2, U=U, V=V,
                          m=np.full((n, n), float(p["m0"])))
        return InitialData(kind="front3", state=state,
                           anchor=(0.0, 0.0, float(x3[0, 0])), points=pts)

    # burgers_riemann
    grid = Grid1(x_min=float(p["x_min"]), x_max=float(p["x_max"]),
                 n_cells=n, boundary="outflow")
    u0 = np.where(grid.centers < float(p["x_jump"]), float(p["u_l"]), float(p["u_r"]))
    return InitialData(kind="scalar1d", grid=grid, u0=u0, claw=burgers())


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _metrics_row(t, i1=math.nan, i2=math.nan, mean_g=math.nan,
                 max_th=math.nan, sol=math.nan, kinks=0):
    return (t, i1, i2, mean_g, max_th, sol, kinks)


METRICS_HEADER = ["time", "int_h1", "int_h2", "mean_g", "max_abs_theta",
                  "sol_res_max", "kink_count"]
FRONT2_HEADER = ["t", "xi", "x", "y", "m", "theta", "g"]
SURFACE_HEADER = ["t", "xi1", "xi2", "x", "y", "z", "m", "n1", "n2", "n3", "sol_res"]
SCALAR_HEADER = ["t", "x", "u"]
KINKS_HEADER = ["time", "xi", "theta_jump", "m_jump", "g_jump", "speed_K"]


def _run_front2(config, init, out):
    closure = init_closure(config.closure, init.state)
    thr = float(config.params.get("theta_threshold", 0.05))
    ev = evolve(init.state, closure, config.t_end, cfl=config.cfl,
                snap_every=config.snap_every, anchor0=init.anchor,
                theta_threshold=thr)
    metrics = []
    for k, (state, anchor) in enumerate(zip(ev.states, ev.anchors)):
        front = reconstruct_front(state, anchor)
        rows = [(state.time, xi, x, y, m, th, g)
                for xi, x, y, m, th, g in zip(state.xi, front.x, front.y,
                                              state.m, state.theta, state.g)]
        _write_csv(os.path.join(out, "front_%04d.csv" % k), FRONT2_HEADER, rows)
        lo = state.xi_min
        i1, i2 = conserved_integral(state, lo, lo + state.xi_extent)
        metrics.append(_metrics_row(
            state.time, i1, i2, float(np.mean(state.g)),
            float(np.max(np.abs(state.theta))),
            kinks=len(ev.kink_snapshots[k][1])))
    _write_csv(os.path.join(out, "metrics.csv"), METRICS_HEADER, metrics)
    _write_csv(os.path.join(out, "kinks.csv"), KINKS_HEADER,
               [(r.time, r.xi_location, r.theta_jump, r.m_jump, r.g_jump, r.speed_K)
                for r in ev.kinks])
    g0 = float(np.mean(ev.states[0].g))
    summary = {
        "g_growth_ratio": float(np.mean(ev.states[-1].g)) / g0,
        "kink_count_final": len(ev.kink_snapshots[-1][1]),
        "first_kink_time": next((t for t, recs in ev.kink_snapshots if recs), None),
        "max_abs_theta_final": float(np.max(np.abs(ev.states[-1].theta))),
    }
    return summary


def _run_front3(config, init, out):
    closure = init_closure3(config.closure, init.state)
    ev = evolve3(init.state, closure, config.t_end, cfl=config.cfl,
                 snap_every=config.snap_every, anchor0=init.anchor)
    metrics = []
    for k, (state, anchor) in enumerate(zip(ev.states, ev.anchors)):
        mesh = reconstruct_surface(state, anchor)
        res, res_max = solenoidal_residual(state)
        res_norm = np.linalg.norm(res, axis=2)
        nrm = state.normals
        n1, n2 = state.m.shape
        xi1 = state.d1 * np.arange(n1)
        xi2 = state.d2 * np.arange(n2)
        rows = []
        for i in range(n1):
            for j in range(n2):
                rows.append((state.time, xi1[i], xi2[j],
                             mesh.points[i, j, 0], mesh.points[i, j, 1],
                             mesh.points[i, j, 2], state.m[i, j],
                             nrm[i, j, 0], nrm[i, j, 1], nrm[i, j, 2],
                             res_norm[i, j]))
        _write_csv(os.path.join(out, "surface_%04d.csv" % k), SURFACE_HEADER, rows)
        cell = state.d1 * state.d2
        sU = np.linalg.norm(np.sum(state.U, axis=(0, 1))) * cell
        sV = np.linalg.norm(np.sum(state.V, axis=(0, 1))) * cell
        metrics.append(_metrics_row(state.time, sU, sV,
                                    float(np.mean(state.tube_area)), sol=res_max))
    _write_csv(os.path.join(out, "metrics.csv"), METRICS_HEADER, metrics)
    _write_csv(os.path.join(out, "kinks.csv"), KINKS_HEADER, [])
    _, r0 = solenoidal_residual(ev.states[0])
    _, r1 = solenoidal_residual(ev.states[-1])
    return {"sol_res_initial": r0, "sol_res_final": r1,
            "sol_res_increase": r1 - r0}


def _run_scalar(config, init, out):
    p = config.params
    history = evolve_scalar(init.claw, init.grid, init.u0, config.t_end,
                            cfl=config.cfl)
    traj = [(t, locate_shock(init.grid, u)) for t, u in history]
    _write_csv(os.path.join(out, "shock.csv"), ["t", "x_shock"], traj)

    snap_t = 0.0
    metrics = []
    idx = 0
    dx = init.grid.dx
    for t, u in history:
        if t + 1e-12 >= snap_t or t == history[-1][0]:
            rows = [(t, x, val) for x, val in zip(init.grid.centers, u)]
            _write_csv(os.path.join(out, "scalar_%04d.csv" % idx), SCALAR_HEADER, rows)
            metrics.append(_metrics_row(t, i1=float(np.sum(init.claw.density_fn(u)) * dx)))
            idx += 1
            snap_t += config.snap_every
    _write_csv(os.path.join(out, "metrics.csv"), METRICS_HEADER, metrics)
    _write_csv(os.path.join(out, "kinks.csv"), KINKS_HEADER, [])
    speed = fit_shock_speed([t for t, _ in traj], [x for _, x in traj])
    return {"fitted_shock_speed": speed,
            "rh_speed_exact": 0.5 * (float(p["u_l"]) + float(p["u_r"]))}


def run(config):
    """Execute a scenario; writes outputs and the manifest, returns the
    summary dict. Deterministic across repeat runs on one platform."""
    os.makedirs(config.out_dir, exist_ok=True)
    t0 = _time.perf_counter()
    init = build_initial(config)
    runner = {"front2": _run_front2, "front3": _run_front3,
              "scalar1d": _run_scalar}[init.kind]
    module = {"front2": "kcl2d", "front3": "kcl3d", "scalar1d": "scalar_claw"}[init.kind]
    try:
        summary = runner(config, init, config.out_dir)
    except Exception as exc:
        raise RuntimeError("%s: %s" % (module, exc)) from exc
    manifest = {
        "config": config.to_dict(),
        "code_version": __version__,
        "wall_time_s": _time.perf_counter() - t0,
        "summary": summary,
    }
    with open(os.path.join(config.out_dir, "manifest.json"), "w", newline="") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="kclfront",
        description="Run front-propagation scenarios and write CSV snapshots.")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--scenario", choices=SCENARIOS)
    parser.add_argument("--cells", type=int)
    parser.add_argument("--t-end", type=float, dest="t_end")
    parser.add_argument("--cfl", type=float)
    parser.add_argument("--closure", choices=("constant_m", "wnlrt"))
    parser.add_argument("--out", dest="out_dir")
    parser.add_argument("--snap-every", type=float, dest="snap_every")
    args = parser.parse_args(argv)

    data = {}
    if args.config:
        with open(args.config) as f:
            data = json.load(f)
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]     # accept a manifest echo as config
    for key in ("scenario", "cells", "t_end", "cfl", "closure", "out_dir", "snap_every"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if "scenario" not in data or data.get("out_dir") in (None, ""):
        parser.error("need --scenario and --out (or a config file providing them)")
    try:
        config = ScenarioConfig.from_dict(data)
        summary = run(config)
    except (ValueError, RuntimeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    print(json.dumps({"out_dir": config.out_dir, "summary": summary}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
