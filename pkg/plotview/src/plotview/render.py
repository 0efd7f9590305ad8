"""Figure rendering: front overlays, ray diagrams, surfaces, metric traces.

Drawing conventions follow the source material: fronts are solid curves,
rays broken lines, kinks dots. Rendering never writes into the input
directory and is deterministic for identical inputs.
"""

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import load_run, select_times  # noqa: E402

_PNG_META = {"Software": None}      # strip the version banner for stable bytes


@dataclass
class PlotJob:
    input_dir: str
    kind: str                       # fronts2d | rays2d | surface3d | metrics
    out: str
    times: list = None              # explicit snapshot times, or None
    stride: int = None              # every Nth snapshot, or None
    max_rays: int = 24


@dataclass
class RenderResult:
    files: list
    kink_dots: dict = field(default_factory=dict)   # snapshot time -> count


def _kink_positions(run, k):
    """Physical positions of kinks recorded at snapshot k, interpolated
    along that snapshot's front from their xi locations."""
    snap = run.snapshots[k]
    t = run.times[k]
    if run.kinks is None or len(run.kinks["time"]) == 0:
        return np.empty((0, 2))
    sel = np.abs(run.kinks["time"] - t) <= 1e-9 * max(1.0, abs(t))
    xis = run.kinks["xi"][sel]
    if xis.size == 0:
        return np.empty((0, 2))
    order = np.argsort(snap["xi"])
    xi_f = snap["xi"][order]
    xs = np.interp(xis, xi_f, snap["x"][order])
    ys = np.interp(xis, xi_f, snap["y"][order])
    return np.stack([xs, ys], axis=1)


def _render_fronts(run, idx, out, with_rays, max_rays):
    fig, ax = plt.subplots(figsize=(7.0, 6.0))
    cmap = plt.get_cmap("viridis")
    kink_dots = {}
    for j, k in enumerate(idx):
        snap = run.snapshots[k]
        color = cmap(j / max(len(idx) - 1, 1))
        ax.plot(snap["x"], snap["y"], "-", color=color, linewidth=1.0)
        pts = _kink_positions(run, k)
        kink_dots[run.times[k]] = int(pts.shape[0])
        if pts.size:
            ax.plot(pts[:, 0], pts[:, 1], "k.", markersize=5)
    if with_rays:
        n_pts = run.snapshots[0]["x"].size
        stride = max(1, n_pts // max_rays)
        X = np.stack([run.snapshots[k]["x"] for k in idx])
        Y = np.stack([run.snapshots[k]["y"] for k in idx])
        for i in range(0, n_pts, stride):
            ax.plot(X[:, i], Y[:, i], "--", color="0.5", linewidth=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(out, dpi=150, metadata=_PNG_META)
    plt.close(fig)
    return RenderResult(files=[out], kink_dots=kink_dots)


def _render_surface(run, idx, out):
    files = []
    stem, dot, ext = out.rpartition(".")
    if not dot:
        stem, ext = out, "png"
    for k in idx:
        snap = run.snapshots[k]
        xi1 = np.unique(snap["xi1"])
        xi2 = np.unique(snap["xi2"])
        shape = (xi1.size, xi2.size)
        X = snap["x"].reshape(shape)
        Y = snap["y"].reshape(shape)
        Z = snap["z"].reshape(shape)
        fig = plt.figure(figsize=(7.0, 5.5))
        ax = fig.add_subplot(projection="3d")
        ax.plot_surface(X, Y, Z, cmap="viridis", linewidth=0)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_zlabel("z")
        ax.set_title("t = %g" % run.times[k])
        path = out if len(idx) == 1 else "%s_%04d.%s" % (stem, k, ext)
        fig.savefig(path, dpi=150, metadata=_PNG_META)
        plt.close(fig)
        files.append(path)
    return RenderResult(files=files)


def _render_metrics(run, out):
    m = run.metrics
    if m is None:
        raise ValueError("metrics.csv not found in input directory")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    ax1.plot(m["time"], m["int_h1"], "-", label="int h1")
    ax1.plot(m["time"], m["int_h2"], "-", label="int h2")
    ax1.set_ylabel("conserved integrals")
    ax1.legend(loc="best")
    if np.any(np.isfinite(m["sol_res_max"])):
        ax2.plot(m["time"], m["sol_res_max"], "-", label="solenoidal residual")
    ax2.plot(m["time"], m["kink_count"], ".-", label="kink count")
    ax2.set_xlabel("time")
    ax2.legend(loc="best")
    fig.tight_layout()
    fig.savefig(out, dpi=150, metadata=_PNG_META)
    plt.close(fig)
    return RenderResult(files=[out])


def render(job):
    """Execute a plot job; returns the written files and, for front plots,
    the number of kink dots drawn per snapshot time."""
    run = load_run(job.input_dir)
    if job.kind == "metrics":
        return _render_metrics(run, job.out)
    idx = select_times(run.times, job.times, job.stride)
    if job.kind == "fronts2d":
        return _render_fronts(run, idx, job.out, with_rays=False, max_rays=job.max_rays)
    if job.kind == "rays2d":
        return _render_fronts(run, idx, job.out, with_rays=True, max_rays=job.max_rays)
    if job.kind == "surface3d":
        return _render_surface(run, idx, job.out)
    raise ValueError("unknown plot kind: %r" % (job.kind,))
