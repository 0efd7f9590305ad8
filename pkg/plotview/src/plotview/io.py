"""Reading and schema validation for run-directory CSV files.

The producer's column contracts, reproduced verbatim:

    front_XXXX.csv    t,xi,x,y,m,theta,g
    surface_XXXX.csv  t,xi1,xi2,x,y,z,m,n1,n2,n3,sol_res
    scalar_XXXX.csv   t,x,u
    kinks.csv         time,xi,theta_jump,m_jump,g_jump,speed_K
    metrics.csv       time,int_h1,int_h2,mean_g,max_abs_theta,sol_res_max,kink_count

Any header deviation raises ValueError naming the offending column.
"""

import csv
import glob
import os
from dataclasses import dataclass, field

import numpy as np

FRONT2_HEADER = ["t", "xi", "x", "y", "m", "theta", "g"]
SURFACE_HEADER = ["t", "xi1", "xi2", "x", "y", "z", "m", "n1", "n2", "n3", "sol_res"]
SCALAR_HEADER = ["t", "x", "u"]
KINKS_HEADER = ["time", "xi", "theta_jump", "m_jump", "g_jump", "speed_K"]
METRICS_HEADER = ["time", "int_h1", "int_h2", "mean_g", "max_abs_theta",
                  "sol_res_max", "kink_count"]


def read_csv(path, expected_header):
    """Parse a CSV against its schema; returns {column: float array}."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("schema mismatch in %s: empty file, header row is mandatory"
                             % os.path.basename(path))
        for k, want in enumerate(expected_header):
            got = header[k] if k < len(header) else None
            if got != want:
                raise ValueError("schema mismatch in %s: expected column %r, found %r"
                                 % (os.path.basename(path), want, got))
        if len(header) > len(expected_header):
            raise ValueError("schema mismatch in %s: unexpected column %r"
                             % (os.path.basename(path), header[len(expected_header)]))
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(len(rows), len(expected_header))
    return {name: data[:, k] for k, name in enumerate(expected_header)}


@dataclass
class RunData:
    """Parsed contents of a run directory."""

    kind: str                     # front2 | front3 | scalar1d
    times: list
    snapshots: list               # list of {column: array}
    kinks: dict = None
    metrics: dict = None
    paths: list = field(default_factory=list)


def _snapshot_series(run_dir):
    for prefix, header, kind in (("front_", FRONT2_HEADER, "front2"),
                                 ("surface_", SURFACE_HEADER, "front3"),
                                 ("scalar_", SCALAR_HEADER, "scalar1d")):
        paths = sorted(glob.glob(os.path.join(run_dir, prefix + "*.csv")))
        if paths:
            return paths, header, kind
    raise ValueError("no snapshot CSVs found in %s" % run_dir)


def load_run(run_dir):
    """Load every snapshot plus kinks.csv and metrics.csv from a run."""
    paths, header, kind = _snapshot_series(run_dir)
    snapshots = [read_csv(p, header) for p in paths]
    times = [float(s["t"][0] if "t" in s else s["time"][0]) for s in snapshots]
    kinks = None
    kinks_path = os.path.join(run_dir, "kinks.csv")
    if os.path.exists(kinks_path):
        kinks = read_csv(kinks_path, KINKS_HEADER)
    metrics = None
    metrics_path = os.path.join(run_dir, "metrics.csv")
    if os.path.exists(metrics_path):
        metrics = read_csv(metrics_path, METRICS_HEADER)
    return RunData(kind=kind, times=times, snapshots=snapshots, kinks=kinks,
                   metrics=metrics, paths=paths)


def select_times(times, wanted=None, stride=None):
    """Indices of the requested snapshot times (nearest match, tolerant to
    formatting); with neither selector, every snapshot is chosen."""
    if wanted is None and stride is None:
        return list(range(len(times)))
    if stride is not None:
        idx = list(range(0, len(times), int(stride)))
        if idx[-1] != len(times) - 1:
            idx.append(len(times) - 1)
        return idx
    out = []
    arr = np.asarray(times)
    for t in wanted:
        k = int(np.argmin(np.abs(arr - t)))
        if abs(arr[k] - t) > 1e-6 * max(1.0, abs(t)):
            raise ValueError("no snapshot at t=%g (available: %s)"
                             % (t, ", ".join("%g" % v for v in times)))
        out.append(k)
    return out
