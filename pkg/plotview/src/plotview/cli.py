"""Command line entry: plotview --in DIR --kind KIND --times LIST --out PATH."""

import argparse
import sys

from .render import PlotJob, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plotview",
        description="Render static figures from a run directory of CSV snapshots.")
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="run directory with snapshot CSVs")
    parser.add_argument("--kind", required=True,
                        choices=("fronts2d", "rays2d", "surface3d", "metrics"))
    parser.add_argument("--times", default=None,
                        help="comma-separated snapshot times (default: all)")
    parser.add_argument("--stride", type=int, default=None,
                        help="render every Nth snapshot")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    times = None
    if args.times and args.times != "all":
        times = [float(tok) for tok in args.times.split(",")]
    job = PlotJob(input_dir=args.input_dir, kind=args.kind, out=args.out,
                  times=times, stride=args.stride)
    try:
        result = render(job)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    for path in result.files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
