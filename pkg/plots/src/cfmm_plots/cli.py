"""`plots <kind> --in <csv> --out <png>`: render simulator artifacts."""

from __future__ import annotations

import argparse
import sys

from .render import PlotJob, SchemaError, render_heatmap, render_price_series


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="render simulator CSV artifacts to images"
    )
    parser.add_argument(
        "kind", choices=["reserve_heatmap", "price_series"], help="figure to render"
    )
    parser.add_argument("--in", dest="input_path", required=True, help="input CSV")
    parser.add_argument("--out", dest="output_path", required=True, help="output PNG")
    args = parser.parse_args(argv)

    try:
        job = PlotJob(args.kind, args.input_path, args.output_path)
        if args.kind == "reserve_heatmap":
            out = render_heatmap(job)
        else:
            out = render_price_series(job)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
