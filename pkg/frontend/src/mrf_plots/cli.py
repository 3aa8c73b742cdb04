"""Command line: render one benchmark figure from a results CSV."""

import argparse
import sys
from pathlib import Path

from .figures import EmptySelectionError, mse_figure, runtime_figure
from .results import SchemaError, load_results

__version__ = "0.1.0"

KINDS = {"mse": mse_figure, "runtime": runtime_figure}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrf-plots",
        description="Render grouped boxplots from a benchmark results CSV.",
    )
    parser.add_argument("--csv", required=True, help="benchmark results CSV")
    parser.add_argument("--space", required=True, help="metric space to select")
    parser.add_argument("--kind", required=True, choices=sorted(KINDS),
                        help="which figure to render")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--force", action="store_true",
                        help="overwrite an existing output file")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if out.exists() and not args.force:
            raise FileExistsError(
                f"{out} already exists; pass --force to overwrite"
            )
        frame = load_results(args.csv)
        figure = KINDS[args.kind](frame, args.space)
        figure.savefig(out, dpi=150)
    except (SchemaError, EmptySelectionError, FileExistsError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
