"""Command line entry point: extract embeddings from an image manifest."""

import argparse
import sys

from .backbones import BackboneError, available_backbones
from .extract import ExtractionJob, extract
from .manifest import ManifestError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Extract penultimate-layer image embeddings to an EMB1 file.",
    )
    parser.add_argument("--backbone", required=True,
                        help=f"one of: {', '.join(available_backbones())}")
    parser.add_argument("--manifest", required=True,
                        help="CSV with header path,label[,group]")
    parser.add_argument("--out", required=True, help="output EMB1 path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--pretrained", action="store_true",
                        help="download published weights instead of the "
                             "seeded random fallback")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractionJob(
        backbone=args.backbone,
        manifest_path=args.manifest,
        output_path=args.out,
        batch_size=args.batch_size,
        device=args.device,
        pretrained=args.pretrained,
    )
    try:
        n, d = extract(job)
    except (ManifestError, BackboneError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {n} embeddings of width {d} to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
