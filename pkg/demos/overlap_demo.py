"""Second-speaker assignment on overlapped speech.

A diarizer that gives every moment exactly one label is guaranteed to miss
whenever two people talk at once.  This demo synthesizes a corpus where a
fifth of the speech is overlapped, runs it twice from the same config, once
with the overlap regions withheld and once with them supplied, and compares
the scored reports.  Inside a known overlap region the pipeline adds the
runner-up speaker from the resegmentation posteriors, which converts most
of those structural misses into correct time.
"""

import argparse
import dataclasses
import tempfile
from pathlib import Path

from diarkit.pipeline import PipelineConfig, run_corpus, synthesize_corpus


def report_lines(out_dir):
    return (Path(out_dir) / "report.txt").read_text().rstrip().splitlines()


def corpus_miss_and_der(out_dir):
    for line in (Path(out_dir) / "report.tsv").read_text().splitlines()[1:]:
        row = line.split("\t")
        if row[0] == "ALL":
            return float(row[2]), float(row[5])
    raise SystemExit(f"no ALL row under {out_dir}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default=None)
    ap.add_argument("--recordings", type=int, default=3)
    ap.add_argument("--overlap", type=float, default=0.2,
                    help="fraction of speech covered by a second speaker")
    ap.add_argument("--seed", type=int, default=21)
    args = ap.parse_args()

    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp(prefix="overlap_demo_"))
    config_path = synthesize_corpus(
        workdir / "corpus",
        num_recordings=args.recordings,
        duration=120.0,
        overlap_fraction=args.overlap,
        seed=args.seed,
    )
    config = PipelineConfig.load(config_path)
    print(f"corpus with {args.overlap:.0%} overlapped speech under {workdir / 'corpus'}")
    print(f"overlap regions file: {config.overlap_regions}")

    blind = dataclasses.replace(config, overlap_regions=None)
    run_corpus(blind, workdir / "without")
    run_corpus(config, workdir / "with")

    print("\nwithout second-speaker assignment:")
    for line in report_lines(workdir / "without"):
        print(f"  {line}")
    print("\nwith second-speaker assignment:")
    for line in report_lines(workdir / "with"):
        print(f"  {line}")

    miss_b, der_b = corpus_miss_and_der(workdir / "without")
    miss_a, der_a = corpus_miss_and_der(workdir / "with")
    print(f"\nmissed speech {miss_b:.2f}s -> {miss_a:.2f}s, "
          f"DER {der_b:.4f} -> {der_a:.4f}")
    print("assignment trades misses for some confusion (a wrong runner-up "
          "is a speaker error, not a miss), and the trade pays off")


if __name__ == "__main__":
    main()
