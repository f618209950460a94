"""Scoring diarization output by hand.

Small worked examples of the two evaluation metrics.  The error rate is
computed on a 10 ms frame grid as (missed + false alarm + confusion) over
total reference speaker time, after choosing the speaker mapping that
minimizes confusion, so hypothesis speaker names never matter.  The Jaccard
rate averages per-reference-speaker disagreement instead, which punishes
losing a short speaker entirely much harder than the error rate does.
Every number below can be checked with pencil and paper.
"""

import argparse

from diarkit.annotations import Annotation, Segment
from diarkit.metrics import aggregate, der, format_report, jer, optimal_mapping


def build(rec, segs):
    return Annotation(rec, tuple(Segment(rec, on, dur, spk) for on, dur, spk in segs))


def show(name, ref, hyp, collar=0.0):
    rep = der(ref, hyp, collar=collar)
    print(f"{name}: scored {rep.scored_speech:.1f}s  miss {rep.missed:.1f}s  "
          f"fa {rep.false_alarm:.1f}s  conf {rep.confusion:.1f}s  DER {rep.der:.4f}")
    return rep


def main():
    argparse.ArgumentParser(description=__doc__).parse_args()

    # 10s of A then 10s of B; hypothesis gets the second half of B wrong
    ref = build("rec", [(0, 10, "A"), (10, 10, "B")])
    hyp = build("rec", [(0, 10, "X"), (10, 5, "Y"), (15, 5, "X")])
    rep = show("renamed speakers, one 5s confusion", ref, hyp)
    print(f"  optimal mapping: {dict(rep.speaker_map)}  (names are irrelevant)")
    print(f"  by hand: 5 confused seconds / 20 reference seconds = {5 / 20}")

    # missing a whole short speaker: mild DER, terrible JER
    ref = build("rec", [(0, 18, "A"), (18, 2, "B")])
    hyp = build("rec", [(0, 20, "X")])
    rep = show("\nshort speaker swallowed", ref, hyp)
    print(f"  JER {jer(ref, hyp):.4f}: speaker B is 100% wrong and JER averages "
          "per speaker, while DER only lost 2 of 20 seconds")

    # overlap counts every active reference speaker in the denominator
    ref = build("rec", [(0, 10, "A"), (4, 2, "B")])
    hyp = build("rec", [(0, 10, "A")])
    rep = show("\ntwo seconds of overlap, single-label hypothesis", ref, hyp)
    print("  reference speaker time is 12s (the overlap counts twice), and the "
          "unlabeled second speaker is 2s of miss")

    # a forgiving collar discards frames near reference boundaries
    ref = build("rec", [(0, 10, "A"), (10, 10, "B")])
    hyp = build("rec", [(0, 10.4, "A"), (10.4, 9.6, "B")])
    strict = show("\nboundary 0.4s late, no collar", ref, hyp)
    relaxed = show("same hypothesis, 0.5s collar", ref, hyp, collar=0.5)
    print(f"  DER {strict.der:.4f} -> {relaxed.der:.4f}: the collar excuses "
          "small boundary disputes")

    # the mapping is one-to-one: an extra cluster stays unmapped
    ref = build("rec", [(0, 10, "A")])
    hyp = build("rec", [(0, 6, "P"), (6, 4, "Q")])
    print(f"\nsplit speaker: mapping {dict(optimal_mapping(ref, hyp))}, "
          "the smaller shard becomes confusion")

    # corpus view: per-recording rows plus a pooled ALL row
    refs = [build("mtg0", [(0, 10, "A"), (10, 10, "B")]),
            build("mtg1", [(0, 30, "C")])]
    hyps = [build("mtg0", [(0, 10, "A"), (10, 10, "B")]),
            build("mtg1", [(0, 30, "C"), (30, 3, "D")])]
    reports = [der(r, h) for r, h in zip(refs, hyps)]
    reports.append(aggregate(reports))
    print("\n" + format_report(reports))


if __name__ == "__main__":
    main()
