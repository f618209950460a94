"""Diarization error rate and Jaccard error rate.

Scoring discretizes time onto a 10 ms frame grid (boundaries round half-up)
and compares per-frame speaker sets, the same convention the reference
diarization scoring tools use.  Error seconds split into missed speech,
false alarm and speaker confusion; the denominator is the total reference
speaker time inside the scored regions, so overlapped reference speech
counts once per active speaker.  The collar excludes frames within the
given distance of any reference segment boundary.  JER averages per
reference speaker 1 - intersection/union against the optimally mapped
hypothesis speaker (1.0 when unmapped); it uses the scoring regions but no
collar and always scores overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .annotations import Annotation, ScoringRegions

__all__ = ["DERReport", "optimal_mapping", "der", "jer", "aggregate", "format_report", "report_rows"]

FRAME = 0.01  # scoring grid in seconds


def _frame(t: float) -> int:
    """Snap a time to the frame grid, rounding half-up."""
    return int(math.floor(t * 100.0 + 0.5))


def _speaker_frames(annotation: Annotation, speakers: list[str], n_frames: int) -> np.ndarray:
    grid = np.zeros((len(speakers), n_frames), dtype=bool)
    index = {s: k for k, s in enumerate(speakers)}
    for seg in annotation.segments:
        a, b = _frame(seg.onset), _frame(seg.offset)
        if b > a:
            grid[index[seg.speaker], a:b] = True
    return grid


def _scored_mask(
    reference: Annotation,
    n_frames: int,
    collar: float,
    regions: ScoringRegions | None,
    score_overlap: bool,
    ref_grid: np.ndarray,
    apply_collar: bool = True,
) -> np.ndarray:
    mask = np.zeros(n_frames, dtype=bool)
    if regions is not None:
        for on, off in regions.intervals:
            mask[_frame(on) : _frame(off)] = True
    else:
        mask[:] = True
    if apply_collar and collar > 0.0:
        for seg in reference.segments:
            for boundary in (seg.onset, seg.offset):
                a = max(_frame(boundary - collar), 0)
                b = _frame(boundary + collar)
                mask[a:b] = False
    if not score_overlap:
        mask &= ref_grid.sum(axis=0) < 2
    return mask


def optimal_mapping(reference: Annotation, hypothesis: Annotation, regions: ScoringRegions | None = None) -> tuple[tuple[str, str], ...]:
    """One-to-one speaker mapping maximizing total frame agreement.

    Pairs with zero shared time are dropped, so speakers may stay unmapped.
    Speakers are considered in sorted label order, which makes the choice
    among equal-agreement optima deterministic.
    """
    ref_spk = list(reference.speakers())
    hyp_spk = list(hypothesis.speakers())
    if not ref_spk or not hyp_spk:
        return ()
    n_frames = max(_frame(reference.extent()), _frame(hypothesis.extent()), 1)
    R = _speaker_frames(reference, ref_spk, n_frames)
    H = _speaker_frames(hypothesis, hyp_spk, n_frames)
    if regions is not None:
        mask = np.zeros(n_frames, dtype=bool)
        for on, off in regions.intervals:
            mask[_frame(on) : _frame(off)] = True
        R = R & mask
        H = H & mask
    shared = R.astype(np.int64) @ H.astype(np.int64).T
    rows, cols = scipy.optimize.linear_sum_assignment(-shared)
    return tuple(
        (ref_spk[i], hyp_spk[j])
        for i, j in zip(rows, cols)
        if shared[i, j] > 0
    )


@dataclass(frozen=True)
class DERReport:
    """Error decomposition for one recording (seconds and ratios)."""

    recording_id: str
    scored_speech: float
    missed: float
    false_alarm: float
    confusion: float
    der: float | None
    jer: float | None
    speaker_map: tuple[tuple[str, str], ...] = ()


def der(
    reference: Annotation,
    hypothesis: Annotation,
    collar: float = 0.0,
    regions: ScoringRegions | None = None,
    score_overlap: bool = True,
) -> DERReport:
    """Frame-grid diarization error rate with the optimal speaker mapping.

    ``der = (missed + false_alarm + confusion) / scored_speech`` where
    scored_speech is total reference speaker time in the scored regions.
    An empty scored reference gives der = None (undefined, not zero).
    """
    if collar < 0:
        raise ValueError(f"collar must be >= 0, got {collar}")
    ref_spk = list(reference.speakers())
    hyp_spk = list(hypothesis.speakers())
    n_frames = max(_frame(reference.extent()), _frame(hypothesis.extent()), 1)
    R = _speaker_frames(reference, ref_spk, n_frames)
    H = _speaker_frames(hypothesis, hyp_spk, n_frames)
    scored = _scored_mask(reference, n_frames, collar, regions, score_overlap, R)

    Rs = R[:, scored]
    Hs = H[:, scored]
    shared = Rs.astype(np.int64) @ Hs.astype(np.int64).T
    if shared.size:
        rows, cols = scipy.optimize.linear_sum_assignment(-shared)
        pairs = [(i, j) for i, j in zip(rows, cols) if shared[i, j] > 0]
    else:
        pairs = []
    mapping = tuple((ref_spk[i], hyp_spk[j]) for i, j in pairs)

    n_ref = Rs.sum(axis=0).astype(np.int64)
    n_hyp = Hs.sum(axis=0).astype(np.int64)
    n_correct = np.zeros(Rs.shape[1], dtype=np.int64)
    for i, j in pairs:
        n_correct += Rs[i] & Hs[j]

    missed = float(np.maximum(n_ref - n_hyp, 0).sum()) * FRAME
    false_alarm = float(np.maximum(n_hyp - n_ref, 0).sum()) * FRAME
    confusion = float((np.minimum(n_ref, n_hyp) - n_correct).sum()) * FRAME
    scored_speech = float(n_ref.sum()) * FRAME
    rate = (missed + false_alarm + confusion) / scored_speech if scored_speech > 0 else None
    jaccard = jer(reference, hypothesis, regions=regions)
    return DERReport(
        recording_id=reference.recording_id,
        scored_speech=scored_speech,
        missed=missed,
        false_alarm=false_alarm,
        confusion=confusion,
        der=rate,
        jer=jaccard,
        speaker_map=mapping,
    )


def jer(
    reference: Annotation,
    hypothesis: Annotation,
    regions: ScoringRegions | None = None,
) -> float | None:
    """Mean per-reference-speaker Jaccard error under the optimal mapping."""
    ref_spk = list(reference.speakers())
    if not ref_spk:
        return None
    hyp_spk = list(hypothesis.speakers())
    n_frames = max(_frame(reference.extent()), _frame(hypothesis.extent()), 1)
    R = _speaker_frames(reference, ref_spk, n_frames)
    H = _speaker_frames(hypothesis, hyp_spk, n_frames)
    if regions is not None:
        mask = np.zeros(n_frames, dtype=bool)
        for on, off in regions.intervals:
            mask[_frame(on) : _frame(off)] = True
        R &= mask
        H &= mask
    if hyp_spk:
        shared = R.astype(np.int64) @ H.astype(np.int64).T
        rows, cols = scipy.optimize.linear_sum_assignment(-shared)
        match = {int(i): int(j) for i, j in zip(rows, cols) if shared[i, j] > 0}
    else:
        match = {}
    errors = []
    for i in range(len(ref_spk)):
        if i not in match:
            errors.append(1.0)
            continue
        h = H[match[i]]
        union = float((R[i] | h).sum())
        inter = float((R[i] & h).sum())
        errors.append(1.0 - inter / union if union > 0 else 1.0)
    return float(np.mean(errors))


def aggregate(
    reports: list[DERReport],
    name: str = "ALL",
    include: set[str] | None = None,
) -> DERReport:
    """Pool error seconds across recordings; JER is the mean of file JERs.

    ``include`` filters by recording id (e.g. a core-subset list).
    """
    chosen = [r for r in reports if include is None or r.recording_id in include]
    scored = sum(r.scored_speech for r in chosen)
    missed = sum(r.missed for r in chosen)
    fa = sum(r.false_alarm for r in chosen)
    conf = sum(r.confusion for r in chosen)
    jers = [r.jer for r in chosen if r.jer is not None]
    return DERReport(
        recording_id=name,
        scored_speech=scored,
        missed=missed,
        false_alarm=fa,
        confusion=conf,
        der=(missed + fa + conf) / scored if scored > 0 else None,
        jer=float(np.mean(jers)) if jers else None,
        speaker_map=(),
    )


def _fmt(value: float | None, digits: int = 4) -> str:
    return "NA" if value is None else f"{value:.{digits}f}"


def report_rows(reports: list[DERReport]) -> list[list[str]]:
    """Fixed-order rows: recording, scored, miss, fa, conf, der, jer."""
    rows = [["recording", "scored", "miss", "fa", "conf", "der", "jer"]]
    for r in reports:
        rows.append(
            [
                r.recording_id,
                f"{r.scored_speech:.2f}",
                f"{r.missed:.2f}",
                f"{r.false_alarm:.2f}",
                f"{r.confusion:.2f}",
                _fmt(r.der),
                _fmt(r.jer),
            ]
        )
    return rows


def format_report(reports: list[DERReport]) -> str:
    """Aligned text table over :func:`report_rows`."""
    rows = report_rows(reports)
    widths = [max(len(row[c]) for row in rows) for c in range(len(rows[0]))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
