"""Speaker annotations: RTTM and UEM parsing, segment algebra.

Onsets and durations are seconds.  RTTM lines are written with exactly three
decimal places, the usual exchange precision for diarization hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "Segment",
    "Annotation",
    "ScoringRegions",
    "RTTMParseError",
    "parse_rttm",
    "write_rttm",
    "parse_uem",
    "write_uem",
    "merge_adjacent",
    "crop",
    "speech_timeline",
]


class RTTMParseError(ValueError):
    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True, order=True)
class Segment:
    """One speaker turn: half-open interval [onset, onset + duration)."""

    recording_id: str
    onset: float
    duration: float
    speaker: str

    def __post_init__(self):
        if not (self.onset >= 0.0 and self.onset == self.onset):
            raise ValueError(f"segment onset must be >= 0, got {self.onset}")
        if not self.duration > 0.0:
            raise ValueError(f"segment duration must be > 0, got {self.duration}")

    @property
    def offset(self) -> float:
        return self.onset + self.duration


@dataclass(frozen=True)
class Annotation:
    """All labeled segments of one recording, kept sorted by (onset, speaker)."""

    recording_id: str
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        for seg in self.segments:
            if seg.recording_id != self.recording_id:
                raise ValueError(
                    f"segment recording {seg.recording_id!r} does not match "
                    f"annotation {self.recording_id!r}"
                )
        ordered = tuple(sorted(self.segments, key=lambda s: (s.onset, s.speaker, s.offset)))
        object.__setattr__(self, "segments", ordered)

    def speakers(self) -> tuple[str, ...]:
        return tuple(sorted({seg.speaker for seg in self.segments}))

    def extent(self) -> float:
        return max((seg.offset for seg in self.segments), default=0.0)

    def with_segments(self, segments) -> "Annotation":
        return Annotation(self.recording_id, tuple(segments))


@dataclass(frozen=True)
class ScoringRegions:
    """Disjoint sorted half-open [onset, offset) intervals eligible for scoring."""

    recording_id: str
    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        prev_end = None
        for onset, offset in self.intervals:
            if not (0.0 <= onset < offset):
                raise ValueError(f"bad scoring interval ({onset}, {offset})")
            if prev_end is not None and onset < prev_end:
                raise ValueError("scoring intervals must be disjoint and sorted")
            prev_end = offset

    def total_duration(self) -> float:
        return sum(off - on for on, off in self.intervals)


def parse_rttm(text: str) -> list[Annotation]:
    """Parse RTTM text into one Annotation per recording (sorted by id).

    Only SPEAKER lines are read; other line types are ignored.  A malformed
    SPEAKER line (wrong field count, non-numeric onset or duration, duration
    <= 0) raises RTTMParseError carrying the offending line number.
    """
    by_recording: dict[str, list[Segment]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";;")):
            continue
        fields = line.split()
        if fields[0] != "SPEAKER":
            continue
        if len(fields) != 10:
            raise RTTMParseError(
                f"expected 10 fields on SPEAKER line, got {len(fields)}", lineno
            )
        rec, onset_s, dur_s, speaker = fields[1], fields[3], fields[4], fields[7]
        try:
            onset = float(onset_s)
            duration = float(dur_s)
        except ValueError:
            raise RTTMParseError(
                f"non-numeric onset/duration {onset_s!r} {dur_s!r}", lineno
            ) from None
        if duration <= 0:
            raise RTTMParseError(f"duration must be > 0, got {duration}", lineno)
        if onset < 0:
            raise RTTMParseError(f"onset must be >= 0, got {onset}", lineno)
        by_recording.setdefault(rec, []).append(Segment(rec, onset, duration, speaker))
    return [Annotation(rec, tuple(segs)) for rec, segs in sorted(by_recording.items())]


def write_rttm(annotations: list[Annotation] | Annotation) -> str:
    """Render annotations as RTTM with 3-decimal onsets and durations."""
    if isinstance(annotations, Annotation):
        annotations = [annotations]
    lines = []
    for ann in annotations:
        for seg in ann.segments:
            lines.append(
                f"SPEAKER {seg.recording_id} 1 {seg.onset:.3f} {seg.duration:.3f} "
                f"<NA> <NA> {seg.speaker} <NA> <NA>"
            )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_uem(text: str) -> list[ScoringRegions]:
    """Parse UEM lines ``<recording> 1 <onset> <offset>`` into ScoringRegions."""
    by_recording: dict[str, list[tuple[float, float]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";;")):
            continue
        fields = line.split()
        if len(fields) != 4:
            raise RTTMParseError(f"expected 4 fields on UEM line, got {len(fields)}", lineno)
        rec = fields[0]
        try:
            onset, offset = float(fields[2]), float(fields[3])
        except ValueError:
            raise RTTMParseError(f"non-numeric UEM bounds {fields[2]!r} {fields[3]!r}", lineno) from None
        if not onset < offset:
            raise RTTMParseError(f"UEM interval must satisfy onset < offset", lineno)
        by_recording.setdefault(rec, []).append((onset, offset))
    return [
        ScoringRegions(rec, tuple(sorted(ivs)))
        for rec, ivs in sorted(by_recording.items())
    ]


def write_uem(regions: list[ScoringRegions] | ScoringRegions) -> str:
    if isinstance(regions, ScoringRegions):
        regions = [regions]
    lines = []
    for reg in regions:
        for onset, offset in reg.intervals:
            lines.append(f"{reg.recording_id} 1 {onset:.3f} {offset:.3f}")
    return "\n".join(lines) + ("\n" if lines else "")


def read_rttm_file(path: str | Path) -> list[Annotation]:
    return parse_rttm(Path(path).read_text())


def write_rttm_file(path: str | Path, annotations) -> None:
    Path(path).write_text(write_rttm(annotations))


def merge_adjacent(annotation: Annotation, gap: float = 0.0) -> Annotation:
    """Fuse same-speaker segments whose inter-segment gap is <= gap seconds.

    Overlapping same-speaker segments always fuse, so the result has pairwise
    non-overlapping segments per speaker.
    """
    if gap < 0:
        raise ValueError(f"gap must be >= 0, got {gap}")
    merged: list[Segment] = []
    for speaker in annotation.speakers():
        spans: list[list[float]] = []
        for seg in annotation.segments:
            if seg.speaker != speaker:
                continue
            if spans and seg.onset - spans[-1][1] <= gap:
                spans[-1][1] = max(spans[-1][1], seg.offset)
            else:
                spans.append([seg.onset, seg.offset])
        merged.extend(
            Segment(annotation.recording_id, on, off - on, speaker) for on, off in spans
        )
    return annotation.with_segments(merged)


def crop(annotation: Annotation, regions: ScoringRegions) -> Annotation:
    """Intersect every segment with the scoring regions; drop empty results."""
    if regions.recording_id != annotation.recording_id:
        raise ValueError(
            f"regions are for {regions.recording_id!r}, annotation is "
            f"{annotation.recording_id!r}"
        )
    kept: list[Segment] = []
    for seg in annotation.segments:
        for on, off in regions.intervals:
            lo = max(seg.onset, on)
            hi = min(seg.offset, off)
            if hi > lo:
                kept.append(Segment(annotation.recording_id, lo, hi - lo, seg.speaker))
    return annotation.with_segments(kept)


def speech_timeline(annotation: Annotation) -> ScoringRegions:
    """Union of all segments regardless of speaker, as scoring regions."""
    spans: list[list[float]] = []
    for seg in annotation.segments:
        if spans and seg.onset <= spans[-1][1]:
            spans[-1][1] = max(spans[-1][1], seg.offset)
        else:
            spans.append([seg.onset, seg.offset])
    return ScoringRegions(annotation.recording_id, tuple((a, b) for a, b in spans))
