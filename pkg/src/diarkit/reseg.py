"""Resegmentation and posterior decoding.

``vbx_resegment`` refines a hard clustering with a Bayesian HMM: one
Gaussian state per initial cluster, state means drawn from the PLDA
between-speaker prior, within-speaker covariance as the emission covariance,
and a sticky transition matrix (self-loop probability on the diagonal, the
remaining mass spread uniformly over the other states).  The PLDA model is
simultaneously diagonalized (within -> identity, between -> diag(psi)) so
the variational updates are closed-form per dimension.  Each iteration does
one coordinate-ascent sweep (speaker posteriors, then state posteriors via
forward-backward, then entry priors), so the evidence lower bound never
decreases; this is checked every iteration.

``decode_posteriors`` turns frame-level speaker posteriors into segments:
threshold, fall back to the argmax speaker inside speech, median-filter,
silence everything outside the speech regions, upsample to the fine frame
grid.  ``assign_overlap`` adds the second most probable speaker inside
externally detected overlap regions and never removes existing speech.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.ndimage
from scipy.special import logsumexp

from . import container
from .annotations import Annotation, ScoringRegions, Segment, crop, speech_timeline
from .container import FormatError
from .embeddings import EmbeddingSequence
from .scoring import NumericalError, PLDAModel

__all__ = [
    "VBxConfig",
    "PosteriorMatrix",
    "OverlapRegions",
    "WhiteningStats",
    "LDAProjection",
    "interpolate_plda",
    "whiten_and_normalize",
    "lda_project",
    "vbx_resegment",
    "assign_overlap",
    "decode_posteriors",
    "parse_overlap_regions",
    "write_overlap_regions",
]


@dataclass(frozen=True)
class VBxConfig:
    """HMM resegmentation knobs.

    ``acoustic_scale`` and ``speaker_prior_scale`` rescale the emission
    statistics and the speaker-prior regularization; 1.0 keeps the exact
    variational objective.
    """

    loop_probability: float = 0.8
    lda_dim: int = 220
    plda_interpolation_alpha: float = 0.5
    max_iterations: int = 40
    convergence_tolerance: float = 1e-6
    acoustic_scale: float = 1.0
    speaker_prior_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.loop_probability < 1.0:
            raise ValueError("loop_probability must lie in (0, 1)")
        if not 0.0 <= self.plda_interpolation_alpha <= 1.0:
            raise ValueError("plda_interpolation_alpha must lie in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tolerance <= 0:
            raise ValueError("convergence_tolerance must be > 0")
        if self.acoustic_scale <= 0 or self.speaker_prior_scale <= 0:
            raise ValueError("scales must be > 0")
        if self.lda_dim < 1:
            raise ValueError("lda_dim must be >= 1")


@dataclass(frozen=True)
class PosteriorMatrix:
    """Per-frame speaker posteriors.

    Row t covers the time span ``time_offset + [t, t+1) * frame_shift *
    subsample_factor``: ``frame_shift`` is the fine decision grid and rows
    arrive subsampled by ``subsample_factor``.  ``speakers`` names the
    columns; it defaults to spk0, spk1, ...
    """

    recording_id: str
    matrix: np.ndarray
    frame_shift: float
    subsample_factor: int = 1
    speakers: tuple[str, ...] = None  # type: ignore[assignment]
    time_offset: float = 0.0

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2:
            raise ValueError(f"posterior matrix must be 2-D, got shape {M.shape}")
        if not np.isfinite(M).all():
            raise ValueError("posteriors must be finite")
        if M.size and (M.min() < -1e-9 or M.max() > 1.0 + 1e-9):
            raise ValueError("posteriors must lie in [0, 1]")
        if self.frame_shift <= 0:
            raise ValueError("frame_shift must be > 0")
        if int(self.subsample_factor) != self.subsample_factor or self.subsample_factor < 1:
            raise ValueError("subsample_factor must be an integer >= 1")
        object.__setattr__(self, "matrix", np.clip(M, 0.0, 1.0))
        object.__setattr__(self, "subsample_factor", int(self.subsample_factor))
        if self.speakers is None:
            object.__setattr__(
                self, "speakers", tuple(f"spk{k}" for k in range(M.shape[1]))
            )
        elif len(self.speakers) != M.shape[1]:
            raise ValueError("speakers must name every posterior column")
        else:
            object.__setattr__(self, "speakers", tuple(self.speakers))

    @property
    def row_duration(self) -> float:
        return self.frame_shift * self.subsample_factor

    def row_centers(self) -> np.ndarray:
        step = self.row_duration
        return self.time_offset + (np.arange(self.matrix.shape[0]) + 0.5) * step

    def save(self, path: str | Path) -> None:
        container.write_blocks(path, [self.matrix])
        container.write_sidecar(
            path,
            {
                "type": "posteriors",
                "recording_id": self.recording_id,
                "frame_shift": repr(float(self.frame_shift)),
                "subsample_factor": self.subsample_factor,
                "time_offset": repr(float(self.time_offset)),
                "speakers": ",".join(self.speakers),
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "PosteriorMatrix":
        meta = container.read_sidecar(path)
        if meta.get("type") != "posteriors":
            raise FormatError(f"{path}: expected type posteriors, got {meta.get('type')!r}")
        (matrix,) = container.read_blocks(path, expect=1)
        return cls(
            recording_id=meta["recording_id"],
            matrix=matrix.astype(float),
            frame_shift=float(meta["frame_shift"]),
            subsample_factor=int(meta["subsample_factor"]),
            speakers=tuple(meta["speakers"].split(",")) if meta.get("speakers") else None,
            time_offset=float(meta.get("time_offset", 0.0)),
        )


@dataclass(frozen=True)
class OverlapRegions:
    """Externally detected overlapped-speech intervals for one recording."""

    recording_id: str
    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        prev_end = None
        for onset, offset in ordered:
            if not (0.0 <= onset < offset):
                raise ValueError(f"bad overlap interval ({onset}, {offset})")
            if prev_end is not None and onset < prev_end:
                raise ValueError("overlap intervals must not overlap each other")
            prev_end = offset
        object.__setattr__(self, "intervals", ordered)

    @classmethod
    def from_annotation(cls, annotation: Annotation) -> "OverlapRegions":
        return cls(
            annotation.recording_id,
            tuple((seg.onset, seg.offset) for seg in annotation.segments),
        )


def parse_overlap_regions(text: str) -> list[OverlapRegions]:
    """Parse ``OVL <recording> 1 <onset> <duration>`` lines."""
    by_rec: dict[str, list[tuple[float, float]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";;")):
            continue
        fields = line.split()
        if fields[0] != "OVL":
            continue
        if len(fields) != 5:
            raise ValueError(f"line {lineno}: expected 5 fields on OVL line, got {len(fields)}")
        try:
            onset, duration = float(fields[3]), float(fields[4])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric overlap bounds") from None
        if duration <= 0:
            raise ValueError(f"line {lineno}: overlap duration must be > 0")
        by_rec.setdefault(fields[1], []).append((onset, onset + duration))
    return [OverlapRegions(rec, tuple(ivs)) for rec, ivs in sorted(by_rec.items())]


def write_overlap_regions(regions: list[OverlapRegions] | OverlapRegions) -> str:
    if isinstance(regions, OverlapRegions):
        regions = [regions]
    lines = []
    for reg in regions:
        for onset, offset in reg.intervals:
            lines.append(f"OVL {reg.recording_id} 1 {onset:.3f} {offset - onset:.3f}")
    return "\n".join(lines) + ("\n" if lines else "")


def interpolate_plda(model_a: PLDAModel, model_b: PLDAModel, alpha: float) -> PLDAModel:
    """Parameter-wise convex combination ``alpha * a + (1 - alpha) * b``.

    The endpoints return the corresponding input unchanged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if model_a.dim != model_b.dim:
        raise ValueError("models must share the embedding dimension")
    if alpha == 1.0:
        return model_a
    if alpha == 0.0:
        return model_b
    beta = 1.0 - alpha
    return PLDAModel(
        mean=alpha * model_a.mean + beta * model_b.mean,
        between=alpha * model_a.between + beta * model_b.between,
        within=alpha * model_a.within + beta * model_b.within,
    )


@dataclass(frozen=True)
class WhiteningStats:
    """Mean and covariance Cholesky factor of a reference embedding pool."""

    mean: np.ndarray
    cholesky: np.ndarray  # lower triangular, covariance = L L'

    @classmethod
    def fit(cls, X: np.ndarray, ridge: float = 0.0) -> "WhiteningStats":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 2:
            raise ValueError("need at least 2 rows to fit whitening stats")
        mean = X.mean(axis=0)
        cov = np.cov(X, rowvar=False) + ridge * np.eye(X.shape[1])
        try:
            L = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "pool covariance is singular; refit with ridge > 0"
            ) from None
        return cls(mean=mean, cholesky=L)

    def save(self, path: str | Path) -> None:
        container.write_blocks(path, [self.mean.reshape(1, -1), self.cholesky])
        container.write_sidecar(
            path, {"type": "whitening", "arrays": "mean,cholesky", "dim": len(self.mean)}
        )

    @classmethod
    def load(cls, path: str | Path) -> "WhiteningStats":
        meta = container.read_sidecar(path)
        if meta.get("type") != "whitening":
            raise FormatError(f"{path}: expected type whitening, got {meta.get('type')!r}")
        mean, chol = container.read_blocks(path, expect=2)
        return cls(mean[0].astype(float), np.tril(chol.astype(float)))


def whiten_and_normalize(embeddings, stats: WhiteningStats) -> np.ndarray:
    """Whiten by the pool statistics, then length-normalize each row.

    A row equal to the pool mean whitens to zero and is left as the zero
    vector (documented degenerate case).
    """
    X = embeddings.vectors if isinstance(embeddings, EmbeddingSequence) else embeddings
    X = np.asarray(X, dtype=float)
    white = scipy.linalg.solve_triangular(
        stats.cholesky, (X - stats.mean).T, lower=True
    ).T
    norms = np.linalg.norm(white, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return white / safe[:, None]


def lda_project(
    embeddings, labels, out_dim: int, ridge: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Linear discriminant projection fit on labeled embeddings.

    Solves the within/between generalized eigenproblem.  When ``out_dim``
    exceeds the number of discriminant directions (classes - 1), the matrix
    is padded with the leading principal directions of the within-class
    whitened data in the discriminants' orthogonal complement, so the
    projection keeps full rank.  Returns ``(W, projected)`` where projected
    = (X - class-pool mean) @ W.
    """
    X = embeddings.vectors if isinstance(embeddings, EmbeddingSequence) else embeddings
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    if X.shape[0] != labels.shape[0]:
        raise ValueError("one label per embedding row required")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("LDA needs at least 2 classes")
    n, d = X.shape
    if not 1 <= out_dim <= d:
        raise ValueError(f"out_dim must lie in [1, {d}]")

    mean = X.mean(axis=0)
    Sw = np.zeros((d, d))
    Sb = np.zeros((d, d))
    for c in classes:
        block = X[labels == c]
        mc = block.mean(axis=0)
        centered = block - mc
        Sw += centered.T @ centered
        Sb += len(block) * np.outer(mc - mean, mc - mean)
    Sw /= max(n - len(classes), 1)
    Sb /= n
    Sw += ridge * np.eye(d)
    try:
        L = np.linalg.cholesky(Sw)
    except np.linalg.LinAlgError:
        raise NumericalError(
            "within-class scatter is singular; pass ridge > 0"
        ) from None

    def _whiten_sym(M):
        tmp = scipy.linalg.solve_triangular(L, M, lower=True)
        out = scipy.linalg.solve_triangular(L, tmp.T, lower=True).T
        return 0.5 * (out + out.T)

    Bt = _whiten_sym(Sb)
    vals, vecs = np.linalg.eigh(Bt)
    order = np.argsort(vals)[::-1]
    vecs = vecs[:, order]
    n_disc = min(out_dim, len(classes) - 1)
    U = vecs[:, :n_disc]
    if out_dim > n_disc:
        centered = X - mean
        Y = scipy.linalg.solve_triangular(L, centered.T, lower=True).T
        St = Y.T @ Y / max(n - 1, 1)
        proj_out = np.eye(d) - U @ U.T
        comp = proj_out @ St @ proj_out
        cvals, cvecs = np.linalg.eigh(0.5 * (comp + comp.T))
        corder = np.argsort(cvals)[::-1]
        U = np.column_stack([U, cvecs[:, corder[: out_dim - n_disc]]])
    W = scipy.linalg.solve_triangular(L.T, U, lower=False)
    return W, (X - mean) @ W


@dataclass(frozen=True)
class LDAProjection:
    """Stored LDA transform: centering mean plus projection matrix."""

    mean: np.ndarray
    matrix: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, labels, out_dim: int, ridge: float = 0.0) -> "LDAProjection":
        X = np.asarray(X, dtype=float)
        W, _ = lda_project(X, labels, out_dim, ridge=ridge)
        return cls(mean=X.mean(axis=0), matrix=W)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.matrix

    def save(self, path: str | Path) -> None:
        container.write_blocks(path, [self.mean.reshape(1, -1), self.matrix])
        container.write_sidecar(
            path, {"type": "lda", "arrays": "mean,matrix", "dim": len(self.mean)}
        )

    @classmethod
    def load(cls, path: str | Path) -> "LDAProjection":
        meta = container.read_sidecar(path)
        if meta.get("type") != "lda":
            raise FormatError(f"{path}: expected type lda, got {meta.get('type')!r}")
        mean, matrix = container.read_blocks(path, expect=2)
        return cls(mean[0].astype(float), matrix.astype(float))


def _diagonalize_plda(plda: PLDAModel):
    """Transform T with T W T' = I and T B T' = diag(psi), psi descending."""
    L = np.linalg.cholesky(plda.within)
    tmp = scipy.linalg.solve_triangular(L, plda.between, lower=True)
    Bt = scipy.linalg.solve_triangular(L, tmp.T, lower=True).T
    psi, U = np.linalg.eigh(0.5 * (Bt + Bt.T))
    order = np.argsort(psi)[::-1]
    psi = np.clip(psi[order], 0.0, None)
    U = U[:, order]
    # x_tilde = U' L^-1 (x - mean)
    Linv = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return psi, U.T @ Linv


def _forward_backward(logpi, logA, logB):
    # the transition matrix is dense and strictly positive, so each recursion
    # step is a max-shifted matrix product rather than a generic logsumexp
    T, S = logB.shape
    A = np.exp(logA)
    alpha = np.empty((T, S))
    alpha[0] = logpi + logB[0]
    for t in range(1, T):
        prev = alpha[t - 1]
        m = prev.max()
        alpha[t] = logB[t] + m + np.log(np.exp(prev - m) @ A)
    m = alpha[-1].max()
    log_evidence = float(m + np.log(np.exp(alpha[-1] - m).sum()))
    beta = np.zeros((T, S))
    for t in range(T - 2, -1, -1):
        nxt = logB[t + 1] + beta[t + 1]
        m = nxt.max()
        beta[t] = m + np.log(A @ np.exp(nxt - m))
    g = alpha + beta
    g -= logsumexp(g, axis=1, keepdims=True)
    return np.exp(g), log_evidence


def vbx_resegment(
    embeddings,
    plda: PLDAModel,
    initial: "Partition",
    config: VBxConfig = VBxConfig(),
    elbo_trace: list | None = None,
):
    """Refine a clustering with the variational HMM described above.

    Returns ``(partition, posteriors)``.  The output never has more states
    than the input: states that end up claiming no frame are dropped.  A
    single-cluster input is returned unchanged.  ``elbo_trace``, when given,
    collects the per-iteration lower bound values.
    """
    from .clustering import Partition  # local import to avoid a cycle

    if isinstance(embeddings, EmbeddingSequence):
        X = embeddings.vectors.astype(float)
        frame_shift = embeddings.window_shift
        time_offset = float(embeddings.windows[0, 0]) if len(embeddings) else 0.0
        rec = embeddings.recording_id
    else:
        X = np.asarray(embeddings, dtype=float)
        frame_shift = 1.0
        time_offset = 0.0
        rec = "recording"
    n, dim = X.shape
    if len(initial.labels) != n:
        raise ValueError("initial partition must label every embedding row")
    if plda.dim != dim:
        raise ValueError("PLDA dimension must match the embeddings")

    n_states = len(initial.clusters)
    if n_states == 1:
        post = PosteriorMatrix(
            rec, np.ones((n, 1)), frame_shift, 1, time_offset=time_offset
        )
        return initial, post

    psi, T = _diagonalize_plda(plda)
    Xt = (X - plda.mean) @ T.T
    v = np.sqrt(psi)
    sum_x2 = (Xt**2).sum(axis=1)
    log_norm = -0.5 * dim * np.log(2.0 * np.pi)
    fa, fb = config.acoustic_scale, config.speaker_prior_scale
    loop = config.loop_probability

    gamma = np.zeros((n, n_states))
    gamma[np.arange(n), initial.labels] = 1.0
    logpi = np.full(n_states, -np.log(n_states))
    logA = np.full((n_states, n_states), np.log((1.0 - loop) / (n_states - 1)))
    np.fill_diagonal(logA, np.log(loop))

    prev_elbo = -np.inf
    for iteration in range(config.max_iterations):
        occupancy = gamma.sum(axis=0)
        stats = gamma.T @ Xt
        precision = 1.0 + (fa / fb) * occupancy[:, None] * psi[None, :]
        post_mean = (fa / fb) * v[None, :] * stats / precision
        expected_sq = (psi[None, :] * (post_mean**2 + 1.0 / precision)).sum(axis=1)
        emission = (
            log_norm
            - 0.5 * sum_x2[:, None]
            + Xt @ (v[None, :] * post_mean).T
            - 0.5 * expected_sq[None, :]
        )
        gamma, log_evidence = _forward_backward(logpi, logA, fa * emission)
        kl = 0.5 * float(
            (1.0 / precision + post_mean**2 - 1.0 + np.log(precision)).sum()
        )
        elbo = log_evidence - fb * kl
        if not np.isfinite(elbo):
            raise NumericalError(f"ELBO became non-finite at iteration {iteration}")
        if elbo < prev_elbo - (1e-8 + 1e-12 * abs(prev_elbo)):
            raise NumericalError(
                f"ELBO decreased at iteration {iteration}: {prev_elbo} -> {elbo}"
            )
        if elbo_trace is not None:
            elbo_trace.append(elbo)
        entry = np.clip(gamma[0], 1e-10, None)
        logpi = np.log(entry / entry.sum())
        if iteration > 0 and elbo - prev_elbo < config.convergence_tolerance:
            prev_elbo = elbo
            break
        prev_elbo = elbo

    hard = gamma.argmax(axis=1)
    used = np.unique(hard)
    gamma = gamma[:, used]
    gamma = gamma / gamma.sum(axis=1, keepdims=True)
    relabel = {int(s): k for k, s in enumerate(used)}
    labels = np.array([relabel[int(s)] for s in hard])
    partition = Partition.from_labels(labels)
    # reorder posterior columns to the partition's canonical cluster order
    col_for_cluster = [int(labels[members[0]]) for members in partition.clusters]
    gamma = gamma[:, col_for_cluster]
    post = PosteriorMatrix(rec, gamma, frame_shift, 1, time_offset=time_offset)
    return partition, post


def assign_overlap(
    annotation: Annotation,
    posteriors: PosteriorMatrix,
    overlaps: OverlapRegions,
) -> Annotation:
    """Add the second most probable speaker inside each overlap region.

    The highest average-posterior speaker is assumed to be the one already
    annotated; the runner-up gets a simultaneous segment spanning the
    region.  Existing speech is never removed.  With fewer than two
    available speakers the annotation is returned unchanged with a warning.
    """
    if posteriors.matrix.shape[1] < 2:
        warnings.warn(
            f"{annotation.recording_id}: only one speaker available, "
            "overlap assignment skipped",
            stacklevel=2,
        )
        return annotation
    centers = posteriors.row_centers()
    added: list[Segment] = []
    for onset, offset in overlaps.intervals:
        rows = np.flatnonzero((centers >= onset) & (centers < offset))
        if rows.size == 0:
            warnings.warn(
                f"{annotation.recording_id}: no posterior frames inside overlap "
                f"region ({onset:.3f}, {offset:.3f})",
                stacklevel=2,
            )
            continue
        avg = posteriors.matrix[rows].mean(axis=0)
        order = np.argsort(-avg, kind="stable")
        second = posteriors.speakers[int(order[1])]
        added.append(Segment(annotation.recording_id, onset, offset - onset, second))
    if not added:
        return annotation
    return annotation.with_segments(tuple(annotation.segments) + tuple(added))


def decode_posteriors(
    posteriors: PosteriorMatrix,
    threshold: float,
    sad,
    median_window: int = 11,
) -> Annotation:
    """Frame decisions from speaker posteriors, rendered as segments.

    Per row: the active set is every speaker with posterior >= threshold;
    speech rows with an empty set get the argmax speaker (ties toward the
    lower column).  Decisions are median-filtered per speaker, silenced
    outside the speech regions, upsampled to the fine grid, and emitted as
    segments clipped to the speech regions.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    if median_window < 1 or median_window % 2 == 0:
        raise ValueError(f"median_window must be odd and >= 1, got {median_window}")
    regions = sad if isinstance(sad, ScoringRegions) else speech_timeline(sad)
    M = posteriors.matrix
    n_rows, n_spk = M.shape
    centers = posteriors.row_centers()
    speech = np.zeros(n_rows, dtype=bool)
    for on, off in regions.intervals:
        speech |= (centers >= on) & (centers < off)

    active = M >= threshold
    fallback = speech & ~active.any(axis=1)
    if fallback.any():
        active[fallback, M[fallback].argmax(axis=1)] = True
    active &= speech[:, None]

    if median_window > 1 and n_rows:
        filtered = np.stack(
            [
                scipy.ndimage.median_filter(
                    active[:, k].astype(np.uint8), size=median_window, mode="nearest"
                )
                for k in range(n_spk)
            ],
            axis=1,
        ).astype(bool)
        active = filtered & speech[:, None]

    step = posteriors.row_duration
    segments: list[Segment] = []
    for k in range(n_spk):
        track = active[:, k]
        if not track.any():
            continue
        padded = np.concatenate([[False], track, [False]])
        flips = np.flatnonzero(padded[1:] != padded[:-1])
        for a, b in zip(flips[::2], flips[1::2]):
            onset = posteriors.time_offset + a * step
            offset = posteriors.time_offset + b * step
            segments.append(
                Segment(posteriors.recording_id, onset, offset - onset, posteriors.speakers[k])
            )
    ann = Annotation(posteriors.recording_id, tuple(segments))
    return crop(ann, regions) if regions.intervals else ann
