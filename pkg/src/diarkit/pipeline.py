"""End-to-end batch diarization over a corpus of embedding files.

Wideband recordings run: similarity scoring -> k-NN graph -> speaker-count
estimate (average-linkage threshold) -> path-integral clustering -> HMM
resegmentation -> optional overlap assignment -> segment merging.
Narrowband recordings decode precomputed frame posteriors instead.  The
corpus driver routes each recording by the bandwidth classifier (or an
override), writes per-recording RTTM files, and scores against a reference
when one is configured.

All tunable constants live in the config file; nothing numeric is hidden in
code.  Relative paths in a config resolve against the config file location.
"""

from __future__ import annotations

import hashlib
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .annotations import (
    Annotation,
    ScoringRegions,
    Segment,
    crop,
    merge_adjacent,
    parse_rttm,
    parse_uem,
    speech_timeline,
    write_rttm,
)
from .bandwidth import MLPClassifier, classify_recording
from .clustering import (
    PICParams,
    Partition,
    absorb_small_clusters,
    ahc_cluster,
    build_knn_graph,
    estimate_num_speakers,
    pic_cluster,
)
from .embeddings import EmbeddingSequence, read_embeddings
from .metrics import DERReport, aggregate, der, format_report, report_rows
from .reseg import (
    OverlapRegions,
    PosteriorMatrix,
    VBxConfig,
    LDAProjection,
    WhiteningStats,
    assign_overlap,
    decode_posteriors,
    interpolate_plda,
    parse_overlap_regions,
    vbx_resegment,
    whiten_and_normalize,
)
from .scoring import (
    PCAModel,
    PLDAModel,
    SimilarityMatrix,
    cosine_similarity,
    fit_pca,
    score_plda_matrix,
    standardize_scores,
)

__all__ = [
    "ConfigError",
    "PipelineConfig",
    "RunManifest",
    "run_wideband",
    "run_narrowband",
    "run_corpus",
]


class ConfigError(ValueError):
    pass


def _merge_section(cls, data: dict, context: str):
    known = {f.name for f in dataclass_fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {context} config keys: {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class ScoringSection:
    kind: str = "plda"
    cosine_pca_dim: int = 30
    cosine_pca_model: str | None = None
    plda_model: str | None = None
    plda_energy_fraction: float = 0.3
    sigmoid_scale: float = 1.0
    sigmoid_offset: float = 0.0
    standardize_plda_scores: bool = True

    def __post_init__(self):
        if self.kind not in ("cosine", "plda"):
            raise ConfigError(f"scoring.kind must be cosine or plda, got {self.kind!r}")


@dataclass(frozen=True)
class ClusteringSection:
    method: str = "pic"
    num_neighbors: int = 30
    damping: float = 0.01
    ahc_threshold: float = 0.0
    # clusters with fewer windows than this neither count toward the speaker
    # estimate nor survive as output speakers; they attach to the most
    # similar large cluster instead
    min_cluster_windows: int = 1
    # stop path-integral merging once the best affinity drops this low;
    # disconnected graph blocks score exactly zero, so anything at or below
    # the floor carries no merge evidence
    affinity_floor: float = 1e-12

    def __post_init__(self):
        if self.method not in ("pic", "ahc"):
            raise ConfigError(f"clustering.method must be pic or ahc, got {self.method!r}")
        if self.min_cluster_windows < 1:
            raise ConfigError("clustering.min_cluster_windows must be >= 1")


@dataclass(frozen=True)
class VBxSection:
    enabled: bool = True
    loop_probability: float = 0.8
    lda_dim: int = 220
    lda_model: str | None = None
    whitening_stats: str | None = None
    plda_interpolation_alpha: float = 0.5
    plda_model_primary: str | None = None
    plda_model_secondary: str | None = None
    max_iterations: int = 40
    convergence_tolerance: float = 1e-6
    acoustic_scale: float = 1.0
    speaker_prior_scale: float = 1.0

    def to_vbx_config(self) -> VBxConfig:
        return VBxConfig(
            loop_probability=self.loop_probability,
            lda_dim=self.lda_dim,
            plda_interpolation_alpha=self.plda_interpolation_alpha,
            max_iterations=self.max_iterations,
            convergence_tolerance=self.convergence_tolerance,
            acoustic_scale=self.acoustic_scale,
            speaker_prior_scale=self.speaker_prior_scale,
        )


@dataclass(frozen=True)
class DecodeSection:
    threshold: float = 0.5
    median_window: int = 11


@dataclass(frozen=True)
class MetricsSection:
    collar: float = 0.0
    score_overlap: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    embeddings_dir: str | None = None
    posteriors_dir: str | None = None
    sad_rttm: str | None = None
    reference_rttm: str | None = None
    uem: str | None = None
    overlap_regions: str | None = None
    bandwidth_model: str | None = None
    bandwidth_embeddings_dir: str | None = None
    route_override: str | None = None  # "wideband" or "narrowband"
    recordings: tuple[str, ...] | None = None
    window_size: float = 1.5
    window_shift: float = 0.25
    sad_gating: bool = True
    merge_gap: float = 0.0
    seed: int = 0
    scoring: ScoringSection = field(default_factory=ScoringSection)
    clustering: ClusteringSection = field(default_factory=ClusteringSection)
    vbx: VBxSection = field(default_factory=VBxSection)
    decode: DecodeSection = field(default_factory=DecodeSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)

    def __post_init__(self):
        if self.route_override not in (None, "wideband", "narrowband"):
            raise ConfigError(
                f"route_override must be wideband or narrowband, got {self.route_override!r}"
            )
        if self.recordings is not None:
            object.__setattr__(self, "recordings", tuple(self.recordings))

    _PATH_FIELDS = (
        "embeddings_dir",
        "posteriors_dir",
        "sad_rttm",
        "reference_rttm",
        "uem",
        "overlap_regions",
        "bandwidth_model",
        "bandwidth_embeddings_dir",
    )

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Path | None = None) -> "PipelineConfig":
        data = dict(data)
        sections = {
            "scoring": ScoringSection,
            "clustering": ClusteringSection,
            "vbx": VBxSection,
            "decode": DecodeSection,
            "metrics": MetricsSection,
        }
        kwargs = {}
        for name, section_cls in sections.items():
            if name in data:
                raw = data.pop(name) or {}
                if not isinstance(raw, dict):
                    raise ConfigError(f"config section {name!r} must be a mapping")
                kwargs[name] = _merge_section(section_cls, raw, name)
        known = {f.name for f in dataclass_fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**data, **kwargs)
        if base_dir is not None:
            config = config._resolve_paths(base_dir)
        return config

    def _resolve_paths(self, base_dir: Path) -> "PipelineConfig":
        updates = {}
        for name in self._PATH_FIELDS:
            value = getattr(self, name)
            if value is not None:
                updates[name] = str((base_dir / value).resolve()) if not Path(value).is_absolute() else value
        for section_name, path_keys in (
            ("scoring", ("cosine_pca_model", "plda_model")),
            ("vbx", ("lda_model", "whitening_stats", "plda_model_primary", "plda_model_secondary")),
        ):
            section = getattr(self, section_name)
            section_updates = {}
            for key in path_keys:
                value = getattr(section, key)
                if value is not None and not Path(value).is_absolute():
                    section_updates[key] = str((base_dir / value).resolve())
            if section_updates:
                updates[section_name] = _replace_frozen(section, section_updates)
        return _replace_frozen(self, updates) if updates else self

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        config = cls.from_mapping(data, base_dir=path.parent)
        config.validate_paths()
        return config

    def validate_paths(self) -> None:
        checks = [(name, getattr(self, name)) for name in self._PATH_FIELDS]
        checks += [
            ("scoring.cosine_pca_model", self.scoring.cosine_pca_model),
            ("scoring.plda_model", self.scoring.plda_model),
            ("vbx.lda_model", self.vbx.lda_model),
            ("vbx.whitening_stats", self.vbx.whitening_stats),
            ("vbx.plda_model_primary", self.vbx.plda_model_primary),
            ("vbx.plda_model_secondary", self.vbx.plda_model_secondary),
        ]
        for name, value in checks:
            if value is not None and not Path(value).exists():
                raise ConfigError(f"config path {name} does not exist: {value}")

    def canonical_dump(self) -> str:
        def clean(obj):
            if hasattr(obj, "__dataclass_fields__"):
                return {f.name: clean(getattr(obj, f.name)) for f in dataclass_fields(obj)}
            if isinstance(obj, tuple):
                return list(obj)
            return obj

        return yaml.safe_dump(clean(self), sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_dump().encode()).hexdigest()


def _replace_frozen(instance, updates: dict):
    values = {f.name: getattr(instance, f.name) for f in dataclass_fields(instance)}
    values.update(updates)
    return type(instance)(**values)


@dataclass(frozen=True)
class ManifestEntry:
    recording_id: str
    route: str
    status: str  # "ok" or "failed"
    message: str = ""
    elapsed: float = 0.0


@dataclass(frozen=True)
class RunManifest:
    version: str
    config_hash: str
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        ids = [e.recording_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("every recording appears exactly once in a manifest")

    def succeeded(self) -> list[str]:
        return [e.recording_id for e in self.entries if e.status == "ok"]

    def to_text(self) -> str:
        lines = [
            "# diarization run manifest",
            f"version: {__version__}",
            f"numpy: {np.__version__}",
            f"config_hash: {self.config_hash}",
            f"recordings: {len(self.entries)}",
        ]
        for e in self.entries:
            msg = f" message={e.message!r}" if e.message else ""
            lines.append(
                f"{e.recording_id} route={e.route} status={e.status} "
                f"elapsed={e.elapsed:.3f}s{msg}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class ModelSet:
    """Models referenced by a config, loaded once per corpus run."""

    plda_score: PLDAModel | None = None
    cosine_pca: PCAModel | None = None
    plda_vbx: PLDAModel | None = None
    whitening: WhiteningStats | None = None
    lda: LDAProjection | None = None
    bandwidth: MLPClassifier | None = None

    @classmethod
    def load(cls, config: PipelineConfig) -> "ModelSet":
        models = cls()
        if config.scoring.plda_model:
            models.plda_score = PLDAModel.load(config.scoring.plda_model)
        if config.scoring.cosine_pca_model:
            models.cosine_pca = PCAModel.load(config.scoring.cosine_pca_model)
        primary = secondary = None
        if config.vbx.plda_model_primary:
            primary = PLDAModel.load(config.vbx.plda_model_primary)
        if config.vbx.plda_model_secondary:
            secondary = PLDAModel.load(config.vbx.plda_model_secondary)
        if primary is not None and secondary is not None:
            models.plda_vbx = interpolate_plda(
                primary, secondary, config.vbx.plda_interpolation_alpha
            )
        else:
            models.plda_vbx = primary or secondary or models.plda_score
        if config.vbx.whitening_stats:
            models.whitening = WhiteningStats.load(config.vbx.whitening_stats)
        if config.vbx.lda_model:
            models.lda = LDAProjection.load(config.vbx.lda_model)
        if config.bandwidth_model:
            models.bandwidth = MLPClassifier.load(config.bandwidth_model)
        return models


def _kept_indices(seq: EmbeddingSequence, speech: ScoringRegions | None, gating: bool) -> np.ndarray:
    if speech is None or not gating:
        return np.arange(len(seq))
    centers = seq.centers()
    keep = np.zeros(len(seq), dtype=bool)
    for on, off in speech.intervals:
        keep |= (centers >= on) & (centers < off)
    return np.flatnonzero(keep)


def windows_to_annotation(
    recording_id: str,
    windows: np.ndarray,
    labels: np.ndarray,
    speech: ScoringRegions | None = None,
    speaker_names: tuple[str, ...] | None = None,
) -> Annotation:
    """Window labels to segments: boundaries at midpoints between window
    centers, the first/last stretching to the window edges."""
    n = len(windows)
    if n == 0:
        return Annotation(recording_id, ())
    centers = windows.mean(axis=1)
    bounds = np.empty(n + 1)
    bounds[0] = windows[0, 0]
    bounds[1:-1] = 0.5 * (centers[:-1] + centers[1:])
    bounds[-1] = windows[-1, 1]
    segments = []
    run_start = 0
    for i in range(1, n + 1):
        if i == n or labels[i] != labels[run_start]:
            lab = int(labels[run_start])
            name = speaker_names[lab] if speaker_names else f"spk{lab}"
            onset, offset = bounds[run_start], bounds[i]
            if offset > onset:
                segments.append(Segment(recording_id, onset, offset - onset, name))
            run_start = i
    ann = Annotation(recording_id, tuple(segments))
    if speech is not None and speech.intervals:
        ann = crop(ann, speech)
    return ann


def _cluster_windows(
    sub: EmbeddingSequence,
    sim: SimilarityMatrix,
    config: PipelineConfig,
) -> Partition:
    n = len(sub)
    min_size = config.clustering.min_cluster_windows
    target = estimate_num_speakers(sim, config.clustering.ahc_threshold, min_size)
    if config.clustering.method == "ahc":
        part = ahc_cluster(sim, num_clusters=min(target, n))
        return absorb_small_clusters(part, sim, min_size)
    raw = sim.scores
    if sim.kind == "plda" and config.scoring.standardize_plda_scores:
        raw = standardize_scores(raw)
        sim = SimilarityMatrix(sim.recording_id, raw, kind="plda")
    graph = build_knn_graph(
        sim,
        num_neighbors=min(config.clustering.num_neighbors, n - 1),
        scale=config.scoring.sigmoid_scale,
        offset=config.scoring.sigmoid_offset,
    )
    params = PICParams(
        damping=config.clustering.damping,
        num_neighbors=graph.num_neighbors,
        target_clusters=max(1, min(target, n)),
        affinity_floor=config.clustering.affinity_floor,
    )
    part = pic_cluster(graph, params)
    return absorb_small_clusters(part, sim, min_size)


def _score_recording(
    sub: EmbeddingSequence, config: PipelineConfig, models: ModelSet
) -> SimilarityMatrix:
    if config.scoring.kind == "cosine":
        pca = models.cosine_pca
        if pca is None:
            # corpus runs fit the pool PCA up front; standalone falls back
            # to this recording's own embeddings
            pca = fit_pca(sub.vectors.astype(float), config.scoring.cosine_pca_dim)
        return cosine_similarity(sub, pca)
    if models.plda_score is None:
        raise ConfigError("scoring.kind is plda but scoring.plda_model is not set")
    return score_plda_matrix(
        sub, models.plda_score, energy_fraction=config.scoring.plda_energy_fraction
    )


def run_wideband(
    seq: EmbeddingSequence,
    sad: Annotation | ScoringRegions | None,
    config: PipelineConfig,
    models: ModelSet | None = None,
    overlaps: OverlapRegions | None = None,
) -> Annotation:
    """Cluster-and-resegment route for one wideband recording."""
    if models is None:
        models = ModelSet.load(config)
    speech = sad if isinstance(sad, ScoringRegions) or sad is None else speech_timeline(sad)
    kept = _kept_indices(seq, speech, config.sad_gating)
    if kept.size == 0:
        return Annotation(seq.recording_id, ())
    sub = seq.subset(kept)
    if len(sub) == 1:
        # one usable window: a single speaker covering the speech regions
        ann = windows_to_annotation(seq.recording_id, sub.windows, np.zeros(1, dtype=int), speech)
        return merge_adjacent(ann, config.merge_gap)

    sim = _score_recording(sub, config, models)
    partition = _cluster_windows(sub, sim, config)

    posterior = None
    if config.vbx.enabled:
        if models.plda_vbx is None:
            raise ConfigError("vbx.enabled needs a PLDA model (vbx or scoring section)")
        vectors = sub.vectors.astype(float)
        plda = models.plda_vbx
        if models.whitening is not None:
            vectors = whiten_and_normalize(vectors, models.whitening)
        if models.lda is not None:
            vectors = models.lda.apply(vectors)
        working = sub.with_vectors(vectors)
        partition, posterior = vbx_resegment(
            working, plda, partition, config.vbx.to_vbx_config()
        )

    ann = windows_to_annotation(seq.recording_id, sub.windows, partition.labels, speech)
    if overlaps is not None and overlaps.intervals and posterior is not None:
        full = np.zeros((len(seq), posterior.matrix.shape[1]))
        full[kept] = posterior.matrix
        grid = PosteriorMatrix(
            seq.recording_id,
            full,
            frame_shift=seq.window_shift,
            subsample_factor=1,
            speakers=posterior.speakers,
            time_offset=(seq.window_size - seq.window_shift) / 2.0,
        )
        ann = assign_overlap(ann, grid, overlaps)
    return merge_adjacent(ann, config.merge_gap)


def run_narrowband(
    posteriors: PosteriorMatrix,
    sad: Annotation | ScoringRegions,
    config: PipelineConfig,
) -> Annotation:
    """Posterior-decoding route for one narrowband recording."""
    ann = decode_posteriors(
        posteriors,
        threshold=config.decode.threshold,
        sad=sad,
        median_window=config.decode.median_window,
    )
    return merge_adjacent(ann, config.merge_gap)


def _discover_recordings(config: PipelineConfig) -> list[str]:
    if config.recordings:
        return sorted(config.recordings)
    found = set()
    if config.embeddings_dir:
        found.update(p.stem for p in Path(config.embeddings_dir).glob("*.emb"))
    if config.posteriors_dir:
        found.update(p.stem for p in Path(config.posteriors_dir).glob("*.post"))
    if not found:
        raise ConfigError("no recordings found; set recordings or embeddings_dir")
    return sorted(found)


def _route_recording(rec: str, config: PipelineConfig, models: ModelSet) -> str:
    if config.route_override:
        return config.route_override
    if models.bandwidth is None:
        return "wideband"
    band_dir = config.bandwidth_embeddings_dir or config.embeddings_dir
    band_path = Path(band_dir) / f"{rec}.emb"
    if not band_path.is_file():
        raise ConfigError(f"no bandwidth embeddings for {rec}: {band_path}")
    seq = read_embeddings(band_path)
    decision = classify_recording(models.bandwidth, seq.vectors, rec)
    return "narrowband" if decision.file_label == "NB" else "wideband"


def _load_per_recording(path: str | None, parser, key=lambda item: item.recording_id):
    table = {}
    if path:
        for item in parser(Path(path).read_text()):
            table[key(item)] = item
    return table


def run_corpus(
    config: PipelineConfig,
    output_dir: str | Path,
    workers: int = 1,
    core_list: set[str] | None = None,
    domain_map: dict[str, str] | None = None,
) -> RunManifest:
    """Route, diarize and score every recording; write RTTMs and reports.

    Outputs under ``output_dir``: ``hyp/<recording>.rttm``, ``manifest.txt``
    and, when a reference is configured, ``report.txt``/``report.tsv``.
    Recording failures are isolated: the recording is marked failed in the
    manifest and the rest of the corpus proceeds.  Results do not depend on
    ``workers``.
    """
    out = Path(output_dir)
    (out / "hyp").mkdir(parents=True, exist_ok=True)
    models = ModelSet.load(config)
    recordings = _discover_recordings(config)

    sad_by_rec = _load_per_recording(config.sad_rttm, parse_rttm)
    ref_by_rec = _load_per_recording(config.reference_rttm, parse_rttm)
    uem_by_rec = _load_per_recording(config.uem, parse_uem)
    ovl_by_rec = _load_per_recording(config.overlap_regions, parse_overlap_regions)

    routes: dict[str, str] = {}
    failures: dict[str, str] = {}
    for rec in recordings:
        try:
            routes[rec] = _route_recording(rec, config, models)
        except Exception as exc:  # noqa: BLE001 - per-recording isolation
            failures[rec] = str(exc)
            routes[rec] = "wideband"

    if (
        config.scoring.kind == "cosine"
        and models.cosine_pca is None
        and config.embeddings_dir
    ):
        pool = []
        for rec in recordings:
            if routes[rec] != "wideband" or rec in failures:
                continue
            path = Path(config.embeddings_dir) / f"{rec}.emb"
            if not path.is_file():
                continue
            seq = read_embeddings(path)
            sad = sad_by_rec.get(rec)
            speech = speech_timeline(sad) if sad is not None else None
            kept = _kept_indices(seq, speech, config.sad_gating)
            if kept.size:
                pool.append(seq.vectors[kept].astype(float))
        if pool:
            models.cosine_pca = fit_pca(np.vstack(pool), config.scoring.cosine_pca_dim)

    def process(rec: str):
        start = time.perf_counter()
        if rec in failures:
            return rec, None, failures[rec], 0.0
        try:
            if routes[rec] == "narrowband":
                if not config.posteriors_dir:
                    raise ConfigError("narrowband route needs posteriors_dir")
                post = PosteriorMatrix.load(Path(config.posteriors_dir) / f"{rec}.post")
                sad = sad_by_rec.get(rec)
                if sad is None:
                    raise ConfigError(f"narrowband decoding needs SAD for {rec}")
                ann = run_narrowband(post, sad, config)
            else:
                if not config.embeddings_dir:
                    raise ConfigError("wideband route needs embeddings_dir")
                seq = read_embeddings(Path(config.embeddings_dir) / f"{rec}.emb")
                ann = run_wideband(
                    seq,
                    sad_by_rec.get(rec),
                    config,
                    models=models,
                    overlaps=ovl_by_rec.get(rec),
                )
            return rec, ann, "", time.perf_counter() - start
        except Exception as exc:  # noqa: BLE001 - per-recording isolation
            return rec, None, str(exc), time.perf_counter() - start

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            results = list(pool_exec.map(process, recordings))
    else:
        results = [process(rec) for rec in recordings]

    entries = []
    hypotheses: dict[str, Annotation] = {}
    for rec, ann, message, elapsed in sorted(results, key=lambda r: r[0]):
        status = "ok" if ann is not None else "failed"
        if ann is not None:
            hypotheses[rec] = ann
            (out / "hyp" / f"{rec}.rttm").write_text(write_rttm(ann))
        entries.append(ManifestEntry(rec, routes[rec], status, message, elapsed))

    manifest = RunManifest(__version__, config.config_hash(), tuple(entries))
    (out / "manifest.txt").write_text(manifest.to_text())

    if ref_by_rec:
        reports: list[DERReport] = []
        for rec in sorted(hypotheses):
            if rec not in ref_by_rec:
                warnings.warn(f"no reference for {rec}; skipping scoring", stacklevel=2)
                continue
            reports.append(
                der(
                    ref_by_rec[rec],
                    hypotheses[rec],
                    collar=config.metrics.collar,
                    regions=uem_by_rec.get(rec),
                    score_overlap=config.metrics.score_overlap,
                )
            )
        summary_rows = list(reports) + [aggregate(reports)]
        if core_list is not None:
            summary_rows.append(aggregate(reports, name="CORE", include=core_list))
        text = format_report(summary_rows)
        if domain_map:
            text += "\n" + _domain_table(reports, domain_map)
        (out / "report.txt").write_text(text)
        tsv_lines = ["\t".join(row) for row in report_rows(summary_rows)]
        (out / "report.tsv").write_text("\n".join(tsv_lines) + "\n")
    return manifest


def synthesize_corpus(
    output_dir: str | Path,
    num_recordings: int = 4,
    min_speakers: int = 3,
    max_speakers: int = 5,
    duration: float = 120.0,
    overlap_fraction: float = 0.0,
    embedding_dim: int = 16,
    separation: float = 10.0,
    seed: int = 0,
) -> Path:
    """Write a ready-to-run synthetic corpus and return its config path.

    Produces ``embeddings/<rec>.emb``, ``ref.rttm``, ``sad.rttm``, overlap
    regions when requested, the generator-implied PLDA models, and a
    ``config.yaml`` wired to all of them.
    """
    from .embeddings import SyntheticSpec, generate_synthetic, write_embeddings
    from .reseg import write_overlap_regions
    from .scoring import ground_truth_plda

    if not 1 <= min_speakers <= max_speakers:
        raise ValueError("need 1 <= min_speakers <= max_speakers")
    out = Path(output_dir)
    (out / "embeddings").mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)

    rng = np.random.default_rng(seed)
    counts = [min_speakers + i % (max_speakers - min_speakers + 1) for i in range(num_recordings)]
    ref_parts, sad_parts, overlap_parts = [], [], []
    for i, k in enumerate(counts):
        spec = SyntheticSpec.well_separated(
            k,
            embedding_dim,
            separation=separation,
            duration=duration,
            overlap_fraction=overlap_fraction,
            seed=int(rng.integers(2**31)),
            recording_id=f"rec{i:03d}",
        )
        seq, reference, overlap = generate_synthetic(spec)
        write_embeddings(out / "embeddings" / f"{seq.recording_id}.emb", seq)
        ref_parts.append(write_rttm(reference))
        speech = speech_timeline(reference)
        sad_parts.append(
            write_rttm(
                Annotation(
                    seq.recording_id,
                    tuple(
                        Segment(seq.recording_id, on, off - on, "speech")
                        for on, off in speech.intervals
                    ),
                )
            )
        )
        if overlap is not None and overlap.segments:
            overlap_parts.append(write_overlap_regions(OverlapRegions.from_annotation(overlap)))
    (out / "ref.rttm").write_text("".join(ref_parts))
    (out / "sad.rttm").write_text("".join(sad_parts))
    if overlap_parts:
        (out / "overlap.ovl").write_text("".join(overlap_parts))

    layout = SyntheticSpec.well_separated(max_speakers, embedding_dim, separation=separation)
    plda = ground_truth_plda(layout)
    plda.save(out / "models" / "plda_primary.emb")
    PLDAModel(
        mean=plda.mean, between=plda.between * 0.8, within=plda.within * 1.5
    ).save(out / "models" / "plda_secondary.emb")

    config = {
        "embeddings_dir": "embeddings",
        "sad_rttm": "sad.rttm",
        "reference_rttm": "ref.rttm",
        "route_override": "wideband",
        "window_size": float(layout.window_size),
        "window_shift": float(layout.window_shift),
        "sad_gating": True,
        "merge_gap": 0.0,
        "seed": seed,
        "scoring": {
            "kind": "plda",
            "plda_model": "models/plda_primary.emb",
            # keep nearly all of the eigenvalue mass: the synthetic corpora
            # put each extra speaker in a fresh direction, so an aggressive
            # cut here would fold distinct speakers onto each other
            "plda_energy_fraction": 0.95,
            "sigmoid_scale": 1.0,
            "sigmoid_offset": 0.0,
            "standardize_plda_scores": True,
        },
        "clustering": {
            "method": "pic",
            "num_neighbors": 30,
            "damping": 0.01,
            "ahc_threshold": 0.0,
            # 5 windows at a 0.25 s shift is about a second of speech; any
            # cluster shorter than that is an outlier, not a speaker
            "min_cluster_windows": 5,
            "affinity_floor": 1e-12,
        },
        "vbx": {
            "enabled": True,
            "plda_model_primary": "models/plda_primary.emb",
            "plda_model_secondary": "models/plda_secondary.emb",
            "plda_interpolation_alpha": 0.5,
            "loop_probability": 0.8,
            "max_iterations": 40,
            "convergence_tolerance": 1e-6,
        },
        "decode": {"threshold": 0.5, "median_window": 11},
        "metrics": {"collar": 0.0, "score_overlap": True},
    }
    if overlap_parts:
        config["overlap_regions"] = "overlap.ovl"
    config_path = out / "config.yaml"
    config_path.write_text(yaml.safe_dump(config, sort_keys=True))
    return config_path


def _domain_table(reports: list[DERReport], domain_map: dict[str, str]) -> str:
    groups: dict[str, list[DERReport]] = {}
    for rep in reports:
        domain = domain_map.get(rep.recording_id, "unknown")
        groups.setdefault(domain, []).append(rep)
    lines = ["domain\trecordings\tmean_der\tmean_jer"]
    for domain in sorted(groups):
        ders = [r.der for r in groups[domain] if r.der is not None]
        jers = [r.jer for r in groups[domain] if r.jer is not None]
        der_cell = f"{np.mean(ders):.4f}" if ders else "NA"
        jer_cell = f"{np.mean(jers):.4f}" if jers else "NA"
        lines.append(f"{domain}\t{len(groups[domain])}\t{der_cell}\t{jer_cell}")
    return "\n".join(lines) + "\n"
