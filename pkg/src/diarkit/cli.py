"""Command-line entry points for the diarization pipeline.

Subcommands:
  route    print the bandwidth route chosen for each recording
  diarize  run the full pipeline over a corpus and write outputs
  score    score existing hypothesis RTTMs against the reference
  synth    generate a ready-to-run synthetic corpus
  report   rewrite report files from existing outputs

``diarize`` exits 0 when at least one recording succeeded and the config was
valid; config errors exit 1.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .annotations import parse_rttm, parse_uem, read_rttm_file
from .metrics import aggregate, der, format_report, report_rows
from .pipeline import (
    ConfigError,
    ModelSet,
    PipelineConfig,
    _discover_recordings,
    _domain_table,
    _route_recording,
    run_corpus,
    synthesize_corpus,
)


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", required=config_required, metavar="PATH", help="pipeline config YAML")
    parser.add_argument("--output", metavar="DIR", help="output directory")
    parser.add_argument("--workers", type=int, default=1, metavar="N", help="parallel recordings")
    parser.add_argument("--seed", type=int, default=None, metavar="N", help="override config seed")
    parser.add_argument(
        "--subset",
        choices=("full", "core"),
        default="full",
        help="process the full corpus or only the core list",
    )
    parser.add_argument("--core-list", metavar="PATH", help="file with one core recording id per line")
    parser.add_argument("--domain-map", metavar="PATH", help="file with 'recording domain' lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diarkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_route = sub.add_parser("route", help="print bandwidth routing decisions")
    _add_common(p_route)

    p_diar = sub.add_parser("diarize", help="run the pipeline over a corpus")
    _add_common(p_diar)

    p_score = sub.add_parser("score", help="score hypothesis RTTMs in an output directory")
    _add_common(p_score)

    p_synth = sub.add_parser("synth", help="write a synthetic corpus")
    _add_common(p_synth, config_required=False)
    p_synth.add_argument("--recordings", type=int, default=4, metavar="N")
    p_synth.add_argument("--duration", type=float, default=120.0, metavar="SECONDS")
    p_synth.add_argument("--overlap", type=float, default=0.0, metavar="FRACTION")

    p_report = sub.add_parser("report", help="rewrite report files from existing outputs")
    _add_common(p_report)
    return parser


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _read_core_list(args) -> set[str] | None:
    if args.core_list is None:
        if args.subset == "core":
            raise ConfigError("--subset core requires --core-list")
        return None
    path = Path(args.core_list)
    if not path.is_file():
        raise ConfigError(f"core list not found: {path}")
    ids = {
        line.strip()
        for line in path.read_text().splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    }
    if not ids:
        raise ConfigError(f"core list is empty: {path}")
    return ids


def _read_domain_map(args) -> dict[str, str] | None:
    if args.domain_map is None:
        return None
    path = Path(args.domain_map)
    if not path.is_file():
        raise ConfigError(f"domain map not found: {path}")
    table = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'recording domain'")
        table[fields[0]] = fields[1]
    return table


def _apply_subset(config: PipelineConfig, args, core: set[str] | None) -> PipelineConfig:
    if args.subset != "core":
        return config
    recordings = [rec for rec in _discover_recordings(config) if rec in core]
    if not recordings:
        raise ConfigError("core list matches no recording in the corpus")
    return dataclasses.replace(config, recordings=tuple(recordings))


def _require_output(args) -> Path:
    if not args.output:
        raise ConfigError("--output is required for this command")
    return Path(args.output)


def _cmd_route(args) -> int:
    config = _load_config(args)
    core = _read_core_list(args)
    config = _apply_subset(config, args, core)
    models = ModelSet.load(config)
    lines = []
    for rec in _discover_recordings(config):
        try:
            route = _route_recording(rec, config, models)
        except Exception as exc:  # noqa: BLE001 - report per recording
            route = f"error ({exc})"
        lines.append(f"{rec}\t{route}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "routes.txt").write_text(text)
    return 0


def _cmd_diarize(args) -> int:
    config = _load_config(args)
    core = _read_core_list(args)
    domain_map = _read_domain_map(args)
    config = _apply_subset(config, args, core)
    out = _require_output(args)
    manifest = run_corpus(
        config,
        out,
        workers=max(1, args.workers),
        core_list=core if args.subset == "full" else None,
        domain_map=domain_map,
    )
    failed = [e for e in manifest.entries if e.status != "ok"]
    for entry in failed:
        print(f"failed: {entry.recording_id}: {entry.message}", file=sys.stderr)
    print(f"{len(manifest.succeeded())}/{len(manifest.entries)} recordings diarized -> {out}")
    return 0 if manifest.succeeded() else 1


def _score_existing(config: PipelineConfig, out: Path, core, domain_map):
    if not config.reference_rttm:
        raise ConfigError("scoring requires reference_rttm in the config")
    ref_by_rec = {a.recording_id: a for a in parse_rttm(Path(config.reference_rttm).read_text())}
    uem_by_rec = {}
    if config.uem:
        uem_by_rec = {r.recording_id: r for r in parse_uem(Path(config.uem).read_text())}
    hyp_dir = out / "hyp"
    if not hyp_dir.is_dir():
        raise ConfigError(f"no hypothesis directory at {hyp_dir}; run diarize first")
    reports = []
    for path in sorted(hyp_dir.glob("*.rttm")):
        rec = path.stem
        if rec not in ref_by_rec:
            continue
        anns = read_rttm_file(path)
        if not anns:
            continue
        reports.append(
            der(
                ref_by_rec[rec],
                anns[0],
                collar=config.metrics.collar,
                regions=uem_by_rec.get(rec),
                score_overlap=config.metrics.score_overlap,
            )
        )
    if not reports:
        raise ConfigError("no scoreable recordings (no hyp/ref overlap)")
    rows = list(reports) + [aggregate(reports)]
    if core is not None:
        rows.append(aggregate(reports, name="CORE", include=core))
    text = format_report(rows)
    if domain_map:
        text += "\n" + _domain_table(reports, domain_map)
    return rows, text


def _cmd_score(args) -> int:
    config = _load_config(args)
    core = _read_core_list(args)
    domain_map = _read_domain_map(args)
    out = _require_output(args)
    _, text = _score_existing(config, out, core, domain_map)
    sys.stdout.write(text)
    return 0


def _cmd_report(args) -> int:
    config = _load_config(args)
    core = _read_core_list(args)
    domain_map = _read_domain_map(args)
    out = _require_output(args)
    rows, text = _score_existing(config, out, core, domain_map)
    (out / "report.txt").write_text(text)
    tsv = "\n".join("\t".join(row) for row in report_rows(rows)) + "\n"
    (out / "report.tsv").write_text(tsv)
    print(f"wrote {out / 'report.txt'} and {out / 'report.tsv'}")
    return 0


def _cmd_synth(args) -> int:
    out = _require_output(args)
    config_path = synthesize_corpus(
        out,
        num_recordings=args.recordings,
        duration=args.duration,
        overlap_fraction=args.overlap,
        seed=args.seed if args.seed is not None else 0,
    )
    print(f"synthetic corpus at {out} (config: {config_path})")
    return 0


_COMMANDS = {
    "route": _cmd_route,
    "diarize": _cmd_diarize,
    "score": _cmd_score,
    "synth": _cmd_synth,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
