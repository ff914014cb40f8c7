"""Command-line front end: ingest, benchmark, score, evaluate, report.

Exit codes: 0 success, 1 operational error, 2 usage error, 3 validation
failure. Advisories are data, not errors; a risky actor still exits 0
unless --fail-on asks otherwise. All stdout is valid in the selected
format, with progress and file listings going to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from .domain import (
    EngineConfig,
    SIGNAL_IDS,
    config_from_dict,
    merge_config,
    snapshot_to_dict,
)
from .errors import ArmsError, EmptyPopulation, ParseError, ValidationFailed
from .ingestion import ForgeSource, fetch_actor_snapshot, load_snapshot, write_snapshot
from .jsonio import canonical_dumps, format_utc, parse_utc
from .reputation import (
    Advisory,
    EcosystemBenchmark,
    ReputationReport,
    benchmark_from_dict,
    benchmark_to_dict,
    extend_graph_for_actor,
    report_to_dict,
    score_actor,
    score_population,
)
from .signals import SIGNAL_LABELS
from .store import Store, atomic_write_bytes
from .weighting import build_graph, export_edge_list

TOKEN_ENV_VAR = "ARMS_FORGE_TOKEN"
DEFAULT_STORE = "arms_store"
DEFAULT_BASE_URL = "https://api.github.com"
DEFAULT_COUNTS = "genuine=100,inexperienced=100,spoofer=100"

WEIGHT_LABELS = {
    "W1": "ecosystem usage share",
    "W2": "tenure and activity depth",
    "W3": "cross-actor centrality",
}

_ADVISORY_RANK = {
    Advisory.ACCEPTABLE: 0,
    Advisory.INSUFFICIENT_DATA: 1,
    Advisory.REVIEW_REQUIRED: 2,
    Advisory.HIGH_RISK: 3,
}


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _timestamp(text: str) -> datetime:
    try:
        return parse_utc(text)
    except ParseError:
        pass
    try:
        day = date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"not a UTC timestamp or date: {text!r}"
        ) from None
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc)


def _counts(text: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, number = part.partition("=")
        name = name.strip()
        number = number.strip()
        if not sep or not name or not number.isdigit():
            raise argparse.ArgumentTypeError(
                f"bad counts entry {part!r}; expected name=count"
            )
        counts[name] = int(number)
    if not counts:
        raise argparse.ArgumentTypeError("counts must name at least one archetype")
    return counts


def _load_json_file(path: Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ArmsError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return payload


def _config_from_args(args: argparse.Namespace) -> EngineConfig:
    doc: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        doc = merge_config(doc, _load_json_file(config_path))
    overlay_path = getattr(args, "overlay", None)
    if overlay_path:
        overlay = _load_json_file(overlay_path)
        weights = overlay.get("signal_weights")
        if not isinstance(weights, dict) or not weights:
            raise ParseError(f"{overlay_path}: overlay has no signal_weights")
        doc = merge_config(doc, {"signal_weights": weights})
    return config_from_dict(doc)


def _fmt(value: Optional[float], places: int = 6) -> str:
    if value is None:
        return "no data"
    return f"{value:.{places}f}"


# ---------------------------------------------------------------------------
# score rendering
# ---------------------------------------------------------------------------


def _report_rows(report: ReputationReport) -> list[tuple[str, str, str, str]]:
    rows = []
    by_id = {s.signal_id: s for s in report.signals}
    for signal_id in SIGNAL_IDS:
        score = by_id[signal_id]
        detail = " ".join(
            f"{sub}={_fmt(val, 3)}" if val is not None else f"{sub}=-"
            for sub, val in sorted(score.sub_scores.items())
        )
        rows.append(
            (signal_id, SIGNAL_LABELS[signal_id], _fmt(score.value), detail)
        )
    weightage = report.weightage
    breakdown = weightage.w2_breakdown
    rows.append(("W1", WEIGHT_LABELS["W1"], _fmt(weightage.w1_usage), ""))
    rows.append(
        (
            "W2",
            WEIGHT_LABELS["W2"],
            _fmt(weightage.w2_tenure),
            f"contrib={_fmt(breakdown.contrib_tenure, 3)} "
            f"account={_fmt(breakdown.account_tenure, 3)} "
            f"strength={_fmt(breakdown.strength, 3)}",
        )
    )
    rows.append(("W3", WEIGHT_LABELS["W3"], _fmt(weightage.w3_centrality), ""))
    return rows


def _score_text(report: ReputationReport) -> str:
    lines = [
        f"actor             {report.actor_id}",
        f"advisory          {report.advisory.value}",
        f"final reputation  {_fmt(report.final_reputation)}",
        f"base composite    {_fmt(report.base_composite)}",
        f"impact factor     {_fmt(report.weightage.impact_factor)}",
        f"percentile        {_fmt(report.percentile)}",
        f"z score           {_fmt(report.z_score)}",
        "flags             "
        + (", ".join(f.value for f in report.flags) if report.flags else "(none)"),
        "",
        f"{'id':<4}{'signal':<42}{'value':<10}detail",
    ]
    for row_id, label, value, detail in _report_rows(report):
        lines.append(f"{row_id:<4}{label:<42}{value:<10}{detail}".rstrip())
    evidence_lines = []
    for score in report.signals:
        for record_id, contribution in score.evidence:
            evidence_lines.append(
                f"  {score.signal_id}  {record_id}  {contribution:.6f}"
            )
    if evidence_lines:
        lines.append("")
        lines.append("evidence (record, contribution):")
        lines.extend(evidence_lines)
    lines.append("")
    return "\n".join(lines)


def _score_markdown(report: ReputationReport) -> str:
    lines = [
        f"# Reputation report: {report.actor_id}",
        "",
        f"- advisory: **{report.advisory.value}**",
        f"- final reputation: {_fmt(report.final_reputation)}",
        f"- base composite: {_fmt(report.base_composite)}",
        f"- impact factor: {_fmt(report.weightage.impact_factor)}",
        f"- percentile: {_fmt(report.percentile)}",
        f"- z score: {_fmt(report.z_score)}",
        "- flags: "
        + (", ".join(f"`{f.value}`" for f in report.flags) if report.flags else "none"),
        "",
        "| id | signal | value | detail |",
        "| --- | --- | --- | --- |",
    ]
    for row_id, label, value, detail in _report_rows(report):
        lines.append(f"| {row_id} | {label} | {value} | {detail} |")
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    actors: list[str] = list(args.actor)
    if args.actor_file:
        try:
            text = Path(args.actor_file).read_text(encoding="utf-8")
        except OSError as exc:
            _error(f"cannot read actor file: {exc}")
            return 1
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                actors.append(line)
    if not actors:
        _error("no actors given; use --actor or --actor-file")
        return 2

    store = Store(args.store)
    cache_dir = args.cache_dir if args.cache_dir else Path(args.store) / "cache"
    source = ForgeSource(
        base_url=args.base_url,
        auth_token=os.environ.get(TOKEN_ENV_VAR),
        requests_per_hour_budget=args.budget,
        cache_dir=Path(cache_dir),
    )

    failures = 0
    for login in actors:
        try:
            snapshot, fetch = fetch_actor_snapshot(
                source, login, args.as_of, offline=args.offline
            )
        except ArmsError as exc:
            failures += 1
            _error(f"{login}: {exc}")
            if args.strict:
                break
            continue
        if args.out:
            path = write_snapshot(snapshot, Path(args.out) / f"{login}.json")
        else:
            path = store.put(
                "snapshots", login, snapshot_to_dict(snapshot), force=True
            )
        summary = (
            f"{login}: {len(snapshot.owned_projects)} projects, "
            f"{len(snapshot.contributions)} events, "
            f"{fetch.requests_made} requests, {fetch.cache_hits} cache hits"
            f" -> {path}"
        )
        if fetch.truncated_collections:
            summary += " (truncated: " + ", ".join(fetch.truncated_collections) + ")"
        print(summary)
    return 1 if failures else 0


def cmd_validate(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot, strict=args.strict)
    print(
        f"OK: {snapshot.profile.actor_id} "
        f"({len(snapshot.owned_projects)} projects, "
        f"{len(snapshot.contributions)} events)"
    )
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    snapshot_dir = Path(args.snapshots)
    files = sorted(snapshot_dir.glob("*.json"))
    if not files:
        _error(f"empty population: no snapshot files in {snapshot_dir}")
        return 1
    snapshots = []
    for path in files:
        try:
            snapshots.append(load_snapshot(path))
        except ValidationFailed as exc:
            _error(f"invalid snapshot {path}:")
            for violation in exc.violations:
                _note(f"  {violation.code}: {violation.message}")
            return 3

    cfg = _config_from_args(args)
    benchmark, _reports = score_population(snapshots, cfg)
    store = Store(args.store)
    path = store.put("benchmarks", args.out, benchmark_to_dict(benchmark), force=True)

    as_of = max(s.profile.evaluated_as_of for s in snapshots)
    graph = build_graph(snapshots, as_of)
    edges_path = path.with_suffix(".edges.tsv")
    atomic_write_bytes(edges_path, export_edge_list(graph).encode("utf-8"))

    print(f"benchmark {args.out}: population {benchmark.population_size}")
    print(
        f"composite mean {benchmark.composite_stats.mean:.6f}, "
        f"median {benchmark.composite_stats.median:.6f}, "
        f"std {benchmark.composite_stats.std:.6f}"
    )
    print(f"built at {format_utc(benchmark.built_at)}")
    print(f"config fingerprint {benchmark.config_fingerprint}")
    _note(f"wrote {path}")
    _note(f"wrote {edges_path}")
    return 0


def _load_benchmark(store: Store, benchmark_id: str) -> EcosystemBenchmark:
    payload = store.get("benchmarks", benchmark_id)
    return benchmark_from_dict(payload)


def cmd_score(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    store = Store(args.store)
    benchmark = _load_benchmark(store, args.benchmark)
    cfg = _config_from_args(args)
    graph = extend_graph_for_actor(snapshot, benchmark)
    report = score_actor(snapshot, graph, benchmark, cfg)
    stored = store.put("reports", report.actor_id, report_to_dict(report), force=True)
    _note(f"wrote {stored}")

    if args.format == "json":
        print(canonical_dumps(report_to_dict(report)), end="")
    elif args.format == "markdown":
        print(_score_markdown(report))
    else:
        print(_score_text(report))

    if args.fail_on is not None:
        threshold = _ADVISORY_RANK[Advisory(args.fail_on)]
        if _ADVISORY_RANK[report.advisory] >= threshold:
            _error(f"advisory {report.advisory.value} at or above {args.fail_on}")
            return 1
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    # Import lazily: numpy is only needed on the evaluation path.
    from .evaluation import (
        default_archetypes,
        generate_population,
        overlay_to_dict,
        run_effectiveness_study,
        study_to_dict,
    )
    from .figures import study_markdown

    active = {name: count for name, count in args.counts.items() if count > 0}
    if len(active) < 2:
        _error("need at least two archetypes with nonzero counts")
        return 1

    cfg = _config_from_args(args)
    population = generate_population(default_archetypes(), args.counts, args.seed)
    study = run_effectiveness_study(
        population, cfg, with_interactions=args.interactions, l2=args.l2
    )

    store = Store(args.store)
    study_path = store.put("reports", args.out, study_to_dict(study), force=True)
    overlay_path = store.put("overlays", args.out, overlay_to_dict(study), force=True)
    summary_path = study_path.with_suffix(".md")
    atomic_write_bytes(summary_path, study_markdown(study).encode("utf-8"))

    print(f"study {args.out}: {sum(args.counts.values())} actors, seed {args.seed}")
    print(f"incident rate {study.incident_rate:.4f}")
    print(
        f"AUC model train {study.auc_model_train:.4f}, "
        f"holdout {study.auc_model_holdout:.4f}"
    )
    print(
        f"AUC composite holdout {study.auc_composite_holdout:.4f}, "
        f"full {study.auc_composite_full:.4f}"
    )
    print(f"converged {study.converged} after {study.iterations} iterations")
    _note(f"wrote {study_path}")
    _note(f"wrote {overlay_path}")
    _note(f"wrote {summary_path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .figures import (
        flag_counts,
        render_benchmark_figures,
        render_benchmark_tables,
        ranked_rows,
    )

    store = Store(args.store)
    benchmark = _load_benchmark(store, args.benchmark)

    rows = ranked_rows(benchmark)
    if args.top is not None:
        rows = rows[: max(0, args.top)]

    if args.format == "json":
        counts = flag_counts(benchmark)
        doc = {
            "population_size": benchmark.population_size,
            "built_at": format_utc(benchmark.built_at),
            "config_fingerprint": benchmark.config_fingerprint,
            "composite_stats": {
                "mean": benchmark.composite_stats.mean,
                "median": benchmark.composite_stats.median,
                "std": benchmark.composite_stats.std,
            },
            "flag_frequencies": {f.value: counts[f] for f in sorted(counts, key=lambda f: f.value)},
            "rows": [
                {
                    "actor_id": row.actor_id,
                    "final_reputation": row.final_reputation,
                    "base_composite": row.base_composite,
                    "percentile": row.percentile,
                    "z_score": row.z_score,
                    "advisory": row.advisory.value,
                    "flags": [f.value for f in row.flags],
                }
                for row in rows
            ],
        }
        print(canonical_dumps(doc), end="")
    elif args.format == "markdown":
        lines = [
            f"# Ecosystem benchmark ({benchmark.population_size} actors)",
            "",
            f"- composite median: {benchmark.composite_stats.median:.6f}",
            f"- composite mean: {benchmark.composite_stats.mean:.6f}",
            f"- built at: {format_utc(benchmark.built_at)}",
            "",
            "| actor | final | percentile | advisory | flags |",
            "| --- | --- | --- | --- | --- |",
        ]
        for row in rows:
            flags = ", ".join(f.value for f in row.flags)
            lines.append(
                f"| {row.actor_id} | {_fmt(row.final_reputation)} "
                f"| {_fmt(row.percentile)} | {row.advisory.value} | {flags} |"
            )
        lines.append("")
        print("\n".join(lines))
    else:
        header = [
            "actor_id",
            "final_reputation",
            "base_composite",
            "percentile",
            "z_score",
            "advisory",
            "flags",
        ]
        out_lines = ["\t".join(header)]
        for row in rows:
            out_lines.append(
                "\t".join(
                    [
                        row.actor_id,
                        _fmt(row.final_reputation) if row.final_reputation is not None else "",
                        _fmt(row.base_composite) if row.base_composite is not None else "",
                        _fmt(row.percentile) if row.percentile is not None else "",
                        _fmt(row.z_score) if row.z_score is not None else "",
                        row.advisory.value,
                        ",".join(f.value for f in row.flags),
                    ]
                )
            )
        print("\n".join(out_lines))

    if args.out_dir:
        written = render_benchmark_tables(benchmark, args.out_dir, top=args.top)
        written += render_benchmark_figures(benchmark, args.out_dir)
        for path in written:
            _note(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_store(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--store",
        default=DEFAULT_STORE,
        help=f"artifact store directory (default: {DEFAULT_STORE})",
    )


def _add_config(parser: argparse.ArgumentParser, overlay: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="engine config JSON file")
    if overlay:
        parser.add_argument(
            "--overlay",
            type=Path,
            help="fitted signal-weight overlay JSON (from evaluate)",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arms",
        description="Actor security-reputation scoring over forge interaction history.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("ingest", help="fetch actor snapshots from the forge API")
    p.add_argument("--actor", action="append", default=[], metavar="LOGIN",
                   help="actor login; repeatable")
    p.add_argument("--actor-file", type=Path, help="file with one login per line")
    p.add_argument("--as-of", type=_timestamp, required=True,
                   help="history cutoff (ISO-8601 UTC or date)")
    p.add_argument("--out", type=Path,
                   help="write snapshot files here instead of the store")
    p.add_argument("--offline", action="store_true",
                   help="serve everything from the disk cache; no network")
    p.add_argument("--strict", action="store_true",
                   help="stop at the first failing actor")
    p.add_argument("--base-url", default=DEFAULT_BASE_URL)
    p.add_argument("--cache-dir", type=Path,
                   help="HTTP cache directory (default: <store>/cache)")
    p.add_argument("--budget", type=float, default=600.0,
                   help="request budget per hour")
    _add_store(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("validate", help="parse and validate a snapshot file")
    p.add_argument("snapshot", type=Path)
    p.add_argument("--strict", action="store_true",
                   help="reject unknown keys instead of warning")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("benchmark", help="score a population and build a benchmark")
    p.add_argument("--snapshots", type=Path, required=True,
                   help="directory of snapshot JSON files")
    p.add_argument("--out", required=True, metavar="ID", help="benchmark artifact id")
    _add_config(p)
    _add_store(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("score", help="score one actor against a benchmark")
    p.add_argument("--snapshot", type=Path, required=True)
    p.add_argument("--benchmark", required=True, metavar="ID")
    p.add_argument("--format", choices=("text", "json", "markdown"), default="text")
    p.add_argument("--fail-on",
                   choices=tuple(a.value for a in Advisory if a is not Advisory.ACCEPTABLE),
                   help="exit 1 when the advisory is at or above this level")
    _add_config(p)
    _add_store(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="run the synthetic effectiveness study")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--counts", type=_counts, default=DEFAULT_COUNTS,
                   metavar="SPEC", help="per-archetype counts, e.g. genuine=100,spoofer=50")
    p.add_argument("--interactions", action="store_true",
                   help="include pairwise interaction terms in the fit")
    p.add_argument("--l2", type=float, default=0.01, help="l2 penalty")
    p.add_argument("--out", required=True, metavar="ID", help="study artifact id")
    _add_config(p, overlay=False)
    _add_store(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="summarize a stored benchmark")
    p.add_argument("--benchmark", required=True, metavar="ID")
    p.add_argument("--top", type=int, help="limit the ranking to the top K actors")
    p.add_argument("--format", choices=("tsv", "json", "markdown"), default="tsv")
    p.add_argument("--out-dir", type=Path,
                   help="also write tables and charts into this directory")
    _add_store(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ValidationFailed as exc:
        _error("validation failed:")
        for violation in exc.violations:
            _note(f"  {violation.code}: {violation.message}")
        return 3
    except EmptyPopulation as exc:
        _error(str(exc))
        return 1
    except ArmsError as exc:
        _error(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
