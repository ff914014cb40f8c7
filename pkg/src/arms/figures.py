"""Render benchmark and study artifacts to files.

Tables are tab-separated so they drop straight into spreadsheets and shell
pipelines; charts are PNG renderings of the same aggregates. Everything is
derived from a benchmark or study object, so regenerating the files from
the same artifact produces the same bytes (charts aside, where matplotlib
owns the encoder).
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .domain import SIGNAL_IDS
from .errors import IoError
from .evaluation import StudyReport
from .reputation import ActorRow, EcosystemBenchmark, Flag
from .signals import SIGNAL_LABELS


def _fmt(value: Optional[float], places: int = 6) -> str:
    if value is None:
        return ""
    return f"{value:.{places}f}"


def _open_writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        handle = path.open("w", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot write table {path}: {exc}") from exc
    return handle


def ranked_rows(benchmark: EcosystemBenchmark) -> list[ActorRow]:
    # Highest final reputation first; actors with no score sink to the end.
    return sorted(
        benchmark.actor_rows,
        key=lambda r: (r.final_reputation is None, -(r.final_reputation or 0.0), r.actor_id),
    )


def write_percentile_table(
    benchmark: EcosystemBenchmark, path: Path, top: Optional[int] = None
) -> Path:
    path = Path(path)
    rows = ranked_rows(benchmark)
    if top is not None:
        rows = rows[: max(0, top)]
    with _open_writer(path) as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(
            [
                "actor_id",
                "final_reputation",
                "base_composite",
                "percentile",
                "z_score",
                "advisory",
                "flags",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.actor_id,
                    _fmt(row.final_reputation),
                    _fmt(row.base_composite),
                    _fmt(row.percentile),
                    _fmt(row.z_score),
                    row.advisory.value,
                    ",".join(flag.value for flag in row.flags),
                ]
            )
    return path


def write_signal_stats_table(benchmark: EcosystemBenchmark, path: Path) -> Path:
    path = Path(path)
    with _open_writer(path) as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(["signal_id", "label", "mean", "median", "std", "n_with_data"])
        for signal_id in SIGNAL_IDS:
            stats = benchmark.per_signal_stats.get(signal_id)
            if stats is None:
                writer.writerow([signal_id, SIGNAL_LABELS[signal_id], "", "", "", 0])
            else:
                writer.writerow(
                    [
                        signal_id,
                        SIGNAL_LABELS[signal_id],
                        _fmt(stats.mean),
                        _fmt(stats.median),
                        _fmt(stats.std),
                        stats.n_with_data,
                    ]
                )
    return path


def flag_counts(benchmark: EcosystemBenchmark) -> dict[Flag, int]:
    counts = {flag: 0 for flag in Flag}
    for row in benchmark.actor_rows:
        for flag in row.flags:
            counts[flag] += 1
    return counts


def write_flag_table(benchmark: EcosystemBenchmark, path: Path) -> Path:
    path = Path(path)
    counts = flag_counts(benchmark)
    n = max(1, benchmark.population_size)
    with _open_writer(path) as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(["flag", "count", "fraction"])
        for flag in Flag:
            writer.writerow([flag.value, counts[flag], _fmt(counts[flag] / n)])
    return path


def render_benchmark_tables(
    benchmark: EcosystemBenchmark, out_dir: Path, top: Optional[int] = None
) -> list[Path]:
    out_dir = Path(out_dir)
    return [
        write_percentile_table(benchmark, out_dir / "percentiles.tsv", top=top),
        write_signal_stats_table(benchmark, out_dir / "signal_stats.tsv"),
        write_flag_table(benchmark, out_dir / "flag_frequencies.tsv"),
    ]


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(path, dpi=120, bbox_inches="tight")
    except OSError as exc:
        raise IoError(f"cannot write figure {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def render_reputation_histogram(benchmark: EcosystemBenchmark, path: Path) -> Path:
    finals = [
        row.final_reputation
        for row in benchmark.actor_rows
        if row.final_reputation is not None
    ]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if finals:
        ax.hist(finals, bins=min(30, max(5, len(finals) // 4)), color="#4878a8", edgecolor="white")
    ax.axvline(
        benchmark.composite_stats.median, color="#b0413e", linestyle="--", label="median"
    )
    ax.set_xlabel("final reputation")
    ax.set_ylabel("actors")
    ax.set_title(f"Reputation distribution (n={benchmark.population_size})")
    ax.legend(loc="upper left")
    return _save(fig, Path(path))


def render_signal_means(benchmark: EcosystemBenchmark, path: Path) -> Path:
    means = []
    labels = []
    for signal_id in SIGNAL_IDS:
        stats = benchmark.per_signal_stats.get(signal_id)
        labels.append(signal_id)
        means.append(stats.mean if stats is not None else 0.0)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar(labels, means, color="#4878a8")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("population mean")
    ax.set_title("Signal means across the population")
    return _save(fig, Path(path))


def render_flag_frequencies(benchmark: EcosystemBenchmark, path: Path) -> Path:
    counts = flag_counts(benchmark)
    labels = [flag.value for flag in Flag]
    values = [counts[flag] for flag in Flag]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.barh(labels, values, color="#6a994e")
    ax.set_xlabel("actors flagged")
    ax.set_title("Spoof-pattern flag frequencies")
    fig.subplots_adjust(left=0.35)
    return _save(fig, Path(path))


def render_benchmark_figures(benchmark: EcosystemBenchmark, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    return [
        render_reputation_histogram(benchmark, out_dir / "reputation_histogram.png"),
        render_signal_means(benchmark, out_dir / "signal_means.png"),
        render_flag_frequencies(benchmark, out_dir / "flag_frequencies.png"),
    ]


def study_markdown(study: StudyReport) -> str:
    """One-page study summary for humans; numbers match the JSON artifact."""
    lines = [
        "# Effectiveness study",
        "",
        f"- seed: {study.seed}",
        "- population: "
        + ", ".join(f"{name}={count}" for name, count in sorted(study.counts.items())),
        f"- train/holdout: {study.n_train}/{study.n_holdout}",
        f"- incident rate: {study.incident_rate:.4f}",
        f"- interactions: {'on' if study.with_interactions else 'off'}",
        f"- l2 penalty: {study.l2_penalty}",
        "",
        "## Fit",
        "",
        f"- converged: {study.converged} after {study.iterations} iterations",
        f"- final loss: {study.final_loss:.6f}",
        f"- max gradient deviation: {study.max_gradient_deviation:.3e}",
        "",
        "## Discrimination (AUC)",
        "",
        "| metric | value |",
        "| --- | --- |",
        f"| model, train | {study.auc_model_train:.4f} |",
        f"| model, holdout | {study.auc_model_holdout:.4f} |",
        f"| composite baseline, holdout | {study.auc_composite_holdout:.4f} |",
        f"| composite baseline, full | {study.auc_composite_full:.4f} |",
        "",
        "## Coefficients",
        "",
        "| feature | coefficient |",
        "| --- | --- |",
    ]
    for name, value in study.coefficients.items():
        lines.append(f"| {name} | {value:+.6f} |")
    lines.extend(
        [
            "",
            "## Fitted signal weight overlay",
            "",
            "| signal | weight |",
            "| --- | --- |",
        ]
    )
    for name, value in study.fitted_signal_weights.items():
        lines.append(f"| {name} | {value:.6f} |")
    lines.append("")
    return "\n".join(lines)


def write_study_markdown(study: StudyReport, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(study_markdown(study), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write summary {path}: {exc}") from exc
    return path
