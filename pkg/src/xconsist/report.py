"""Analysis artifacts: result tables, fit-stat tables, scatter data + figures,
and error-type histograms over text-domain significance.

Every artifact has a machine-readable TSV as the primary output; figures are
rendered alongside them as self-contained SVG files via matplotlib. The result
and scatter TSVs carry full-precision values (shortest round-tripping decimal);
the fit-stat table is formatted to 3 decimals, mirroring how such summaries are
reported. Emission is deterministic: fixed sort orders, '.' decimal separator,
and byte-identical files for identical inputs (matplotlib is pinned to a fixed
hash salt and no embedded dates).

Report directory layout for one run:

    reports/<run_id>/
        results.tsv
        fitstats.tsv
        scatter_<model>_<lang>.tsv|.svg
        hist_<lang>.tsv|.svg
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import DegenerateSeriesError, InputError  # noqa: E402
from .inventory import ERROR_TYPE_ORDER, ErrorType, format_error_types  # noqa: E402
from .ioutil import atomic_write_text, fmt3, fmt_full  # noqa: E402
from .similarity import ConceptResult  # noqa: E402
from .stats import FitStats, PairedSeries, summarize  # noqa: E402

BAND_SAMPLES = 101  # >= 50 x-positions spanning the data

RESULTS_BASE_COLUMNS = (
    "concept",
    "language",
    "original",
    "corrected",
    "error_types",
    "donor_concept",
    "sample_index",
    "delta_sem",
)

FITSTATS_HEADER = ("model", "language", "pcc", "p", "m", "b", "n")


def _configure_matplotlib() -> None:
    matplotlib.rcParams["svg.hashsalt"] = "xconsist"  # reproducible element ids
    matplotlib.rcParams["svg.fonttype"] = "none"  # keep text as text, not glyph paths
    matplotlib.rcParams["font.family"] = "DejaVu Sans"


def safe_name(name: str) -> str:
    """Filesystem-safe token for embedding model/language ids in file names."""
    return re.sub(r"[^A-Za-z0-9._-]+", "-", name)


@dataclass(frozen=True)
class ResultRow:
    """One row of the merged results table: a (concept, language[, sample])
    group with its per-model image-impact values."""

    concept: str
    language: str
    original: str
    corrected: str
    error_types: frozenset[ErrorType]
    delta_sem: float
    delta_xc: dict[str, float] = field(default_factory=dict)
    donor_concept: str | None = None
    sample_index: int | None = None


def merge_results(results: list[ConceptResult]) -> tuple[list[ResultRow], list[str]]:
    """Group per-model results into table rows keyed by (language, concept,
    sample). Model-independent fields must agree across models."""
    rows: dict[tuple, ResultRow] = {}
    models: set[str] = set()
    for r in results:
        key = (r.language, r.concept, r.sample_index)
        models.add(r.model_id)
        row = rows.get(key)
        if row is None:
            rows[key] = ResultRow(
                concept=r.concept,
                language=r.language,
                original=r.original,
                corrected=r.corrected,
                error_types=r.error_types,
                delta_sem=r.delta_sem,
                delta_xc={r.model_id: r.delta_xc},
                donor_concept=r.donor_concept,
                sample_index=r.sample_index,
            )
            continue
        if (row.original, row.corrected, row.error_types) != (
            r.original,
            r.corrected,
            r.error_types,
        ):
            raise InputError(
                f"inconsistent surfaces/types across models for {r.concept}/{r.language}"
            )
        if not math.isclose(row.delta_sem, r.delta_sem, rel_tol=0.0, abs_tol=1e-12):
            raise InputError(
                f"inconsistent delta_sem across models for {r.concept}/{r.language}"
            )
        if r.model_id in row.delta_xc:
            raise InputError(
                f"duplicate result for {r.concept}/{r.language} under model {r.model_id}"
            )
        row.delta_xc[r.model_id] = r.delta_xc
    # Ascending by text-domain significance within language sections;
    # ties break on concept id, then sample index.
    ordered = sorted(
        rows.values(),
        key=lambda row: (
            row.language,
            row.delta_sem,
            row.concept,
            -1 if row.sample_index is None else row.sample_index,
        ),
    )
    return ordered, sorted(models)


def emit_results_table(results: list[ConceptResult], path: str | Path) -> list[ResultRow]:
    """Write the merged per-concept results TSV, sorted ascending by delta_sem
    within language sections. Returns the emitted rows."""
    if not results:
        raise InputError("no results to emit")
    rows, models = merge_results(results)
    header = list(RESULTS_BASE_COLUMNS) + [f"delta_xc:{m}" for m in models]
    lines = ["\t".join(header)]
    for row in rows:
        cells = [
            row.concept,
            row.language,
            row.original,
            row.corrected,
            format_error_types(row.error_types),
            row.donor_concept or "",
            "" if row.sample_index is None else str(row.sample_index),
            fmt_full(row.delta_sem),
        ]
        for model in models:
            value = row.delta_xc.get(model)
            cells.append("" if value is None else fmt_full(value))
        lines.append("\t".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")
    return rows


def read_results_table(path: str | Path) -> tuple[list[ResultRow], list[str]]:
    """Parse a results TSV back into rows (full precision survives the trip)."""
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise InputError(f"results file not found: {path}")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise InputError(f"{path}: empty results file")
    header = lines[0].split("\t")
    if tuple(header[: len(RESULTS_BASE_COLUMNS)]) != RESULTS_BASE_COLUMNS:
        raise InputError(f"{path}: unexpected results header {header}")
    models = [h[len("delta_xc:") :] for h in header[len(RESULTS_BASE_COLUMNS) :]]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(header):
            raise InputError(f"{path} line {lineno}: expected {len(header)} cells")
        try:
            types = frozenset(
                ErrorType.parse(t) for t in cells[4].split(",") if t.strip()
            )
            delta_xc = {
                model: float(value)
                for model, value in zip(models, cells[len(RESULTS_BASE_COLUMNS) :])
                if value != ""
            }
            rows.append(
                ResultRow(
                    concept=cells[0],
                    language=cells[1],
                    original=cells[2],
                    corrected=cells[3],
                    error_types=types,
                    donor_concept=cells[5] or None,
                    sample_index=int(cells[6]) if cells[6] != "" else None,
                    delta_sem=float(cells[7]),
                    delta_xc=delta_xc,
                )
            )
        except (ValueError, InputError) as exc:
            raise InputError(f"{path} line {lineno}: {exc}")
    return rows, models


def emit_fitstats_table(rows: list[FitStats], path: str | Path) -> None:
    """One 3-decimal line per (model, language), columns PCC, p, m, b, n."""
    if not rows:
        raise InputError("no fit stats to emit")
    ordered = sorted(rows, key=lambda f: (f.model_id, f.language))
    lines = ["\t".join(FITSTATS_HEADER)]
    for f in ordered:
        lines.append(
            "\t".join(
                [
                    f.model_id,
                    f.language,
                    fmt3(f.pcc),
                    fmt3(f.p_value),
                    fmt3(f.slope_m),
                    fmt3(f.intercept_b),
                    str(f.n_points),
                ]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class ScatterSpec:
    """Scatter points with their fit and a sampled confidence-band polyline."""

    points: PairedSeries
    fit: FitStats
    band_xs: tuple[float, ...]
    band_lo: tuple[float, ...]
    band_hi: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.band_xs) < 50:
            raise InputError(
                f"confidence band must be sampled at >= 50 x-positions, got {len(self.band_xs)}"
            )
        if not (len(self.band_xs) == len(self.band_lo) == len(self.band_hi)):
            raise InputError("band polyline arrays disagree in length")

    @classmethod
    def build(cls, points: PairedSeries, fit: FitStats) -> "ScatterSpec":
        if len(points) < 3:
            raise InputError(f"scatter requires >= 3 points, got {len(points)}")
        grid, lo, hi = scatter_band(fit, list(points.xs))
        return cls(points=points, fit=fit, band_xs=tuple(grid), band_lo=tuple(lo), band_hi=tuple(hi))


@dataclass(frozen=True)
class HistogramSpec:
    """Binning for error-type histograms over text-domain significance."""

    bin_width: float = 0.01
    range: tuple[float, float] | None = None  # data-driven when None

    def __post_init__(self) -> None:
        if self.bin_width <= 0:
            raise InputError(f"bin width must be positive, got {self.bin_width}")


def _histogram_grid(values: list[float], spec: HistogramSpec) -> tuple[float, int]:
    w = spec.bin_width
    if spec.range is not None:
        lo, hi = spec.range
        if hi <= lo:
            raise InputError(f"histogram range is empty: {spec.range}")
        if min(values) < lo or max(values) > hi:
            raise InputError("histogram range does not cover the data")
    else:
        lo = math.floor(min(values) / w) * w
        hi = math.ceil(max(values) / w) * w
        if hi <= lo:
            hi = lo + w
    nbins = max(1, int(round((hi - lo) / w)))
    return lo, nbins


def histogram_counts(
    results_or_rows, spec: HistogramSpec | None = None
) -> tuple[list[float], dict[ErrorType, list[int]]]:
    """Per-bin, per-error-type counts over delta_sem.

    A result with multiple error types contributes one count to each of its
    types, so the total count is the number of (result, type) incidences.
    Returns (bin_edges, counts-per-type); edges has nbins+1 entries.
    """
    spec = spec or HistogramSpec()
    items = [(r.delta_sem, r.error_types) for r in results_or_rows]
    if not items:
        raise InputError("no results to histogram")
    if all(not types for _, types in items):
        raise InputError("results carry no error types; nothing to histogram")
    lo, nbins = _histogram_grid([v for v, _ in items], spec)
    w = spec.bin_width
    counts = {t: [0] * nbins for t in ERROR_TYPE_ORDER}
    for value, types in items:
        idx = min(nbins - 1, max(0, int(math.floor((value - lo) / w))))
        for t in types:
            counts[t][idx] += 1
    edges = [lo + i * w for i in range(nbins + 1)]
    return edges, counts


def emit_histogram(
    results_or_rows, path: str | Path, spec: HistogramSpec | None = None
) -> None:
    """Write the binned error-type counts as TSV."""
    edges, counts = histogram_counts(results_or_rows, spec)
    header = ["bin_lo", "bin_hi"] + [t.value for t in ERROR_TYPE_ORDER]
    lines = ["\t".join(header)]
    for i in range(len(edges) - 1):
        cells = [fmt_full(edges[i]), fmt_full(edges[i + 1])]
        cells += [str(counts[t][i]) for t in ERROR_TYPE_ORDER]
        lines.append("\t".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def render_histogram(
    results_or_rows,
    svg_path: str | Path,
    spec: HistogramSpec | None = None,
    title: str = "",
) -> None:
    """Stacked per-error-type histogram, colored lightest (formality) to
    darkest (sense errors)."""
    _configure_matplotlib()
    edges, counts = histogram_counts(results_or_rows, spec)
    centers = [(edges[i] + edges[i + 1]) / 2 for i in range(len(edges) - 1)]
    width = edges[1] - edges[0]
    cmap = plt.get_cmap("viridis_r")
    colors = [cmap(0.15 + 0.7 * i / (len(ERROR_TYPE_ORDER) - 1)) for i in range(len(ERROR_TYPE_ORDER))]

    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    bottom = [0] * len(centers)
    for t, color in zip(ERROR_TYPE_ORDER, colors):
        if not any(counts[t]):
            continue
        ax.bar(centers, counts[t], width=width * 0.95, bottom=bottom, color=color, label=t.value)
        bottom = [b + c for b, c in zip(bottom, counts[t])]
    ax.set_xlabel("delta_sem")
    ax.set_ylabel("error count")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, title="error type")
    fig.tight_layout()
    _save_figure(fig, svg_path)


def scatter_band(fit: FitStats, xs: list[float]) -> tuple[list[float], list[float], list[float]]:
    """Sample the fit line and confidence band across the data's x-span."""
    if not xs:
        raise InputError("cannot sample a band over an empty series")
    lo, hi = min(xs), max(xs)
    if hi == lo:
        hi = lo + 1e-9
    grid = [lo + (hi - lo) * i / (BAND_SAMPLES - 1) for i in range(BAND_SAMPLES)]
    center = fit.band.center(grid)
    half = fit.band.half_width(grid)
    return grid, list(center - half), list(center + half)


def emit_scatter(series: PairedSeries, fit: FitStats, path: str | Path) -> None:
    """Write scatter points plus fit-line/band samples as one TSV.

    Row kinds: ``point`` rows carry (x, y, label); ``band`` rows carry the
    sampled fit center and interval (x, y, y_lo, y_hi).
    """
    spec = ScatterSpec.build(series, fit)
    labels = series.labels or tuple("" for _ in series.xs)
    lines = ["\t".join(["kind", "x", "y", "y_lo", "y_hi", "label"])]
    for x, y, label in zip(series.xs, series.ys, labels):
        lines.append("\t".join(["point", fmt_full(x), fmt_full(y), "", "", label]))
    for x, ylo, yhi in zip(spec.band_xs, spec.band_lo, spec.band_hi):
        center = fit.slope_m * x + fit.intercept_b
        lines.append(
            "\t".join(["band", fmt_full(x), fmt_full(center), fmt_full(ylo), fmt_full(yhi), ""])
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def _save_figure(fig, path: str | Path) -> None:
    """Atomic figure write (temp + rename), dateless for byte-stable output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    plt.close(fig)
    tmp.replace(path)


def render_scatter(
    series: PairedSeries, fit: FitStats, svg_path: str | Path, title: str = ""
) -> None:
    """Scatter with the OLS line, shaded confidence band, and the slope
    annotated bottom-right."""
    _configure_matplotlib()
    spec = ScatterSpec.build(series, fit)
    alpha = 0.35 if len(series) > 100 else 0.8  # transparency reveals mass in large batches

    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    ax.fill_between(spec.band_xs, spec.band_lo, spec.band_hi, color="#9ecae1", alpha=0.5, linewidth=0)
    ax.plot(
        spec.band_xs,
        [fit.slope_m * x + fit.intercept_b for x in spec.band_xs],
        color="#08519c",
        linewidth=1.5,
    )
    ax.scatter(series.xs, series.ys, s=18, color="#3182bd", alpha=alpha, edgecolors="none")
    ax.set_xlabel("delta_sem")
    ax.set_ylabel("delta_xc")
    if title:
        ax.set_title(title)
    ax.annotate(
        f"m={fmt3(fit.slope_m)}",
        xy=(0.97, 0.03),
        xycoords="axes fraction",
        ha="right",
        va="bottom",
        fontweight="bold",
    )
    fig.tight_layout()
    _save_figure(fig, svg_path)


def fit_groups(
    results: list[ConceptResult], ci_level: float = 0.95
) -> tuple[list[FitStats], list[str]]:
    """Summarize every (model, language) group with >= 3 points.

    Returns the fit rows plus human-readable notes for groups that were
    skipped (too few points or zero variance).
    """
    groups: dict[tuple[str, str], list[ConceptResult]] = {}
    for r in results:
        groups.setdefault((r.model_id, r.language), []).append(r)
    fits: list[FitStats] = []
    skipped: list[str] = []
    for (model_id, language) in sorted(groups):
        members = groups[(model_id, language)]
        if len(members) < 3:
            skipped.append(f"{model_id}/{language}: only {len(members)} point(s), need >= 3")
            continue
        try:
            fits.append(summarize(model_id, language, members, ci_level))
        except DegenerateSeriesError as exc:
            skipped.append(f"{model_id}/{language}: {exc}")
    return fits, skipped


def write_reports(
    run_dir: str | Path,
    results: list[ConceptResult],
    fits: list[FitStats],
    figures: bool = True,
) -> list[Path]:
    """Emit the full report layout for one run; returns the files written."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    results_path = run_dir / "results.tsv"
    rows = emit_results_table(results, results_path)
    written.append(results_path)

    if fits:
        fitstats_path = run_dir / "fitstats.tsv"
        emit_fitstats_table(fits, fitstats_path)
        written.append(fitstats_path)

    by_group: dict[tuple[str, str], list[ConceptResult]] = {}
    for r in results:
        by_group.setdefault((r.model_id, r.language), []).append(r)
    for fit in fits:
        members = by_group.get((fit.model_id, fit.language), [])
        members = sorted(members, key=lambda r: (r.concept, r.sample_index or 0))
        series = PairedSeries(
            xs=tuple(r.delta_sem for r in members),
            ys=tuple(r.delta_xc for r in members),
            labels=tuple(r.concept for r in members),
        )
        stem = f"scatter_{safe_name(fit.model_id)}_{safe_name(fit.language)}"
        tsv = run_dir / f"{stem}.tsv"
        emit_scatter(series, fit, tsv)
        written.append(tsv)
        if figures:
            svg = run_dir / f"{stem}.svg"
            render_scatter(series, fit, svg, title=f"{fit.model_id} / {fit.language}")
            written.append(svg)

    rows_by_language: dict[str, list[ResultRow]] = {}
    for row in rows:
        if row.error_types:
            rows_by_language.setdefault(row.language, []).append(row)
    for language in sorted(rows_by_language):
        tsv = run_dir / f"hist_{safe_name(language)}.tsv"
        emit_histogram(rows_by_language[language], tsv)
        written.append(tsv)
        if figures:
            svg = run_dir / f"hist_{safe_name(language)}.svg"
            render_histogram(rows_by_language[language], svg, title=language)
            written.append(svg)
    return written
