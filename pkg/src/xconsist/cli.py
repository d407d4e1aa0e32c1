"""Command-line pipeline: validate -> manifest -> embed -> score -> pseudo ->
revise -> report.

Exit codes are a stable scripting contract: 0 success, 2 input error,
3 missing embeddings, 4 revision conflict, 5 provider failure. Every command
is deterministic given its config, input files, stores, and seed; reruns
overwrite outputs byte-identically.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import client as client_mod
from . import inventory as inv_mod
from . import pseudo as pseudo_mod
from . import report as report_mod
from .config import RunConfig, load_config
from .errors import (
    HarnessError,
    InputError,
    MissingEmbeddingsError,
    ProviderError,
    RevisionConflictError,
)
from .ioutil import atomic_write_text, fmt_full
from .similarity import ConceptResult, score_concepts
from .store import EmbeddingKey, EmbeddingStore, Modality, load_store, save_store, text_key

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MISSING_EMBEDDINGS = 3
EXIT_REVISION_CONFLICT = 4
EXIT_PROVIDER = 5


def _load_cfg(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "inventory", None):
        cfg.inventory = Path(args.inventory)
    if getattr(args, "corrections", None):
        cfg.corrections = Path(args.corrections)
    if getattr(args, "out", None):
        cfg.output_dir = Path(args.out)
    if getattr(args, "run_id", None):
        cfg.run_id = args.run_id
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "languages", None):
        cfg.languages = args.languages
    if getattr(args, "models", None):
        cfg.models = args.models
    if getattr(args, "k", None) is not None:
        cfg.k = args.k
    return cfg


def _run_dir(cfg: RunConfig) -> Path:
    return cfg.output_dir / cfg.run_id


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    inventory = inv_mod.load_inventory(cfg.require_inventory(), version=cfg.version)
    if cfg.corrections is not None:
        corrections = inv_mod.load_corrections(cfg.corrections, inventory)
        print(f"corrections: {len(corrections)} records OK")
    issues = inv_mod.validate_inventory(inventory, cfg.blocklist)
    for issue in issues:
        where = f"{issue.concept}" + (f"/{issue.language}" if issue.language else "")
        print(f"warning [{issue.kind}] {where}: {issue.message}")
    print(
        f"inventory {inventory.version}: {len(inventory.active_concepts())} concepts, "
        f"{len(inventory.languages)} languages, {len(issues)} issue(s)"
    )
    return EXIT_OK


def cmd_manifest(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    inventory = inv_mod.load_inventory(cfg.require_inventory(), version=cfg.version)
    if cfg.corrections is not None:
        corrections = inv_mod.load_corrections(cfg.corrections, inventory)
        inventory = inv_mod.with_correction_variants(inventory, corrections)
    path = Path(args.manifest_out) if args.manifest_out else cfg.output_dir / "manifest.tsv"
    count = inv_mod.export_generation_manifest(inventory, cfg.templates, path)
    print(f"wrote {count} prompt(s) to {path}")
    return EXIT_OK


def _load_or_new_store(path: Path) -> EmbeddingStore:
    return load_store(path) if path.exists() else EmbeddingStore()


def _parse_key(token: str, modality: Modality) -> EmbeddingKey:
    parts = token.split("|")
    if modality is Modality.TEXT and len(parts) == 3:
        return text_key(*parts)
    if modality is Modality.IMAGE and len(parts) == 4:
        concept, language, variant, index = parts
        try:
            return EmbeddingKey(concept, language, variant, Modality.IMAGE, int(index))
        except ValueError:
            pass
    raise InputError(
        f"bad key {token!r}: expected concept|language|variant"
        + ("|index" if modality is Modality.IMAGE else "")
    )


def _default_text_listing(cfg: RunConfig) -> list[tuple[EmbeddingKey, str]]:
    """Every surface the scoring pipeline can need: source originals, all
    test-language originals, and corrected surfaces."""
    inventory = inv_mod.load_inventory(cfg.require_inventory(), version=cfg.version)
    listing: list[tuple[EmbeddingKey, str]] = []
    for concept in inventory.active_concepts():
        for lang in inventory.languages:
            surface = inventory.surface(concept, lang)
            if surface is not None:
                listing.append((text_key(concept, lang, "original"), surface))
    if cfg.corrections is not None:
        for corr in inv_mod.load_corrections(cfg.corrections, inventory):
            listing.append((text_key(corr.concept, corr.language, "corrected"), corr.corrected))
    return listing


def _read_listing(path: Path, modality: Modality) -> list[tuple[EmbeddingKey, str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"listing file not found: {path}")
    items = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputError(f"{path} line {lineno}: expected key<TAB>value")
        items.append((_parse_key(parts[0], modality), parts[1]))
    return items


def cmd_embed(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    modality = Modality.parse(args.target)
    if modality is Modality.TEXT:
        store_path = cfg.require_text_store()
        if args.listing:
            items = _read_listing(Path(args.listing), modality)
        else:
            items = _default_text_listing(cfg)
    else:
        if not args.listing:
            raise InputError("image embedding requires --listing (key<TAB>image-path lines)")
        if not args.model:
            raise InputError("image embedding requires --model to select the image store")
        store_path = cfg.require_image_store(args.model)
        items = _read_listing(Path(args.listing), modality)

    store = _load_or_new_store(store_path)
    if not args.force:
        items = [(key, payload) for key, payload in items if key not in store]
    if not items:
        print("0 new entries (everything already embedded)")
        return EXIT_OK

    ec = client_mod.EmbedderClient(cfg.resolved_endpoint())
    if modality is Modality.TEXT:
        added = client_mod.fetch_text_embeddings(ec, store, items)
    else:
        added = client_mod.fetch_image_embeddings(ec, store, items)
    save_store(store, store_path)
    print(f"{added} new entries -> {store_path} (extractor {store.extractor_id!r}, dim {store.dim})")
    return EXIT_OK


def _score_all_models(
    cfg: RunConfig,
    inventory,
    corrections,
) -> list[ConceptResult]:
    if not cfg.models:
        raise InputError("no models configured (set 'models' or pass --models)")
    text_store = load_store(cfg.require_text_store())
    results: list[ConceptResult] = []
    for model_id in cfg.models:
        image_store = load_store(cfg.require_image_store(model_id))
        results.extend(score_concepts(inventory, corrections, image_store, text_store, model_id))
    return results


def _write_run_outputs(cfg: RunConfig, results: list[ConceptResult], figures: bool) -> None:
    fits, skipped = report_mod.fit_groups(results, cfg.ci_level)
    for note in skipped:
        print(f"note: no fit for {note}", file=sys.stderr)
    files = report_mod.write_reports(_run_dir(cfg), results, fits, figures=figures)
    for f in files:
        print(f"wrote {f}")


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    inventory = inv_mod.load_inventory(cfg.require_inventory(), version=cfg.version)
    corrections = inv_mod.load_corrections(cfg.require_corrections(), inventory)
    if cfg.languages:
        corrections = [c for c in corrections if c.language in cfg.languages]
    if not corrections:
        print("no corrections to score; nothing written")
        return EXIT_OK
    results = _score_all_models(cfg, inventory, corrections)
    _write_run_outputs(cfg, results, figures=args.figures)
    return EXIT_OK


def cmd_pseudo(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    inventory = inv_mod.load_inventory(cfg.require_inventory(), version=cfg.version)
    languages = cfg.languages or [
        lang for lang in inventory.languages if lang != inventory.source_language
    ]
    run_dir = _run_dir(cfg)

    all_samples: list[pseudo_mod.PseudoCorrectionSample] = []
    for language in languages:
        samples = pseudo_mod.generate_pseudocorrections(inventory, language, cfg.k, cfg.seed)
        path = run_dir / f"samples_{report_mod.safe_name(language)}.tsv"
        pseudo_mod.save_samples(samples, path)
        print(f"wrote {len(samples)} samples to {path}")
        all_samples.extend(samples)

    if not cfg.models:
        print("no models configured; samples written, nothing scored")
        return EXIT_OK
    text_store = load_store(cfg.require_text_store())
    results: list[ConceptResult] = []
    for model_id in cfg.models:
        image_store = load_store(cfg.require_image_store(model_id))
        results.extend(
            pseudo_mod.evaluate_pseudocorrections(
                all_samples, image_store, text_store, model_id, inventory.source_language
            )
        )
    _write_run_outputs(cfg, results, figures=args.figures)
    return EXIT_OK


def _read_removals(path: Path) -> set[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"removals file not found: {path}")
    return {line.strip() for line in text.split("\n") if line.strip()}


def _threshold_filter(
    corrections,
    results_path: Path,
    min_delta_sem: float | None,
    min_delta_xc: float | None,
):
    """Keep corrections whose scored impact clears the thresholds.

    A correction absent from the results file is never applied when
    thresholds are in force.
    """
    rows, _ = report_mod.read_results_table(results_path)
    by_cell = {(row.concept, row.language): row for row in rows}
    kept = []
    for corr in corrections:
        row = by_cell.get((corr.concept, corr.language))
        if row is None:
            print(
                f"note: {corr.concept}/{corr.language} not in results file; skipped",
                file=sys.stderr,
            )
            continue
        if min_delta_sem is not None and row.delta_sem < min_delta_sem:
            continue
        if min_delta_xc is not None:
            if not row.delta_xc:
                continue
            mean_xc = sum(row.delta_xc.values()) / len(row.delta_xc)
            if mean_xc < min_delta_xc:
                continue
        kept.append(corr)
    return kept


def cmd_revise(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    inventory = inv_mod.load_inventory(cfg.require_inventory(), version=cfg.version)
    corrections = inv_mod.load_corrections(cfg.require_corrections(), inventory)
    removals = _read_removals(Path(args.removals)) if args.removals else set()

    if args.min_delta_sem is not None or args.min_delta_xc is not None:
        if not args.results:
            raise InputError("--min-delta-sem/--min-delta-xc require --results from a scoring run")
        corrections = _threshold_filter(
            corrections, Path(args.results), args.min_delta_sem, args.min_delta_xc
        )

    revised = inv_mod.revise_benchmark(inventory, corrections, removals, version=args.new_version)
    out_path = (
        Path(args.inventory_out)
        if args.inventory_out
        else cfg.output_dir / f"inventory_{revised.version}.tsv"
    )
    inv_mod.save_inventory(revised, out_path)

    changes = inv_mod.diff_inventories(inventory, revised)
    changes_path = out_path.with_name(f"changes_{revised.version}.tsv")
    lines = ["kind\tconcept\tlanguage\told\tnew"]
    for concept in changes.removed:
        lines.append(f"removed\t{concept}\t\t\t")
    for concept in changes.added:
        lines.append(f"added\t{concept}\t\t\t")
    for ch in changes.changed:
        lines.append(f"changed\t{ch.concept}\t{ch.language}\t{ch.old}\t{ch.new}")
    atomic_write_text(changes_path, "\n".join(lines) + "\n")

    print(
        f"{inventory.version} -> {revised.version}: applied {len(corrections)} correction(s), "
        f"removed {len(changes.removed)} concept(s), {len(revised.active_concepts())} active"
    )
    print(f"wrote {out_path}")
    print(f"wrote {changes_path}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    results_path = Path(args.results) if args.results else _run_dir(cfg) / "results.tsv"
    rows, models = report_mod.read_results_table(results_path)
    if not rows:
        raise InputError(f"{results_path}: no result rows")
    # Rebuild per-model results from the table. Cross-consistency levels are
    # not stored in the table, only deltas, so xc_original is pinned at 0.
    results = []
    for row in rows:
        for model_id in models:
            if model_id not in row.delta_xc:
                continue
            dxc = row.delta_xc[model_id]
            results.append(
                ConceptResult(
                    concept=row.concept,
                    language=row.language,
                    model_id=model_id,
                    original=row.original,
                    corrected=row.corrected,
                    xc_original=0.0,
                    xc_corrected=dxc,
                    delta_xc=dxc,
                    delta_sem=row.delta_sem,
                    error_types=row.error_types,
                    donor_concept=row.donor_concept,
                    sample_index=row.sample_index,
                )
            )
    _write_run_outputs(cfg, results, figures=True)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xconsist",
        description=(
            "Measure how translation corrections to a multilingual text-to-image "
            "benchmark change model correctness scores."
        ),
    )
    parser.add_argument("--config", "-c", help="TOML run configuration")
    parser.add_argument("--seed", type=int, help="override the configured RNG seed")
    parser.add_argument("--out", help="override the configured output directory")
    parser.add_argument("--run-id", help="override the configured run id")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check inventory and corrections files")
    p.add_argument("--inventory")
    p.add_argument("--corrections")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("manifest", help="emit prompts for the image-generation runner")
    p.add_argument("--inventory")
    p.add_argument("--corrections")
    p.add_argument("--manifest-out", help="manifest path (default <out>/manifest.tsv)")
    p.set_defaults(func=cmd_manifest)

    p = sub.add_parser("embed", help="fetch embeddings from the provider into a store")
    p.add_argument("target", choices=["text", "image"])
    p.add_argument("--inventory")
    p.add_argument("--corrections")
    p.add_argument("--listing", help="key<TAB>payload lines (default: derived from inventory)")
    p.add_argument("--model", help="image store to fill (image target only)")
    p.add_argument("--force", action="store_true", help="re-embed keys already present")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("score", help="score corrections against the stores")
    p.add_argument("--inventory")
    p.add_argument("--corrections")
    p.add_argument("--models", nargs="+")
    p.add_argument("--languages", nargs="+")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pseudo", help="generate and score pseudocorrections")
    p.add_argument("--inventory")
    p.add_argument("--models", nargs="+")
    p.add_argument("--languages", nargs="+")
    p.add_argument("-k", type=int, help="pseudo-originals per concept")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=cmd_pseudo)

    p = sub.add_parser("revise", help="apply corrections and removals as a new version")
    p.add_argument("--inventory")
    p.add_argument("--corrections")
    p.add_argument("--removals", help="file of concept ids to drop as intangible")
    p.add_argument("--results", help="results.tsv from a prior scoring run")
    p.add_argument("--min-delta-sem", type=float, help="apply only corrections with delta_sem >= T")
    p.add_argument("--min-delta-xc", type=float, help="apply only corrections with mean delta_xc >= T")
    p.add_argument("--new-version", help="version string override")
    p.add_argument("--inventory-out", help="revised inventory path")
    p.set_defaults(func=cmd_revise)

    p = sub.add_parser("report", help="render tables and figures from a results file")
    p.add_argument("--results", help="results.tsv (default <out>/<run-id>/results.tsv)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissingEmbeddingsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_EMBEDDINGS
    except RevisionConflictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REVISION_CONFLICT
    except ProviderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (InputError, HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
