"""Multilingual concept benchmark: data model, TSV parsing, validation, revision.

The benchmark is a matrix of tangible concepts x languages. Each cell holds the
translation surface used to prompt a text-to-image model. Concepts are keyed by
their source-language (English) surface. Correction records describe verified
fixes to individual cells, typed by a six-way error taxonomy; revision applies
them to produce the next benchmark version.

File formats (UTF-8, LF, tab-separated, no escaping -- tabs are forbidden
inside surfaces, spaces are allowed):

  inventory TSV:    header ``concept<TAB>lang1<TAB>lang2...``; one row per
                    concept; the first language column is the source language.
  corrections TSV:  header ``concept  language  original  corrected
                    error_types  note``; error_types comma-separated from
                    {F,C,A,T,IS,OS}; note may be empty.
  manifest:         one line per prompt, ``key<TAB>prompt`` with
                    key = ``concept|language|variant``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError, RevisionConflictError
from .ioutil import atomic_write_text

VARIANT_ORIGINAL = "original"
VARIANT_CORRECTED = "corrected"

# Concepts with no sensible prototypical image; flagged by validation, removed
# only by an explicit revision.
DEFAULT_INTANGIBLE_BLOCKLIST = frozenset({"history", "film", "jump"})

CORRECTIONS_HEADER = ("concept", "language", "original", "corrected", "error_types", "note")


class ErrorType(enum.Enum):
    """Closed taxonomy of translation error candidates."""

    FORMALITY = "F"
    COMMONALITY = "C"
    AMBIGUITY = "A"
    TRANSLITERATION = "T"
    INCOMING_SENSE = "IS"
    OUTGOING_SENSE = "OS"

    @classmethod
    def parse(cls, tag: str) -> "ErrorType":
        tag = tag.strip()
        for member in cls:
            if member.value == tag:
                return member
        known = ",".join(m.value for m in cls)
        raise InputError(f"unknown error-type tag {tag!r} (expected one of {known})")


#: Canonical emission order for error-type tags (lightest to most severe).
ERROR_TYPE_ORDER = (
    ErrorType.FORMALITY,
    ErrorType.COMMONALITY,
    ErrorType.AMBIGUITY,
    ErrorType.TRANSLITERATION,
    ErrorType.INCOMING_SENSE,
    ErrorType.OUTGOING_SENSE,
)


def format_error_types(types: frozenset[ErrorType]) -> str:
    return ",".join(t.value for t in ERROR_TYPE_ORDER if t in types)


def pseudo_variant(k: int) -> str:
    if k < 0:
        raise InputError(f"pseudo variant index must be >= 0, got {k}")
    return f"pseudo:{k}"


def variant_sort_key(variant: str) -> tuple[int, int]:
    """Orders original < corrected < pseudo:0 < pseudo:1 < ..."""
    if variant == VARIANT_ORIGINAL:
        return (0, 0)
    if variant == VARIANT_CORRECTED:
        return (1, 0)
    if variant.startswith("pseudo:"):
        try:
            return (2, int(variant.split(":", 1)[1]))
        except ValueError:
            pass
    raise InputError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class Translation:
    concept: str
    language: str
    surface: str
    variant: str = VARIANT_ORIGINAL


@dataclass(frozen=True)
class CorrectionRecord:
    """One verified translation fix, carrying the expected current surface.

    ``original`` is checked against the live cell when the correction is
    applied, guarding against applying a correction file to the wrong
    benchmark version.
    """

    concept: str
    language: str
    original: str
    corrected: str
    error_types: frozenset[ErrorType]
    note: str = ""

    def __post_init__(self) -> None:
        if not self.error_types:
            raise InputError(f"correction for {self.concept}/{self.language} has no error types")
        if self.original == self.corrected:
            raise InputError(
                f"correction for {self.concept}/{self.language} does not change the surface"
            )


@dataclass(frozen=True)
class Issue:
    """A validation diagnostic. Issues are advisory, never fatal."""

    kind: str  # "empty-cell" | "duplicate-surface" | "intangible-concept"
    concept: str
    language: str | None
    message: str


@dataclass(frozen=True)
class SurfaceChange:
    concept: str
    language: str
    old: str
    new: str


@dataclass(frozen=True)
class Changeset:
    added: tuple[str, ...]
    removed: tuple[str, ...]
    changed: tuple[SurfaceChange, ...]

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.changed)


@dataclass(frozen=True)
class ConceptInventory:
    """Immutable benchmark snapshot. All operations return new inventories.

    ``cells`` maps (concept, language, variant) -> surface. ``concept_order``
    preserves file row order so save/load round-trips byte-for-byte.
    ``removed_concepts`` maps concept -> removal reason; removed concepts keep
    their cells in memory but are excluded from the active matrix and from
    emitted files.
    """

    version: str
    source_language: str
    languages: tuple[str, ...]
    concept_order: tuple[str, ...]
    cells: dict[tuple[str, str, str], str] = field(default_factory=dict)
    removed_concepts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.source_language not in self.languages:
            raise InputError(
                f"source language {self.source_language!r} is not among {list(self.languages)}"
            )

    def active_concepts(self) -> tuple[str, ...]:
        return tuple(c for c in self.concept_order if c not in self.removed_concepts)

    def surface(self, concept: str, language: str, variant: str = VARIANT_ORIGINAL) -> str | None:
        return self.cells.get((concept, language, variant))

    def translations(self) -> list[Translation]:
        out = [
            Translation(c, lang, surf, var)
            for (c, lang, var), surf in self.cells.items()
            if c not in self.removed_concepts
        ]
        out.sort(key=lambda t: (t.concept, t.language, variant_sort_key(t.variant)))
        return out


def _validate_concept_id(concept: str, where: str) -> None:
    if not concept or not concept.strip():
        raise InputError(f"{where}: empty concept id")
    if concept != concept.lower():
        raise InputError(f"{where}: concept id {concept!r} must be lowercase")


def _split_line(line: str, lineno: int) -> list[str]:
    if "\r" in line:
        raise InputError(f"line {lineno}: carriage return found; files must use LF line endings")
    return line.split("\t")


def load_inventory(path: str | Path, version: str = "v1") -> ConceptInventory:
    """Parse an inventory TSV.

    The header row names the languages; the first language column is the
    source language. Cells may be empty (reported later by
    ``validate_inventory``), but structurally missing cells are a parse error.
    """
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise InputError(f"inventory file not found: {path}")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not valid UTF-8: {exc}")

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise InputError(f"{path}: empty file")

    header = _split_line(lines[0], 1)
    if header[0] != "concept":
        raise InputError(f"{path} line 1: first header column must be 'concept', got {header[0]!r}")
    languages = tuple(header[1:])
    if not languages:
        raise InputError(f"{path} line 1: no language columns")
    if len(set(languages)) != len(languages):
        raise InputError(f"{path} line 1: duplicate language columns")

    cells: dict[tuple[str, str, str], str] = {}
    order: list[str] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = _split_line(line, lineno)
        if len(parts) < len(header):
            concept = parts[0] if parts and parts[0] else "<unknown>"
            missing_lang = header[len(parts)] if len(parts) >= 1 else header[1]
            raise InputError(
                f"{path} line {lineno}: missing cell for concept {concept!r}, "
                f"language {missing_lang!r}"
            )
        if len(parts) > len(header):
            raise InputError(
                f"{path} line {lineno}: {len(parts)} cells for a {len(header)}-column header "
                "(tab inside a surface?)"
            )
        concept = parts[0]
        _validate_concept_id(concept, f"{path} line {lineno}")
        if concept in seen:
            raise InputError(f"{path} line {lineno}: duplicate concept id {concept!r}")
        seen.add(concept)
        order.append(concept)
        for lang, surf in zip(languages, parts[1:]):
            if surf:
                cells[(concept, lang, VARIANT_ORIGINAL)] = surf

    return ConceptInventory(
        version=version,
        source_language=languages[0],
        languages=languages,
        concept_order=tuple(order),
        cells=cells,
    )


def save_inventory(inv: ConceptInventory, path: str | Path) -> None:
    """Emit the active matrix as TSV; removed concepts are omitted."""
    lines = ["concept\t" + "\t".join(inv.languages)]
    for concept in inv.active_concepts():
        row = [concept]
        for lang in inv.languages:
            row.append(inv.surface(concept, lang) or "")
        lines.append("\t".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_corrections(
    path: str | Path, inventory: ConceptInventory | None = None
) -> list[CorrectionRecord]:
    """Parse a corrections TSV, optionally cross-validating against an inventory.

    Cross-validation checks existence of the referenced concept and language;
    surface agreement is enforced later, at apply time.
    """
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise InputError(f"corrections file not found: {path}")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise InputError(f"{path}: empty file")

    header = tuple(_split_line(lines[0], 1))
    if header != CORRECTIONS_HEADER:
        raise InputError(
            f"{path} line 1: expected header {list(CORRECTIONS_HEADER)}, got {list(header)}"
        )

    records: list[CorrectionRecord] = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = _split_line(line, lineno)
        if len(parts) == len(CORRECTIONS_HEADER) - 1:
            parts.append("")  # note column may be omitted
        if len(parts) != len(CORRECTIONS_HEADER):
            raise InputError(
                f"{path} line {lineno}: expected {len(CORRECTIONS_HEADER)} cells, got {len(parts)}"
            )
        concept, language, original, corrected, tags, note = parts
        _validate_concept_id(concept, f"{path} line {lineno}")
        if not original or not corrected:
            raise InputError(f"{path} line {lineno}: empty surface")
        try:
            types = frozenset(ErrorType.parse(t) for t in tags.split(",") if t.strip())
            record = CorrectionRecord(concept, language, original, corrected, types, note)
        except InputError as exc:
            raise InputError(f"{path} line {lineno}: {exc}")
        if (concept, language) in seen:
            raise InputError(
                f"{path} line {lineno}: duplicate correction for {concept}/{language}"
            )
        seen.add((concept, language))
        if inventory is not None:
            if language not in inventory.languages:
                raise InputError(
                    f"{path} line {lineno}: language {language!r} not in inventory"
                )
            if concept not in inventory.concept_order:
                raise InputError(
                    f"{path} line {lineno}: concept {concept!r} not in inventory"
                )
        records.append(record)
    return records


def save_corrections(records: list[CorrectionRecord], path: str | Path) -> None:
    lines = ["\t".join(CORRECTIONS_HEADER)]
    for r in records:
        lines.append(
            "\t".join(
                [r.concept, r.language, r.original, r.corrected, format_error_types(r.error_types), r.note]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def validate_inventory(
    inv: ConceptInventory,
    blocklist: frozenset[str] = DEFAULT_INTANGIBLE_BLOCKLIST,
) -> list[Issue]:
    """Diagnose the inventory: empty cells, in-language duplicate surfaces,
    and concepts on the intangibility blocklist.

    Output is a pure, deterministically ordered function of the inventory and
    blocklist.
    """
    issues: list[Issue] = []
    active = inv.active_concepts()

    for concept in active:
        if concept in blocklist:
            issues.append(
                Issue(
                    kind="intangible-concept",
                    concept=concept,
                    language=None,
                    message=f"intangible concept {concept!r} is on the blocklist",
                )
            )

    for concept in active:
        for lang in inv.languages:
            if inv.surface(concept, lang) is None:
                issues.append(
                    Issue(
                        kind="empty-cell",
                        concept=concept,
                        language=lang,
                        message=f"no translation for {concept!r} in {lang!r}",
                    )
                )

    by_surface: dict[tuple[str, str], list[str]] = {}
    for concept in active:
        for lang in inv.languages:
            surf = inv.surface(concept, lang)
            if surf is not None:
                by_surface.setdefault((lang, surf), []).append(concept)
    for (lang, surf), concepts in by_surface.items():
        if len(concepts) > 1:
            joined = ", ".join(sorted(concepts))
            for concept in concepts:
                issues.append(
                    Issue(
                        kind="duplicate-surface",
                        concept=concept,
                        language=lang,
                        message=(
                            f"surface {surf!r} in {lang!r} is shared by concepts [{joined}] "
                            "(potential incoming duplicate)"
                        ),
                    )
                )

    issues.sort(key=lambda i: (i.kind, i.concept, i.language or ""))
    return issues


def with_correction_variants(
    inv: ConceptInventory, corrections: list[CorrectionRecord]
) -> ConceptInventory:
    """Return an inventory whose cells also carry ``corrected`` variants.

    Originals are untouched; this exists so a generation manifest can cover
    both the original-prompt and corrected-prompt image populations.
    """
    cells = dict(inv.cells)
    for corr in corrections:
        _require_cell(inv, corr)
        cells[(corr.concept, corr.language, VARIANT_CORRECTED)] = corr.corrected
    return ConceptInventory(
        version=inv.version,
        source_language=inv.source_language,
        languages=inv.languages,
        concept_order=inv.concept_order,
        cells=cells,
        removed_concepts=dict(inv.removed_concepts),
    )


def _require_cell(inv: ConceptInventory, corr: CorrectionRecord) -> None:
    if corr.language not in inv.languages:
        raise InputError(f"correction references unknown language {corr.language!r}")
    if corr.concept not in inv.concept_order or corr.concept in inv.removed_concepts:
        raise InputError(f"correction references unknown concept {corr.concept!r}")
    if inv.surface(corr.concept, corr.language) is None:
        raise InputError(
            f"correction references empty cell {corr.concept}/{corr.language}"
        )


def revise_benchmark(
    inv: ConceptInventory,
    corrections: list[CorrectionRecord],
    removals: set[str] | frozenset[str] = frozenset(),
    version: str | None = None,
) -> ConceptInventory:
    """Apply corrections and removals, producing the next benchmark version.

    Every correction's recorded ``original`` must match the live cell; all
    mismatches are collected and reported together. Removed concepts move to
    ``removed_concepts`` with reason "intangible". All untouched cells are
    carried over bit-identical. Reapplying the same corrections to the output
    fails the original-match guard rather than silently double-applying.
    """
    for corr in corrections:
        _require_cell(inv, corr)
    unknown_removals = sorted(r for r in removals if r not in inv.concept_order)
    if unknown_removals:
        raise InputError(f"removals reference unknown concepts: {unknown_removals}")

    conflicts = []
    for corr in corrections:
        current = inv.surface(corr.concept, corr.language)
        if current != corr.original:
            conflicts.append(
                f"{corr.concept}/{corr.language}: expected original {corr.original!r}, "
                f"inventory has {current!r}"
            )
    if conflicts:
        raise RevisionConflictError(
            "corrections do not match the current benchmark version:\n  " + "\n  ".join(conflicts)
        )

    cells = {k: v for k, v in inv.cells.items() if k[2] == VARIANT_ORIGINAL}
    for corr in corrections:
        cells[(corr.concept, corr.language, VARIANT_ORIGINAL)] = corr.corrected
    removed = dict(inv.removed_concepts)
    for concept in removals:
        removed[concept] = "intangible"

    return ConceptInventory(
        version=version if version is not None else inv.version + ".1",
        source_language=inv.source_language,
        languages=inv.languages,
        concept_order=inv.concept_order,
        cells=cells,
        removed_concepts=removed,
    )


def manifest_lines(inv: ConceptInventory, templates: dict[str, str]) -> list[str]:
    """Build ``key<TAB>prompt`` lines for every (concept, language, variant) cell.

    ``templates`` maps language code to a prompt template containing exactly
    one ``{}`` placeholder; a ``"default"`` entry backstops missing languages.
    Ordering: concept (lexicographic), language (inventory column order),
    variant (original, corrected, pseudo ascending).
    """
    resolved: dict[str, str] = {}
    for lang in inv.languages:
        template = templates.get(lang, templates.get("default"))
        if template is None:
            raise InputError(f"no prompt template for language {lang!r} and no default")
        if template.count("{}") != 1:
            raise InputError(
                f"template for {lang!r} must contain exactly one '{{}}' placeholder: {template!r}"
            )
        resolved[lang] = template

    by_cell: dict[tuple[str, str], list[str]] = {}
    for (concept, lang, variant), _ in inv.cells.items():
        if concept not in inv.removed_concepts:
            by_cell.setdefault((concept, lang), []).append(variant)

    lines = []
    for concept in sorted(set(c for c, _ in by_cell)):
        for lang in inv.languages:
            variants = by_cell.get((concept, lang))
            if not variants:
                continue
            for variant in sorted(variants, key=variant_sort_key):
                surface = inv.cells[(concept, lang, variant)]
                prompt = resolved[lang].replace("{}", surface)
                lines.append(f"{concept}|{lang}|{variant}\t{prompt}")
    return lines


def export_generation_manifest(
    inv: ConceptInventory, templates: dict[str, str], path: str | Path
) -> int:
    """Write the prompt manifest for an external image-generation runner.

    Returns the number of prompt lines written.
    """
    lines = manifest_lines(inv, templates)
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))
    return len(lines)


def diff_inventories(a: ConceptInventory, b: ConceptInventory) -> Changeset:
    """Changes from ``a`` to ``b``: concept additions/removals and per-cell
    surface changes among shared active concepts. ``diff(a, a)`` is empty.
    """
    if a.source_language != b.source_language:
        raise InputError(
            f"source-language mismatch: {a.source_language!r} vs {b.source_language!r}"
        )
    active_a = set(a.active_concepts())
    active_b = set(b.active_concepts())
    added = tuple(sorted(active_b - active_a))
    removed = tuple(sorted(active_a - active_b))

    changed: list[SurfaceChange] = []
    shared_langs = [lang for lang in a.languages if lang in b.languages]
    for concept in sorted(active_a & active_b):
        for lang in shared_langs:
            old = a.surface(concept, lang)
            new = b.surface(concept, lang)
            if old != new:
                changed.append(SurfaceChange(concept, lang, old or "", new or ""))
    return Changeset(added=added, removed=removed, changed=tuple(changed))
