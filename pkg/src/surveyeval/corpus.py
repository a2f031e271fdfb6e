"""Corpus manifest loading, survey pairing, and topic mining.

A manifest is a JSON file listing human-authored and machine-generated
survey documents. Pairing between the two sides is exact: every
generated entry names a ``topic_key`` that must match exactly one human
entry, so comparisons are auditable rather than fuzzy-matched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .decompose import DecomposedSurvey, decompose_document
from .errors import (
    DecompositionError,
    DuplicateId,
    MalformedManifest,
    MissingFile,
    NoHeadings,
    UnpairedGeneratedEntry,
)
from .judgekit import JudgeCache, JudgeProvider, mine_topic_label

ROLES = ("human", "generated")
_REQUIRED_FIELDS = ("id", "title", "topic_key", "role", "document_path")


@dataclass
class ManifestEntry:
    id: str
    title: str
    topic: str
    topic_key: str
    role: str
    document_path: str
    system_name: str | None = None

    def is_human(self) -> bool:
        return self.role == "human"


@dataclass
class CorpusManifest:
    corpus_id: str
    entries: list[ManifestEntry]
    path: Path | None = None

    def humans(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.role == "human"]

    def generated(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.role == "generated"]

    def systems(self) -> list[str]:
        return sorted({e.system_name for e in self.generated()})

    def entry(self, entry_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def base_dir(self) -> Path:
        return self.path.parent if self.path else Path(".")


@dataclass
class SurveyRecord:
    entry: ManifestEntry
    decomposition: DecomposedSurvey
    warnings: list[str] = field(default_factory=list)

    @property
    def outline(self):
        return self.decomposition.outline

    @property
    def sections(self):
        return self.decomposition.sections

    @property
    def references(self):
        return self.decomposition.references

    @property
    def citation_sentences(self):
        return self.decomposition.citation_sentences

    def missing_facets(self) -> list[str]:
        missing = []
        if not any(s.body.strip() for s in self.sections):
            missing.append("content")
        if not self.references:
            missing.append("reference")
        return missing


def _parse_entry(raw: dict, position: int) -> ManifestEntry:
    if not isinstance(raw, dict):
        raise MalformedManifest(f"entry {position}: not an object")
    missing = [f for f in _REQUIRED_FIELDS if f not in raw]
    if missing:
        raise MalformedManifest(f"entry {position}: missing fields {missing}")
    role = raw["role"]
    if role not in ROLES:
        raise MalformedManifest(
            f"entry {position} ({raw['id']!r}): role must be one of {ROLES}, got {role!r}"
        )
    system_name = raw.get("system_name")
    if role == "generated" and not system_name:
        raise MalformedManifest(
            f"entry {position} ({raw['id']!r}): generated entries need system_name"
        )
    if role == "human" and system_name:
        raise MalformedManifest(
            f"entry {position} ({raw['id']!r}): human entries must not set system_name"
        )
    return ManifestEntry(
        id=str(raw["id"]),
        title=str(raw["title"]),
        topic=str(raw.get("topic", "")),
        topic_key=str(raw["topic_key"]),
        role=role,
        document_path=str(raw["document_path"]),
        system_name=system_name,
    )


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load and validate a manifest file.

    Checks id uniqueness, the role/system_name pairing rules, and that
    every generated entry pairs with exactly one human entry (and at
    most once per system for a given topic).
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise MalformedManifest(f"{path}: expected an object with an 'entries' list")

    entries = [_parse_entry(raw, i) for i, raw in enumerate(doc["entries"])]

    seen_ids: set[str] = set()
    for entry in entries:
        if entry.id in seen_ids:
            raise DuplicateId(f"duplicate entry id {entry.id!r}")
        seen_ids.add(entry.id)

    human_keys: dict[str, int] = {}
    for entry in entries:
        if entry.role == "human":
            human_keys[entry.topic_key] = human_keys.get(entry.topic_key, 0) + 1

    seen_pairs: set[tuple[str, str]] = set()
    for entry in entries:
        if entry.role != "generated":
            continue
        count = human_keys.get(entry.topic_key, 0)
        if count != 1:
            raise UnpairedGeneratedEntry(
                f"generated entry {entry.id!r}: topic_key {entry.topic_key!r} "
                f"matches {count} human entries (need exactly 1)"
            )
        pair = (entry.system_name or "", entry.topic_key)
        if pair in seen_pairs:
            raise UnpairedGeneratedEntry(
                f"system {entry.system_name!r} has two entries for topic_key "
                f"{entry.topic_key!r}"
            )
        seen_pairs.add(pair)

    return CorpusManifest(
        corpus_id=str(doc.get("corpus_id", path.stem)),
        entries=entries,
        path=path,
    )


def pair_by_topic(manifest: CorpusManifest) -> dict[str, str]:
    """Map each generated entry id to its paired human entry id."""
    human_by_key = {e.topic_key: e.id for e in manifest.humans()}
    return {e.id: human_by_key[e.topic_key] for e in manifest.generated()}


def load_survey(entry: ManifestEntry, base_dir: str | Path = ".") -> SurveyRecord:
    """Decompose one survey document into a record.

    Deterministic: identical bytes produce an identical record. Missing
    facets are warnings, not failures; only an outline-less document is
    an error (there is nothing left to evaluate structurally).
    """
    doc_path = Path(base_dir) / entry.document_path
    if not doc_path.exists():
        raise MissingFile(f"survey document not found: {doc_path}")
    text = doc_path.read_text(encoding="utf-8")
    try:
        decomposition = decompose_document(text)
    except NoHeadings as exc:
        raise DecompositionError("outline", str(exc)) from exc

    warnings = list(decomposition.warnings)
    record = SurveyRecord(entry=entry, decomposition=decomposition, warnings=warnings)
    for facet in record.missing_facets():
        warnings.append(f"facet missing: {facet}")
    return record


def mine_topic(title: str, judge: JudgeProvider, cache: JudgeCache | None = None,
               *, temperature: float = 0.5) -> str:
    """Ask the judge for a concise topic label for a survey title.

    This is an offline curation step; evaluation always runs from topic
    labels frozen in the manifest, never from live mining.
    """
    return mine_topic_label(title, judge, cache if cache is not None else JudgeCache(),
                            temperature=temperature)


def write_back_topics(manifest: CorpusManifest, labels: dict[str, str]) -> None:
    """Write mined topic labels into the manifest file (by entry id)."""
    if manifest.path is None:
        raise MalformedManifest("manifest has no backing file to write to")
    doc = json.loads(manifest.path.read_text(encoding="utf-8"))
    for raw in doc["entries"]:
        if raw["id"] in labels:
            raw["topic"] = labels[raw["id"]]
    manifest.path.write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8",
    )
    for entry in manifest.entries:
        if entry.id in labels:
            entry.topic = labels[entry.id]
