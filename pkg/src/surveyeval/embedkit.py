"""Embedding provider contract plus an exact, persisted vector index.

The index is a brute-force store: at corpus scale (tens of surveys, at
most a few hundred units each) exhaustive scan is fast, exact, and free
of tie-breaking surprises. Vectors are unit-normalized at ingestion so
cosine similarity reduces to a dot product.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import CorruptIndex, DimensionMismatch, EmptyHumanSide, MissingFile, ZeroVector

COMPONENTS = ("outline", "content", "reference")
INDEX_FORMAT = "surveyeval-index"
INDEX_VERSION = "v1"
NORM_TOLERANCE = 1e-6


class EmbeddingProvider(Protocol):
    model_id: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        """One vector per input text, same order."""
        ...


@dataclass
class EmbeddingUnit:
    survey_id: str
    component: str  # outline | content | reference
    index: int
    text: str
    vector: np.ndarray


def _as_unit_vector(values: Sequence[float]) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ZeroVector("embedding provider returned a zero vector")
    return vec / norm


def embed_texts(texts: Sequence[str], provider: EmbeddingProvider) -> list[np.ndarray]:
    """Embed texts and unit-normalize the results.

    Raises DimensionMismatch if the provider changes dimensionality
    within the batch, ZeroVector on an all-zero embedding.
    """
    if not texts or any(not t for t in texts):
        raise ValueError("texts must be a non-empty list of non-empty strings")
    raw = provider.embed(texts)
    if len(raw) != len(texts):
        raise DimensionMismatch(
            f"provider returned {len(raw)} vectors for {len(texts)} texts"
        )
    vectors = []
    for values in raw:
        if len(values) != provider.dimension:
            raise DimensionMismatch(
                f"expected dimension {provider.dimension}, got {len(values)}"
            )
        vectors.append(_as_unit_vector(values))
    return vectors


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine similarity in [-1, 1].

    Bitwise-identical vectors short-circuit to exactly 1.0; the general
    path divides by both norms and clamps float spill at the boundary.
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"cosine over shapes {va.shape} and {vb.shape}")
    if np.array_equal(va, vb):
        if not va.any():
            raise ZeroVector("cosine undefined for zero vectors")
        return 1.0
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    value = float(np.dot(va, vb) / (na * nb))
    return max(-1.0, min(1.0, value))


class VectorIndex:
    """Embedding units keyed by (survey_id, component, index)."""

    def __init__(self, dimension: int):
        self.dimension = dimension
        self._units: dict[tuple[str, str, int], EmbeddingUnit] = {}

    def __len__(self) -> int:
        return len(self._units)

    def add(self, unit: EmbeddingUnit) -> None:
        key = (unit.survey_id, unit.component, unit.index)
        if key in self._units:
            raise ValueError(f"duplicate unit key {key}")
        if unit.component not in COMPONENTS:
            raise ValueError(f"unknown component {unit.component!r}")
        if unit.vector.shape != (self.dimension,):
            raise DimensionMismatch(
                f"unit {key} has dimension {unit.vector.shape}, index wants {self.dimension}"
            )
        norm = float(np.linalg.norm(unit.vector))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ZeroVector(f"unit {key} is not unit-normalized (norm={norm})")
        self._units[key] = unit

    def units_for(self, survey_id: str, component: str) -> list[EmbeddingUnit]:
        found = [u for (sid, comp, _), u in self._units.items()
                 if sid == survey_id and comp == component]
        return sorted(found, key=lambda u: u.index)

    def all_units(self) -> list[EmbeddingUnit]:
        return [self._units[k] for k in sorted(self._units)]


def nearest_human_match(
    unit: EmbeddingUnit,
    index: VectorIndex,
    human_survey_id: str,
) -> tuple[int, float]:
    """Exhaustively scan same-component human units for the cosine argmax.

    Ties break toward the lowest matched index so results are stable.
    Raises EmptyHumanSide when the human survey has no such units.
    """
    candidates = index.units_for(human_survey_id, unit.component)
    if not candidates:
        raise EmptyHumanSide(
            f"no {unit.component} units for human survey {human_survey_id!r}"
        )
    best_index = -1
    best_sim = -2.0
    for candidate in candidates:  # ascending index: first strict max wins
        sim = cosine(unit.vector, candidate.vector)
        if sim > best_sim:
            best_sim = sim
            best_index = candidate.index
    return best_index, best_sim


def _encode_vector(vector: np.ndarray) -> str:
    return base64.b64encode(vector.astype("<f8").tobytes()).decode("ascii")


def _decode_vector(blob: str, dimension: int) -> np.ndarray:
    data = base64.b64decode(blob.encode("ascii"))
    vec = np.frombuffer(data, dtype="<f8")
    if vec.shape != (dimension,):
        raise CorruptIndex("vector payload has wrong length")
    return vec.copy()


def _units_payload(index: VectorIndex) -> list[dict]:
    return [
        {
            "survey_id": u.survey_id,
            "component": u.component,
            "index": u.index,
            "text": u.text,
            "vector": _encode_vector(u.vector),
        }
        for u in index.all_units()
    ]


def _checksum(units_payload: list[dict]) -> str:
    canonical = json.dumps(units_payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Persist the index as versioned JSON; identical indexes serialize
    to identical bytes (vectors are base64 of little-endian float64)."""
    units = _units_payload(index)
    doc = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "dimension": index.dimension,
        "unit_count": len(units),
        "checksum": _checksum(units),
        "units": units,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_index(path: str | Path) -> VectorIndex:
    """Load a saved index, verifying header and checksum."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"index file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptIndex(f"unreadable index file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != INDEX_FORMAT:
        raise CorruptIndex(f"{path} is not a {INDEX_FORMAT} file")
    if doc.get("version") != INDEX_VERSION:
        raise CorruptIndex(f"unsupported index version {doc.get('version')!r}")
    units = doc.get("units")
    if not isinstance(units, list) or len(units) != doc.get("unit_count"):
        raise CorruptIndex("unit count does not match header")
    if _checksum(units) != doc.get("checksum"):
        raise CorruptIndex("checksum failure")
    index = VectorIndex(dimension=int(doc["dimension"]))
    for record in units:
        index.add(EmbeddingUnit(
            survey_id=record["survey_id"],
            component=record["component"],
            index=int(record["index"]),
            text=record["text"],
            vector=_decode_vector(record["vector"], index.dimension),
        ))
    return index


def index_digest(path: str | Path) -> str:
    """Digest of the index file bytes, for report traceability."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
