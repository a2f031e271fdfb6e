"""Similarity factors and the two score-fusion schemes.

For each facet the generated survey's embedding units are matched to
their nearest human counterparts; the top-N cosines (clamped to [0, 1])
average into the facet's similarity factor sigma. Two fusions follow:

* human-as-perfect: value = sigma * scale_max + (1 - sigma) * score,
  anchoring at 5 on the five-point scale and 100 on the percent scale,
* balanced: value = sigma * human_score + (1 - sigma) * score.

Clamping keeps both fusions convex combinations, so fused values stay
between the system score and the anchor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .embedkit import EmbeddingUnit, VectorIndex, nearest_human_match
from .errors import EmptySide, ScaleMismatch
from .metrics import MetricScore

VANILLA = "vanilla"
BALANCED = "balanced"
HUMAN_AS_PERFECT = "human_as_perfect"
CONFIGS = (VANILLA, BALANCED, HUMAN_AS_PERFECT)

# Which facet's sigma weights which metric.
FACET_FOR_METRIC = {
    "outline_quality": "outline",
    "hierarchy": "outline",
    "content_coverage": "content",
    "content_structure": "content",
    "content_relevance": "content",
    "content_language": "content",
    "content_criticalness": "content",
    "faithfulness": "content",
    "reference_quality": "reference",
    "supportiveness": "reference",
}


@dataclass
class SimilarityFactor:
    component: str
    sigma: float
    top_n_used: int
    per_unit_matches: list[tuple[int, int, float]]  # (generated idx, human idx, cosine)


@dataclass
class FusedScore:
    config: str
    metric_id: str
    value: float
    sigma_used: float | None = None
    human_value: float | None = None


def similarity_factor(
    generated_units: Sequence[EmbeddingUnit],
    human_units: Sequence[EmbeddingUnit],
    component: str,
    n: int,
    index: VectorIndex,
) -> SimilarityFactor:
    """Mean of the top-N nearest-human cosines for one facet.

    Every generated unit contributes its best cosine against the human
    side; with fewer than N units the average runs over what exists
    instead of zero-padding (short outlines should not be punished twice).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not generated_units or not human_units:
        raise EmptySide(f"no {component} units on one side; sigma undefined")
    human_ids = {u.survey_id for u in human_units}
    if len(human_ids) != 1:
        raise ValueError(f"human units span several surveys: {sorted(human_ids)}")
    human_id = human_ids.pop()

    matches = []
    for unit in sorted(generated_units, key=lambda u: u.index):
        matched_index, sim = nearest_human_match(unit, index, human_id)
        matches.append((unit.index, matched_index, sim))
    clamped = sorted((min(1.0, max(0.0, sim)) for _, _, sim in matches), reverse=True)
    top_n_used = min(n, len(clamped))
    sigma = sum(clamped[:top_n_used]) / top_n_used
    return SimilarityFactor(
        component=component,
        sigma=sigma,
        top_n_used=top_n_used,
        per_unit_matches=matches,
    )


def fuse_human_as_perfect(system_score: MetricScore, sigma: float) -> FusedScore:
    """Fuse against a perfect anchor at the score scale's maximum."""
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"sigma {sigma} outside [0, 1]")
    value = sigma * system_score.max_value + (1.0 - sigma) * system_score.raw
    return FusedScore(
        config=HUMAN_AS_PERFECT,
        metric_id=system_score.metric_id,
        value=value,
        sigma_used=sigma,
    )


def fuse_balanced(
    system_score: MetricScore,
    human_score: MetricScore,
    sigma: float,
) -> FusedScore:
    """Fuse against the measured human score on the same metric."""
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"sigma {sigma} outside [0, 1]")
    if (system_score.metric_id, system_score.scale) != (human_score.metric_id, human_score.scale):
        raise ScaleMismatch(
            f"cannot fuse {system_score.metric_id}/{system_score.scale} "
            f"with {human_score.metric_id}/{human_score.scale}"
        )
    value = sigma * human_score.raw + (1.0 - sigma) * system_score.raw
    return FusedScore(
        config=BALANCED,
        metric_id=system_score.metric_id,
        value=value,
        sigma_used=sigma,
        human_value=human_score.raw,
    )


@dataclass
class ConfigurationResult:
    fused: list[FusedScore] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def evaluate_configurations(
    system_scores: dict[str, MetricScore | None],
    human_scores: dict[str, MetricScore | None],
    sigmas: dict[str, float | None],
) -> ConfigurationResult:
    """Emit vanilla, balanced, and human-as-perfect values per metric.

    Each metric uses its facet's sigma. A facet with no sigma (empty
    side) falls back to vanilla only; a metric the human side lacks gets
    no balanced value. Null system metrics stay null everywhere.
    """
    result = ConfigurationResult()
    for metric_id in sorted(system_scores):
        score = system_scores[metric_id]
        if score is None:
            continue
        facet = FACET_FOR_METRIC.get(metric_id)
        if facet is None:
            raise ValueError(f"metric {metric_id!r} has no facet wiring")
        result.fused.append(FusedScore(config=VANILLA, metric_id=metric_id, value=score.raw))
        sigma = sigmas.get(facet)
        if sigma is None:
            result.warnings.append(
                f"{metric_id}: sigma^{facet[0]} undefined, vanilla only"
            )
            continue
        result.fused.append(fuse_human_as_perfect(score, sigma))
        human = human_scores.get(metric_id)
        if human is None:
            result.warnings.append(
                f"{metric_id}: human score missing, balanced skipped"
            )
            continue
        result.fused.append(fuse_balanced(score, human, sigma))
    return result
