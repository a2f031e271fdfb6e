"""Quantitative facet metrics and score normalization.

Three metric families:

* hierarchy: depth-weighted average of per-parent child-coherence
  proportions over the outline tree, reported 0-100,
* faithfulness: percentage of (sentence, cited reference) instances the
  judge marks as supported,
* supportiveness: percentage of bibliography entries judged relevant to
  the survey topic.

Scores are kept at full precision internally; rounding happens only in
report rendering. Percent-scale values normalize onto the 0-5 scale by
dividing by 20.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .decompose import CitationSentence, OutlineNode, OutlineTree, ReferenceEntry
from .errors import InvalidDepth
from .judgekit import JudgeCache, JudgeProvider, judge_children_coherence, \
    judge_citation_support, judge_reference_relevance

FIVE_POINT = "five_point"
PERCENT = "percent"


@dataclass
class MetricScore:
    metric_id: str
    scale: str  # five_point | percent
    raw: float

    def __post_init__(self):
        if self.scale not in (FIVE_POINT, PERCENT):
            raise ValueError(f"unknown scale {self.scale!r}")
        hi = 5.0 if self.scale == FIVE_POINT else 100.0
        if not 0.0 <= self.raw <= hi:
            raise ValueError(f"{self.metric_id}: raw {self.raw} outside [0, {hi}]")

    @property
    def normalized(self) -> float:
        return normalize_score(self.raw, self.scale)

    @property
    def max_value(self) -> float:
        return 5.0 if self.scale == FIVE_POINT else 100.0


def normalize_score(raw: float, scale: str) -> float:
    """Map onto the 0-5 scale: percent scores divide by 20, five-point
    scores pass through."""
    if scale == PERCENT:
        return raw / 20.0
    if scale == FIVE_POINT:
        return raw
    raise ValueError(f"unknown scale {scale!r}")


def display_value(value: float, decimals: int = 2) -> str:
    """Round half-up at display time only."""
    q = Decimal(1).scaleb(-decimals)
    return str(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def node_weight(d: int, d_max: int) -> float:
    """Depth weight (d_max - d + 1) / d_max; depth 0 is the virtual root."""
    if d_max < 1:
        raise InvalidDepth(f"d_max must be >= 1, got {d_max}")
    if d < 0 or d > d_max:
        raise InvalidDepth(f"depth {d} outside [0, {d_max}]")
    return (d_max - d + 1) / d_max


@dataclass
class ParentRecord:
    path: list[str]  # titles from the top down to this parent ([] for root)
    depth: int
    weight: float
    verdicts: list[bool]
    local_score: float
    diagnostic: str | None = None


@dataclass
class HierarchyBreakdown:
    d_max: int
    parents: list[ParentRecord]
    score: float  # H, 0-100

    def as_metric(self) -> MetricScore:
        return MetricScore(metric_id="hierarchy", scale=PERCENT, raw=self.score)


def hierarchy_from_verdicts(
    parent_info: Sequence[tuple[int, Sequence[bool]]],
    d_max: int,
) -> float:
    """H from (depth, verdicts) pairs: 100 * sum(L_i w_i) / sum(w_i)."""
    num = 0.0
    den = 0.0
    for depth, verdicts in parent_info:
        w = node_weight(depth, d_max)
        local = sum(verdicts) / len(verdicts)
        num += local * w
        den += w
    if den == 0.0:
        raise InvalidDepth("no parent nodes to score")
    return 100.0 * num / den


def hierarchy_score(
    tree: OutlineTree,
    judge: JudgeProvider,
    cache: JudgeCache,
    *,
    topic: str = "",
    temperature: float = 0.5,
) -> HierarchyBreakdown:
    """Judge every parent's children and fold into the weighted score.

    The virtual root participates as a parent judged against the survey
    topic, so flat outlines are scoreable. A parent whose verdict stays
    unparseable contributes a zero local score with a diagnostic.
    """
    parents = tree.parents()
    if not parents:
        raise InvalidDepth("outline has no parent nodes")
    d_max = tree.max_depth
    paths = _parent_paths(tree)
    records = []
    for parent in parents:
        path = paths[id(parent)]
        children = [c.title for c in parent.children]
        verdicts, diagnostic = judge_children_coherence(
            path, children, judge, cache, topic=topic, temperature=temperature,
        )
        records.append(ParentRecord(
            path=path,
            depth=parent.depth,
            weight=node_weight(parent.depth, d_max),
            verdicts=verdicts,
            local_score=sum(verdicts) / len(verdicts),
            diagnostic=diagnostic,
        ))
    score = hierarchy_from_verdicts([(r.depth, r.verdicts) for r in records], d_max)
    return HierarchyBreakdown(d_max=d_max, parents=records, score=score)


def _parent_paths(tree: OutlineTree) -> dict[int, list[str]]:
    paths = {id(tree.root): []}

    def rec(node: OutlineNode, path: list[str]):
        for child in node.children:
            child_path = path + [child.title]
            paths[id(child)] = child_path
            rec(child, child_path)

    rec(tree.root, [])
    return paths


@dataclass
class SupportVerdict:
    section_index: int
    sentence: str
    keys: list[int]
    verdicts: list[bool]


@dataclass
class FaithfulnessResult:
    score: MetricScore | None
    verdicts: list[SupportVerdict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def supported(self) -> int:
        return sum(sum(v.verdicts) for v in self.verdicts)

    @property
    def total(self) -> int:
        return sum(len(v.verdicts) for v in self.verdicts)


def faithfulness_score(
    citation_sentences: Sequence[CitationSentence],
    references: Sequence[ReferenceEntry],
    judge: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
) -> FaithfulnessResult:
    """Supported share of (sentence, cited reference) instances.

    Instances are counted per pair, so a sentence citing three entries
    contributes three. No citation instances at all makes the metric
    null rather than zero.
    """
    by_key = {r.key: r for r in references}
    verdict_rows: list[SupportVerdict] = []
    for sentence in citation_sentences:
        keys = [k for k in sentence.cited_keys if k in by_key]
        if not keys:
            continue
        texts = [by_key[k].text for k in keys]
        verdicts = judge_citation_support(
            sentence.sentence, texts, judge, cache, temperature=temperature,
        )
        verdict_rows.append(SupportVerdict(
            section_index=sentence.section_index,
            sentence=sentence.sentence,
            keys=keys,
            verdicts=verdicts,
        ))
    total = sum(len(v.verdicts) for v in verdict_rows)
    if total == 0:
        return FaithfulnessResult(
            score=None, verdicts=[],
            warnings=["no citation instances; faithfulness is null"],
        )
    supported = sum(sum(v.verdicts) for v in verdict_rows)
    score = MetricScore("faithfulness", PERCENT, 100.0 * supported / total)
    return FaithfulnessResult(score=score, verdicts=verdict_rows)


@dataclass
class RelevanceVerdict:
    key: int
    relevant: bool


@dataclass
class SupportivenessResult:
    score: MetricScore | None
    verdicts: list[RelevanceVerdict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def supportiveness_score(
    references: Sequence[ReferenceEntry],
    topic: str,
    judge: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
) -> SupportivenessResult:
    """Relevant share of bibliography entries; null on an empty bibliography."""
    if not references:
        return SupportivenessResult(
            score=None, warnings=["empty bibliography; supportiveness is null"],
        )
    verdicts = [
        RelevanceVerdict(
            key=ref.key,
            relevant=judge_reference_relevance(
                topic, ref.text, judge, cache, temperature=temperature,
            ),
        )
        for ref in references
    ]
    relevant = sum(1 for v in verdicts if v.relevant)
    score = MetricScore("supportiveness", PERCENT, 100.0 * relevant / len(verdicts))
    return SupportivenessResult(score=score, verdicts=verdicts)
