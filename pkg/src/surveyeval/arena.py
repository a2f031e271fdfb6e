"""Pairwise win rates of generated surveys against their human pairs.

Every (pair, judge) cell runs two forced-choice calls with the
candidate order swapped, which cancels position bias: a judge that
always picks the first slot lands at exactly 0.5. Each call is one
decision; failed calls drop out of the denominator with a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import SurveyRecord
from .decompose import render_outline
from .errors import PreconditionError, SurveyEvalError
from .judgekit import JudgeCache, JudgeProvider, judge_pairwise

DIMENSIONS = ("outline", "content", "reference")


@dataclass
class ArenaResult:
    system_name: str
    dimension: str
    per_judge_win_rate: dict[str, float]
    mean: float
    std: float  # population std across judges
    decisions: int
    failures: list[str] = field(default_factory=list)


def render_facet(record: SurveyRecord, dimension: str) -> str:
    """Render one facet of a survey for side-by-side comparison."""
    if dimension == "outline":
        return render_outline(record.outline)
    if dimension == "content":
        parts = []
        for section in record.sections:
            heading = " > ".join(section.heading_path)
            parts.append(f"{heading}\n{section.body}".strip())
        return "\n\n".join(parts)
    if dimension == "reference":
        return "\n".join(f"[{r.key}] {r.text}" for r in record.references)
    raise PreconditionError(f"unknown dimension {dimension!r}")


def run_arena(
    pairs: Sequence[tuple[SurveyRecord, SurveyRecord]],
    dimension: str,
    judges: Sequence[JudgeProvider],
    cache: JudgeCache,
    *,
    system_name: str = "",
    temperature: float = 0.5,
) -> ArenaResult:
    """Win rate of the generated side, averaged across judges.

    pairs holds (generated, human) records on the same topic. Per judge,
    the rate is wins over completed decisions (2 per pair before
    failures); mean and population std aggregate across judges.
    """
    if not pairs:
        raise PreconditionError("arena needs at least one pair")
    if not judges:
        raise PreconditionError("arena needs at least one judge")
    if dimension not in DIMENSIONS:
        raise PreconditionError(f"unknown dimension {dimension!r}")

    failures: list[str] = []
    per_judge: dict[str, float] = {}
    decisions_total = 0
    for judge in judges:
        wins = 0
        decisions = 0
        for generated, human in pairs:
            topic = generated.entry.topic or generated.entry.title
            gen_text = render_facet(generated, dimension)
            hum_text = render_facet(human, dimension)
            # generated in slot A, then in slot B
            for gen_slot, a_text, b_text in (("A", gen_text, hum_text),
                                             ("B", hum_text, gen_text)):
                try:
                    winner = judge_pairwise(
                        dimension, topic, a_text, b_text, judge, cache,
                        temperature=temperature, tie_log=failures,
                    )
                except SurveyEvalError as exc:
                    failures.append(
                        f"judge={judge.model_id} pair={generated.entry.id} "
                        f"slot={gen_slot}: {exc}"
                    )
                    continue
                decisions += 1
                if winner == gen_slot:
                    wins += 1
        if decisions == 0:
            failures.append(f"judge={judge.model_id}: no completed decisions")
            continue
        per_judge[judge.model_id] = wins / decisions
        decisions_total += decisions

    if not per_judge:
        raise PreconditionError("all judges failed every decision")
    rates = list(per_judge.values())
    mean = sum(rates) / len(rates)
    variance = sum((r - mean) ** 2 for r in rates) / len(rates)
    return ArenaResult(
        system_name=system_name,
        dimension=dimension,
        per_judge_win_rate=per_judge,
        mean=mean,
        std=math.sqrt(variance),
        decisions=decisions_total,
        failures=failures,
    )
