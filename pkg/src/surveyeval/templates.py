"""Frozen prompt templates for the judge tasks.

Templates are versioned by id ("kind/v1") and shipped with the package
so that runs are replayable; the ``criteria`` pipeline command can draft
replacement grading criteria, which are injected through the
``{criteria}`` slot without touching the template text itself.

Every template instructs the judge to answer inside a fenced code block
with one token per line; verdict parsing reads only that block.
"""

from __future__ import annotations

ANSWER_RULES = 'Reply with a fenced code block (```) containing only the answer, one item per line.'

TEMPLATES: dict[str, str] = {
    "children_coherence/v1": (
        "You are reviewing the outline of an academic survey.\n"
        "Parent section: {parent}\n"
        "Its immediate subsections, in order:\n"
        "{children_block}\n\n"
        "For each subsection, decide whether it logically follows from the parent\n"
        "section: answer yes if it belongs under this parent, no otherwise.\n"
        f"{ANSWER_RULES}\n"
        'The block must contain exactly {n} lines, each "yes" or "no".{attempt_note}'
    ),
    "outline_quality/v1": (
        "Topic: {topic}\n"
        "Survey outline:\n"
        "{outline}\n\n"
        "{criteria}\n"
        "Rate the overall quality of this outline as an integer from 1 (poor) to 5 (excellent).\n"
        f"{ANSWER_RULES}\n"
        "The block must contain a single integer from 1 to 5.{attempt_note}"
    ),
    "content_quality/v1": (
        "Topic: {topic}\n"
        "Survey content:\n"
        "{content}\n\n"
        "Score the survey on five dimensions, each an integer from 1 (poor) to 5 (excellent):\n"
        "- Coverage: breadth and completeness in addressing the topic's core areas\n"
        "- Structure: logical organization and flow of the material\n"
        "- Relevance: how well the material stays on the survey topic\n"
        "- Language: clarity and professionalism of the prose\n"
        "- Criticalness: depth of critical analysis and insight\n\n"
        f"{ANSWER_RULES}\n"
        "The block must contain exactly five integers, one per line, in the order\n"
        "Coverage, Structure, Relevance, Language, Criticalness.{attempt_note}"
    ),
    "reference_quality/v1": (
        "Topic: {topic}\n"
        "Bibliography ({n} entries):\n"
        "{references}\n\n"
        "{criteria}\n"
        "Rate the overall quality of this bibliography as an integer from 1 (poor) to 5 (excellent).\n"
        f"{ANSWER_RULES}\n"
        "The block must contain a single integer from 1 to 5.{attempt_note}"
    ),
    "citation_support/v1": (
        "A sentence from a survey makes the following claim:\n"
        "{sentence}\n\n"
        "It cites these references:\n"
        "{references_block}\n\n"
        "For each reference, decide whether it plausibly supports the claim.\n"
        f"{ANSWER_RULES}\n"
        'The block must contain exactly {n} lines, each "yes" or "no".{attempt_note}'
    ),
    "reference_relevance/v1": (
        "Survey topic: {topic}\n"
        "Bibliography entry:\n"
        "{reference}\n\n"
        "Is this entry relevant to the survey topic?\n"
        f"{ANSWER_RULES}\n"
        'The block must contain a single line, "yes" or "no".{attempt_note}'
    ),
    "pairwise/v1": (
        "Two candidate survey {dimension} renderings for the topic: {topic}\n\n"
        "Candidate A:\n{candidate_a}\n\n"
        "Candidate B:\n{candidate_b}\n\n"
        "Which candidate is better overall? You must pick exactly one; ties are not allowed.\n"
        f"{ANSWER_RULES}\n"
        'The block must contain a single line, "A" or "B".{attempt_note}'
    ),
    "topic_label/v1": (
        "Survey title: {title}\n\n"
        "Write a concise topic label naming the research area this survey covers,\n"
        "suitable as the prompt for generating a survey on the same subject.\n"
        f"{ANSWER_RULES}\n"
        "The block must contain the label on a single line.{attempt_note}"
    ),
}

DEFAULT_TEMPLATE_IDS = {
    "children_coherence": "children_coherence/v1",
    "outline_quality": "outline_quality/v1",
    "content_quality": "content_quality/v1",
    "reference_quality": "reference_quality/v1",
    "citation_support": "citation_support/v1",
    "reference_relevance": "reference_relevance/v1",
    "pairwise": "pairwise/v1",
    "topic_label": "topic_label/v1",
}

# Default grading criteria for the {criteria} slots. "criteria generate"
# writes a JSON override file with the same keys.
DEFAULT_CRITERIA = {
    "outline_quality": (
        "Consider the organization of sections, their logical progression, "
        "how completely they span the topic, and the balance of depth across parts."
    ),
    "reference_quality": (
        "Consider how relevant the entries are to the topic, how diverse the "
        "sources are, and whether they are adequate to support a full survey."
    ),
}
