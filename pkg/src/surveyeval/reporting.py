"""Report assembly, aggregation, rendering, and the audit recount.

The report keeps raw-scale values at full precision; rounding happens
only when rendering markdown. Percent metrics render as
``normalized_{raw}`` with both parts rounded half-up to two decimals.

The corpus "Avg." column is artifact-defined (the unweighted mean of
all non-null normalized metrics) and labeled as such in the report,
since no aggregation rule is implied by the per-metric values alone.
"""

from __future__ import annotations

import json
from pathlib import Path

from .metrics import FIVE_POINT, PERCENT, MetricScore, display_value, \
    hierarchy_from_verdicts, normalize_score
from .simweight import BALANCED, CONFIGS, FACET_FOR_METRIC, HUMAN_AS_PERFECT, \
    VANILLA, evaluate_configurations

REPORT_SCHEMA = "surveyeval-report/v1"
AVG_DEFINITION = (
    "unweighted mean of all non-null normalized (0-5) metrics; "
    "artifact-defined aggregate"
)

METRIC_ORDER = (
    "outline_quality", "hierarchy",
    "content_coverage", "content_structure", "content_relevance",
    "content_language", "content_criticalness", "faithfulness",
    "reference_quality", "supportiveness",
)
METRIC_LABELS = {
    "outline_quality": "Outline L1",
    "hierarchy": "*Hierarchy",
    "content_coverage": "Content L1",
    "content_structure": "Content L2",
    "content_relevance": "Content L3",
    "content_language": "Content L4",
    "content_criticalness": "Content L5",
    "faithfulness": "*Faithfulness",
    "reference_quality": "Reference L1",
    "supportiveness": "*Supportiveness",
}
CONFIG_LABELS = {
    VANILLA: "Vanilla",
    BALANCED: "Balanced",
    HUMAN_AS_PERFECT: "Human-as-Perfect",
}


def survey_row(evaluation, paired_human_id: str | None = None,
               sigmas: dict | None = None, sigma_details: dict | None = None,
               human_scores: dict | None = None,
               extra_warnings: list[str] | None = None) -> dict:
    """One report entry for a survey; generated surveys carry fusions."""
    entry = evaluation.record.entry
    scores = evaluation.scores
    warnings = list(evaluation.warnings) + list(extra_warnings or [])

    metrics: dict[str, dict] = {}
    if entry.role == "generated":
        fused = evaluate_configurations(scores, human_scores or {}, sigmas or {})
        warnings.extend(fused.warnings)
        by_metric: dict[str, dict[str, float]] = {}
        for item in fused.fused:
            by_metric.setdefault(item.metric_id, {})[item.config] = item.value
        for metric_id in METRIC_ORDER:
            score = scores.get(metric_id)
            values = {config: None for config in CONFIGS}
            if score is not None:
                values.update(by_metric.get(metric_id, {}))
            metrics[metric_id] = _metric_cell(metric_id, values)
    else:
        for metric_id in METRIC_ORDER:
            score = scores.get(metric_id)
            values = {config: None for config in CONFIGS}
            if score is not None:
                values[VANILLA] = score.raw
            metrics[metric_id] = _metric_cell(metric_id, values)

    row = {
        "survey_id": entry.id,
        "role": entry.role,
        "system_name": entry.system_name,
        "topic": entry.topic or entry.title,
        "topic_key": entry.topic_key,
        "paired_human_id": paired_human_id,
        "warnings": sorted(warnings),
        "sigmas": sigmas or {"outline": None, "content": None, "reference": None},
        "sigma_details": sigma_details or {},
        "metrics": metrics,
        "avg": {config: _avg_of(metrics, config) for config in CONFIGS},
    }
    return row


def _metric_cell(metric_id: str, values: dict[str, float | None]) -> dict:
    scale = _scale_of(metric_id)
    return {
        "scale": scale,
        "values": values,
        "normalized": {
            config: (None if v is None else normalize_score(v, scale))
            for config, v in values.items()
        },
    }


def _scale_of(metric_id: str) -> str:
    return PERCENT if metric_id in ("hierarchy", "faithfulness", "supportiveness") \
        else FIVE_POINT


def _avg_of(metrics: dict[str, dict], config: str) -> float | None:
    values = [cell["normalized"][config] for cell in metrics.values()
              if cell["normalized"][config] is not None]
    if not values:
        return None
    return sum(values) / len(values)


def assemble_report(corpus_id: str, survey_rows: list[dict], config_digest: str,
                    cache_digest: str, index_file_digest: str) -> dict:
    rows = sorted(survey_rows, key=lambda r: r["survey_id"])
    systems = sorted({r["system_name"] for r in rows if r["role"] == "generated"})
    aggregates = {
        system: _aggregate([r for r in rows if r["system_name"] == system], CONFIGS)
        for system in systems
    }
    human_rows = [r for r in rows if r["role"] == "human"]
    return {
        "schema": REPORT_SCHEMA,
        "corpus_id": corpus_id,
        "config_digest": config_digest,
        "cache_digest": cache_digest,
        "index_digest": index_file_digest,
        "avg_definition": AVG_DEFINITION,
        "surveys": rows,
        "systems": aggregates,
        "human": _aggregate(human_rows, (VANILLA,)),
    }


def _aggregate(rows: list[dict], configs) -> dict:
    per_metric: dict[str, dict] = {}
    for metric_id in METRIC_ORDER:
        per_metric[metric_id] = {}
        for config in configs:
            raws = []
            norms = []
            for row in rows:
                value = row["metrics"][metric_id]["values"][config]
                if value is not None:
                    raws.append(value)
                    norms.append(row["metrics"][metric_id]["normalized"][config])
            per_metric[metric_id][config] = {
                "count": len(raws),
                "mean_raw": sum(raws) / len(raws) if raws else None,
                "mean_normalized": sum(norms) / len(norms) if norms else None,
            }
    avg = {}
    for config in configs:
        means = [per_metric[m][config]["mean_normalized"] for m in METRIC_ORDER
                 if per_metric[m][config]["mean_normalized"] is not None]
        avg[config] = sum(means) / len(means) if means else None
    return {"count": len(rows), "per_metric": per_metric, "avg": avg}


# --- markdown rendering -----------------------------------------------------


def _cell(scale: str, raw: float | None, normalized: float | None) -> str:
    if raw is None:
        return "-"
    if scale == PERCENT:
        return f"{display_value(normalized)}_{{{display_value(raw)}}}"
    return display_value(raw)


def render_markdown(report: dict) -> str:
    """Corpus table: one row per system and configuration, then the
    human vanilla row."""
    header = ["System", "Metric", "Avg."] + [METRIC_LABELS[m] for m in METRIC_ORDER]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "---|" * len(header),
    ]

    def row_cells(aggregate: dict, config: str) -> list[str]:
        cells = []
        avg = aggregate["avg"][config]
        cells.append("-" if avg is None else display_value(avg))
        for metric_id in METRIC_ORDER:
            stats = aggregate["per_metric"][metric_id][config]
            cells.append(_cell(_scale_of(metric_id), stats["mean_raw"],
                               stats["mean_normalized"]))
        return cells

    for system in sorted(report["systems"]):
        aggregate = report["systems"][system]
        for config in (VANILLA, BALANCED, HUMAN_AS_PERFECT):
            cells = row_cells(aggregate, config)
            lines.append(f"| {system} | {CONFIG_LABELS[config]} | " + " | ".join(cells) + " |")
    if report["human"]["count"]:
        cells = row_cells(report["human"], VANILLA)
        lines.append("| Human | Vanilla | " + " | ".join(cells) + " |")

    meta = [
        "",
        f"Avg. column: {report['avg_definition']}.",
        f"Config digest: `{report['config_digest']}`",
        f"Cache digest: `{report['cache_digest']}`",
        f"Index digest: `{report['index_digest']}`",
    ]
    return "\n".join(lines + meta) + "\n"


def render_arena_markdown(arena: dict) -> str:
    """Win-rate table: one row per system, mean +/- std per dimension."""
    dims = ("outline", "content", "reference")
    by_system: dict[str, dict[str, dict]] = {}
    for result in arena["results"]:
        by_system.setdefault(result["system"], {})[result["dimension"]] = result
    lines = [
        "| System | " + " | ".join(d.capitalize() for d in dims) + " |",
        "|" + "---|" * (len(dims) + 1),
    ]
    for system in sorted(by_system):
        cells = []
        for dim in dims:
            result = by_system[system].get(dim)
            if result is None:
                cells.append("-")
            else:
                cells.append(f"{display_value(result['mean'])} ± {display_value(result['std'])}")
        lines.append(f"| {system} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


# --- audit recount ------------------------------------------------------------


def verify_report(report: dict, verdicts_dir: Path, tolerance: float = 1e-9) -> dict:
    """Recompute every value in the report from verdict logs and stored
    match lists. Returns {checked, mismatches}."""
    mismatches: list[str] = []
    checked = 0
    human_vanilla = {
        row["survey_id"]: row for row in report["surveys"] if row["role"] == "human"
    }

    for row in report["surveys"]:
        survey_id = row["survey_id"]
        log_path = Path(verdicts_dir) / f"{survey_id}.json"
        if not log_path.exists():
            mismatches.append(f"{survey_id}: verdict log missing")
            continue
        log = json.loads(log_path.read_text(encoding="utf-8"))

        def check(name: str, reported, recomputed):
            nonlocal checked
            checked += 1
            if reported is None and recomputed is None:
                return
            if reported is None or recomputed is None or \
                    abs(reported - recomputed) > tolerance:
                mismatches.append(
                    f"{survey_id}: {name} reported={reported} recomputed={recomputed}"
                )

        vanilla = {m: row["metrics"][m]["values"][VANILLA] for m in METRIC_ORDER}

        parents = log.get("hierarchy_parents") or []
        if parents:
            recomputed_h = hierarchy_from_verdicts(
                [(p["depth"], p["verdicts"]) for p in parents], log["d_max"],
            )
            check("hierarchy", vanilla["hierarchy"], recomputed_h)

        support_rows = log.get("citation_support") or []
        total = sum(len(r["verdicts"]) for r in support_rows)
        if total:
            supported = sum(sum(r["verdicts"]) for r in support_rows)
            check("faithfulness", vanilla["faithfulness"], 100.0 * supported / total)
        else:
            check("faithfulness", vanilla["faithfulness"], None)

        relevance_rows = log.get("reference_relevance") or []
        if relevance_rows:
            relevant = sum(1 for r in relevance_rows if r["relevant"])
            check("supportiveness", vanilla["supportiveness"],
                  100.0 * relevant / len(relevance_rows))
        else:
            check("supportiveness", vanilla["supportiveness"], None)

        check("outline_quality", vanilla["outline_quality"], log.get("outline_quality"))
        content = log.get("content_quality")
        for i, metric_id in enumerate(("content_coverage", "content_structure",
                                       "content_relevance", "content_language",
                                       "content_criticalness")):
            check(metric_id, vanilla[metric_id], content[i] if content else None)
        check("reference_quality", vanilla["reference_quality"],
              log.get("reference_quality"))

        if row["role"] != "generated":
            continue

        # sigma from the stored per-unit match lists
        sigmas = {}
        for facet, details in (row.get("sigma_details") or {}).items():
            if details is None:
                sigmas[facet] = None
                continue
            clamped = sorted(
                (min(1.0, max(0.0, c)) for _, _, c in details["matches"]),
                reverse=True,
            )
            used = details["top_n_used"]
            recomputed_sigma = sum(clamped[:used]) / used
            sigmas[facet] = recomputed_sigma
            check(f"sigma^{facet[0]}", row["sigmas"][facet], recomputed_sigma)

        human_row = human_vanilla.get(row["paired_human_id"])
        for metric_id in METRIC_ORDER:
            cell = row["metrics"][metric_id]
            q = cell["values"][VANILLA]
            facet = FACET_FOR_METRIC[metric_id]
            sigma = sigmas.get(facet)
            if q is None or sigma is None:
                check(f"{metric_id}.hp", cell["values"][HUMAN_AS_PERFECT], None)
                check(f"{metric_id}.balanced", cell["values"][BALANCED], None)
                continue
            q_max = 100.0 if _scale_of(metric_id) == PERCENT else 5.0
            check(f"{metric_id}.hp", cell["values"][HUMAN_AS_PERFECT],
                  sigma * q_max + (1.0 - sigma) * q)
            q_human = None
            if human_row is not None:
                q_human = human_row["metrics"][metric_id]["values"][VANILLA]
            if q_human is None:
                check(f"{metric_id}.balanced", cell["values"][BALANCED], None)
            else:
                check(f"{metric_id}.balanced", cell["values"][BALANCED],
                      sigma * q_human + (1.0 - sigma) * q)

    return {"checked": checked, "mismatches": mismatches}
