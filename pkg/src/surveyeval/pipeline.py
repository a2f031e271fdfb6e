"""Stage orchestration: ingest, decompose, embed, evaluate, arena, verify.

Stages are order-enforcing and file-based. ``decompose`` writes one JSON
per survey under the work dir, ``embed`` persists the vector index from
those files, ``evaluate`` reads both and writes the report plus one
verdict log per survey. Nothing re-runs an earlier stage implicitly: a
missing input is a PipelineOrderError, never a silent rebuild.

Every output is deterministic for a fixed (config, seed, cache): dict
keys are dumped sorted, surveys are processed in sorted id order, and no
timestamps enter any report.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import reporting
from .arena import DIMENSIONS, run_arena
from .config import PipelineConfig
from .corpus import CorpusManifest, ManifestEntry, SurveyRecord, load_manifest, \
    load_survey, mine_topic, pair_by_topic, write_back_topics
from .decompose import decomposition_from_dict, decomposition_to_dict, render_outline
from .embedkit import EmbeddingUnit, VectorIndex, embed_texts, index_digest, \
    load_index, save_index
from .errors import EmptySide, PipelineOrderError, PreconditionError
from .judgekit import JudgeCache, judge_content_quality, judge_outline_quality, \
    judge_reference_quality
from .metrics import FIVE_POINT, PERCENT, MetricScore, faithfulness_score, \
    hierarchy_score, supportiveness_score
from .mocks import MockEmbeddingProvider, MockJudgeProvider, MockScript
from .providers import HttpEmbeddingProvider, HttpJudgeProvider, \
    OfflineEmbeddingProvider, OfflineJudgeProvider
from .simweight import FACET_FOR_METRIC, similarity_factor

METRIC_SCALES = {
    "outline_quality": FIVE_POINT,
    "hierarchy": PERCENT,
    "content_coverage": FIVE_POINT,
    "content_structure": FIVE_POINT,
    "content_relevance": FIVE_POINT,
    "content_language": FIVE_POINT,
    "content_criticalness": FIVE_POINT,
    "faithfulness": PERCENT,
    "reference_quality": FIVE_POINT,
    "supportiveness": PERCENT,
}
CONTENT_DIM_IDS = (
    "content_coverage", "content_structure", "content_relevance",
    "content_language", "content_criticalness",
)


def build_judge_provider(config: PipelineConfig):
    if config.offline:
        model_id = (f"mock-judge-{config.seed}" if config.judge_provider == "mock"
                    else config.judge_model)
        return OfflineJudgeProvider(model_id, config.context_budget)
    if config.judge_provider == "mock":
        script = MockScript(seed=config.seed)
        if config.mock_script_path:
            script = MockScript.from_file(config.mock_script_path)
        return MockJudgeProvider(script, context_budget=config.context_budget)
    if config.judge_provider == "http":
        return HttpJudgeProvider(config.judge_base_url, config.judge_model,
                                 context_budget=config.context_budget)
    raise PreconditionError(f"unknown judge provider {config.judge_provider!r}")


def build_embed_provider(config: PipelineConfig):
    if config.offline:
        model_id = (f"mock-embed-{config.seed}-d{config.embed_dimension}"
                    if config.embed_provider == "mock" else config.embed_model)
        return OfflineEmbeddingProvider(model_id, config.embed_dimension)
    if config.embed_provider == "mock":
        return MockEmbeddingProvider(seed=config.seed, dimension=config.embed_dimension)
    if config.embed_provider == "http":
        return HttpEmbeddingProvider(config.embed_base_url, config.embed_model,
                                     config.embed_dimension)
    raise PreconditionError(f"unknown embed provider {config.embed_provider!r}")


def open_cache(config: PipelineConfig) -> JudgeCache:
    return JudgeCache(config.cache_path)


# --- ingest ---------------------------------------------------------------


def run_ingest(config: PipelineConfig, manifest_path: str | Path,
               mine_topics: bool = False) -> dict:
    """Validate the manifest and every listed document.

    With ``mine_topics`` set, entries with an empty topic get a label
    mined from their title and written back into the manifest file.
    """
    manifest = load_manifest(manifest_path)
    pairs = pair_by_topic(manifest)
    warnings: list[str] = []
    for entry in sorted(manifest.entries, key=lambda e: e.id):
        record = load_survey(entry, manifest.base_dir())
        warnings.extend(f"{entry.id}: {w}" for w in record.warnings)

    if mine_topics:
        judge = build_judge_provider(config)
        cache = open_cache(config)
        labels = {}
        for entry in manifest.entries:
            if not entry.topic:
                labels[entry.id] = mine_topic(entry.title, judge, cache,
                                              temperature=config.temperature)
        if labels:
            write_back_topics(manifest, labels)

    pairs_per_system: dict[str, int] = {}
    for gen in manifest.generated():
        pairs_per_system[gen.system_name] = pairs_per_system.get(gen.system_name, 0) + 1
    return {
        "corpus_id": manifest.corpus_id,
        "entries": len(manifest.entries),
        "human_count": len(manifest.humans()),
        "generated_count": len(manifest.generated()),
        "pair_count": len(pairs),
        "pairs_per_system": dict(sorted(pairs_per_system.items())),
        "warnings": warnings,
    }


# --- decompose ------------------------------------------------------------


def run_decompose(config: PipelineConfig, manifest_path: str | Path) -> dict:
    """Write one decomposition JSON per survey; reruns are byte-identical."""
    manifest = load_manifest(manifest_path)
    out_dir = config.decompose_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for entry in sorted(manifest.entries, key=lambda e: e.id):
        record = load_survey(entry, manifest.base_dir())
        doc = {
            "survey_id": entry.id,
            "role": entry.role,
            "system_name": entry.system_name,
            "topic": entry.topic,
            "topic_key": entry.topic_key,
            "title": entry.title,
            **decomposition_to_dict(record.decomposition),
        }
        path = out_dir / f"{entry.id}.json"
        path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")
        files.append(str(path))
    return {"surveys": len(files), "files": files, "out_dir": str(out_dir)}


def _load_decomposition(config: PipelineConfig, entry: ManifestEntry) -> SurveyRecord:
    path = config.decompose_dir / f"{entry.id}.json"
    if not path.exists():
        raise PipelineOrderError(
            f"no decomposition for {entry.id!r} at {path}; run 'decompose' first"
        )
    doc = json.loads(path.read_text(encoding="utf-8"))
    decomposition = decomposition_from_dict(doc)
    return SurveyRecord(entry=entry, decomposition=decomposition,
                        warnings=list(decomposition.warnings))


def _load_records(config: PipelineConfig, manifest: CorpusManifest) -> dict[str, SurveyRecord]:
    return {
        entry.id: _load_decomposition(config, entry)
        for entry in sorted(manifest.entries, key=lambda e: e.id)
    }


# --- embed ----------------------------------------------------------------


def _units_of(record: SurveyRecord) -> list[tuple[str, int, str]]:
    """(component, index, text) for every embeddable unit of a survey."""
    units = []
    for i, pathdoc in enumerate(record.decomposition.outline_paths):
        units.append(("outline", i, pathdoc.rendered_text))
    for section in record.sections:
        if section.body.strip():
            units.append(("content", section.index, section.body))
    for ref in record.references:
        units.append(("reference", ref.index, ref.text))
    return units


def run_embed(config: PipelineConfig, manifest_path: str | Path) -> dict:
    """Embed every unit of every survey and persist the index."""
    manifest = load_manifest(manifest_path)
    records = _load_records(config, manifest)
    provider = build_embed_provider(config)

    groups = []  # (survey_id, [(component, index, text), ...])
    for survey_id in sorted(records):
        units = _units_of(records[survey_id])
        if units:
            groups.append((survey_id, units))

    def embed_group(group):
        survey_id, units = group
        vectors = embed_texts([text for _, _, text in units], provider)
        return survey_id, units, vectors

    index = VectorIndex(dimension=provider.dimension)
    with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
        for survey_id, units, vectors in pool.map(embed_group, groups):
            for (component, unit_index, text), vector in zip(units, vectors):
                index.add(EmbeddingUnit(
                    survey_id=survey_id, component=component,
                    index=unit_index, text=text, vector=vector,
                ))
    save_index(index, config.index_path)
    return {
        "dimension": index.dimension,
        "unit_count": len(index),
        "index_path": str(config.index_path),
        "index_digest": index_digest(config.index_path),
    }


# --- evaluate ---------------------------------------------------------------


@dataclass
class SurveyEvaluation:
    record: SurveyRecord
    scores: dict[str, MetricScore | None]
    verdict_log: dict
    warnings: list[str]


def _topic_of(entry: ManifestEntry) -> str:
    return entry.topic or entry.title


def _content_text(record: SurveyRecord) -> str:
    parts = []
    for section in record.sections:
        heading = " > ".join(section.heading_path)
        parts.append(f"{heading}\n{section.body}".strip())
    return "\n\n".join(parts)


def evaluate_survey(record: SurveyRecord, judge, cache: JudgeCache,
                    temperature: float,
                    criteria: dict[str, str] | None = None) -> SurveyEvaluation:
    """All vanilla facet metrics for one survey, plus its verdict log."""
    criteria = criteria or {}
    entry = record.entry
    topic = _topic_of(entry)
    scores: dict[str, MetricScore | None] = {}
    warnings = list(record.warnings)
    log: dict = {"survey_id": entry.id, "topic": topic}

    breakdown = hierarchy_score(record.outline, judge, cache,
                                topic=topic, temperature=temperature)
    scores["hierarchy"] = breakdown.as_metric()
    log["d_max"] = breakdown.d_max
    log["hierarchy_parents"] = [
        {"path": r.path, "depth": r.depth, "weight": r.weight,
         "verdicts": r.verdicts, "local_score": r.local_score,
         "diagnostic": r.diagnostic}
        for r in breakdown.parents
    ]
    for r in breakdown.parents:
        if r.diagnostic:
            warnings.append(f"hierarchy parent {r.path}: {r.diagnostic}")

    outline_score = judge_outline_quality(topic, render_outline(record.outline),
                                          judge, cache, temperature=temperature,
                                          criteria=criteria.get("outline_quality"))
    scores["outline_quality"] = MetricScore("outline_quality", FIVE_POINT, outline_score)
    log["outline_quality"] = outline_score

    content = _content_text(record)
    if content.strip():
        dims = judge_content_quality(topic, content, judge, cache,
                                     temperature=temperature)
        for metric_id, value in zip(CONTENT_DIM_IDS, dims):
            scores[metric_id] = MetricScore(metric_id, FIVE_POINT, value)
        log["content_quality"] = list(dims)
    else:
        for metric_id in CONTENT_DIM_IDS:
            scores[metric_id] = None
        log["content_quality"] = None
        warnings.append("content facet missing: content metrics are null")

    faith = faithfulness_score(record.citation_sentences, record.references,
                               judge, cache, temperature=temperature)
    scores["faithfulness"] = faith.score
    warnings.extend(faith.warnings)
    log["citation_support"] = [
        {"section_index": v.section_index, "sentence": v.sentence,
         "keys": v.keys, "verdicts": v.verdicts}
        for v in faith.verdicts
    ]

    if record.references:
        ref_score = judge_reference_quality(
            topic, [r.text for r in record.references], judge, cache,
            temperature=temperature, criteria=criteria.get("reference_quality"),
        )
        scores["reference_quality"] = MetricScore("reference_quality", FIVE_POINT, ref_score)
        log["reference_quality"] = ref_score
    else:
        scores["reference_quality"] = None
        log["reference_quality"] = None
        warnings.append("reference facet missing: reference_quality is null")

    supp = supportiveness_score(record.references, topic, judge, cache,
                                temperature=temperature)
    scores["supportiveness"] = supp.score
    warnings.extend(supp.warnings)
    log["reference_relevance"] = [
        {"key": v.key, "relevant": v.relevant} for v in supp.verdicts
    ]

    return SurveyEvaluation(record=record, scores=scores, verdict_log=log,
                            warnings=warnings)


def compute_sigmas(config: PipelineConfig, index: VectorIndex,
                   generated_id: str, human_id: str):
    """Similarity factor per facet; an empty side leaves that facet None."""
    sigmas: dict[str, float | None] = {}
    details: dict[str, dict | None] = {}
    warnings: list[str] = []
    for component in ("outline", "content", "reference"):
        gen_units = index.units_for(generated_id, component)
        hum_units = index.units_for(human_id, component)
        n = config.top_n_for(component)
        try:
            factor = similarity_factor(gen_units, hum_units, component, n, index)
        except EmptySide as exc:
            sigmas[component] = None
            details[component] = None
            warnings.append(f"sigma^{component[0]} undefined: {exc}")
            continue
        sigmas[component] = factor.sigma
        details[component] = {
            "top_n": n,
            "top_n_used": factor.top_n_used,
            "matches": [[g, h, c] for g, h, c in factor.per_unit_matches],
        }
    return sigmas, details, warnings


def run_evaluate(config: PipelineConfig, manifest_path: str | Path) -> dict:
    """Score every survey, fuse configurations, and write the report.

    Human surveys are evaluated vanilla through the same pipeline (their
    scores anchor the balanced fusion); generated surveys additionally
    get similarity factors against their paired human survey and the
    balanced and human-as-perfect fusions.
    """
    manifest = load_manifest(manifest_path)
    records = _load_records(config, manifest)
    index_path = Path(config.index_path)
    if not index_path.exists():
        raise PipelineOrderError(f"no index at {index_path}; run 'embed' first")
    index = load_index(index_path)
    pairs = pair_by_topic(manifest)
    judge = build_judge_provider(config)
    cache = open_cache(config)
    criteria = None
    if config.criteria_path:
        criteria = json.loads(Path(config.criteria_path).read_text(encoding="utf-8"))

    ordered_ids = sorted(records)

    def eval_one(survey_id: str) -> SurveyEvaluation:
        return evaluate_survey(records[survey_id], judge, cache,
                               config.temperature, criteria)

    with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
        evaluations = dict(zip(ordered_ids, pool.map(eval_one, ordered_ids)))

    config.verdicts_dir.mkdir(parents=True, exist_ok=True)
    for survey_id in ordered_ids:
        path = config.verdicts_dir / f"{survey_id}.json"
        path.write_text(
            json.dumps(evaluations[survey_id].verdict_log, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )

    survey_rows = []
    for survey_id in ordered_ids:
        evaluation = evaluations[survey_id]
        entry = evaluation.record.entry
        if entry.role == "generated":
            human_id = pairs[entry.id]
            sigmas, sigma_details, sig_warnings = compute_sigmas(
                config, index, entry.id, human_id,
            )
            human_scores = evaluations[human_id].scores
            row = reporting.survey_row(
                evaluation, paired_human_id=human_id, sigmas=sigmas,
                sigma_details=sigma_details, human_scores=human_scores,
                extra_warnings=sig_warnings,
            )
        else:
            row = reporting.survey_row(evaluation)
        survey_rows.append(row)

    report = reporting.assemble_report(
        corpus_id=manifest.corpus_id,
        survey_rows=survey_rows,
        config_digest=config.digest(),
        cache_digest=cache.content_digest(),
        index_file_digest=index_digest(index_path),
    )
    config.report_path.parent.mkdir(parents=True, exist_ok=True)
    config.report_path.write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8",
    )
    return report


# --- arena ------------------------------------------------------------------


def run_arena_stage(config: PipelineConfig, manifest_path: str | Path,
                    dimensions: list[str] | None = None) -> dict:
    """Order-swapped pairwise protocol per system and dimension."""
    manifest = load_manifest(manifest_path)
    records = _load_records(config, manifest)
    pairs = pair_by_topic(manifest)
    judge = build_judge_provider(config)
    judges = [judge]
    cache = open_cache(config)
    dims = dimensions or list(DIMENSIONS)

    results = []
    for system in manifest.systems():
        system_pairs = [
            (records[e.id], records[pairs[e.id]])
            for e in sorted(manifest.generated(), key=lambda e: e.id)
            if e.system_name == system
        ]
        for dimension in dims:
            usable = [
                (g, h) for g, h in system_pairs
                if render_facet_nonempty(g, dimension) and render_facet_nonempty(h, dimension)
            ]
            if not usable:
                continue
            result = run_arena(usable, dimension, judges, cache,
                               system_name=system, temperature=config.temperature)
            results.append({
                "system": system,
                "dimension": dimension,
                "per_judge": dict(sorted(result.per_judge_win_rate.items())),
                "mean": result.mean,
                "std": result.std,
                "decisions": result.decisions,
                "failures": result.failures,
            })
    doc = {
        "corpus_id": manifest.corpus_id,
        "config_digest": config.digest(),
        "results": results,
    }
    config.arena_path.parent.mkdir(parents=True, exist_ok=True)
    config.arena_path.write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8",
    )
    return doc


def render_facet_nonempty(record: SurveyRecord, dimension: str) -> bool:
    from .arena import render_facet

    return bool(render_facet(record, dimension).strip())


# --- verify -----------------------------------------------------------------


def run_verify(config: PipelineConfig) -> dict:
    """Recompute every reported value from the verdict logs and match
    lists; any difference beyond 1e-9 is a mismatch."""
    report_path = config.report_path
    if not report_path.exists():
        raise PipelineOrderError(f"no report at {report_path}; run 'evaluate' first")
    report = json.loads(report_path.read_text(encoding="utf-8"))
    return reporting.verify_report(report, config.verdicts_dir)


# --- criteria ----------------------------------------------------------------


CRITERIA_PROMPT = (
    "Draft one short paragraph of grading criteria a reviewer should apply when "
    "scoring the {what} of an academic survey on a 1-5 scale. Write the criteria "
    "only, no preamble."
)


def run_criteria(config: PipelineConfig, out_path: str | Path) -> dict:
    """Draft fresh grading criteria with the judge and write them to a
    JSON file that ``criteria_path`` can point at. Explicit, never part
    of a normal evaluation run."""
    from .judgekit import JudgeRequest

    judge = build_judge_provider(config)
    drafted = {}
    for kind, what in (("outline_quality", "outline"),
                       ("reference_quality", "bibliography")):
        prompt = CRITERIA_PROMPT.format(what=what)
        raw = judge.complete(JudgeRequest(
            prompt=prompt, temperature=config.temperature, kind=kind,
            payload_digest="criteria-generate", attempt=0,
        ))
        drafted[kind] = raw.strip()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(drafted, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")
    return {"criteria_path": str(out_path), "kinds": sorted(drafted)}
