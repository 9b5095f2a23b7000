"""Retrieval metrics and the automated categorical-search experiment.

The simulated user labels every retrieved patch by category equality
with the query, so whole-corpus sweeps need no interaction.  Quality is
summarized by precision/recall at a scope, the normalized rank of the
relevant items (0 perfect, about 0.5 for random orderings when few
items are relevant), and its average over queries.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .cube import CorpusLabels
from .rf import DissimilarityIndex, RfConfig, RfEngine


def precision_recall(ranking_ids, relevant, scope: int) -> tuple[float, float]:
    """Precision and recall of the first ``scope`` ranked ids."""
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant set must be nonempty")
    if not 1 <= scope <= len(ranking_ids):
        raise ValueError("scope must be within the ranking length")
    hits = sum(1 for pid in ranking_ids[:scope] if pid in relevant)
    return hits / scope, hits / len(relevant)


def pr_curve(ranking_ids, relevant) -> tuple[np.ndarray, np.ndarray]:
    """Precision and recall at every scope 1..N, as two arrays."""
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant set must be nonempty")
    indicator = np.fromiter((pid in relevant for pid in ranking_ids), dtype=np.float64)
    hits = np.cumsum(indicator)
    scopes = np.arange(1, len(ranking_ids) + 1, dtype=np.float64)
    return hits / scopes, hits / len(relevant)


def normalized_rank(ranking_ids, relevant) -> float:
    """Position-based quality of a ranking for one query, in [0, 1).

    Uses zero-based rank positions, so a ranking with all relevant items
    first scores exactly 0 and one with them last scores (N - N_rel)/N.
    """
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant set must be nonempty")
    position = {pid: i for i, pid in enumerate(ranking_ids)}
    missing = relevant - position.keys()
    if missing:
        raise ValueError(f"relevant ids missing from ranking: {sorted(missing)}")
    n = len(ranking_ids)
    n_rel = len(relevant)
    total = sum(position[pid] for pid in relevant)
    return (total - n_rel * (n_rel - 1) / 2) / (n * n_rel)


def anr(ranks) -> float:
    """Arithmetic mean of per-query normalized ranks."""
    ranks = list(ranks)
    if not ranks:
        raise ValueError("need at least one normalized rank")
    return float(np.mean(ranks))


@dataclass
class QueryResult:
    """Trace of one simulated query: one ranking per iteration 0..t_max."""

    query_id: int
    category: int
    rankings: list[list[int]]
    relevant_sizes: list[int]
    non_relevant_sizes: list[int]


@dataclass
class ExperimentReport:
    """Aggregated outcome of one configuration over a whole corpus."""

    config: dict
    anr_zero_by_category: dict[int, float]
    anr_final_by_category: dict[int, float]
    anr_zero: float
    anr_final: float
    pr_curves: list[dict]
    trajectories: dict[int, dict[str, list[float]]]
    skipped_queries: list[int] = field(default_factory=list)
    query_results: list[QueryResult] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "anr_zero_by_category": {str(k): v for k, v in self.anr_zero_by_category.items()},
            "anr_final_by_category": {str(k): v for k, v in self.anr_final_by_category.items()},
            "anr_zero": self.anr_zero,
            "anr_final": self.anr_final,
            "pr_curves": self.pr_curves,
            "trajectories": {
                str(cat): traj for cat, traj in self.trajectories.items()
            },
            "skipped_queries": self.skipped_queries,
        }


def run_experiment(
    index: DissimilarityIndex,
    labels: CorpusLabels,
    config: RfConfig,
    queries=None,
    classifier_factory=None,
    keep_query_results: bool = False,
) -> ExperimentReport:
    """Run the feedback loop for every patch as a categorical query.

    Patches whose category has a single member are skipped and reported.
    Every query contributes ``t_max + 1`` rankings (the final ranking is
    carried forward when the loop stops early).
    """
    engine = RfEngine(index, config, classifier_factory=classifier_factory)
    t_max = config.t_max
    if queries is None:
        queries = list(index.ids)

    results: list[QueryResult] = []
    skipped: list[int] = []
    for query_id in queries:
        category = labels.category_of(query_id)
        members = labels.members(category)
        if len(members) < 2:
            skipped.append(query_id)
            continue
        session = engine.start(query_id)
        rankings = [list(session.ranking.ids)]
        r_sizes = [session.relevant_count()]
        nr_sizes = [len(session.training_ids) - session.relevant_count()]
        while not session.stopped and session.t < t_max:
            feedback = {
                pid: labels.category_of(pid) == category
                for pid in session.last_retrieved
            }
            ranking, _, _ = engine.iterate(session, feedback)
            rankings.append(list(ranking.ids))
            r_sizes.append(session.relevant_count())
            nr_sizes.append(len(session.training_ids) - session.relevant_count())
        while len(rankings) < t_max + 1:
            rankings.append(list(rankings[-1]))
            r_sizes.append(r_sizes[-1])
            nr_sizes.append(nr_sizes[-1])
        results.append(QueryResult(query_id, category, rankings, r_sizes, nr_sizes))

    if not results:
        raise ValueError("no executable queries (all categories singletons?)")

    categories = sorted({r.category for r in results})
    relevant_of = {cat: set(labels.members(cat)) for cat in categories}

    anr_zero_by_cat: dict[int, float] = {}
    anr_final_by_cat: dict[int, float] = {}
    for cat in categories:
        cat_results = [r for r in results if r.category == cat]
        anr_zero_by_cat[cat] = anr(
            normalized_rank(r.rankings[0], relevant_of[cat]) for r in cat_results
        )
        anr_final_by_cat[cat] = anr(
            normalized_rank(r.rankings[t_max], relevant_of[cat]) for r in cat_results
        )

    pr_curves = []
    n = len(index)
    for t in range(t_max + 1):
        precision_sum = np.zeros(n)
        recall_sum = np.zeros(n)
        for r in results:
            p, rec = pr_curve(r.rankings[t], relevant_of[r.category])
            precision_sum += p
            recall_sum += rec
        pr_curves.append({
            "iteration": t,
            "scope": list(range(1, n + 1)),
            "precision": [float(v) for v in precision_sum / len(results)],
            "recall": [float(v) for v in recall_sum / len(results)],
        })

    trajectories: dict[int, dict[str, list[float]]] = {}
    for cat in categories:
        cat_results = [r for r in results if r.category == cat]
        trajectories[cat] = {
            "relevant": [
                float(np.mean([r.relevant_sizes[t] for r in cat_results]))
                for t in range(t_max + 1)
            ],
            "non_relevant": [
                float(np.mean([r.non_relevant_sizes[t] for r in cat_results]))
                for t in range(t_max + 1)
            ],
        }

    report = ExperimentReport(
        config={
            "kind": index.kind,
            "classifier": config.classifier,
            "prototype_policy": config.prototype_policy,
            "criterion": config.criterion,
            "scope": config.scope,
            "k": config.k,
            "t_max": config.t_max,
            "n_clusters": config.n_clusters,
        },
        anr_zero_by_category=anr_zero_by_cat,
        anr_final_by_category=anr_final_by_cat,
        anr_zero=anr(
            normalized_rank(r.rankings[0], relevant_of[r.category]) for r in results
        ),
        anr_final=anr(
            normalized_rank(r.rankings[t_max], relevant_of[r.category]) for r in results
        ),
        pr_curves=pr_curves,
        trajectories=trajectories,
        skipped_queries=skipped,
        query_results=results if keep_query_results else [],
    )
    return report


def reports_to_csv(reports: list[ExperimentReport]) -> str:
    """ANR table: one row per configuration x category, one column per kind.

    The zero-query baseline appears as its own configuration rows.
    """
    kinds = []
    for report in reports:
        if report.config["kind"] not in kinds:
            kinds.append(report.config["kind"])

    rows: dict[tuple, dict[str, float]] = {}
    for report in reports:
        kind = report.config["kind"]
        for cat, value in report.anr_zero_by_category.items():
            key = (cat, "zero-query", "-", "-")
            rows.setdefault(key, {})[kind] = value
        for cat, value in report.anr_final_by_category.items():
            key = (
                cat,
                report.config["prototype_policy"],
                report.config["classifier"],
                report.config["criterion"],
            )
            rows.setdefault(key, {})[kind] = value

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["category", "prototype_policy", "classifier", "criterion"] + kinds)
    for key in sorted(rows, key=lambda k: (k[0], k[1] != "zero-query", k[1], k[2], k[3])):
        cat, policy, classifier, criterion = key
        values = []
        for kind in kinds:
            v = rows[key].get(kind)
            values.append(repr(v) if v is not None else "")
        writer.writerow([cat, policy, classifier, criterion] + values)
    return buf.getvalue()


def reports_to_json(reports: list[ExperimentReport]) -> str:
    return json.dumps([r.to_json_dict() for r in reports], indent=2)
