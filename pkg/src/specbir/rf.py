"""Relevance-feedback retrieval loop over dissimilarity spaces.

A session starts from a zero query: the corpus is ranked by raw
dissimilarity to the query patch and the best/worst patches are shown
for labelling.  Each later iteration embeds the labelled training set
and the whole corpus against the prototype set, scores all patches with
a two-class classifier, re-ranks, and selects the next patches to label
with the configured retrieval criterion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .dspace import DissimilarityKnn, OfflinePrototypeSelector
from .errors import ClassifierDegenerateError, LabelMismatchError
from .svm import train_svm

CRITERIA = ("BW", "AL", "BW+AL")
CLASSIFIERS = ("knn", "svm")
POLICIES = ("online", "offline")


@dataclass
class Ranking:
    """A permutation of the corpus ids with the scores that ordered it."""

    ids: list[int]
    scores: list[float]


@dataclass
class RfConfig:
    kind: str = "spectral-spatial"
    classifier: str = "knn"
    prototype_policy: str = "online"
    criterion: str = "AL"
    scope: int = 10
    k: int = 7
    t_max: int = 5
    n_clusters: int = 10

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {CLASSIFIERS}")
        if self.prototype_policy not in POLICIES:
            raise ValueError(f"prototype_policy must be one of {POLICIES}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")


class DissimilarityIndex:
    """Precomputed pairwise dissimilarities over a fixed corpus."""

    def __init__(self, patch_ids, matrix, kind: str):
        self.ids = [int(i) for i in patch_ids]
        self.matrix = np.asarray(matrix, dtype=np.float64)
        if self.matrix.shape != (len(self.ids), len(self.ids)):
            raise ValueError("matrix shape must match the id list")
        self.kind = kind
        self._pos = {pid: i for i, pid in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def row(self, patch_id: int) -> np.ndarray:
        return self.matrix[self._pos[patch_id]]

    def submatrix(self, row_ids, col_ids) -> np.ndarray:
        rows = [self._pos[i] for i in row_ids]
        cols = [self._pos[i] for i in col_ids]
        return self.matrix[np.ix_(rows, cols)]


def rank_descending(ids, scores) -> Ranking:
    """Order ids by score descending; ties prefer the lower id."""
    ids = np.asarray(ids)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((ids, -scores))
    return Ranking([int(i) for i in ids[order]], [float(s) for s in scores[order]])


def zero_query(query_id: int, index: DissimilarityIndex,
               scope: int) -> tuple[Ranking, list[int]]:
    """Initial dissimilarity ranking and its best/worst retrieval.

    The query is pinned to the first rank and never offered for
    labelling; the retrieved set takes the best ``scope // 2`` non-query
    patches and fills up to ``scope`` from the worst-ranked end.
    """
    if query_id not in index._pos:
        raise ValueError(f"unknown patch id {query_id}")
    if scope > len(index):
        raise ValueError(f"scope {scope} exceeds corpus size {len(index)}")
    if scope < 1:
        raise ValueError("scope must be >= 1")
    dists = index.row(query_id)
    ids = np.asarray(index.ids)
    pin_first = np.where(ids == query_id, -np.inf, dists)
    order = np.lexsort((ids, pin_first))
    ranked_ids = [int(i) for i in ids[order]]
    ranking = Ranking(ranked_ids, [float(d) for d in dists[order]])
    non_query = ranked_ids[1:]
    half = scope // 2
    best = non_query[:half]
    tail = [i for i in non_query[::-1] if i not in best]
    retrieved = best + tail[:scope - len(best)]
    return ranking, retrieved


def select_retrieval(ids, scores, already_labeled, criterion: str,
                     scope: int) -> list[int]:
    """Pick the next patches to show the user from a score vector.

    BW takes the ``scope/2`` best and worst unlabeled patches; AL takes
    the unlabeled patches closest to the 0.5 class boundary on each
    side, backfilling one side from the other; BW+AL unions the
    quarter-sized versions of both and backfills duplicates from the
    ranking.  Already-labelled ids are never returned; if fewer
    unlabeled patches remain than requested, all of them are returned.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    if criterion in ("BW", "AL") and scope % 2 != 0:
        raise ValueError(f"{criterion} needs an even scope")
    if criterion == "BW+AL" and scope % 4 != 0:
        raise ValueError("BW+AL needs a scope divisible by 4")
    labeled = set(already_labeled)
    ids = list(ids)
    scores = [float(s) for s in scores]
    score_of = dict(zip(ids, scores))
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    ranked = [ids[i] for i in order]
    unlabeled = [i for i in ranked if i not in labeled]
    if len(unlabeled) <= scope:
        return unlabeled

    def ambiguous(side_ids):
        return sorted(side_ids, key=lambda i: (abs(score_of[i] - 0.5), i))

    if criterion == "BW":
        half = scope // 2
        return unlabeled[:half] + unlabeled[-half:][::-1]
    if criterion == "AL":
        half = scope // 2
        pos = ambiguous([i for i in unlabeled if score_of[i] >= 0.5])
        neg = ambiguous([i for i in unlabeled if score_of[i] < 0.5])
        chosen = pos[:half] + neg[:half]
        spill = pos[half:] + neg[half:]
        spill.sort(key=lambda i: (abs(score_of[i] - 0.5), i))
        return chosen + spill[:scope - len(chosen)]
    quarter = scope // 4
    pos = ambiguous([i for i in unlabeled if score_of[i] >= 0.5])
    neg = ambiguous([i for i in unlabeled if score_of[i] < 0.5])
    chosen: list[int] = []
    for candidate in (
        unlabeled[:quarter] + unlabeled[-quarter:][::-1]
        + pos[:quarter] + neg[:quarter]
    ):
        if candidate not in chosen:
            chosen.append(candidate)
    for candidate in unlabeled:
        if len(chosen) >= scope:
            break
        if candidate not in chosen:
            chosen.append(candidate)
    return chosen


@dataclass
class RfSession:
    """Mutable state of one query's feedback loop."""

    query_id: int
    config: RfConfig
    t: int = 0
    training_ids: list[int] = field(default_factory=list)
    training_labels: list[bool] = field(default_factory=list)
    prototype_ids: list[int] = field(default_factory=list)
    last_retrieved: list[int] = field(default_factory=list)
    ranking: Ranking | None = None
    zero_distances: list[float] = field(default_factory=list)
    stopped: bool = False
    fallback_used: bool = False

    def labeled_ids(self) -> set[int]:
        return set(self.training_ids)

    def relevant_count(self) -> int:
        return sum(self.training_labels)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "RfSession":
        payload = dict(payload)
        payload["config"] = RfConfig(**payload["config"])
        if payload.get("ranking") is not None:
            payload["ranking"] = Ranking(**payload["ranking"])
        return cls(**payload)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RfSession":
        return cls.from_dict(json.loads(text))


class RfEngine:
    """Runs feedback sessions against one dissimilarity index."""

    def __init__(self, index: DissimilarityIndex, config: RfConfig,
                 classifier_factory=None):
        self.index = index
        self.config = config
        self.classifier_factory = classifier_factory
        self.offline_prototype_ids: list[int] = []
        if config.prototype_policy == "offline":
            selector = OfflinePrototypeSelector(n_clusters=config.n_clusters)
            selector.fit(index.matrix)
            self.offline_prototype_ids = [
                index.ids[i] for i in selector.prototype_indices_
            ]

    def start(self, query_id: int) -> RfSession:
        ranking, retrieved = zero_query(query_id, self.index, self.config.scope)
        session = RfSession(
            query_id=query_id,
            config=self.config,
            training_ids=[query_id],
            training_labels=[True],
            last_retrieved=retrieved,
            ranking=ranking,
            zero_distances=[float(d) for d in self.index.row(query_id)],
        )
        if self.config.prototype_policy == "offline":
            session.prototype_ids = list(self.offline_prototype_ids)
        else:
            session.prototype_ids = [query_id]
        return session

    def _score_all(self, session: RfSession):
        """Classifier scores for every corpus patch; returns (scores, fallback)."""
        prototypes = session.prototype_ids
        T = self.index.submatrix(session.training_ids, prototypes)
        y = np.asarray([1 if lab else 0 for lab in session.training_labels])
        all_vectors = self.index.submatrix(self.index.ids, prototypes)
        if self.classifier_factory is not None:
            model = self.classifier_factory()
            model.fit(T, y)
            return model.predict_proba(all_vectors)[:, 1], False
        if self.config.classifier == "knn":
            model = DissimilarityKnn(k=self.config.k)
            model.fit(T, y, sample_ids=np.asarray(session.training_ids))
            return model.predict_proba(all_vectors)[:, 1], False
        try:
            model = train_svm(T, y)
        except ClassifierDegenerateError:
            return -np.asarray(session.zero_distances), True
        return model.predict_proba(all_vectors)[:, 1], False

    def iterate(self, session: RfSession,
                labels: dict[int, bool]) -> tuple[Ranking, list[int], bool]:
        """Absorb one round of labels, retrain, re-rank and re-select.

        Calling a stopped session reports ``stopped`` again without
        touching its state.
        """
        if session.stopped:
            return session.ranking, [], True
        expected = set(session.last_retrieved)
        provided = {int(k) for k in labels}
        if provided != expected:
            raise LabelMismatchError(
                f"labels must cover exactly the retrieved set {sorted(expected)}, "
                f"got {sorted(provided)}"
            )
        for pid in session.last_retrieved:
            session.training_ids.append(pid)
            session.training_labels.append(bool(labels[pid]))
        if session.config.prototype_policy == "online":
            session.prototype_ids = list(session.training_ids)

        scores, fallback = self._score_all(session)
        session.fallback_used = fallback
        session.ranking = rank_descending(self.index.ids, scores)
        session.t += 1

        labeled = session.labeled_ids()
        retrieved = select_retrieval(
            self.index.ids, scores, labeled, session.config.criterion,
            session.config.scope,
        )
        stopped = (
            session.t >= session.config.t_max
            or len(labeled) >= len(self.index)
            or not retrieved
        )
        session.stopped = stopped
        session.last_retrieved = [] if stopped else retrieved
        return session.ranking, session.last_retrieved, stopped
