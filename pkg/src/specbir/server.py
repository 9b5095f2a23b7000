"""HTTP JSON API for interactive retrieval sessions.

One process serves one corpus at a time.  Dissimilarity matrices are
computed on first use per kind and persisted next to the corpus, so
restarts and batch runs share the same artifacts.  Sessions are
serialized to disk after every mutation; a restarted server picks them
up transparently.  Per-session mutation is serialized and carries an
iteration number, so concurrent feedback posts resolve to exactly one
winner and one conflict.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .config import RunConfig
from .cube import load_corpus, render_rgb
from .dissim import KINDS, load_matrix_csv, pairwise_matrix, save_matrix_csv
from .errors import LabelMismatchError, SpecbirError
from .features import featurize_corpus
from .rf import CRITERIA, DissimilarityIndex, RfConfig, RfEngine, RfSession


class CorpusLoadRequest(BaseModel):
    path: str


class SessionRequest(BaseModel):
    query_id: int
    kind: str = "spectral-spatial"
    classifier: str = "knn"
    prototype_policy: str = "online"
    criterion: str = "AL"
    scope: int | None = None


class FeedbackRequest(BaseModel):
    iteration: int
    labels: dict[int, str]


class EngineState:
    """Mutable server-side state: corpus, lazy indexes, live sessions."""

    def __init__(self, state_dir=None, run_config: RunConfig | None = None,
                 thumbnail_bands=None):
        self.run_config = run_config or RunConfig()
        self.state_dir = Path(state_dir) if state_dir else None
        self.thumbnail_bands = thumbnail_bands
        self.corpus_dir: Path | None = None
        self.patches = {}
        self.labels = None
        self.indexes: dict[str, DissimilarityIndex] = {}
        self.sessions: dict[str, dict] = {}
        self.lock = threading.Lock()
        self.thumbnails: dict[int, bytes] = {}

    # -- corpus ---------------------------------------------------------

    def load_corpus(self, path) -> dict:
        directory = Path(path)
        patches, labels = load_corpus(directory)
        with self.lock:
            self.corpus_dir = directory
            self.patches = {p.id: p for p in patches}
            self.labels = labels
            self.indexes = {}
            self.sessions = {}
            self.thumbnails = {}
        return self.corpus_summary()

    def corpus_summary(self) -> dict:
        if not self.patches:
            raise HTTPException(status_code=409, detail="no corpus loaded")
        first = next(iter(self.patches.values()))
        available = [
            kind for kind in KINDS
            if (self.corpus_dir / f"distmat_{kind}.csv").exists()
        ]
        return {
            "n_patches": len(self.patches),
            "bands": first.cube.bands,
            "patch_lines": first.cube.lines,
            "patch_samples": first.cube.samples,
            "kinds_available": available,
        }

    def index_for(self, kind: str) -> DissimilarityIndex:
        if kind not in KINDS:
            raise HTTPException(status_code=400, detail=f"unknown kind {kind!r}")
        if not self.patches:
            raise HTTPException(status_code=409, detail="no corpus loaded")
        with self.lock:
            if kind in self.indexes:
                return self.indexes[kind]
        ids = sorted(self.patches)
        path = self.corpus_dir / f"distmat_{kind}.csv"
        if path.exists():
            file_ids, matrix = load_matrix_csv(path)
            if file_ids != ids:
                raise HTTPException(status_code=500,
                                    detail=f"{path} ids do not match corpus")
        else:
            cfg = self.run_config
            features = featurize_corpus(
                [self.patches[i] for i in ids],
                cache_dir=self.corpus_dir / "features",
                m=cfg.m, runs=cfg.vca_runs, seed=cfg.seed, levels=cfg.levels,
            )
            matrix = pairwise_matrix(features, kind)
            save_matrix_csv(path, ids, matrix)
        index = DissimilarityIndex(ids, matrix, kind)
        with self.lock:
            self.indexes[kind] = index
        return index

    def thumbnail(self, patch_id: int) -> bytes:
        if patch_id not in self.patches:
            raise HTTPException(status_code=404, detail=f"unknown patch {patch_id}")
        if patch_id not in self.thumbnails:
            patch = self.patches[patch_id]
            bands = patch.cube.bands
            triplet = self.thumbnail_bands or (bands - 1, bands // 2, 0)
            self.thumbnails[patch_id] = render_rgb(patch, triplet)
        return self.thumbnails[patch_id]

    # -- sessions -------------------------------------------------------

    def _session_path(self, session_id: str) -> Path | None:
        if self.state_dir is None:
            return None
        return self.state_dir / "sessions" / f"{session_id}.json"

    def persist(self, session_id: str) -> None:
        path = self._session_path(session_id)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        record = self.sessions[session_id]
        payload = record["session"].to_json()
        path.write_text(
            '{"corpus_dir": ' + _json_str(str(self.corpus_dir))
            + ', "session": ' + payload + "}"
        )

    def create_session(self, request: SessionRequest) -> tuple[str, RfSession]:
        index = self.index_for(request.kind)
        if request.query_id not in self.patches:
            raise HTTPException(status_code=404,
                                detail=f"unknown patch {request.query_id}")
        if request.criterion not in CRITERIA:
            raise HTTPException(status_code=400,
                                detail=f"unknown criterion {request.criterion!r}")
        scope = request.scope
        if scope is None:
            scope = 12 if request.criterion == "BW+AL" else 10
        if scope > len(index):
            raise HTTPException(status_code=400,
                                detail=f"scope {scope} exceeds corpus size")
        try:
            config = RfConfig(
                kind=request.kind, classifier=request.classifier,
                prototype_policy=request.prototype_policy,
                criterion=request.criterion, scope=scope,
                k=self.run_config.k, t_max=self.run_config.t_max,
                n_clusters=self.run_config.n_clusters,
            )
            engine = RfEngine(index, config)
            session = engine.start(request.query_id)
        except (SpecbirError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session_id = uuid.uuid4().hex
        with self.lock:
            self.sessions[session_id] = {
                "session": session,
                "engine": engine,
                "lock": threading.Lock(),
            }
        self.persist(session_id)
        return session_id, session

    def get_session(self, session_id: str) -> dict:
        with self.lock:
            record = self.sessions.get(session_id)
        if record is not None:
            return record
        path = self._session_path(session_id)
        if path is not None and path.exists():
            import json as _json

            payload = _json.loads(path.read_text())
            if payload.get("corpus_dir") != str(self.corpus_dir):
                raise HTTPException(status_code=409,
                                    detail="session belongs to another corpus")
            session = RfSession.from_dict(payload["session"])
            engine = RfEngine(self.index_for(session.config.kind), session.config)
            record = {"session": session, "engine": engine,
                      "lock": threading.Lock()}
            with self.lock:
                self.sessions[session_id] = record
            return record
        raise HTTPException(status_code=404, detail=f"unknown session {session_id}")


def _json_str(text: str) -> str:
    import json as _json

    return _json.dumps(text)


def _retrieved_payload(session: RfSession) -> list[dict]:
    return [
        {"id": pid, "thumbnail_url": f"/patch/{pid}/thumbnail"}
        for pid in session.last_retrieved
    ]


def create_app(state_dir=None, run_config: RunConfig | None = None,
               thumbnail_bands=None, frontend_dir=None) -> FastAPI:
    app = FastAPI(title="specbir")
    state = EngineState(state_dir=state_dir, run_config=run_config,
                        thumbnail_bands=thumbnail_bands)
    app.state.engine_state = state

    @app.post("/corpus/load")
    def corpus_load(request: CorpusLoadRequest):
        if not Path(request.path).exists():
            raise HTTPException(status_code=404,
                                detail=f"no such corpus: {request.path}")
        try:
            return state.load_corpus(request.path)
        except SpecbirError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/corpus")
    def corpus_summary():
        return state.corpus_summary()

    @app.get("/corpus/patches")
    def corpus_patches():
        state.corpus_summary()  # 409 when nothing is loaded
        return [
            {"id": pid, "category": patch.category}
            for pid, patch in sorted(state.patches.items())
        ]

    @app.post("/session")
    def create_session(request: SessionRequest):
        session_id, session = state.create_session(request)
        return {
            "session_id": session_id,
            "iteration": session.t,
            "retrieved": _retrieved_payload(session),
            "stopped": session.stopped,
        }

    @app.post("/session/{session_id}/feedback")
    def feedback(session_id: str, request: FeedbackRequest):
        record = state.get_session(session_id)
        session, engine = record["session"], record["engine"]
        with record["lock"]:
            if request.iteration != session.t:
                raise HTTPException(
                    status_code=409,
                    detail=f"stale feedback: session is at iteration {session.t}",
                )
            labels = {}
            for pid, value in request.labels.items():
                if value not in ("relevant", "non-relevant"):
                    raise HTTPException(
                        status_code=400,
                        detail=f"label for {pid} must be relevant/non-relevant",
                    )
                labels[int(pid)] = value == "relevant"
            try:
                ranking, retrieved, stopped = engine.iterate(session, labels)
            except LabelMismatchError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            state.persist(session_id)
        head = ranking.ids[:24]
        return {
            "iteration": session.t,
            "retrieved": _retrieved_payload(session),
            "ranking_head": [
                {"id": pid, "score": score}
                for pid, score in zip(head, ranking.scores[:24])
            ],
            "stopped": stopped,
            "fallback": session.fallback_used,
        }

    @app.get("/session/{session_id}")
    def session_summary(session_id: str):
        record = state.get_session(session_id)
        session = record["session"]
        return {
            "session_id": session_id,
            "query_id": session.query_id,
            "iteration": session.t,
            "stopped": session.stopped,
            "retrieved": _retrieved_payload(session),
            "kind": session.config.kind,
            "classifier": session.config.classifier,
            "criterion": session.config.criterion,
            "prototype_policy": session.config.prototype_policy,
        }

    @app.get("/session/{session_id}/ranking")
    def session_ranking(session_id: str, limit: int | None = None):
        record = state.get_session(session_id)
        session = record["session"]
        ids = session.ranking.ids
        scores = session.ranking.scores
        if limit is not None:
            ids, scores = ids[:limit], scores[:limit]
        return {"ids": ids, "scores": scores}

    @app.get("/patch/{patch_id}/thumbnail")
    def thumbnail(patch_id: int):
        return Response(content=state.thumbnail(patch_id), media_type="image/png")

    if frontend_dir is None:
        default_front = Path(__file__).resolve().parents[2] / "frontend"
        if (default_front / "index.html").exists():
            frontend_dir = default_front
    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True),
                  name="ui")

    return app
