"""HTTP service for the labeling UI and scripted clients.

A thin adapter: every response is reproducible by calling the session and
index operations directly. Sessions persist to disk on every mutation, so
a restarted server resumes exactly where annotators left off; the pending
flag enforces strict serve/submit alternation.
"""

from __future__ import annotations

import io
import json
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .corpus import Corpus, Document, Sentence, Token, write_conll
from .errors import SessionComplete, SessionError
from .index import FeatureIndex, open_index
from .model import format_model
from .session import STRATEGIES, Session

SCHEMA_VERSION = "1"


class CreateSessionBody(BaseModel):
    index_id: str
    class_name: str
    strategy: str
    seed_query: str | None = None
    seed: int = 0
    prune_to: int | None = None


class SubmitLabelsBody(BaseModel):
    sentence_id: int
    labels: list[bool]


class SessionStore:
    """Sessions on disk, one JSON file each, written on every mutation."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        for path in sorted(self.directory.glob("*.json")):
            session = Session.from_json(json.loads(path.read_text(encoding="utf-8")))
            self.sessions[session.session_id] = session
            self.locks[session.session_id] = threading.Lock()

    def add(self, session: Session) -> None:
        with self._registry_lock:
            self.sessions[session.session_id] = session
            self.locks[session.session_id] = threading.Lock()
        self.persist(session)

    def persist(self, session: Session) -> None:
        path = self.directory / f"{session.session_id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(session.to_json(), sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def get(self, session_id: str) -> tuple[Session, threading.Lock]:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session, self.locks[session_id]


def _bio_labels(labels: tuple[bool, ...], class_name: str) -> list[str]:
    out = []
    prev = False
    for lab in labels:
        if lab:
            out.append(("I-" if prev else "B-") + class_name)
        else:
            out.append("O")
        prev = lab
    return out


def export_conll_text(session: Session, index: FeatureIndex) -> str:
    """Labeled sentences as one CoNLL document, in labeling order."""
    sentences = []
    for i, (sid, labels) in enumerate(session.labeled_sentences):
        src = index.corpus.sentence(sid)
        bio = _bio_labels(labels, session.class_name)
        toks = tuple(
            Token(surface=t.surface, pos_tag=t.pos_tag, gold_label=b)
            for t, b in zip(src.tokens, bio)
        )
        sentences.append(Sentence(sentence_id=i, tokens=toks))
    doc = Document(doc_id="export", source_order=0, sentences=tuple(sentences))
    buf = io.StringIO()
    write_conll(Corpus([doc]), buf)
    return buf.getvalue()


def create_app(
    index_dir: str | Path,
    sessions_dir: str | Path | None = None,
    auth_token: str | None = None,
) -> FastAPI:
    index_dir = Path(index_dir)
    index = open_index(index_dir)
    index_id = index_dir.name
    store = SessionStore(
        Path(sessions_dir) if sessions_dir else index_dir / "sessions"
    )

    app = FastAPI(title="entityscout", version=SCHEMA_VERSION)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.middleware("http")
    async def schema_and_auth(request: Request, call_next):
        if auth_token is not None:
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {auth_token}":
                return Response(
                    content=json.dumps({"detail": "missing or bad token"}),
                    status_code=401,
                    media_type="application/json",
                    headers={"X-Schema-Version": SCHEMA_VERSION},
                )
        response = await call_next(request)
        response.headers["X-Schema-Version"] = SCHEMA_VERSION
        return response

    def _sentence_payload(session: Session, sentence_id: int, scores: list[float]):
        sent = index.corpus.sentence(sentence_id)
        doc = index.corpus.doc_of_sentence(sentence_id)
        ids = [s.sentence_id for s in doc.sentences]
        pos = ids.index(sentence_id)
        return {
            "sentence_id": sentence_id,
            "tokens": [
                {"surface": t.surface, "score": score}
                for t, score in zip(sent.tokens, scores)
            ],
            "context": {
                "doc_id": doc.doc_id,
                "before": doc.sentences[pos - 1].text() if pos > 0 else "",
                "after": doc.sentences[pos + 1].text() if pos + 1 < len(ids) else "",
            },
        }

    def _entities(session: Session, limit: int) -> list[str]:
        if session.model is None:
            raise HTTPException(status_code=409, detail="no model trained yet")
        if limit < 1:
            raise HTTPException(status_code=400, detail="limit must be >= 1")
        return session.entity_list(index, limit=limit)

    @app.get("/")
    def root():
        return {"service": "entityscout", "schema_version": SCHEMA_VERSION}

    @app.get("/indexes")
    def indexes():
        return [
            {
                "index_id": index_id,
                "counts": index.manifest["counts"],
                "backend": __import__("entityscout._kernels", fromlist=["x"]).ACTIVE_BACKEND,
            }
        ]

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if body.index_id != index_id:
            raise HTTPException(status_code=404, detail=f"unknown index {body.index_id!r}")
        if body.strategy not in STRATEGIES:
            raise HTTPException(status_code=400, detail=f"unknown strategy {body.strategy!r}")
        terms = tuple((body.seed_query or "").split())
        if not terms:
            raise HTTPException(
                status_code=400, detail="seed_query is required: cold start needs a seed"
            )
        session = Session(
            session_id=uuid.uuid4().hex,
            class_name=body.class_name,
            strategy=body.strategy,
            seed=body.seed,
            seed_terms=terms,
            prune_to=body.prune_to,
        )
        store.add(session)
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        session, lock = store.get(session_id)
        with lock:
            pending = None
            if session.pending is not None:
                scores = session._token_scores(index, session.pending, session.exec_model())
                pending = _sentence_payload(session, session.pending, scores)
            return {
                "session_id": session.session_id,
                "class_name": session.class_name,
                "strategy": session.strategy,
                "round": session.round,
                "labeled_sentences": len(session.labeled_sentences),
                "labeled_tokens": session.labeled_token_count(),
                "model_size": 0 if session.model is None else session.model.size(),
                "pending": pending,
                "complete": len(session.exclude) >= index.sentence_count,
            }

    @app.get("/sessions/{session_id}/next")
    def next_sentence(session_id: str):
        session, lock = store.get(session_id)
        with lock:
            if session.pending is not None:
                raise HTTPException(status_code=409, detail="a sentence is already pending")
            try:
                sid, scores = session.next_sentence(index)
            except SessionComplete:
                return Response(status_code=204)
            store.persist(session)
            return _sentence_payload(session, sid, scores)

    @app.post("/sessions/{session_id}/labels")
    def submit_labels(session_id: str, body: SubmitLabelsBody):
        session, lock = store.get(session_id)
        with lock:
            if session.pending is None or body.sentence_id != session.pending:
                raise HTTPException(
                    status_code=409, detail="sentence_id does not match the pending sentence"
                )
            expected = len(index.corpus.sentence(body.sentence_id).tokens)
            if len(body.labels) != expected:
                raise HTTPException(
                    status_code=400,
                    detail=f"expected {expected} labels, got {len(body.labels)}",
                )
            try:
                session.submit_labels(index, body.sentence_id, body.labels)
            except SessionError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            store.persist(session)
            top = [] if session.model is None else _entities(session, 10)
            return {
                "round": session.round,
                "model_size": 0 if session.model is None else session.model.size(),
                "top_entities": top,
            }

    @app.get("/sessions/{session_id}/entities")
    def entities(session_id: str, limit: int = 20):
        session, lock = store.get(session_id)
        with lock:
            return {"entities": _entities(session, limit)}

    @app.get("/sessions/{session_id}/model")
    def model(session_id: str):
        session, lock = store.get(session_id)
        with lock:
            if session.model is None:
                raise HTTPException(status_code=409, detail="no model trained yet")
            return Response(content=format_model(session.model), media_type="text/plain")

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        session, lock = store.get(session_id)
        with lock:
            if not session.labeled_sentences:
                raise HTTPException(status_code=409, detail="nothing labeled yet")
            return Response(
                content=export_conll_text(session, index), media_type="text/plain"
            )

    return app
