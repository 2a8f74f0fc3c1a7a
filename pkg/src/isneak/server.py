"""HTTP/JSON session service for interactive runs.

Each session runs the ordinary two-pass engine on a worker thread; its
oracle blocks on a queue until a human answer arrives over HTTP, so the
same pass-1 code serves automatic and interactive modes unchanged.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import model_io
from .engine import Oracle, run_isneak
from .errors import IsneakError
from .preprocess import encode_pool


class SessionAborted(Exception):
    pass


class ChannelOracle(Oracle):
    """Blocks the engine thread until the HTTP side posts a choice."""

    def __init__(self, session: "Session", timeout: float):
        self.session = session
        self.timeout = timeout

    def answer(self, question) -> str:
        s = self.session
        with s.lock:
            if s.state == "aborted":
                raise SessionAborted()
            s.pending_question = question
            s.state = "awaiting_answer"
        try:
            choice = s.answers.get(timeout=self.timeout)
        except queue.Empty:
            raise SessionAborted()
        if choice is None:
            raise SessionAborted()
        with s.lock:
            s.pending_question = None
            s.state = "running"
        return choice

    def notify(self, asked: int, live: int) -> None:
        self.session.progress = {"asked": asked, "live_candidates": live}


class Session:
    def __init__(self, session_id: str, pool, seed: int, timeout: float):
        self.id = session_id
        self.pool = pool
        self.seed = seed
        self.state = "running"  # running | awaiting_answer | done | aborted
        self.pending_question = None
        self.result = None
        self.error: Optional[str] = None
        self.answers: "queue.Queue[Optional[str]]" = queue.Queue()
        self.answered: list[dict] = []
        self.ratings: list[int] = []
        self.progress = {"asked": 0, "live_candidates": pool.n}
        self.created_at = time.time()
        self.last_active = time.time()
        self.lock = threading.Lock()
        self.thread = threading.Thread(target=self._run, args=(timeout,), daemon=True)
        self.thread.start()

    def _run(self, timeout: float):
        try:
            result = run_isneak(self.pool, ChannelOracle(self, timeout), self.seed)
            with self.lock:
                self.result = result
                self.state = "done"
                self.pending_question = None
        except SessionAborted:
            with self.lock:
                self.state = "aborted"
                self.pending_question = None
        except Exception as e:  # engine failure: surface, don't hang the session
            with self.lock:
                self.error = str(e)
                self.state = "aborted"
                self.pending_question = None

    def touch(self):
        self.last_active = time.time()

    def abort(self):
        with self.lock:
            if self.state in ("done", "aborted"):
                return
            self.state = "aborted"
        self.answers.put(None)


class CreateSessionBody(BaseModel):
    model_id: str
    seed: int = 0
    pool_size: int = Field(default=0, ge=0)  # 0: server default


class AnswerBody(BaseModel):
    choice: Literal["A", "B"]
    question_id: Optional[int] = None


class RatingBody(BaseModel):
    score: int = Field(ge=0, le=5)


def _discover_models(models_dir: Path) -> dict[str, dict]:
    out = {}
    for path in sorted(models_dir.glob("*.cnf")) + sorted(models_dir.glob("*.dimacs")):
        out[path.stem] = {"id": path.stem, "kind": "cnf", "path": path}
    for path in sorted(models_dir.glob("*.csv")):
        if path.name.endswith(".values.csv"):
            continue
        if path.with_suffix(".objectives.json").exists():
            out.setdefault(path.stem, {"id": path.stem, "kind": "csv", "path": path})
    return out


def create_app(
    models_dir: str,
    session_ttl: float = 3600.0,
    pool_size: int = 2000,
    snapshot_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="isneak session api")
    root = Path(models_dir)
    sessions: dict[str, Session] = {}
    pools: dict[tuple, model_io.CandidatePool] = {}
    registry_lock = threading.Lock()

    def expire_idle():
        now = time.time()
        for s in list(sessions.values()):
            if s.state in ("running", "awaiting_answer") and now - s.last_active > session_ttl:
                s.abort()

    def get_session(session_id: str) -> Session:
        expire_idle()
        s = sessions.get(session_id)
        if s is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        s.touch()
        return s

    def build_pool(model_id: str, seed: int, size: int) -> model_io.CandidatePool:
        models = _discover_models(root)
        if model_id not in models:
            raise HTTPException(status_code=404, detail=f"unknown model {model_id}")
        key = (model_id, seed, size)
        with registry_lock:
            if key in pools:
                return pools[key]
        entry = models[model_id]
        path: Path = entry["path"]
        if entry["kind"] == "cnf":
            model = model_io.parse_dimacs(path.read_text(), name=model_id)
            sidecar = path.with_suffix(".objectives.json")
            if not sidecar.exists():
                raise HTTPException(status_code=400, detail=f"model {model_id} has no objectives sidecar")
            spec = model_io.ObjectiveSpec.from_sidecar_json(sidecar.read_text())
            values_csv = path.with_suffix(".values.csv")
            if values_csv.exists():
                values = model_io.feature_values_from_csv(
                    values_csv.read_text(), spec, model.var_names
                )
                spec = model_io.ObjectiveSpec(spec.goals, per_feature_values=values)
            try:
                pool = model_io.enumerate_valid(model, size, seed, spec=spec)
            except IsneakError as e:
                raise HTTPException(status_code=400, detail=str(e))
        else:
            spec = model_io.ObjectiveSpec.from_sidecar_json(
                path.with_suffix(".objectives.json").read_text()
            )
            pool = model_io.load_candidate_table(path.read_text(), spec, name=model_id)
        encode_pool(pool)
        with registry_lock:
            pools[key] = pool
        return pool

    @app.get("/api/v1/models")
    def list_models():
        return {
            "models": [
                {"id": m["id"], "kind": m["kind"]} for m in _discover_models(root).values()
            ]
        }

    @app.post("/api/v1/sessions")
    def create_session(body: CreateSessionBody):
        expire_idle()
        size = body.pool_size or pool_size
        pool = build_pool(body.model_id, body.seed, size)
        session_id = uuid.uuid4().hex[:12]
        session = Session(session_id, pool, body.seed, timeout=session_ttl)
        sessions[session_id] = session
        return {"session_id": session_id}

    @app.get("/api/v1/sessions/{session_id}")
    def session_state(session_id: str):
        s = get_session(session_id)
        # the engine thread flips state; wait briefly so the first poll after
        # an answer usually sees the next question instead of "running"
        for _ in range(200):
            with s.lock:
                state = s.state
            if state != "running":
                break
            time.sleep(0.01)
        with s.lock:
            doc = {"state": s.state, "progress": dict(s.progress)}
            if s.pending_question is not None:
                doc["question"] = s.pending_question.to_dict(s.pool)
            if s.error:
                doc["error"] = s.error
        return doc

    @app.post("/api/v1/sessions/{session_id}/answer")
    def post_answer(session_id: str, body: AnswerBody):
        s = get_session(session_id)
        with s.lock:
            if s.state != "awaiting_answer" or s.pending_question is None:
                raise HTTPException(status_code=409, detail="session is not awaiting an answer")
            if body.question_id is not None and body.question_id != s.pending_question.qid:
                raise HTTPException(
                    status_code=409,
                    detail=f"question {body.question_id} is not pending",
                )
            qid = s.pending_question.qid
            s.state = "running"
            record = {"question_id": qid, "choice": body.choice}
            s.answered.append(record)
        if snapshot_dir:
            snap = Path(snapshot_dir)
            snap.mkdir(parents=True, exist_ok=True)
            (snap / f"{session_id}.json").write_text(
                json.dumps({"session_id": session_id, "seed": s.seed, "answers": s.answered})
            )
        s.answers.put(body.choice)
        return {"accepted": True, "question_id": qid}

    @app.get("/api/v1/sessions/{session_id}/result")
    def session_result(session_id: str):
        s = get_session(session_id)
        with s.lock:
            awaiting = s.state == "awaiting_answer"
        if not awaiting:
            # give a just-resumed engine a moment to finish pass 2
            s.thread.join(timeout=10.0)
        with s.lock:
            if s.state != "done" or s.result is None:
                raise HTTPException(status_code=404, detail="result not available yet")
            doc = s.result.to_dict(s.pool)
        doc["ratings"] = list(s.ratings)
        return doc

    @app.post("/api/v1/sessions/{session_id}/rating")
    def post_rating(session_id: str, body: RatingBody):
        s = get_session(session_id)
        s.ratings.append(body.score)
        return {"accepted": True, "ratings": list(s.ratings)}

    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
