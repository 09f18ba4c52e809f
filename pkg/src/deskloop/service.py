"""HTTP session service: live closed-loop episodes over a push event stream."""

from __future__ import annotations

import base64
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .agent import Backends, LoopConfig, adhoc_task, run_episode
from .backends import ModelBackend, backend_from_uri
from .events import EventLog, EventSink, SessionEvent
from .kinematics import default_arm
from .perception import OracleDetector, overhead_camera
from .prompts import load_profile
from .registry import Registry, default_registry
from .sim.objects import SceneError
from .sim.scenarios import make_scene
from .skills import SkillExecutor
from .speech import SpeechError, VadConfig, pcm16_to_float, segment_samples, slice_segment

import io
import wave

SESSION_SCHEMA = "session@1"

# Pipeline states mirror the closed-loop stages.
_STATE_BY_EVENT = {
    "plan": "executing",
    "scene_snapshot": "evaluating",
}


class CreateSessionRequest(BaseModel):
    scenario: str
    seed: int = 0
    config: dict = {}


class InstructionRequest(BaseModel):
    text: str | None = None
    audio_wav_b64: str | None = None


@dataclass
class Session:
    session_id: str
    scenario: str
    seed: int
    config: LoopConfig
    scene: object
    executor: SkillExecutor
    backend: ModelBackend
    log: EventLog
    state: str = "awaiting_instruction"
    busy: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    def descriptor(self) -> dict:
        return {
            "schema": SESSION_SCHEMA,
            "session_id": self.session_id,
            "scenario": self.scenario,
            "seed": self.seed,
            "state": self.state,
            "last_seq": self.log.last_seq,
            "config": self.config.to_dict(),
        }


class _SessionSink(EventSink):
    """Event sink that tracks pipeline state and speaks feedback via TTS."""

    def __init__(self, session: Session, tts=None):
        super().__init__(log=session.log)
        self._session = session
        self._tts = tts

    def emit(self, kind: str, payload: dict) -> SessionEvent:
        if self._tts is not None and kind == "speech_out":
            handle = self._tts.synthesize(payload["text"])
            payload = dict(payload, audio=handle.kind)
        event = super().emit(kind, payload)
        next_state = _STATE_BY_EVENT.get(kind)
        if next_state:
            self._session.state = next_state
        return event


class SessionManager:
    """Owns all sessions; one in-flight instruction per session."""

    def __init__(
        self,
        registry: Registry | None = None,
        backend_uri: str = "mock://rule",
        data_dir: str | Path | None = None,
        capacity: int = 64,
        clock: Callable[[], float] | None = None,
        fail_prob: float = 0.0,
        asr=None,
        tts=None,
    ):
        self.registry = registry or default_registry()
        self.backend_uri = backend_uri
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.capacity = capacity
        self.clock = clock
        self.fail_prob = fail_prob
        self.asr = asr
        self.tts = tts
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, scenario: str, seed: int, config: dict | None = None) -> Session:
        if str(scenario) not in self.registry.scenarios:
            raise SceneError(f"unknown scenario {scenario!r}")
        with self._lock:
            if len(self.sessions) >= self.capacity:
                raise CapacityError(f"session capacity {self.capacity} reached")
            session_id = uuid.uuid4().hex[:12]
            scene = make_scene(str(scenario), seed, self.registry)
            camera = overhead_camera(self.registry)
            executor = SkillExecutor(
                scene,
                detector=OracleDetector(camera),
                camera=camera,
                arm=default_arm(self.registry),
                fail_prob=self.fail_prob,
                registry=self.registry,
            )
            log_path = None
            if self.data_dir is not None:
                log_path = self.data_dir / f"session-{session_id}.jsonl"
            session = Session(
                session_id=session_id,
                scenario=str(scenario),
                seed=seed,
                config=LoopConfig(**(config or {})),
                scene=scene,
                executor=executor,
                backend=backend_from_uri(self.backend_uri, self.registry),
                log=EventLog(path=log_path, clock=self.clock),
            )
            self.sessions[session_id] = session
        session.log.append("scene_snapshot", {"snapshot": scene.to_snapshot(), "initial": True})
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(f"unknown session {session_id!r}")
        return session

    def _transcribe(self, audio_wav_b64: str) -> str:
        if self.asr is None:
            raise SpeechError("no ASR client bound")
        raw = base64.b64decode(audio_wav_b64)
        with wave.open(io.BytesIO(raw), "rb") as handle:
            rate = handle.getframerate()
            samples = pcm16_to_float(handle.readframes(handle.getnframes()))
        config = VadConfig(sample_rate=rate)
        segments = segment_samples(samples, config)
        if not segments:
            raise SpeechError("no speech detected in the audio")
        utterance = slice_segment(samples, segments[0], config)
        return self.asr.transcribe(utterance, rate)

    def submit(self, session_id: str, text: str | None, audio_wav_b64: str | None = None) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.state == "closed":
                raise ClosedSessionError(f"session {session_id} is closed")
            if session.busy:
                raise BusySessionError(f"session {session_id} is executing an instruction")
            if audio_wav_b64 is not None:
                text = self._transcribe(audio_wav_b64)
            if not text or not text.strip():
                raise SpeechError("empty instruction")
            session.busy = True
            session.state = "planning"

        instruction = text.strip()
        task = self.registry.task_by_instruction(instruction)
        if task is None:
            task = adhoc_task(instruction, session.scenario)
        profile = load_profile("prompted" if task.prompted else "unprompted")
        sink = _SessionSink(session, tts=self.tts)

        def runner() -> None:
            try:
                run_episode(
                    Backends.shared(session.backend),
                    session.executor,
                    task,
                    session.config,
                    profile,
                    sink=sink,
                    registry=self.registry,
                )
            except Exception as exc:  # surfaced to subscribers, never lost
                session.log.append("error", {"stage": "episode", "message": str(exc)})
            finally:
                session.state = "awaiting_instruction"
                session.busy = False

        thread = threading.Thread(target=runner, name=f"episode-{session_id}", daemon=True)
        thread.start()
        return {"schema": SESSION_SCHEMA, "accepted": True, "session_id": session_id}

    def close(self, session_id: str) -> None:
        session = self.get(session_id)
        session.state = "closed"
        session.log.close()


class BusySessionError(Exception):
    pass


class ClosedSessionError(Exception):
    pass


class CapacityError(Exception):
    pass


def _sse_frame(event: SessionEvent) -> str:
    return f"id: {event.seq}\nevent: {event.kind}\ndata: {event.to_json()}\n\n"


def create_app(manager: SessionManager | None = None) -> FastAPI:
    manager = manager or SessionManager()
    app = FastAPI(title="deskloop session service")
    app.state.manager = manager

    @app.post("/sessions", status_code=201)
    def create_session(request: CreateSessionRequest) -> dict:
        try:
            session = manager.create(request.scenario, request.seed, request.config)
        except SceneError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except CapacityError as exc:
            raise HTTPException(status_code=429, detail=str(exc))
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"bad config: {exc}")
        return session.descriptor()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        try:
            return manager.get(session_id).descriptor()
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/sessions/{session_id}/instructions", status_code=202)
    def submit_instruction(session_id: str, request: InstructionRequest) -> dict:
        try:
            return manager.submit(session_id, request.text, request.audio_wav_b64)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except BusySessionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ClosedSessionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except SpeechError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/sessions/{session_id}/events")
    def stream_events(session_id: str, from_seq: int = 1, follow: bool = False):
        try:
            session = manager.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

        def replay() -> Iterator[str]:
            for event in session.log.events_from(from_seq):
                yield _sse_frame(event)

        def live() -> Iterator[str]:
            for event in session.log.follow(from_seq):
                yield _sse_frame(event)

        generator = live() if follow else replay()
        return StreamingResponse(generator, media_type="text/event-stream")

    @app.get("/sessions/{session_id}/scene")
    def get_scene(session_id: str) -> dict:
        try:
            session = manager.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return session.scene.to_snapshot()

    @app.get("/tasks")
    def list_tasks() -> dict:
        return {
            "schema": "tasks@1",
            "tasks": [
                {
                    "task_id": task.task_id,
                    "scene": task.scene,
                    "category": task.category,
                    "prompted": task.prompted,
                    "instruction": task.instruction,
                    "goal_state": task.goal_state,
                }
                for task in manager.registry.tasks.values()
            ],
        }

    @app.get("/scenarios")
    def list_scenarios() -> dict:
        return {
            "schema": "scenarios@1",
            "scenarios": [
                {
                    "scene": key,
                    "name": value.get("name", key),
                    "objects": value.get("objects", []),
                    "containers": value.get("containers", []),
                }
                for key, value in manager.registry.scenarios.items()
            ],
        }

    return app
