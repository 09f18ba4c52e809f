import base64
import json
import threading
import time

import httpx
import numpy as np
import pytest
import uvicorn

from deskloop.events import read_jsonl
from deskloop.service import SessionManager, create_app
from deskloop.speech import TextModeAsr, write_wav_bytes

FRUIT_TASK = "Place all the fruits into the red plate"


class ServiceFixture:
    def __init__(self, manager, port):
        self.manager = manager
        self.app = create_app(manager)
        config = uvicorn.Config(self.app, host="127.0.0.1", port=port, log_level="error")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.client = httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=30)

    def start(self):
        self.thread.start()
        for _ in range(200):
            try:
                self.client.get("/tasks")
                return self
            except httpx.HTTPError:
                time.sleep(0.02)
        raise RuntimeError("service did not come up")

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=5)

    # -- helpers -----------------------------------------------------------

    def create_session(self, scenario="5", seed=7, config=None):
        response = self.client.post(
            "/sessions", json={"scenario": scenario, "seed": seed, "config": config or {}}
        )
        assert response.status_code == 201, response.text
        return response.json()

    def events(self, session_id, from_seq=1):
        response = self.client.get(
            f"/sessions/{session_id}/events", params={"from_seq": from_seq, "follow": "false"}
        )
        return parse_sse(response.text)

    def follow_until_final(self, session_id, from_seq=1, timeout=20.0):
        events = []
        deadline = time.monotonic() + timeout
        with self.client.stream(
            "GET",
            f"/sessions/{session_id}/events",
            params={"from_seq": from_seq, "follow": "true"},
        ) as stream:
            buffer = ""
            for chunk in stream.iter_text():
                if time.monotonic() > deadline:
                    raise TimeoutError("no final speech event")
                buffer += chunk
                while "\n\n" in buffer:
                    frame, buffer = buffer.split("\n\n", 1)
                    event = parse_frame(frame)
                    events.append(event)
                    if event["kind"] == "speech_out" and event["payload"].get("final"):
                        return events
        return events


def parse_frame(frame):
    data_line = next(l for l in frame.splitlines() if l.startswith("data: "))
    return json.loads(data_line[len("data: "):])


def parse_sse(text):
    return [parse_frame(f) for f in text.split("\n\n") if f.strip()]


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    manager = SessionManager(
        data_dir=tmp_path_factory.mktemp("sessions"),
        asr=TextModeAsr([FRUIT_TASK]),
    )
    fixture = ServiceFixture(manager, port=8693)
    fixture.start()
    yield fixture
    fixture.stop()


def test_create_emits_initial_snapshot_as_seq_one(service):
    session = service.create_session(scenario="5", seed=7)
    assert session["state"] == "awaiting_instruction"
    events = service.events(session["session_id"])
    assert events[0]["seq"] == 1
    assert events[0]["kind"] == "scene_snapshot"
    assert events[0]["payload"]["initial"] is True


def test_invalid_scenario_is_client_error(service):
    response = service.client.post("/sessions", json={"scenario": "99", "seed": 0})
    assert response.status_code == 400


def test_two_sessions_are_isolated(service):
    a = service.create_session(scenario="1", seed=1)
    b = service.create_session(scenario="1", seed=1)
    assert a["session_id"] != b["session_id"]
    service.client.post(
        f"/sessions/{a['session_id']}/instructions",
        json={"text": "Stack the letter blocks in alphabetical order"},
    )
    service.follow_until_final(a["session_id"])
    assert len(service.events(a["session_id"])) > 1
    assert len(service.events(b["session_id"])) == 1  # untouched


def test_submit_streams_ordered_episode(service):
    session = service.create_session()
    sid = session["session_id"]
    response = service.client.post(f"/sessions/{sid}/instructions", json={"text": FRUIT_TASK})
    assert response.status_code == 202
    live = service.follow_until_final(sid)

    kinds = [e["kind"] for e in live]
    for expected in ("scene_snapshot", "instruction", "plan", "step_started",
                     "skill_call", "step_result", "verdict", "speech_out"):
        assert expected in kinds
    # Pipeline order: instruction before plan before first step before verdict.
    assert kinds.index("instruction") < kinds.index("plan") < kinds.index("step_started")
    assert kinds.index("verdict") > kinds.index("step_result")
    verdict = next(e for e in live if e["kind"] == "verdict")
    assert verdict["payload"]["outcome"] == "success"

    seqs = [e["seq"] for e in live]
    assert seqs == list(range(1, len(seqs) + 1))  # gap-free, no duplicates

    replay = service.events(sid)
    assert replay[: len(live)] == live  # replay equals the live stream

    # Resume: ask for only what came after the live prefix.
    resumed = service.events(sid, from_seq=len(live) + 1)
    assert [e["seq"] for e in resumed] == list(range(len(live) + 1, len(replay) + 1))


def test_concurrent_subscribers_see_identical_sequences(service):
    session = service.create_session(scenario="7", seed=3)
    sid = session["session_id"]
    results = {}

    def subscribe(name):
        results[name] = service.follow_until_final(sid)

    threads = [threading.Thread(target=subscribe, args=(f"s{i}",)) for i in range(2)]
    for t in threads:
        t.start()
    time.sleep(0.1)
    service.client.post(
        f"/sessions/{sid}/instructions", json={"text": "Put all the tools into the box"}
    )
    for t in threads:
        t.join(timeout=20)
    assert results["s0"] == results["s1"]


def test_busy_session_rejects_second_instruction(service):
    session = service.create_session(scenario="6", seed=2)
    sid = session["session_id"]
    service.client.post(
        f"/sessions/{sid}/instructions",
        json={"text": "Put all the snacks into the box, excluding the chewing gum"},
    )
    second = service.client.post(f"/sessions/{sid}/instructions", json={"text": "again"})
    assert second.status_code == 409
    service.follow_until_final(sid)


def test_unknown_session_is_404(service):
    assert service.client.get("/sessions/nope/events").status_code == 404
    assert service.client.post("/sessions/nope/instructions", json={"text": "x"}).status_code == 404


def test_persisted_jsonl_equals_streamed_events(service):
    session = service.create_session(scenario="9", seed=4)
    sid = session["session_id"]
    service.client.post(
        f"/sessions/{sid}/instructions", json={"text": "Put all the daily-use items into the box"}
    )
    live = service.follow_until_final(sid)
    path = service.manager.data_dir / f"session-{sid}.jsonl"
    persisted = [e.to_dict() for e in read_jsonl(path)]
    assert persisted[: len(live)] == live


def test_scene_endpoint_reflects_execution(service):
    session = service.create_session(scenario="5", seed=9)
    sid = session["session_id"]
    service.client.post(f"/sessions/{sid}/instructions", json={"text": FRUIT_TASK})
    service.follow_until_final(sid)
    snapshot = service.client.get(f"/sessions/{sid}/scene").json()
    fruits = [o for o in snapshot["objects"].values() if o["category"] == "fruit"]
    assert all(o["contained_in"] == "red plate" for o in fruits)


def test_task_and_scenario_listings(service):
    tasks = service.client.get("/tasks").json()["tasks"]
    assert len(tasks) == 24
    scenarios = service.client.get("/scenarios").json()["scenarios"]
    assert {s["scene"] for s in scenarios} >= {str(i) for i in range(1, 11)}


def test_audio_instruction_runs_speech_first(service):
    session = service.create_session(scenario="5", seed=11)
    sid = session["session_id"]
    sr = 16000
    utterance = np.concatenate(
        [np.zeros(sr), 0.4 * np.sin(2 * np.pi * 330 * np.arange(sr) / sr), np.zeros(3 * sr)]
    )
    blob = base64.b64encode(write_wav_bytes(utterance, sr)).decode()
    response = service.client.post(
        f"/sessions/{sid}/instructions", json={"audio_wav_b64": blob}
    )
    assert response.status_code == 202
    live = service.follow_until_final(sid)
    instruction = next(e for e in live if e["kind"] == "instruction")
    assert instruction["payload"]["text"] == FRUIT_TASK  # scripted ASR transcript


def test_audio_without_asr_binding_is_client_error(tmp_path):
    manager = SessionManager(data_dir=tmp_path)  # no ASR client bound
    fixture = ServiceFixture(manager, port=8694)
    fixture.start()
    try:
        session = fixture.create_session(scenario="5", seed=1)
        response = fixture.client.post(
            f"/sessions/{session['session_id']}/instructions",
            json={"audio_wav_b64": base64.b64encode(b"\0\0").decode()},
        )
        assert response.status_code == 400
        assert "no ASR client bound" in response.json()["detail"]
    finally:
        fixture.stop()


def test_three_sessions_run_episodes_concurrently(service):
    instructions = {
        "5": FRUIT_TASK,
        "7": "Put all the tools into the box",
        "9": "Put all the daily-use items into the box",
    }
    sids = {}
    for scenario in instructions:
        sids[scenario] = service.create_session(scenario=scenario, seed=13)["session_id"]
    for scenario, sid in sids.items():
        response = service.client.post(
            f"/sessions/{sid}/instructions", json={"text": instructions[scenario]}
        )
        assert response.status_code == 202

    results = {}
    threads = []

    def follow(scenario, sid):
        results[scenario] = service.follow_until_final(sid)

    for scenario, sid in sids.items():
        thread = threading.Thread(target=follow, args=(scenario, sid))
        thread.start()
        threads.append(thread)
    for thread in threads:
        thread.join(timeout=30)

    for scenario, events in results.items():
        seqs = [e["seq"] for e in events]
        assert seqs == list(range(1, len(seqs) + 1)), scenario
        verdict = next(e for e in events if e["kind"] == "verdict")
        assert verdict["payload"]["outcome"] == "success", scenario
