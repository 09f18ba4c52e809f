"""Energy-triggered speech capture over PCM frames, plus ASR/TTS clients.

The capture state machine samples a one-second monitoring window first,
arms itself with the resulting threshold, starts recording when a frame's
RMS exceeds the threshold, and confirms the segment once the level stays
at or below the threshold for two consecutive seconds. The emitted segment
ends at the last loud frame; the trailing silence is confirmation, not
content.
"""

from __future__ import annotations

import base64
import io
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import httpx
import numpy as np


class SpeechError(Exception):
    """Malformed audio or client misuse."""


class SpeechTransportError(SpeechError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class EmptyTranscriptError(SpeechError):
    """The ASR service returned no text for a non-empty segment."""


@dataclass(frozen=True)
class VadConfig:
    sample_rate: int = 16000
    frame_ms: int = 30
    monitor_window_s: float = 1.0
    end_silence_s: float = 2.0
    threshold_mode: str = "absolute"  # absolute | adaptive
    absolute_threshold: float = 0.1   # absolute trigger, and the adaptive floor
    k: float = 3.0

    def __post_init__(self) -> None:
        if self.threshold_mode not in ("absolute", "adaptive"):
            raise SpeechError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.sample_rate <= 0 or self.frame_ms <= 0:
            raise SpeechError("sample rate and frame length must be positive")

    @property
    def frame_samples(self) -> int:
        return self.sample_rate * self.frame_ms // 1000

    @property
    def monitor_frames(self) -> int:
        # Windows are measured in whole frames, rounded up.
        return math.ceil(self.monitor_window_s * 1000.0 / self.frame_ms)

    @property
    def silence_frames(self) -> int:
        return math.ceil(self.end_silence_s * 1000.0 / self.frame_ms)

    def threshold_from_monitor(self, monitor_rms: list[float]) -> float:
        if self.threshold_mode == "absolute":
            return self.absolute_threshold
        median = float(np.median(np.asarray(monitor_rms)))
        return max(self.k * median, self.absolute_threshold)


@dataclass(frozen=True)
class CaptureSegment:
    start_frame: int
    end_frame: int  # inclusive; the last above-threshold frame
    trigger_rms: float
    rms_trace: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.start_frame > self.end_frame:
            raise SpeechError("segment ends before it starts")


def frame_rms(frame: np.ndarray) -> float:
    samples = np.asarray(frame, dtype=np.float64)
    return float(np.sqrt(np.mean(samples * samples)))


class VoiceTrigger:
    """Streaming capture state machine; O(1) beyond the active segment."""

    def __init__(self, config: VadConfig | None = None):
        self.config = config or VadConfig()
        self.state = "monitoring"
        self.threshold: float | None = None
        self.frame_index = -1
        self._monitor_rms: list[float] = []
        self._segment_start = 0
        self._last_loud = 0
        self._trace: list[float] = []

    def push(self, frame: np.ndarray) -> CaptureSegment | None:
        samples = np.asarray(frame)
        if samples.shape != (self.config.frame_samples,):
            raise SpeechError(
                f"frame must hold {self.config.frame_samples} samples, got {samples.shape}"
            )
        self.frame_index += 1
        rms = frame_rms(samples)

        if self.state == "monitoring":
            self._monitor_rms.append(rms)
            if len(self._monitor_rms) >= self.config.monitor_frames:
                self.threshold = self.config.threshold_from_monitor(self._monitor_rms)
                self.state = "armed"
            return None

        assert self.threshold is not None
        if self.state == "armed":
            if rms > self.threshold:
                self.state = "recording"
                self._segment_start = self.frame_index
                self._last_loud = self.frame_index
                self._trace = [rms]
            return None

        # recording
        self._trace.append(rms)
        if rms > self.threshold:
            self._last_loud = self.frame_index
            return None
        if self.frame_index - self._last_loud >= self.config.silence_frames:
            length = self._last_loud - self._segment_start + 1
            segment = CaptureSegment(
                start_frame=self._segment_start,
                end_frame=self._last_loud,
                trigger_rms=self._trace[0],
                rms_trace=tuple(self._trace[:length]),
            )
            self.state = "armed"
            self._trace = []
            return segment
        return None


def vad_step(trigger: VoiceTrigger, frame: np.ndarray) -> tuple[VoiceTrigger, CaptureSegment | None]:
    """Functional facade over :class:`VoiceTrigger` for one frame."""
    return trigger, trigger.push(frame)


def segment_rms_trace(rms: list[float] | np.ndarray, config: VadConfig | None = None) -> list[CaptureSegment]:
    """Offline segmentation over a precomputed per-frame RMS trace.

    Independent of the streaming machine; the two must agree on every
    signal (covered by tests).
    """
    config = config or VadConfig()
    values = [float(v) for v in rms]
    monitor = config.monitor_frames
    if len(values) < monitor:
        return []
    threshold = config.threshold_from_monitor(values[:monitor])
    segments: list[CaptureSegment] = []
    index = monitor
    total = len(values)
    while index < total:
        if values[index] <= threshold:
            index += 1
            continue
        start = index
        last_loud = index
        cursor = index + 1
        confirmed = False
        while cursor < total:
            if values[cursor] > threshold:
                last_loud = cursor
            elif cursor - last_loud >= config.silence_frames:
                confirmed = True
                break
            cursor += 1
        if not confirmed:
            break
        segments.append(
            CaptureSegment(
                start_frame=start,
                end_frame=last_loud,
                trigger_rms=values[start],
                rms_trace=tuple(values[start : last_loud + 1]),
            )
        )
        index = cursor + 1
    return segments


def iter_frames(samples: np.ndarray, config: VadConfig) -> list[np.ndarray]:
    """Whole frames from a sample buffer; a trailing partial frame is dropped."""
    size = config.frame_samples
    count = len(samples) // size
    return [samples[i * size : (i + 1) * size] for i in range(count)]


def segment_samples(samples: np.ndarray, config: VadConfig | None = None) -> list[CaptureSegment]:
    """Batch segmentation of a raw sample buffer via the offline route."""
    config = config or VadConfig()
    trace = [frame_rms(frame) for frame in iter_frames(samples, config)]
    return segment_rms_trace(trace, config)


def segment_samples_streaming(samples: np.ndarray, config: VadConfig | None = None) -> list[CaptureSegment]:
    """Feed a buffer frame-by-frame through the streaming machine."""
    config = config or VadConfig()
    trigger = VoiceTrigger(config)
    segments = []
    for frame in iter_frames(samples, config):
        segment = trigger.push(frame)
        if segment is not None:
            segments.append(segment)
    return segments


def slice_segment(samples: np.ndarray, segment: CaptureSegment, config: VadConfig) -> np.ndarray:
    size = config.frame_samples
    return samples[segment.start_frame * size : (segment.end_frame + 1) * size]


# -- PCM / WAV helpers -----------------------------------------------------


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """16-bit little-endian mono WAV to normalized float samples."""
    with wave.open(str(path), "rb") as handle:
        if handle.getnchannels() != 1:
            raise SpeechError("expected mono audio")
        if handle.getsampwidth() != 2:
            raise SpeechError("expected 16-bit PCM")
        rate = handle.getframerate()
        raw = handle.readframes(handle.getnframes())
    return pcm16_to_float(raw), rate


def pcm16_to_float(raw: bytes) -> np.ndarray:
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0


def float_to_pcm16(samples: np.ndarray) -> bytes:
    clipped = np.clip(np.asarray(samples), -1.0, 1.0)
    return (clipped * 32767.0).astype("<i2").tobytes()


def write_wav_bytes(samples: np.ndarray, sample_rate: int) -> bytes:
    buffer = io.BytesIO()
    with wave.open(buffer, "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(sample_rate)
        handle.writeframes(float_to_pcm16(samples))
    return buffer.getvalue()


# -- ASR/TTS clients ---------------------------------------------------------


@dataclass
class AudioHandle:
    """Reference to synthesized audio; text mode produces a no-op handle."""

    kind: str  # noop | http
    text: str
    data: bytes | None = None


class TextModeAsr:
    """Scripted transcripts for hermetic tests and text-mode sessions."""

    def __init__(self, transcripts: list[str] | None = None):
        self.transcripts = list(transcripts or [])

    def transcribe(self, samples: np.ndarray, sample_rate: int) -> str:
        if len(samples) == 0:
            raise SpeechError("empty audio segment")
        if not self.transcripts:
            raise EmptyTranscriptError("no scripted transcript left")
        return self.transcripts.pop(0)


class TextModeTts:
    def __init__(self) -> None:
        self.spoken: list[str] = []

    def synthesize(self, text: str) -> AudioHandle:
        if not text.strip():
            raise SpeechError("empty text")
        self.spoken.append(text)
        return AudioHandle(kind="noop", text=text)


class HttpAsr:
    """Client for an ASR service accepting base64 WAV."""

    def __init__(self, url: str, timeout: float = 30.0, client: httpx.Client | None = None):
        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def transcribe(self, samples: np.ndarray, sample_rate: int) -> str:
        if len(samples) == 0:
            raise SpeechError("empty audio segment")
        body = {
            "schema": "asr@1",
            "audio_wav_b64": base64.b64encode(write_wav_bytes(samples, sample_rate)).decode(),
        }
        response = _post(self._client, self.url, body)
        text = response.get("text", "")
        if not text.strip():
            raise EmptyTranscriptError("service returned an empty transcript")
        return text


class HttpTts:
    def __init__(self, url: str, timeout: float = 30.0, client: httpx.Client | None = None):
        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def synthesize(self, text: str) -> AudioHandle:
        if not text.strip():
            raise SpeechError("empty text")
        response = _post(self._client, self.url, {"schema": "tts@1", "text": text})
        audio = base64.b64decode(response.get("audio_wav_b64", ""))
        return AudioHandle(kind="http", text=text, data=audio)


def _post(client: httpx.Client, url: str, body: dict) -> dict:
    try:
        response = client.post(url, json=body)
    except httpx.HTTPError as exc:
        raise SpeechTransportError(f"speech service transport failure: {exc}") from exc
    if response.status_code == 503:
        retry_after = response.headers.get("retry-after")
        raise SpeechTransportError(
            "speech service unavailable",
            retry_after=float(retry_after) if retry_after else None,
        )
    if response.status_code != 200:
        raise SpeechTransportError(f"speech service returned HTTP {response.status_code}")
    return response.json()


def transcribe(client, samples: np.ndarray, sample_rate: int) -> str:
    """Run a segment's audio through an ASR client."""
    return client.transcribe(samples, sample_rate)


def synthesize(client, text: str) -> AudioHandle:
    """Render feedback text through a TTS client."""
    return client.synthesize(text)
