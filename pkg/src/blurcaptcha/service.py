"""One-shot CAPTCHA challenge service and the human readability trial API.

Every challenge can be answered exactly once: the first verify or trial
answer consumes it, no matter the outcome, and later attempts get 410.
Truth text never leaves the server through the API; only the private
transcript file records it. Time is read through an injectable clock so
expiry is deterministic under test.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .challenge import Challenge, ChallengeSpec, make_challenge
from .evaluate import TrialRecord, aggregate, exact_match, read_transcript, record_to_line, report_to_dict
from .raster import write_png

Clock = Callable[[], float]


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8037"
    ttl_seconds: float = 300.0
    default_radius: float = 2.0
    transcript_path: str = "transcript.jsonl"
    adapters_path: str | None = None
    static_dir: str | None = None
    cors_origins: list[str] = field(default_factory=lambda: ["*"])

    def __post_init__(self):
        if self.ttl_seconds <= 0:
            raise ValueError(f"ttl must be > 0, got {self.ttl_seconds}")
        if self.default_radius < 0:
            raise ValueError(f"default radius must be >= 0, got {self.default_radius}")

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])


def load_config(path: str | Path | None) -> ServiceConfig:
    """Read the JSON config file, then apply environment overrides."""
    doc = {}
    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    config = ServiceConfig(**doc)
    if "BLURCAPTCHA_LISTEN" in os.environ:
        config.listen = os.environ["BLURCAPTCHA_LISTEN"]
    if "BLURCAPTCHA_TTL" in os.environ:
        config.ttl_seconds = float(os.environ["BLURCAPTCHA_TTL"])
    return config


class UnknownChallenge(KeyError):
    pass


class ChallengeGone(RuntimeError):
    """Consumed or expired: the one-shot lifecycle is over."""


@dataclass
class StoreEntry:
    challenge: Challenge
    png: bytes
    expires_at: float


class ChallengeStore:
    """In-memory id -> challenge map with atomic one-shot state transitions."""

    def __init__(self, ttl_seconds: float, clock: Clock = time.time):
        self.ttl = ttl_seconds
        self.clock = clock
        self._lock = threading.Lock()
        self._entries: dict[str, StoreEntry] = {}

    def add(self, challenge: Challenge) -> StoreEntry:
        entry = StoreEntry(
            challenge=challenge,
            png=write_png(challenge.image),
            expires_at=self.clock() + self.ttl,
        )
        with self._lock:
            self._entries[challenge.id] = entry
        return entry

    def _checked(self, challenge_id: str) -> StoreEntry:
        # Caller holds the lock. Expiry is checked lazily on access and is
        # a one-way transition, like consumption.
        try:
            entry = self._entries[challenge_id]
        except KeyError:
            raise UnknownChallenge(challenge_id) from None
        if entry.challenge.state == "pending" and self.clock() >= entry.expires_at:
            entry.challenge.state = "expired"
        if entry.challenge.state != "pending":
            raise ChallengeGone(challenge_id)
        return entry

    def image_bytes(self, challenge_id: str) -> bytes:
        with self._lock:
            return self._checked(challenge_id).png

    def consume(self, challenge_id: str) -> Challenge:
        """Atomically transition pending -> consumed and return the challenge."""
        with self._lock:
            entry = self._checked(challenge_id)
            entry.challenge.state = "consumed"
            return entry.challenge


class TranscriptWriter:
    """Serialized append-only JSONL writer."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: TrialRecord) -> None:
        line = record_to_line(record) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


async def _json_body(request: Request) -> dict | None:
    raw = await request.body()
    if not raw:
        return {}
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError:
        return None
    return doc if isinstance(doc, dict) else None


def create_app(config: ServiceConfig | None = None, clock: Clock = time.time) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="blurcaptcha", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    store = ChallengeStore(config.ttl_seconds, clock)
    transcript = TranscriptWriter(config.transcript_path)
    app.state.store = store
    app.state.config = config

    @app.post("/api/challenge")
    async def create_challenge(request: Request):
        body = await _json_body(request)
        if body is None:
            return _error(400, "body must be a JSON object")
        radius = body.get("radius", config.default_radius)
        if not isinstance(radius, (int, float)) or isinstance(radius, bool):
            return _error(400, "radius must be a number")
        if radius < 0:
            return _error(400, "radius must be >= 0")

        spec = ChallengeSpec(seed=secrets.randbits(64), radius=float(radius))
        challenge = make_challenge(spec, now=clock())
        entry = store.add(challenge)
        return {
            "id": challenge.id,
            "image_url": f"/api/image/{challenge.id}.png",
            "expires_at": entry.expires_at,
        }

    @app.get("/api/image/{name}")
    async def challenge_image(name: str):
        if not name.endswith(".png"):
            return _error(404, "unknown image")
        challenge_id = name[: -len(".png")]
        try:
            png = store.image_bytes(challenge_id)
        except UnknownChallenge:
            return _error(404, "unknown challenge")
        except ChallengeGone:
            return _error(410, "challenge consumed or expired")
        return Response(content=png, media_type="image/png")

    @app.post("/api/verify")
    async def verify(request: Request):
        body = await _json_body(request)
        if body is None or not isinstance(body.get("id"), str) or not isinstance(body.get("response"), str):
            return _error(400, "expected {id, response}")
        try:
            challenge = store.consume(body["id"])
        except UnknownChallenge:
            return _error(404, "unknown challenge")
        except ChallengeGone:
            return _error(410, "challenge consumed or expired")
        return {"pass": exact_match(challenge.truth, body["response"])}

    @app.post("/api/trial/answer")
    async def trial_answer(request: Request):
        body = await _json_body(request)
        if body is None or not isinstance(body.get("id"), str) or not isinstance(body.get("response"), str):
            return _error(400, "expected {id, response, rating}")
        rating = body.get("rating")
        if not isinstance(rating, int) or isinstance(rating, bool) or not 1 <= rating <= 10:
            return _error(400, "rating must be an integer in 1..10")
        try:
            challenge = store.consume(body["id"])
        except UnknownChallenge:
            return _error(404, "unknown challenge")
        except ChallengeGone:
            return _error(410, "challenge consumed or expired")
        transcript.append(
            TrialRecord(
                challenge_id=challenge.id,
                truth=challenge.truth,
                response=body["response"],
                responder="human",
                radius=challenge.radius,
                rating=rating,
            )
        )
        # Blind trial: correctness is never revealed mid-session.
        return {"recorded": True}

    @app.get("/api/report")
    async def report():
        path = Path(config.transcript_path)
        records = read_transcript(path) if path.exists() else []
        if not records:
            return Response(status_code=204)
        return report_to_dict(aggregate(records))

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/trial", StaticFiles(directory=config.static_dir, html=True), name="trial")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
