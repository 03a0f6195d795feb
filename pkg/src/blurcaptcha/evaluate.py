"""Scoring metrics, OCR adapters and the batch robustness experiment.

Character similarity is normalized Levenshtein similarity,
1 - distance / max(len), so it is robust to the insertions and deletions
OCR engines commonly make. Exact match trims and collapses whitespace
but keeps case significant. A response counts as "readable" when it
contains at least one alphanumeric character, i.e. the engine produced
something rather than nothing.

All means use exact summation (math.fsum), which makes aggregation
independent of record order.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .challenge import ChallengeSpec, make_corpus, save_corpus

REPORT_SCHEMA_VERSION = 1

HUMAN = "human"


class NoRecords(ValueError):
    """aggregate needs at least one record."""


class AdapterNotFound(RuntimeError):
    """The adapter's executable could not be spawned."""


class NonZeroExit(RuntimeError):
    """The adapter exited with a non-zero status."""

    def __init__(self, code: int, stderr: str):
        super().__init__(f"adapter exited with status {code}: {stderr.strip()}")
        self.code = code
        self.stderr = stderr


class AdapterTimeout(RuntimeError):
    """The adapter ran past its timeout."""


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def char_similarity(truth: str, response: str) -> float:
    """1 - normalized edit distance, in [0, 1]; two empty strings score 1."""
    if not truth and not response:
        return 1.0
    longest = max(len(truth), len(response))
    return max(0.0, 1.0 - levenshtein(truth, response) / longest)


def _normalize_ws(s: str) -> str:
    return " ".join(s.split())


def exact_match(truth: str, response: str) -> bool:
    """Case-sensitive equality after trimming and collapsing whitespace."""
    return _normalize_ws(truth) == _normalize_ws(response)


def is_readable(response: str) -> bool:
    """True when the response contains at least one alphanumeric character."""
    return any(c.isalnum() for c in response)


@dataclass(frozen=True)
class TrialRecord:
    """One responder's answer to one challenge."""

    challenge_id: str
    truth: str
    response: str
    responder: str  # "human" or "ocr:<name>"
    radius: float
    rating: int | None = None
    elapsed: float | None = None
    error: str | None = None

    def __post_init__(self):
        if self.rating is not None:
            if self.responder != HUMAN:
                raise ValueError("only human records carry a rating")
            if not 1 <= self.rating <= 10:
                raise ValueError(f"rating must be in 1..10, got {self.rating}")

    @property
    def is_human(self) -> bool:
        return self.responder == HUMAN

    @property
    def is_ocr(self) -> bool:
        return self.responder.startswith("ocr:")


@dataclass(frozen=True)
class BucketStats:
    n: int
    avg_char_similarity: float
    exact_match_pct: float
    readable_pct: float
    avg_rating: float | None


@dataclass(frozen=True)
class MetricsReport:
    """Per (responder, radius) buckets plus record-weighted OCR/human totals."""

    buckets: dict[tuple[str, float], BucketStats]
    totals: dict[str, BucketStats | None]


def _stats(records: list[TrialRecord]) -> BucketStats:
    n = len(records)
    ratings = [r.rating for r in records if r.rating is not None]
    return BucketStats(
        n=n,
        avg_char_similarity=math.fsum(
            char_similarity(r.truth, r.response) for r in records
        )
        / n,
        exact_match_pct=100.0 * sum(exact_match(r.truth, r.response) for r in records) / n,
        readable_pct=100.0 * sum(is_readable(r.response) for r in records) / n,
        avg_rating=math.fsum(ratings) / len(ratings) if ratings else None,
    )


def aggregate(records: list[TrialRecord]) -> MetricsReport:
    """Bucket by (responder, radius) and compute the table metrics."""
    if not records:
        raise NoRecords("cannot aggregate an empty record list")
    grouped: dict[tuple[str, float], list[TrialRecord]] = {}
    for rec in records:
        grouped.setdefault((rec.responder, rec.radius), []).append(rec)
    buckets = {key: _stats(grouped[key]) for key in sorted(grouped)}
    ocr_records = [r for r in records if r.is_ocr]
    human_records = [r for r in records if r.is_human]
    totals = {
        "ocr": _stats(ocr_records) if ocr_records else None,
        "human": _stats(human_records) if human_records else None,
    }
    return MetricsReport(buckets=buckets, totals=totals)


def report_to_dict(report: MetricsReport) -> dict:
    """JSON-shaped report document (full precision, versioned schema)."""

    def stats_dict(s: BucketStats | None):
        if s is None:
            return None
        return {
            "n": s.n,
            "avg_char_similarity": s.avg_char_similarity,
            "exact_match_pct": s.exact_match_pct,
            "readable_pct": s.readable_pct,
            "avg_rating": s.avg_rating,
        }

    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "buckets": [
            {"responder": responder, "radius": radius, **stats_dict(stats)}
            for (responder, radius), stats in report.buckets.items()
        ],
        "totals": {kind: stats_dict(s) for kind, s in report.totals.items()},
    }


# --- transcript persistence (JSON Lines, one record per line) ---

_TRANSCRIPT_KEYS = ("challenge_id", "truth", "response", "responder", "rating", "radius", "error")


def record_to_line(record: TrialRecord) -> str:
    doc = {
        "challenge_id": record.challenge_id,
        "truth": record.truth,
        "response": record.response,
        "responder": record.responder,
        "rating": record.rating,
        "radius": record.radius,
        "error": record.error,
    }
    return json.dumps(doc, ensure_ascii=False)


def record_from_line(line: str) -> TrialRecord:
    doc = json.loads(line)
    missing = [k for k in _TRANSCRIPT_KEYS if k not in doc]
    if missing:
        raise ValueError(f"transcript line missing keys: {missing}")
    return TrialRecord(
        challenge_id=doc["challenge_id"],
        truth=doc["truth"],
        response=doc["response"],
        responder=doc["responder"],
        radius=doc["radius"],
        rating=doc["rating"],
        error=doc["error"],
    )


def write_transcript(records: list[TrialRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_to_line(rec) + "\n")


def read_transcript(path: str | Path) -> list[TrialRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_line(line))
    return records


# --- OCR adapters ---

IMAGE_PLACEHOLDER = "{image}"


@dataclass(frozen=True)
class OcrAdapter:
    """External OCR command; `command` must contain {image} exactly once."""

    name: str
    command: str
    timeout: float = 30.0
    format: str = "png"  # image format handed to the command

    def __post_init__(self):
        if self.command.count(IMAGE_PLACEHOLDER) != 1:
            raise ValueError(
                f"adapter {self.name!r}: command must contain {IMAGE_PLACEHOLDER} exactly once"
            )
        if self.format not in ("png", "pgm"):
            raise ValueError(f"adapter {self.name!r}: format must be png or pgm")

    def argv(self, image_path: str | Path) -> list[str]:
        return [arg.replace(IMAGE_PLACEHOLDER, str(image_path)) for arg in shlex.split(self.command)]

    @property
    def responder(self) -> str:
        return f"ocr:{self.name}"


def load_adapters(path: str | Path) -> list[OcrAdapter]:
    """Adapter config: JSON list of {name, command, timeout_ms, format}."""
    docs = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        OcrAdapter(
            name=doc["name"],
            command=doc["command"],
            timeout=doc.get("timeout_ms", 30_000) / 1000.0,
            format=doc.get("format", "png"),
        )
        for doc in docs
    ]


def run_ocr(adapter: OcrAdapter, image_path: str | Path) -> str:
    """Run the adapter on one image; captured stdout, trailing newline stripped."""
    if not Path(image_path).exists():
        raise FileNotFoundError(f"image file does not exist: {image_path}")
    try:
        proc = subprocess.run(
            adapter.argv(image_path),
            capture_output=True,
            timeout=adapter.timeout,
        )
    except FileNotFoundError as exc:
        raise AdapterNotFound(f"adapter {adapter.name!r}: {exc}") from None
    except subprocess.TimeoutExpired:
        raise AdapterTimeout(
            f"adapter {adapter.name!r} exceeded {adapter.timeout}s on {image_path}"
        ) from None
    stdout = proc.stdout.decode("utf-8", errors="replace")
    if proc.returncode != 0:
        raise NonZeroExit(proc.returncode, proc.stderr.decode("utf-8", errors="replace"))
    return stdout.removesuffix("\n").removesuffix("\r")


# --- the batch experiment ---


def format_radius(radius: float) -> str:
    """Compact radius label: 1.0 -> "1", 1.5 -> "1.5"."""
    return format(radius, "g")


def run_experiment(
    n: int,
    radii: list[float],
    adapters: list[OcrAdapter],
    base_seed: int,
    out_dir: str | Path,
    scale: int = 4,
    padding: int = 8,
    alphabet: str | None = None,
) -> tuple[list[TrialRecord], MetricsReport]:
    """Generate per-radius corpora, run every adapter on every image, score.

    The same base_seed is used for every radius, so the truth texts match
    across radii and only the blur differs. Adapter failures become
    records with an empty response and the error noted, never an aborted
    run. Record ids are stable corpus coordinates ("r<radius>-<index>"),
    which keeps transcripts byte-identical across reruns.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not radii:
        raise ValueError("radii must not be empty")
    if not adapters:
        raise ValueError("at least one OCR adapter is required")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records: list[TrialRecord] = []
    for radius in radii:
        label = format_radius(radius)
        spec_kwargs = {"seed": 0, "radius": radius, "scale": scale, "padding": padding}
        if alphabet is not None:
            spec_kwargs["alphabet"] = alphabet
        template = ChallengeSpec(**spec_kwargs)
        corpus = make_corpus(n, template, base_seed)
        corpus_dir = out_dir / f"r{label}"
        save_corpus(corpus, template, base_seed, corpus_dir)

        for index, ch in enumerate(corpus):
            for adapter in adapters:
                image_path = corpus_dir / f"challenge_{index:04d}.{adapter.format}"
                response, error = "", None
                try:
                    response = run_ocr(adapter, image_path)
                except (AdapterNotFound, NonZeroExit, AdapterTimeout) as exc:
                    error = str(exc)
                records.append(
                    TrialRecord(
                        challenge_id=f"r{label}-{index:04d}",
                        truth=ch.truth,
                        response=response,
                        responder=adapter.responder,
                        radius=radius,
                        error=error,
                    )
                )

    write_transcript(records, out_dir / "transcript.jsonl")
    report = aggregate(records)
    (out_dir / "report.json").write_text(
        json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8"
    )
    return records, report
