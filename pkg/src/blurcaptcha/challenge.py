"""Seedable CAPTCHA generation: truth texts, rendered blurred images, corpora.

Truth text generation is pinned to SplitMix64 (Steele, Lea and Flood's
mix function as published by Sebastiano Vigna) so any port that seeds the
same 64-bit value reproduces the same corpus. Draw order is fixed: one
draw for the first word's length, one per character, then the same for
the second word. Lengths map to 4 + (draw mod 4) and characters to
alphabet[draw mod len(alphabet)]; with 64-bit draws the modulo bias is
far below anything measurable.

Challenge ids are 128-bit random hex strings minted independently of the
seed: seeds are reproducibility tools, ids are exposed to clients.
"""

from __future__ import annotations

import json
import secrets
import string
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .filters import gaussian_blur
from .raster import DEFAULT_FONT, ImageGray, render_text, save_image

DEFAULT_ALPHABET = string.ascii_uppercase + string.ascii_lowercase + string.digits
CONFUSABLES = "0Oo1lI"

WORD_LENGTHS = (4, 5, 6, 7)

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator: 64-bit state, 64-bit outputs, one draw per call."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        return self.next_u64() % n


def new_challenge_id() -> str:
    """Fresh 128-bit identifier as 32 hex chars, independent of any seed."""
    return secrets.token_hex(16)


def random_words(rng: SplitMix64, alphabet: str = DEFAULT_ALPHABET) -> str:
    """Two meaningless words of 4-7 characters, separated by one space."""
    words = []
    for _ in range(2):
        length = WORD_LENGTHS[rng.next_below(len(WORD_LENGTHS))]
        words.append("".join(alphabet[rng.next_below(len(alphabet))] for _ in range(length)))
    return " ".join(words)


@dataclass(frozen=True)
class ChallengeSpec:
    """Parameters that fully determine a challenge's truth text and pixels."""

    seed: int
    radius: float = 2.0
    scale: int = 4
    padding: int = 8
    alphabet: str = DEFAULT_ALPHABET

    def __post_init__(self):
        if not self.alphabet:
            raise ValueError("alphabet must not be empty")
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")
        if self.scale < 1:
            raise ValueError(f"scale must be >= 1, got {self.scale}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")
        for c in self.alphabet:
            if not DEFAULT_FONT.has_glyph(c):
                raise ValueError(f"alphabet character {c!r} has no font glyph")


@dataclass
class Challenge:
    id: str
    truth: str
    radius: float
    seed: int
    image: ImageGray
    created_at: float
    state: str = "pending"  # pending | consumed | expired


def make_challenge(spec: ChallengeSpec, now: float | None = None) -> Challenge:
    """Generate one challenge: seeded truth, rendered and blurred image."""
    rng = SplitMix64(spec.seed)
    truth = random_words(rng, spec.alphabet)
    image = gaussian_blur(render_text(truth, spec.scale, spec.padding), spec.radius)
    return Challenge(
        id=new_challenge_id(),
        truth=truth,
        radius=spec.radius,
        seed=spec.seed,
        image=image,
        created_at=time.time() if now is None else now,
    )


def make_corpus(n: int, template: ChallengeSpec, base_seed: int) -> list[Challenge]:
    """n challenges; challenge i uses seed base_seed + i (mod 2^64)."""
    if n < 1:
        raise ValueError(f"corpus size must be >= 1, got {n}")
    return [
        make_challenge(replace(template, seed=(base_seed + i) & _MASK64))
        for i in range(n)
    ]


def image_file_name(index: int, ext: str = "pgm") -> str:
    return f"challenge_{index:04d}.{ext}"


def save_corpus(
    challenges: list[Challenge],
    template: ChallengeSpec,
    base_seed: int,
    out_dir: str | Path,
) -> Path:
    """Write images (PGM and PNG) plus the private manifest; returns the manifest path.

    The manifest contains the truth texts, so it must stay out of anything
    served to clients.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    items = []
    for i, ch in enumerate(challenges):
        save_image(ch.image, out_dir / image_file_name(i, "pgm"))
        save_image(ch.image, out_dir / image_file_name(i, "png"))
        items.append(
            {
                "index": i,
                "seed": ch.seed,
                "truth": ch.truth,
                "image_file": image_file_name(i, "pgm"),
            }
        )
    manifest = {
        "base_seed": base_seed,
        "radius": template.radius,
        "scale": template.scale,
        "padding": template.padding,
        "alphabet": template.alphabet,
        "items": items,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def load_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
