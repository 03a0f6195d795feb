import re
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blurcaptcha.challenge import (
    CONFUSABLES,
    DEFAULT_ALPHABET,
    Challenge,
    ChallengeSpec,
    SplitMix64,
    load_manifest,
    make_challenge,
    make_corpus,
    new_challenge_id,
    random_words,
    save_corpus,
)
from blurcaptcha.filters import total_variation
from blurcaptcha.raster import render_text

TRUTH_PATTERN = re.compile(r"^[A-Za-z0-9]{4,7} [A-Za-z0-9]{4,7}$")


class TestSplitMix64:
    def test_reference_vector_seed_zero(self):
        # Published reference outputs of SplitMix64 (Vigna's splitmix64.c).
        rng = SplitMix64(0)
        assert [rng.next_u64() for _ in range(3)] == [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
        ]

    def test_reference_vector_seed_1234567(self):
        rng = SplitMix64(1234567)
        assert [rng.next_u64() for _ in range(5)] == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ]

    def test_seed_wraps_to_64_bits(self):
        assert SplitMix64(1 << 64).next_u64() == SplitMix64(0).next_u64()


class TestRandomWords:
    def test_same_seed_same_text(self):
        assert random_words(SplitMix64(99)) == random_words(SplitMix64(99))

    @settings(max_examples=80)
    @given(seed=st.integers(min_value=0, max_value=2**64 - 1))
    def test_grammar(self, seed):
        assert TRUTH_PATTERN.match(random_words(SplitMix64(seed)))

    def test_custom_alphabet_respected(self):
        text = random_words(SplitMix64(5), alphabet="AB")
        assert set(text) <= {"A", "B", " "}

    def test_length_and_character_uniformity(self):
        # Frequency-count oracle over 5000 generated truths (10000 words).
        rng = SplitMix64(20260809)
        lengths = Counter()
        chars = Counter()
        for _ in range(5000):
            for word in random_words(rng).split(" "):
                lengths[len(word)] += 1
                chars.update(word)

        total_words = sum(lengths.values())
        assert total_words == 10000
        for n in (4, 5, 6, 7):
            assert abs(lengths[n] / total_words - 0.25) <= 0.02

        from scipy.stats import chi2

        total_chars = sum(chars.values())
        expected = total_chars / len(DEFAULT_ALPHABET)
        statistic = sum(
            (chars[c] - expected) ** 2 / expected for c in DEFAULT_ALPHABET
        )
        critical = chi2.ppf(0.999, df=len(DEFAULT_ALPHABET) - 1)
        assert statistic <= critical


class TestChallengeSpec:
    def test_rejects_empty_alphabet(self):
        with pytest.raises(ValueError):
            ChallengeSpec(seed=1, alphabet="")

    def test_rejects_glyphless_alphabet_char(self):
        with pytest.raises(ValueError):
            ChallengeSpec(seed=1, alphabet="AB#")

    def test_rejects_negative_radius(self):
        with pytest.raises(ValueError):
            ChallengeSpec(seed=1, radius=-1.0)

    def test_confusables_are_in_default_alphabet(self):
        assert set(CONFUSABLES) <= set(DEFAULT_ALPHABET)


class TestMakeChallenge:
    def test_radius_zero_image_is_plain_rendering(self):
        spec = ChallengeSpec(seed=42, radius=0.0)
        ch = make_challenge(spec)
        assert ch.image == render_text(ch.truth, spec.scale, spec.padding)

    def test_same_seed_same_truth_and_pixels_but_fresh_ids(self):
        spec = ChallengeSpec(seed=7, radius=1.0)
        a, b = make_challenge(spec), make_challenge(spec)
        assert a.truth == b.truth
        assert a.image == b.image
        assert a.id != b.id

    def test_blur_changes_pixels_and_lowers_variation(self):
        sharp = make_challenge(ChallengeSpec(seed=3, radius=0.0))
        blurred = make_challenge(ChallengeSpec(seed=3, radius=1.0))
        assert sharp.truth == blurred.truth
        assert sharp.image.pixels != blurred.image.pixels
        assert total_variation(blurred.image) < total_variation(sharp.image)

    def test_initial_state_pending(self):
        assert make_challenge(ChallengeSpec(seed=1)).state == "pending"

    def test_injected_clock(self):
        ch = make_challenge(ChallengeSpec(seed=1), now=123.5)
        assert ch.created_at == 123.5


class TestMakeCorpus:
    def test_deterministic_and_distinct(self):
        template = ChallengeSpec(seed=0, radius=1.0)
        first = make_corpus(50, template, base_seed=7)
        second = make_corpus(50, template, base_seed=7)
        assert [c.truth for c in first] == [c.truth for c in second]
        assert len({c.truth for c in first}) == 50

    def test_single_item_matches_make_challenge(self):
        template = ChallengeSpec(seed=0, radius=0.0)
        [only] = make_corpus(1, template, base_seed=123)
        direct = make_challenge(ChallengeSpec(seed=123, radius=0.0))
        assert only.truth == direct.truth
        assert only.image == direct.image

    def test_seeds_increment_from_base(self):
        corpus = make_corpus(3, ChallengeSpec(seed=0, radius=0.0), base_seed=10)
        assert [c.seed for c in corpus] == [10, 11, 12]

    def test_rejects_empty_corpus(self):
        with pytest.raises(ValueError):
            make_corpus(0, ChallengeSpec(seed=0), base_seed=1)

    def test_manifest_round_trip(self, tmp_path):
        template = ChallengeSpec(seed=0, radius=1.0, scale=2, padding=4)
        corpus = make_corpus(5, template, base_seed=77)
        manifest_path = save_corpus(corpus, template, 77, tmp_path)

        manifest = load_manifest(manifest_path)
        assert manifest["base_seed"] == 77
        assert manifest["radius"] == 1.0
        assert manifest["scale"] == 2
        assert manifest["padding"] == 4
        assert manifest["alphabet"] == DEFAULT_ALPHABET
        assert [item["truth"] for item in manifest["items"]] == [c.truth for c in corpus]
        assert [item["seed"] for item in manifest["items"]] == [c.seed for c in corpus]
        for item in manifest["items"]:
            assert (tmp_path / item["image_file"]).exists()
            assert (tmp_path / item["image_file"]).with_suffix(".png").exists()


class TestChallengeIds:
    def test_format(self):
        cid = new_challenge_id()
        assert re.fullmatch(r"[0-9a-f]{32}", cid)

    def test_unique_across_100k_generations(self):
        ids = {new_challenge_id() for _ in range(100_000)}
        assert len(ids) == 100_000

    def test_ids_do_not_depend_on_seed(self):
        spec = ChallengeSpec(seed=55, radius=0.0)
        ids = {make_challenge(spec).id for _ in range(8)}
        assert len(ids) == 8
