import json
import re
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from blurcaptcha.service import ChallengeStore, ServiceConfig, create_app, load_config
from blurcaptcha.challenge import ChallengeSpec, make_challenge


class FakeClock:
    def __init__(self, start=1_000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def client(tmp_path, clock):
    config = ServiceConfig(
        ttl_seconds=300.0,
        default_radius=2.0,
        transcript_path=str(tmp_path / "transcript.jsonl"),
    )
    app = create_app(config, clock=clock)
    with TestClient(app) as c:
        c.app = app
        yield c


def new_challenge(client, radius=None):
    body = {} if radius is None else {"radius": radius}
    resp = client.post("/api/challenge", json=body)
    assert resp.status_code == 200
    return resp.json()


def truth_of(client, challenge_id):
    return client.app.state.store._entries[challenge_id].challenge.truth


class TestCreateChallenge:
    def test_contract(self, client, clock):
        doc = new_challenge(client)
        assert re.fullmatch(r"[0-9a-f]{32}", doc["id"])
        assert doc["image_url"].endswith(f"/api/image/{doc['id']}.png")
        assert doc["expires_at"] == clock.now + 300.0

    def test_negative_radius_rejected(self, client):
        resp = client.post("/api/challenge", json={"radius": -1})
        assert resp.status_code == 400

    def test_non_numeric_radius_rejected(self, client):
        resp = client.post("/api/challenge", json={"radius": "two"})
        assert resp.status_code == 400

    def test_default_radius_from_config(self, client):
        doc = new_challenge(client)
        entry = client.app.state.store._entries[doc["id"]]
        assert entry.challenge.radius == 2.0

    def test_explicit_radius_honored(self, client):
        doc = new_challenge(client, radius=0)
        entry = client.app.state.store._entries[doc["id"]]
        assert entry.challenge.radius == 0.0

    def test_parallel_creations_unique_ids(self, client):
        with ThreadPoolExecutor(max_workers=16) as pool:
            ids = list(pool.map(lambda _: new_challenge(client)["id"], range(40)))
        assert len(set(ids)) == 40


class TestImage:
    def test_repeated_fetch_identical_png(self, client):
        doc = new_challenge(client)
        first = client.get(doc["image_url"])
        second = client.get(doc["image_url"])
        assert first.status_code == second.status_code == 200
        assert first.headers["content-type"] == "image/png"
        assert first.content == second.content
        assert first.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_unknown_id(self, client):
        assert client.get("/api/image/deadbeef.png").status_code == 404

    def test_non_png_suffix(self, client):
        doc = new_challenge(client)
        assert client.get(f"/api/image/{doc['id']}.jpg").status_code == 404

    def test_gone_after_verify(self, client):
        doc = new_challenge(client)
        client.post("/api/verify", json={"id": doc["id"], "response": "x"})
        assert client.get(doc["image_url"]).status_code == 410


class TestVerify:
    def test_correct_then_one_shot(self, client):
        doc = new_challenge(client, radius=1)
        truth = truth_of(client, doc["id"])
        resp = client.post("/api/verify", json={"id": doc["id"], "response": truth})
        assert resp.status_code == 200
        assert resp.json() == {"pass": True}
        again = client.post("/api/verify", json={"id": doc["id"], "response": truth})
        assert again.status_code == 410

    def test_wrong_response_still_consumes(self, client):
        doc = new_challenge(client)
        resp = client.post("/api/verify", json={"id": doc["id"], "response": "nope"})
        assert resp.json() == {"pass": False}
        assert client.post("/api/verify", json={"id": doc["id"], "response": "nope"}).status_code == 410

    def test_unknown_id(self, client):
        resp = client.post("/api/verify", json={"id": "f" * 32, "response": "x"})
        assert resp.status_code == 404

    def test_expiry_with_injected_clock(self, client, clock):
        doc = new_challenge(client)
        truth = truth_of(client, doc["id"])
        clock.advance(300.0)
        assert client.post("/api/verify", json={"id": doc["id"], "response": truth}).status_code == 410
        assert client.get(doc["image_url"]).status_code == 410

    def test_whitespace_normalized_match(self, client):
        doc = new_challenge(client)
        truth = truth_of(client, doc["id"])
        resp = client.post("/api/verify", json={"id": doc["id"], "response": f"  {truth}  "})
        assert resp.json() == {"pass": True}

    def test_concurrent_verifies_single_winner(self, client):
        doc = new_challenge(client)
        truth = truth_of(client, doc["id"])

        def attempt(_):
            return client.post(
                "/api/verify", json={"id": doc["id"], "response": truth}
            ).status_code

        with ThreadPoolExecutor(max_workers=8) as pool:
            codes = list(pool.map(attempt, range(8)))
        assert sorted(codes) == [200] + [410] * 7


class TestTrialAnswer:
    def transcript_lines(self, client):
        path = client.app.state.config.transcript_path
        try:
            with open(path, encoding="utf-8") as fh:
                return [json.loads(line) for line in fh if line.strip()]
        except FileNotFoundError:
            return []

    def test_valid_answer_recorded(self, client):
        doc = new_challenge(client, radius=1)
        resp = client.post(
            "/api/trial/answer",
            json={"id": doc["id"], "response": "whatever", "rating": 7},
        )
        assert resp.status_code == 200
        assert resp.json() == {"recorded": True}
        lines = self.transcript_lines(client)
        assert len(lines) == 1
        assert lines[0]["responder"] == "human"
        assert lines[0]["rating"] == 7
        assert lines[0]["radius"] == 1.0
        assert lines[0]["challenge_id"] == doc["id"]

    @pytest.mark.parametrize("rating", [0, 11, None, "9", 5.5])
    def test_bad_rating_rejected_without_append(self, client, rating):
        doc = new_challenge(client)
        resp = client.post(
            "/api/trial/answer",
            json={"id": doc["id"], "response": "x", "rating": rating},
        )
        assert resp.status_code == 400
        assert self.transcript_lines(client) == []

    def test_one_shot(self, client):
        doc = new_challenge(client)
        body = {"id": doc["id"], "response": "x", "rating": 5}
        assert client.post("/api/trial/answer", json=body).status_code == 200
        assert client.post("/api/trial/answer", json=body).status_code == 410
        assert len(self.transcript_lines(client)) == 1

    def test_unknown_id(self, client):
        resp = client.post(
            "/api/trial/answer", json={"id": "a" * 32, "response": "x", "rating": 5}
        )
        assert resp.status_code == 404


class TestReport:
    def test_empty_transcript_204(self, client):
        assert client.get("/api/report").status_code == 204

    def test_perfect_answers_bucket(self, client):
        for _ in range(3):
            doc = new_challenge(client, radius=1)
            truth = truth_of(client, doc["id"])
            client.post(
                "/api/trial/answer",
                json={"id": doc["id"], "response": truth, "rating": 9},
            )
        doc = client.get("/api/report").json()
        [bucket] = doc["buckets"]
        assert bucket["responder"] == "human"
        assert bucket["radius"] == 1.0
        assert bucket["n"] == 3
        assert bucket["avg_char_similarity"] == 1.0
        assert bucket["exact_match_pct"] == 100.0
        assert bucket["avg_rating"] == 9.0


class TestLiveVsOfflineReport:
    def test_live_report_equals_cli_report(self, client, capsys):
        from blurcaptcha.cli import main as cli_main

        for rating in (3, 7, 10):
            doc = new_challenge(client, radius=1)
            truth = truth_of(client, doc["id"])
            client.post(
                "/api/trial/answer",
                json={"id": doc["id"], "response": truth, "rating": rating},
            )
        live = client.get("/api/report").json()

        transcript = client.app.state.config.transcript_path
        assert cli_main(["eval", "report", "--transcript", transcript]) == 0
        offline = json.loads(capsys.readouterr().out)
        assert live == offline


class TestTruthConfidentiality:
    def test_truth_never_in_api_responses(self, client):
        bodies = []
        truths = []
        for _ in range(3):
            resp = client.post("/api/challenge", json={"radius": 1})
            bodies.append(resp.content)
            doc = resp.json()
            truth = truth_of(client, doc["id"])
            truths.append(truth)

            img = client.get(doc["image_url"])
            bodies.append(img.content)

            answer = client.post(
                "/api/trial/answer",
                json={"id": doc["id"], "response": truth, "rating": 8},
            )
            bodies.append(answer.content)

        report = client.get("/api/report")
        bodies.append(report.content)

        for truth in truths:
            for word in truth.split():
                for body in bodies:
                    assert word.encode() not in body

    def test_verify_response_is_only_a_boolean(self, client):
        doc = new_challenge(client)
        resp = client.post("/api/verify", json={"id": doc["id"], "response": "x"})
        assert set(resp.json()) == {"pass"}


class TestStaticTrialAssets:
    def test_static_dir_served_under_trial(self, tmp_path, clock):
        static = tmp_path / "static"
        static.mkdir()
        (static / "index.html").write_text("<html><body>trial</body></html>")
        config = ServiceConfig(
            transcript_path=str(tmp_path / "t.jsonl"), static_dir=str(static)
        )
        with TestClient(create_app(config, clock=clock)) as client:
            resp = client.get("/trial/")
            assert resp.status_code == 200
            assert "trial" in resp.text


class TestStoreUnit:
    def test_expiry_is_one_way(self, clock):
        store = ChallengeStore(ttl_seconds=10.0, clock=clock)
        ch = make_challenge(ChallengeSpec(seed=1, radius=0.0), now=clock())
        store.add(ch)
        clock.advance(10.0)
        with pytest.raises(Exception):
            store.consume(ch.id)
        assert ch.state == "expired"
        clock.advance(-10.0)  # even if time rewinds, expired stays expired
        with pytest.raises(Exception):
            store.consume(ch.id)


class TestConfig:
    def test_load_config_with_env_overrides(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "service.json"
        cfg_path.write_text(json.dumps({"listen": "0.0.0.0:9999", "ttl_seconds": 60}))
        monkeypatch.setenv("BLURCAPTCHA_LISTEN", "127.0.0.1:8123")
        monkeypatch.setenv("BLURCAPTCHA_TTL", "120")
        config = load_config(cfg_path)
        assert config.listen == "127.0.0.1:8123"
        assert config.host == "127.0.0.1"
        assert config.port == 8123
        assert config.ttl_seconds == 120.0

    def test_invalid_ttl_rejected(self):
        with pytest.raises(ValueError):
            ServiceConfig(ttl_seconds=0)
