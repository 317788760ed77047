from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from autojournal.errors import AssignmentMismatch, DimensionMismatch, ProviderError
from autojournal.evaluation import (
    EmbeddingClient,
    HashedEmbeddingProvider,
    HttpEmbeddingProvider,
    MatchAssignment,
    NonPositiveScoreWarning,
    embed,
    evaluate_pair,
    event_scores,
    feeling_scores,
    overall_score,
    similarity_matrix,
)

from conftest import make_journal
from oracle import oracle_evaluate

STUB = HashedEmbeddingProvider(256)

TOKEN_POOL = [
    "alarm", "bus", "call", "chat", "coffee", "deadline", "email", "family",
    "game", "gym", "lecture", "lunch", "map", "message", "music", "news",
    "photo", "playlist", "recipe", "reminder", "shopping", "ticket", "video", "weather",
]


def _random_text(rng: random.Random, max_tokens: int = 5) -> str:
    return " ".join(rng.choices(TOKEN_POOL, k=rng.randint(1, max_tokens)))


def _random_pair(rng: random.Random, n: int, m: int):
    truth = make_journal(
        [(f"{_random_text(rng)} {i}", _random_text(rng)) for i in range(n)],
        stream="ground_truth",
    )
    pred = make_journal(
        [(f"{_random_text(rng)} {j}", _random_text(rng), "because") for j in range(m)],
        stream="text",
    )
    return truth, pred


class TestEmbed:
    def test_deterministic(self):
        first = embed(["a sentence about coffee"], STUB)
        second = embed(["a sentence about coffee"], STUB)
        assert np.array_equal(first, second)

    def test_unit_norm(self):
        vectors = embed(["family call", "weather alarm news", "!!!"], STUB)
        norms = np.linalg.norm(vectors, axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-6)

    def test_two_token_hand_values(self):
        # sha1 buckets: family=95, call=160, alarm=47, weather=167 (no collisions),
        # so identical texts give cosine 1 and token-disjoint texts give 0
        vectors = embed(["family call", "family call", "alarm weather"], STUB)
        assert float(vectors[0] @ vectors[1]) == pytest.approx(1.0, abs=1e-9)
        assert float(vectors[0] @ vectors[2]) == 0.0

    def test_case_and_punctuation_insensitive(self):
        vectors = embed(["Family, call!", "family call"], STUB)
        assert float(vectors[0] @ vectors[1]) == pytest.approx(1.0, abs=1e-9)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            embed([], STUB)


class TestEmbeddingClient:
    def test_caches_by_exact_string(self):
        calls: list[list[str]] = []

        class Counting:
            name = "counting"

            def embed(self, texts):
                calls.append(list(texts))
                return STUB.embed(texts)

        client = EmbeddingClient(Counting())
        client.embed(["a", "b", "a"])
        client.embed(["b", "c"])
        assert calls == [["a", "b"], ["c"]]

    def test_cache_returns_requested_vectors(self):
        client = EmbeddingClient(STUB)
        batch = client.embed(["family call", "alarm weather", "family call"])
        direct = embed(["family call", "alarm weather", "family call"], STUB)
        assert np.allclose(batch, direct)

    def test_concurrent_use(self):
        client = EmbeddingClient(STUB)
        texts = [f"text number {i % 7}" for i in range(50)]
        errors: list[Exception] = []

        def worker():
            try:
                got = client.embed(texts)
                expected = embed(texts, STUB)
                assert np.allclose(got, expected)
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors

    def test_dimension_change_rejected(self):
        class Flaky:
            name = "flaky"

            def __init__(self):
                self.dim = 8

            def embed(self, texts):
                out = np.ones((len(texts), self.dim))
                self.dim += 1
                return out

        client = EmbeddingClient(Flaky())
        client.embed(["a"])
        with pytest.raises(DimensionMismatch):
            client.embed(["b"])


class TestSimilarityMatrix:
    def test_identical_journals_diagonal(self):
        journal = make_journal([("Family call", "warm"), ("Set alarm", "sleepy")])
        matrix = similarity_matrix(journal, journal, STUB)
        assert matrix.shape == (2, 2)
        assert np.all(np.abs(np.diag(matrix) - 1.0) <= 1e-6)

    def test_one_by_one(self):
        truth = make_journal([("Family call", "warm")])
        pred = make_journal([("video call family", "happy", "why")], stream="text")
        matrix = similarity_matrix(truth, pred, STUB)
        assert matrix.shape == (1, 1)

    def test_matches_oracle_cosines(self):
        rng = random.Random(7)
        truth, pred = _random_pair(rng, 2, 3)
        matrix = similarity_matrix(truth, pred, STUB)
        expected = oracle_evaluate(
            truth.events(), truth.feelings(), pred.events(), pred.feelings()
        )
        # oracle recomputes the same cells inside its score sums; check via scores
        score_t, score_p, _ = event_scores(matrix)
        assert score_t == pytest.approx(expected["event_t"], abs=1e-9)
        assert score_p == pytest.approx(expected["event_p"], abs=1e-9)

    def test_cells_bounded(self):
        rng = random.Random(11)
        truth, pred = _random_pair(rng, 4, 5)
        matrix = similarity_matrix(truth, pred, STUB)
        assert np.all(matrix <= 1.0)
        assert np.all(matrix >= -1.0)


class TestEventScores:
    def test_singleton(self):
        score_t, score_p, assignment = event_scores(np.array([[1.0]]))
        assert (score_t, score_p) == (1.0, 1.0)
        assert assignment.j_star == (0,)
        assert assignment.i_star == (0,)

    def test_hand_checked_two_by_two(self):
        score_t, score_p, _ = event_scores(np.array([[0.9, 0.2], [0.1, 0.8]]))
        assert score_t == (0.9 + 0.8) / 2  # exact: same rounding as the hand arithmetic
        assert score_p == (0.9 + 0.8) / 2
        assert score_t == pytest.approx(0.85, abs=1e-12)

    def test_tie_takes_lowest_index(self):
        _, _, assignment = event_scores(np.array([[0.5, 0.5]]))
        assert assignment.j_star == (0,)

    def test_role_swap_duality(self):
        rng = np.random.default_rng(3)
        matrix = rng.uniform(-1, 1, size=(4, 6))
        score_t, score_p, _ = event_scores(matrix)
        swapped_t, swapped_p, _ = event_scores(matrix.T)
        assert (swapped_t, swapped_p) == (score_p, score_t)


class TestFeelingScores:
    def test_identity(self):
        journal = make_journal([("Family call", "warm"), ("Set alarm", "sleepy")])
        matrix = similarity_matrix(journal, journal, STUB)
        _, _, assignment = event_scores(matrix)
        f_t, f_p = feeling_scores(journal, journal, assignment, STUB)
        assert f_t == pytest.approx(1.0, abs=1e-6)
        assert f_p == pytest.approx(1.0, abs=1e-6)

    def test_matched_pair_fixture(self):
        # event texts overlap ("family", "call"), feelings share no token, so
        # the stub scores the matched feelings at exactly 0
        truth = make_journal([("Family call", "Belonging, tired, warm")])
        pred = make_journal(
            [("The user had a video call with their family.", "Happy, connected", "r")],
            stream="video",
        )
        expected = oracle_evaluate(
            truth.events(), truth.feelings(), pred.events(), pred.feelings()
        )
        matrix = similarity_matrix(truth, pred, STUB)
        score_t, score_p, assignment = event_scores(matrix)
        assert score_t == pytest.approx(expected["event_t"], abs=1e-9)
        f_t, f_p = feeling_scores(truth, pred, assignment, STUB)
        assert f_t == pytest.approx(expected["feeling_t"], abs=1e-9)
        assert f_p == pytest.approx(expected["feeling_p"], abs=1e-9)
        assert f_t == 0.0

    def test_two_by_three_matches_oracle(self):
        rng = random.Random(23)
        truth, pred = _random_pair(rng, 2, 3)
        expected = oracle_evaluate(
            truth.events(), truth.feelings(), pred.events(), pred.feelings()
        )
        matrix = similarity_matrix(truth, pred, STUB)
        _, _, assignment = event_scores(matrix)
        f_t, f_p = feeling_scores(truth, pred, assignment, STUB)
        assert f_t == pytest.approx(expected["feeling_t"], abs=1e-9)
        assert f_p == pytest.approx(expected["feeling_p"], abs=1e-9)

    def test_assignment_mismatch(self):
        truth = make_journal([("A", "x"), ("B", "y")])
        pred = make_journal([("C", "z", "r")], stream="text")
        bad = MatchAssignment(j_star=(0,), i_star=(0,))
        with pytest.raises(AssignmentMismatch):
            feeling_scores(truth, pred, bad, STUB)


class TestOverallScore:
    def test_identity(self):
        assert overall_score(1.0, 1.0) == 1.0

    def test_hand_arithmetic(self):
        assert overall_score(0.9, 0.8) == pytest.approx(2 * 0.72 / 1.7, abs=1e-9)
        assert overall_score(0.9, 0.8) == pytest.approx(0.8470588235294118, abs=1e-9)

    def test_zero_guard_warns(self):
        with pytest.warns(NonPositiveScoreWarning):
            assert overall_score(0.0, 0.9) == 0.0

    def test_negative_guard_warns(self):
        with pytest.warns(NonPositiveScoreWarning):
            assert overall_score(-0.2, 0.9) == 0.0

    def test_bounded_by_inputs(self):
        rng = random.Random(5)
        for _ in range(200):
            a, b = rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0)
            score = overall_score(a, b)
            assert min(a, b) <= score <= max(a, b)


class TestEvaluatePair:
    def test_identity_all_ones(self):
        truth = make_journal(
            [("Family call", "warm"), ("Set alarm", "sleepy"), ("Read news", "curious")]
        )
        pred = make_journal(
            [(e.event, e.feelings) for e in truth.entries], stream="text"
        )
        scores = evaluate_pair(truth, pred, STUB)
        for value in (
            scores.event_t, scores.event_p, scores.feeling_t,
            scores.feeling_p, scores.event_overall, scores.feeling_overall,
        ):
            assert value == pytest.approx(1.0, abs=1e-6)

    def test_token_disjoint_events_guarded(self):
        truth = make_journal([("alarm weather", "calm")])
        pred = make_journal([("family call", "calm", "r")], stream="text")
        with pytest.warns(NonPositiveScoreWarning):
            scores = evaluate_pair(truth, pred, STUB)
        assert scores.event_t == 0.0
        assert scores.event_overall == 0.0
        assert scores.feeling_overall == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.filterwarnings("ignore::autojournal.evaluation.NonPositiveScoreWarning")
    def test_randomized_four_by_five_matches_oracle(self):
        rng = random.Random(41)
        truth, pred = _random_pair(rng, 4, 5)
        expected = oracle_evaluate(
            truth.events(), truth.feelings(), pred.events(), pred.feelings()
        )
        scores = evaluate_pair(truth, pred, STUB)
        assert scores.event_t == pytest.approx(expected["event_t"], abs=1e-9)
        assert scores.event_p == pytest.approx(expected["event_p"], abs=1e-9)
        assert scores.feeling_t == pytest.approx(expected["feeling_t"], abs=1e-9)
        assert scores.feeling_p == pytest.approx(expected["feeling_p"], abs=1e-9)
        assert scores.event_overall == pytest.approx(expected["event_overall"], abs=1e-9)
        assert scores.feeling_overall == pytest.approx(expected["feeling_overall"], abs=1e-9)

    def test_participant_date_mismatch(self):
        truth = make_journal([("A", "x")], participant="p01")
        pred = make_journal([("A", "x", "r")], stream="text", participant="p02")
        with pytest.raises(ValueError):
            evaluate_pair(truth, pred, STUB)

    @pytest.mark.filterwarnings("ignore::autojournal.evaluation.NonPositiveScoreWarning")
    def test_duplicate_prediction_keeps_truth_score(self):
        rng = random.Random(13)
        truth, pred = _random_pair(rng, 3, 4)
        scores = evaluate_pair(truth, pred, STUB)
        # append a true duplicate column: an existing event text repeated
        duplicated = make_journal(
            [(e.event, e.feelings, e.reasoning) for e in pred.entries]
            + [(pred.entries[-2].event, pred.entries[-2].feelings, "r")],
            stream="text",
        )
        more = evaluate_pair(truth, duplicated, STUB)
        assert more.event_t == scores.event_t


def _has_unique_argmaxes(matrix: np.ndarray) -> bool:
    row_unique = all((row == row.max()).sum() == 1 for row in matrix)
    col_unique = all((col == col.max()).sum() == 1 for col in matrix.T)
    return row_unique and col_unique


class TestPermutationInvariance:
    def test_shuffles_leave_aggregates_unchanged(self):
        rng = random.Random(97)
        truth, pred = _random_pair(rng, 4, 6)
        while not _has_unique_argmaxes(similarity_matrix(truth, pred, STUB)):
            truth, pred = _random_pair(rng, 4, 6)
        baseline = evaluate_pair(truth, pred, STUB)
        entries = list(pred.entries)
        for _ in range(50):
            rng.shuffle(entries)
            shuffled = make_journal(
                [(e.event, e.feelings, e.reasoning) for e in entries], stream="text"
            )
            scores = evaluate_pair(truth, shuffled, STUB)
            assert scores.event_t == pytest.approx(baseline.event_t, abs=1e-12)
            assert scores.event_p == pytest.approx(baseline.event_p, abs=1e-12)
            assert scores.feeling_t == pytest.approx(baseline.feeling_t, abs=1e-12)
            assert scores.feeling_p == pytest.approx(baseline.feeling_p, abs=1e-12)
            assert scores.event_overall == pytest.approx(baseline.event_overall, abs=1e-12)
            assert scores.feeling_overall == pytest.approx(baseline.feeling_overall, abs=1e-12)


class _EmbedHandler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802
        length = int(self.headers.get("Content-Length", 0))
        texts = json.loads(self.rfile.read(length))["texts"]
        vectors = HashedEmbeddingProvider(32).embed(texts).tolist()
        body = json.dumps({"vectors": vectors, "model_id": "test", "dim": 32}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):  # quiet
        pass


@pytest.fixture()
def embed_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _EmbedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestHttpEmbeddingProvider:
    def test_round_trip_against_wire_format(self, embed_server):
        provider = HttpEmbeddingProvider(embed_server)
        vectors = embed(["family call", "family call"], provider)
        assert vectors.shape == (2, 32)
        assert float(vectors[0] @ vectors[1]) == pytest.approx(1.0, abs=1e-6)

    def test_unreachable_endpoint(self):
        provider = HttpEmbeddingProvider("http://127.0.0.1:9", timeout_s=0.2)
        with pytest.raises(ProviderError):
            provider.embed(["a"])

    def test_requires_endpoint(self, monkeypatch):
        monkeypatch.delenv("EMBED_ENDPOINT", raising=False)
        with pytest.raises(ValueError):
            HttpEmbeddingProvider(None)
