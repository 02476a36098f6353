import json
import math
import random
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entail.core import DataError, PairScore, TransportError
from entail.engine import (
    ClassificationRequest,
    FileBackend,
    HttpBackend,
    MockBackend,
    ScoringBackend,
    _score_chunked,
    classify,
    pair_digest,
    save_score_file,
)

from .oracles import softmax_probs


class RecordingBackend(ScoringBackend):
    """Scores len(premise) / len(hypothesis) and records chunk sizes."""

    name = "recording"

    def __init__(self, max_batch_size=None):
        self.max_batch_size = max_batch_size
        self.batch_sizes = []
        self.seen_pairs = []

    def score(self, pairs):
        self.batch_sizes.append(len(pairs))
        self.seen_pairs.extend(pairs)
        return [PairScore(float(len(p)), float(len(h))) for p, h in pairs]


class TestClassify:
    def test_two_class_softmax_by_hand(self):
        table = {
            ("t", "This text is about a"): (2.0, 0.0),
            ("t", "This text is about b"): (0.0, 0.0),
        }
        backend = MockBackend("table", table=table)
        req = ClassificationRequest(texts=("t",), candidate_labels=("a", "b"))
        (pred,) = classify(req, backend)
        assert pred.class_probs[0] == pytest.approx(0.8807970779778824, abs=1e-12)
        assert pred.class_probs[1] == pytest.approx(1 - 0.8807970779778824, abs=1e-12)
        assert pred.predicted_class == 0

    def test_probabilities_sum_to_one_single_label(self):
        backend = MockBackend("hash")
        req = ClassificationRequest(
            texts=("first text", "second text"),
            candidate_labels=("a", "b", "c", "d"),
        )
        for pred in classify(req, backend):
            assert sum(pred.class_probs) == pytest.approx(1.0, abs=1e-12)

    def test_multi_label_probabilities_are_per_pair_sigmoids(self):
        table = {
            ("t", "This text is about a"): (1.0, -1.0),
            ("t", "This text is about b"): (0.5, 0.5),
        }
        req = ClassificationRequest(
            texts=("t",), candidate_labels=("a", "b"), multi_label=True
        )
        (pred,) = classify(req, MockBackend("table", table=table))
        assert pred.class_probs[0] == pytest.approx(1 / (1 + math.exp(-2.0)))
        assert pred.class_probs[1] == pytest.approx(0.5)
        assert pred.predicted_class == 0

    def test_tie_goes_to_lowest_class_index(self):
        table = {
            ("t", "This text is about a"): (1.5, 0.0),
            ("t", "This text is about b"): (1.5, 0.0),
        }
        req = ClassificationRequest(texts=("t",), candidate_labels=("a", "b"))
        (pred,) = classify(req, MockBackend("table", table=table))
        assert pred.predicted_class == 0

    def test_rejects_empty_inputs_and_nonfinite_logits(self):
        backend = MockBackend("hash")
        with pytest.raises(DataError, match="no texts"):
            classify(ClassificationRequest(texts=(), candidate_labels=("a",)), backend)
        with pytest.raises(DataError, match="no candidate labels"):
            classify(ClassificationRequest(texts=("t",), candidate_labels=()), backend)

        table = {("t", "This text is about a"): (math.inf, 0.0)}
        req = ClassificationRequest(texts=("t",), candidate_labels=("a",))
        with pytest.raises(DataError, match="non-finite logits.*hypothesis="):
            classify(req, MockBackend("table", table=table))

    def test_custom_template_feeds_backend(self):
        backend = RecordingBackend()
        req = ClassificationRequest(
            texts=("t",),
            candidate_labels=("economy",),
            hypothesis_template="The topic is {}.",
        )
        classify(req, backend)
        assert backend.seen_pairs == [("t", "The topic is economy.")]

    @settings(max_examples=50, deadline=None)
    @given(
        n_texts=st.integers(min_value=1, max_value=5),
        k=st.integers(min_value=1, max_value=6),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    def test_matches_brute_force_softmax(self, n_texts, k, seed):
        rng = random.Random(seed)
        texts = tuple(f"text {i} {rng.random():.8f}" for i in range(n_texts))
        labels = tuple(f"label{j}" for j in range(k))
        backend = MockBackend("hash")
        predictions = classify(
            ClassificationRequest(texts=texts, candidate_labels=labels), backend
        )
        hyps = [f"This text is about {lbl}" for lbl in labels]
        for i, text in enumerate(texts):
            logits = [s.entailment_logit for s in backend.score([(text, h) for h in hyps])]
            expected = softmax_probs(logits)
            for got, want in zip(predictions[i].class_probs, expected):
                assert got == pytest.approx(want, abs=1e-9)
            best = max(range(k), key=lambda j: (logits[j], -j))
            assert predictions[i].predicted_class == best


class TestChunking:
    def test_honors_max_batch_size(self):
        backend = RecordingBackend(max_batch_size=2)
        pairs = [(f"p{i}", "h") for i in range(5)]
        scores = _score_chunked(backend, pairs)
        assert backend.batch_sizes == [2, 2, 1]
        assert len(scores) == 5

    def test_batched_equals_unbatched(self):
        pairs = [(f"premise number {i}", f"hyp {i % 3}") for i in range(7)]
        assert _score_chunked(RecordingBackend(max_batch_size=3), pairs) == _score_chunked(
            RecordingBackend(), pairs
        )

    def test_wrong_length_from_backend_is_an_error(self):
        class Short(ScoringBackend):
            name = "short"

            def score(self, pairs):
                return [PairScore(0.0, 0.0)] * (len(pairs) - 1)

        with pytest.raises(DataError, match="returned 1 scores for 2 pairs"):
            _score_chunked(Short(), [("a", "b"), ("c", "d")])


class TestMockBackend:
    def test_hash_mode_is_deterministic_and_bounded(self):
        backend = MockBackend("hash")
        pairs = [(f"p{i}", f"h{i}") for i in range(50)]
        first = backend.score(pairs)
        assert first == backend.score(pairs)
        for s in first:
            assert -3.0 <= s.entailment_logit < 3.0
            assert -3.0 <= s.not_entailment_logit < 3.0
        assert len({s.entailment_logit for s in first}) > 40

    def test_table_mode_misses_name_the_pair(self):
        backend = MockBackend("table", table={("p", "h"): (1.0, 0.0)})
        assert backend.score([("p", "h")]) == [PairScore(1.0, 0.0)]
        with pytest.raises(DataError, match="premise='p'.*hypothesis='other'"):
            backend.score([("p", "other")])

    def test_planted_mode_scores_by_truth_word(self):
        backend = MockBackend(
            "planted", truth={"doc one": "economy"}, margin=2.5
        )
        hit, miss = backend.score(
            [("doc one", "This text is about economy"), ("doc one", "about sports")]
        )
        assert hit == PairScore(2.5, -2.5)
        assert miss == PairScore(-2.5, 2.5)
        with pytest.raises(DataError, match="no planted truth"):
            backend.score([("unknown doc", "h")])

    def test_mode_validation(self):
        with pytest.raises(DataError, match="unknown mock backend mode"):
            MockBackend("wild")
        with pytest.raises(DataError, match="needs a score table"):
            MockBackend("table")
        with pytest.raises(DataError, match="truth map"):
            MockBackend("planted")


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"status": "ok", "backend": "stub"})
        else:
            self._reply(404, {})

    def do_POST(self):
        state = self.server.state
        state["requests"] += 1
        if state["requests"] <= state.get("fail_first", 0):
            self.connection.close()
            return
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        pairs = payload["pairs"]
        state["batch_sizes"].append(len(pairs))

        behavior = state.get("behavior", "ok")
        if behavior == "bad-status":
            self._reply(503, {"error": "overloaded"})
            return
        if behavior == "bad-json":
            self.send_response(200)
            self.send_header("Content-Length", "8")
            self.end_headers()
            self.wfile.write(b"{not json"[:8])
            return
        scores = [
            {"entailment": float(len(p["premise"])), "not_entailment": float(len(p["hypothesis"]))}
            for p in pairs
        ]
        if behavior == "short":
            scores = scores[:-1]
        if behavior == "mangled":
            scores[0] = {"entailment": "high"}
        self._reply(200, {"scores": scores})

    def _reply(self, status, payload):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class _QuietServer(ThreadingHTTPServer):
    def handle_error(self, request, client_address):
        pass


@pytest.fixture
def score_server():
    server = _QuietServer(("127.0.0.1", 0), _Handler)
    server.state = {"requests": 0, "batch_sizes": [], "behavior": "ok"}
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}", server.state
    finally:
        server.shutdown()
        server.server_close()


class TestHttpBackend:
    def test_scores_round_trip_over_the_wire(self, score_server):
        url, _ = score_server
        backend = HttpBackend(url)
        scores = backend.score([("abc", "de"), ("x", "wxyz")])
        assert scores == [PairScore(3.0, 2.0), PairScore(1.0, 4.0)]

    def test_batches_by_configured_size(self, score_server):
        url, state = score_server
        backend = HttpBackend(url, batch_size=2)
        pairs = [(f"p{i}", "h") for i in range(5)]
        scores = backend.score(pairs)
        assert len(scores) == 5
        assert state["batch_sizes"] == [2, 2, 1]

    def test_non_200_is_a_data_error_without_retry(self, score_server):
        url, state = score_server
        state["behavior"] = "bad-status"
        with pytest.raises(DataError, match="HTTP 503"):
            HttpBackend(url).score([("p", "h")])
        assert state["requests"] == 1

    def test_malformed_json_is_a_data_error(self, score_server):
        url, state = score_server
        state["behavior"] = "bad-json"
        with pytest.raises(DataError, match="malformed JSON"):
            HttpBackend(url).score([("p", "h")])

    def test_length_mismatch_is_a_data_error(self, score_server):
        url, state = score_server
        state["behavior"] = "short"
        with pytest.raises(DataError, match="returned 1 scores for 2 pairs"):
            HttpBackend(url).score([("p", "h"), ("q", "h")])

    def test_malformed_entry_is_a_data_error(self, score_server):
        url, state = score_server
        state["behavior"] = "mangled"
        with pytest.raises(DataError, match="malformed score entry"):
            HttpBackend(url).score([("p", "h")])

    def test_transport_failure_is_retried_then_succeeds(self, score_server):
        url, state = score_server
        state["fail_first"] = 2
        scores = HttpBackend(url).score([("abc", "d")])
        assert scores == [PairScore(3.0, 1.0)]
        assert state["requests"] == 3

    def test_unreachable_endpoint_raises_transport_error(self):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        with pytest.raises(TransportError, match="after 2 retries"):
            HttpBackend(f"http://127.0.0.1:{port}", timeout=2.0).score([("p", "h")])

    def test_health_endpoint(self, score_server):
        url, _ = score_server
        assert HttpBackend(url).health()["status"] == "ok"


class TestFileBackend:
    def test_pair_digest_is_frozen(self):
        assert pair_digest("p", "h") == (
            "9a92531b605514ebf0f372ef93c0b63f1746175705955c555f68efd04be4db1d"
        )
        assert pair_digest("p", "h") != pair_digest("ph", "")

    def test_replay_matches_recorded_scores_exactly(self, tmp_path):
        rng = random.Random(4)
        pairs = [(f"premise {i}", f"hyp {i % 4}") for i in range(20)]
        recorded = {
            pair: PairScore(rng.uniform(-5, 5), rng.uniform(-5, 5)) for pair in pairs
        }
        path = tmp_path / "scores.json"
        save_score_file(recorded, path)
        backend = FileBackend(path)
        assert backend.score(pairs) == [recorded[p] for p in pairs]

    def test_missing_pair_names_it(self, tmp_path):
        path = tmp_path / "scores.json"
        save_score_file({("p", "h"): PairScore(1.0, 0.0)}, path)
        with pytest.raises(DataError, match="no recorded score.*hypothesis='nope'"):
            FileBackend(path).score([("p", "nope")])

    def test_score_file_bytes_are_stable(self, tmp_path):
        scores = {("a", "b"): PairScore(0.25, -0.75), ("c", "d"): PairScore(1.5, 2.5)}
        first, second = tmp_path / "one.json", tmp_path / "two.json"
        save_score_file(scores, first)
        save_score_file(dict(reversed(list(scores.items()))), second)
        assert first.read_bytes() == second.read_bytes()

    def test_rejects_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"deadbeef": {"entailment": 1.0}}', encoding="utf-8")
        with pytest.raises(DataError, match="malformed entry"):
            FileBackend(path)
