import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import pytest
import uvicorn

from entail import (
    HypothesisCatalog,
    LabeledDataset,
    derive_seed,
    format_nli_trainset,
    ingest,
    load_catalog,
    load_ingest_spec,
    make_synthetic_corpus,
    train_test_split,
    write_nli_jsonl,
)
from entail_sidecar import EntailmentScorer, FinetuneConfig, create_app, finetune


@dataclass(frozen=True)
class CorpusBundle:
    """A synthetic topic corpus split into train pairs and a held-out set."""

    pairs_path: Path
    train: LabeledDataset
    test: LabeledDataset
    catalog: HypothesisCatalog
    classes: tuple[str, ...]


def build_corpus(out_dir: Path, n_per_class: int, seed: int) -> CorpusBundle:
    """Materialize a corpus and its binary NLI train file under out_dir."""
    corpus = make_synthetic_corpus(out_dir / "data", n_per_class=n_per_class, seed=seed, noise_rows=False)
    ds, _ = ingest(load_ingest_spec(corpus.ingest_spec))
    train, test = train_test_split(ds, test_fraction=0.2, seed=derive_seed(seed, "split"))
    catalog = load_catalog(corpus.catalog)
    pairs = format_nli_trainset(train, catalog, seed=derive_seed(seed, "format"))
    pairs_path = out_dir / "train_pairs.jsonl"
    write_nli_jsonl(pairs, pairs_path)
    return CorpusBundle(
        pairs_path=pairs_path,
        train=train,
        test=test,
        catalog=catalog,
        classes=corpus.classes,
    )


@contextmanager
def run_server(app, timeout: float = 30.0):
    """Serve an ASGI app on an OS-assigned port; yield its base URL."""
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + timeout
    while not server.started:
        if not thread.is_alive():
            raise RuntimeError("server thread exited before startup")
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start in time")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10)


@pytest.fixture(scope="session")
def server_factory():
    """The run_server context manager, for tests that need a live socket."""
    return run_server


@pytest.fixture(scope="session")
def corpus_factory():
    return build_corpus


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> CorpusBundle:
    return build_corpus(tmp_path_factory.mktemp("corpus"), n_per_class=40, seed=11)


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory, small_corpus) -> tuple[Path, dict]:
    out = tmp_path_factory.mktemp("ckpt") / "model"
    report = finetune(small_corpus.pairs_path, out, FinetuneConfig())
    return out, report


@pytest.fixture(scope="session")
def scorer(checkpoint) -> EntailmentScorer:
    path, _ = checkpoint
    return EntailmentScorer(str(path), max_length=128)


@pytest.fixture(scope="session")
def client(scorer):
    from fastapi.testclient import TestClient

    return TestClient(create_app(scorer=scorer))
