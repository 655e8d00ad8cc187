import numpy as np
import pytest

from seqnovel import corpus as cp
from seqnovel import clustering as cl
from seqnovel import detector as det
from seqnovel.lda import run_ensemble
from seqnovel.lstm import TrainConfig

# one (criterion, passed) entry per acceptance check, printed after the run
acceptance_results: list[tuple[str, bool]] = []


def record_criterion(name: str, ok: bool) -> None:
    acceptance_results.append((name, ok))
    print(("PASS: " if ok else "FAIL: ") + name)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in acceptance_results:
        terminalreporter.write_line(("PASS  " if ok else "FAIL  ") + name)


@pytest.fixture(scope="session")
def mixture_gen():
    return cp.make_partially_disjoint_mixture(num_components=2, vocab_size=30,
                                              shared_fraction=0.1, seed=0)


@pytest.fixture(scope="session")
def train_corpus(mixture_gen):
    return cp.generate_synthetic_mixture(mixture_gen, 60, 0, (10, 18), seed=1)


@pytest.fixture(scope="session")
def test_corpus(mixture_gen, train_corpus):
    return cp.generate_synthetic_mixture(mixture_gen, 20, 20, (10, 18), seed=2,
                                         vocabulary=train_corpus.vocabulary)


@pytest.fixture(scope="session")
def topic_set(train_corpus):
    return run_ensemble(train_corpus, [2, 3], iterations=40, burn_in=10, seed=11)


@pytest.fixture(scope="session")
def kmeans_definition(topic_set):
    return cl.auto_definition_kmeans(topic_set, k=2, seed=3)


@pytest.fixture(scope="session")
def train_config():
    return TrainConfig(epochs=6, batch_size=16, learning_rate=3e-3, seed=5)


@pytest.fixture(scope="session")
def informed_detector(train_corpus, topic_set, kmeans_definition, train_config):
    return det.train_detector(train_corpus, topic_set, kmeans_definition,
                              train_config, embed_dim=16, hidden_dim=24,
                              fold_iterations=40, fold_seed=9)


@pytest.fixture(scope="session")
def global_detector(train_corpus, topic_set, train_config):
    definition = cl.single_cluster_definition(topic_set)
    return det.train_detector(train_corpus, topic_set, definition,
                              train_config, embed_dim=16, hidden_dim=24,
                              fold_iterations=40, fold_seed=9)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
