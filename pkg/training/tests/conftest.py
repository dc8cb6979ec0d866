import pytest

from tochlearn import CorpusConfig, build_dataset


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Tiny paired corpus for unit tests: 2 variants + mirrors."""
    work = tmp_path_factory.mktemp("corpus")
    cfg = CorpusConfig(n_sequences=2, frames=6, n_points=128, seed=1)
    return build_dataset(cfg, work), cfg, work
