import pytest

from skywriter import forest, synth


@pytest.fixture(scope="session")
def corpus125():
    """The default synthetic corpus: 25 samples per letter, seed 42."""
    return synth.gen_dataset(25, synth.SynthParams(seed=42))


@pytest.fixture(scope="session")
def served_model(corpus125):
    """A quick forest good enough to serve and classify with."""
    return forest.forest_fit(corpus125, forest.ForestParams(n_trees=50, max_depth=3, seed=42))


@pytest.fixture(scope="session")
def model_file(served_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.json"
    forest.save_model(served_model, str(path))
    return str(path)
