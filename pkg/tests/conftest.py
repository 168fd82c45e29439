import numpy as np
import pytest

from s5eval import LabeledSources, Waveform
from s5eval.synth import DatasetSpec, write_dataset

SR = 16000


def wave(x, sr=SR):
    return Waveform(np.asarray(x, dtype=float), sr)


def noise(rng, n=512, sr=SR):
    return Waveform(rng.standard_normal(n), sr)


def labeled(labels, waves):
    return LabeledSources.from_lists(list(labels), list(waves))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def fixture12(tmp_path_factory):
    """The 12-scene synthetic fixture, generated once per session."""
    out = tmp_path_factory.mktemp("fixture12")
    return write_dataset(out, DatasetSpec(count=12, seed=0, fn_probability=0.2, fp_probability=0.3))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def log(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        lines.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
