import numpy as np
import pytest

from liftrisk.features import build_dataset
from liftrisk.synth import DEFAULT_DURATION, DEFAULT_PROTOCOL, GeneratorParams, generate_corpus


def direct_dft(x):
    """O(n^2) DFT straight from the definition."""
    x = np.asarray(x, dtype=float)
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def oracle_single_sided(x):
    """Single-sided amplitude spectrum of ``x`` zero-padded to a power of two, via the direct DFT."""
    n = 1 << (len(x) - 1).bit_length()
    padded = np.zeros(n)
    padded[: len(x)] = x
    mags = np.abs(direct_dft(padded))[: n // 2 + 1] / n
    if n > 1:
        mags[1:-1] *= 2
    return mags


@pytest.fixture(scope="session")
def default_corpus():
    return generate_corpus(DEFAULT_PROTOCOL, DEFAULT_DURATION, GeneratorParams(seed=7))


@pytest.fixture(scope="session")
def datasets(default_corpus):
    cache = {}

    def get(window_seconds):
        if window_seconds not in cache:
            cache[window_seconds] = build_dataset(default_corpus, window_seconds)
        return cache[window_seconds]

    return get


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
