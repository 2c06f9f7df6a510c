from pathlib import Path

import numpy as np
import pytest

from conceptlda.corpus import EncodedCorpus, Vocabulary, ingest, read_stopwords

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def fixture_corpus():
    return ingest(DATA / "fixture_corpus.jsonl", read_stopwords(DATA / "stopwords.txt"))


def make_corpus(docs, terms=None):
    """Build an EncodedCorpus from lists of token ids or term strings."""
    if terms is None:
        terms = sorted({t for d in docs for t in d}, key=str)
    vocab = Vocabulary(terms)
    segs = []
    for i, d in enumerate(docs):
        ids = [t if isinstance(t, (int, np.integer)) else vocab.index[t] for t in d]
        segs.append((f"d{i}", np.asarray(ids, dtype=np.int32)))
    return EncodedCorpus(vocab, tuple(segs))


@pytest.fixture
def corpus_factory():
    return make_corpus



# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _ACCEPTANCE.append((marker.args, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome, duration in _ACCEPTANCE:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({duration:.1f}s)")
