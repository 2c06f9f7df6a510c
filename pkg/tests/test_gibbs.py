import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptlda import _backend, _fallback, gibbs
from conceptlda.model import Hyperparameters, ModelFormatError

from oracles import exact_gibbs_posterior, total_variation


def test_init_single_topic(corpus_factory):
    c = corpus_factory([[0, 1, 1], [2, 0]])
    s = gibbs.init(c, Hyperparameters(1), seed=3)
    assert (s.z == 0).all()
    assert s.nk.tolist() == [5]
    gibbs.check_consistency(s)


def test_init_reproducible(corpus_factory):
    c = corpus_factory([[0, 1, 1, 3], [2, 0, 3]])
    h = Hyperparameters(3)
    a, b = gibbs.init(c, h, 11), gibbs.init(c, h, 11)
    assert np.array_equal(a.z, b.z)
    gibbs.check_consistency(a)


def test_init_rejects_empty(corpus_factory):
    with pytest.raises(ValueError):
        gibbs.init(corpus_factory([[], []], terms=["x"]), Hyperparameters(2), 0)


def test_init_skips_empty_segments(corpus_factory):
    c = corpus_factory([[0, 1], [], [1]])
    s = gibbs.init(c, Hyperparameters(2), 0)
    assert s.segment_ids == ["d0", "d2"]


def test_single_topic_sweep_is_identity(corpus_factory):
    s = gibbs.init(corpus_factory([[0, 1, 2], [2, 2]]), Hyperparameters(1), 0)
    before = s.z.copy()
    gibbs.sweep(s)
    assert np.array_equal(before, s.z)


@settings(max_examples=25, deadline=None)
@given(docs=st.lists(st.lists(st.integers(0, 5), min_size=1, max_size=8), min_size=1,
                     max_size=5),
       K=st.integers(1, 4), seed=st.integers(0, 2**31), sweeps=st.integers(1, 4))
def test_counts_tally_after_every_sweep(docs, K, seed, sweeps):
    from conftest import make_corpus
    c = make_corpus(docs, terms=[f"t{i}" for i in range(6)])
    s = gibbs.init(c, Hyperparameters(K, 0.5, 0.1), seed)
    total = c.n_tokens
    for _ in range(sweeps):
        gibbs.sweep(s)
        gibbs.check_consistency(s)
        assert s.ndk.sum() == s.nk.sum() == total


def test_backends_agree_exactly(corpus_factory):
    rng = np.random.default_rng(5)
    c = corpus_factory([rng.integers(0, 12, size=n).tolist() for n in (7, 3, 9, 5)],
                       terms=[f"t{i}" for i in range(12)])
    s = gibbs.init(c, Hyperparameters(4, 0.3, 0.2), 2)
    ref = s.copy()
    for it in range(1, 6):
        u = np.random.default_rng(it).random(len(s.words))
        _backend.gibbs_sweep(s.words, s.docs, s.z, s.ndk, s.nkw, s.nk, 0.3, 0.2, u)
        _fallback.gibbs_sweep(ref.words, ref.docs, ref.z, ref.ndk, ref.nkw, ref.nk, 0.3, 0.2, u)
        assert np.array_equal(s.z, ref.z)


def test_short_chain_matches_exact_posterior():
    # a cheaper version of the acceptance check, on a different instance
    docs = [[0, 1], [1]]
    h = Hyperparameters(2, 0.7, 0.4)
    from conftest import make_corpus
    exact = exact_gibbs_posterior(docs, 2, 2, h.alpha, h.beta)
    s = gibbs.init(make_corpus(docs, terms=["a", "b"]), h, 17)
    for _ in range(200):
        gibbs.sweep(s)
    counts = {}
    n = 40_000
    for _ in range(n):
        gibbs.sweep(s)
        key = tuple(s.z.tolist())
        counts[key] = counts.get(key, 0) + 1
    assert total_variation({k: v / n for k, v in counts.items()}, exact) <= 0.03


def test_run_estimates(corpus_factory):
    c = corpus_factory([[0, 1, 1, 2], [2, 2, 3]])
    st_, m = gibbs.run(c, Hyperparameters(2, 0.5, 0.1), burn_in=5, seed=1)
    assert np.allclose(m.phi.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(m.theta.sum(axis=1), 1.0, atol=1e-12)
    a, b = 0.5, 0.1
    expected_phi = (st_.nkw + b) / (st_.nk[:, None] + 4 * b)
    expected_theta = (st_.ndk + a) / (st_.ndk.sum(1, keepdims=True) + 2 * a)
    assert np.allclose(m.phi, expected_phi, atol=1e-12)
    assert np.allclose(m.theta, expected_theta, atol=1e-12)
    assert m.engine == "gibbs"


def test_single_topic_phi_is_smoothed_unigram(corpus_factory):
    c = corpus_factory([[0, 1, 1], [1, 2]], terms=["a", "b", "c", "d"])
    _, m = gibbs.run(c, Hyperparameters(1, 1.0, 0.5), burn_in=2, seed=0)
    freq = np.array([1, 3, 1, 0])
    assert np.allclose(m.phi[0], (freq + 0.5) / (5 + 4 * 0.5), atol=1e-12)


def test_run_validates_burn_in(corpus_factory):
    with pytest.raises(ValueError):
        gibbs.run(corpus_factory([[0]]), Hyperparameters(1), burn_in=0)


def test_averaging_option(corpus_factory):
    c = corpus_factory([[0, 1, 1, 2], [2, 2, 3], [0, 3]])
    h = Hyperparameters(2, 0.5, 0.1)
    s1, m1 = gibbs.run(c, h, burn_in=4, seed=2)
    s2, m2 = gibbs.run(c, h, burn_in=4, seed=2, n_average=3)
    assert s2.iteration == 7
    assert np.allclose(m2.phi.sum(axis=1), 1.0)
    assert not np.allclose(m1.phi, m2.phi)


def test_assignment_counts(corpus_factory):
    c = corpus_factory([[0, 1, 1, 2], [2, 1, 3]], terms=["a", "b", "c", "d", "e"])
    s, _ = gibbs.run(c, Hyperparameters(3, 0.5, 0.1), burn_in=3, seed=4)
    for w, freq in enumerate([1, 3, 2, 1, 0]):
        counts = gibbs.assignment_counts(s, w)
        assert counts.sum() == freq
        tally = np.zeros(3, dtype=int)
        for zi, wi in zip(s.z, s.words):
            if wi == w:
                tally[zi] += 1
        assert np.array_equal(counts, tally)
    assert not gibbs.assignment_counts(s, 4).any()


def test_state_roundtrip_and_resume(tmp_path, corpus_factory):
    c = corpus_factory([[0, 1, 1, 2], [2, 1, 3], [0, 0]])
    h = Hyperparameters(2, 0.5, 0.1)
    s, _ = gibbs.run(c, h, burn_in=3, seed=8)
    gibbs.save_state(s, tmp_path / "s.json")
    back = gibbs.load_state(tmp_path / "s.json", c)
    assert np.array_equal(back.z, s.z) and back.iteration == 3
    straight, _ = gibbs.run(c, h, burn_in=6, seed=8)
    for _ in range(3):
        gibbs.sweep(back)
    assert np.array_equal(back.z, straight.z)


def test_state_load_rejects_mismatch(tmp_path, corpus_factory):
    c = corpus_factory([[0, 1], [1]])
    s = gibbs.init(c, Hyperparameters(2), 0)
    gibbs.save_state(s, tmp_path / "s.json")
    with pytest.raises(ModelFormatError):
        gibbs.load_state(tmp_path / "s.json", corpus_factory([[0, 1, 1], [1]]))
    (tmp_path / "s.json").write_text('{"version": 1, "z": ')
    with pytest.raises(ModelFormatError):
        gibbs.load_state(tmp_path / "s.json", c)
