import numpy as np
import pytest

from conceptlda import online
from conceptlda.model import Hyperparameters, ModelFormatError

from oracles import naive_batch_vb_lambda, naive_segment_gamma

TEN_SEGMENTS = [[0, 1, 1, 2], [3, 4, 4], [0, 0, 5, 6, 1], [7, 7, 2], [5, 6],
                [1, 3, 3, 3, 0], [2], [4, 6, 6, 7], [0, 7], [2, 5, 5, 1, 1, 4]]


def make_state(K=2, V=3, alpha=0.4, beta=0.2, seed=0, **kw):
    return online.init_state(V, Hyperparameters(K, alpha, beta), n_docs=kw.pop("n_docs", 10),
                             seed=seed, **kw)


def test_single_topic_gamma():
    st = make_state(K=1, V=5)
    gamma, sstats = online.e_step([np.array([0, 1, 1, 4]), np.array([2])], st)
    assert gamma[:, 0] == pytest.approx([0.4 + 4, 0.4 + 1], rel=1e-12)
    assert sstats.sum() == pytest.approx(5.0, rel=1e-12)


def test_gamma_positive():
    st = make_state(K=4, V=6, seed=3)
    gamma, _ = online.e_step([np.array([0, 5, 5]), np.array([], dtype=int)], st)
    assert (gamma > 0).all()


def test_toy_segment_matches_fixed_point_oracle():
    st = make_state(K=2, V=3, seed=7)
    seg = np.array([0, 2, 2, 1, 2])
    gamma, _ = online.e_step([seg], st, tol=1e-14, max_iter=100_000)
    ref, _, _ = naive_segment_gamma(seg.tolist(), st.lam.tolist(), 0.4)
    assert np.max(np.abs(gamma[0] - ref)) < 1e-10
    post = online.infer_theta(st, seg, tol=1e-14, max_iter=100_000)
    assert np.max(np.abs(post.theta - np.array(ref) / sum(ref))) < 1e-10


def test_sufficient_statistics_are_expected_counts():
    st = make_state(K=3, V=8, seed=2)
    batch = [np.asarray(d) for d in TEN_SEGMENTS[:4]]
    _, sstats = online.e_step(batch, st, tol=1e-12, max_iter=10_000)
    assert sstats.sum() == pytest.approx(sum(len(d) for d in batch), rel=1e-10)
    assert np.allclose(sstats.sum(axis=0), np.bincount(np.concatenate(batch), minlength=8))


def test_bound_non_decreasing_across_inner_iterations():
    st = make_state(K=4, V=8, seed=4, alpha=0.1)
    trace = []
    online.e_step([np.asarray(d) for d in TEN_SEGMENTS], st, tol=1e-10, max_iter=200,
                  trace=trace)
    for seg_trace in trace:
        diffs = np.diff(seg_trace)
        assert (diffs >= -1e-9 * np.abs(np.asarray(seg_trace[1:]))).all()


def test_rho_schedule():
    st = make_state(tau0=1.0, kappa=1.0, V=8)
    rhos = []
    batch = [np.asarray(TEN_SEGMENTS[0])]
    for _ in range(3):
        rhos.append(st.rho)
        st = online.update(batch, st)
    assert rhos == pytest.approx([1 / 2, 1 / 3, 1 / 4])
    assert st.t == 3


def test_first_update_with_unit_rate_is_batch_vb():
    st = make_state(K=3, V=8, seed=11, tau0=0.0, kappa=0.7)
    assert st.rho == 1.0
    batch = [np.asarray(d) for d in TEN_SEGMENTS]
    new = online.update(batch, st, tol=1e-13, max_iter=100_000)
    ref = naive_batch_vb_lambda(TEN_SEGMENTS, st.lam.tolist(), 0.4, 0.2)
    assert np.max(np.abs(new.lam - ref)) < 1e-8


def test_vanishing_rate_leaves_lambda_unchanged():
    st = make_state(K=2, V=8, tau0=1e15, kappa=1.0)
    batch = [np.asarray(d) for d in TEN_SEGMENTS[:3]]
    after = online.update(batch, online.update(batch, st))
    assert np.max(np.abs(after.lam - st.lam)) < 1e-12


def test_update_positive_and_deterministic():
    st = make_state(K=3, V=8, seed=5)
    batch = [np.asarray(d) for d in TEN_SEGMENTS[:5]]
    a, b = online.update(batch, st), online.update(batch, st)
    assert (a.lam > 0).all()
    assert np.array_equal(a.lam, b.lam)


def test_state_validation():
    with pytest.raises(ValueError):
        make_state(kappa=0.5)
    with pytest.raises(ValueError):
        make_state(tau0=-1.0)


def test_train(corpus_factory):
    c = corpus_factory(TEN_SEGMENTS + [[]], terms=[f"t{i}" for i in range(8)])
    h = Hyperparameters(3, 0.3, 0.1)
    st, m = online.train(c, h, passes=3, batch_size=4, seed=1)
    st2, m2 = online.train(c, h, passes=3, batch_size=4, seed=1)
    assert np.allclose(m.phi.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(m.theta.sum(axis=1), 1.0, atol=1e-12)
    assert np.array_equal(m.phi, m2.phi) and np.array_equal(m.theta, m2.theta)
    assert st.t == 3 * 3
    assert m.M == 10 and "d10" not in m.segment_ids
    assert m.engine == "online"


def test_train_rejects_empty(corpus_factory):
    with pytest.raises(ValueError):
        online.train(corpus_factory([[]], terms=["x"]), Hyperparameters(2))


def test_infer_theta_edge_cases():
    st = make_state(K=3, V=8)
    empty = online.infer_theta(st, np.array([], dtype=int))
    assert empty.theta == pytest.approx([1 / 3] * 3)
    one = online.infer_theta(make_state(K=1, V=8), np.array([1, 2]))
    assert one.theta.tolist() == [1.0]
    with pytest.raises(ValueError):
        online.infer_theta(st, np.array([9]))


def test_infer_theta_vocabulary_mismatch():
    st = online.init_state(2, Hyperparameters(2), 1, vocabulary=("a", "b"))
    with pytest.raises(ValueError, match="vocabulary"):
        online.infer_theta(st, np.array([0]), vocabulary=("a", "c"))


def test_state_file_roundtrip(tmp_path):
    st = online.update([np.asarray(TEN_SEGMENTS[0])], make_state(K=2, V=8))
    online.save_state(st, tmp_path / "vb.json")
    back = online.load_state(tmp_path / "vb.json")
    assert np.array_equal(back.lam, st.lam)
    assert (back.t, back.tau0, back.kappa, back.batch_size) == (1, 1.0, 0.7, 256)
    (tmp_path / "vb.json").write_text("[1, 2")
    with pytest.raises(ModelFormatError):
        online.load_state(tmp_path / "vb.json")
