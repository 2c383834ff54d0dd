import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chordgen import synthetic
from chordgen.hmm import (HmmError, HmmParams, dumps_hmm, emission_loglik, fit_hmm, load_hmm,
                          loads_hmm, path_log_score, posterior_bars, save_hmm, uniform_params,
                          viterbi, viterbi_log)
from chordgen.preprocess import BarSequence


def _onehot(pc, weight=1.0):
    v = np.zeros(12)
    v[pc] = weight
    return v


def _corpus():
    # song a: C C G ; song b: G C
    a = BarSequence("a", np.array([_onehot(0), _onehot(4, 0.5), _onehot(7)]), np.array([0, 0, 7]))
    b = BarSequence("b", np.array([_onehot(7), _onehot(0)]), np.array([7, 0]))
    return [a, b]


def test_fit_counts_without_smoothing():
    p = fit_hmm(_corpus(), smoothing_alpha=0.0)
    # chord histogram over all bars: C x3, G x2
    assert p.initial[0] == pytest.approx(0.6) and p.initial[7] == pytest.approx(0.4)
    # bigrams inside songs only: C->C, C->G, G->C
    assert p.transition[0, 0] == pytest.approx(0.5) and p.transition[0, 7] == pytest.approx(0.5)
    assert p.transition[7, 0] == pytest.approx(1.0)
    # emission mass under C: pc0 gets 1 + 1, pc4 gets 0.5
    assert p.emission[0, 0] == pytest.approx(2 / 2.5) and p.emission[0, 4] == pytest.approx(0.5 / 2.5)
    # unseen rows fall back to uniform
    assert np.allclose(p.transition[3], 1 / 24) and np.allclose(p.emission[3], 1 / 12)


def test_fit_with_smoothing():
    p = fit_hmm(_corpus(), smoothing_alpha=0.01)
    assert p.transition[0, 0] == pytest.approx((1 + 0.01) / (2 + 24 * 0.01))
    assert p.initial[5] == pytest.approx(0.01 / (5 + 24 * 0.01))
    assert p.emission[7, 7] == pytest.approx((2 + 0.01) / (2 + 12 * 0.01))
    for arr in (p.initial, p.transition, p.emission):
        assert np.allclose(arr.sum(axis=-1), 1.0) and np.all(arr > 0)


def test_no_transition_across_songs():
    p = fit_hmm(_corpus(), smoothing_alpha=0.0)
    # the last bar of a (G) precedes the first bar of b (G) in the stream, but G->G is never counted
    assert p.transition[7, 7] == 0.0


def test_fit_rejects_empty_and_negative_alpha():
    with pytest.raises(HmmError):
        fit_hmm([])
    with pytest.raises(HmmError):
        fit_hmm(_corpus(), smoothing_alpha=-1)


def _random_params(rng, S, K=12, alpha=0.05):
    def rows(shape):
        r = rng.random(shape) + alpha
        return r / r.sum(axis=-1, keepdims=True)
    return HmmParams(rows(S), rows((S, S)), rows((S, K)), alpha)


def test_emission_loglik_matches_loop():
    rng = np.random.default_rng(0)
    p = _random_params(rng, 4)
    x = rng.random(12) * (rng.random(12) > 0.4)
    for s in range(4):
        expected = sum(x[k] * math.log(p.emission[s, k]) for k in range(12) if x[k] > 0)
        assert emission_loglik(p, x)[s] == pytest.approx(expected, abs=1e-12)


def test_emission_zero_mass_against_zero_prob():
    p = HmmParams(np.array([1.0]), np.array([[1.0]]), np.array([[1.0] + [0.0] * 11]), 0.0)
    assert emission_loglik(p, _onehot(0))[0] == 0.0
    assert emission_loglik(p, _onehot(3))[0] == -np.inf


def test_posterior_matches_bayes():
    rng = np.random.default_rng(1)
    p = _random_params(rng, 5)
    x = rng.random(12)
    joint = [p.initial[s] * math.prod(p.emission[s, k] ** x[k] for k in range(12)) for s in range(5)]
    expected = np.array(joint) / sum(joint)
    assert np.allclose(posterior_bars(p, x), expected, atol=1e-12)


def _brute_force(log_pi, log_A, log_B):
    T, S = log_B.shape
    best, best_path = -np.inf, None
    for path in itertools.product(range(S), repeat=T):  # lexicographic, so ties keep the first
        score = log_pi[path[0]] + log_B[0, path[0]]
        for t in range(1, T):
            score += log_A[path[t - 1], path[t]] + log_B[t, path[t]]
        if score > best:
            best, best_path = score, path
    return np.array(best_path), best


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**31), S=st.integers(1, 5), T=st.integers(1, 6))
def test_viterbi_matches_enumeration(seed, S, T):
    rng = np.random.default_rng(seed)
    p = _random_params(rng, S)
    xs = rng.random((T, 12))
    result = viterbi(p, xs)
    log_B = emission_loglik(p, xs)
    path, score = _brute_force(p.log_initial(), p.log_transition(), log_B)
    assert np.array_equal(result.path, path)
    assert abs(result.log_score - score) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), T=st.integers(1, 8))
def test_log_score_equals_rewalk(seed, T):
    rng = np.random.default_rng(seed)
    p = _random_params(rng, 24)
    xs = rng.random((T, 12))
    r = viterbi(p, xs)
    rewalk = path_log_score(p.log_initial(), p.log_transition(), emission_loglik(p, xs), r.path)
    assert r.log_score == pytest.approx(rewalk, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), scale=st.floats(0.1, 10), shift=st.floats(-5, 5))
def test_affine_emission_rescaling_keeps_path(seed, scale, shift):
    rng = np.random.default_rng(seed)
    S, T = 4, 5
    log_B = np.log(rng.random((T, S)))
    log_pi = np.log(np.full(S, 1 / S))
    log_A = np.zeros((S, S))  # flat transitions: the path is the per-frame argmax
    a = viterbi_log(log_pi, log_A, log_B).path
    b = viterbi_log(log_pi, log_A, scale * log_B + shift).path
    assert np.array_equal(a, b)
    assert np.array_equal(a, np.argmax(log_B, axis=1))


def test_ties_go_to_lowest_index():
    p = uniform_params(3)
    assert viterbi(p, np.zeros((4, 12))).path.tolist() == [0, 0, 0, 0]


def test_forbidden_transitions_are_respected():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    with np.errstate(divide="ignore"):
        r = viterbi_log(np.log([1.0, 0.0]), np.log(A), np.zeros((5, 2)))
    assert r.path.tolist() == [0, 1, 0, 1, 0]


def test_single_frame_is_argmax_of_prior_times_emission():
    rng = np.random.default_rng(3)
    p = _random_params(rng, 24)
    x = rng.random(12)
    assert viterbi(p, x[None]).path[0] == int(np.argmax(posterior_bars(p, x)))


def test_viterbi_rejects_empty():
    with pytest.raises(HmmError):
        viterbi(uniform_params(), np.zeros((0, 12)))


def test_persistence_is_exact(tmp_path):
    rng = np.random.default_rng(4)
    p = _random_params(rng, 24, alpha=0.01)
    q = loads_hmm(dumps_hmm(p))
    for a, b in ((p.initial, q.initial), (p.transition, q.transition), (p.emission, q.emission)):
        assert np.array_equal(a, b)
    assert q.smoothing_alpha == p.smoothing_alpha
    save_hmm(p, tmp_path / "m.hmm")
    assert np.array_equal(load_hmm(tmp_path / "m.hmm").emission, p.emission)
    xs = rng.random((6, 12))
    assert np.array_equal(viterbi(p, xs).path, viterbi(q, xs).path)
    assert viterbi(p, xs).log_score == viterbi(q, xs).log_score


def test_bad_header_rejected():
    with pytest.raises(HmmError):
        loads_hmm("net foo\n")


def test_refit_recovers_transitions():
    truth = HmmParams(
        np.array([0.5, 0.3, 0.2]),
        np.array([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.2, 0.2, 0.6]]),
        np.array([_onehot(0, 0.7) + _onehot(4, 0.3), _onehot(5, 0.6) + _onehot(9, 0.4),
                  _onehot(7, 0.5) + _onehot(11, 0.5)]),
        0.0)
    data = synthetic.sample_hmm(truth, n_songs=10, n_bars=1000, seed=11)
    fitted = fit_hmm(data, smoothing_alpha=0.0, n_states=3)
    assert np.max(np.abs(fitted.transition - truth.transition)) <= 0.02
    assert np.max(np.abs(fitted.emission - truth.emission)) <= 0.02
