import numpy as np
import pytest
from hypothesis import given, strategies as st

from playerprice.optim import (Hyperparams, OptimizerState, anneal_rate, epoch_seed,
                               make_minibatches, nesterov_step)

from helpers import random_net


def quad_grad(params):
    # loss 0.5 * w^2
    return [p.copy() for p in params]


def test_paper_defaults():
    hp = Hyperparams()
    assert (hp.eta0, hp.anneal_k, hp.mu, hp.lam, hp.batch_size, hp.patience) == (
        0.01, 0.001, 0.99, 0.0005, 20, 10)


@pytest.mark.parametrize("kw", [dict(mu=1.0), dict(mu=-0.1), dict(eta0=0.0),
                                dict(anneal_k=-1.0), dict(lam=-1.0), dict(batch_size=0)])
def test_hyperparams_validation(kw):
    with pytest.raises(ValueError):
        Hyperparams(**kw)


@pytest.mark.parametrize("t,expected", [(0, 0.01), (1000, 0.005), (100, 0.01 / 1.1)])
def test_anneal_values(t, expected):
    assert anneal_rate(0.01, 0.001, t) == pytest.approx(expected, abs=1e-15)


@given(st.floats(1e-4, 1.0), st.floats(1e-4, 1.0), st.integers(0, 10_000))
def test_anneal_monotone(eta0, k, t):
    assert anneal_rate(eta0, k, t + 1) < anneal_rate(eta0, k, t)
    assert anneal_rate(eta0, 0.0, t) == eta0
    assert anneal_rate(eta0, k, 0) == eta0


def test_minibatch_sizes():
    assert [len(b) for b in make_minibatches(7, 3, 0)] == [3, 3, 1]


@given(st.integers(1, 300), st.integers(1, 50), st.integers(0, 2**31))
def test_minibatch_partition(n, B, seed):
    batches = make_minibatches(n, B, seed)
    assert len(batches) == -(-n // B)
    joined = np.concatenate(batches)
    assert sorted(joined.tolist()) == list(range(n))
    again = make_minibatches(n, B, seed)
    assert all(np.array_equal(a, b) for a, b in zip(batches, again))


def test_minibatches_reshuffle_per_epoch():
    a = make_minibatches(50, 10, epoch_seed(1, 0))
    b = make_minibatches(50, 10, epoch_seed(1, 1))
    assert not np.array_equal(np.concatenate(a), np.concatenate(b))


def test_plain_descent_when_no_momentum():
    w = [np.array([1.0])]
    state = OptimizerState.zeros_like(w)
    assert nesterov_step(w, state, quad_grad, 0.1, 0.0)[0][0] == pytest.approx(0.9, abs=1e-15)


def test_nesterov_two_steps():
    w = [np.array([1.0])]
    state = OptimizerState.zeros_like(w)
    w = nesterov_step(w, state, quad_grad, 0.1, 0.9)
    assert w[0][0] == pytest.approx(0.9, abs=1e-12)
    assert state.velocity[0][0] == pytest.approx(-0.1, abs=1e-12)
    seen = []
    w = nesterov_step(w, state, lambda p: (seen.append(p[0][0]), quad_grad(p))[1], 0.1, 0.9)
    assert seen[0] == pytest.approx(0.81, abs=1e-12)
    assert state.velocity[0][0] == pytest.approx(-0.171, abs=1e-12)
    assert w[0][0] == pytest.approx(0.729, abs=1e-12)


def test_nesterov_fixed_point():
    w = [np.arange(6.0).reshape(2, 3), np.ones(2)]
    state = OptimizerState.zeros_like(w)
    out = nesterov_step(w, state, lambda p: [np.zeros_like(x) for x in p], 0.5, 0.9)
    for a, b in zip(w, out):
        np.testing.assert_array_equal(a, b)


@given(st.integers(0, 1000), st.floats(1e-4, 1.0))
def test_zero_momentum_is_vanilla_exactly(seed, eta):
    net = random_net((3, 4, 2), seed)
    rng = np.random.default_rng(seed)
    g = [rng.normal(size=p.shape) for p in net.params()]
    state = OptimizerState([rng.normal(size=p.shape) for p in net.params()])
    out = nesterov_step(net, state, lambda p: g, eta, 0.0)
    for new, old, gi in zip(out.params(), net.params(), g):
        np.testing.assert_array_equal(new, old - eta * gi)


def test_velocity_shapes_persist(rng):
    net = random_net((3, 4, 2), 0)
    state = OptimizerState.zeros_like(net.params())
    shapes = [v.shape for v in state.velocity]
    for _ in range(5):
        net = nesterov_step(net, state, lambda p: [rng.normal(size=x.shape) for x in p], 0.1, 0.9)
        assert [v.shape for v in state.velocity] == shapes


def test_shape_mismatch():
    state = OptimizerState([np.zeros(2)])
    with pytest.raises(ValueError):
        nesterov_step([np.zeros(3)], state, quad_grad, 0.1, 0.9)
    with pytest.raises(ValueError):
        nesterov_step([np.zeros(2)], OptimizerState([np.zeros(2)]),
                      lambda p: [np.zeros(3)], 0.1, 0.9)


# (mu, eta) pairs where (1 + mu)^2 (1 - eta) >= 4 mu, i.e. the iteration is not underdamped
@pytest.mark.parametrize("mu,eta", [(0.0, 0.05), (0.5, 0.05), (0.9, 0.002), (0.99, 2e-5)])
def test_quadratic_decays_monotonically(mu, eta):
    assert (1 + mu) ** 2 * (1 - eta) >= 4 * mu
    w = [np.array([1.0])]
    state = OptimizerState.zeros_like(w)
    traj = []
    for _ in range(200):
        w = nesterov_step(w, state, quad_grad, eta, mu)
        traj.append(abs(w[0][0]))
    assert np.all(np.diff(traj[10:]) < 0)
    assert traj[-1] < 1.0


def test_quadratic_underdamped_still_converges():
    w = [np.array([1.0])]
    state = OptimizerState.zeros_like(w)
    for _ in range(200):
        w = nesterov_step(w, state, quad_grad, 0.05, 0.9)
    assert abs(w[0][0]) < 1e-6
