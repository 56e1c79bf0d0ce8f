import numpy as np
import pytest

from varl.checkpoint import load_checkpoint, save_checkpoint
from varl.nets import Adam, DenseNet, add_grads, flatten_grads, polyak_update

from oracles import finite_difference, max_rel_error


def test_forward_identity_map():
    net = DenseNet([2, 2], rng=np.random.default_rng(0))
    net.weights[0][...] = np.eye(2)
    net.biases[0][...] = 0.0
    assert np.allclose(net.forward(np.array([1.0, 2.0])), [1.0, 2.0])


def test_forward_constant_map():
    net = DenseNet([2, 1], rng=np.random.default_rng(0))
    net.weights[0][...] = 0.0
    net.biases[0][...] = 3.0
    for x in ([0.0, 0.0], [5.0, -2.0], [100.0, 3.0]):
        assert np.allclose(net.forward(np.array(x)), [3.0])


def test_forward_matches_hand_evaluated_chain():
    # straight-line recomputation of the same parameters, layer by layer
    net = DenseNet([2, 3, 2], "tanh", rng=np.random.default_rng(42))
    x = np.array([0.5, -0.5])
    h = np.tanh(net.weights[0] @ x + net.biases[0])
    expected = net.weights[1] @ h + net.biases[1]
    assert np.allclose(net.forward(x), expected, atol=1e-12)


def test_forward_validates_input():
    net = DenseNet([3, 2], rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        net.forward(np.zeros(4))
    with pytest.raises(ValueError):
        net.forward(np.array([1.0, np.nan, 0.0]))


def test_backward_linear_net_outer_product():
    net = DenseNet([3, 2], rng=np.random.default_rng(0))
    net.biases[0][...] = 0.0
    x = np.array([[1.0, 2.0, 3.0]])
    _, cache = net.forward_cached(x)
    grads, _ = net.backward(cache, np.ones((1, 2)))
    assert np.allclose(grads[0][0], np.outer(np.ones(2), x[0]))
    assert np.allclose(grads[0][1], np.ones(2))


def test_backward_zero_upstream_gives_zero_grads():
    net = DenseNet([3, 4, 2], rng=np.random.default_rng(0))
    _, cache = net.forward_cached(np.ones((2, 3)))
    grads, dx = net.backward(cache, np.zeros((2, 2)))
    assert all(np.all(dw == 0) and np.all(db == 0) for dw, db in grads)
    assert np.all(dx == 0)


@pytest.mark.parametrize("sizes,activation", [
    ([3, 8, 1], "tanh"),
    ([2, 6, 4, 1], "tanh"),
    ([4, 8, 1], "relu"),
])
def test_backward_matches_finite_differences(sizes, activation):
    rng = np.random.default_rng(7)
    for trial in range(10):
        net = DenseNet(sizes, activation, rng)
        x = rng.normal(size=(3, sizes[0]))
        upstream = rng.normal(size=(3, sizes[-1]))
        _, cache = net.forward_cached(x)
        grads, _ = net.backward(cache, upstream)
        theta = net.flat_params()

        def loss(flat):
            net.set_flat_params(flat)
            value = float(np.sum(net.forward(x) * upstream))
            return value

        numeric = finite_difference(loss, theta, step=1e-5)
        net.set_flat_params(theta)
        assert max_rel_error(flatten_grads(grads), numeric) < 1e-4


def test_adam_zero_grads_leave_params_unchanged():
    net = DenseNet([2, 3, 1], rng=np.random.default_rng(0))
    opt = Adam(net)
    before = net.flat_params()
    opt.step(net, net.zero_grads())
    assert np.array_equal(net.flat_params(), before)
    assert opt.t == 1


def test_adam_descends_quadratic():
    net = DenseNet([1, 1], rng=np.random.default_rng(0))
    net.weights[0][...] = 1.0
    net.biases[0][...] = 0.0
    opt = Adam(net, lr=0.1)
    w0 = 1.0
    # f(w) = w^2, gradient 2w
    opt.step(net, [(np.array([[2.0 * w0]]), np.zeros(1))])
    w1 = net.weights[0][0, 0]
    assert 0.0 < w1 < w0


def test_adam_converges_to_quadratic_minimum():
    # closed-form minimizer: L = 0.5*||p - p*||^2 with p* fixed
    rng = np.random.default_rng(3)
    net = DenseNet([2, 3, 2], rng=rng)
    target = [rng.normal(scale=0.3, size=w.shape) for w in net.weights]
    target_b = [rng.normal(scale=0.3, size=b.shape) for b in net.biases]
    opt = Adam(net, lr=0.02)
    for _ in range(500):
        grads = [
            (w - tw, b - tb)
            for w, b, tw, tb in zip(net.weights, net.biases, target, target_b)
        ]
        opt.step(net, grads)
    err = max(
        max(np.abs(w - tw).max() for w, tw in zip(net.weights, target)),
        max(np.abs(b - tb).max() for b, tb in zip(net.biases, target_b)),
    )
    assert err < 1e-3


def test_adam_rejects_non_finite():
    net = DenseNet([1, 1], rng=np.random.default_rng(0))
    opt = Adam(net)
    with pytest.raises(FloatingPointError):
        opt.step(net, [(np.array([[np.inf]]), np.zeros(1))])


def test_polyak_tau_one_copies_online():
    rng = np.random.default_rng(5)
    target = DenseNet([2, 4, 1], rng=rng)
    online = DenseNet([2, 4, 1], rng=rng)
    polyak_update(target, online, 1.0)
    assert all(np.array_equal(a, b) for a, b in zip(target.weights, online.weights))
    assert all(np.array_equal(a, b) for a, b in zip(target.biases, online.biases))


def test_polyak_midpoint():
    target = DenseNet([1, 1], rng=np.random.default_rng(0))
    online = DenseNet([1, 1], rng=np.random.default_rng(0))
    target.weights[0][...] = 0.0
    target.biases[0][...] = 0.0
    online.weights[0][...] = 2.0
    online.biases[0][...] = 2.0
    polyak_update(target, online, 0.5)
    assert target.weights[0][0, 0] == 1.0
    assert target.biases[0][0] == 1.0


def test_polyak_geometric_contraction():
    rng = np.random.default_rng(6)
    target = DenseNet([3, 5, 2], rng=rng)
    online = DenseNet([3, 5, 2], rng=rng)
    tau = 0.25
    gap0 = np.abs(target.flat_params() - online.flat_params()).max()
    for k in range(1, 6):
        polyak_update(target, online, tau)
        gap = np.abs(target.flat_params() - online.flat_params()).max()
        assert np.isclose(gap, gap0 * (1 - tau) ** k, rtol=1e-10)


def test_polyak_rejects_mismatched_architectures():
    a = DenseNet([2, 3, 1], rng=np.random.default_rng(0))
    b = DenseNet([2, 4, 1], rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        polyak_update(a, b, 0.5)


def test_seeded_nets_are_bitwise_identical():
    a = DenseNet([3, 8, 2], rng=np.random.default_rng(99))
    b = DenseNet([3, 8, 2], rng=np.random.default_rng(99))
    assert np.array_equal(a.flat_params(), b.flat_params())
    opt_a, opt_b = Adam(a, lr=1e-3), Adam(b, lr=1e-3)
    x = np.arange(6.0).reshape(2, 3)
    for _ in range(20):
        for net, opt in ((a, opt_a), (b, opt_b)):
            out, cache = net.forward_cached(x)
            grads, _ = net.backward(cache, out)  # L = 0.5*sum(out^2)
            opt.step(net, grads)
    assert np.array_equal(a.flat_params(), b.flat_params())


def test_add_grads_shapes():
    net = DenseNet([2, 3, 1], rng=np.random.default_rng(0))
    z = net.zero_grads()
    s = add_grads(z, z)
    assert all(np.all(dw == 0) for dw, _ in s)


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    arrays = {"a/w0": rng.normal(size=(3, 2)), "b/t": np.array(5, dtype=np.int64)}
    path = tmp_path / "ckpt.npz"
    save_checkpoint(path, arrays, {"kind": "test"})
    loaded, meta = load_checkpoint(path)
    assert meta == {"kind": "test"}
    assert np.array_equal(loaded["a/w0"], arrays["a/w0"])
    assert loaded["a/w0"].dtype == np.float64
    assert int(loaded["b/t"]) == 5


def test_checkpoint_rejects_bad_version(tmp_path):
    path = tmp_path / "x.npz"
    np.savez(path, foo=np.zeros(2))
    with pytest.raises(ValueError):
        load_checkpoint(path)


@pytest.mark.parametrize("sizes", [
    [4, 64, 64, 4],      # discrete actor/critic default stack
    [4, 64, 64, 1],      # box critic default stack
    [6, 64, 64, 4],      # box actor default stack (mean + log-std heads)
])
def test_directional_gradients_at_agent_default_shapes(sizes):
    # full per-coordinate differencing is too slow at these widths; random
    # directional derivatives give the same evidence at 2 evals per direction
    rng = np.random.default_rng(17)
    net = DenseNet(sizes, "tanh", rng)
    x = rng.normal(size=(8, sizes[0]))
    upstream = rng.normal(size=(8, sizes[-1]))
    _, cache = net.forward_cached(x)
    grads, _ = net.backward(cache, upstream)
    g = flatten_grads(grads)
    theta = net.flat_params()
    h = 1e-6
    for _ in range(20):
        v = rng.normal(size=theta.size)
        v /= np.linalg.norm(v)
        net.set_flat_params(theta + h * v)
        lp = float(np.sum(net.forward(x) * upstream))
        net.set_flat_params(theta - h * v)
        lm = float(np.sum(net.forward(x) * upstream))
        net.set_flat_params(theta)
        numeric = (lp - lm) / (2 * h)
        analytic = float(g @ v)
        assert abs(analytic - numeric) <= 1e-4 * max(1.0, abs(analytic), abs(numeric))
