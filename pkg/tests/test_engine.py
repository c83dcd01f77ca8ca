"""Forward oracles and finite-difference gradient checks for every layer kind."""

import numpy as np
import pytest

from cardioseg.engine import (
    ExecutionError,
    LayerSpec,
    Network,
    NetworkSpec,
    ShapeError,
)

from oracles import central_difference, max_relative_error, naive_conv2d


def single_layer_net(kind, in_shape, seed=0, **kw):
    layer = LayerSpec(name="lay", kind=kind, inputs=("x",), **kw)
    spec = NetworkSpec(
        kind="test",
        inputs={"x": in_shape},
        layers=(layer,),
        outputs=("lay",),
        num_classes=1,
    )
    return Network(spec, seed=seed, dtype=np.float64)


def test_conv_identity_kernel_passthrough(rng):
    net = single_layer_net("conv2d", (2, 5, 5), out_channels=2, kernel_size=3)
    w = np.zeros((2, 2, 3, 3))
    w[0, 0, 1, 1] = 1.0
    w[1, 1, 1, 1] = 1.0
    net.params["lay.weight"].data = w
    net.params["lay.bias"].data = np.zeros(2)
    x = rng.standard_normal((3, 2, 5, 5))
    y = net.forward({"x": x})["lay"]
    assert np.array_equal(y, x)


def test_leaky_relu_slope_value():
    net = single_layer_net("leaky_relu", (1, 1, 2))
    x = np.array([-2.0, 3.0]).reshape(1, 1, 1, 2)
    y = net.forward({"x": x})["lay"]
    assert y[0, 0, 0, 0] == pytest.approx(-0.2)
    assert y[0, 0, 0, 1] == 3.0


def test_two_conv_stack_matches_naive_loop_oracle(rng):
    spec = NetworkSpec(
        kind="test",
        inputs={"x": (1, 4, 4)},
        layers=(
            LayerSpec("c1", "conv2d", ("x",), out_channels=2, kernel_size=3),
            LayerSpec("c2", "conv2d", ("c1",), out_channels=1, kernel_size=3),
        ),
        outputs=("c2",),
        num_classes=1,
    )
    net = Network(spec, seed=7, dtype=np.float64)
    x = rng.standard_normal((1, 1, 4, 4))
    y = net.forward({"x": x})["c2"]
    mid = naive_conv2d(x, net.params["c1.weight"].data, net.params["c1.bias"].data)
    ref = naive_conv2d(mid, net.params["c2.weight"].data, net.params["c2.bias"].data)
    np.testing.assert_allclose(y, ref, rtol=1e-12, atol=1e-12)


LAYER_CASES = [
    ("conv2d", (2, 4, 4), dict(out_channels=3, kernel_size=3)),
    ("conv2d", (3, 3, 5), dict(out_channels=2, kernel_size=1)),
    ("conv1x1_head", (3, 4, 4), dict(out_channels=2)),
    ("batchnorm", (3, 4, 4), {}),
    ("leaky_relu", (2, 4, 4), {}),
    ("maxpool2", (2, 4, 4), {}),
    ("upsample2", (2, 3, 3), {}),
    ("sigmoid", (2, 3, 3), {}),
    ("softmax", (3, 3, 3), {}),
]


def _grad_margin_input(rng, shape, kind):
    x = rng.standard_normal(shape)
    if kind == "leaky_relu":
        x = np.sign(x) * (np.abs(x) + 0.05)  # keep away from the kink
    return x


@pytest.mark.parametrize("kind,shape,kw", LAYER_CASES)
def test_layer_gradient_matches_central_differences(rng, kind, shape, kw):
    net = single_layer_net(kind, shape, seed=3, **kw)
    batch = 2
    x = _grad_margin_input(rng, (batch,) + shape, kind)
    proj = rng.standard_normal(net.forward({"x": x})["lay"].shape)

    def loss_given_input(xv):
        return float(np.sum(net.forward({"x": xv}, training=True)["lay"] * proj))

    net.forward({"x": x}, training=True)
    net.zero_grad()
    net.backward({"lay": proj})
    num = central_difference(loss_given_input, x)
    assert max_relative_error(net.input_grads["x"], num) < 1e-4

    for pname, p in net.params.items():
        orig = p.data.copy()

        def loss_given_param(pv, _p=p):
            _p.data = pv
            val = float(np.sum(net.forward({"x": x}, training=True)["lay"] * proj))
            return val

        num_p = central_difference(loss_given_param, orig.copy())
        p.data = orig
        assert max_relative_error(p.grad, num_p) < 1e-4, pname


def test_multi_input_layer_gradients(rng):
    for kind in ("concat", "add"):
        spec = NetworkSpec(
            kind="test",
            inputs={"a": (2, 3, 3), "b": (2, 3, 3)},
            layers=(LayerSpec("m", kind, ("a", "b")),),
            outputs=("m",),
            num_classes=1,
        )
        net = Network(spec, dtype=np.float64)
        a = rng.standard_normal((1, 2, 3, 3))
        b = rng.standard_normal((1, 2, 3, 3))
        proj = rng.standard_normal(net.forward({"a": a, "b": b})["m"].shape)
        net.backward({"m": proj})

        def loss_a(av):
            return float(np.sum(net.forward({"a": av, "b": b})["m"] * proj))

        assert max_relative_error(
            net.input_grads["a"], central_difference(loss_a, a)
        ) < 1e-4


def test_zero_upstream_gradient_gives_zero_param_grads(rng):
    net = single_layer_net("conv2d", (2, 4, 4), out_channels=2, kernel_size=3)
    x = rng.standard_normal((1, 2, 4, 4))
    y = net.forward({"x": x})["lay"]
    net.zero_grad()
    net.backward({"lay": np.zeros_like(y)})
    for p in net.params.values():
        assert np.all(p.grad == 0)


def test_conv_sum_loss_weight_grad_is_input_correlation(rng):
    # with loss = sum of outputs, d loss / d w[co,ci,ki,kj] is the sum of the
    # (same-padded) input shifted by the kernel offset
    net = single_layer_net("conv2d", (1, 4, 4), out_channels=1, kernel_size=3)
    x = rng.standard_normal((1, 1, 4, 4))
    y = net.forward({"x": x})["lay"]
    net.zero_grad()
    net.backward({"lay": np.ones_like(y)})

    def loss(pv):
        net.params["lay.weight"].data = pv
        return float(np.sum(net.forward({"x": x})["lay"]))

    orig = net.params["lay.weight"].data.copy()
    num = central_difference(loss, orig.copy())
    net.params["lay.weight"].data = orig
    assert max_relative_error(net.params["lay.weight"].grad, num) < 1e-4
    xp = np.pad(x[0, 0], 1)
    for ki in range(3):
        for kj in range(3):
            expect = xp[ki : ki + 4, kj : kj + 4].sum()
            assert net.params["lay.weight"].grad[0, 0, ki, kj] == pytest.approx(expect)


def test_softmax_sums_to_one_sigmoid_in_open_interval(rng):
    net = single_layer_net("softmax", (4, 5, 5))
    x = 10.0 * rng.standard_normal((2, 4, 5, 5))
    y = net.forward({"x": x})["lay"]
    np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-6)
    net2 = single_layer_net("sigmoid", (1, 5, 5))
    # below float64 saturation (|logit| ~ 37) the open interval is exact
    y2 = net2.forward({"x": 8 * rng.standard_normal((2, 1, 5, 5))})["lay"]
    assert np.all(y2 > 0) and np.all(y2 < 1)


def test_forward_is_deterministic(rng):
    net = single_layer_net("conv2d", (2, 6, 6), out_channels=3, kernel_size=3)
    x = rng.standard_normal((2, 2, 6, 6))
    a = net.forward({"x": x})["lay"]
    b = net.forward({"x": x})["lay"]
    assert np.array_equal(a, b)


def test_backward_before_forward_raises():
    net = single_layer_net("sigmoid", (1, 2, 2))
    with pytest.raises(ExecutionError):
        net.backward({"lay": np.zeros((1, 1, 2, 2))})


def test_input_shape_mismatch_rejected_with_name(rng):
    net = single_layer_net("sigmoid", (2, 4, 4))
    with pytest.raises(ShapeError, match="'x'"):
        net.forward({"x": rng.standard_normal((1, 3, 4, 4))})


def test_maxpool_odd_size_rejected_at_build():
    with pytest.raises(ShapeError, match="pool"):
        single_layer_net("maxpool2", (1, 5, 4))


def test_skip_connection_gradient_accumulates(rng):
    # a node consumed twice must receive the sum of both downstream gradients
    spec = NetworkSpec(
        kind="test",
        inputs={"x": (2, 4, 4)},
        layers=(
            LayerSpec("act", "leaky_relu", ("x",)),
            LayerSpec("c", "conv2d", ("act",), out_channels=2, kernel_size=3),
            LayerSpec("join", "add", ("act", "c")),
        ),
        outputs=("join",),
        num_classes=1,
    )
    net = Network(spec, seed=5, dtype=np.float64)
    x = np.sign(rng.standard_normal((1, 2, 4, 4))) * 0.5
    proj = rng.standard_normal((1, 2, 4, 4))

    def loss(xv):
        return float(np.sum(net.forward({"x": xv}, training=True)["join"] * proj))

    net.forward({"x": x}, training=True)
    net.backward({"join": proj})
    assert max_relative_error(net.input_grads["x"], central_difference(loss, x)) < 1e-4
