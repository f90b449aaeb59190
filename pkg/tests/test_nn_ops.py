"""Forward-pass contracts of the tensor substrate."""

import numpy as np
import pytest

from dynhi import nn
from dynhi.errors import ConfigError, DimensionError, StateError
from dynhi.nn import Parameter, Tensor


def test_conv1d_reference_geometry():
    rng = np.random.default_rng(0)
    layer = nn.Conv1d(1, 8, kernel_size=10, stride=2, rng=rng)
    out = layer(Tensor(rng.standard_normal((3, 1, 1280))))
    assert out.shape == (3, 8, 636)


def test_conv1d_matches_nested_loop_oracle():
    x = Tensor(np.array([[[1.0, 2.0, 3.0, 4.0]]]))
    w = Parameter(np.array([[[1.0, 1.0]]]))
    b = Parameter(np.zeros(1))
    out = nn.conv1d(x, w, b, stride=2)
    np.testing.assert_array_equal(out.data, [[[3.0, 7.0]]])

    # general case against a naive triple loop
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 3, 17))
    w = rng.standard_normal((4, 3, 5))
    bias = rng.standard_normal(4)
    stride = 3
    got = nn.conv1d(Tensor(x), Parameter(w), Parameter(bias), stride).data
    steps = (17 - 5) // stride + 1
    want = np.zeros((2, 4, steps))
    for bi in range(2):
        for co in range(4):
            for t in range(steps):
                acc = bias[co]
                for ci in range(3):
                    for k in range(5):
                        acc += x[bi, ci, t * stride + k] * w[co, ci, k]
                want[bi, co, t] = acc
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_conv1d_zero_input_zero_bias_gives_zero():
    rng = np.random.default_rng(2)
    w = Parameter(rng.standard_normal((2, 1, 3)))
    out = nn.conv1d(Tensor(np.zeros((1, 1, 9))), w, Parameter(np.zeros(2)), stride=1)
    np.testing.assert_array_equal(out.data, np.zeros((1, 2, 7)))


def test_conv1d_shape_errors_name_the_axis():
    rng = np.random.default_rng(3)
    w = Parameter(rng.standard_normal((2, 3, 4)))
    with pytest.raises(DimensionError, match="channel"):
        nn.conv1d(Tensor(np.zeros((1, 2, 10))), w, None, stride=1)
    with pytest.raises(DimensionError, match="length"):
        nn.conv1d(Tensor(np.zeros((1, 3, 3))), w, None, stride=1)


def test_deconv1d_reference_geometry():
    rng = np.random.default_rng(4)
    up = nn.Deconv1d(32, 16, kernel_size=10, stride=2, rng=rng)
    out = up(Tensor(rng.standard_normal((2, 32, 153))))
    assert out.shape == (2, 16, 314)
    last = nn.Deconv1d(8, 1, kernel_size=10, stride=2, rng=rng)
    assert last(Tensor(rng.standard_normal((2, 8, 636)))).shape == (2, 1, 1280)


def test_deconv1d_single_element_copies_scaled_kernel():
    kernel = np.array([[[0.5, -1.0, 2.0, 0.0]]])  # (in=1, out=1, k=4)
    out = nn.deconv1d(Tensor(np.array([[[3.0]]])), Parameter(kernel),
                      Parameter(np.zeros(1)), stride=2)
    np.testing.assert_allclose(out.data, 3.0 * kernel, rtol=1e-15)


def test_deconv1d_matches_scatter_oracle():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((2, 3, 7))
    w = rng.standard_normal((3, 2, 4))
    bias = rng.standard_normal(2)
    stride = 2
    got = nn.deconv1d(Tensor(x), Parameter(w), Parameter(bias), stride).data
    out_len = (7 - 1) * stride + 4
    want = np.tile(bias[None, :, None], (2, 1, out_len))
    for bi in range(2):
        for ci in range(3):
            for t in range(7):
                for co in range(2):
                    for k in range(4):
                        want[bi, co, t * stride + k] += x[bi, ci, t] * w[ci, co, k]
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_concat_conv_keeps_length_and_mixes_channels():
    rng = np.random.default_rng(6)
    merge = nn.ConcatConv1x1(32, 32, 32, rng=rng)
    a = Tensor(rng.standard_normal((2, 32, 153)))
    b = Tensor(rng.standard_normal((2, 32, 153)))
    assert merge(a, b).shape == (2, 32, 153)


def test_concat_conv_identity_weights_pass_first_input_through():
    merge = nn.ConcatConv1x1(2, 2, 2, rng=np.random.default_rng(7))
    w = np.zeros((2, 4, 1))
    w[0, 0, 0] = 1.0
    w[1, 1, 0] = 1.0
    merge.weight.data = w
    merge.bias.data = np.zeros(2)
    a = Tensor(np.random.default_rng(8).standard_normal((1, 2, 5)))
    b = Tensor(np.zeros((1, 2, 5)))
    np.testing.assert_allclose(merge(a, b).data, a.data, rtol=1e-15)


def test_concat_conv_scalar_channels_weighted_sum():
    merge = nn.ConcatConv1x1(1, 1, 1, rng=np.random.default_rng(9))
    merge.weight.data = np.array([[[2.0], [-3.0]]])
    merge.bias.data = np.zeros(1)
    a = np.array([[[1.0, 2.0, 3.0]]])
    b = np.array([[[4.0, 5.0, 6.0]]])
    out = merge(Tensor(a), Tensor(b))
    np.testing.assert_allclose(out.data, 2.0 * a - 3.0 * b, rtol=1e-15)


def test_concat_conv_length_mismatch_is_an_error():
    merge = nn.ConcatConv1x1(1, 1, 1, rng=np.random.default_rng(10))
    with pytest.raises(DimensionError, match="length"):
        merge(Tensor(np.zeros((1, 1, 4))), Tensor(np.zeros((1, 1, 5))))


def test_dense_hand_example_and_degenerate_cases():
    layer = nn.Dense(2, 2, rng=np.random.default_rng(11))
    layer.weight.data = np.array([[1.0, 2.0], [3.0, 4.0]])
    layer.bias.data = np.zeros(2)
    np.testing.assert_array_equal(layer(Tensor([[1.0, 1.0]])).data, [[3.0, 7.0]])
    np.testing.assert_array_equal(layer(Tensor([[0.0, 0.0]])).data, [[0.0, 0.0]])
    layer.weight.data = np.eye(2)
    layer.bias.data = np.zeros(2)
    x = np.array([[0.3, -0.7]])
    np.testing.assert_array_equal(layer(Tensor(x)).data, x)
    with pytest.raises(DimensionError):
        layer(Tensor(np.zeros((1, 3))))


def test_batchnorm_standardized_input_is_a_fixed_point():
    bn = nn.BatchNorm1d(1)
    rng = np.random.default_rng(12)
    x = rng.standard_normal((8, 1, 50))
    x = (x - x.mean()) / x.std()
    out = bn(Tensor(x))
    np.testing.assert_allclose(out.data, x, atol=1e-4)


def test_batchnorm_constant_input_returns_shift():
    bn = nn.BatchNorm1d(3)
    bn.beta.data = np.array([1.0, -2.0, 0.5])
    out = bn(Tensor(np.full((4, 3, 6), 7.0)))
    for c, shift in enumerate(bn.beta.data):
        np.testing.assert_allclose(out.data[:, c, :], shift, atol=1e-12)


def test_batchnorm_two_sample_closed_form():
    bn = nn.BatchNorm1d(1)
    bn.gamma.data = np.array([2.0])
    bn.beta.data = np.array([3.0])
    out = bn(Tensor(np.array([[-1.0], [1.0]])))
    np.testing.assert_allclose(out.data, [[1.0], [5.0]], atol=1e-4)


def test_batchnorm_batch_of_one_rejected_in_training():
    bn = nn.BatchNorm1d(2)
    with pytest.raises(ConfigError, match="batch"):
        bn(Tensor(np.zeros((1, 2, 4))))
    bn.eval()
    bn(Tensor(np.zeros((1, 2, 4))))  # inference mode is fine


def test_batchnorm_running_stats_used_in_eval():
    bn = nn.BatchNorm1d(1, momentum=1.0)
    x = np.random.default_rng(13).standard_normal((16, 1, 20)) * 3.0 + 5.0
    bn(Tensor(x))
    bn.eval()
    y = bn(Tensor(x)).data
    count = x.size
    expected = (x - x.mean()) / np.sqrt(x.var() * count / (count - 1) + bn.eps)
    np.testing.assert_allclose(y, expected, atol=1e-10)


def test_activations():
    x = Tensor(np.array([-1.0, -2.0, 3.0, 0.0]))
    np.testing.assert_allclose(nn.leaky_relu(x, 0.01).data, [-0.01, -0.02, 3.0, 0.0])
    np.testing.assert_array_equal(nn.relu(Tensor(np.array([-2.0, 3.0]))).data, [0.0, 3.0])
    nonneg = Tensor(np.array([0.0, 1.0, 2.5]))
    np.testing.assert_array_equal(nn.relu(nonneg).data, nonneg.data)
    np.testing.assert_array_equal(nn.leaky_relu(nonneg, 0.2).data, nonneg.data)


def test_moving_average_same_contracts():
    const = np.full(31, 2.5)
    np.testing.assert_array_equal(nn.moving_average_same(const, 9), const)
    x = np.random.default_rng(14).standard_normal(25)
    np.testing.assert_array_equal(nn.moving_average_same(x, 1), x)
    impulse = np.array([0.0, 0, 0, 9, 0, 0, 0])
    np.testing.assert_allclose(nn.moving_average_same(impulse, 3),
                               [0, 0, 3, 3, 3, 0, 0], rtol=1e-15)
    with pytest.raises(ConfigError):
        nn.moving_average_same(x, 4)


def test_moving_average_preserves_length_and_constant_mean():
    rng = np.random.default_rng(15)
    for _ in range(20):
        n = int(rng.integers(3, 200))
        window = int(rng.choice([1, 3, 5, 7, 9, 11]))
        y = rng.standard_normal(n)
        assert nn.moving_average_same(y, window).shape == (n,)
    const = np.full(57, 3.0)
    out = nn.moving_average_same(const, 11)
    assert out.mean() == 3.0
    np.testing.assert_array_equal(out, const)


def test_backward_without_forward_raises():
    with pytest.raises(StateError):
        Tensor(np.array([1.0])).backward()
    with pytest.raises(StateError):
        Parameter(np.array([1.0])).backward()


def test_backward_requires_scalar():
    p = Parameter(np.ones(3))
    out = nn.mul(p, 2.0)
    with pytest.raises(DimensionError):
        out.backward()


def test_unused_parameters_keep_zero_gradients():
    used = Parameter(np.array([2.0]))
    unused = Parameter(np.array([5.0]))
    loss = (used * used).sum()
    loss.backward()
    np.testing.assert_array_equal(used.grad, [4.0])
    np.testing.assert_array_equal(unused.grad, [0.0])


def test_mse_at_its_minimum_has_zero_gradients():
    p = Parameter(np.array([1.0, -2.0, 3.0]))
    target = p.data.copy()
    diff = p - Tensor(target)
    (diff * diff).sum().backward()
    np.testing.assert_array_equal(p.grad, np.zeros(3))


def test_doubling_the_loss_doubles_every_gradient():
    rng = np.random.default_rng(16)
    p = Parameter(rng.standard_normal(5))
    x = Tensor(rng.standard_normal(5))

    def loss():
        d = p - x
        return (d * d).sum()

    loss().backward()
    single = p.grad.copy()
    p.grad = np.zeros_like(p.data)
    (2.0 * loss()).backward()
    np.testing.assert_allclose(p.grad, 2.0 * single, rtol=1e-15)
