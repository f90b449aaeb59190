"""Layer objects: parameter containers plus a forward built on the autodiff ops.

Weights are initialized uniformly in +-1/sqrt(fan_in), biases likewise; batch
normalization starts at scale 1 / shift 0 with zero running mean and unit
running variance.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, DimensionError
from . import core, conv
from .core import Parameter, Tensor


@dataclass
class LayerSpec:
    """Serializable description of one layer, used by checkpoints."""

    kind: str
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "LayerSpec":
        return LayerSpec(kind=d["kind"], options=dict(d.get("options", {})))


class Module:
    """Minimal parameter container with named traversal and train/eval modes."""

    def __init__(self):
        self._training = True

    def _children(self):
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(value, (Parameter, Module)):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, (Parameter, Module)):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = ""):
        out = []
        for name, value in self._children():
            if isinstance(value, Parameter):
                out.append((prefix + name, value))
            else:
                out.extend(value.named_parameters(prefix + name + "."))
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = ""):
        out = []
        for name in getattr(self, "buffer_names", ()):
            out.append((prefix + name, getattr(self, name)))
        for name, value in self._children():
            if isinstance(value, Module):
                out.extend(value.named_buffers(prefix + name + "."))
        return out

    def train(self, mode: bool = True):
        self._training = mode
        for _, value in self._children():
            if isinstance(value, Module):
                value.train(mode)
        return self

    def eval(self):
        return self.train(False)

    @property
    def training(self) -> bool:
        return self._training


def _uniform(rng: np.random.Generator, shape, bound: float) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


class Conv1d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int, rng: np.random.Generator):
        super().__init__()
        if min(in_channels, out_channels, kernel_size, stride) < 1:
            raise ConfigError("conv1d channels, kernel and stride must be positive")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        bound = 1.0 / np.sqrt(in_channels * kernel_size)
        self.weight = Parameter(_uniform(rng, (out_channels, in_channels, kernel_size), bound))
        self.bias = Parameter(_uniform(rng, (out_channels,), bound))

    def __call__(self, x: Tensor) -> Tensor:
        return conv.conv1d(x, self.weight, self.bias, self.stride)

    def spec(self) -> LayerSpec:
        return LayerSpec("conv1d", {
            "in_channels": self.in_channels, "out_channels": self.out_channels,
            "kernel_size": self.kernel_size, "stride": self.stride,
        })


class Deconv1d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int, rng: np.random.Generator):
        super().__init__()
        if min(in_channels, out_channels, kernel_size, stride) < 1:
            raise ConfigError("deconv1d channels, kernel and stride must be positive")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        bound = 1.0 / np.sqrt(in_channels * kernel_size)
        self.weight = Parameter(_uniform(rng, (in_channels, out_channels, kernel_size), bound))
        self.bias = Parameter(_uniform(rng, (out_channels,), bound))

    def __call__(self, x: Tensor) -> Tensor:
        return conv.deconv1d(x, self.weight, self.bias, self.stride)

    def spec(self) -> LayerSpec:
        return LayerSpec("deconv1d", {
            "in_channels": self.in_channels, "out_channels": self.out_channels,
            "kernel_size": self.kernel_size, "stride": self.stride,
        })


class ConcatConv1x1(Module):
    """Channel-wise concatenation of two maps followed by a kernel-1 convolution.

    With `skip_channels=0` the layer degrades to a plain 1x1 convolution of its
    first argument (used when skip connections are disabled).
    """

    def __init__(self, main_channels: int, skip_channels: int, out_channels: int,
                 rng: np.random.Generator):
        super().__init__()
        self.main_channels = main_channels
        self.skip_channels = skip_channels
        self.out_channels = out_channels
        in_channels = main_channels + skip_channels
        bound = 1.0 / np.sqrt(in_channels)
        self.weight = Parameter(_uniform(rng, (out_channels, in_channels, 1), bound))
        self.bias = Parameter(_uniform(rng, (out_channels,), bound))

    def __call__(self, x: Tensor, skip: Tensor | None = None) -> Tensor:
        if self.skip_channels == 0:
            merged = x
        else:
            if skip is None:
                raise DimensionError("concat convolution expects a skip feature map")
            if x.data.shape[2] != skip.data.shape[2]:
                raise DimensionError(
                    f"concat convolution length axis mismatch: {x.data.shape[2]} vs "
                    f"{skip.data.shape[2]}"
                )
            if x.data.shape[0] != skip.data.shape[0]:
                raise DimensionError(
                    f"concat convolution batch axis mismatch: {x.data.shape[0]} vs "
                    f"{skip.data.shape[0]}"
                )
            merged = core.concat([x, skip], axis=1)
        return conv.conv1d(merged, self.weight, self.bias, stride=1)

    def spec(self) -> LayerSpec:
        return LayerSpec("concat_conv1x1", {
            "main_channels": self.main_channels, "skip_channels": self.skip_channels,
            "out_channels": self.out_channels,
        })


class Dense(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Parameter(_uniform(rng, (out_features, in_features), bound))
        self.bias = Parameter(_uniform(rng, (out_features,), bound))

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.data.shape[1] != self.in_features:
            raise DimensionError(
                f"dense layer expects (batch, {self.in_features}), got {x.data.shape}"
            )
        return core.linear(x, self.weight, self.bias)

    def spec(self) -> LayerSpec:
        return LayerSpec("dense", {
            "in_features": self.in_features, "out_features": self.out_features,
        })


class BatchNorm1d(Module):
    """Per-channel batch normalization for (B, F) or (B, C, L) inputs.

    Training mode normalizes with biased batch statistics and refreshes the
    running estimates (unbiased variance) with the given momentum; inference
    mode applies the stored running statistics.
    """

    buffer_names = ("running_mean", "running_var")

    def __init__(self, num_features: int, eps: float = 1e-5, momentum: float = 0.1):
        super().__init__()
        self.num_features = num_features
        self.eps = eps
        self.momentum = momentum
        self.gamma = Parameter(np.ones(num_features))
        self.beta = Parameter(np.zeros(num_features))
        self.running_mean = np.zeros(num_features)
        self.running_var = np.ones(num_features)

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim not in (2, 3):
            raise DimensionError(f"batchnorm expects 2-D or 3-D input, got {x.data.shape}")
        axis_features = 1
        if x.data.shape[axis_features] != self.num_features:
            raise DimensionError(
                f"batchnorm channel axis mismatch: input has {x.data.shape[axis_features]} "
                f"features, layer has {self.num_features}"
            )
        reduce_axes = (0,) if x.data.ndim == 2 else (0, 2)
        if self._training:
            if x.data.shape[0] < 2:
                raise ConfigError("batchnorm in training mode needs a batch of at least 2")
            mean = x.data.mean(axis=reduce_axes, keepdims=True)
            var = x.data.var(axis=reduce_axes, keepdims=True)
            count = x.data.size // self.num_features
            unbiased = var.reshape(self.num_features) * count / (count - 1)
            m = self.momentum
            self.running_mean = (1 - m) * self.running_mean + m * mean.reshape(self.num_features)
            self.running_var = (1 - m) * self.running_var + m * unbiased
            return core.batch_norm(x, self.gamma, self.beta, mean, var, self.eps, True)
        shape = (1, self.num_features) if x.data.ndim == 2 else (1, self.num_features, 1)
        mean = self.running_mean.reshape(shape)
        var = self.running_var.reshape(shape)
        return core.batch_norm(x, self.gamma, self.beta, mean, var, self.eps, False)

    def spec(self) -> LayerSpec:
        return LayerSpec("batchnorm1d", {
            "num_features": self.num_features, "eps": self.eps, "momentum": self.momentum,
        })


class LeakyReLU(Module):
    def __init__(self, negative_slope: float = 0.01):
        super().__init__()
        self.negative_slope = negative_slope

    def __call__(self, x: Tensor) -> Tensor:
        return core.leaky_relu(x, self.negative_slope)

    def spec(self) -> LayerSpec:
        return LayerSpec("leaky_relu", {"negative_slope": self.negative_slope})


class ReLU(Module):
    def __call__(self, x: Tensor) -> Tensor:
        return core.relu(x)

    def spec(self) -> LayerSpec:
        return LayerSpec("relu", {})
