"""Minimal differentiable-tensor substrate: forward ops, analytic backward, Adam."""

from .core import Parameter, Tensor, add, batch_norm, concat, leaky_relu, linear, matmul, mul, narrow, relu, reshape, sum_all
from .conv import (
    avgpool1d_same,
    conv1d,
    conv1d_output_length,
    deconv1d,
    deconv1d_output_length,
    moving_average_same,
    unfold1d,
)
from .layers import BatchNorm1d, ConcatConv1x1, Conv1d, Deconv1d, Dense, LayerSpec, LeakyReLU, Module, ReLU
from .optim import Adam, OptimizerConfig
from . import checkpoint

__all__ = [
    "Adam",
    "BatchNorm1d",
    "ConcatConv1x1",
    "Conv1d",
    "Deconv1d",
    "Dense",
    "LayerSpec",
    "LeakyReLU",
    "Module",
    "OptimizerConfig",
    "Parameter",
    "ReLU",
    "Tensor",
    "add",
    "avgpool1d_same",
    "batch_norm",
    "checkpoint",
    "concat",
    "conv1d",
    "conv1d_output_length",
    "deconv1d",
    "deconv1d_output_length",
    "leaky_relu",
    "linear",
    "matmul",
    "moving_average_same",
    "mul",
    "narrow",
    "relu",
    "reshape",
    "sum_all",
    "unfold1d",
]
