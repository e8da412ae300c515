"""Numpy layer core with analytic gradients."""

from warehouse_sinr.nn.gradcheck import grad_check, numeric_gradient, relative_error
from warehouse_sinr.nn.layers import (
    LEAKY_SLOPE,
    conv2d,
    conv2d_backward,
    conv2d_transpose,
    conv2d_transpose_backward,
    conv_output_size,
    dense,
    dense_backward,
    kaiming_uniform,
    leaky_relu,
    leaky_relu_backward,
    sigmoid,
    sigmoid_backward,
)
from warehouse_sinr.nn.optim import AdamState, adam_step

__all__ = [
    "LEAKY_SLOPE",
    "AdamState",
    "adam_step",
    "conv2d",
    "conv2d_backward",
    "conv2d_transpose",
    "conv2d_transpose_backward",
    "conv_output_size",
    "dense",
    "dense_backward",
    "grad_check",
    "kaiming_uniform",
    "leaky_relu",
    "leaky_relu_backward",
    "numeric_gradient",
    "relative_error",
    "sigmoid",
    "sigmoid_backward",
]
