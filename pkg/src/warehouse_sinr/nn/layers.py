"""
Differentiable layers on numpy arrays, NCHW layout.

Every op has a forward function and a matching ``*_backward`` that returns
gradients with respect to its inputs and parameters. Forwards preserve the
input dtype (f32 for training, f64 for gradient checks).
"""

from typing import Optional, Tuple

import numpy as np

from warehouse_sinr.exceptions import ShapeMismatch

LEAKY_SLOPE = 0.2


def _check_conv(x: np.ndarray, w: np.ndarray, stride: int, pad: int, in_axis: int) -> None:
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatch(f"Expected 4D input and weights, got {x.shape} and {w.shape}")
    if w.shape[2] != w.shape[3]:
        raise ShapeMismatch(f"Kernels must be square, got {w.shape[2:]}")
    if x.shape[1] != w.shape[in_axis]:
        raise ShapeMismatch(f"Input has {x.shape[1]} channels, weights expect {w.shape[in_axis]}")
    if stride < 1 or pad < 0:
        raise ShapeMismatch(f"Need stride >= 1 and pad >= 0, got stride={stride} pad={pad}")


def _window(arr: np.ndarray, ki: int, kj: int, stride: int, rows: int, cols: int) -> np.ndarray:
    """Strided view of the cells kernel offset (ki, kj) touches for a rows x cols output."""
    row_stop = ki + stride * (rows - 1) + 1
    col_stop = kj + stride * (cols - 1) + 1
    return arr[:, :, ki:row_stop:stride, kj:col_stop:stride]


def conv_output_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def conv2d(
    x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray] = None, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """
    Cross-correlation.

    Args:
        x (np.ndarray): (N, C, H, W)
        w (np.ndarray): (F, C, K, K)
        b (np.ndarray, optional): (F,)
        stride (int): >= 1
        pad (int): Zero padding on every side

    Returns:
        np.ndarray: (N, F, H', W') with H' = (H + 2*pad - K) // stride + 1
    """
    _check_conv(x, w, stride, pad, in_axis=1)
    n, _, h, wd = x.shape
    f, _, k, _ = w.shape
    ho, wo = conv_output_size(h, k, stride, pad), conv_output_size(wd, k, stride, pad)
    if ho < 1 or wo < 1:
        raise ShapeMismatch(f"Kernel {k} does not fit a {h}x{wd} input with pad {pad}")

    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.zeros((n, ho, wo, f), dtype=np.result_type(x, w))
    for ki in range(k):
        for kj in range(k):
            patch = _window(xp, ki, kj, stride, ho, wo)
            out += np.tensordot(patch, w[:, :, ki, kj], axes=([1], [1]))
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    if b is not None:
        out += b.reshape(1, -1, 1, 1).astype(out.dtype)
    return out


def conv2d_backward(
    dout: np.ndarray, x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 0
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: dx (N, C, H, W), dw (F, C, K, K), db (F,)
    """
    _, _, h, wd = x.shape
    k = w.shape[2]
    ho, wo = dout.shape[2:]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for ki in range(k):
        for kj in range(k):
            patch = _window(xp, ki, kj, stride, ho, wo)
            dw[:, :, ki, kj] = np.tensordot(dout, patch, axes=([0, 2, 3], [0, 2, 3]))
            grad = np.tensordot(dout, w[:, :, ki, kj], axes=([1], [0]))
            _window(dxp, ki, kj, stride, ho, wo)[...] += grad.transpose(0, 3, 1, 2)
    dx = dxp[:, :, pad : pad + h, pad : pad + wd]
    return dx, dw, dout.sum(axis=(0, 2, 3))


def conv2d_transpose(
    x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray] = None, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """
    Transposed convolution, the adjoint of conv2d with the same weights.

    Args:
        x (np.ndarray): (N, Cin, H, W)
        w (np.ndarray): (Cin, Cout, K, K), laid out as conv2d weights mapping Cout -> Cin
        b (np.ndarray, optional): (Cout,)
        stride (int): >= 1
        pad (int): Cropped from every side of the full output

    Returns:
        np.ndarray: (N, Cout, (H - 1)*stride - 2*pad + K, ...)
    """
    _check_conv(x, w, stride, pad, in_axis=0)
    n, _, h, wd = x.shape
    _, cout, k, _ = w.shape
    full_h, full_w = (h - 1) * stride + k, (wd - 1) * stride + k
    if full_h - 2 * pad < 1 or full_w - 2 * pad < 1:
        raise ShapeMismatch(f"Padding {pad} crops away the whole {full_h}x{full_w} output")

    full = np.zeros((n, cout, full_h, full_w), dtype=np.result_type(x, w))
    for ki in range(k):
        for kj in range(k):
            contribution = np.tensordot(x, w[:, :, ki, kj], axes=([1], [0])).transpose(0, 3, 1, 2)
            _window(full, ki, kj, stride, h, wd)[...] += contribution
    out = np.ascontiguousarray(full[:, :, pad : full_h - pad, pad : full_w - pad])
    if b is not None:
        out += b.reshape(1, -1, 1, 1).astype(out.dtype)
    return out


def conv2d_transpose_backward(
    dout: np.ndarray, x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 0
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]:
            dx (N, Cin, H, W), dw (Cin, Cout, K, K), db (Cout,)
    """
    _, _, h, wd = x.shape
    k = w.shape[2]
    # the input gradient of a transposed conv is the forward conv
    dx = conv2d(dout, w, stride=stride, pad=pad)[:, :, :h, :wd]
    doutp = np.pad(dout, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dw = np.zeros_like(w)
    for ki in range(k):
        for kj in range(k):
            window = _window(doutp, ki, kj, stride, h, wd)
            dw[:, :, ki, kj] = np.tensordot(x, window, axes=([0, 2, 3], [0, 2, 3]))
    return dx, dw, dout.sum(axis=(0, 2, 3))


def dense(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """x @ w + b with x (N, F), w (F, G), b (G,)."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeMismatch(f"Cannot multiply {x.shape} by {w.shape}")
    if b is not None and b.shape != (w.shape[1],):
        raise ShapeMismatch(f"Bias {b.shape} does not match {w.shape[1]} outputs")
    out = x @ w
    if b is not None:
        out = out + b.astype(out.dtype)
    return out


def dense_backward(
    dout: np.ndarray, x: np.ndarray, w: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0, x, x * x.dtype.type(slope))


def leaky_relu_backward(dout: np.ndarray, x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0, dout, dout * dout.dtype.type(slope))


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(dout: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient through sigmoid given its output y."""
    return dout * y * (1.0 - y)


def kaiming_uniform(
    rng: np.random.Generator,
    shape: Tuple[int, ...],
    fan_in: int,
    slope: float = LEAKY_SLOPE,
    dtype=np.float32,
) -> np.ndarray:
    """U(-bound, bound) with bound = gain * sqrt(3 / fan_in), gain = sqrt(2 / (1 + slope^2))."""
    gain = np.sqrt(2.0 / (1.0 + slope**2))
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
