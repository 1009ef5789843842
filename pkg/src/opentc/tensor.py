"""Minimal dense float64 arrays with reverse-mode gradients.

Only the handful of operations the classifier architecture needs are
implemented: embedding lookup, valid 1-D convolution, max-over-time
pooling, dense layers, ReLU, sigmoid and concatenation. All ops accept an
optional leading batch dimension. Gradients are recorded on an explicit
``Tape`` and replayed in exact reverse execution order.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PAD_ID = 0


class Tensor:
    """A contiguous float64 array plus a lazily allocated gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data) -> None:
        # np.ascontiguousarray would promote 0-d scalars to shape (1,)
        self.data = np.asarray(data, dtype=np.float64, order="C")
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Tensor(shape={self.data.shape})"


class Tape:
    """Records backward closures in execution order.

    ``backward`` replays them in reverse. A tape created with
    ``record=False`` skips recording entirely, which is the inference mode.
    Nodes that are not on any path to the loss keep a zero (None) gradient:
    their closures see ``out.grad is None`` and do nothing.
    """

    def __init__(self, record: bool = True) -> None:
        self.record = record
        self._steps: list[Callable[[], None]] = []

    def push(self, fn: Callable[[], None]) -> None:
        if self.record:
            self._steps.append(fn)

    def backward(self, loss: Tensor) -> None:
        if loss.data.shape != ():
            raise ValueError("backward requires a scalar loss")
        loss.accumulate(np.ones(()))
        for fn in reversed(self._steps):
            fn()


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def embed_lookup(tape: Tape, ids, table: Tensor) -> Tensor:
    """Rows of ``table`` selected by token id; PAD row (id 0) gets no gradient."""
    ids = np.asarray(ids, dtype=np.int64)
    vocab_size = table.data.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
        raise ValueError(f"token id out of range [0, {vocab_size})")
    out = Tensor(table.data[ids])

    def back() -> None:
        if out.grad is None:
            return
        g = np.zeros_like(table.data)
        np.add.at(g, ids.reshape(-1), out.grad.reshape(-1, table.data.shape[1]))
        g[PAD_ID] = 0.0
        table.accumulate(g)

    tape.push(back)
    return out


def conv1d_valid(tape: Tape, x: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    """Valid (no padding) 1-D convolution over the time axis.

    ``x`` is (..., L, e), ``filters`` is (F, w, e), ``bias`` is (F,);
    output is (..., L-w+1, F).
    """
    num_filters, width, fdim = filters.shape
    length, edim = x.shape[-2], x.shape[-1]
    if fdim != edim:
        raise ValueError(f"filter dim {fdim} != input dim {edim}")
    if bias.shape != (num_filters,):
        raise ValueError("bias shape must be (num_filters,)")
    if length < width:
        raise ValueError(f"input length {length} < filter width {width}")

    steps = length - width + 1
    win = sliding_window_view(x.data, width, axis=-2)  # (..., T, e, w)
    win = np.ascontiguousarray(np.swapaxes(win, -1, -2)).reshape(
        *x.shape[:-2], steps, width * edim
    )
    flat_filters = filters.data.reshape(num_filters, width * edim)
    out = Tensor(win @ flat_filters.T + bias.data)

    def back() -> None:
        if out.grad is None:
            return
        g = out.grad  # (..., T, F)
        d_win = (g @ flat_filters).reshape(*g.shape[:-1], width, edim)
        dx = np.zeros_like(x.data)
        for j in range(width):
            dx[..., j : j + steps, :] += d_win[..., j, :]
        x.accumulate(dx)
        g2 = g.reshape(-1, num_filters)
        filters.accumulate(
            (g2.T @ win.reshape(-1, width * edim)).reshape(filters.shape)
        )
        bias.accumulate(g2.sum(axis=0))

    tape.push(back)
    return out


def max_over_time(tape: Tape, x: Tensor) -> Tensor:
    """Columnwise max over the time axis; ties route gradient to the first index."""
    if x.shape[-2] == 0:
        raise ValueError("max_over_time over an empty time axis")
    idx = np.argmax(x.data, axis=-2)  # first maximizing index per column
    out = Tensor(np.take_along_axis(x.data, idx[..., None, :], axis=-2).squeeze(-2))

    def back() -> None:
        if out.grad is None:
            return
        dx = np.zeros_like(x.data)
        np.put_along_axis(dx, idx[..., None, :], out.grad[..., None, :], axis=-2)
        x.accumulate(dx)

    tape.push(back)
    return out


def dense(tape: Tape, x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map weight @ x + bias; ``x`` is (..., a), weight (b, a), bias (b,)."""
    b_dim, a_dim = weight.shape
    if x.shape[-1] != a_dim:
        raise ValueError(f"input dim {x.shape[-1]} != weight dim {a_dim}")
    if bias.shape != (b_dim,):
        raise ValueError("bias shape must match weight rows")
    out = Tensor(x.data @ weight.data.T + bias.data)

    def back() -> None:
        if out.grad is None:
            return
        g = out.grad
        x.accumulate(g @ weight.data)
        g2 = g.reshape(-1, b_dim)
        weight.accumulate(g2.T @ x.data.reshape(-1, a_dim))
        bias.accumulate(g2.sum(axis=0))

    tape.push(back)
    return out


def relu(tape: Tape, x: Tensor) -> Tensor:
    out = Tensor(np.maximum(0.0, x.data))

    def back() -> None:
        if out.grad is None:
            return
        x.accumulate(out.grad * (x.data > 0))

    tape.push(back)
    return out


def sigmoid(tape: Tape, x: Tensor) -> Tensor:
    """Elementwise logistic function, stable for large |x|; output in (0, 1)."""
    s = _stable_sigmoid(x.data)
    out = Tensor(s)

    def back() -> None:
        if out.grad is None:
            return
        x.accumulate(out.grad * s * (1.0 - s))

    tape.push(back)
    return out


def concat(tape: Tape, parts: Sequence[Tensor]) -> Tensor:
    """Concatenate along the last axis."""
    if not parts:
        raise ValueError("concat of no tensors")
    out = Tensor(np.concatenate([p.data for p in parts], axis=-1))
    sizes = [p.shape[-1] for p in parts]

    def back() -> None:
        if out.grad is None:
            return
        offset = 0
        for p, size in zip(parts, sizes):
            p.accumulate(out.grad[..., offset : offset + size])
            offset += size

    tape.push(back)
    return out


def grad_check(
    build: Callable[[Tape], Tensor], params: Iterable[Tensor], eps: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``build`` reruns the full forward pass on a fresh tape and returns the
    scalar loss. Relative error per component is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = list(params)
    tape = Tape()
    loss = build(tape)
    if loss.data.shape != ():
        raise ValueError("grad_check requires a scalar-valued function")
    for p in params:
        p.zero_grad()
    tape.backward(loss)

    worst = 0.0
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        analytic = analytic.reshape(-1)
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(build(Tape(record=False)).data)
            flat[i] = orig - eps
            f_minus = float(build(Tape(record=False)).data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            err = abs(analytic[i] - numeric) / max(abs(analytic[i]), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
