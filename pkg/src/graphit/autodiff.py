"""Minimal reverse-mode automatic differentiation over dense numpy tensors.

Each `Tensor` wraps a float64 array (rank up to 3: batch x nodes x features),
remembers the tensors it was computed from, and a closure that routes the
output gradient back to them. `backward(loss)` topologically sorts the graph
and accumulates gradients additively across fan-out.

The op set is exactly what the kernel-modulated transformer needs: matmul
(with batched and mixed-rank variants), broadcasting add/mul, exp, relu,
scalar scaling, transpose of the trailing axes, row softmax, row l1
normalization, layer norm, concatenation, masked node reductions, and fused
loss heads (softmax cross-entropy, mean absolute error).

Gradients are only tracked through tensors reachable from parameters
(`requires_grad=True`); constants cost nothing.
"""
from __future__ import annotations

import numpy as np

L1_GUARD = 1e-30


class Tensor:
    """Node in the computation graph: a value, a grad slot, and a backward rule."""

    __slots__ = ("value", "grad", "requires_grad", "parents", "_backward", "name")

    def __init__(self, value, requires_grad: bool = False, parents=(),
                 backward=None, name: str | None = None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self.parents = tuple(parents)
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.value.shape}{tag})"

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g


def parameter(value, name: str) -> Tensor:
    return Tensor(np.array(value, dtype=float), requires_grad=True, name=name)


def constant(value) -> Tensor:
    return Tensor(value)


def backward(loss: Tensor) -> None:
    """Populate .grad of every requires_grad tensor reachable from `loss`."""
    if loss.value.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.value.shape}")
    # iterative topo sort; recursion would overflow on deep epoch graphs
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    loss._accumulate(np.ones_like(loss.value))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum out the axes numpy broadcast when mapping grad back to `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_val = a.value + b.value

    def back(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.value.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.value.shape))

    return Tensor(out_val, parents=(a, b), backward=back)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, scale(b, -1.0))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product with numpy broadcasting."""
    out_val = a.value * b.value

    def back(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.value, a.value.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.value, b.value.shape))

    return Tensor(out_val, parents=(a, b), backward=back)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def back(g):
        if a.requires_grad:
            a._accumulate(g * c)

    return Tensor(a.value * c, parents=(a,), backward=back)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a @ b for rank-2/rank-3 operands (rank-3 is batched on axis 0)."""
    out_val = a.value @ b.value

    def back(g):
        bt = np.swapaxes(b.value, -1, -2)
        at = np.swapaxes(a.value, -1, -2)
        if a.requires_grad:
            ga = g @ bt
            if ga.ndim > a.value.ndim:
                ga = ga.sum(axis=tuple(range(ga.ndim - a.value.ndim)))
            a._accumulate(ga)
        if b.requires_grad:
            gb = at @ g
            if gb.ndim > b.value.ndim:
                gb = gb.sum(axis=tuple(range(gb.ndim - b.value.ndim)))
            b._accumulate(gb)

    return Tensor(out_val, parents=(a, b), backward=back)


def transpose_last2(a: Tensor) -> Tensor:
    def back(g):
        if a.requires_grad:
            a._accumulate(np.swapaxes(g, -1, -2))

    return Tensor(np.swapaxes(a.value, -1, -2), parents=(a,), backward=back)


def exp(a: Tensor) -> Tensor:
    out_val = np.exp(a.value)

    def back(g):
        if a.requires_grad:
            a._accumulate(g * out_val)

    return Tensor(out_val, parents=(a,), backward=back)


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0

    def back(g):
        if a.requires_grad:
            a._accumulate(g * mask)

    return Tensor(a.value * mask, parents=(a,), backward=back)


def row_softmax(a: Tensor) -> Tensor:
    """Softmax along the last axis, max-shifted for stability."""
    shifted = a.value - a.value.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_val = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        if a.requires_grad:
            dot = (g * out_val).sum(axis=-1, keepdims=True)
            a._accumulate(out_val * (g - dot))

    return Tensor(out_val, parents=(a,), backward=back)


def row_l1_normalize(a: Tensor) -> Tensor:
    """Divide each row (last axis) by the sum of absolute entries.

    A row whose l1 norm underflows the guard signals an all-zero attention
    row (possible with zero-diagonal kernels on isolated nodes) and raises
    rather than returning NaNs.
    """
    absval = np.abs(a.value)
    s = absval.sum(axis=-1, keepdims=True)
    bad = s < L1_GUARD
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0][:-1])
        raise ValueError(f"all-zero row at index {idx} in l1 normalization")
    out_val = a.value / s

    def back(g):
        if a.requires_grad:
            sign = np.sign(a.value)
            dot = (g * a.value).sum(axis=-1, keepdims=True)
            a._accumulate(g / s - sign * dot / (s * s))

    return Tensor(out_val, parents=(a,), backward=back)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    mu = a.value.mean(axis=-1, keepdims=True)
    centered = a.value - mu
    var = (centered ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out_val = gain.value * xhat + bias.value

    def back(g):
        if bias.requires_grad:
            bias._accumulate(_unbroadcast(g, bias.value.shape))
        if gain.requires_grad:
            gain._accumulate(_unbroadcast(g * xhat, gain.value.shape))
        if a.requires_grad:
            gx = g * gain.value
            m1 = gx.mean(axis=-1, keepdims=True)
            m2 = (gx * xhat).mean(axis=-1, keepdims=True)
            a._accumulate(inv_std * (gx - m1 - xhat * m2))

    return Tensor(out_val, parents=(a, gain, bias), backward=back)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    out_val = np.concatenate([t.value for t in tensors], axis=axis)
    sizes = [t.value.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        parts = np.split(g, splits, axis=axis)
        for t, part in zip(tensors, parts):
            if t.requires_grad:
                t._accumulate(part)

    return Tensor(out_val, parents=tuple(tensors), backward=back)


def sum_nodes(a: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Sum over the node axis (axis 1) of a (B, N, F) tensor -> (B, F)."""
    m = None if mask is None else mask[:, :, None].astype(float)
    val = a.value if m is None else a.value * m
    out_val = val.sum(axis=1)

    def back(g):
        if a.requires_grad:
            ga = np.repeat(g[:, None, :], a.value.shape[1], axis=1)
            if m is not None:
                ga = ga * m
            a._accumulate(ga)

    return Tensor(out_val, parents=(a,), backward=back)


def mean_nodes(a: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Mean over valid nodes per graph; masked rows contribute nothing."""
    if mask is None:
        counts = np.full((a.value.shape[0], 1), a.value.shape[1], dtype=float)
        m = None
    else:
        counts = mask.sum(axis=1, keepdims=True).astype(float)
        if np.any(counts == 0):
            raise ValueError("mean over an empty node set")
        m = mask[:, :, None].astype(float)
    val = a.value if m is None else a.value * m
    out_val = val.sum(axis=1) / counts

    def back(g):
        if a.requires_grad:
            ga = np.repeat((g / counts)[:, None, :], a.value.shape[1], axis=1)
            if m is not None:
                ga = ga * m
            a._accumulate(ga)

    return Tensor(out_val, parents=(a,), backward=back)


def max_nodes(a: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Entrywise max over valid nodes; gradient flows to the (first) argmax."""
    val = a.value
    if mask is not None:
        fill = np.where(mask[:, :, None], 0.0, -np.inf)
        val = a.value + fill
        if np.any(mask.sum(axis=1) == 0):
            raise ValueError("max over an empty node set")
    arg = val.argmax(axis=1)  # (B, F)
    out_val = np.take_along_axis(val, arg[:, None, :], axis=1)[:, 0, :]

    def back(g):
        if a.requires_grad:
            ga = np.zeros_like(a.value)
            np.put_along_axis(ga, arg[:, None, :], g[:, None, :], axis=1)
            a._accumulate(ga)

    return Tensor(out_val, parents=(a,), backward=back)


def sum_all(a: Tensor) -> Tensor:
    def back(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.value, float(g)))

    return Tensor(a.value.sum(), parents=(a,), backward=back)


def mean_all(a: Tensor) -> Tensor:
    n = a.value.size

    def back(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.value, float(g) / n))

    return Tensor(a.value.mean(), parents=(a,), backward=back)


def cross_entropy_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean cross-entropy of integer class targets against raw logits."""
    z = logits.value
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite logits in cross-entropy")
    targets = np.asarray(targets, dtype=int)
    shifted = z - z.max(axis=-1, keepdims=True)
    loge = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    b = z.shape[0]
    out_val = -loge[np.arange(b), targets].mean()

    def back(g):
        if logits.requires_grad:
            p = np.exp(loge)
            p[np.arange(b), targets] -= 1.0
            logits._accumulate(float(g) * p / b)

    return Tensor(out_val, parents=(logits,), backward=back)


def l1_loss(pred: Tensor, targets: np.ndarray) -> Tensor:
    """Mean absolute error of (B,) or (B,1) predictions against targets."""
    p = pred.value.reshape(-1)
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite predictions in l1 loss")
    t = np.asarray(targets, dtype=float).reshape(-1)
    diff = p - t
    out_val = np.abs(diff).mean()

    def back(g):
        if pred.requires_grad:
            gp = float(g) * np.sign(diff) / diff.size
            pred._accumulate(gp.reshape(pred.value.shape))

    return Tensor(out_val, parents=(pred,), backward=back)
