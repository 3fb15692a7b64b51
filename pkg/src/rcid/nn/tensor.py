"""Dense tensors with reverse-mode automatic differentiation.

CPU only, float64 storage, 2-D oriented. Every operation records its parent
tensors and a backward closure; ``backward(loss)`` walks the graph in
reverse topological order and accumulates gradients additively into every
tensor that requires them. Wrap inference code in ``no_grad()`` to skip
graph construction entirely.

Segment operations expect their id array sorted ascending with every
segment in ``0..num_segments-1`` occupied; an empty segment is an error
rather than a silent zero.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np


class ShapeMismatch(ValueError):
    pass


class EmptySegment(ValueError):
    pass


class NotScalarLoss(ValueError):
    pass


_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatch(f"item() needs a single value, shape is {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _lift(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=np.float64))


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _accumulate(t: Tensor, grad: np.ndarray) -> None:
    if t.grad is None:
        t.grad = grad.copy() if isinstance(grad, np.ndarray) else np.asarray(grad)
    else:
        t.grad = t.grad + grad


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def backward(loss: Tensor) -> None:
    """Reverse-mode sweep from a scalar loss."""
    if loss.size != 1:
        raise NotScalarLoss(f"loss must be a single value, shape is {loss.shape}")
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        _accumulate(node, grad)
        if node._backward is not None:
            for parent, pgrad in node._backward(grad):
                if not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pgrad
                else:
                    grads[key] = pgrad


# -- arithmetic -------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul needs (n,k)@(k,m), got {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def bwd(grad):
        return ((a, grad @ b.data.T), (b, a.data.T @ grad))

    return _make(data, (a, b), bwd)


def transpose(a: Tensor) -> Tensor:
    a = _lift(a)
    if a.data.ndim != 2:
        raise ShapeMismatch(f"transpose needs a 2-D tensor, got {a.shape}")

    def bwd(grad):
        return ((a, grad.T),)

    return _make(a.data.T.copy(), (a,), bwd)


def _broadcast_binary(a, b, fwd, da, db, name):
    a, b = _lift(a), _lift(b)
    try:
        data = fwd(a.data, b.data)
    except ValueError as exc:
        raise ShapeMismatch(f"{name} cannot broadcast {a.shape} with {b.shape}") from exc

    def bwd(grad):
        return (
            (a, _unbroadcast(da(grad, a.data, b.data), a.shape)),
            (b, _unbroadcast(db(grad, a.data, b.data), b.shape)),
        )

    return _make(data, (a, b), bwd)


def add(a, b) -> Tensor:
    return _broadcast_binary(
        a, b, lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g, "add"
    )


def sub(a, b) -> Tensor:
    return _broadcast_binary(
        a, b, lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g, "sub"
    )


def mul(a, b) -> Tensor:
    return _broadcast_binary(
        a, b, lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x, "mul"
    )


def concat(tensors, axis: int = 0) -> Tensor:
    parts = [_lift(t) for t in tensors]
    if not parts:
        raise ShapeMismatch("concat needs at least one tensor")
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeMismatch(f"concat shapes disagree: {[p.shape for p in parts]}") from exc
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bwd(grad):
        pieces = np.split(grad, splits, axis=axis)
        return tuple(zip(parts, pieces))

    return _make(data, tuple(parts), bwd)


# -- activations --------------------------------------------------------------


def leaky_relu(x, slope: float = 0.2) -> Tensor:
    x = _lift(x)
    data = np.where(x.data > 0, x.data, slope * x.data)

    def bwd(grad):
        return ((x, grad * np.where(x.data > 0, 1.0, slope)),)

    return _make(data, (x,), bwd)


def elu(x, alpha: float = 1.0) -> Tensor:
    x = _lift(x)
    neg = alpha * np.expm1(np.minimum(x.data, 0.0))
    data = np.where(x.data > 0, x.data, neg)

    def bwd(grad):
        return ((x, grad * np.where(x.data > 0, 1.0, neg + alpha)),)

    return _make(data, (x,), bwd)


def absolute(x) -> Tensor:
    x = _lift(x)

    def bwd(grad):
        return ((x, grad * np.sign(x.data)),)

    return _make(np.abs(x.data), (x,), bwd)


# -- reductions ----------------------------------------------------------------


def mean_rows(x) -> Tensor:
    """Column means of a 2-D tensor, kept as one row."""
    x = _lift(x)
    if x.data.ndim != 2:
        raise ShapeMismatch(f"mean_rows needs a 2-D tensor, got {x.shape}")
    if x.shape[0] == 0:
        raise ShapeMismatch("mean_rows of zero rows is undefined")
    n = x.shape[0]
    data = x.data.mean(axis=0, keepdims=True)

    def bwd(grad):
        return ((x, np.repeat(grad / n, n, axis=0)),)

    return _make(data, (x,), bwd)


def squared_error(pred, target) -> Tensor:
    """Mean of elementwise squared differences, as a scalar."""
    pred, target = _lift(pred), _lift(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"squared_error shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = max(1, pred.size)
    data = np.asarray((diff * diff).sum() / n)

    def bwd(grad):
        scale = grad * 2.0 / n
        return ((pred, scale * diff), (target, -scale * diff))

    return _make(data, (pred, target), bwd)


# -- gather / scatter ------------------------------------------------------------


def gather_rows(x, indices) -> Tensor:
    """Select rows by index; repeated indices are allowed."""
    x = _lift(x)
    idx = np.asarray(indices, dtype=np.int64)
    if x.data.ndim != 2 or idx.ndim != 1:
        raise ShapeMismatch(f"gather_rows needs (n,d) and 1-D indices, got {x.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise ShapeMismatch("gather_rows index out of range")
    data = x.data[idx]

    def bwd(grad):
        gx = np.zeros_like(x.data)
        np.add.at(gx, idx, grad)
        return ((x, gx),)

    return _make(data, (x,), bwd)


def scatter_rows(x, indices, num_rows: int) -> Tensor:
    """Place rows of ``x`` at the given distinct indices of a zero tensor."""
    x = _lift(x)
    idx = np.asarray(indices, dtype=np.int64)
    if x.data.ndim != 2 or idx.ndim != 1 or idx.size != x.shape[0]:
        raise ShapeMismatch("scatter_rows needs one index per row")
    if idx.size and (idx.min() < 0 or idx.max() >= num_rows):
        raise ShapeMismatch("scatter_rows index out of range")
    if idx.size != np.unique(idx).size:
        raise ShapeMismatch("scatter_rows indices must be distinct")
    data = np.zeros((num_rows, x.shape[1]), dtype=np.float64)
    data[idx] = x.data

    def bwd(grad):
        return ((x, grad[idx]),)

    return _make(data, (x,), bwd)


# -- segment operations ------------------------------------------------------------


def _check_segments(ids: np.ndarray, num_segments: int, length: int, op: str) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size != length:
        raise ShapeMismatch(f"{op} needs one segment id per row")
    if ids.size == 0:
        if num_segments > 0:
            raise EmptySegment(f"{op}: {num_segments} segments but no rows")
        return ids
    if np.any(np.diff(ids) < 0):
        raise ShapeMismatch(f"{op} segment ids must be sorted ascending")
    if ids[0] < 0 or ids[-1] >= num_segments:
        raise ShapeMismatch(f"{op} segment id out of range")
    counts = np.bincount(ids, minlength=num_segments)
    if np.any(counts == 0):
        missing = int(np.flatnonzero(counts == 0)[0])
        raise EmptySegment(f"{op}: segment {missing} has no members")
    return ids


def segment_softmax(logits, segment_ids, num_segments: int) -> Tensor:
    """Softmax over rows within each contiguous segment."""
    x = _lift(logits)
    flat = x.data.reshape(-1)
    if x.data.ndim == 2 and x.shape[1] != 1:
        raise ShapeMismatch(f"segment_softmax needs (n,) or (n,1), got {x.shape}")
    ids = _check_segments(segment_ids, num_segments, flat.size, "segment_softmax")
    starts = np.searchsorted(ids, np.arange(num_segments))
    maxes = np.maximum.reduceat(flat, starts) if flat.size else flat
    shifted = np.exp(flat - maxes[ids])
    sums = np.add.reduceat(shifted, starts) if flat.size else shifted
    y = shifted / sums[ids]
    data = y.reshape(x.shape)

    def bwd(grad):
        g = grad.reshape(-1)
        dot = np.add.reduceat(y * g, starts)
        gx = y * (g - dot[ids])
        return ((x, gx.reshape(x.shape)),)

    return _make(data, (x,), bwd)


def segment_sum(x, segment_ids, num_segments: int) -> Tensor:
    x = _lift(x)
    if x.data.ndim != 2:
        raise ShapeMismatch(f"segment_sum needs a 2-D tensor, got {x.shape}")
    ids = _check_segments(segment_ids, num_segments, x.shape[0], "segment_sum")
    data = np.zeros((num_segments, x.shape[1]), dtype=np.float64)
    np.add.at(data, ids, x.data)

    def bwd(grad):
        return ((x, grad[ids]),)

    return _make(data, (x,), bwd)


def segment_mean(x, segment_ids, num_segments: int) -> Tensor:
    x = _lift(x)
    if x.data.ndim != 2:
        raise ShapeMismatch(f"segment_mean needs a 2-D tensor, got {x.shape}")
    ids = _check_segments(segment_ids, num_segments, x.shape[0], "segment_mean")
    counts = np.bincount(ids, minlength=num_segments).astype(np.float64)
    data = np.zeros((num_segments, x.shape[1]), dtype=np.float64)
    np.add.at(data, ids, x.data)
    data /= counts[:, None]

    def bwd(grad):
        return ((x, grad[ids] / counts[ids][:, None]),)

    return _make(data, (x,), bwd)


# -- fused classification losses ------------------------------------------------------


def sigmoid_bce(logits, targets) -> Tensor:
    """Mean binary cross-entropy on logits, numerically stable."""
    x, t = _lift(logits), _lift(targets)
    if x.shape != t.shape:
        raise ShapeMismatch(f"sigmoid_bce shapes differ: {x.shape} vs {t.shape}")
    z = x.data
    n = max(1, x.size)
    loss = np.maximum(z, 0.0) - z * t.data + np.log1p(np.exp(-np.abs(z)))
    data = np.asarray(loss.sum() / n)

    def bwd(grad):
        sig = 1.0 / (1.0 + np.exp(-z))
        return ((x, grad * (sig - t.data) / n),)

    return _make(data, (x, t), bwd)


def softmax_cross_entropy(logits, target_indices) -> Tensor:
    """Mean cross-entropy of row-wise softmax against integer class targets."""
    x = _lift(logits)
    idx = np.asarray(target_indices, dtype=np.int64)
    if x.data.ndim != 2 or idx.ndim != 1 or idx.size != x.shape[0]:
        raise ShapeMismatch("softmax_cross_entropy needs (n,c) logits and n targets")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[1]):
        raise ShapeMismatch("softmax_cross_entropy target out of range")
    z = x.data - x.data.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    n = max(1, x.shape[0])
    data = np.asarray((logsum - z[np.arange(idx.size), idx]).sum() / n)

    def bwd(grad):
        soft = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
        soft[np.arange(idx.size), idx] -= 1.0
        return ((x, grad * soft / n),)

    return _make(data, (x,), bwd)
