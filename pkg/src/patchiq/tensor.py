"""Minimal reverse-mode autodiff on float64 numpy arrays.

A Tensor wraps an ndarray plus an optional backward closure recorded at
construction time (a dynamic tape). Calling ``backward`` on a scalar loss
walks the recorded graph once in reverse topological order, accumulates
gradients additively into every tensor that requires them, and then frees
the tape. Ops hold no global state, so independent graphs are safe to
evaluate on separate threads.

All math is done in float64; forward kernels are plain numpy, backward
rules are written by hand and are validated against central finite
differences (see gradcheck).
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erf

from .errors import AxisError, DimensionError, GraphError, ParameterError

Array = np.ndarray

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Tensor:
    """Dense n-dimensional float64 array participating in a differentiable graph.

    ``grad`` is populated by ``backward`` for every tensor in the graph with
    ``requires_grad`` set, and always matches ``data`` in shape.
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Array | None = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[Array], None] | None = None
        self._op = ""

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    def backward(self, free_graph: bool = True) -> None:
        """Reverse-mode sweep from this scalar.

        Gradients from shared subgraphs accumulate additively. The tape is
        cleared afterwards unless ``free_graph`` is False.
        """
        if self.data.size != 1:
            raise GraphError(f"backward requires a scalar loss, got shape {self.shape}")
        order = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)
        if free_graph:
            for node in order:
                node._parents = ()
                node._backward = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    # operator sugar; scalars and arrays are promoted to constant tensors
    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        return mul(as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, as_tensor(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def __pow__(self, exponent):
        return power(self, exponent)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _toposort(root: Tensor) -> list[Tensor]:
    # iterative DFS; graphs can be thousands of nodes deep
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _make(data: Array, parents: Sequence[Tensor], backward: Callable[[Array], None], op: str) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
        out._op = op
    return out


def _sum_to(grad: Array, shape: tuple[int, ...]) -> Array:
    """Undo numpy broadcasting by summing the broadcast axes away."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _check_axis(axis: int, ndim: int, op: str) -> int:
    if not -ndim <= axis < ndim:
        raise AxisError(f"{op}: axis {axis} out of range for rank {ndim}")
    return axis % ndim


# ---------------------------------------------------------------------------
# elementwise ops


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def backward(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_sum_to(g, a.shape))
        if b.requires_grad:
            b._accumulate(_sum_to(g, b.shape))

    return _make(data, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data

    def backward(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_sum_to(g, a.shape))
        if b.requires_grad:
            b._accumulate(_sum_to(-g, b.shape))

    return _make(data, (a, b), backward, "sub")


def neg(a: Tensor) -> Tensor:
    def backward(g: Array) -> None:
        a._accumulate(-g)

    return _make(-a.data, (a,), backward, "neg")


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def backward(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_sum_to(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_sum_to(g * a.data, b.shape))

    return _make(data, (a, b), backward, "mul")


def div(a: Tensor, b: Tensor) -> Tensor:
    data = a.data / b.data

    def backward(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_sum_to(g / b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_sum_to(-g * a.data / (b.data * b.data), b.shape))

    return _make(data, (a, b), backward, "div")


def power(a: Tensor, exponent: float) -> Tensor:
    """Elementwise power with a constant exponent."""
    exponent = float(exponent)
    data = a.data ** exponent

    def backward(g: Array) -> None:
        a._accumulate(g * exponent * a.data ** (exponent - 1.0))

    return _make(data, (a,), backward, "power")


def gelu(a: Tensor) -> Tensor:
    """Exact-erf Gaussian error linear unit."""
    cdf = 0.5 * (1.0 + erf(a.data * _INV_SQRT2))
    data = a.data * cdf

    def backward(g: Array) -> None:
        pdf = np.exp(-0.5 * a.data * a.data) * _INV_SQRT_2PI
        a._accumulate(g * (cdf + a.data * pdf))

    return _make(data, (a,), backward, "gelu")


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def backward(g: Array) -> None:
        a._accumulate(g * data * (1.0 - data))

    return _make(data, (a,), backward, "sigmoid")


# ---------------------------------------------------------------------------
# reductions and shape ops


def tsum(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    if axis is None:
        data = a.data.sum()

        def backward(g: Array) -> None:
            a._accumulate(np.broadcast_to(g, a.shape))

    else:
        ax = _check_axis(axis, a.ndim, "sum")
        data = a.data.sum(axis=ax, keepdims=keepdims)

        def backward(g: Array) -> None:
            gg = g if keepdims else np.expand_dims(g, ax)
            a._accumulate(np.broadcast_to(gg, a.shape))

    return _make(data, (a,), backward, "sum")


def tmean(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    n = a.size if axis is None else a.shape[_check_axis(axis, a.ndim, "mean")]
    return mul(tsum(a, axis=axis, keepdims=keepdims), Tensor(1.0 / n))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    data = a.data.reshape(shape)

    def backward(g: Array) -> None:
        a._accumulate(g.reshape(a.shape))

    return _make(data, (a,), backward, "reshape")


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    data = a.data.transpose(axes)

    def backward(g: Array) -> None:
        a._accumulate(g.transpose(inverse))

    return _make(data, (a,), backward, "transpose")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise DimensionError("concat requires at least one tensor")
    ax = _check_axis(axis, tensors[0].ndim, "concat")
    data = np.concatenate([t.data for t in tensors], axis=ax)
    sizes = [t.shape[ax] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g: Array) -> None:
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if not t.requires_grad:
                continue
            idx = [slice(None)] * g.ndim
            idx[ax] = slice(lo, hi)
            t._accumulate(g[tuple(idx)])

    return _make(data, tuple(tensors), backward, "concat")


def roll(a: Tensor, shifts: Sequence[int], axes: Sequence[int]) -> Tensor:
    """Toroidal roll; the gradient rolls back by the negated shifts."""
    shifts = tuple(int(s) for s in shifts)
    axes = tuple(_check_axis(ax, a.ndim, "roll") for ax in axes)
    data = np.roll(a.data, shifts, axis=axes)

    def backward(g: Array) -> None:
        a._accumulate(np.roll(g, tuple(-s for s in shifts), axis=axes))

    return _make(data, (a,), backward, "roll")


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} vs {b.shape}")
    data = a.data @ b.data

    def backward(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(data, (a, b), backward, "matmul")


def bmm(a: Tensor, b: Tensor) -> Tensor:
    """Batched matmul over one or more leading axes."""
    if a.ndim < 3 or a.ndim != b.ndim:
        raise DimensionError(f"bmm expects equal-rank >=3 operands, got {a.shape} and {b.shape}")
    if a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"bmm shapes incompatible: {a.shape} vs {b.shape}")
    data = np.matmul(a.data, b.data)

    def backward(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(np.matmul(g, np.swapaxes(b.data, -1, -2)))
        if b.requires_grad:
            b._accumulate(np.matmul(np.swapaxes(a.data, -1, -2), g))

    return _make(data, (a, b), backward, "bmm")


def take_rows(a: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows of a rank-2 tensor; the gradient scatter-adds back."""
    if a.ndim != 2:
        raise DimensionError(f"take_rows expects a rank-2 tensor, got {a.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    data = a.data[idx]

    def backward(g: Array) -> None:
        acc = np.zeros_like(a.data)
        np.add.at(acc, idx, g)
        a._accumulate(acc)

    return _make(data, (a,), backward, "take_rows")


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map on the last axis: y = x @ w + b with w of shape (in, out)."""
    if w.ndim != 2:
        raise DimensionError(f"linear weight must be rank-2, got {w.shape}")
    if x.shape[-1] != w.shape[0]:
        raise DimensionError(f"linear: input extent {x.shape} does not match weight {w.shape}")
    if b.shape != (w.shape[1],):
        raise DimensionError(f"linear: bias {b.shape} does not match weight {w.shape}")
    data = x.data @ w.data + b.data

    def backward(g: Array) -> None:
        if x.requires_grad:
            x._accumulate(g @ w.data.T)
        gr = g.reshape(-1, w.shape[1])
        if w.requires_grad:
            xr = x.data.reshape(-1, x.shape[-1])
            w._accumulate(xr.T @ gr)
        if b.requires_grad:
            b._accumulate(gr.sum(axis=0))

    return _make(data, (x, w, b), backward, "linear")


# ---------------------------------------------------------------------------
# normalization and attention kernels


def softmax(x: Tensor, axis: int) -> Tensor:
    """Max-stabilized softmax along ``axis``; slices sum to 1.

    -inf logits (attention masks) are supported and yield exact zeros.
    """
    ax = _check_axis(axis, x.ndim, "softmax")
    shifted = x.data - x.data.max(axis=ax, keepdims=True)
    expd = np.exp(shifted)
    data = expd / expd.sum(axis=ax, keepdims=True)

    def backward(g: Array) -> None:
        inner = (g * data).sum(axis=ax, keepdims=True)
        x._accumulate(data * (g - inner))

    return _make(data, (x,), backward, "softmax")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then apply affine.

    Uses the biased variance, as is standard for token normalization.
    """
    if eps <= 0:
        raise ParameterError(f"layer_norm eps must be positive, got {eps}")
    dim = x.shape[-1]
    if gamma.shape != (dim,) or beta.shape != (dim,):
        raise DimensionError(
            f"layer_norm affine shapes {gamma.shape}/{beta.shape} do not match normalized extent {dim}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    var = ((x.data - mu) ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    data = gamma.data * xhat + beta.data

    def backward(g: Array) -> None:
        lead = tuple(range(g.ndim - 1))
        if gamma.requires_grad:
            gamma._accumulate((g * xhat).sum(axis=lead))
        if beta.requires_grad:
            beta._accumulate(g.sum(axis=lead))
        if x.requires_grad:
            gx = g * gamma.data
            x._accumulate(
                inv_std
                * (gx - gx.mean(axis=-1, keepdims=True) - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
            )

    return _make(data, (x, gamma, beta), backward, "layer_norm")


def conv2d(x: Tensor, k: Tensor, padding: int) -> Tensor:
    """2-D cross-correlation, NCHW input, OIkk kernel, zero padding.

    With kernel extent odd and padding = (k-1)/2 the spatial size is preserved.
    """
    if x.ndim != 4 or k.ndim != 4:
        raise DimensionError(f"conv2d expects NCHW input and OIkk kernel, got {x.shape} and {k.shape}")
    n, c, h, w = x.shape
    co, ci, kh, kw = k.shape
    if ci != c:
        raise DimensionError(f"conv2d channel mismatch: input {x.shape} vs kernel {k.shape}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise DimensionError(f"conv2d kernel spatial extent must be odd, got {k.shape}")
    padding = int(padding)
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = h + 2 * padding - kh + 1
    wo = w + 2 * padding - kw + 1
    out = np.zeros((n, co, ho, wo))
    for i in range(kh):
        for j in range(kw):
            # window of xp aligned with kernel tap (i, j)
            out += np.einsum("nchw,oc->nohw", xp[:, :, i : i + ho, j : j + wo], k.data[:, :, i, j])

    def backward(g: Array) -> None:
        if k.requires_grad:
            gk = np.empty_like(k.data)
            for i in range(kh):
                for j in range(kw):
                    gk[:, :, i, j] = np.einsum("nohw,nchw->oc", g, xp[:, :, i : i + ho, j : j + wo])
            k._accumulate(gk)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i : i + ho, j : j + wo] += np.einsum("nohw,oc->nchw", g, k.data[:, :, i, j])
            if padding:
                gxp = gxp[:, :, padding:-padding, padding:-padding]
            x._accumulate(gxp)

    return _make(out, (x, k), backward, "conv2d")


# ---------------------------------------------------------------------------
# convenience


def mse(pred: Tensor, target: Tensor) -> Tensor:
    return tmean(power(sub(pred, target), 2.0))


def stack_scalars(values: Iterable[Tensor]) -> Tensor:
    """Concatenate scalar tensors into a rank-1 tensor."""
    return concat([reshape(v, (1,)) for v in values], axis=0)
