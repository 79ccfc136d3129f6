"""Tape-based reverse-mode automatic differentiation over numpy arrays.

Covers exactly the operations the encoder and losses need; gradients are
verified against central finite differences in the test suite.  Tensors
keep the dtype they were created with, so the same graph code runs in
float32 for training and float64 for gradient checking.
"""

from __future__ import annotations

import contextlib

import numpy as np

from . import backend

_grad_enabled = [True]


@contextlib.contextmanager
def no_grad():
    _grad_enabled.append(False)
    try:
        yield
    finally:
        _grad_enabled.pop()


def grad_enabled() -> bool:
    return _grad_enabled[-1]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = np.asarray(data, dtype=dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- construction helpers ---------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents: tuple["Tensor", ...], backward) -> "Tensor":
        out = Tensor(data)
        if grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        out_data = self.data + other.data

        def backward(out):
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad, other.data.shape))

        return Tensor._result(out_data, (self, other), backward)

    __radd__ = __add__

    def __mul__(self, other):
        other = self._coerce(other)
        out_data = self.data * other.data

        def backward(out):
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad * other.data, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad * self.data, other.data.shape))

        return Tensor._result(out_data, (self, other), backward)

    __rmul__ = __mul__

    def __neg__(self):
        return self * np.asarray(-1.0, dtype=self.dtype)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __matmul__(self, other):
        assert isinstance(other, Tensor)
        out_data = self.data @ other.data

        def backward(out):
            if self.requires_grad:
                self._accumulate(out.grad @ other.data.T)
            if other.requires_grad:
                other._accumulate(self.data.T @ out.grad)

        return Tensor._result(out_data, (self, other), backward)

    # -- reductions ----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(out):
            if not self.requires_grad:
                return
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.data.shape).copy())

        return Tensor._result(out_data, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            count = self.data.size
        else:
            count = self.data.shape[axis]
        scale = np.asarray(1.0 / count, dtype=self.dtype)
        return self.sum(axis=axis, keepdims=keepdims) * scale

    def reshape(self, *shape):
        out_data = self.data.reshape(*shape)

        def backward(out):
            if self.requires_grad:
                self._accumulate(out.grad.reshape(self.data.shape))

        return Tensor._result(out_data, (self,), backward)

    # -- autodiff driver -----------------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- elementwise functions ----------------------------------------------------


def relu(x: Tensor) -> Tensor:
    out_data = np.maximum(x.data, 0)

    def backward(out):
        if x.requires_grad:
            x._accumulate(out.grad * (x.data > 0))

    return Tensor._result(out_data, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-x.data))

    def backward(out):
        if x.requires_grad:
            x._accumulate(out.grad * out_data * (1.0 - out_data))

    return Tensor._result(out_data, (x,), backward)


def exp(x: Tensor) -> Tensor:
    out_data = np.exp(x.data)

    def backward(out):
        if x.requires_grad:
            x._accumulate(out.grad * out_data)

    return Tensor._result(out_data, (x,), backward)


def log(x: Tensor) -> Tensor:
    out_data = np.log(x.data)

    def backward(out):
        if x.requires_grad:
            x._accumulate(out.grad / x.data)

    return Tensor._result(out_data, (x,), backward)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    out_data = np.clip(x.data, lo, hi)

    def backward(out):
        if x.requires_grad:
            inside = (x.data >= lo) & (x.data <= hi)
            x._accumulate(out.grad * inside)

    return Tensor._result(out_data, (x,), backward)


def absval(x: Tensor) -> Tensor:
    out_data = np.abs(x.data)

    def backward(out):
        if x.requires_grad:
            x._accumulate(out.grad * np.sign(x.data))

    return Tensor._result(out_data, (x,), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out_data = shifted - log_z

    def backward(out):
        if x.requires_grad:
            soft = np.exp(out_data)
            g = out.grad - soft * out.grad.sum(axis=axis, keepdims=True)
            x._accumulate(g)

    return Tensor._result(out_data, (x,), backward)


# -- structural operations -----------------------------------------------------


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(out):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if not t.requires_grad:
                continue
            index = [slice(None)] * out.grad.ndim
            index[axis] = slice(start, stop)
            t._accumulate(out.grad[tuple(index)])

    return Tensor._result(out_data, tuple(tensors), backward)


def gather_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """Row lookup x[index]; backward scatter-adds in index order."""
    index = np.ascontiguousarray(index, dtype=np.int64)
    out_data = x.data[index]

    def backward(out):
        if x.requires_grad:
            g = np.zeros_like(x.data)
            backend.scatter_add_rows(g, index, np.ascontiguousarray(out.grad))
            x._accumulate(g)

    return Tensor._result(out_data, (x,), backward)


def edge_message_sum(
    h: Tensor, erow: Tensor, src: np.ndarray, dst: np.ndarray, n_out: int
) -> Tensor:
    """out[v] = sum over edges k with dst[k] = v of (h[src[k]] + erow[k])."""
    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    out_data = backend.edge_message_sum(h.data, src, dst, erow.data, n_out)

    def backward(out):
        pulled = np.ascontiguousarray(out.grad[dst])
        if h.requires_grad:
            g = np.zeros_like(h.data)
            backend.scatter_add_rows(g, src, pulled)
            h._accumulate(g)
        if erow.requires_grad:
            erow._accumulate(pulled)

    return Tensor._result(out_data, (h, erow), backward)


def stack_rows(tensors: list[Tensor]) -> Tensor:
    """Stack 1-D tensors into a matrix; backward splits rows."""
    out_data = np.stack([t.data for t in tensors], axis=0)

    def backward(out):
        for k, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(out.grad[k])

    return Tensor._result(out_data, tuple(tensors), backward)
