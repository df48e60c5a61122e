"""Minimal reverse-mode autodiff over dense float64 numpy arrays.

Covers exactly the operations the pointer network needs: broadcasting
add/mul, matmul in the 1D/2D combinations numpy allows, tanh, sigmoid,
indexing, stacking, transpose, and a mask-aware log-softmax whose masked
entries come out at -inf (probability exactly zero). Graphs are only
recorded when an input requires gradients, so inference pays no tape cost.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_bwd")

    def __init__(self, data, requires_grad: bool = False, parents=(), bwd=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._bwd = bwd

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    # -- graph construction ------------------------------------------------

    @staticmethod
    def _make(data, parents, bwd):
        if any(p.requires_grad for p in parents):
            return Tensor(data, requires_grad=True, parents=parents, bwd=bwd)
        return Tensor(data)

    def backward(self):
        if self.data.shape != ():
            raise ValueError("backward() requires a scalar output")
        # iterative topological order (graphs get deeper than the recursion limit)
        topo, visited, stack = [], set(), [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones(())
        for node in reversed(topo):
            if node._bwd is None:
                continue
            for parent, g in zip(node._parents, node._bwd(node.grad)):
                if not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    # -- operators -----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return Tensor._make(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return add(self, -as_tensor(other))

    def __rsub__(self, other):
        return add(as_tensor(other), -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        def bwd(g):
            out = np.zeros_like(self.data)
            np.add.at(out, idx, g)
            return (out,)

        return Tensor._make(self.data[idx], (self,), bwd)

    @property
    def T(self):
        return Tensor._make(self.data.T, (self,), lambda g: (g.T,))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return Tensor._make(a.data + b.data, (a, b), bwd)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return Tensor._make(a.data * b.data, (a, b), bwd)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    def bwd(g):
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if ad.ndim == 2 and bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        if ad.ndim == 1 and bd.ndim == 2:
            return bd @ g, np.outer(ad, g)
        return g * bd, g * ad  # 1D @ 1D -> scalar

    return Tensor._make(ad @ bd, (a, b), bwd)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return Tensor._make(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return Tensor._make(out, (a,), lambda g: (g * out * (1.0 - out),))


def stack(tensors) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def bwd(g):
        return tuple(g[i] for i in range(len(tensors)))

    return Tensor._make(np.stack([t.data for t in tensors]), tuple(tensors), bwd)


def masked_log_softmax(scores: Tensor, mask: np.ndarray) -> Tensor:
    """Log-softmax over positions where mask is True; others come out -inf.

    The masked entries carry probability exactly 0 and receive no gradient.
    """
    scores = as_tensor(scores)
    mask = np.asarray(mask, dtype=bool).copy()  # caller may mutate theirs later
    if not mask.any():
        raise ValueError("masked_log_softmax needs at least one unmasked entry")
    s = scores.data
    mx = np.max(s[mask])
    shifted = s - mx
    expm = np.where(mask, np.exp(np.where(mask, shifted, 0.0)), 0.0)
    lse = np.log(expm.sum()) + mx
    out = np.where(mask, s - lse, -np.inf)
    probs = np.where(mask, expm / expm.sum(), 0.0)

    def bwd(g):
        gsum = g[mask].sum()
        return (np.where(mask, g - probs * gsum, 0.0),)

    return Tensor._make(out, (scores,), bwd)
