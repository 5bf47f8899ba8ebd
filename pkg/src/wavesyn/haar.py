"""Non-normalized Haar transform and error-tree navigation.

Coefficients use heap layout: index 0 is the overall average, index 1 the
root difference, and node ``i >= 1`` has children ``2i`` and ``2i + 1``.
Leaf ``j`` sits at heap position ``n + j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidSignal(ValueError):
    pass


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def check_length(n: int) -> None:
    if n < 2 or not is_power_of_two(n):
        raise InvalidSignal(f"signal length must be a power of two >= 2, got {n}")


@dataclass(frozen=True)
class Signal:
    """Input series with positive per-point weights.

    Weights are rescaled on construction so that they sum to ``n``.
    """

    values: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_values(cls, values, weights=None) -> "Signal":
        x = np.asarray(values, dtype=np.float64).ravel()
        check_length(len(x))
        if not np.all(np.isfinite(x)):
            raise InvalidSignal("signal values must be finite")
        if weights is None:
            w = np.ones_like(x)
        else:
            w = np.asarray(weights, dtype=np.float64).ravel()
            if w.shape != x.shape:
                raise InvalidSignal(f"expected {len(x)} weights, got {len(w)}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise InvalidSignal("weights must be finite and positive")
            w = w * (len(x) / w.sum())
        x.setflags(write=False)
        w.setflags(write=False)
        return cls(x, w)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def weighted(self) -> bool:
        return not np.all(self.weights == 1.0)


@dataclass(frozen=True)
class TreeNode:
    index: int
    level: int  # leaves are level 0; a node with 2**level leaves below it
    support: tuple[int, int]
    left_half: tuple[int, int]
    right_half: tuple[int, int]


def forward(values) -> np.ndarray:
    """Pairwise average/half-difference cascade."""
    a = np.asarray(values, dtype=np.float64).ravel()
    n = len(a)
    check_length(n)
    out = np.empty(n)
    while len(a) > 1:
        half = len(a) // 2
        even, odd = a[0::2], a[1::2]
        out[half : 2 * half] = (even - odd) / 2.0
        a = (even + odd) / 2.0
    out[0] = a[0]
    return out


def inverse(coeffs) -> np.ndarray:
    z = np.asarray(coeffs, dtype=np.float64).ravel()
    n = len(z)
    check_length(n)
    a = z[:1].copy()
    size = 1
    while size < n:
        d = z[size : 2 * size]
        nxt = np.empty(2 * size)
        nxt[0::2] = a + d
        nxt[1::2] = a - d
        a = nxt
        size *= 2
    return a


def node_level(i: int, n: int) -> int:
    """Height of node ``i``; node 0 and node 1 both span all ``n`` leaves."""
    if i == 0:
        return n.bit_length() - 1
    return (n.bit_length() - 1) - (i.bit_length() - 1)


def coefficient_count(i: int, n: int) -> int:
    """Number of coefficients in the subtree rooted at heap position ``i``."""
    if i >= n:
        return 0
    if i == 0:
        return n
    return (1 << node_level(i, n)) - 1


def tree_node(i: int, n: int) -> TreeNode:
    check_length(n)
    if not 0 <= i < n:
        raise IndexError(f"coefficient index {i} out of range for n={n}")
    t = node_level(i, n)
    if i == 0:
        return TreeNode(0, t, (0, n), (0, n), (0, 0))
    s = i.bit_length() - 1
    width = n >> s
    start = (i - (1 << s)) * width
    mid = start + width // 2
    return TreeNode(i, t, (start, start + width), (start, mid), (mid, start + width))


def leaf_path(j: int, n: int) -> list[tuple[int, int]]:
    """Root-to-leaf ``(index, sign)`` pairs for leaf ``j``, node 0 first."""
    check_length(n)
    if not 0 <= j < n:
        raise IndexError(f"leaf {j} out of range for n={n}")
    path = []
    h = n + j
    while h > 1:
        parent = h >> 1
        path.append((parent, 1 if h % 2 == 0 else -1))
        h = parent
    path.append((0, 1))
    path.reverse()
    return path


def basis_vector(i: int, n: int) -> np.ndarray:
    """Explicit V_i: +1 on the left half of the support, -1 on the right."""
    node = tree_node(i, n)
    v = np.zeros(n)
    v[slice(*node.left_half)] = 1.0
    v[slice(*node.right_half)] = -1.0
    return v


def support_size(i: int, n: int) -> int:
    s = tree_node(i, n).support
    return s[1] - s[0]
