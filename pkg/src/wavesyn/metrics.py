"""Weighted l_k / l_inf error semantics shared by every solver.

Accumulators live in the power domain: for l_k an accumulator holds
``sum (w_j |e_j|)**k`` and for l_inf it holds ``max w_j |e_j|``. The identity
is 0 in both cases, so ``finalize`` is the only place a root is taken.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INF_KIND = 0  # kernel code for l_inf; positive codes are the exponent k


@dataclass(frozen=True)
class ErrorMetric:
    k: int | None  # None means l_inf

    def __post_init__(self):
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise ValueError(f"k must be a positive integer, got {self.k!r}")

    @classmethod
    def parse(cls, text: str) -> "ErrorMetric":
        t = text.strip().lower()
        if t in ("linf", "inf", "l_inf", "max"):
            return cls(None)
        if t.startswith("l"):
            t = t[1:]
        try:
            return cls(int(t))
        except ValueError:
            raise ValueError(f"unknown metric {text!r}") from None

    @property
    def is_inf(self) -> bool:
        return self.k is None

    @property
    def code(self) -> int:
        return INF_KIND if self.k is None else int(self.k)

    @property
    def root_n_exponent(self) -> float:
        """1/k, with l_inf treated as 0 so that ``n ** (1/k) == 1``."""
        return 0.0 if self.k is None else 1.0 / self.k

    def __str__(self) -> str:
        return "linf" if self.k is None else f"l{self.k}"


L1 = ErrorMetric(1)
L2 = ErrorMetric(2)
LINF = ErrorMetric(None)


def leaf_error(x: float, v: float, weight: float, metric: ErrorMetric) -> float:
    e = weight * abs(x - v)
    return e if metric.is_inf else e**metric.k


def combine(a: float, b: float, metric: ErrorMetric) -> float:
    return max(a, b) if metric.is_inf else a + b


def finalize(acc: float, metric: ErrorMetric) -> float:
    if metric.is_inf or metric.k == 1:
        return float(acc)
    if math.isinf(acc):
        return math.inf
    return float(acc) ** (1.0 / metric.k)


def accumulate(x, approx, weights, metric: ErrorMetric) -> float:
    """Accumulator for the whole residual ``x - approx`` (vectorized)."""
    e = np.asarray(weights) * np.abs(np.asarray(x) - np.asarray(approx))
    if metric.is_inf:
        return float(e.max()) if e.size else 0.0
    return float(np.sum(e**metric.k))


def norm(x, approx, weights, metric: ErrorMetric) -> float:
    return finalize(accumulate(x, approx, weights, metric), metric)
