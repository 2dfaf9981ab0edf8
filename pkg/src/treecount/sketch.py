"""
Cauchy sketches for l1 norms.

Each coordinate of ``C v`` is Cauchy distributed with scale ``||v||_1``, and
the median of a standard Cauchy's absolute value is 1, so the median of
``|C v|`` estimates ``||v||_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SKETCH_CONSTANT = 8.0
_CLAMP = 1e12


@dataclass(frozen=True)
class CauchySketch:
    """A ``t x d`` matrix of independent standard Cauchy samples."""

    entries: np.ndarray
    delta: float
    eps: float

    @property
    def t(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]

    def apply(self, v) -> np.ndarray:
        return self.entries @ np.asarray(v, dtype=float)


def sketch_rows(delta, eps, c_sk=SKETCH_CONSTANT) -> int:
    """``ceil(c_sk eps^-2 log(1/delta))`` rounded up to an odd count."""
    t = math.ceil(c_sk * eps**-2 * math.log(1 / delta))
    return t + 1 if t % 2 == 0 else t


def build_sketch(d, delta, eps, rng, c_sk=SKETCH_CONSTANT) -> CauchySketch:
    if d < 1:
        raise ValueError("d must be positive")
    if not (0 < delta < 1 and 0 < eps < 1):
        raise ValueError("delta and eps must lie in (0, 1)")
    t = sketch_rows(delta, eps, c_sk)
    U = rng.random((t, d))
    C = np.clip(np.tan(np.pi * (U - 0.5)), -_CLAMP, _CLAMP)
    return CauchySketch(C, float(delta), float(eps))


def recover(sketched, sk: CauchySketch | None = None):
    """Estimate ``||v||_1`` from ``C v`` as the median absolute coordinate.

    A 2-d input is treated column by column.
    """
    s = np.abs(np.asarray(sketched, dtype=float))
    r = np.median(s, axis=0)
    return float(r) if np.ndim(r) == 0 else r
