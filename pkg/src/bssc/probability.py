"""Probability and entropy primitives for binary alphabets.

All entropies are in bits. Scalars are plain floats validated through
:func:`check_prob`; the small containers below are frozen dataclasses so they
can be shared freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

PROB_EPS = 1e-12
ROW_TOL = 1e-12
JOINT_TOL = 1e-10


def check_prob(value: float, name: str = "probability") -> float:
    """Validate a scalar probability, clamping values within ``PROB_EPS`` of [0, 1]."""
    v = float(value)
    if not math.isfinite(v) or v < -PROB_EPS or v > 1.0 + PROB_EPS:
        raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")
    return min(max(v, 0.0), 1.0)


def binary_entropy(p: float) -> float:
    """Binary entropy ``-p log2 p - (1-p) log2 (1-p)``.

    Evaluated on ``min(p, 1-p)`` so that ``H(p)`` and ``H(1-p)`` hit the same
    floating point path whenever the complement was formed as ``1 - p``.
    """
    p = check_prob(p)
    q = p if p <= 0.5 else 1.0 - p
    if q == 0.0:
        return 0.0
    return -(q * math.log2(q) + (1.0 - q) * math.log2(1.0 - q))


def binary_entropy_array(p: np.ndarray) -> np.ndarray:
    """Vectorised :func:`binary_entropy` (no validation)."""
    p = np.asarray(p, dtype=float)
    q = np.where(p <= 0.5, p, 1.0 - p)
    return -(xlog2x(q) + xlog2x(1.0 - q))


def xlog2x(p: np.ndarray) -> np.ndarray:
    """Elementwise ``p * log2(p)`` with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


@dataclass(frozen=True)
class BinaryDist:
    """Distribution on {0, 1}, stored as the mass of symbol 0."""

    p0: float

    def __post_init__(self):
        object.__setattr__(self, "p0", check_prob(self.p0, "p0"))

    @property
    def p1(self) -> float:
        return 1.0 - self.p0

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1])

    @classmethod
    def uniform(cls) -> "BinaryDist":
        return cls(0.5)

    def to_list(self) -> list[float]:
        return [self.p0, self.p1]


@dataclass(frozen=True)
class Matrix2:
    """Row-stochastic 2x2 matrix. Row = conditioning symbol, column = output symbol."""

    rows: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        rows = tuple(tuple(check_prob(v, "matrix entry") for v in row) for row in self.rows)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValidationError("Matrix2 needs exactly two rows of two entries")
        for i, r in enumerate(rows):
            if abs(r[0] + r[1] - 1.0) > ROW_TOL:
                raise ValidationError(f"row {i} sums to {r[0] + r[1]!r}, not 1")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_array(cls, m) -> "Matrix2":
        m = np.asarray(m, dtype=float)
        return cls(((m[0, 0], m[0, 1]), (m[1, 0], m[1, 1])))

    @classmethod
    def symmetric(cls, p: float) -> "Matrix2":
        """``[[p, 1-p], [1-p, p]]``."""
        p = check_prob(p)
        return cls(((p, 1.0 - p), (1.0 - p, p)))

    def __getitem__(self, idx: tuple[int, int]) -> float:
        i, j = idx
        return self.rows[i][j]

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)

    def to_list(self) -> list[list[float]]:
        return [list(r) for r in self.rows]

    def is_doubly_stochastic(self, tol: float = ROW_TOL) -> bool:
        cols = self.as_array().sum(axis=0)
        return bool(np.all(np.abs(cols - 1.0) <= tol))


def conditional_entropy_given(cond: Matrix2, marginal: BinaryDist) -> float:
    """``sum_x marginal(x) * H(cond(.|x))``."""
    return marginal.p0 * binary_entropy(cond[0, 0]) + marginal.p1 * binary_entropy(cond[1, 0])


def mutual_information(pxy) -> float:
    """I(X;Y) in bits for a 2-D joint array."""
    pxy = np.asarray(pxy, dtype=float)
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    return float(xlog2x(pxy).sum() - xlog2x(px).sum() - xlog2x(py).sum())


def stationary_binary(m: Matrix2) -> BinaryDist:
    """Stationary law of a two-state chain, ``pi0 = m10 / (m01 + m10)``.

    Raises :class:`ValidationError` when the chain is reducible (both
    off-diagonal entries zero), which leaves the stationary law non-unique.
    """
    off = m[0, 1] + m[1, 0]
    if off <= 0.0:
        raise ValidationError("two-state chain has no unique stationary distribution")
    return BinaryDist(m[1, 0] / off)


def stationary_power(P, tol: float = 1e-14, max_steps: int = 1_000_000) -> np.ndarray:
    """Stationary row vector of a finite chain by power iteration.

    The matrix is squared between sweeps, so ``k`` sweeps apply ``P**(2**k)``;
    iteration stops once ``||pi P - pi||_1 <= tol``. Falls back to an eigen
    solve if the step cap is hit.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    Q = P.copy()
    steps = 0
    while steps < max_steps:
        pi = pi @ Q
        pi /= pi.sum()
        if np.abs(pi @ P - pi).sum() <= tol:
            return pi
        Q = Q @ Q
        Q /= Q.sum(axis=1, keepdims=True)
        steps += 1
    w, v = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    vec = np.real(v[:, k])
    return vec / vec.sum()


class JointTable:
    """Dense joint law of ``(b_{-1}, a_0, b_0, ..., a_n, b_n)``.

    Axis 0 is the initial output symbol; axes ``1 + 2i`` and ``2 + 2i`` are
    ``a_i`` and ``b_i``. The table is read-only once built.
    """

    def __init__(self, masses, atol: float = JOINT_TOL):
        m = np.array(masses, dtype=float)
        if m.ndim < 3 or m.ndim % 2 == 0 or any(s != 2 for s in m.shape):
            raise ValidationError(
                f"joint must have shape (2,)*(2n+3), got {m.shape}"
            )
        if np.any(m < -atol):
            raise ValidationError("joint has negative mass")
        total = m.sum()
        if abs(total - 1.0) > atol:
            raise ValidationError(f"joint masses sum to {total!r}, not 1")
        m = np.clip(m, 0.0, None)
        m.setflags(write=False)
        self._m = m

    @property
    def masses(self) -> np.ndarray:
        return self._m

    @property
    def horizon(self) -> int:
        return (self._m.ndim - 3) // 2

    @classmethod
    def from_atoms(cls, atoms: dict[tuple[int, ...], float], horizon: int) -> "JointTable":
        m = np.zeros((2,) * (2 * horizon + 3))
        for key, w in atoms.items():
            m[tuple(key)] += w
        return cls(m)

    def atoms(self) -> Iterable[tuple[tuple[int, ...], float]]:
        for idx in np.ndindex(self._m.shape):
            yield idx, float(self._m[idx])


def _entropy_keep(p: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Entropy of the marginal on ``keep`` (event axes, batch axis 0 preserved)."""
    drop = tuple(ax + 1 for ax in range(p.ndim - 1) if ax not in keep)
    marg = p.sum(axis=drop) if drop else p
    flat = marg.reshape(marg.shape[0], -1)
    return -xlog2x(flat).sum(axis=1)


def directed_information_batch(p: np.ndarray) -> np.ndarray:
    """Directed information for a batch of joints shaped ``(batch, 2, ..., 2)``.

    Sums ``I(A^i; B_i | B^{i-1})`` for ``i = 0..n`` where the output history
    always includes the initial symbol ``b_{-1}``.
    """
    k = p.ndim - 1
    n = (k - 3) // 2
    total = np.zeros(p.shape[0])
    for i in range(n + 1):
        a_ax = [1 + 2 * j for j in range(i + 1)]
        b_prev = [0] + [2 + 2 * j for j in range(i)]
        b_cur = b_prev + [2 + 2 * i]
        total += (
            _entropy_keep(p, sorted(a_ax + b_prev))
            + _entropy_keep(p, b_cur)
            - _entropy_keep(p, b_prev)
            - _entropy_keep(p, sorted(a_ax + b_cur))
        )
    return total


def directed_information(joint: JointTable, horizon: int | None = None) -> float:
    """``I(A^n -> B^n)`` in bits, computed exactly from the joint table."""
    if horizon is not None and horizon != joint.horizon:
        raise ValidationError(f"horizon {horizon} does not match joint horizon {joint.horizon}")
    value = float(directed_information_batch(joint.masses[None, ...])[0])
    return max(value, 0.0)
