"""Binary state symmetric channel model.

The channel is a unit-memory kernel ``P(b | a, b_prev)`` whose behaviour is set
by the state ``s = a XOR b_prev``: state 0 is a BSC with crossover ``1 - alpha``
and state 1 a BSC with crossover ``1 - beta``. Kernel arrays are indexed
``[a, b_prev, b]`` throughout the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import KernelStructureError, ValidationError
from .probability import ROW_TOL, BinaryDist, Matrix2, check_prob

# Parameters closer than this to 0 or 1 are rejected.
BOUNDARY_MARGIN = 1e-5
SINGULAR_TOL = 1e-12
PARAMS_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CanonicalFlags:
    """Capacity-preserving relabelings applied by :func:`canonicalize`.

    ``output_relabel`` maps ``(alpha, beta) -> (1-alpha, 1-beta)`` with the cost
    unchanged. ``input_flip`` maps ``(alpha, beta) -> (1-beta, 1-alpha)`` and
    reverses the cost, ``kappa -> 1 - kappa``.
    """

    output_relabel: bool = False
    input_flip: bool = False

    @property
    def cost_reversed(self) -> bool:
        return self.input_flip

    @property
    def any(self) -> bool:
        return self.output_relabel or self.input_flip

    def to_dict(self) -> dict:
        return {
            "output_relabel": self.output_relabel,
            "input_flip": self.input_flip,
            "cost_reversed": self.cost_reversed,
        }


@dataclass(frozen=True)
class BsscParams:
    alpha: float
    beta: float
    flags: CanonicalFlags = field(default_factory=CanonicalFlags)

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not (BOUNDARY_MARGIN <= v <= 1.0 - BOUNDARY_MARGIN):
                raise ValidationError(
                    f"{name} must lie strictly inside (0, 1) "
                    f"(margin {BOUNDARY_MARGIN:g}), got {v!r}"
                )
            object.__setattr__(self, name, v)

    @property
    def is_singular(self) -> bool:
        """``alpha + beta == 1``: both arms give the same output law."""
        return abs(self.alpha + self.beta - 1.0) <= SINGULAR_TOL

    @property
    def is_canonical(self) -> bool:
        return self.alpha >= self.beta and self.alpha + self.beta >= 1.0

    def to_dict(self) -> dict:
        return {
            "schema_version": PARAMS_SCHEMA_VERSION,
            "alpha": self.alpha,
            "beta": self.beta,
            "flags": self.flags.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "BsscParams":
        f = d.get("flags") or {}
        return cls(
            float(d["alpha"]),
            float(d["beta"]),
            CanonicalFlags(bool(f.get("output_relabel", False)), bool(f.get("input_flip", False))),
        )

    @classmethod
    def from_json(cls, text: str) -> "BsscParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class ChannelKernel:
    """Unit-memory kernel ``p[a, b_prev, b] = P(b | a, b_prev)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape != (2, 2, 2):
            raise ValidationError(f"kernel must be 2x2x2, got {p.shape}")
        if np.any(p < -ROW_TOL) or np.any(p > 1 + ROW_TOL):
            raise ValidationError("kernel entries must lie in [0, 1]")
        sums = p.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            raise ValidationError("kernel rows P(.|a, b_prev) must sum to 1")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __eq__(self, other):
        return isinstance(other, ChannelKernel) and np.array_equal(self.p, other.p)

    def to_dict(self) -> dict:
        return {
            "layout": "p[a][b_prev][b]",
            "p": self.p.tolist(),
        }


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Letter cost table ``c[a, b_prev]``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (2, 2) or not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValidationError("cost must be a finite nonnegative 2x2 table")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def state_zero(cls) -> "CostSpec":
        """Unit cost when ``a == b_prev`` (state 0), zero otherwise."""
        return cls(np.eye(2))


@dataclass(frozen=True)
class FeedbackPolicy:
    """Input law ``P(a | b_prev)``; rows index ``b_prev``."""

    m: Matrix2

    @classmethod
    def symmetric(cls, kappa: float) -> "FeedbackPolicy":
        return cls(Matrix2.symmetric(kappa))

    @classmethod
    def from_pair(cls, x: float, y: float) -> "FeedbackPolicy":
        """From ``x = P(a=0 | b_prev=0)`` and ``y = P(a=0 | b_prev=1)``."""
        return cls(Matrix2(((x, 1.0 - x), (y, 1.0 - y))))

    def as_array(self) -> np.ndarray:
        return self.m.as_array()

    def to_dict(self) -> dict:
        return {"kind": "feedback", "rows": "b_prev", "P(a|b_prev)": self.m.to_list()}


@dataclass(frozen=True)
class MarkovPolicy:
    """Input law ``P(a | a_prev)`` with no access to channel outputs; rows index ``a_prev``."""

    m: Matrix2

    def as_array(self) -> np.ndarray:
        return self.m.as_array()

    def to_dict(self) -> dict:
        return {"kind": "markov", "rows": "a_prev", "P(a|a_prev)": self.m.to_list()}


def bssc_kernel(params: BsscParams) -> ChannelKernel:
    a, b = params.alpha, params.beta
    p0 = np.empty((2, 2))
    p0[0, 0] = a
    p0[0, 1] = b
    p0[1, 0] = 1.0 - b
    p0[1, 1] = 1.0 - a
    return ChannelKernel(np.stack([p0, 1.0 - p0], axis=-1))


def state_decompose(kernel: ChannelKernel, tol: float = ROW_TOL) -> tuple[Matrix2, Matrix2]:
    """Split a BSSC kernel into its state-0 and state-1 BSCs.

    Both returned matrices are indexed ``[a, b]``. Raises
    :class:`KernelStructureError` naming the broken symmetry if the kernel is
    not of the two-parameter form.
    """
    p = kernel.p
    if abs(p[0, 0, 0] - p[1, 1, 1]) > tol:
        raise KernelStructureError(
            f"state-0 symmetry broken: P(0|0,0)={p[0, 0, 0]!r} != P(1|1,1)={p[1, 1, 1]!r}"
        )
    if abs(p[0, 1, 0] - p[1, 0, 1]) > tol:
        raise KernelStructureError(
            f"state-1 symmetry broken: P(0|0,1)={p[0, 1, 0]!r} != P(1|1,0)={p[1, 0, 1]!r}"
        )
    s0 = Matrix2((tuple(p[0, 0]), tuple(p[1, 1])))
    s1 = Matrix2((tuple(p[0, 1]), tuple(p[1, 0])))
    return s0, s1


def reconstruct_kernel(state0: Matrix2, state1: Matrix2) -> ChannelKernel:
    """Inverse of :func:`state_decompose`: ``P(b|a,b_prev) = M_{a xor b_prev}[a, b]``."""
    mats = (state0.as_array(), state1.as_array())
    p = np.empty((2, 2, 2))
    for a in (0, 1):
        for bp in (0, 1):
            p[a, bp] = mats[a ^ bp][a]
    return ChannelKernel(p)


def expected_cost(policy: FeedbackPolicy, b_prev_marginal: BinaryDist,
                  cost: CostSpec | None = None) -> float:
    """Average letter cost ``sum_{b,a} pi(b) P(a|b) c[a, b]``.

    With the default state-0 cost this is ``pi(0) P(0|0) + pi(1) P(1|1)``, the
    probability of using the state-0 arm.
    """
    c = CostSpec.state_zero().c if cost is None else cost.c
    m = policy.as_array()
    pi = b_prev_marginal.as_array()
    return float(sum(pi[b] * m[b, a] * c[a, b] for b in (0, 1) for a in (0, 1)))


def canonicalize(alpha_raw: float, beta_raw: float) -> BsscParams:
    """Map raw parameters to ``alpha >= beta`` and ``alpha + beta >= 1``.

    Only relabelings that are bijections on the feedback system are used, so
    capacity is unchanged (with ``kappa -> 1 - kappa`` when the input is
    flipped). Both arms cannot always be brought above 1/2: ``(0.08, 0.79)``
    lands on ``(0.92, 0.21)``.
    """
    a = float(alpha_raw)
    b = float(beta_raw)
    for name, v in (("alpha", a), ("beta", b)):
        if not 0.0 < v < 1.0:
            raise ValidationError(f"{name} must lie in (0, 1), got {v!r}")
    relabel = flip = False
    if a + b < 1.0:
        a, b = 1.0 - a, 1.0 - b
        relabel = True
    if a < b:
        # output relabel followed by input flip swaps the arms
        a, b = b, a
        relabel = not relabel
        flip = True
    return BsscParams(a, b, CanonicalFlags(relabel, flip))


def raw_kappa(kappa_canonical: float, flags: CanonicalFlags) -> float:
    """Map a cost level on the canonical channel back to the raw channel."""
    k = check_prob(kappa_canonical, "kappa")
    return 1.0 - k if flags.cost_reversed else k
