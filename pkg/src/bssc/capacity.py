"""Closed-form feedback and no-feedback capacity of the BSSC.

With the state-0 cost ``E c = kappa`` the optimal feedback input is
``[[kappa, 1-kappa], [1-kappa, kappa]]``, the output chain is
``[[lam, 1-lam], [1-lam, lam]]`` with ``lam = alpha kappa + (1-kappa)(1-beta)``,
and the rate is ``H(lam) - kappa H(alpha) - (1-kappa) H(beta)``.

These expressions hold for every ``alpha + beta != 1``, not only canonical
parameters, so no relabeling is applied before evaluating them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .channel import BsscParams, FeedbackPolicy, MarkovPolicy
from .errors import (
    MarkovInfeasibleError,
    MarkovSingularityError,
    SingularChannelError,
    ValidationError,
)
from .probability import BinaryDist, Matrix2, binary_entropy, check_prob

GAMMA_SINGULAR_TOL = 1e-8
MARKOV_ENTRY_TOL = 1e-12


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    kappa: float
    lambda_: float
    input: FeedbackPolicy
    output_kernel: Matrix2
    output_marginal: BinaryDist
    params: BsscParams
    degenerate: bool = False
    markov: MarkovPolicy | None = None

    def to_dict(self) -> dict:
        d = {
            "capacity": self.capacity,
            "kappa": self.kappa,
            "lambda": self.lambda_,
            "input": self.input.to_dict(),
            "output_kernel": self.output_kernel.to_list(),
            "output_marginal": self.output_marginal.to_list(),
            "degenerate": self.degenerate,
        }
        if self.markov is not None:
            d["markov_input"] = self.markov.to_dict()
        return d


def lambda_of(params: BsscParams, kappa: float) -> float:
    kappa = check_prob(kappa, "kappa")
    return params.alpha * kappa + (1.0 - kappa) * (1.0 - params.beta)


def rate_at(params: BsscParams, kappa: float) -> float:
    """``H(lam) - kappa H(alpha) - (1-kappa) H(beta)`` as a bare float."""
    kappa = check_prob(kappa, "kappa")
    lam = lambda_of(params, kappa)
    return (binary_entropy(lam) - kappa * binary_entropy(params.alpha)
            - (1.0 - kappa) * binary_entropy(params.beta))


def capacity_fb_cost(params: BsscParams, kappa: float) -> CapacityResult:
    """Feedback capacity under the equality cost constraint ``E c = kappa``.

    The value is the constrained rate and can be negative far from the
    unconstrained optimum; it is returned as is.
    """
    kappa = check_prob(kappa, "kappa")
    lam = lambda_of(params, kappa)
    cap = (binary_entropy(lam) - kappa * binary_entropy(params.alpha)
           - (1.0 - kappa) * binary_entropy(params.beta))
    return CapacityResult(
        capacity=cap,
        kappa=kappa,
        lambda_=lam,
        input=FeedbackPolicy.symmetric(kappa),
        output_kernel=Matrix2.symmetric(lam),
        output_marginal=BinaryDist.uniform(),
        params=params,
    )


def kappa_star(params: BsscParams) -> float:
    """Optimal fraction of state-0 uses without a cost constraint."""
    a, b = params.alpha, params.beta
    if params.is_singular:
        raise SingularChannelError(
            f"alpha + beta = 1 (alpha={a!r}, beta={b!r}): capacity is 0 for every kappa"
        )
    d = a + b - 1.0
    w = 1.0 + 2.0 ** ((binary_entropy(b) - binary_entropy(a)) / d)
    return check_prob((b * w - 1.0) / (d * w), "kappa*")


def _zero_capacity(params: BsscParams) -> CapacityResult:
    kappa = 0.5
    lam = lambda_of(params, kappa)
    return CapacityResult(
        capacity=0.0,
        kappa=kappa,
        lambda_=lam,
        input=FeedbackPolicy.symmetric(kappa),
        output_kernel=Matrix2.symmetric(lam),
        output_marginal=BinaryDist.uniform(),
        params=params,
        degenerate=True,
    )


def capacity_fb(params: BsscParams) -> CapacityResult:
    """Unconstrained feedback capacity, attained at ``kappa_star``.

    A singular channel (``alpha + beta = 1``) yields a zero-capacity result
    flagged ``degenerate`` with ``kappa = 0.5``.
    """
    if params.is_singular:
        return _zero_capacity(params)
    return capacity_fb_cost(params, kappa_star(params))


def kappa_max(params: BsscParams) -> float:
    """Largest cost level at which an inequality constraint still binds.

    Below it the inequality and equality problems coincide and the capacity
    curve is concave and nondecreasing; above it the curve is flat at the
    unconstrained capacity.
    """
    return kappa_star(params)


def capacity_fb_ineq(params: BsscParams, kappa: float) -> CapacityResult:
    """Feedback capacity under ``E c <= kappa``."""
    kappa = check_prob(kappa, "kappa")
    if params.is_singular:
        return _zero_capacity(params)
    if kappa >= kappa_max(params):
        return capacity_fb(params)
    return capacity_fb_cost(params, kappa)


def gamma_of(params: BsscParams, kappa: float) -> float:
    """``alpha kappa + beta (1-kappa)``: probability that the output equals the input."""
    kappa = check_prob(kappa, "kappa")
    return params.alpha * kappa + params.beta * (1.0 - kappa)


def markov_nofb_policy(params: BsscParams, kappa: float) -> MarkovPolicy:
    """Symmetric first-order Markov input that reproduces the feedback optimum.

    Stay probability ``(1-kappa-gamma)/(1-2gamma)``, switch probability
    ``(kappa-gamma)/(1-2gamma)``. Infeasible entries are reported, not clamped.
    """
    kappa = check_prob(kappa, "kappa")
    g = gamma_of(params, kappa)
    den = 1.0 - 2.0 * g
    if abs(den) < GAMMA_SINGULAR_TOL:
        raise MarkovSingularityError(
            f"gamma = {g!r} is within {GAMMA_SINGULAR_TOL:g} of 1/2; Markov input undefined"
        )
    stay = (1.0 - kappa - g) / den
    switch = (kappa - g) / den
    for name, v in (("stay", stay), ("switch", switch)):
        if v < -MARKOV_ENTRY_TOL or v > 1.0 + MARKOV_ENTRY_TOL:
            raise MarkovInfeasibleError(
                f"Markov input {name} entry {v!r} outside [0, 1] "
                f"(alpha={params.alpha}, beta={params.beta}, kappa={kappa})",
                entry=name,
                value=v,
            )
    stay = min(max(stay, 0.0), 1.0)
    return MarkovPolicy(Matrix2(((stay, 1.0 - stay), (1.0 - stay, stay))))


def markov_feasible(params: BsscParams, kappa: float) -> bool:
    try:
        markov_nofb_policy(params, kappa)
    except (MarkovInfeasibleError, MarkovSingularityError):
        return False
    return True


def capacity_nofb(params: BsscParams, kappa: float | None = None) -> CapacityResult:
    """Capacity without feedback, achieved by the symmetric Markov input.

    Same value as the feedback problem at the same cost. ``kappa=None`` means no
    cost constraint. A singular channel returns the degenerate zero result with
    an i.i.d. uniform input.
    """
    if kappa is None:
        if params.is_singular:
            res = _zero_capacity(params)
            return _with_markov(res, MarkovPolicy(Matrix2.symmetric(0.5)))
        res = capacity_fb(params)
    else:
        res = capacity_fb_cost(params, kappa)
    return _with_markov(res, markov_nofb_policy(params, res.kappa))


def _with_markov(res: CapacityResult, markov: MarkovPolicy) -> CapacityResult:
    return CapacityResult(
        capacity=res.capacity,
        kappa=res.kappa,
        lambda_=res.lambda_,
        input=res.input,
        output_kernel=res.output_kernel,
        output_marginal=res.output_marginal,
        params=res.params,
        degenerate=res.degenerate,
        markov=markov,
    )


# Intermediate steps of the closed-form derivation, exposed for testing.


def output_balance_lambda(output_kernel: Matrix2, output_marginal: BinaryDist) -> float:
    """``P(0|0) P_B(0) + P(1|1) (1 - P_B(0))``."""
    p0 = output_marginal.p0
    return output_kernel[0, 0] * p0 + output_kernel[1, 1] * (1.0 - p0)


def marginal_from_qb(lam: float, qb: float) -> float:
    """``P_B(0)`` on the cost curve as a function of ``qb = P(1|1)``."""
    return (1.0 + lam - 2.0 * qb) / (2.0 * (1.0 - qb))


def p00_from_qb(lam: float, qb: float) -> float:
    """``P(0|0)`` on the cost curve as a function of ``qb = P(1|1)``."""
    return (2.0 * lam - (1.0 + lam) * qb) / (1.0 + lam - 2.0 * qb)


def output_entropy_qb(lam: float, qb: float) -> float:
    """``H(B|B_prev)`` along the cost curve, parameterised by ``qb``."""
    pb0 = marginal_from_qb(lam, qb)
    return pb0 * binary_entropy(p00_from_qb(lam, qb)) + (1.0 - pb0) * binary_entropy(qb)


def output_entropy_qb_derivative(lam: float, qb: float) -> float:
    """Closed-form ``d/dqb`` of :func:`output_entropy_qb` (interior points only)."""
    ratio = (2.0 * lam - (1.0 + lam) * qb) / ((1.0 + lam - 2.0 * qb) * qb)
    return (1.0 - lam) / (2.0 * (qb - 1.0) ** 2) * math.log2(ratio)


class QbSolution(NamedTuple):
    qb: float
    p00: float
    marginal: BinaryDist


def qb_stationary_points(lam: float) -> dict[str, float]:
    """Roots of the ``qb`` stationarity condition: the optimum and the trivial root."""
    return {"optimum": lam, "trivial": 1.0}


def solve_qb(params: BsscParams, kappa: float) -> QbSolution:
    """Non-trivial stationary point ``qb = lam`` and the quantities it induces.

    The root ``qb = 1`` is never returned; the curve is undefined there.
    """
    lam = lambda_of(params, kappa)
    qb = qb_stationary_points(lam)["optimum"]
    if qb >= 1.0:
        raise ValidationError("lam = 1 leaves only the trivial root")
    return QbSolution(qb, p00_from_qb(lam, qb), BinaryDist(marginal_from_qb(lam, qb)))
