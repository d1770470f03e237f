"""Numerical cross-checks that do not use the closed forms.

* :func:`single_letter_rate` evaluates ``H(B|B_prev) - H(B|A,B_prev)`` at the
  stationary output law of any feedback policy on any unit-memory kernel.
* :func:`grid_capacity` maximises that rate over a refined 2-D policy grid.
* :func:`finite_horizon_bruteforce` enumerates time-varying history policies
  and scores each one by exact directed information.
* :func:`verify_nofb_equivalence` checks that the Markov input induces the
  feedback-optimal ``P(a | b_prev)`` at stationarity.
* :func:`markov_input_rate` gives the exact finite-horizon no-feedback rate of a
  Markov input.
"""

from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .capacity import gamma_of, lambda_of, markov_nofb_policy
from .channel import (
    BsscParams,
    ChannelKernel,
    CostSpec,
    FeedbackPolicy,
    MarkovPolicy,
    bssc_kernel,
)
from .errors import (
    BudgetError,
    ConstraintInfeasibleError,
    DegeneratePolicyError,
    ValidationError,
)
from .probability import (
    BinaryDist,
    JointTable,
    Matrix2,
    binary_entropy_array,
    directed_information_batch,
    stationary_power,
    xlog2x,
)

REPORT_SCHEMA_VERSION = 1
DEFAULT_BUDGET = 10**8
CONDITIONING_CLASSES = ("output", "output_history", "full")


@dataclass
class OracleReport:
    best_value: float
    best_policy: Any
    grid_resolution: float
    constraint_residual: float
    evaluations: int
    wall_time: float = 0.0
    round_values: list[float] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        pol = self.best_policy.to_dict() if hasattr(self.best_policy, "to_dict") else self.best_policy
        d = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "value": self.best_value,
            "policy": pol,
            "resolution": self.grid_resolution,
            "residual": self.constraint_residual,
            "evaluations": self.evaluations,
            "wall_time": self.wall_time,
        }
        if self.round_values:
            d["round_values"] = list(self.round_values)
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# single-letter rate and grid search


def _rates(kernel: ChannelKernel, x, y, cost: CostSpec | None = None):
    """Vectorised rate and cost for policies ``x = P(a=0|0)``, ``y = P(a=0|1)``.

    Points whose output chain is reducible come back as NaN.
    """
    K = kernel.p
    c = CostSpec.state_zero().c if cost is None else cost.c
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pa = (np.stack([x, 1.0 - x], axis=-1), np.stack([y, 1.0 - y], axis=-1))  # per b_prev
    hK = binary_entropy_array(K[..., 0])  # [a, b_prev]
    q = [pa[bp][..., 0] * K[0, bp, 0] + pa[bp][..., 1] * K[1, bp, 0] for bp in (0, 1)]  # P(b=0|bp)
    off = (1.0 - q[0]) + q[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        pi0 = np.where(off > 0, q[1] / off, np.nan)
    pi = (pi0, 1.0 - pi0)
    h_out = pi[0] * binary_entropy_array(q[0]) + pi[1] * binary_entropy_array(q[1])
    h_noise = sum(pi[bp] * (pa[bp][..., 0] * hK[0, bp] + pa[bp][..., 1] * hK[1, bp]) for bp in (0, 1))
    cst = sum(pi[bp] * (pa[bp][..., 0] * c[0, bp] + pa[bp][..., 1] * c[1, bp]) for bp in (0, 1))
    return h_out - h_noise, cst


def single_letter_rate(kernel: ChannelKernel, policy: FeedbackPolicy,
                       cost: CostSpec | None = None) -> tuple[float, float]:
    """Stationary ``I(A;B|B_prev)`` and average cost of a feedback policy."""
    m = policy.as_array()
    r, c = _rates(kernel, m[0, 0], m[1, 0], cost)
    if np.isnan(r):
        raise DegeneratePolicyError("output chain has no unique stationary distribution")
    return float(r), float(c)


def _axis(center: float | None, res: float, half: int) -> np.ndarray:
    if center is None:
        return np.linspace(0.0, 1.0, int(round(1.0 / res)) + 1)
    pts = center + res * np.arange(-half, half + 1)
    return pts[(pts >= 0.0) & (pts <= 1.0)]


def grid_capacity(kernel: ChannelKernel, kappa: float | None = None, tolerance: float = 0.0,
                  resolution: float = 0.01, refine_rounds: int = 3,
                  cost: CostSpec | None = None, widen_band: bool = True) -> OracleReport:
    """Grid search of the single-letter rate over ``(P(a=0|0), P(a=0|1))``.

    Each refinement round re-centres on the incumbent with a window ten times
    narrower and the same point count. With ``kappa`` given, only points whose
    cost is within ``max(tolerance, resolution)`` of ``kappa`` are kept
    (``tolerance`` alone if ``widen_band`` is False).
    """
    if not 0.0 < resolution <= 0.5:
        raise ValidationError("resolution must lie in (0, 0.5]")
    if refine_rounds < 0:
        raise ValidationError("refine_rounds must be >= 0")
    t0 = time.perf_counter()
    half = int(round(0.5 / resolution))
    res = resolution
    best = None  # (value, x, y, cost)
    evals = 0
    rounds = []
    for r in range(refine_rounds + 1):
        xs = _axis(None if best is None else best[1], res, half)
        ys = _axis(None if best is None else best[2], res, half)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        R, C = _rates(kernel, X, Y, cost)
        evals += R.size
        ok = ~np.isnan(R)
        if kappa is not None:
            band = max(tolerance, res) if widen_band else tolerance
            ok &= np.abs(C - kappa) <= band
        if not ok.any():
            if best is None:
                raise ConstraintInfeasibleError(
                    f"no grid point has cost within tolerance of kappa={kappa}"
                )
            break
        Rm = np.where(ok, R, -np.inf)
        k = int(np.argmax(Rm))
        i, j = np.unravel_index(k, Rm.shape)
        best = (float(R[i, j]), float(xs[i]), float(ys[j]), float(C[i, j]))
        rounds.append(best[0])
        if r < refine_rounds:
            res /= 10.0
    value, x, y, c = best
    return OracleReport(
        best_value=value,
        best_policy=FeedbackPolicy.from_pair(x, y),
        grid_resolution=res,
        constraint_residual=0.0 if kappa is None else abs(c - kappa),
        evaluations=evals,
        wall_time=time.perf_counter() - t0,
        round_values=rounds,
        extra={"cost": c},
    )


# ---------------------------------------------------------------------------
# finite-horizon joints and brute force


@dataclass
class HistoryPolicy:
    """Time-varying input law. ``tables[i][ctx] = P(a_i = 0 | ctx)``.

    ``conditioning`` picks the context at time ``i >= 1``: ``"output"`` is
    ``b_{i-1}``, ``"output_history"`` is ``(b_0..b_{i-1})`` and ``"full"`` is
    ``(a_0, b_0, .., a_{i-1}, b_{i-1})``, each read as a binary number with the
    oldest symbol most significant. At ``i = 0`` the encoder sees nothing.
    """

    horizon: int
    conditioning: str
    tables: list[np.ndarray]

    def __post_init__(self):
        if self.conditioning not in CONDITIONING_CLASSES:
            raise ValidationError(f"unknown conditioning class {self.conditioning!r}")
        sizes = context_sizes(self.horizon, self.conditioning)
        if len(self.tables) != len(sizes):
            raise ValidationError("one table per time step required")
        tabs = []
        for t, s in zip(self.tables, sizes):
            t = np.asarray(t, dtype=float).reshape(-1)
            if t.size != s or np.any(t < 0) or np.any(t > 1):
                raise ValidationError("policy table has wrong size or entries outside [0, 1]")
            tabs.append(t)
        self.tables = tabs

    @property
    def params(self) -> np.ndarray:
        return np.concatenate(self.tables)

    @classmethod
    def from_params(cls, horizon, conditioning, theta) -> "HistoryPolicy":
        sizes = context_sizes(horizon, conditioning)
        offs = np.cumsum([0] + sizes)
        theta = np.asarray(theta, dtype=float)
        return cls(horizon, conditioning, [theta[offs[i]:offs[i + 1]] for i in range(len(sizes))])

    def to_dict(self) -> dict:
        return {
            "kind": "history",
            "horizon": self.horizon,
            "conditioning": self.conditioning,
            "P(a_i=0|ctx)": [t.tolist() for t in self.tables],
        }


def context_sizes(horizon: int, conditioning: str) -> list[int]:
    if conditioning == "output":
        per = lambda i: 2
    elif conditioning == "output_history":
        per = lambda i: 2**i
    elif conditioning == "full":
        per = lambda i: 4**i
    else:
        raise ValidationError(f"unknown conditioning class {conditioning!r}")
    return [1] + [per(i) for i in range(1, horizon + 1)]


def parameter_count(horizon: int, conditioning: str) -> int:
    return sum(context_sizes(horizon, conditioning))


def _context_index(i: int, conditioning: str) -> np.ndarray:
    """Context number for every joint cell over axes ``(b_{-1}, a_0, b_0, .., b_{i-1})``."""
    shape = (2,) * (1 + 2 * i)
    if i == 0:
        return np.zeros(shape, dtype=np.intp)
    idx = np.indices(shape)
    if conditioning == "output":
        return idx[2 * i].astype(np.intp)
    if conditioning == "output_history":
        axes = [2 + 2 * j for j in range(i)]
    else:
        axes = list(range(1, 1 + 2 * i))
    out = np.zeros(shape, dtype=np.intp)
    for ax in axes:
        out = out * 2 + idx[ax]
    return out


def _kernel_factor(K: np.ndarray, i: int) -> np.ndarray:
    """``K[a_i, b_{i-1}, b_i]`` broadcast against axes ``(b_{-1}, .., b_{i-1}, a_i, b_i)``."""
    nprev = 1 + 2 * i
    bp_axis = 0 if i == 0 else 2 * i
    shape = [1] * nprev + [2, 2]
    shape[bp_axis] = 2
    return np.transpose(K, (1, 0, 2)).reshape(shape)


def history_joint_batch(kernel: ChannelKernel, horizon: int, conditioning: str,
                        theta: np.ndarray, initial_output: BinaryDist) -> np.ndarray:
    """Joints ``(batch, b_{-1}, a_0, b_0, ..)`` for a batch of parameter vectors."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    sizes = context_sizes(horizon, conditioning)
    offs = np.cumsum([0] + sizes)
    K = kernel.p
    p = np.broadcast_to(initial_output.as_array(), (theta.shape[0], 2)).copy()
    for i in range(horizon + 1):
        cols = offs[i] + _context_index(i, conditioning)
        pa0 = theta[:, cols]
        pa = np.stack([pa0, 1.0 - pa0], axis=-1)
        p = (p[..., None] * pa)[..., None] * _kernel_factor(K, i)[None, ...]
    return p


def history_joint(kernel: ChannelKernel, policy: HistoryPolicy,
                  initial_output: BinaryDist | None = None) -> JointTable:
    init = BinaryDist.uniform() if initial_output is None else initial_output
    p = history_joint_batch(kernel, policy.horizon, policy.conditioning, policy.params, init)
    return JointTable(p[0])


def feedback_joint(kernel: ChannelKernel, policy: FeedbackPolicy, horizon: int,
                   initial_output: BinaryDist | None = None) -> JointTable:
    """Joint law when ``a_i ~ P(a | b_{i-1})`` at every step, including ``i = 0``."""
    init = BinaryDist.uniform() if initial_output is None else initial_output
    m = policy.as_array()
    K = kernel.p
    p = init.as_array()
    for i in range(horizon + 1):
        bp_axis = 0 if i == 0 else 2 * i
        shape = [1] * p.ndim + [2]
        shape[bp_axis] = 2
        p = (p[..., None] * m.reshape(shape))[..., None] * _kernel_factor(K, i)
    return JointTable(p)


def _grid_chunk(args):
    kernel, horizon, conditioning, grid, init, start, stop, nparams = args
    G = len(grid)
    lin = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((lin.size, nparams), dtype=np.intp)
    rem = lin
    for d in range(nparams - 1, -1, -1):
        digits[:, d] = rem % G
        rem = rem // G
    theta = grid[digits]
    p = history_joint_batch(kernel, horizon, conditioning, theta, init)
    di = directed_information_batch(p)
    k = int(np.argmax(di))  # first occurrence: lexicographically smallest
    return float(di[k]), theta[k]


def finite_horizon_bruteforce(kernel: ChannelKernel, n: int, conditioning: str = "output",
                              grid_points: int = 11, initial_output: BinaryDist | None = None,
                              budget: int = DEFAULT_BUDGET, workers: int = 1,
                              chunk_size: int | None = None) -> OracleReport:
    """Exhaustive search of history policies on a uniform grid.

    Returns ``max (1/(n+1)) I(A^n -> B^n)``. Ties go to the lexicographically
    smallest parameter vector, so the result does not depend on ``workers``.
    """
    if n < 0:
        raise ValidationError("horizon must be >= 0")
    if grid_points < 2:
        raise ValidationError("need at least two grid points")
    init = BinaryDist.uniform() if initial_output is None else initial_output
    nparams = parameter_count(n, conditioning)
    total = grid_points**nparams
    if total > budget:
        raise BudgetError(total, budget)
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 1.0, grid_points)
    if chunk_size is None:
        chunk_size = max(1, (1 << 22) // (2 ** (2 * n + 3)))
    tasks = [
        (kernel, n, conditioning, grid, init, s, min(s + chunk_size, total), nparams)
        for s in range(0, total, chunk_size)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_grid_chunk, tasks))
    else:
        results = [_grid_chunk(t) for t in tasks]
    best_val, best_theta = -np.inf, None
    for val, theta in results:
        if val > best_val:
            best_val, best_theta = val, theta
    return OracleReport(
        best_value=best_val / (n + 1),
        best_policy=HistoryPolicy.from_params(n, conditioning, best_theta),
        grid_resolution=1.0 / (grid_points - 1),
        constraint_residual=0.0,
        evaluations=total,
        wall_time=time.perf_counter() - t0,
        extra={"horizon": n, "conditioning": conditioning, "parameters": nparams},
    )


# ---------------------------------------------------------------------------
# no-feedback checks


@dataclass
class NofbEquivalence:
    policy_residual: float
    output_residual: float
    markov: MarkovPolicy
    induced_policy: np.ndarray
    induced_output: np.ndarray
    stationary: np.ndarray  # over (a, b), index 2a + b

    @property
    def max_residual(self) -> float:
        return max(self.policy_residual, self.output_residual)

    def to_dict(self) -> dict:
        return {
            "policy_residual": self.policy_residual,
            "output_residual": self.output_residual,
            "markov_input": self.markov.to_dict(),
            "induced_P(a|b_prev)": self.induced_policy.tolist(),
            "induced_P(b|b_prev)": self.induced_output.tolist(),
        }


def markov_joint_chain(kernel: ChannelKernel, policy: MarkovPolicy) -> np.ndarray:
    """Transition matrix of ``(A_i, B_i)`` under a Markov input; state index ``2a + b``."""
    M = policy.as_array()
    K = kernel.p
    T = np.zeros((4, 4))
    for ap, bp, a, b in itertools.product((0, 1), repeat=4):
        T[2 * ap + bp, 2 * a + b] = M[ap, a] * K[a, bp, b]
    return T


def verify_nofb_equivalence(params: BsscParams, kappa: float) -> NofbEquivalence:
    """Compare the stationary ``P(a_i | b_{i-1})`` of the Markov input with the feedback optimum."""
    markov = markov_nofb_policy(params, kappa)
    kernel = bssc_kernel(params)
    M = markov.as_array()
    K = kernel.p
    pi = stationary_power(markov_joint_chain(kernel, markov)).reshape(2, 2)  # [a_prev, b_prev]
    joint_a_bp = np.einsum("pb,pa->ba", pi, M)  # [b_prev, a]
    pb = joint_a_bp.sum(axis=1, keepdims=True)
    induced = joint_a_bp / pb
    out = np.einsum("ba,abc->bc", induced, K)
    lam = lambda_of(params, kappa)
    target_in = np.array([[kappa, 1.0 - kappa], [1.0 - kappa, kappa]])
    target_out = np.array([[lam, 1.0 - lam], [1.0 - lam, lam]])
    return NofbEquivalence(
        policy_residual=float(np.abs(induced - target_in).max()),
        output_residual=float(np.abs(out - target_out).max()),
        markov=markov,
        induced_policy=induced,
        induced_output=out,
        stationary=pi.reshape(-1),
    )


def _markov_rates_batch(K: np.ndarray, M: np.ndarray, horizon: int,
                        init_b: np.ndarray, init_a: np.ndarray) -> np.ndarray:
    """Exact ``I(A^n; B^n | B_{-1})`` for a batch of Markov matrices ``M[batch, a_prev, a]``."""
    batch = M.shape[0]
    w = np.broadcast_to(np.outer(init_b, init_a), (batch, 2, 2)).copy()  # [hist, a_prev]
    hK = binary_entropy_array(K[..., 0])  # [a, b_prev]
    noise = np.zeros(batch)
    for _ in range(horizon + 1):
        pa = np.einsum("nhp,npa->nha", w, M)
        last = np.arange(w.shape[1]) & 1
        noise += np.einsum("nha,ha->n", pa, hK[:, last].T)
        # new history index = 2 * hist + b
        w = np.einsum("nha,ahb->nhba", pa, K[:, last, :]).reshape(batch, -1, 2)
    hb = -xlog2x(w.sum(axis=2)).sum(axis=1)
    h0 = -xlog2x(init_b).sum()
    return hb - h0 - noise


def markov_input_rate(kernel: ChannelKernel, policy: MarkovPolicy, horizon: int,
                      initial_output: BinaryDist | None = None,
                      initial_input: BinaryDist | None = None) -> float:
    """Exact ``(1/(n+1)) I(A^n; B^n | B_{-1})`` for a Markov input without feedback.

    ``a_{-1}`` defaults to the stationary law of the input chain.
    """
    init_b = (BinaryDist.uniform() if initial_output is None else initial_output).as_array()
    if initial_input is None:
        M = policy.as_array()
        off = M[0, 1] + M[1, 0]
        init_a = np.array([M[1, 0] / off, M[0, 1] / off]) if off > 0 else np.array([0.5, 0.5])
    else:
        init_a = initial_input.as_array()
    val = _markov_rates_batch(kernel.p, policy.as_array()[None], horizon, init_b, init_a)[0]
    return float(val) / (horizon + 1)


def nofb_markov_grid(kernel: ChannelKernel, horizon: int, grid_points: int = 101,
                     initial_output: BinaryDist | None = None) -> OracleReport:
    """Grid search over Markov inputs of the exact finite-horizon no-feedback rate.

    ``a_{-1}`` is uniform for every candidate.
    """
    t0 = time.perf_counter()
    g = np.linspace(0.0, 1.0, grid_points)
    X, Y = np.meshgrid(g, g, indexing="ij")
    x, y = X.ravel(), Y.ravel()
    M = np.stack([np.stack([x, 1 - x], -1), np.stack([y, 1 - y], -1)], axis=1)
    init_b = (BinaryDist.uniform() if initial_output is None else initial_output).as_array()
    vals = _markov_rates_batch(kernel.p, M, horizon, init_b, np.array([0.5, 0.5])) / (horizon + 1)
    k = int(np.argmax(vals))
    return OracleReport(
        best_value=float(vals[k]),
        best_policy=MarkovPolicy(Matrix2.from_array(M[k])),
        grid_resolution=1.0 / (grid_points - 1),
        constraint_residual=0.0,
        evaluations=int(vals.size),
        wall_time=time.perf_counter() - t0,
        extra={"horizon": horizon},
    )
