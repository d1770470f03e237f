"""Monte Carlo simulation of an input policy driving a unit-memory channel."""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelKernel, FeedbackPolicy, MarkovPolicy
from .errors import InsufficientDataError, ValidationError
from .probability import xlog2x

GENERATOR = "numpy.random.PCG64"
MIN_STEPS = 1000
TRACE_MAGIC = b"BSSCTRC1"


@dataclass(frozen=True, eq=False)
class Trace:
    """Simulated sequences. ``b_init`` is ``b_{-1}``, the output preceding ``b[0]``."""

    a: np.ndarray
    b: np.ndarray
    s: np.ndarray
    b_init: int
    seed: int
    steps: int
    burn_in: int = 0
    generator: str = GENERATOR

    @property
    def b_prev(self) -> np.ndarray:
        return np.concatenate([[self.b_init], self.b[:-1]]).astype(np.uint8)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "a", "b", "s"])
        w.writerows(zip(range(self.steps), self.a.tolist(), self.b.tolist(), self.s.tolist()))
        return buf.getvalue()

    def to_bytes(self) -> bytes:
        """Packed format: magic, steps (u64), seed (i64), b_init (u8), then bit-packed a, b, s."""
        head = TRACE_MAGIC + struct.pack("<QqB", self.steps, self.seed, self.b_init)
        return head + b"".join(np.packbits(x).tobytes() for x in (self.a, self.b, self.s))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Trace":
        if data[:8] != TRACE_MAGIC:
            raise ValidationError("not a packed trace")
        steps, seed, b_init = struct.unpack("<QqB", data[8:25])
        nbytes = (steps + 7) // 8
        body = np.frombuffer(data[25:], dtype=np.uint8)
        parts = [np.unpackbits(body[k * nbytes:(k + 1) * nbytes])[:steps] for k in range(3)]
        return cls(parts[0], parts[1], parts[2], int(b_init), int(seed), int(steps))


@dataclass
class EmpiricalEstimate:
    rate_hat: float
    cost_hat: float
    stderr_rate: float
    stderr_cost: float
    transition_counts: np.ndarray  # [b_prev, a, b]
    steps: int
    block_length: int = 100
    resamples: int = 200
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rate_hat": self.rate_hat,
            "cost_hat": self.cost_hat,
            "stderr_rate": self.stderr_rate,
            "stderr_cost": self.stderr_cost,
            "transition_counts": self.transition_counts.tolist(),
            "counts_layout": "[b_prev][a][b]",
            "steps": self.steps,
            "block_length": self.block_length,
            "resamples": self.resamples,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def simulate(kernel: ChannelKernel, policy: FeedbackPolicy | MarkovPolicy, steps: int,
             seed: int = 0, burn_in: int = 1000) -> Trace:
    """Run the closed loop for ``burn_in + steps`` steps and keep the last ``steps``.

    ``b_{-1}`` (and ``a_{-1}`` for a Markov input) start uniform. A feedback
    policy draws ``a_i`` given ``b_{i-1}``; a Markov policy given ``a_{i-1}``.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if burn_in < 0:
        raise ValidationError("burn_in must be >= 0")
    if isinstance(policy, FeedbackPolicy):
        feedback = True
    elif isinstance(policy, MarkovPolicy):
        feedback = False
    else:
        raise ValidationError(f"unsupported policy type {type(policy).__name__}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    total = burn_in + steps
    u = rng.random(total).tolist()
    v = rng.random(total).tolist()
    b = int(rng.integers(2))
    a = int(rng.integers(2))
    p0 = policy.as_array()[:, 0].tolist()  # P(a=0 | conditioning symbol)
    k0 = kernel.p[..., 0].tolist()  # P(b=0 | a, b_prev)
    A = bytearray(total)
    B = bytearray(total)
    b_init = b
    for i in range(total):
        if i == burn_in:
            b_init = b
        a = 0 if u[i] < p0[b if feedback else a] else 1
        b = 0 if v[i] < k0[a][b] else 1
        A[i] = a
        B[i] = b
    a_arr = np.frombuffer(bytes(A[burn_in:]), dtype=np.uint8).copy()
    b_arr = np.frombuffer(bytes(B[burn_in:]), dtype=np.uint8).copy()
    b_prev = np.concatenate([[b_init], b_arr[:-1]]).astype(np.uint8)
    return Trace(a_arr, b_arr, a_arr ^ b_prev, int(b_init), int(seed), int(steps), int(burn_in))


def replicate_seeds(master_seed: int, n: int) -> list[int]:
    """Independent per-replication seeds derived from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]


def _rate_from_counts(counts: np.ndarray) -> np.ndarray:
    """Plug-in ``H(B|B_prev) - H(B|A,B_prev)`` for count tables ``[..., b_prev, a, b]``."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=(-3, -2, -1))
    n = np.where(n > 0, n, 1.0)
    c_bb = counts.sum(axis=-2)  # [b_prev, b]
    c_b = c_bb.sum(axis=-1)
    c_ab = counts.sum(axis=-1)  # [b_prev, a]
    # H(B|B_prev) = H(B_prev, B) - H(B_prev), etc., from raw counts
    h_joint_bb = -xlog2x(c_bb / n[..., None, None]).sum(axis=(-2, -1))
    h_bprev = -xlog2x(c_b / n[..., None]).sum(axis=-1)
    h_all = -xlog2x(counts / n[..., None, None, None]).sum(axis=(-3, -2, -1))
    h_ab = -xlog2x(c_ab / n[..., None, None]).sum(axis=(-2, -1))
    return (h_joint_bb - h_bprev) - (h_all - h_ab)


def _cost_from_counts(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=(-3, -2, -1))
    same = counts[..., 0, 0, :].sum(axis=-1) + counts[..., 1, 1, :].sum(axis=-1)
    return same / np.where(n > 0, n, 1.0)


def estimate(trace: Trace, block_length: int = 100, resamples: int = 200,
             seed: int = 0) -> EmpiricalEstimate:
    """Plug-in rate and cost with non-overlapping block-bootstrap standard errors."""
    if trace.steps < MIN_STEPS:
        raise InsufficientDataError(f"need at least {MIN_STEPS} steps, got {trace.steps}")
    bp = trace.b_prev.astype(np.intp)
    cell = 4 * bp + 2 * trace.a.astype(np.intp) + trace.b.astype(np.intp)
    counts = np.bincount(cell, minlength=8).reshape(2, 2, 2)
    nblocks = trace.steps // block_length
    blocks = np.zeros((nblocks, 8))
    used = nblocks * block_length
    rows = np.repeat(np.arange(nblocks), block_length)
    np.add.at(blocks, (rows, cell[:used]), 1.0)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    pick = rng.integers(0, nblocks, size=(resamples, nblocks))
    boot = np.stack([blocks[p].sum(axis=0) for p in pick]).reshape(resamples, 2, 2, 2)
    rates = _rate_from_counts(boot)
    costs = _cost_from_counts(boot)
    return EmpiricalEstimate(
        rate_hat=float(_rate_from_counts(counts)),
        cost_hat=float(_cost_from_counts(counts)),
        stderr_rate=float(rates.std(ddof=1)),
        stderr_cost=float(costs.std(ddof=1)),
        transition_counts=counts,
        steps=trace.steps,
        block_length=block_length,
        resamples=resamples,
        extra={"seed": trace.seed, "generator": trace.generator, "burn_in": trace.burn_in},
    )
