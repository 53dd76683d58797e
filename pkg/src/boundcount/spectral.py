"""Eigenvalue counting for Dirichlet truncations of -Delta + V on the half-line.

The truncation to sites 1..L is the symmetric tridiagonal matrix with
diagonal 2 + V(n) and off-diagonal -1.  Counts below a threshold ``lam`` are
obtained three ways: negative LDL^T pivots (:func:`sturm_count`), sign flips
of the Dirichlet solution (:func:`node_count`), and a dense eigensolver used
only as a test oracle (:func:`dense_count_oracle`).  All counts use the
closed interval (-inf, lam].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Literal, Optional

import numpy as np

from . import _kernels
from .potential import PotentialSpec, Scaled, values

__all__ = [
    "CountOptions",
    "CountResult",
    "IntervalCount",
    "sturm_count",
    "node_count",
    "prefix_counts",
    "dense_count_oracle",
    "dense_matrix",
    "count_bound_states",
    "effective_coupling",
    "whole_line_count",
    "top_band_count",
]

Method = Literal["sturm", "nodes", "dense"]

BLOCK = 1 << 18
DENSE_MAX = 512
C_EFF_SCAN = 10_000


@dataclass(frozen=True)
class CountOptions:
    """Knobs for adaptive counting.

    ``L`` pins a fixed truncation and bypasses the doubling schedule; the
    result then carries ``converged=False`` since no stability was checked.
    """

    method: Method = "nodes"
    safety: float = 4.0
    L_min: int = 1024
    L_max: int = 2**31
    L: Optional[int] = None

    def __post_init__(self):
        if self.method not in ("sturm", "nodes", "dense"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.safety >= 1:
            raise ValueError("safety factor must be >= 1")
        if self.L_min < 1 or self.L_max < self.L_min:
            raise ValueError("need 1 <= L_min <= L_max")
        if self.L is not None and self.L < 1:
            raise ValueError("fixed truncation L must be >= 1")


@dataclass(frozen=True)
class CountResult:
    E: float
    count: int
    L: int
    method: str
    converged: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IntervalCount:
    lower: int
    upper: int


def _check(lam: float, L: int) -> None:
    if not math.isfinite(lam):
        raise ValueError(f"threshold must be finite, got {lam!r}")
    if int(L) != L or L < 1:
        raise ValueError(f"truncation size must be a positive integer, got {L!r}")


def prefix_counts(
    potential: PotentialSpec,
    lam: float,
    checkpoints: Iterable[int],
    method: Method = "nodes",
    scale: float = 1.0,
) -> list[int]:
    """Counts on sites 1..L for every L in ``checkpoints`` from a single sweep.

    Both recurrences are causal, so the count for a truncation is a prefix of
    the count for any longer one.  ``scale`` multiplies the initial data of
    the node recurrence (any positive value gives the same answer).
    """
    checkpoints = [int(L) for L in checkpoints]
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    for L in checkpoints:
        _check(lam, L)
    if not scale > 0:
        raise ValueError("initial data scale must be positive")
    sweep = _Sweep(potential, float(lam), method, scale)
    return [sweep.advance(L) for L in checkpoints]


def sturm_count(potential: PotentialSpec, lam: float, L: int) -> int:
    """Number of eigenvalues <= lam of the L-site truncation, from negative pivots."""
    return prefix_counts(potential, lam, [L], "sturm")[0]


def node_count(potential: PotentialSpec, lam: float, L: int, scale: float = 1.0) -> int:
    """Number of sign flips of the Dirichlet solution on sites 1..L.

    A node sits at n when u(n+1) = 0 or u(n) u(n+1) < 0.  By oscillation
    theory this equals :func:`sturm_count`.
    """
    return prefix_counts(potential, lam, [L], "nodes", scale=scale)[0]


def dense_matrix(potential: PotentialSpec, L: int) -> np.ndarray:
    if L > DENSE_MAX:
        raise ValueError(f"dense form is limited to L <= {DENSE_MAX}, got {L}")
    diag = 2.0 + values(potential, 1, L + 1)
    off = -np.ones(L - 1)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def dense_count_oracle(potential: PotentialSpec, lam: float, L: int) -> int:
    """Count eigenvalues <= lam with a full symmetric eigensolve (LAPACK syevd).

    A slack of 1e-12 * max(1, |lam|) absorbs eigensolver rounding on ties.
    """
    _check(lam, L)
    eig = np.linalg.eigvalsh(dense_matrix(potential, L))
    return int(np.count_nonzero(eig <= lam + 1e-12 * max(1.0, abs(lam))))


def effective_coupling(potential: PotentialSpec) -> float:
    """max(1/4, sup n^2 |V(n)|) over the first 10^4 sites."""
    n = np.arange(1, C_EFF_SCAN + 1, dtype=np.float64)
    v = values(potential, 1, C_EFF_SCAN + 1)
    return max(0.25, float(np.max(n * n * np.abs(v))))


def count_bound_states(
    potential: PotentialSpec, E: float, opts: CountOptions | None = None
) -> CountResult:
    """Estimate N_E, the number of eigenvalues <= -E of the half-line operator.

    Starts at L0 = max(L_min, ceil(K sqrt(c_eff / E))) and doubles L until
    the count at L, 2L and 4L agrees, or until ``L_max`` stops the schedule.
    Because each count is a prefix of the next, the whole schedule costs one
    sweep to the final truncation.
    """
    opts = opts or CountOptions()
    if not (E > 0 and math.isfinite(E)):
        raise ValueError(f"E must be positive and finite, got {E!r}")
    lam = -float(E)

    if opts.L is not None:
        if opts.method == "dense":
            count = dense_count_oracle(potential, lam, opts.L)
        else:
            count = prefix_counts(potential, lam, [opts.L], opts.method)[0]
        return CountResult(E=float(E), count=count, L=opts.L, method=opts.method, converged=False)
    if opts.method == "dense":
        raise ValueError("the dense oracle needs a fixed truncation L")

    c_eff = effective_coupling(potential)
    L0 = max(opts.L_min, math.ceil(opts.safety * math.sqrt(c_eff / E)))
    L0 = min(L0, opts.L_max)
    schedule = [L0]
    while schedule[-1] * 2 <= opts.L_max:
        schedule.append(schedule[-1] * 2)

    state = _Sweep(potential, lam, opts.method)
    counts = []
    for L in schedule:
        counts.append(state.advance(L))
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            return CountResult(float(E), counts[-1], L, opts.method, True)
    return CountResult(float(E), counts[-1], schedule[-1], opts.method, False)


class _Sweep:
    """Resumable recurrence sweep used by the doubling schedule."""

    def __init__(self, potential, lam, method, scale=1.0):
        self.potential = potential
        self.lam = lam
        if method == "sturm":
            self.step = _kernels.pivot_block
            self.state = (np.inf, np.inf, 0)
        elif method == "nodes":
            self.step = _kernels.node_block
            self.state = (float(scale), float(scale), 0)
        else:
            raise ValueError(f"recurrence counting needs sturm or nodes, got {method!r}")
        self.pos = 1

    def advance(self, L: int) -> int:
        while self.pos <= L:
            stop = min(L + 1, self.pos + BLOCK)
            self.state = self.step(values(self.potential, self.pos, stop), self.lam, *self.state)
            self.pos = stop
        return int(self.state[2])


def whole_line_count(
    left: PotentialSpec,
    right: PotentialSpec,
    E: float,
    opts: CountOptions | None = None,
) -> IntervalCount:
    """Bracket the whole-line count N_E by decoupling sites 0 and 1.

    ``left`` is read as a half-line potential in m = 1 - n (site 0 is m = 1),
    ``right`` covers n >= 1.  Dropping the two couplings between sites 0 and
    1 is a rank-two perturbation with one positive and one negative
    eigenvalue, so the whole-line count lies within one of the sum of the
    half-line counts.  With a fixed truncation ``opts.L`` the halves are
    sites -L..0 (L + 1 sites) and 1..L, matching the window [-L, L].
    """
    opts = opts or CountOptions()
    if opts.L is not None:
        left_res = count_bound_states(left, E, replace(opts, L=opts.L + 1))
    else:
        left_res = count_bound_states(left, E, opts)
    right_res = count_bound_states(right, E, opts)
    s = left_res.count + right_res.count
    return IntervalCount(lower=max(0, s - 1), upper=s + 1)


def top_band_count(
    potential: PotentialSpec, E: float, opts: CountOptions | None = None
) -> CountResult:
    """Number of eigenvalues >= 4 + E, via the reflection u(n) -> (-1)^n u(n).

    The reflection maps -Delta + V to 4 - (-Delta - V), so the count equals
    the bound-state count of -V at the same E.
    """
    return count_bound_states(Scaled(-1.0, potential), E, opts)
