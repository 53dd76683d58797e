"""Bound-state asymptotics for inverse-square potentials.

Counting curves N_E over geometric energy grids, their logarithmic slope
against the predicted sqrt(c - 1/4) / (2 pi), sign-flip growth of the
zero-energy solution, the finite/infinite classification near c = 1/4, the
splitting inequalities for N_E, and the constant-depth box count.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .potential import (
    CompactSupport,
    Indicator,
    InverseSquare,
    PotentialSpec,
    Scaled,
    Sum,
)
from .spectral import CountOptions, CountResult, count_bound_states, prefix_counts

__all__ = [
    "EnergyGrid",
    "CurveEntry",
    "CountingCurve",
    "SlopeReport",
    "LemmaReport",
    "BoxCount",
    "KneserClass",
    "theoretical_slope",
    "counting_curve",
    "slope_estimate",
    "node_growth_curve",
    "node_growth_slope",
    "kneser_classify",
    "classify_curve",
    "verify_splitting_inequalities",
    "random_lemma_instance",
    "explicit_box_count",
]

CSV_HEADER = ("E", "negLnE", "count", "L", "method", "converged")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class EnergyGrid:
    E_min: float
    E_max: float
    points_per_decade: int

    def __post_init__(self):
        if not (0 < self.E_min < self.E_max and math.isfinite(self.E_max)):
            raise ValueError("need 0 < E_min < E_max < inf")
        if int(self.points_per_decade) != self.points_per_decade or self.points_per_decade < 1:
            raise ValueError("points_per_decade must be a positive integer")

    def energies(self) -> list[float]:
        """E_max * 10**(-k / points_per_decade), descending, stopping at E_min."""
        out = []
        k = 0
        floor = self.E_min * (1 - 1e-12)
        while True:
            E = self.E_max * 10.0 ** (-k / self.points_per_decade)
            if E < floor:
                return out
            out.append(E)
            k += 1


@dataclass(frozen=True)
class CurveEntry:
    E: float
    negLnE: float
    result: CountResult


@dataclass(frozen=True)
class CountingCurve:
    entries: tuple[CurveEntry, ...]

    def converged(self) -> list[CurveEntry]:
        return [e for e in self.entries if e.result.converged]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e in self.entries:
            r = e.result
            writer.writerow(
                [_g17(e.E), _g17(e.negLnE), r.count, r.L, r.method, "true" if r.converged else "false"]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountingCurve":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"expected CSV header {','.join(CSV_HEADER)}, got {header}")
        entries = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"malformed curve row {row}")
            E, neg, count, L, method, conv = row
            if conv not in ("true", "false"):
                raise ValueError(f"converged must be true/false, got {conv!r}")
            result = CountResult(float(E), int(count), int(L), method, conv == "true")
            entries.append(CurveEntry(float(E), float(neg), result))
        return cls(tuple(entries))


@dataclass(frozen=True)
class SlopeReport:
    slope: float
    intercept: float
    stderr: float
    theoretical: float
    relative_error: Optional[float]
    window: tuple[float, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


@dataclass(frozen=True)
class LemmaReport:
    E: float
    epsilon: float
    L: int
    lhs: int
    upper_rhs_sum: int
    lower_rhs_diff: int
    upper_holds: bool
    lower_holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoxCount:
    engine: int
    closed_form: int

    def to_dict(self) -> dict:
        return asdict(self)


class KneserClass(str, enum.Enum):
    FINITE = "Finite"
    INFINITE = "Infinite"
    UNDETERMINED = "Undetermined"


def theoretical_slope(c: float) -> float:
    """sqrt(c - 1/4) / (2 pi) above the critical coupling, 0 at or below it."""
    if not math.isfinite(c):
        raise ValueError(f"c must be finite, got {c!r}")
    if c <= 0.25:
        return 0.0
    return math.sqrt(c - 0.25) / (2 * math.pi)


def counting_curve(
    potential: PotentialSpec,
    grid: EnergyGrid,
    opts: CountOptions | None = None,
    workers: int = 1,
) -> CountingCurve:
    """N_E at every grid energy.  Non-converged points are flagged, not dropped."""
    energies = grid.energies()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda E: count_bound_states(potential, E, opts), energies))
    else:
        results = [count_bound_states(potential, E, opts) for E in energies]
    return CountingCurve(tuple(CurveEntry(E, -math.log(E), r) for E, r in zip(energies, results)))


def _ols(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(y) == 0:
        # linregress reports nan stderr for an exactly flat line
        return 0.0, float(y[0]), 0.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.intercept), float(fit.stderr)


def slope_estimate(curve: CountingCurve, c: float | None = None) -> SlopeReport:
    """Least-squares slope of N_E against -ln E over the converged entries."""
    pts = curve.converged()
    if len(pts) < 3:
        raise ValueError(f"slope needs at least 3 converged entries, got {len(pts)}")
    slope, intercept, stderr = _ols([p.negLnE for p in pts], [p.result.count for p in pts])
    theory = theoretical_slope(c) if c is not None else 0.0
    rel = abs(slope - theory) / theory if theory > 0 else None
    Es = [p.E for p in pts]
    return SlopeReport(slope, intercept, stderr, theory, rel, (min(Es), max(Es)))


def node_growth_curve(c: float, N_values: Sequence[int]) -> list[tuple[float, int]]:
    """(ln N, sign flips of the zero-energy solution of -Delta + V_c on 1..N).

    The leading-order growth in ln N is sqrt(c - 1/4) / pi.
    """
    if not c > 0.25:
        raise ValueError(f"node growth needs c > 1/4, got {c!r}")
    Ns = [int(N) for N in N_values]
    counts = prefix_counts(InverseSquare(c), 0.0, Ns, "nodes")
    return [(math.log(N), k) for N, k in zip(Ns, counts)]


def node_growth_slope(pairs: Sequence[tuple[float, int]]) -> tuple[float, float]:
    """Regression slope (and its standard error) of node count against ln N."""
    slope, _, stderr = _ols([p[0] for p in pairs], [p[1] for p in pairs])
    return slope, stderr


def classify_curve(curve: CountingCurve, saturation_window: int = 5) -> KneserClass:
    """Finite/Infinite/Undetermined from the tail of a counting curve.

    Finite: the last ``saturation_window`` entries share one count.
    Infinite: the tail is non-decreasing and ends higher than it starts,
    i.e. new eigenvalues keep arriving as E decreases.
    Anything else, including an unconverged tail entry, is Undetermined.
    """
    if saturation_window < 2:
        raise ValueError("saturation_window must be >= 2")
    tail = curve.entries[-saturation_window:]
    if len(tail) < saturation_window or not all(e.result.converged for e in tail):
        return KneserClass.UNDETERMINED
    counts = [e.result.count for e in tail]
    if len(set(counts)) == 1:
        return KneserClass.FINITE
    if all(a <= b for a, b in zip(counts, counts[1:])) and counts[-1] > counts[0]:
        return KneserClass.INFINITE
    return KneserClass.UNDETERMINED


def kneser_classify(
    potential: PotentialSpec,
    grid: EnergyGrid,
    saturation_window: int = 5,
    opts: CountOptions | None = None,
) -> KneserClass:
    return classify_curve(counting_curve(potential, grid, opts), saturation_window)


def verify_splitting_inequalities(
    V: PotentialSpec,
    W: PotentialSpec,
    E: float,
    epsilon: float,
    L: int,
    method: str = "sturm",
) -> LemmaReport:
    """Check both splitting inequalities for N_E at one common truncation L.

    upper: N(V + W) <= N(V / (1 - eps)) + N(W / eps)
    lower: N(V + W) >= N((1 - eps) V) - N(-(1 - eps) / eps * W)

    Both follow from writing one operator as a convex combination of the
    other two, which is exact for finite matrices.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not E > 0:
        raise ValueError("E must be positive")
    opts = CountOptions(method=method, L=L)

    def N(p):
        return count_bound_states(p, E, opts).count

    lhs = N(Sum((V, W)))
    upper = N(Scaled(1.0 / (1.0 - epsilon), V)) + N(Scaled(1.0 / epsilon, W))
    lower = N(Scaled(1.0 - epsilon, V)) - N(Scaled(-(1.0 - epsilon) / epsilon, W))
    return LemmaReport(
        E=float(E),
        epsilon=float(epsilon),
        L=int(L),
        lhs=lhs,
        upper_rhs_sum=upper,
        lower_rhs_diff=lower,
        upper_holds=lhs <= upper,
        lower_holds=lhs >= lower,
    )


EPSILONS = tuple(round(0.1 * k, 1) for k in range(1, 10))


def random_lemma_instance(rng: np.random.Generator, L_max: int = 200):
    """(V, W, E, epsilon, L) with V, W supported on 1..L with values in [-3, 0]."""
    L = int(rng.integers(1, L_max + 1))
    V = CompactSupport(tuple(rng.uniform(-3.0, 0.0, int(rng.integers(1, L + 1)))))
    W = CompactSupport(tuple(rng.uniform(-3.0, 0.0, int(rng.integers(1, L + 1)))))
    E = float(10.0 ** rng.uniform(-3.0, 0.0))
    epsilon = float(rng.choice(EPSILONS))
    return V, W, E, epsilon, L


def explicit_box_count(E: float, epsilon: float, c: float, method: str = "nodes") -> BoxCount:
    """Count for the constant-depth box -Delta - (1/eps) chi_{E/(1-eps), c} at energy -E.

    ``engine`` runs the counting recurrence on the box truncation
    L = floor(sqrt(c (1 - eps) / E)).  ``closed_form`` is floor(k L / pi)
    for the sine solution, where 2 - 2 cos k = E (1 / (eps (1 - eps)) - 1).
    The exact Dirichlet count on 1..L is floor(k (L + 1) / pi), so the two
    can differ by one.
    """
    if not (E > 0 and 0 < epsilon < 1 and c > 0.25):
        raise ValueError("need E > 0, 0 < epsilon < 1, c > 1/4")
    L = math.floor(math.sqrt(c * (1 - epsilon) / E))
    if L < 1:
        raise ValueError(f"box is empty for E={E}, epsilon={epsilon}, c={c}")
    box = Scaled(-1.0 / epsilon, Indicator(E / (1 - epsilon), c))
    engine = count_bound_states(box, E, CountOptions(method=method, L=L)).count
    return BoxCount(engine=engine, closed_form=box_closed_form(E, epsilon, L))


def box_wavenumber(E: float, epsilon: float) -> float:
    """k in (0, pi] with 2 - 2 cos k = E (1 / (eps (1 - eps)) - 1)."""
    kappa = E * (1.0 / (epsilon * (1 - epsilon)) - 1.0)
    return 2.0 * math.asin(min(1.0, math.sqrt(kappa) / 2.0))


def box_closed_form(E: float, epsilon: float, L: int) -> int:
    return min(L, math.floor(box_wavenumber(E, epsilon) * L / math.pi))
