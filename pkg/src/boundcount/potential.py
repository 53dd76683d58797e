"""Potential sequences V(n), n >= 1, for half-line lattice operators.

Potentials are small immutable trees evaluated lazily by closed form.  The
evaluation path is vectorized over integer index ranges so the spectral
kernels can stream values block by block without ever building an array of
the full truncation length.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "InverseSquare",
    "Indicator",
    "EnergyShifted",
    "PowerDecay",
    "CompactSupport",
    "Scaled",
    "Sum",
    "PotentialSpec",
    "ZERO",
    "evaluate",
    "values",
    "reference_solution",
    "reference_potential",
    "hypothesis_weight",
    "parse",
    "format_spec",
    "PotentialParseError",
]


@dataclass(frozen=True)
class InverseSquare:
    """V_c(n) = -c / n**2."""

    c: float

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"inverse_square needs finite c > 0, got {self.c!r}")


@dataclass(frozen=True)
class Indicator:
    """E on the cutoff set {n : n*n*E <= c}, 0 elsewhere."""

    E: float
    c: float

    def __post_init__(self):
        if not (self.E > 0 and self.c > 0):
            raise ValueError("indicator needs E > 0 and c > 0")


@dataclass(frozen=True)
class EnergyShifted:
    """V_c - E on the cutoff set {n : n*n*E <= c}, V_c elsewhere."""

    E: float
    c: float

    def __post_init__(self):
        if not (self.E > 0 and self.c > 0):
            raise ValueError("energy_shifted needs E > 0 and c > 0")


@dataclass(frozen=True)
class PowerDecay:
    """W(n) = a * n**(-p)."""

    a: float
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"power decay needs p > 0, got {self.p!r}")


@dataclass(frozen=True)
class CompactSupport:
    """Finitely many values starting at n = 1, zero afterwards."""

    values: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("compact support values must be finite")


@dataclass(frozen=True)
class Scaled:
    gamma: float
    inner: "PotentialSpec"


@dataclass(frozen=True)
class Sum:
    terms: tuple["PotentialSpec", ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


PotentialSpec = Union[
    InverseSquare, Indicator, EnergyShifted, PowerDecay, CompactSupport, Scaled, Sum
]

ZERO = CompactSupport(())


def _indicator_mask(n: np.ndarray, E: float, c: float) -> np.ndarray:
    # inclusive boundary, no square root
    return n * n * E <= c


def values(spec: PotentialSpec, start: int, stop: int) -> np.ndarray:
    """Evaluate ``spec`` at n = start, ..., stop - 1 as a float64 array."""
    if start < 1:
        raise ValueError(f"sites start at n = 1, got start={start}")
    if stop < start:
        raise ValueError("stop must be >= start")
    n = np.arange(start, stop, dtype=np.float64)
    return _values(spec, n, start, stop)


def _values(spec, n, start, stop):
    if isinstance(spec, InverseSquare):
        return -spec.c / (n * n)
    if isinstance(spec, Indicator):
        return np.where(_indicator_mask(n, spec.E, spec.c), spec.E, 0.0)
    if isinstance(spec, EnergyShifted):
        vc = -spec.c / (n * n)
        return vc - np.where(_indicator_mask(n, spec.E, spec.c), spec.E, 0.0)
    if isinstance(spec, PowerDecay):
        return spec.a * n ** (-spec.p)
    if isinstance(spec, CompactSupport):
        out = np.zeros(stop - start)
        vals = spec.values
        hi = min(stop, len(vals) + 1)
        if hi > start:
            out[: hi - start] = vals[start - 1 : hi - 1]
        return out
    if isinstance(spec, Scaled):
        return spec.gamma * _values(spec.inner, n, start, stop)
    if isinstance(spec, Sum):
        out = np.zeros(stop - start)
        for term in spec.terms:
            out = out + _values(term, n, start, stop)
        return out
    raise TypeError(f"not a potential spec: {spec!r}")


def evaluate(spec: PotentialSpec, n: int) -> float:
    """Return V(n) for a single site ``n >= 1``."""
    if int(n) != n or n < 1:
        raise ValueError(f"potential is defined for integers n >= 1, got {n!r}")
    n = int(n)
    return float(values(spec, n, n + 1)[0])


def reference_solution(c: float, n) -> complex | np.ndarray:
    """sqrt(n) * exp(i * sqrt(c - 1/4) * ln n).

    Accepts a scalar or an integer array of sites.
    """
    if not c > 0.25:
        raise ValueError(f"reference solution needs c > 1/4, got {c!r}")
    arr = np.asarray(n, dtype=np.float64)
    if np.any(arr < 1):
        raise ValueError("reference solution is defined for n >= 1")
    theta = math.sqrt(c - 0.25)
    out = np.sqrt(arr) * np.exp(1j * theta * np.log(arr))
    return complex(out) if out.ndim == 0 else out


def reference_potential(c: float, n) -> complex | np.ndarray:
    """Complex potential for which the reference solution is an exact zero mode.

    Computed as (u(n+1) - 2u(n) + u(n-1)) / u(n) from ``reference_solution``,
    so (-Delta + potential) u = 0 holds up to rounding.  Requires n >= 2.
    """
    arr = np.asarray(n, dtype=np.float64)
    if np.any(arr < 2):
        raise ValueError("reference potential needs n >= 2")
    up = reference_solution(c, arr + 1)
    u = reference_solution(c, arr)
    um = reference_solution(c, arr - 1)
    out = (up - 2 * u + um) / u
    return complex(out) if np.ndim(out) == 0 else out


def hypothesis_weight(spec: PotentialSpec, cutoff: int, block: int = 1 << 20) -> float:
    """Partial sum of n*|V(n)| for n = 1..cutoff.

    Convergence of this sum as cutoff grows is a sufficient condition for the
    perturbation hypothesis of the inverse-square asymptotics.  The caller
    judges convergence by comparing several cutoffs.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    total = 0.0
    for lo in range(1, cutoff + 1, block):
        hi = min(cutoff + 1, lo + block)
        n = np.arange(lo, hi, dtype=np.float64)
        total += float(math.fsum(n * np.abs(values(spec, lo, hi))))
    return total


# --- canonical text form -------------------------------------------------


class PotentialParseError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z_0-9]*)|([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(.))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        name, num, punct = m.groups()
        if name is not None:
            tokens.append(("name", name))
        elif num is not None:
            tokens.append(("num", num))
        elif punct is not None and not punct.isspace():
            tokens.append(("punct", punct))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def error(self, msg: str):
        raise PotentialParseError(f"{msg} in potential {self.text!r}")

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None:
            self.error("unexpected end of input")
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            self.error(f"expected {value or kind}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def number(self) -> float:
        sign = 1.0
        if self.peek() == ("punct", "-"):
            self.take()
            sign = -1.0
        elif self.peek() == ("punct", "+"):
            self.take()
        tok = self.peek()
        if tok[0] == "name" and tok[1].lower() in ("inf", "nan"):
            self.error("non-finite number")
        value = sign * float(self.take("num"))
        return value

    def keyword_args(self, names: tuple[str, ...]) -> dict[str, float]:
        out = {}
        while True:
            key = self.take("name")
            if key not in names:
                self.error(f"unknown argument {key!r}")
            if key in out:
                self.error(f"duplicate argument {key!r}")
            self.take("punct", "=")
            out[key] = self.number()
            if self.peek() == ("punct", ","):
                self.take()
                continue
            break
        missing = set(names) - set(out)
        if missing:
            self.error(f"missing argument(s) {sorted(missing)}")
        return out

    def spec(self) -> PotentialSpec:
        name = self.take("name")
        self.take("punct", "(")
        try:
            if name == "inverse_square":
                args = self.keyword_args(("c",))
                result = InverseSquare(args["c"])
            elif name == "indicator":
                args = self.keyword_args(("E", "c"))
                result = Indicator(args["E"], args["c"])
            elif name == "energy_shifted":
                args = self.keyword_args(("E", "c"))
                result = EnergyShifted(args["E"], args["c"])
            elif name == "power":
                args = self.keyword_args(("a", "p"))
                result = PowerDecay(args["a"], args["p"])
            elif name == "compact":
                vals = []
                if self.peek() != ("punct", ")"):
                    vals.append(self.number())
                    while self.peek() == ("punct", ","):
                        self.take()
                        vals.append(self.number())
                result = CompactSupport(tuple(vals))
            elif name == "scaled":
                self.take("name", "g")
                self.take("punct", "=")
                gamma = self.number()
                self.take("punct", ",")
                result = Scaled(gamma, self.spec())
            elif name == "sum":
                terms = [self.spec()]
                while self.peek() == ("punct", ","):
                    self.take()
                    terms.append(self.spec())
                result = Sum(tuple(terms))
            else:
                self.error(f"unknown potential {name!r}")
        except ValueError as exc:
            if isinstance(exc, PotentialParseError):
                raise
            self.error(str(exc))
        self.take("punct", ")")
        return result


def parse(text: str) -> PotentialSpec:
    """Parse the canonical text form, e.g. ``sum(inverse_square(c=5),power(a=10,p=3))``."""
    parser = _Parser(text)
    spec = parser.spec()
    if parser.peek()[0] is not None:
        parser.error(f"trailing input {parser.peek()[1]!r}")
    return spec


def _num(x: float) -> str:
    return repr(float(x))


def format_spec(spec: PotentialSpec) -> str:
    """Inverse of :func:`parse`; numbers are written with ``repr`` so they round-trip."""
    if isinstance(spec, InverseSquare):
        return f"inverse_square(c={_num(spec.c)})"
    if isinstance(spec, Indicator):
        return f"indicator(E={_num(spec.E)},c={_num(spec.c)})"
    if isinstance(spec, EnergyShifted):
        return f"energy_shifted(E={_num(spec.E)},c={_num(spec.c)})"
    if isinstance(spec, PowerDecay):
        return f"power(a={_num(spec.a)},p={_num(spec.p)})"
    if isinstance(spec, CompactSupport):
        return "compact(" + ",".join(_num(v) for v in spec.values) + ")"
    if isinstance(spec, Scaled):
        return f"scaled(g={_num(spec.gamma)},{format_spec(spec.inner)})"
    if isinstance(spec, Sum):
        return "sum(" + ",".join(format_spec(t) for t in spec.terms) + ")"
    raise TypeError(f"not a potential spec: {spec!r}")
