"""Digit cost functions, total costs, lattice classification and moment checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Sequence

import numpy as np

from .cf_core import BranchWord, Expansion

KINDS = ("constant", "log", "bitlength", "indicator", "identity", "table")
TAIL_RULES = ("constant", "log", "error")


def _as_exact(v) -> Fraction | None:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, float) and v.is_integer():
        return Fraction(int(v))
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            return None
    return None


@dataclass(frozen=True)
class CostFunction:
    """A real cost on digits ``m >= 1``.

    Builtins: ``constant(v)``, ``log`` (``log m``), ``bitlength``
    (``floor(log2 m) + 1``), ``indicator(a)`` (``[m == a]``), ``identity``
    (``m``); or an explicit ``table`` of ``c(1), ..., c(T)`` completed by a
    tail rule for ``m > T``.
    """
    kind: str
    name: str = ""
    value: Any = None            # constant value (float or Fraction)
    target: int | None = None    # indicator digit
    table: tuple = ()
    tail: str = "constant"
    tail_value: Any = None
    _exact: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == "constant":
            if self.value is None:
                raise ValueError("constant cost needs a value")
            if float(self.value) == 0.0:
                raise ValueError("cost must not be identically zero")
        if self.kind == "indicator" and (self.target is None or self.target < 1):
            raise ValueError("indicator cost needs a target digit >= 1")
        if self.kind == "table":
            if not self.table:
                raise ValueError("table cost needs at least one entry")
            if self.tail not in TAIL_RULES:
                raise ValueError(f"unknown tail rule {self.tail!r}")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())
        # sampled-prefix check for the nonzero requirement
        if not np.any(self.values(np.arange(1, 257)) != 0):
            raise ValueError("cost must not be identically zero")
        if self.kind == "table":
            object.__setattr__(self, "_exact", tuple(_as_exact(v) for v in self.table))

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, v=1, name: str = "") -> "CostFunction":
        return cls("constant", name=name, value=v)

    @classmethod
    def log(cls, name: str = "") -> "CostFunction":
        return cls("log", name=name)

    @classmethod
    def bitlength(cls, name: str = "") -> "CostFunction":
        return cls("bitlength", name=name)

    @classmethod
    def indicator(cls, a: int, name: str = "") -> "CostFunction":
        return cls("indicator", name=name, target=int(a))

    @classmethod
    def identity(cls, name: str = "") -> "CostFunction":
        return cls("identity", name=name)

    @classmethod
    def from_table(cls, values: Sequence, tail: str = "constant", tail_value=None,
                   name: str = "") -> "CostFunction":
        return cls("table", name=name, table=tuple(values), tail=tail, tail_value=tail_value)

    @classmethod
    def from_config(cls, cfg: "dict | str") -> "CostFunction":
        """Build from ``{name, kind, params, table?, tail?}`` (dict or JSON text)."""
        if isinstance(cfg, str):
            cfg = json.loads(cfg)
        kind = cfg.get("kind")
        params = cfg.get("params") or {}
        name = cfg.get("name", "")
        if kind == "constant":
            v = params.get("value", 1)
            return cls.constant(_as_exact(v) if _as_exact(v) is not None else float(v), name)
        if kind == "indicator":
            return cls.indicator(int(params["a"]), name)
        if kind in ("log", "bitlength", "identity"):
            return cls(kind, name=name)
        if kind == "table":
            tail = cfg.get("tail", "constant")
            if isinstance(tail, dict):
                tail_value = tail.get("value")
                tail = tail.get("rule", "constant")
            else:
                tail_value = params.get("tail_value")
            return cls.from_table(cfg["table"], tail=tail, tail_value=tail_value, name=name)
        raise ValueError(f"unknown cost kind {kind!r}")

    @classmethod
    def parse(cls, text: str) -> "CostFunction":
        """Short CLI syntax: ``one``, ``const:2.5``, ``log``, ``bitlength``,
        ``indicator:3``, ``identity``; or inline JSON / a path to a JSON file."""
        t = text.strip()
        if t.startswith("{"):
            return cls.from_config(t)
        if t.endswith(".json"):
            with open(t) as fh:
                return cls.from_config(json.load(fh))
        head, _, arg = t.partition(":")
        if head in ("one", "depth"):
            return cls.constant(1, name="one")
        if head in ("const", "constant"):
            v = _as_exact(arg)
            return cls.constant(v if v is not None else float(arg))
        if head == "indicator":
            return cls.indicator(int(arg))
        if head in ("log", "bitlength", "identity"):
            return cls(head)
        raise ValueError(f"cannot parse cost {text!r}")

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"name": self.name, "kind": "constant", "params": {"value": str(self.value)}}
        if self.kind == "indicator":
            return {"name": self.name, "kind": "indicator", "params": {"a": self.target}}
        if self.kind == "table":
            return {"name": self.name, "kind": "table", "params": {},
                    "table": [str(v) if isinstance(v, Fraction) else v for v in self.table],
                    "tail": {"rule": self.tail, "value": self.tail_value}}
        return {"name": self.name, "kind": self.kind, "params": {}}

    def _default_name(self) -> str:
        if self.kind == "constant":
            return "one" if float(self.value) == 1.0 else f"const({self.value})"
        if self.kind == "indicator":
            return f"indicator({self.target})"
        return self.kind

    # -- evaluation ---------------------------------------------------
    def _tail_const(self) -> float:
        return float(self.tail_value if self.tail_value is not None else self.table[-1])

    def values(self, m) -> np.ndarray:
        """Vectorized ``c(m)`` as float64."""
        m = np.asarray(m, dtype=np.int64)
        if np.any(m < 1):
            raise ValueError("digits are positive integers")
        if self.kind == "constant":
            return np.full(m.shape, float(self.value))
        if self.kind == "log":
            return np.log(m.astype(float))
        if self.kind == "bitlength":
            # exact for m < 2**53 via frexp
            return np.frexp(m.astype(float))[1].astype(float)
        if self.kind == "indicator":
            return (m == self.target).astype(float)
        if self.kind == "identity":
            return m.astype(float)
        tab = np.array([float(v) for v in self.table])
        out = np.empty(m.shape, dtype=float)
        inside = m <= tab.size
        out[inside] = tab[m[inside] - 1]
        beyond = ~inside
        if np.any(beyond):
            if self.tail == "error":
                raise ValueError(f"digit beyond cost table (size {tab.size}) with tail rule 'error'")
            out[beyond] = np.log(m[beyond].astype(float)) if self.tail == "log" else self._tail_const()
        return out

    def __call__(self, m: int) -> float:
        return float(self.values(np.array([m]))[0])

    def exact(self, m: int) -> Fraction | None:
        """Exact rational value of ``c(m)`` when the cost is rational-valued there."""
        if self.kind == "constant":
            return _as_exact(self.value)
        if self.kind == "bitlength":
            return Fraction(int(m).bit_length())
        if self.kind == "indicator":
            return Fraction(int(m == self.target))
        if self.kind == "identity":
            return Fraction(int(m))
        if self.kind == "table":
            if m <= len(self.table):
                return self._exact[m - 1]
            if self.tail == "constant":
                return _as_exact(self.tail_value if self.tail_value is not None else self.table[-1])
            if self.tail == "error":
                raise ValueError("digit beyond cost table with tail rule 'error'")
        return None

    @property
    def is_rational_valued(self) -> bool:
        if self.kind in ("bitlength", "indicator", "identity"):
            return True
        if self.kind == "constant":
            return _as_exact(self.value) is not None
        if self.kind == "table":
            tail_ok = self.tail == "error" or (self.tail == "constant" and _as_exact(
                self.tail_value if self.tail_value is not None else self.table[-1]) is not None)
            return tail_ok and all(v is not None for v in self._exact)
        return False

    def lookup(self, m_max: int) -> np.ndarray:
        """``c(0..m_max)`` as a float64 table (entry 0 unused) for compiled kernels."""
        out = np.zeros(m_max + 1)
        out[1:] = self.values(np.arange(1, m_max + 1))
        return out

    def tail_segments(self, start: int) -> list[tuple[float, float, float, float]] | None:
        """Describe ``c`` on ``[start, inf)`` as pieces ``c(m) = kappa*log(m) + c0``.

        Returns ``(lo, hi, kappa, c0)`` tuples with integer bounds (``hi`` may
        be ``inf``), or ``None`` when the cost has no such description (the
        operator then truncates and reports a bound).
        """
        inf = math.inf
        if self.kind == "constant":
            return [(start, inf, 0.0, float(self.value))]
        if self.kind == "log":
            return [(start, inf, 1.0, 0.0)]
        if self.kind == "indicator":
            segs = []
            if self.target >= start:
                if self.target > start:
                    segs.append((start, self.target - 1, 0.0, 0.0))
                segs.append((self.target, self.target, 0.0, 1.0))
                segs.append((self.target + 1, inf, 0.0, 0.0))
            else:
                segs.append((start, inf, 0.0, 0.0))
            return segs
        if self.kind == "bitlength":
            segs = []
            lo = start
            while lo < 2 ** 60:
                k = int(lo).bit_length()
                hi = 2 ** k - 1
                segs.append((lo, hi, 0.0, float(k)))
                lo = hi + 1
            return segs
        if self.kind == "table":
            if start <= len(self.table) or self.tail == "error":
                return None
            if self.tail == "log":
                return [(start, inf, 1.0, 0.0)]
            return [(start, inf, 0.0, self._tail_const())]
        return None


def total_cost(e: Expansion, c: CostFunction, skip_first: bool = False) -> float:
    """``C = sum_j c(m_j)``; ``skip_first`` drops a flagged normalizing step."""
    digits = e.digits[1:] if skip_first and e.normalized_first_step else e.digits
    return float(math.fsum(c.values(np.array(digits))))


def total_cost_exact(e: Expansion, c: CostFunction) -> Fraction | None:
    vals = [c.exact(m) for m in e.digits]
    return None if any(v is None for v in vals) else sum(vals, Fraction(0))


def word_cost(w: BranchWord, c: CostFunction) -> float:
    """Additive extension ``c(h) = sum c(h_j)`` to branch words."""
    return float(math.fsum(c.values(np.array(w.digits))))


def word_cost_exact(w: BranchWord, c: CostFunction) -> Fraction | None:
    vals = [c.exact(m) for m in w.digits]
    return None if any(v is None for v in vals) else sum(vals, Fraction(0))


@dataclass(frozen=True)
class LatticeClass:
    kind: str                 # "lattice", "nonlattice-heuristic" or "unknown"
    window: int
    span: float | None = None
    shift: float | None = None
    span_exact: Fraction | None = None
    shift_exact: Fraction | None = None

    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice"


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    a, b = abs(a), abs(b)
    return Fraction(math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
                    a.denominator * b.denominator)


def lattice_detect(c: CostFunction, M: int = 64, max_denominator: int = 10_000,
                   rel_tol: float = 1e-10) -> LatticeClass:
    """Span/shift of ``c`` over the window ``1..M``.

    Exact for rational-valued costs; otherwise pairwise differences are tested
    for rational relations with bounded denominators, and failure to find one
    yields ``nonlattice-heuristic`` (never a plain "nonlattice").
    """
    if M < 2:
        raise ValueError("window must be at least 2")
    ms = np.arange(1, M + 1)
    exact = [c.exact(int(m)) for m in ms]
    if all(v is not None for v in exact):
        if all(v == exact[0] for v in exact):
            L = abs(exact[0])
            return LatticeClass("lattice", M, float(L), 0.0, L, Fraction(0))
        L = reduce(_frac_gcd, (v - exact[0] for v in exact if v != exact[0]))
        L0 = exact[0] - L * math.floor(exact[0] / L)
        return LatticeClass("lattice", M, float(L), float(L0), L, L0)
    vals = c.values(ms)
    if not np.all(np.isfinite(vals)):
        return LatticeClass("unknown", M)
    if np.all(vals == vals[0]):
        return LatticeClass("lattice", M, abs(float(vals[0])), 0.0)
    diffs = vals - vals[0]
    nz = diffs[np.abs(diffs) > 1e-300]
    ref = nz[np.argmin(np.abs(nz))]
    fracs = []
    for d in nz:
        r = d / ref
        f = Fraction(r).limit_denominator(max_denominator)
        if abs(float(f) - r) > rel_tol * max(1.0, abs(r)):
            return LatticeClass("nonlattice-heuristic", M)
        fracs.append(f)
    den = reduce(math.lcm, (f.denominator for f in fracs))
    g = reduce(math.gcd, (abs(f.numerator * (den // f.denominator)) for f in fracs))
    L = abs(float(ref)) * g / den
    L0 = float(vals[0] - L * math.floor(vals[0] / L + 1e-12))
    if abs(L0 - L) < 1e-12 * L:
        L0 = 0.0
    return LatticeClass("lattice", M, L, L0)


@dataclass(frozen=True)
class MomentTailReport:
    k: int
    nu: float
    M: int
    checkpoints: tuple[int, ...]
    moment_partial: tuple[float, ...]
    growth_partial: tuple[float, ...]
    moment_decade_ratio: float
    growth_decade_ratio: float
    moment_trend: str
    growth_trend: str


def _trend(partial: np.ndarray) -> tuple[float, str]:
    if not np.all(np.isfinite(partial)):
        return math.inf, "diverging"
    inc = np.diff(partial)
    if inc.size < 2 or inc[-2] <= 0:
        return math.nan, "inconclusive"
    ratio = float(inc[-1] / inc[-2])
    if ratio < 0.9:
        return ratio, "converging"
    if ratio >= 1.0:
        return ratio, "diverging"
    return ratio, "inconclusive"


def moment_tail_report(c: CostFunction, k: int, nu: float, M: int, chunk: int = 1 << 20) -> MomentTailReport:
    """Partial sums of ``sum |c(m)|^k m^(nu-2)`` and ``sum exp(nu c(m)) m^(nu-2)``.

    The trend compares the last two decade increments: a ratio below 0.9
    reads as convergence, a ratio at or above 1 as divergence.  Advisory only.
    """
    if k < 1 or nu <= 0 or M < 10:
        raise ValueError("need k >= 1, nu > 0, M >= 10")
    checkpoints = []
    x = 10
    while x < M:
        checkpoints.append(x)
        x *= 10
    checkpoints.append(M)
    mom, gro = [], []
    s_m = s_g = 0.0
    lo = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for cp in checkpoints:
            for a in range(lo, cp + 1, chunk):
                m = np.arange(a, min(cp, a + chunk - 1) + 1, dtype=np.int64)
                cm = c.values(m)
                w = m.astype(float) ** (nu - 2.0)
                s_m += math.fsum(np.abs(cm) ** k * w)
                g = np.exp(nu * cm) * w
                s_g = math.inf if not np.all(np.isfinite(g)) else s_g + math.fsum(g)
            lo = cp + 1
            mom.append(s_m)
            gro.append(s_g)
    rm, tm = _trend(np.array(mom))
    rg, tg = _trend(np.array(gro))
    return MomentTailReport(k, nu, M, tuple(checkpoints), tuple(mom), tuple(gro), rm, rg, tm, tg)
