"""Periodic points of the Gauss map in exact surd arithmetic, the strongly
diophantine quantities built from four periodic orbits, brute-force
diophantine exponents, and a finite probe of the cost diophantine condition."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cf_core import BranchWord, expand, reconstruct
from .costs import CostFunction, total_cost, word_cost, word_cost_exact


def _squarefree_split(n: int) -> tuple[int, int]:
    """``n = k^2 * d`` with d squarefree; returns ``(k, d)``."""
    k, d = 1, 1
    f = 2
    while f * f <= n:
        e = 0
        while n % f == 0:
            n //= f
            e += 1
        k *= f ** (e // 2)
        if e % 2:
            d *= f
        f += 1
    return k, d * n


@dataclass(frozen=True)
class QuadSurd:
    """Exact ``(u + v sqrt(d)) / w`` in canonical form (d squarefree, w > 0,
    gcd(u, v, w) = 1; rationals carry ``v = 0, d = 1``)."""
    u: int
    v: int
    d: int
    w: int

    @classmethod
    def make(cls, u: int, v: int, d: int, w: int) -> "QuadSurd":
        if w == 0:
            raise ZeroDivisionError("zero denominator")
        if d < 0:
            raise ValueError("real surds only")
        if d == 0:
            v, d = 0, 1
        k, d = _squarefree_split(d)
        v *= k
        if d == 1:
            u, v = u + v, 0
        if v == 0:
            d = 1
        if w < 0:
            u, v, w = -u, -v, -w
        g = math.gcd(math.gcd(u, v), w)
        return cls(u // g, v // g, d, w // g)

    @classmethod
    def rational(cls, r) -> "QuadSurd":
        r = Fraction(r)
        return cls.make(r.numerator, 0, 1, r.denominator)

    @property
    def is_rational(self) -> bool:
        return self.v == 0

    def _coerce(self, other) -> "QuadSurd":
        if isinstance(other, QuadSurd):
            if not (other.is_rational or self.is_rational or other.d == self.d):
                raise ValueError("surds from different quadratic fields")
            return other
        return QuadSurd.rational(other)

    def _field(self, other: "QuadSurd") -> int:
        return self.d if not self.is_rational else other.d

    def __add__(self, other):
        o = self._coerce(other)
        d = self._field(o)
        return QuadSurd.make(self.u * o.w + o.u * self.w, self.v * o.w + o.v * self.w, d, self.w * o.w)

    __radd__ = __add__

    def __neg__(self):
        return QuadSurd(-self.u, -self.v, self.d, self.w)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        d = self._field(o)
        return QuadSurd.make(self.u * o.u + self.v * o.v * d, self.u * o.v + self.v * o.u, d, self.w * o.w)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadSurd":
        return QuadSurd(self.u, -self.v, self.d, self.w)

    def norm(self) -> Fraction:
        return Fraction(self.u * self.u - self.v * self.v * self.d, self.w * self.w)

    def reciprocal(self) -> "QuadSurd":
        n = self.u * self.u - self.v * self.v * self.d
        if n == 0 and self.v == 0:
            raise ZeroDivisionError("reciprocal of zero")
        # 1/((u + v r)/w) = w (u - v r) / (u^2 - v^2 d)
        return QuadSurd.make(self.w * self.u, -self.w * self.v, self.d, n)

    def __truediv__(self, other):
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = QuadSurd.rational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sign(self) -> int:
        """Exact sign of ``u + v sqrt(d)``."""
        su = (self.u > 0) - (self.u < 0)
        sv = (self.v > 0) - (self.v < 0)
        if sv == 0 or su == sv:
            return su or sv
        if su == 0:
            return sv
        lhs, rhs = self.u * self.u, self.v * self.v * self.d
        return su if lhs > rhs else (sv if lhs < rhs else 0)

    def __eq__(self, other):
        if isinstance(other, QuadSurd):
            return (self.u, self.v, self.d, self.w) == (other.u, other.v, other.d, other.w)
        if isinstance(other, (int, Fraction)):
            return self.is_rational and Fraction(self.u, self.w) == other
        return NotImplemented

    def __hash__(self):
        return hash((self.u, self.v, self.d, self.w))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def floor(self) -> int:
        t = math.isqrt(self.v * self.v * self.d)
        if self.v == 0:
            return self.u // self.w
        return (self.u + t) // self.w if self.v > 0 else (self.u - t - 1) // self.w

    def __float__(self) -> float:
        r = math.sqrt(self.d)
        if self.v == 0 or (self.u >= 0) == (self.v > 0):
            return (self.u + self.v * r) / self.w
        # opposite signs: rationalize to avoid cancellation
        return (self.u * self.u - self.v * self.v * self.d) / (self.w * (self.u - self.v * r))

    def __repr__(self) -> str:
        if self.is_rational:
            return f"QuadSurd({self.u}/{self.w})"
        return f"QuadSurd(({self.u} + {self.v}*sqrt({self.d}))/{self.w})"


def gauss_map(x: QuadSurd) -> QuadSurd:
    """Exact ``T(x) = 1/x - floor(1/x)`` on (0, 1]."""
    if not (x > 0 and x <= 1):
        raise ValueError("x must lie in (0, 1]")
    y = x.reciprocal()
    return y - y.floor()


@dataclass(frozen=True)
class DigitTuple:
    digits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(m) for m in self.digits))
        if not self.digits or any(m < 1 for m in self.digits):
            raise ValueError("a digit tuple is a nonempty sequence of positive integers")

    @property
    def period(self) -> int:
        return len(self.digits)

    @property
    def minimal_period(self) -> int:
        p = len(self.digits)
        for k in range(1, p + 1):
            if p % k == 0 and self.digits == self.digits[:k] * (p // k):
                return k
        return p  # pragma: no cover

    @property
    def is_primitive(self) -> bool:
        return self.minimal_period == self.period

    def rotations(self) -> set[tuple[int, ...]]:
        d = self.digits
        return {d[i:] + d[:i] for i in range(len(d))}

    def same_orbit(self, other: "DigitTuple") -> bool:
        return other.digits in self.rotations()


@dataclass(frozen=True)
class PeriodicOrbit:
    """Fixed point ``x = [0; m_1, ..., m_p, m_1, ...]`` of the word ``h_{m_1} o ... o h_{m_p}``."""
    tuple: DigitTuple
    x: QuadSurd
    orbit: tuple[QuadSurd, ...]      # T^k x, k = 0..p-1
    a: float                         # log |h'(x)| from the word's Mobius coefficients
    a_product: float                 # sum_k log (m_k + T^k x)^-2

    @property
    def period(self) -> int:
        return self.tuple.period

    @property
    def word(self) -> BranchWord:
        return BranchWord.from_digits(self.tuple.digits)

    @property
    def unit(self) -> QuadSurd:
        """``|c x + d|``, so that ``a = -2 log(unit)``."""
        _, _, c, d = self.word.matrix
        return (self.x * c + d) * (1 if (self.x * c + d).sign() > 0 else -1)

    def cost(self, c: CostFunction) -> float:
        return word_cost(self.word, c)

    def cost_exact(self, c: CostFunction) -> Fraction | None:
        return word_cost_exact(self.word, c)


def periodic_point(t: "DigitTuple | Sequence[int]") -> PeriodicOrbit:
    t = t if isinstance(t, DigitTuple) else DigitTuple(tuple(t))
    if not t.is_primitive:
        raise ValueError(f"tuple {t.digits} is not primitive (minimal period {t.minimal_period})")
    a, b, c, d = BranchWord.from_digits(t.digits).matrix
    # c x^2 + (d - a) x - b = 0, positive root
    x = QuadSurd.make(a - d, 1, (d - a) ** 2 + 4 * b * c, 2 * c)
    orbit = [x]
    y = x
    for _ in range(t.period - 1):
        y = gauss_map(y)
        orbit.append(y)
    if gauss_map(orbit[-1]) != x:
        raise ArithmeticError("fixed point check failed")  # pragma: no cover
    a_word = -2.0 * math.log(abs(c * float(x) + d))
    # pair m_k with T^k x (k = 1..p, T^p x = x): x_{k-1} = 1/(m_k + x_k)
    shifted = orbit[1:] + orbit[:1]
    a_prod = math.fsum(-2.0 * math.log(m + float(xk)) for m, xk in zip(t.digits, shifted))
    return PeriodicOrbit(t, x, tuple(orbit), a_word, a_prod)


def single_digit_alpha(m: int) -> float:
    """``log(1 + (m^2 - m sqrt(m^2 + 4)) / 2)``.

    Evaluated as ``log 4 - 2 log(m + sqrt(m^2 + 4))``, the same number without
    the cancellation of the direct form for large m.
    """
    if m < 1:
        raise ValueError("m must be positive")
    return math.log(4.0) - 2.0 * math.log(m + math.sqrt(m * m + 4.0))


remark7_alpha = single_digit_alpha


def tuple_rational(t: DigitTuple) -> Fraction:
    """The rational ``[0; m_1, ..., m_p]``."""
    x = Fraction(0)
    for m in reversed(t.digits):
        x = 1 / (m + x)
    return x


# ---------------------------------------------------------------- exponents

@dataclass(frozen=True)
class ExponentEstimate:
    eta: float
    q: tuple[int, ...]
    p: int
    distance: float
    Q_max: int
    q_min: int

    @property
    def exact_relation(self) -> bool:
        return math.isinf(self.eta)


def exponent_estimate(x: Sequence[float], Q_max: int, q_min: int | None = None,
                      zero_tol: float = 1e-12) -> ExponentEstimate:
    """``max -log(dist(q . x, Z)) / log(max |q_k|)`` over integer vectors with
    ``q_min <= max |q_k| <= Q_max`` (default ``q_min = ceil(sqrt(Q_max))``).

    Distances below ``zero_tol`` are read as an exact relation (``eta = inf``),
    which is reported even below ``q_min``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size not in (1, 2):
        raise ValueError("x must have dimension 1 or 2")
    if Q_max < 10:
        raise ValueError("Q_max must be at least 10")
    if q_min is None:
        q_min = math.isqrt(Q_max - 1) + 1
    q_min = max(2, int(q_min))
    best = (-math.inf, (0,), 0, math.inf)
    qs = np.arange(-Q_max, Q_max + 1)
    if x.size == 1:
        q = np.arange(1, Q_max + 1)
        v = q * x[0]
        p = np.round(v)
        dist = np.abs(v - p)
        zero = np.nonzero(dist < zero_tol)[0]
        if zero.size:
            i = zero[0]
            return ExponentEstimate(math.inf, (int(q[i]),), int(p[i]), float(dist[i]), Q_max, q_min)
        sel = q >= q_min
        score = -np.log(dist[sel]) / np.log(q[sel])
        i = int(np.argmax(score))
        return ExponentEstimate(float(score[i]), (int(q[sel][i]),), int(p[sel][i]), float(dist[sel][i]),
                                Q_max, q_min)
    for q1 in range(0, Q_max + 1):
        q2 = qs if q1 > 0 else qs[qs > 0]
        v = q1 * x[0] + q2 * x[1]
        p = np.round(v)
        dist = np.abs(v - p)
        height = np.maximum(abs(q1), np.abs(q2))
        zero = np.nonzero(dist < zero_tol)[0]
        if zero.size:
            i = zero[0]
            return ExponentEstimate(math.inf, (q1, int(q2[i])), int(p[i]), float(dist[i]), Q_max, q_min)
        sel = height >= q_min
        if not sel.any():
            continue
        score = -np.log(dist[sel]) / np.log(height[sel])
        i = int(np.argmax(score))
        if score[i] > best[0]:
            best = (float(score[i]), (q1, int(q2[sel][i])), int(p[sel][i]), float(dist[sel][i]))
    return ExponentEstimate(best[0], best[1], best[2], best[3], Q_max, q_min)


# ---------------------------------------------------------------- strongly diophantine report

@dataclass
class DioReport:
    tuples: list[tuple[int, ...]]
    periods: list[int]
    c: list[float]
    a: list[float]
    L: dict[int, float]            # L_{1j}, j = 2, 3, 4
    L_hat: dict[int, float]        # \hat L_{1j}
    L_tilde: dict[tuple[int, int], float]
    L_exact_zero: dict[int, bool]
    L_hat_exact_zero: dict[int, bool]
    flags: dict[str, bool]
    exponent_ratio: ExponentEstimate | None
    exponent_pair: ExponentEstimate | None
    eta0: float
    verdict: str

    def to_json(self) -> dict:
        def est(e):
            return None if e is None else {"eta": None if math.isinf(e.eta) else e.eta, "exact_relation": e.exact_relation,
                                           "q": list(e.q), "p": e.p, "distance": e.distance, "Q_max": e.Q_max}
        return {"tuples": [list(t) for t in self.tuples], "periods": self.periods, "c": self.c, "a": self.a,
                "L": {f"1{j}": v for j, v in self.L.items()},
                "L_hat": {f"1{j}": v for j, v in self.L_hat.items()},
                "L_tilde": {f"{j}{k}": v for (j, k), v in self.L_tilde.items()},
                "flags": self.flags, "exponent_ratio": est(self.exponent_ratio),
                "exponent_pair": est(self.exponent_pair), "eta0": self.eta0, "verdict": self.verdict}

    def verdict_line(self) -> str:
        f = ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in self.flags.items())
        return f"verdict={self.verdict} ({f})"


class OrbitOverlapError(ValueError):
    pass


def _unit_ratio_is_one(o1: PeriodicOrbit, o2: PeriodicOrbit, e1: int, e2: int) -> bool:
    """Exact test of ``unit1^e1 == unit2^e2`` (equivalently ``e1 a1 == e2 a2``)."""
    u1, u2 = o1.unit, o2.unit
    if u1.d != u2.d and not (u1.is_rational or u2.is_rational):
        return False
    return u1 ** e1 == u2 ** e2


def strongly_dio_report(tuples: Sequence, c: CostFunction, eta0: float = 2.0, Q_max: int = 2000,
                        tol: float = 1e-10, Q_max_pair: int | None = None) -> DioReport:
    """All quantities of the four-orbit condition, nonzero flags and a verdict.

    Verdict ``fail`` when a required quantity vanishes or an exact integer
    relation is found; ``pass`` when every flag holds and both fitted exponents
    are at most ``eta0``; ``inconclusive`` otherwise.
    """
    ts = [t if isinstance(t, DigitTuple) else DigitTuple(tuple(t)) for t in tuples]
    if len(ts) != 4:
        raise ValueError("exactly four tuples are required")
    for i, j in itertools.combinations(range(4), 2):
        if ts[i].same_orbit(ts[j]):
            raise OrbitOverlapError(f"tuples {ts[i].digits} and {ts[j].digits} share an orbit")
    orbs = [periodic_point(t) for t in ts]
    p = [o.period for o in orbs]
    cx = [o.cost_exact(c) for o in orbs]
    cf = [o.cost(c) for o in orbs]
    a = [o.a for o in orbs]
    L, Lh, Lz, Lhz = {}, {}, {}, {}
    for j in (2, 3, 4):
        i = j - 1
        if cx[0] is not None and cx[i] is not None:
            ex = p[i] * cx[0] - p[0] * cx[i]
            L[j] = float(ex)
            Lz[j] = ex == 0
        else:
            L[j] = p[i] * cf[0] - p[0] * cf[i]
            Lz[j] = abs(L[j]) < tol
        Lh[j] = p[i] * a[0] - p[0] * a[i]
        Lhz[j] = _unit_ratio_is_one(orbs[0], orbs[i], p[i], p[0])
    Lt = {}
    for j, k in itertools.permutations((2, 3, 4), 2):
        Lt[(j, k)] = L[j] * Lh[k] - Lh[j] * L[k]
    lt23_zero = (Lz[2] and Lz[3]) or (Lz[2] and Lhz[2]) or (Lz[3] and Lhz[3]) or abs(Lt[(2, 3)]) < tol
    flags = {"L13_nonzero": not Lz[3], "Lhat12_nonzero": not Lhz[2], "Ltilde23_nonzero": not lt23_zero}
    e1 = e2 = None
    if flags["L13_nonzero"]:
        e1 = exponent_estimate([L[2] / L[3]], Q_max)
    if flags["Ltilde23_nonzero"]:
        e2 = exponent_estimate([Lt[(4, 3)] / Lt[(2, 3)], Lt[(4, 2)] / Lt[(2, 3)]], Q_max_pair or min(Q_max, 1000))
    if not all(flags.values()) or (e1 is not None and e1.exact_relation) or (e2 is not None and e2.exact_relation):
        verdict = "fail"
    elif e1.eta <= eta0 and e2.eta <= eta0:
        verdict = "pass"
    else:
        verdict = "inconclusive"
    return DioReport([t.digits for t in ts], p, cf, a, L, Lh, Lt, Lz, Lhz, flags, e1, e2, eta0, verdict)


def cost_matches_rational(t: DigitTuple, c: CostFunction) -> bool | None:
    """Check ``c(h)`` against the total cost of ``[0; m_1..m_p]`` via expansion.

    Only meaningful when the tuple is itself a valid finite expansion (last
    digit >= 2, or the tuple ``(1,)``); returns None otherwise.
    """
    if not (t.digits[-1] >= 2 or t.digits == (1,)):
        return None
    r = tuple_rational(t)
    e = expand(r.numerator, r.denominator)
    if e.digits != t.digits or reconstruct(e).as_fraction() != r:
        return False
    return math.isclose(total_cost(e, c), word_cost(BranchWord.from_digits(t.digits), c), rel_tol=0, abs_tol=1e-12)


# ---------------------------------------------------------------- cost diophantine probe

@dataclass(frozen=True)
class ProbeWitness:
    word: tuple[int, ...]
    period: int
    phase: float
    distance: float
    margin: float


@dataclass(frozen=True)
class DioProbeResult:
    best: ProbeWitness
    n: int
    tau: float
    eta: float
    words_tested: int
    note: str = "finite-sample probe of an asymptotic condition"


def _primitive_words(alphabet: Sequence[int], p_max: int):
    """One representative (lexicographically least rotation) per primitive orbit."""
    for p in range(1, p_max + 1):
        for w in itertools.product(sorted(set(alphabet)), repeat=p):
            t = DigitTuple(w)
            if t.is_primitive and w == min(t.rotations()):
                yield t


def dio_cost_probe(c: CostFunction, H0: Sequence[int], tau: float, t: float, theta: float, beta: float,
                   eta: float, p_max: int) -> DioProbeResult:
    """Best ``dist(tau n c(h) + t n log|h'| + p theta, 2 pi Z) |tau|^eta / p``
    over periodic words of period ``p <= p_max`` on the digit set ``H0``,
    with ``n = floor(beta log |tau|)``."""
    if abs(tau) < 2:
        raise ValueError("need |tau| >= 2")
    if not H0:
        raise ValueError("H0 must be nonempty")
    n = int(math.floor(beta * math.log(abs(tau))))
    best = None
    count = 0
    two_pi = 2 * math.pi
    for w in _primitive_words(H0, p_max):
        orb = periodic_point(w)
        ph = tau * n * orb.cost(c) + t * n * orb.a + w.period * theta
        r = math.fmod(ph, two_pi)
        dist = min(abs(r), two_pi - abs(r))
        margin = dist * abs(tau) ** eta / w.period
        count += 1
        if best is None or margin > best.margin:
            best = ProbeWitness(w.digits, w.period, ph, dist, margin)
    return DioProbeResult(best, n, tau, eta, count)


def report_json(rep: DioReport) -> str:
    return json.dumps(rep.to_json(), indent=2)
