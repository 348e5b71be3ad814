"""Continued-fraction division algorithms, their interval maps and inverse branches.

Three algorithms are supported:

* ``ORDINARY`` -- Euclid's division ``q = m p + r`` with ``0 <= r < p``;
  the interval map is the Gauss map ``T(x) = 1/x - floor(1/x)`` on ``(0, 1]``.
* ``CENTERED`` -- nearest-integer division ``q = m p + eps r`` with
  ``q/p - m`` in ``[-1/2, 1/2)``; interval ``(0, 1/2]``, all digits ``>= 2``.
* ``ODD`` -- nearest-odd division with ``q/p - m`` in ``[-1, 1)``;
  interval ``(0, 1]``, all digits odd.

Digit extraction always works on the integer pair ``(p, q)``; floating point
only appears in :func:`map_apply` for real arguments and in the branch
derivative helpers.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np


class AlgorithmKind(str, Enum):
    ORDINARY = "ordinary"
    CENTERED = "centered"
    ODD = "odd"

    @classmethod
    def parse(cls, value: "str | AlgorithmKind") -> "AlgorithmKind":
        if isinstance(value, AlgorithmKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown algorithm {value!r}; expected one of "
                             f"{[a.value for a in cls]}") from None


# integer codes used by the compiled kernels
ALGORITHM_CODE = {AlgorithmKind.ORDINARY: 0, AlgorithmKind.CENTERED: 1, AlgorithmKind.ODD: 2}

DOMAIN_RIGHT = {
    AlgorithmKind.ORDINARY: Fraction(1),
    AlgorithmKind.CENTERED: Fraction(1, 2),
    AlgorithmKind.ODD: Fraction(1),
}


def domain(alg: AlgorithmKind) -> tuple[float, float]:
    """Closed interval ``[0, b]`` on which the algorithm's map and branches live."""
    return 0.0, float(DOMAIN_RIGHT[AlgorithmKind.parse(alg)])


@dataclass(frozen=True)
class Rational:
    p: int
    q: int
    coprime: bool = False

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise TypeError("p and q must be integers")
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.p > self.q:
            raise ValueError("p must not exceed q")
        if self.coprime and math.gcd(self.p, self.q) != 1:
            raise ValueError(f"gcd({self.p}, {self.q}) != 1 but coprime flag is set")

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


def nearest_integer(y) -> int:
    """Unique integer m with ``y - m`` in ``[-1/2, 1/2)``."""
    return math.floor(y + Fraction(1, 2)) if isinstance(y, Fraction) else math.floor(y + 0.5)


def nearest_odd(y) -> int:
    """Unique odd integer m with ``y - m`` in ``[-1, 1)``."""
    return 2 * math.floor(y / 2) + 1


def division_step(p: int, q: int, alg: AlgorithmKind) -> tuple[int, int, int]:
    """One division ``q = m p + eps r``; returns ``(m, eps, r)`` with ``r >= 0``.

    ``eps`` is reported as +1 when ``r == 0``.
    """
    if alg is AlgorithmKind.ORDINARY:
        m, r = divmod(q, p)
        return m, 1, r
    if alg is AlgorithmKind.CENTERED:
        m = (2 * q + p) // (2 * p)
    elif alg is AlgorithmKind.ODD:
        m = 2 * (q // (2 * p)) + 1
    else:  # pragma: no cover - closed enumeration
        raise ValueError(alg)
    rem = q - m * p
    return m, (1 if rem >= 0 else -1), abs(rem)


@dataclass(frozen=True)
class Expansion:
    """Digits ``m_1..m_P`` and signs ``eps_1..eps_{P-1}`` of a rational.

    ``normalized_first_step`` is set for CENTERED expansions whose seed ``p/q``
    lies outside ``(0, 1/2]``: the first division then uses the same
    nearest-integer rule and may produce the digit 1.
    """
    algorithm: AlgorithmKind
    digits: tuple[int, ...]
    signs: tuple[int, ...] = ()
    normalized_first_step: bool = False

    def __post_init__(self):
        if not self.digits:
            raise ValueError("an expansion has depth >= 1")
        if len(self.signs) != len(self.digits) - 1:
            raise ValueError("need exactly depth-1 signs")
        if any(e not in (-1, 1) for e in self.signs):
            raise ValueError("signs must be +-1")
        if any(m < 1 for m in self.digits):
            raise ValueError("digits must be positive")
        if self.algorithm is AlgorithmKind.ORDINARY and any(e != 1 for e in self.signs):
            raise ValueError("ordinary expansions carry only +1 signs")

    @property
    def depth(self) -> int:
        return len(self.digits)

    def constraint_violations(self) -> list[int]:
        """Indices of digits breaking the algorithm's digit constraint.

        The flagged normalizing first step of a CENTERED expansion is exempt.
        """
        bad = []
        for j, m in enumerate(self.digits):
            if self.algorithm is AlgorithmKind.ORDINARY:
                ok = m >= 1
            elif self.algorithm is AlgorithmKind.CENTERED:
                ok = m >= 2 or (j == 0 and self.normalized_first_step)
            else:
                ok = m % 2 == 1
            if not ok:
                bad.append(j)
        return bad


def expand(p: int, q: int, alg: "AlgorithmKind | str" = AlgorithmKind.ORDINARY) -> Expansion:
    """Run the division algorithm on ``(p, q)`` until the remainder vanishes."""
    alg = AlgorithmKind.parse(alg)
    Rational(p, q)  # validates 1 <= p <= q
    normalized = alg is AlgorithmKind.CENTERED and 2 * p > q
    digits, signs = [], []
    while True:
        m, eps, r = division_step(p, q, alg)
        digits.append(m)
        if r == 0:
            break
        signs.append(eps)
        p, q = r, p
    return Expansion(alg, tuple(digits), tuple(signs), normalized)


def reconstruct(e: Expansion) -> Rational:
    """Evaluate the nested fraction exactly; result is in lowest terms."""
    value = Fraction(1, e.digits[-1])
    for m, eps in zip(reversed(e.digits[:-1]), reversed(e.signs)):
        value = 1 / (m + eps * value)
    return Rational(value.numerator, value.denominator, coprime=True)


def map_apply(alg: "AlgorithmKind | str", x, normalizing: bool = False):
    """Apply the interval map once.

    A :class:`~fractions.Fraction` argument is handled exactly (for ``x = p/q``
    in lowest terms the image is ``r/p``); anything else goes through floats,
    which is for plotting and diagnostics only.  ``normalizing`` admits
    CENTERED arguments in ``(1/2, 1]`` (the flagged first step of
    :func:`expand`).
    """
    alg = AlgorithmKind.parse(alg)
    exact = isinstance(x, Fraction)
    right = Fraction(1) if normalizing else DOMAIN_RIGHT[alg]
    if x < 0 or x > right:
        raise ValueError(f"x={x} outside the domain [0, {right}] of the {alg.value} map")
    if x == 0:
        return Fraction(0) if exact else 0.0
    if exact:
        _, _, r = division_step(x.numerator, x.denominator, alg)
        return Fraction(r, x.numerator)
    y = 1.0 / float(x)
    if alg is AlgorithmKind.ORDINARY:
        return y - math.floor(y)
    if alg is AlgorithmKind.CENTERED:
        return abs(y - nearest_integer(y))
    return abs(y - nearest_odd(y))


@dataclass(frozen=True)
class Branch:
    """Inverse branch ``y -> 1/(m + eps*y)``."""
    algorithm: AlgorithmKind
    m: int
    eps: int = 1

    def __post_init__(self):
        if (self.m, self.eps) not in _admissible_set(self.algorithm):
            if not is_admissible(self.algorithm, self.m, self.eps):
                raise ValueError(f"branch (m={self.m}, eps={self.eps}) is not admissible "
                                 f"for the {self.algorithm.value} algorithm")

    def __call__(self, y):
        return 1 / (self.m + self.eps * y)

    @property
    def matrix(self) -> tuple[int, int, int, int]:
        return (0, 1, self.eps, self.m)

    def derivative(self, x):
        """``|h'(x)| = 1/(m + eps x)^2``."""
        return 1.0 / (self.m + self.eps * np.asarray(x, dtype=float)) ** 2


def is_admissible(alg: "AlgorithmKind | str", m: int, eps: int) -> bool:
    """Decide admissibility of ``(m, eps)`` by running the division step.

    The branch is admissible iff, for interior test points ``x`` of the
    domain, the rational ``h(x)`` lies in the domain and one division step on
    it returns exactly ``(m, eps)`` with remainder ratio ``x``.
    """
    alg = AlgorithmKind.parse(alg)
    if m < 1 or eps not in (-1, 1):
        return False
    right = DOMAIN_RIGHT[alg]
    for x in (right / 3, 2 * right / 3):
        y = 1 / (m + eps * x)
        if not (0 < y <= right):
            return False
        m2, e2, r = division_step(y.numerator, y.denominator, alg)
        if (m2, e2) != (m, eps) or Fraction(r, y.numerator) != x:
            return False
    return True


@lru_cache(maxsize=None)
def _admissible_set(alg: AlgorithmKind, m_probe: int = 64) -> frozenset:
    return frozenset((m, e) for m in range(1, m_probe + 1) for e in (1, -1)
                     if is_admissible(alg, m, e))


@lru_cache(maxsize=32)
def admissible_pairs(alg: "AlgorithmKind | str", m_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(m, eps)`` of all admissible branches with digit ``<= m_max``, sorted by digit."""
    alg = AlgorithmKind.parse(alg)
    pairs = [(m, e) for m in range(1, m_max + 1) for e in (1, -1) if is_admissible(alg, m, e)]
    m_arr = np.array([m for m, _ in pairs], dtype=np.int64)
    e_arr = np.array([e for _, e in pairs], dtype=np.int64)
    m_arr.flags.writeable = False
    e_arr.flags.writeable = False
    return m_arr, e_arr


def admissible_branches(alg: "AlgorithmKind | str", m_max: int) -> list[Branch]:
    alg = AlgorithmKind.parse(alg)
    m_arr, e_arr = admissible_pairs(alg, m_max)
    return [Branch(alg, int(m), int(e)) for m, e in zip(m_arr, e_arr)]


def _matmul(a, b):
    return (a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3])


@dataclass(frozen=True)
class BranchWord:
    """Composition of inverse branches.

    ``branches[0]`` is the outermost map, so the word built from digits
    ``(m_1, ..., m_p)`` sends ``y`` to ``1/(m_1 + eps_1/(m_2 + ... /(m_p + eps_p y)))``.
    """
    branches: tuple[Branch, ...]
    matrix: tuple[int, int, int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.branches:
            raise ValueError("empty word")
        mat = (1, 0, 0, 1)
        for b in self.branches:
            mat = _matmul(mat, b.matrix)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_digits(cls, digits: Sequence[int], signs: Sequence[int] | None = None,
                    alg: "AlgorithmKind | str" = AlgorithmKind.ORDINARY) -> "BranchWord":
        alg = AlgorithmKind.parse(alg)
        signs = list(signs) if signs is not None else [1] * len(digits)
        return cls(tuple(Branch(alg, int(m), int(e)) for m, e in zip(digits, signs)))

    @property
    def algorithm(self) -> AlgorithmKind:
        return self.branches[0].algorithm

    @property
    def length(self) -> int:
        return len(self.branches)

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple(b.m for b in self.branches)

    @property
    def determinant(self) -> int:
        a, b, c, d = self.matrix
        return a * d - b * c

    def __matmul__(self, other: "BranchWord") -> "BranchWord":
        return BranchWord(self.branches + other.branches)

    def __call__(self, y):
        a, b, c, d = self.matrix
        return (a * y + b) / (c * y + d)

    def derivative(self, x):
        """``|h'(x)|`` from the Mobius coefficients."""
        _, _, c, d = self.matrix
        return 1.0 / (c * np.asarray(x, dtype=float) + d) ** 2

    def derivative_chain(self, x):
        """``|h'(x)|`` as the product of branch derivatives along the orbit."""
        y = np.asarray(x, dtype=float)
        out = np.ones_like(y)
        for b in reversed(self.branches):
            out = out * b.derivative(y)
            y = b(y)
        return out

    def distortion(self, x):
        """``|h''(x)| / |h'(x)| = 2|c| / |c x + d|``."""
        _, _, c, d = self.matrix
        return 2.0 * abs(c) / np.abs(c * np.asarray(x, dtype=float) + d)


def branch_derivative(h: "Branch | BranchWord", x):
    return h.derivative(x)


@dataclass(frozen=True)
class ContractionReport:
    rho_hat: float
    K_hat: float
    distortion_bound: float
    per_length: dict[int, float]


def contraction_report(alg: "AlgorithmKind | str" = AlgorithmKind.ORDINARY, max_length: int = 12,
                       samples_per_length: int = 200, m_cap: int = 8, seed: int = 0,
                       grid: int = 257) -> ContractionReport:
    """Fit ``sup|h'| <= K rho^len`` and a distortion bound over random words.

    Words of length 1 are included in the distortion bound but not in the
    contraction fit: a single branch with digit 1 has ``|h'(0)| = 1``.
    The all-ones (or smallest-digit) word is always sampled since it is the
    least contracting one.
    """
    alg = AlgorithmKind.parse(alg)
    rng = random.Random(seed)
    m_arr, e_arr = admissible_pairs(alg, m_cap)
    pool = list(zip(m_arr.tolist(), e_arr.tolist()))
    xs = np.linspace(0.0, float(DOMAIN_RIGHT[alg]), grid)
    per_length: dict[int, float] = {}
    sups: dict[int, float] = {}
    dist = 0.0
    for length in range(1, max_length + 1):
        words = [[pool[0]] * length]
        words += [[rng.choice(pool) for _ in range(length)] for _ in range(samples_per_length)]
        best = 0.0
        for w in words:
            bw = BranchWord(tuple(Branch(alg, m, e) for m, e in w))
            best = max(best, float(bw.derivative(xs).max()))
            dist = max(dist, float(bw.distortion(xs).max()))
        sups[length] = best
        per_length[length] = best ** (1.0 / length)
    rho = max(v for k, v in per_length.items() if k >= 2)
    K = max(sups[k] / rho ** k for k in sups)
    return ContractionReport(rho, K, dist, per_length)


def iterate_to_zero(x: Fraction, alg: "AlgorithmKind | str", steps: int) -> Fraction:
    alg = AlgorithmKind.parse(alg)
    for j in range(steps):
        x = map_apply(alg, x, normalizing=(j == 0))
    return x


def word_from_expansion(e: Expansion) -> BranchWord:
    """Branch word whose value at 0 is the expanded rational.

    The normalizing first step of a CENTERED expansion is not an admissible
    branch of the centered map, so it is built without the admissibility check.
    """
    signs = list(e.signs) + [1]
    branches = []
    for j, (m, eps) in enumerate(zip(e.digits, signs)):
        if j == 0 and e.normalized_first_step:
            b = object.__new__(Branch)
            object.__setattr__(b, "algorithm", e.algorithm)
            object.__setattr__(b, "m", m)
            object.__setattr__(b, "eps", eps)
        else:
            b = Branch(e.algorithm, m, eps)
        branches.append(b)
    return BranchWord(tuple(branches))


def coprime_pairs(q_max: int) -> Iterable[tuple[int, int]]:
    for q in range(1, q_max + 1):
        for p in range(1, q + 1):
            if math.gcd(p, q) == 1:
                yield p, q
