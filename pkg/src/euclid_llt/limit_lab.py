"""Empirical central and local limit theorems: direct counting, plateau
sandwiches, Gaussian mollifiers and Fourier inversion of the smoothed
characteristic function."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .costs import CostFunction
from .ensemble import (CostHistogram, EnsembleSpec, SmoothingSpec, histogram, histogram_snapshots,
                       rows_to_csv, smoothed_histogram)

SQRT2PI = math.sqrt(2 * math.pi)


def normal_cdf(y):
    return special.ndtr(y)


@dataclass(frozen=True)
class CenteringSpec:
    x: float
    N: int
    mu: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.N < 2:
            raise ValueError("N must be >= 2")

    @property
    def Q(self) -> float:
        """``mu log N + delta x sqrt(log N)``."""
        L = math.log(self.N)
        return self.mu * L + self.delta * self.x * math.sqrt(L)


def gaussian_target(x: float, delta: float, mass: float = 1.0) -> float:
    """``mass * exp(-x^2/2) / (delta sqrt(2 pi))``."""
    return mass * math.exp(-x * x / 2) / (delta * SQRT2PI)


# ---------------------------------------------------------------- test functions

class TestFunction:
    """Bounded function with an integral, a Lipschitz constant and a Fourier
    transform ``hat(tau) = int exp(-i tau y) f(y) dy``."""

    __test__ = False  # not a pytest class

    support: tuple[float, float] = (-math.inf, math.inf)

    def __call__(self, y):
        raise NotImplementedError

    def integral(self) -> float:
        lo, hi = self.support
        val, _ = integrate.quad(self, lo, hi, limit=400, epsabs=1e-12, epsrel=1e-10,
                                points=self.breakpoints() if math.isfinite(lo) else None)
        return val

    def breakpoints(self):
        return None

    def hat(self, tau):
        raise NotImplementedError

    @property
    def lipschitz(self) -> float:
        return math.inf


class ZeroFunction(TestFunction):
    support = (0.0, 0.0)

    def __call__(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def integral(self) -> float:
        return 0.0

    def hat(self, tau):
        return np.zeros_like(np.asarray(tau, dtype=float), dtype=complex)

    @property
    def lipschitz(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Interval(TestFunction):
    """Indicator of the half-open interval ``(a, b]``."""
    a: float
    b: float

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("need a < b")

    @property
    def support(self):
        return (self.a, self.b)

    @property
    def length(self) -> float:
        return self.b - self.a

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return ((y > self.a) & (y <= self.b)).astype(float)

    def integral(self) -> float:
        return self.length

    def breakpoints(self):
        return [self.a, self.b]

    def hat(self, tau):
        return _box_hat(np.asarray(tau, dtype=float), self.a, self.b)


def _sinc(z):
    return np.sinc(z / np.pi)


def _box_hat(tau, lo, hi):
    return (hi - lo) * np.exp(-1j * tau * (lo + hi) / 2) * _sinc(tau * (hi - lo) / 2)


def _ramp_gauss(y, s):
    """Ramp ``max(y, 0)`` convolved with the centered normal of std s."""
    return y * special.ndtr(y / s) + s * np.exp(-0.5 * (y / s) ** 2) / SQRT2PI


@dataclass(frozen=True)
class Trapezoid(TestFunction):
    """0 below L0, slope 1/r up to L0 + r, 1 up to R1, slope -1/r down to R1 + r."""
    L0: float
    R1: float
    r: float

    def __post_init__(self):
        if self.r <= 0 or self.R1 < self.L0 + self.r:
            raise ValueError("trapezoid needs r > 0 and a nonempty plateau")

    @property
    def support(self):
        return (self.L0, self.R1 + self.r)

    def breakpoints(self):
        return [self.L0, self.L0 + self.r, self.R1, self.R1 + self.r]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        up = (y - self.L0) / self.r
        down = (self.R1 + self.r - y) / self.r
        return np.clip(np.minimum(up, down), 0.0, 1.0)

    def integral(self) -> float:
        return self.R1 - self.L0

    @property
    def lipschitz(self) -> float:
        return 1.0 / self.r

    def hat(self, tau):
        # box [L0, R1] convolved with the normalized box [0, r]
        tau = np.asarray(tau, dtype=float)
        return _box_hat(tau, self.L0, self.R1) * np.exp(-1j * tau * self.r / 2) * _sinc(tau * self.r / 2)


def plateau(J: tuple[float, float], delta: float, sign: int) -> Trapezoid:
    """Plateau functions around ``J = [a, b]`` with ramps of width ``sqrt(delta)``.

    ``sign=+1``: 1 on ``[a - sqrt d, b + sqrt d]``, 0 outside ``[a - 2 sqrt d, b + 2 sqrt d]``.
    ``sign=-1``: 1 on ``[a + 2 sqrt d, b - 2 sqrt d]``, 0 outside ``[a + sqrt d, b - sqrt d]``;
    this needs ``delta <= (b - a)^2 / 16`` so that the inner plateau is nonempty.
    """
    a, b = J
    if delta <= 0 or not b > a:
        raise ValueError("need delta > 0 and a < b")
    r = math.sqrt(delta)
    if sign > 0:
        return Trapezoid(a - 2 * r, b + r, r)
    if 4 * r > b - a:
        raise ValueError("inner plateau function needs delta <= (b - a)^2 / 16")
    return Trapezoid(a + r, b - 2 * r, r)


@dataclass(frozen=True)
class Gaussian(TestFunction):
    """``exp(-(y - center)^2 / (2 scale^2))``."""
    scale: float = 1.0
    center: float = 0.0

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(-0.5 * ((y - self.center) / self.scale) ** 2)

    def integral(self) -> float:
        return self.scale * SQRT2PI

    @property
    def lipschitz(self) -> float:
        return math.exp(-0.5) / self.scale

    def hat(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.scale * SQRT2PI * np.exp(-0.5 * (self.scale * tau) ** 2 - 1j * tau * self.center)


def mollifier(delta: float):
    """``Delta_delta(x) = exp(-(x/delta)^2) / (delta sqrt(pi))`` as a callable."""
    return lambda x: np.exp(-(np.asarray(x, dtype=float) / delta) ** 2) / (delta * math.sqrt(math.pi))


def mollifier_hat(delta: float, tau) -> np.ndarray:
    """Closed-form transform of ``Delta_delta`` under ``hat(tau) = int exp(-i tau y) f(y) dy``."""
    return np.exp(-(delta * np.asarray(tau, dtype=float)) ** 2 / 4)


def mollifier_hat_quadrature(delta: float, tau: float) -> float:
    """Transform of ``Delta_delta`` at tau by adaptive quadrature (the kernel is even,
    so the transform is the cosine integral)."""
    f = mollifier(delta)
    val, _ = integrate.quad(lambda x: float(f(x)) * math.cos(tau * x), -40 * delta, 40 * delta,
                            limit=500, epsabs=1e-14, epsrel=1e-13)
    return val


@dataclass(frozen=True)
class Mollified(TestFunction):
    """``psi * Delta_delta`` (convolution with the Gaussian mollifier)."""
    base: TestFunction
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @property
    def s(self) -> float:
        return self.delta / math.sqrt(2)       # std of Delta_delta

    @property
    def support(self):
        lo, hi = self.base.support
        return (lo - 12 * self.delta, hi + 12 * self.delta)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        b, s = self.base, self.s
        if isinstance(b, Trapezoid):
            return (_ramp_gauss(y - b.L0, s) - _ramp_gauss(y - b.L0 - b.r, s)
                    - _ramp_gauss(y - b.R1, s) + _ramp_gauss(y - b.R1 - b.r, s)) / b.r
        if isinstance(b, Interval):
            return special.ndtr((y - b.a) / s) - special.ndtr((y - b.b) / s)
        if isinstance(b, Gaussian):
            v = b.scale ** 2 + s ** 2
            return b.scale / math.sqrt(v) * np.exp(-0.5 * (y - b.center) ** 2 / v)
        if isinstance(b, ZeroFunction):
            return np.zeros_like(y)
        kern = mollifier(self.delta)
        return np.vectorize(lambda t: integrate.quad(lambda u: float(b(u)) * float(kern(t - u)),
                                                     *b.support, limit=400)[0])(y)

    def integral(self) -> float:
        return self.base.integral()

    @property
    def lipschitz(self) -> float:
        return self.base.lipschitz

    def hat(self, tau):
        return self.base.hat(tau) * mollifier_hat(self.delta, tau)


def mollify(psi: TestFunction, delta: float) -> Mollified:
    return Mollified(psi, delta)


@dataclass(frozen=True)
class MollifierFit:
    deltas: tuple[float, ...]
    sup_errors: tuple[float, ...]
    D: tuple[float, ...]          # sup|psi - psi_delta| / (Lip(psi) delta)

    @property
    def spread(self) -> float:
        return (max(self.D) - min(self.D)) / max(self.D)


def mollifier_fit(psi: Trapezoid, deltas: Sequence[float], grid_points: int = 20001) -> MollifierFit:
    """Sup distance between psi and its mollification on a fine grid that
    contains the kinks of psi."""
    lo, hi = psi.support
    errs, Ds = [], []
    for d in deltas:
        y = np.unique(np.concatenate([np.linspace(lo - 1, hi + 1, grid_points), psi.breakpoints()]))
        e = float(np.max(np.abs(psi(y) - Mollified(psi, d)(y))))
        errs.append(e)
        Ds.append(e / (psi.lipschitz * d))
    return MollifierFit(tuple(deltas), tuple(errs), tuple(Ds))


# ---------------------------------------------------------------- CLT

def kolmogorov_distance(values: np.ndarray, weights: np.ndarray) -> float:
    """Sup over jump points of |F_emp - Phi|, both one-sided limits checked."""
    order = np.argsort(values)
    v = np.asarray(values, dtype=float)[order]
    w = np.asarray(weights, dtype=float)[order]
    cdf = np.cumsum(w) / w.sum()
    before = np.concatenate([[0.0], cdf[:-1]])
    phi = normal_cdf(v)
    return float(max(np.max(np.abs(cdf - phi)), np.max(np.abs(before - phi))))


def clt_check(N: int, cost: CostFunction, mu: float, delta: float, hist: CostHistogram | None = None,
              spec: EnsembleSpec | None = None) -> float:
    """Kolmogorov distance of ``(C - mu log N) / (delta sqrt(log N))`` to N(0, 1)."""
    if N < 16:
        raise ValueError("N must be >= 16")
    h = hist if hist is not None else histogram((spec or EnsembleSpec(N, cost)).with_N(N))
    L = math.log(N)
    return kolmogorov_distance((h.values - mu * L) / (delta * math.sqrt(L)), h.counts)


@dataclass(frozen=True)
class CLTTrend:
    N: tuple[int, ...]
    distance: tuple[float, ...]
    C_hat: float
    inversions: int


def clt_trend(N_list: Sequence[int], cost: CostFunction, mu: float, delta: float) -> CLTTrend:
    snaps = histogram_snapshots(EnsembleSpec(max(N_list), cost), N_list)
    Ns = sorted(snaps)
    d = [clt_check(N, cost, mu, delta, hist=snaps[N]) for N in Ns]
    C = max(di * math.sqrt(math.log(N)) for di, N in zip(d, Ns))
    inv = sum(1 for i in range(1, len(d)) if d[i] > d[i - 1])
    return CLTTrend(tuple(Ns), tuple(d), C, inv)


# ---------------------------------------------------------------- LLT

@dataclass(frozen=True)
class LLTResult:
    N: int
    x: float
    lhs: float
    target: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.target if self.target else math.nan


def llt_interval(N: int, cost: CostFunction, x: float, J: tuple[float, float], mu: float, delta: float,
                 hist: CostHistogram | None = None, smoothing: SmoothingSpec | None = None) -> LLTResult:
    """``sqrt(log N) P(C - Q(x, N) in (a, b])`` against ``|J| e^{-x^2/2} / (delta sqrt(2 pi))``."""
    a, b = J
    cs = CenteringSpec(x, N, mu, delta)
    if hist is None:
        hist = (smoothed_histogram(N, smoothing, EnsembleSpec(N, cost)) if smoothing
                else histogram(EnsembleSpec(N, cost)))
    Q = cs.Q
    lhs = math.sqrt(math.log(N)) * hist.prob(Q + a, Q + b)
    return LLTResult(N, x, lhs, gaussian_target(x, delta, b - a))


def expectation(hist: CostHistogram, f) -> float:
    return float(np.dot(hist.counts.astype(float), f(hist.values)) / hist.total)


def llt_smooth(N: int, cost: CostFunction, x: float, psi: TestFunction, mu: float, delta: float,
               hist: CostHistogram | None = None, smoothing: SmoothingSpec | None = None) -> LLTResult:
    """``sqrt(log N) E(psi(C - Q(x, N)))`` against ``e^{-x^2/2} / (delta sqrt(2 pi)) int psi``."""
    cs = CenteringSpec(x, N, mu, delta)
    if hist is None:
        hist = (smoothed_histogram(N, smoothing, EnsembleSpec(N, cost)) if smoothing
                else histogram(EnsembleSpec(N, cost)))
    Q = cs.Q
    lhs = math.sqrt(math.log(N)) * expectation(hist, lambda v: psi(v - Q))
    return LLTResult(N, x, lhs, gaussian_target(x, delta, psi.integral()))


# ---------------------------------------------------------------- Fourier inversion

class CutoffWarning(UserWarning):
    pass


@dataclass(frozen=True)
class InversionCheck:
    N: int
    route_a: float
    route_b: complex
    tau_cutoff: float
    step: float
    nodes: int
    tail_bound: float

    @property
    def difference(self) -> float:
        return abs(self.route_a - self.route_b)


def _hat_tail_bound(psi: TestFunction, T: float) -> float:
    """``(1/2 pi) * 2 int_T^inf |hat psi|`` by quadrature (upper part truncated
    where the integrand is negligible)."""
    f = lambda t: float(np.abs(psi.hat(np.array([t]))[0]))     # noqa: E731
    upper = T
    while f(upper) > 1e-300 and upper < 1e4 * max(T, 1.0):
        upper *= 2
        if upper > 64 * max(T, 1.0) and f(upper) < 1e-18:
            break
    val, _ = integrate.quad(f, T, upper, limit=2000)
    return 2 * val / (2 * math.pi)


def fourier_inversion_check(N: int, cost: CostFunction, x: float, psi: TestFunction, mu: float, delta: float,
                            tau_cutoff: float, smoothing: SmoothingSpec | None = None, tol: float = 1e-8,
                            h0: float = 0.25, max_halvings: int = 8,
                            hist: CostHistogram | None = None) -> InversionCheck:
    """Two evaluations of ``sqrt(log N) Ē_N(psi(C - Q))``.

    Route A sums psi over the smoothed ensemble.  Route B integrates
    ``(1/2 pi) hat(psi)(tau) e^{-i tau Q} Ē_N(e^{i tau C})`` over
    ``[-tau_cutoff, tau_cutoff]`` with a trapezoid rule halved until two
    successive estimates agree within ``tol``.
    """
    smoothing = smoothing or SmoothingSpec()
    cs = CenteringSpec(x, N, mu, delta)
    Q = cs.Q
    scale = math.sqrt(math.log(N))
    if hist is None:
        hist = smoothed_histogram(N, smoothing, EnsembleSpec(N, cost))
    route_a = scale * expectation(hist, lambda v: psi(v - Q))
    tail = scale * _hat_tail_bound(psi, tau_cutoff)
    if tail > tol:
        warnings.warn(f"tau_cutoff={tau_cutoff} leaves a transform tail of {tail:.3g}", CutoffWarning)

    def integrand(t):
        return psi.hat(t) * np.exp(-1j * t * Q) * hist.char_fn(t)

    n = max(2, int(math.ceil(2 * tau_cutoff / h0)))
    t = np.linspace(-tau_cutoff, tau_cutoff, n + 1)
    vals = integrand(t)
    h = t[1] - t[0]
    est = h * (vals.sum() - (vals[0] + vals[-1]) / 2)
    for _ in range(max_halvings):
        mid = t[:-1] + h / 2
        mv = integrand(mid)
        new = est / 2 + (h / 2) * mv.sum()
        t = np.sort(np.concatenate([t, mid]))
        h /= 2
        done = abs(new - est) * scale / (2 * math.pi) < tol
        est = new
        if done:
            break
    route_b = scale * est / (2 * math.pi)
    return InversionCheck(N, route_a, complex(route_b), tau_cutoff, h, t.size, tail)


# ---------------------------------------------------------------- regions

@dataclass(frozen=True)
class RegionConfig:
    nu0: float = 0.5
    delta0: float = 1.0
    alpha2: float = 3.0           # alpha'' in L_N = (log N)^(1/alpha'')
    K_prime: float = 1.0
    points_per_region: int = 64


@dataclass
class RegionProfile:
    N: int
    nu0: float
    L_N: float
    tau_N: float
    regions: dict                  # name -> (taus, moduli)
    envelope: dict                 # region name -> envelope values (or None)
    alpha_hat: float
    resonances: list

    def rows(self):
        for name, (taus, mods) in self.regions.items():
            env = self.envelope.get(name)
            for i, (t, m) in enumerate(zip(taus, mods)):
                yield (name, float(t), float(m), None if env is None else float(env[i]))

    @property
    def decay_observed(self) -> bool:
        """True when one finite exponent bounds every region-3 sample."""
        return math.isfinite(self.alpha_hat)

    def to_csv(self) -> str:
        return rows_to_csv(["region", "tau", "modulus", "envelope"], self.rows())

    @property
    def scales_ordered(self) -> bool:
        return 0 < self.tau_N < self.nu0 < 2 < self.L_N


def region_profile(N: int, cost: CostFunction, config: RegionConfig | None = None,
                   smoothing: SmoothingSpec | None = None, large_tau_max: float | None = None,
                   hist: CostHistogram | None = None) -> RegionProfile:
    """Tabulate ``|Ē_N(xi_1, e^{i tau C})|`` over the four tau regions.

    Region 3 gets the envelope ``K' N^{-|tau|^{-alpha}}`` with ``alpha`` the
    smallest exponent consistent with every sampled point (infinite when some
    point has modulus 1, as at lattice resonances).
    """
    cfg = config or RegionConfig()
    smoothing = smoothing or SmoothingSpec()
    hist = hist if hist is not None else smoothed_histogram(N, smoothing, EnsembleSpec(N, cost))
    lN = math.log(N)
    L_N = lN ** (1 / cfg.alpha2)
    tau_N = math.sqrt(math.log(lN) / (cfg.delta0 * lN)) if lN > 1 else math.nan
    k = cfg.points_per_region
    big = large_tau_max or 2 * max(L_N, 2.0) + 2
    grids = {
        "small": np.linspace(0, cfg.nu0, k, endpoint=False),
        "mid": np.linspace(cfg.nu0, 2.0, k, endpoint=False),
        # lattice resonances 2 pi k are always sampled
        "large": np.union1d(np.linspace(2.0, max(L_N, 2.0), k),
                            2 * math.pi * np.arange(1, int(max(L_N, 2.0) / (2 * math.pi)) + 1)),
        "beyond": np.linspace(max(L_N, 2.0), big, k)[1:],
    }
    regions = {}
    for name, g in grids.items():
        regions[name] = (g, np.abs(hist.char_fn(g)))
    taus, mods = regions["large"]
    with np.errstate(divide="ignore"):
        decay = -np.log(np.minimum(mods / cfg.K_prime, 1.0)) / lN
        ah = np.where(decay > 0, -np.log(decay) / np.log(np.abs(taus)), np.inf)
    alpha_hat = float(np.max(ah)) if ah.size else math.nan
    env = None if not math.isfinite(alpha_hat) else cfg.K_prime * float(N) ** (-np.abs(taus) ** (-alpha_hat))
    res = []
    for t in 2 * math.pi * np.arange(1, int(big / (2 * math.pi)) + 1):
        m = abs(hist.char_fn(t))
        if m > 1 - 1e-9:
            res.append(float(t))
    return RegionProfile(N, cfg.nu0, L_N, tau_N, regions, {"large": env}, alpha_hat, res)


def llt_rows_csv(rows: Sequence[LLTResult]) -> str:
    return rows_to_csv(["N", "x", "lhs", "target", "ratio"], [(r.N, r.x, r.lhs, r.target, r.ratio) for r in rows])
