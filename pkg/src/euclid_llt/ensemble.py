"""Exhaustive ensembles of rationals: counts, moments, cost histograms,
characteristic functions, Cesàro sums, smoothed models and Dirichlet series."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from . import _kernels as K
from .cf_core import ALGORITHM_CODE, AlgorithmKind, Expansion, expand
from .costs import CostFunction

Progress = Callable[[int, int], None]


def stderr_progress(done: int, total: int) -> None:
    print(f"\r  q {done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)


@dataclass(frozen=True)
class EnsembleSpec:
    """Pairs ``1 <= p <= q <= N`` (coprime only for the reduced ensemble).

    ``natural_domain`` restricts the CENTERED algorithm to seeds ``p <= q/2``;
    otherwise seeds above ``1/2`` take one normalizing first step.
    """
    N: int
    cost: CostFunction = field(default_factory=lambda: CostFunction.constant(1))
    algorithm: AlgorithmKind = AlgorithmKind.ORDINARY
    coprime_only: bool = True
    natural_domain: bool = False

    def __post_init__(self):
        if int(self.N) < 1:
            raise ValueError("N must be >= 1")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "algorithm", AlgorithmKind.parse(self.algorithm))

    def with_N(self, N: int) -> "EnsembleSpec":
        return EnsembleSpec(N, self.cost, self.algorithm, self.coprime_only, self.natural_domain)

    @property
    def _family(self):
        return (self.cost, self.algorithm, self.coprime_only, self.natural_domain)

    def _kernel_args(self, n_max: int):
        return (ALGORITHM_CODE[self.algorithm], self.coprime_only,
                self.natural_domain and self.algorithm is AlgorithmKind.CENTERED,
                self.cost.lookup(n_max + 2), K.smallest_prime_factors(n_max + 2))


def enumerate_pairs(spec: EnsembleSpec) -> Iterator[tuple[int, int, Expansion]]:
    """Pure-Python stream of ``(p, q, expansion)``; for small N and oracles."""
    natural = spec.natural_domain and spec.algorithm is AlgorithmKind.CENTERED
    for q in range(1, spec.N + 1):
        for p in range(1, (q // 2 if natural else q) + 1):
            if spec.coprime_only and math.gcd(p, q) != 1:
                continue
            yield p, q, expand(p, q, spec.algorithm)


enumerate = enumerate_pairs  # noqa: A001 - operation name


def _mobius(n: int) -> np.ndarray:
    mu = np.ones(n + 1, dtype=np.int64)
    spf = K.smallest_prime_factors(n)
    for i in range(2, n + 1):
        j = i // spf[i]
        mu[i] = 0 if j % spf[i] == 0 else -mu[j]
    mu[0] = 0
    return mu


def count(N: int, coprime_only: bool = True) -> int:
    """``|Omega_N|`` via ``sum_d mu(d) T(N // d)`` with ``T(n) = n(n+1)/2``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not coprime_only:
        return N * (N + 1) // 2
    mu = _mobius(N)
    return int(sum(int(mu[d]) * (N // d) * (N // d + 1) // 2 for d in range(1, N + 1) if mu[d]))


def count_ratio(N: int) -> float:
    """``|Omega_N| / (3 N^2 / pi^2)``."""
    return count(N) / (3.0 * N * N / math.pi ** 2)


# ---------------------------------------------------------------- block runner

def _blocks(lo: int, hi: int, n_blocks: int) -> list[tuple[int, int]]:
    """Split ``[lo, hi]`` into blocks of roughly equal pair counts (~q^2 density)."""
    if hi < lo:
        return []
    n_blocks = max(1, min(n_blocks, hi - lo + 1))
    edges = [lo - 1]
    a, b = (lo - 1) ** 2, hi ** 2
    for k in range(1, n_blocks):
        edges.append(max(edges[-1] + 1, int(math.sqrt(a + (b - a) * k / n_blocks))))
    edges.append(hi)
    return [(edges[i] + 1, edges[i + 1]) for i in range(len(edges) - 1) if edges[i + 1] > edges[i]]


def _run(fn, lo: int, hi: int, threads: int, progress: Progress | None, blocks_per_thread: int = 8):
    blocks = _blocks(lo, hi, max(1, threads) * blocks_per_thread)
    if threads <= 1:
        for b in blocks:
            fn(*b)
            if progress:
                progress(b[1], hi)
        return
    with ThreadPoolExecutor(threads) as pool:
        for b in pool.map(lambda blk: (fn(*blk), blk)[1], blocks):
            if progress:
                progress(b[1], hi)


# ---------------------------------------------------------------- per-q sums

_PERQ_MOMENTS: dict = {}
_PERQ_CHAR: dict = {}


def per_q_moments(spec: EnsembleSpec, threads: int = 1, progress: Progress | None = None):
    """Arrays ``n[q], s1[q], s2[q]`` (q <= N) of count, sum C and sum C^2.

    Results are cached per (cost, algorithm, ensemble flags) and extended on demand.
    """
    key = spec._family
    have = _PERQ_MOMENTS.get(key)
    if have is not None and have[0].size - 1 >= spec.N:
        n, s1, s2 = have
        return n[:spec.N + 1], s1[:spec.N + 1], s2[:spec.N + 1]
    start = 1 if have is None else have[0].size
    n = np.zeros(spec.N + 1, dtype=np.int64)
    s1 = np.zeros(spec.N + 1)
    s2 = np.zeros(spec.N + 1)
    if have is not None:
        n[:start], s1[:start], s2[:start] = have
    alg, cop, nat, ctab, spf = spec._kernel_args(spec.N)
    _run(lambda a, b: K.per_q_moments(a, b, alg, cop, nat, ctab, spf, n, s1, s2),
         start, spec.N, threads, progress)
    _PERQ_MOMENTS[key] = (n, s1, s2)
    return n, s1, s2


def per_q_charsums(spec: EnsembleSpec, taus: Sequence[float], threads: int = 1,
                   progress: Progress | None = None) -> np.ndarray:
    """Complex array ``phi[q, k] = sum_p exp(i tau_k C(p, q))``."""
    taus = np.ascontiguousarray(np.atleast_1d(np.asarray(taus, dtype=float)))
    key = spec._family + (tuple(taus.tolist()),)
    have = _PERQ_CHAR.get(key)
    if have is not None and have.shape[0] - 1 >= spec.N:
        return have[:spec.N + 1]
    start = 1 if have is None else have.shape[0]
    re = np.zeros((spec.N + 1, taus.size))
    im = np.zeros((spec.N + 1, taus.size))
    if have is not None:
        re[:start], im[:start] = have.real, have.imag
    alg, cop, nat, ctab, spf = spec._kernel_args(spec.N)
    _run(lambda a, b: K.per_q_charsums(a, b, alg, cop, nat, ctab, spf, taus, re, im),
         start, spec.N, threads, progress)
    out = re + 1j * im
    if len(_PERQ_CHAR) > 32:
        _PERQ_CHAR.clear()
    _PERQ_CHAR[key] = out
    return out


def clear_caches() -> None:
    _PERQ_MOMENTS.clear()
    _PERQ_CHAR.clear()


# ---------------------------------------------------------------- moments

def moments(spec: EnsembleSpec, threads: int = 1) -> tuple[float, float]:
    """``(E_N(C), V_N(C))`` under the uniform measure."""
    n, s1, s2 = per_q_moments(spec, threads)
    tot = int(n.sum())
    m1 = math.fsum(s1) / tot
    m2 = math.fsum(s2) / tot
    return m1, max(m2 - m1 * m1, 0.0)


@dataclass(frozen=True)
class MomentRow:
    N: int
    count: int
    mean: float
    var: float

    @property
    def mean_over_log(self) -> float:
        return self.mean / math.log(self.N) if self.N > 1 else math.nan

    @property
    def var_over_log(self) -> float:
        return self.var / math.log(self.N) if self.N > 1 else math.nan


def moments_table(N_list: Sequence[int], cost: CostFunction, algorithm=AlgorithmKind.ORDINARY,
                  coprime_only: bool = True, threads: int = 1,
                  progress: Progress | None = None) -> list[MomentRow]:
    """One row per N, all from a single enumeration up to ``max(N_list)``."""
    spec = EnsembleSpec(max(N_list), cost, algorithm, coprime_only)
    n, s1, s2 = per_q_moments(spec, threads, progress)
    cn, c1, c2 = np.cumsum(n), np.cumsum(s1), np.cumsum(s2)
    rows = []
    for N in N_list:
        tot = int(cn[N])
        m1 = c1[N] / tot
        rows.append(MomentRow(int(N), tot, float(m1), float(max(c2[N] / tot - m1 * m1, 0.0))))
    return rows


def log_slope(N_list: Sequence[int], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``(slope, intercept)`` of values against ``log N``."""
    slope, icpt = np.polyfit(np.log(np.asarray(N_list, dtype=float)), np.asarray(values, dtype=float), 1)
    return float(slope), float(icpt)


# ---------------------------------------------------------------- histograms

def _key_scale(cost: CostFunction, n_max: int) -> int:
    tab = cost.lookup(n_max + 2)[1:]
    if np.all(tab == np.round(tab)) and np.max(np.abs(tab)) * (1.5 * math.log2(n_max + 2) + 3) < 2 ** 52:
        return 1
    bound = float(np.max(np.abs(tab))) * (1.5 * math.log2(n_max + 2) + 3) + 1.0
    return 10 ** max(0, min(12, 17 - math.ceil(math.log10(bound))))


@dataclass(frozen=True)
class CostHistogram:
    """Weighted multiset of total costs.

    Values are ``keys / scale`` with integer keys; ``scale == 1`` means the
    values are exact integers, otherwise costs were rounded to ``1/scale``.
    """
    keys: np.ndarray
    counts: np.ndarray
    scale: int
    N: int
    cost_name: str = ""
    weighting: str = "uniform"

    def __post_init__(self):
        order = np.argsort(self.keys, kind="stable")
        object.__setattr__(self, "keys", np.asarray(self.keys, dtype=np.int64)[order])
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64)[order])
        if self.keys.size > 1 and np.any(np.diff(self.keys) == 0):
            raise ValueError("duplicate keys")

    @classmethod
    def from_dict(cls, d, scale: int, N: int, cost_name: str = "", weighting: str = "uniform"):
        keys = np.fromiter(d.keys(), dtype=np.int64, count=len(d))
        counts = np.fromiter(d.values(), dtype=np.int64, count=len(d))
        return cls(keys, counts, scale, N, cost_name, weighting)

    @property
    def values(self) -> np.ndarray:
        return self.keys / self.scale

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def exact_values(self) -> list[Fraction]:
        return [Fraction(int(k), self.scale) for k in self.keys]

    def merge(self, other: "CostHistogram") -> "CostHistogram":
        """Histogram of the disjoint union of the two underlying populations."""
        if other.scale != self.scale:
            raise ValueError("cannot merge histograms with different key scales")
        keys = np.concatenate([self.keys, other.keys])
        counts = np.concatenate([self.counts, other.counts])
        uk, inv = np.unique(keys, return_inverse=True)
        summed = np.zeros(uk.size, dtype=np.int64)
        np.add.at(summed, inv, counts)
        return CostHistogram(uk, summed, self.scale, max(self.N, other.N), self.cost_name, self.weighting)

    def __eq__(self, other) -> bool:
        return (isinstance(other, CostHistogram) and self.scale == other.scale
                and np.array_equal(self.keys, other.keys) and np.array_equal(self.counts, other.counts))

    __hash__ = None

    def mean(self) -> float:
        return float(np.dot(self.counts, self.values) / self.total)

    def var(self) -> float:
        m = self.mean()
        return float(np.dot(self.counts, (self.values - m) ** 2) / self.total)

    def prob(self, lo: float = -math.inf, hi: float = math.inf) -> float:
        """Mass of values in the half-open window ``(lo, hi]``."""
        v = self.values
        sel = (v > lo) & (v <= hi)
        return int(self.counts[sel].sum()) / self.total

    def cdf(self, t: float) -> float:
        return self.prob(-math.inf, t)

    def char_fn(self, tau) -> np.ndarray | complex:
        """``sum_v count(v) exp(i tau v) / total`` for scalar or array tau."""
        t = np.atleast_1d(np.asarray(tau, dtype=float))
        out = np.empty(t.size, dtype=complex)
        w = self.counts.astype(float)
        tot = float(self.total)
        v = self.values
        for s in range(0, t.size, 256):
            ph = np.outer(t[s:s + 256], v)
            out[s:s + 256] = (np.cos(ph) @ w + 1j * (np.sin(ph) @ w)) / tot
        out[t == 0] = 1.0
        return complex(out[0]) if np.ndim(tau) == 0 else out

    def char_fn_turns(self, theta: Fraction) -> complex:
        """``E exp(2 pi i theta C)`` with the phase reduced exactly mod 1.

        At integer ``theta`` on an integer-valued histogram this is exactly 1.
        """
        theta = Fraction(theta)
        re = []
        im = []
        for k, c in zip(self.keys.tolist(), self.counts.tolist()):
            f = (theta * Fraction(k, self.scale)) % 1
            if f == 0:
                re.append(float(c))
                continue
            ang = 2 * math.pi * float(f)
            re.append(c * math.cos(ang))
            im.append(c * math.sin(ang))
        tot = self.total
        return complex(math.fsum(re) / tot, math.fsum(im) / tot)

    def to_rows(self) -> list[tuple[float, int]]:
        return list(zip(self.values.tolist(), self.counts.tolist()))

    def to_csv(self) -> str:
        return rows_to_csv(["value", "count"], self.to_rows())

    def to_json(self) -> dict:
        return {"N": self.N, "cost": self.cost_name, "weighting": self.weighting, "scale": self.scale,
                "total": self.total, "values": self.values.tolist(), "counts": self.counts.tolist()}


def _fill(spec: EnsembleSpec, lo: int, hi: int, weights: np.ndarray, scale: int, threads: int,
          progress: Progress | None):
    alg, cop, nat, ctab, spf = spec._kernel_args(hi)
    blocks = _blocks(lo, hi, max(1, threads) * 4)
    dicts = [K.new_histogram() for _ in blocks]

    def work(i):
        a, b = blocks[i]
        K.accumulate_histogram(a, b, alg, cop, nat, ctab, spf, float(scale), weights, dicts[i])
        return b

    if threads <= 1:
        for i in range(len(blocks)):
            b = work(i)
            if progress:
                progress(b, hi)
    else:
        with ThreadPoolExecutor(threads) as pool:
            for b in pool.map(work, range(len(blocks))):
                if progress:
                    progress(b, hi)
    return dicts


def _merge_all(dicts, scale, N, name, weighting) -> CostHistogram:
    hs = [CostHistogram.from_dict(d, scale, N, name, weighting) for d in dicts if len(d)]
    if not hs:
        return CostHistogram(np.zeros(0, np.int64), np.zeros(0, np.int64), scale, N, name, weighting)
    out = hs[0]
    for h in hs[1:]:
        out = out.merge(h)
    return out


def histogram(spec: EnsembleSpec, weights: np.ndarray | None = None, q_range: tuple[int, int] | None = None,
              threads: int = 1, progress: Progress | None = None, weighting: str = "uniform") -> CostHistogram:
    """Exact cost histogram of the ensemble, optionally restricted to a q-range
    or weighted by integer ``weights[q]``."""
    lo, hi = q_range if q_range is not None else (1, spec.N)
    if weights is None:
        weights = np.ones(spec.N + 1, dtype=np.int64)
    scale = _key_scale(spec.cost, spec.N)
    dicts = _fill(spec, lo, hi, np.asarray(weights, dtype=np.int64), scale, threads, progress)
    return _merge_all(dicts, scale, spec.N, spec.cost.name, weighting)


def histogram_snapshots(spec: EnsembleSpec, N_list: Sequence[int], threads: int = 1,
                        progress: Progress | None = None) -> dict[int, CostHistogram]:
    """Plain histograms at every N in ``N_list`` from one pass over q."""
    N_list = sorted(set(int(n) for n in N_list))
    big = spec.with_N(N_list[-1])
    scale = _key_scale(spec.cost, big.N)
    w = np.ones(big.N + 1, dtype=np.int64)
    out = {}
    acc = None
    lo = 1
    for N in N_list:
        part = _merge_all(_fill(big, lo, N, w, scale, threads, progress), scale, N, spec.cost.name, "uniform")
        acc = part if acc is None else acc.merge(part)
        acc = CostHistogram(acc.keys, acc.counts, scale, N, spec.cost.name)
        out[N] = acc
        lo = N + 1
    return out


# ---------------------------------------------------------------- characteristic functions

def char_fn(spec: EnsembleSpec, tau, threads: int = 1):
    """``E_N(exp(i tau C)) = Phi_{i tau}(N) / Phi_0(N)``."""
    return histogram(spec, threads=threads).char_fn(tau)


def phi_profile(spec: EnsembleSpec, tau: float, threads: int = 1) -> np.ndarray:
    """``Phi_{i tau}(M)`` for ``M = 0..N``."""
    phi = per_q_charsums(spec, [tau], threads)[:, 0]
    return np.cumsum(phi)


def cesaro_profile(spec: EnsembleSpec, tau: float, threads: int = 1) -> np.ndarray:
    """``Psi_{i tau}(M) = sum_{M' <= M} Phi_{i tau}(M')`` for ``M = 0..N``, by accumulation."""
    return np.cumsum(phi_profile(spec, tau, threads))


def cesaro(N: int, cost: CostFunction, tau: float, algorithm=AlgorithmKind.ORDINARY,
           coprime_only: bool = True) -> complex:
    if tau == 0:
        return complex(cesaro_count(N, coprime_only))
    return complex(cesaro_profile(EnsembleSpec(N, cost, algorithm, coprime_only), tau)[N])


def cesaro_count(N: int, coprime_only: bool = True) -> int:
    """``Psi_0(N) = sum_{M <= N} |Omega_M|`` as an exact integer."""
    if not coprime_only:
        return sum(M * (M + 1) // 2 for M in range(1, N + 1))
    phi = _totients(N)
    return int(sum((N - q + 1) * int(phi[q]) for q in range(1, N + 1)))


def _totients(n: int) -> np.ndarray:
    phi = np.arange(n + 1, dtype=np.int64)
    for i in range(2, n + 1):
        if phi[i] == i:
            phi[i::i] -= phi[i::i] // i
    return phi


class SmoothingError(ValueError):
    """The smoothing window is too narrow for the discrepancy bound to apply."""


@dataclass(frozen=True)
class SmoothingSpec:
    """``xi(N) = N^-gamma0`` (family ``power``) or ``N^(-|tau|^-alpha)`` (``tau_power``)."""
    family: str = "power"
    gamma0: float = 0.25
    alpha: float = 1.0
    tau: float = 2.0
    M0: float = 1.0

    def __post_init__(self):
        if self.family not in ("power", "tau_power"):
            raise ValueError(f"unknown smoothing family {self.family!r}")
        if self.family == "power" and not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if self.M0 <= 0:
            raise ValueError("M0 must be positive")

    def xi(self, N: int) -> float:
        if self.family == "power":
            return float(N) ** (-self.gamma0)
        if self.tau == 0:
            return 0.0
        return float(N) ** (-abs(self.tau) ** (-self.alpha))

    def window_start(self, N: int) -> int:
        """First denominator bound ``N - floor(N xi(N))`` of the smoothed union."""
        return N - int(math.floor(N * self.xi(N)))

    def valid(self, N: int) -> bool:
        x = self.xi(N)
        if N < 2 or x <= 0:
            return False
        return 1.0 / x <= self.M0 * N / math.log(N)

    def check(self, N: int) -> None:
        if not self.valid(N):
            raise SmoothingError(
                f"smoothing too fine at N={N}: 1/xi={1 / max(self.xi(N), 1e-300):.4g} exceeds "
                f"M0*N/log N={self.M0 * N / math.log(max(N, 2)):.4g} (M0={self.M0})")


def smoothing_weights(N: int, N0: int) -> np.ndarray:
    """Multiplicity of denominator q in ``union_{N0 <= Q <= N} Omega_Q``: ``N - max(q, N0) + 1``."""
    q = np.arange(N + 1)
    w = N - np.maximum(q, N0) + 1
    w[0] = 0
    return np.clip(w, 0, None).astype(np.int64)


def cesaro_weights(M: int, N: int) -> np.ndarray:
    """Multiplicity of q in ``Psi(M)``: ``(M - q + 1)_+`` for arrays indexed up to N."""
    q = np.arange(N + 1)
    w = np.clip(M - q + 1, 0, None).astype(np.int64)
    w[0] = 0
    return w


def smoothed_histogram(N: int, smoothing: SmoothingSpec, spec: EnsembleSpec | None = None,
                       threads: int = 1, check: bool = True) -> CostHistogram:
    spec = (spec or EnsembleSpec(N)).with_N(N)
    if check:
        smoothing.check(N)
    N0 = smoothing.window_start(N)
    return histogram(spec, smoothing_weights(N, N0), threads=threads, weighting=f"smoothed[{N0},{N}]")


def smoothed_char_fn(N: int, smoothing: SmoothingSpec, cost: CostFunction, tau,
                     route: str = "cesaro", spec: EnsembleSpec | None = None, check: bool = True):
    """``Ē_N(xi, exp(i tau C)) = Phī_{i tau}(N) / Phī_0(N)``.

    ``route='cesaro'`` takes differences of Cesàro sums; ``route='direct'``
    sums over the union of shells; ``route='histogram'`` evaluates the
    weighted histogram (fastest for many tau).
    """
    spec = (spec or EnsembleSpec(N, cost)).with_N(N)
    if check:
        smoothing.check(N)
    N0 = smoothing.window_start(N)
    if route == "histogram":
        return smoothed_histogram(N, smoothing, spec, check=False).char_fn(tau)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    phi_q = per_q_charsums(spec, taus)
    n_q = per_q_moments(spec)[0]
    if route == "cesaro":
        psi = np.cumsum(np.cumsum(phi_q, axis=0), axis=0)
        psi0 = np.cumsum(np.cumsum(n_q))
        num = psi[N] - psi[N0 - 1]
        den = int(psi0[N] - psi0[N0 - 1])
    elif route == "direct":
        Phi = np.cumsum(phi_q, axis=0)
        Phi0 = np.cumsum(n_q)
        num = np.sum(Phi[N0:N + 1], axis=0)
        den = int(np.sum(Phi0[N0:N + 1]))
    else:
        raise ValueError(f"unknown route {route!r}")
    out = num / den
    out[taus == 0] = 1.0
    return complex(out[0]) if np.ndim(tau) == 0 else out


def smoothed_identity_exact(N: int, smoothing: SmoothingSpec, spec: EnsembleSpec) -> bool:
    """Histogram-level check: the union-of-shells weights equal the Cesàro
    difference ``Psi(N) - Psi(N0 - 1)`` multiplicity for multiplicity."""
    N0 = smoothing.window_start(N)
    direct = histogram(spec.with_N(N), smoothing_weights(N, N0))
    a = histogram(spec.with_N(N), cesaro_weights(N, N))
    b = histogram(spec.with_N(N), cesaro_weights(N0 - 1, N)) if N0 > 1 else None
    if b is None:
        return direct == a
    keys = np.union1d(a.keys, b.keys)
    ca = np.zeros(keys.size, np.int64)
    cb = np.zeros(keys.size, np.int64)
    ca[np.searchsorted(keys, a.keys)] = a.counts
    cb[np.searchsorted(keys, b.keys)] = b.counts
    d = ca - cb
    keep = d != 0
    return np.array_equal(keys[keep], direct.keys) and np.array_equal(d[keep], direct.counts)


@dataclass(frozen=True)
class DiscrepancyFit:
    N: int
    xi: float
    thresholds: tuple[float, ...]
    differences: tuple[float, ...]
    max_difference: float
    C_hat: float


def discrepancy_fit(N: int, smoothing: SmoothingSpec, spec: EnsembleSpec,
                    thresholds: Sequence[float] | None = None) -> DiscrepancyFit:
    """Compare smoothed and plain probabilities of level sets ``{C <= t}``;
    ``C_hat = max |difference| / xi(N)``."""
    plain = histogram(spec.with_N(N))
    smooth = smoothed_histogram(N, smoothing, spec, check=False)
    if thresholds is None:
        thresholds = np.quantile(plain.values, np.linspace(0.05, 0.95, 19)).tolist()
    diffs = tuple(abs(smooth.cdf(t) - plain.cdf(t)) for t in thresholds)
    xi = smoothing.xi(N)
    mx = max(diffs)
    return DiscrepancyFit(N, xi, tuple(thresholds), diffs, mx, mx / xi)


# ---------------------------------------------------------------- Dirichlet series

@dataclass(frozen=True)
class DirichletResult:
    s: complex
    tau: float
    Q_max: int
    partial: complex
    tail_bound: float           # rigorous: sum_{q > Q} q^(1 - 2 Re s)
    tail_estimate: complex      # power-law extrapolation of the cumulative sums
    tail_uncertainty: float     # spread of the extrapolation over two fit windows

    @property
    def corrected(self) -> complex:
        return self.partial + self.tail_estimate


def dirichlet_series(s: complex, cost: CostFunction, tau: float, Q_max: int,
                     algorithm=AlgorithmKind.ORDINARY, threads: int = 1) -> DirichletResult:
    """Truncated ``S(2s, i tau) = sum_{q <= Q} q^(-2s) sum_p exp(i tau C(p, q))``.

    The tail is bounded by ``Q^(2 - 2 Re s) / (2 Re s - 2)`` and estimated by
    Abel summation against a local power law ``Phi(x) ~ A x^kappa``.
    """
    s = complex(s)
    if s.real <= 1:
        raise ValueError("need Re s > 1")
    if Q_max < 100:
        raise ValueError("Q_max must be at least 100")
    spec = EnsembleSpec(Q_max, cost, algorithm)
    phi_q = per_q_charsums(spec, [tau], threads)[:, 0]
    q = np.arange(Q_max + 1, dtype=float)
    q[0] = 1.0
    terms = phi_q * q ** (-2 * s)
    terms[0] = 0
    partial = complex(np.sum(terms))
    Phi = np.cumsum(phi_q)
    sig2 = 2 * s.real

    def tail_est(a, b):
        kappa = np.log(Phi[b] / Phi[a]) / math.log(b / a)
        return complex(Phi[Q_max] * Q_max ** (-2 * s) * kappa / (2 * s - kappa))

    t1 = tail_est(Q_max // 2, Q_max)
    t2 = tail_est(Q_max // 4, Q_max // 2)
    bound = Q_max ** (2 - sig2) / (sig2 - 2)
    return DirichletResult(s, tau, Q_max, partial, float(bound), t1, abs(t1 - t2))


# ---------------------------------------------------------------- export

def rows_to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def moments_csv(rows: Sequence[MomentRow]) -> str:
    return rows_to_csv(["N", "E_N", "V_N", "E_N_over_logN", "V_N_over_logN"],
                       [(r.N, r.mean, r.var, r.mean_over_log, r.var_over_log) for r in rows])


def char_profile_csv(taus: Sequence[float], values: Sequence[complex]) -> str:
    return rows_to_csv(["tau", "re", "im", "modulus"],
                       [(float(t), float(v.real), float(v.imag), float(abs(v))) for t, v in zip(taus, values)])


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o))
