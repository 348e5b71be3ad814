"""Weighted transfer operators ``H_{s, i tau}`` discretized by Chebyshev
collocation, with spectral data, the ``sigma(i tau)`` branch, drift and
dispersion constants, the Dirichlet-resolvent identity and resolvent probes.

Layout of one operator matrix (node values in, node values out):

* branches with ``m <= m_exact`` are applied through barycentric
  interpolation at their exact images ``h(x_i)``;
* branches ``m_exact < m <= M_max`` land within ``1/m_exact`` of 0, where the
  interpolant is replaced by its Taylor polynomial of degree ``taylor_order``;
* branches ``m > M_max`` (tail) reuse that Taylor polynomial with the weight
  sums evaluated in closed form (integral-correction) or are dropped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import linalg as sla

from .cf_core import AlgorithmKind, DOMAIN_RIGHT, admissible_pairs
from .costs import CostFunction


class SpectralError(RuntimeError):
    """No spectral gap, singular system or non-convergent iteration."""


@dataclass(frozen=True)
class OperatorConfig:
    n: int = 48
    M_max: int = 10_000
    tail_mode: str = "integral-correction"
    algorithm: AlgorithmKind = AlgorithmKind.ORDINARY
    m_exact: int = 512
    taylor_order: int = 4

    def __post_init__(self):
        object.__setattr__(self, "algorithm", AlgorithmKind.parse(self.algorithm))
        if self.n < 8:
            raise ValueError("grid size n must be >= 8")
        if self.M_max < 16:
            raise ValueError("M_max must be >= 16")
        if self.tail_mode not in ("drop", "integral-correction"):
            raise ValueError(f"unknown tail mode {self.tail_mode!r}")
        if self.m_exact < 2 or self.taylor_order < 1:
            raise ValueError("m_exact >= 2 and taylor_order >= 1 required")

    def refined(self) -> "OperatorConfig":
        return replace(self, n=2 * self.n, M_max=2 * self.M_max)

    @property
    def right(self) -> float:
        return float(DOMAIN_RIGHT[self.algorithm])


# ---------------------------------------------------------------- collocation grid

@lru_cache(maxsize=16)
def _grid(n: int, b: float):
    """Chebyshev–Lobatto nodes on ``[0, b]`` (node 0 is x = 0), barycentric
    weights, Clenshaw–Curtis weights and the differentiation matrix."""
    k = np.arange(n)
    x = b * (1 - np.cos(np.pi * k / (n - 1))) / 2
    w = (-1.0) ** k
    w[0] *= 0.5
    w[-1] *= 0.5
    # differentiation matrix
    X = x[:, None] - x[None, :]
    np.fill_diagonal(X, 1.0)
    D = (w[None, :] / w[:, None]) / X
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    # Clenshaw–Curtis weights on [0, b]
    N = n - 1
    theta = np.pi * k / N
    cc = np.zeros(n)
    v = np.ones(N - 1)
    inner = slice(1, N)
    if N % 2 == 0:
        cc[0] = cc[N] = 1.0 / (N * N - 1)
        for j in range(1, N // 2):
            v -= 2 * np.cos(2 * j * theta[inner]) / (4 * j * j - 1)
        v -= np.cos(N * theta[inner]) / (N * N - 1)
    else:
        cc[0] = cc[N] = 1.0 / (N * N)
        for j in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * j * theta[inner]) / (4 * j * j - 1)
    cc[inner] = 2 * v / N
    cc *= b / 2
    return x, w, D, cc


def interp_matrix(x_nodes: np.ndarray, bw: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rows of barycentric Lagrange values ``l_j(y)``."""
    y = np.asarray(y, dtype=float)
    diff = y[..., None] - x_nodes
    hit = diff == 0
    diff[hit] = 1.0
    t = bw / diff
    out = t / t.sum(axis=-1, keepdims=True)
    if hit.any():
        rows = hit.any(axis=-1)
        out[rows] = hit[rows].astype(float)
    return out


def interpolate(op_or_cfg, values: np.ndarray, y) -> np.ndarray:
    cfg = op_or_cfg.config if isinstance(op_or_cfg, DiscretizedOperator) else op_or_cfg
    x, w, _, _ = _grid(cfg.n, cfg.right)
    return interp_matrix(x, w, np.atleast_1d(y)) @ values


def nodes(cfg: OperatorConfig) -> np.ndarray:
    return _grid(cfg.n, cfg.right)[0].copy()


def quadrature_weights(cfg: OperatorConfig) -> np.ndarray:
    return _grid(cfg.n, cfg.right)[3].copy()


@lru_cache(maxsize=8)
def _layout(cfg: OperatorConfig):
    """Geometry shared by every (s, tau): branch lists, interpolation tensor,
    logs of ``m + eps x_i`` and Taylor rows at 0."""
    x, bw, D, _ = _grid(cfg.n, cfg.right)
    ms, eps = admissible_pairs(cfg.algorithm, cfg.M_max)
    direct = ms <= cfg.m_exact
    md, ed = ms[direct], eps[direct]
    mm, em = ms[~direct], eps[~direct]
    den_d = md[None, :] + ed[None, :] * x[:, None]
    L = interp_matrix(x, bw, 1.0 / den_d)                   # (n, nd, n)
    den_m = mm[None, :] + em[None, :] * x[:, None]
    rows = [np.eye(cfg.n)[0]]
    Dk = np.eye(cfg.n)
    for k in range(1, cfg.taylor_order + 1):
        Dk = D @ Dk
        rows.append(Dk[0] / math.factorial(k))
    return dict(x=x, md=md, ed=ed, L=L, logd=np.log(den_d), mm=mm, em=em,
                logm=np.log(den_m), invm=1.0 / den_m, taylor=np.array(rows))


@lru_cache(maxsize=64)
def _cost_values(cost: CostFunction, M: int) -> np.ndarray:
    return cost.lookup(M)


def _tail_signs(alg: AlgorithmKind) -> list[tuple[int, int, int]]:
    """``(eps, step, residue)`` families of admissible digits beyond the table."""
    if alg is AlgorithmKind.ORDINARY:
        return [(1, 1, 0)]
    if alg is AlgorithmKind.CENTERED:
        return [(1, 1, 0), (-1, 1, 0)]
    return [(1, 2, 1), (-1, 2, 1)]


def _segment_sum(x_eff, alpha, beta, c0, tau, lo, hi, step):
    """``sum_{m = lo, lo+step, ..., <= hi} exp(i tau c0) m^beta (m + x)^-alpha``
    via Euler–Maclaurin with the integral expanded in ``x / m``."""
    a = float(lo)
    x = x_eff.astype(complex)
    ratio = np.max(np.abs(x_eff)) / a
    J = 1 if ratio == 0 else int(min(80, max(2, math.ceil(-18 / math.log10(ratio)))))
    infinite = math.isinf(hi)
    b = None if infinite else float(hi)
    integral = np.zeros_like(x)
    coef = 1.0 + 0j
    xp = np.ones_like(x)
    for j in range(J + 1):
        e = beta - alpha - j + 1
        piece = -a ** e / e if infinite else (b ** e - a ** e) / e
        integral += coef * xp * piece
        coef *= (-alpha - j) / (j + 1)
        xp = xp * x

    def f(t):
        return t ** beta * (t + x) ** (-alpha)

    def fp(t):
        return f(t) * (beta / t - alpha / (t + x))

    total = integral / step + f(a) / 2 - step * fp(a) / 12
    if not infinite:
        total += f(b) / 2 + step * fp(b) / 12
        if b == a:
            total = f(a)
    return np.exp(1j * tau * c0) * total


def _tail_weight_sums(cfg: OperatorConfig, cost: CostFunction, s: complex, tau: float):
    """Closed-form ``sum_{m > M_max} e^{i tau c(m)} (m + eps x_i)^{-2s-k}`` for
    k = 0..taylor_order, or None when the cost has no smooth tail model."""
    x = _grid(cfg.n, cfg.right)[0]
    segs = [(cfg.M_max + 1, math.inf, 0.0, 0.0)] if tau == 0 else cost.tail_segments(cfg.M_max + 1)
    if segs is None:
        return None
    out = np.zeros((cfg.taylor_order + 1, cfg.n), dtype=complex)
    for eps, step, res in _tail_signs(cfg.algorithm):
        for lo, hi, kappa, c0 in segs:
            lo = int(lo)
            if step == 2 and lo % 2 != res:
                lo += 1
            if not math.isinf(hi):
                hi = int(hi)
                if step == 2 and hi % 2 != res:
                    hi -= 1
                if hi < lo:
                    continue
            for k in range(cfg.taylor_order + 1):
                out[k] += _segment_sum(eps * x, 2 * s + k, 1j * tau * kappa, c0, tau, lo, hi, step)
    return out


def _drop_bound(cfg: OperatorConfig, sigma: float) -> float:
    """Sup-norm bound on the dropped tail, relative to ``||u||_inf``."""
    M = cfg.M_max
    fams = len(_tail_signs(cfg.algorithm))
    return fams * (M - 1) ** (1 - 2 * sigma) / (2 * sigma - 1)


@dataclass(frozen=True)
class DiscretizedOperator:
    s: complex
    tau: float
    matrix: np.ndarray
    config: OperatorConfig
    cost_name: str
    final: bool = False
    tail_mode_used: str = "integral-correction"
    tail_bound: float = 0.0

    @property
    def nodes(self) -> np.ndarray:
        return nodes(self.config)

    @property
    def zero_index(self) -> int:
        return 0

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u

    def at_zero(self, u: np.ndarray) -> complex:
        return complex((self.matrix @ u)[0])


def _assemble(s, tau, cost, cfg, skip_unit=False):
    lay = _layout(cfg)
    s = complex(s)
    ctab = _cost_values(cost, cfg.M_max)
    phase_d = np.exp(1j * tau * ctab[lay["md"]]) if tau != 0 else np.ones(lay["md"].size)
    W = phase_d[None, :] * np.exp(-2 * s * lay["logd"])
    if skip_unit:
        W = W.copy()
        W[:, (lay["md"] == 1) & (lay["ed"] == 1)] = 0.0
    A = np.einsum("ib,ibj->ij", W, lay["L"])
    S = np.zeros((cfg.taylor_order + 1, cfg.n), dtype=complex)
    if lay["mm"].size:
        phase_m = np.exp(1j * tau * ctab[lay["mm"]]) if tau != 0 else np.ones(lay["mm"].size)
        base = phase_m[None, :] * np.exp(-2 * s * lay["logm"])
        for k in range(cfg.taylor_order + 1):
            S[k] = base.sum(axis=1)
            base = base * lay["invm"]
    mode = cfg.tail_mode
    bound = 0.0
    if mode == "integral-correction":
        T = _tail_weight_sums(cfg, cost, s, tau)
        if T is None:
            mode = "drop"
        else:
            S += T
    if mode == "drop":
        bound = _drop_bound(cfg, s.real)
    A = A + S.T @ lay["taylor"]
    return A, mode, bound


def build(s, tau: float, cost: CostFunction, config: OperatorConfig | None = None) -> DiscretizedOperator:
    """Matrix of ``u -> sum_h e^{i tau c(h)} |h'|^s u o h`` on node values."""
    cfg = config or OperatorConfig()
    s = complex(s)
    if s.real <= 0.5:
        raise ValueError("need Re s > 1/2")
    A, mode, bound = _assemble(s, float(tau), cost, cfg)
    if not np.all(np.isfinite(A)):
        raise SpectralError("non-finite operator entries")
    return DiscretizedOperator(s, float(tau), A, cfg, cost.name, False, mode, bound)


def build_final(s, tau: float, cost: CostFunction, config: OperatorConfig | None = None) -> DiscretizedOperator:
    """As ``build`` without the branch ``y -> 1/(1 + y)`` (ordinary algorithm only)."""
    cfg = config or OperatorConfig()
    if cfg.algorithm is not AlgorithmKind.ORDINARY:
        raise ValueError("the final-step operator is defined for the ordinary algorithm only")
    s = complex(s)
    if s.real <= 0.5:
        raise ValueError("need Re s > 1/2")
    A, mode, bound = _assemble(s, float(tau), cost, cfg, skip_unit=True)
    return DiscretizedOperator(s, float(tau), A, cfg, cost.name, True, mode, bound)


# ---------------------------------------------------------------- spectra

@dataclass(frozen=True)
class SpectralData:
    eigenvalue: complex
    right: np.ndarray          # normalized so that its integral is 1 (when nonzero)
    left: np.ndarray           # normalized so that left @ right = 1
    subdominant: complex
    residual: float

    @property
    def gap(self) -> float:
        """``1 - |lambda_2| / |lambda_1|``."""
        return 1.0 - abs(self.subdominant) / abs(self.eigenvalue)

    @property
    def projector(self) -> np.ndarray:
        return np.outer(self.right, self.left)

    def project(self, u: np.ndarray) -> np.ndarray:
        return self.right * (self.left @ u)


def dominant_eig(op: DiscretizedOperator, gap_tol: float = 1e-6, near: complex | None = None) -> SpectralData:
    """Dominant eigenvalue (largest modulus, or closest to ``near``) with
    right/left eigenvectors and the rank-one projector."""
    A = op.matrix
    vals, vl, vr = sla.eig(A, left=True, right=True)
    order = np.argsort(-np.abs(vals))
    vals, vl, vr = vals[order], vl[:, order], vr[:, order]
    k = 0 if near is None else int(np.argmin(np.abs(vals - near)))
    lam = complex(vals[k])
    others = np.delete(vals, k)
    sub = complex(others[np.argmax(np.abs(others))]) if others.size else 0j
    if near is None and abs(lam) - abs(sub) < gap_tol * max(abs(lam), 1e-300):
        raise SpectralError(f"no spectral gap: |lambda1|={abs(lam):.6g}, |lambda2|={abs(sub):.6g}")
    v = vr[:, k]
    cc = quadrature_weights(op.config)
    mass = cc @ v
    v = v / mass if abs(mass) > 1e-12 else v / v[np.argmax(np.abs(v))]
    w = vl[:, k].conj()
    w = w / (w @ v)
    res = float(np.max(np.abs(A @ v - lam * v)) / max(np.max(np.abs(v)), 1e-300))
    return SpectralData(lam, v, w, sub, res)


def eigenvalue(s, tau: float, cost: CostFunction, config: OperatorConfig | None = None,
               near: complex | None = None) -> complex:
    A = build(s, tau, cost, config).matrix
    vals = np.linalg.eigvals(A)
    if near is None:
        return complex(vals[np.argmax(np.abs(vals))])
    return complex(vals[np.argmin(np.abs(vals - near))])


def ds_lambda(s, tau, cost, config=None, h: float = 1e-5, near=None) -> complex:
    """``d lambda / ds`` by Richardson-extrapolated centered differences."""
    ref = eigenvalue(s, tau, cost, config, near)

    def d(step):
        return (eigenvalue(s + step, tau, cost, config, ref) - eigenvalue(s - step, tau, cost, config, ref)) / (2 * step)

    return (4 * d(h / 2) - d(h)) / 3


def invariant_density(x):
    """``1 / (log 2 (1 + x))``."""
    return 1.0 / (math.log(2) * (1.0 + np.asarray(x, dtype=float)))


# ---------------------------------------------------------------- sigma branch

@dataclass(frozen=True)
class SigmaSolution:
    tau: float
    sigma: complex
    iterations: int
    residual: float


def solve_sigma(tau: float, cost: CostFunction, config: OperatorConfig | None = None,
                start: complex | None = None, tol: float = 1e-10, max_iter: int = 50,
                nu0: float = 1.0) -> SigmaSolution:
    """Root of ``s -> lambda(s, i tau) - 1`` by Newton from ``start`` (default 1)."""
    if abs(tau) >= nu0:
        raise ValueError(f"|tau| must be below nu0={nu0}")
    s = complex(start if start is not None else 1.0)
    lam_ref = 1.0 + 0j
    for it in range(1, max_iter + 1):
        lam = eigenvalue(s, tau, cost, config, near=lam_ref)
        r = lam - 1.0
        if abs(r) < tol:
            return SigmaSolution(float(tau), s, it, abs(r))
        d = ds_lambda(s, tau, cost, config, near=lam)
        s = s - r / d
        lam_ref = lam
    lam = eigenvalue(s, tau, cost, config, near=lam_ref)
    if abs(lam - 1) < tol:
        return SigmaSolution(float(tau), s, max_iter, abs(lam - 1))
    raise SpectralError(f"Newton for sigma did not converge at tau={tau}: |lambda-1|={abs(lam - 1):.3g}")


def sigma_curve(taus, cost, config=None, tol=1e-10, nu0=1.0) -> list[SigmaSolution]:
    """Solve along a tau grid with continuation from |tau| small to large."""
    taus = list(taus)
    order = sorted(range(len(taus)), key=lambda i: abs(taus[i]))
    out: dict[int, SigmaSolution] = {}
    prev = {1: None, -1: None}
    for i in order:
        t = taus[i]
        sg = 1 if t >= 0 else -1
        sol = solve_sigma(t, cost, config, start=prev[sg].sigma if prev[sg] else None, tol=tol, nu0=nu0)
        prev[sg] = sol
        out[i] = sol
    return [out[i] for i in range(len(taus))]


@dataclass(frozen=True)
class DriftDispersion:
    mu: float
    delta2: float
    mu_imag: float
    delta2_imag: float
    step: float
    sigma0: complex


def drift_dispersion(cost: CostFunction, config: OperatorConfig | None = None, h: float = 0.05,
                     tol: float = 1e-11) -> DriftDispersion:
    """``mu = 2 sigma'(0)`` and ``delta^2 = 2 sigma''(0)``, derivatives taken in
    ``w = i tau``, from Richardson-extrapolated central differences in tau."""
    taus = [-h, -h / 2, 0.0, h / 2, h]
    sols = sigma_curve(taus, cost, config, tol=tol, nu0=max(1.0, 2 * h))
    sm, smh, s0, sph, sp = (x.sigma for x in sols)

    d1 = lambda a, b, step: (b - a) / (2 * step)                        # noqa: E731
    d2 = lambda a, c, b, step: (b - 2 * c + a) / step ** 2               # noqa: E731
    ds_dtau = (4 * d1(smh, sph, h / 2) - d1(sm, sp, h)) / 3
    d2s_dtau = (4 * d2(smh, s0, sph, h / 2) - d2(sm, s0, sp, h)) / 3
    mu = -2j * ds_dtau
    delta2 = -2 * d2s_dtau
    return DriftDispersion(mu.real, delta2.real, mu.imag, delta2.imag, h, s0)


# ---------------------------------------------------------------- resolvent identities

def dirichlet_via_resolvent(s, tau: float, cost: CostFunction, config: OperatorConfig | None = None,
                            include_unit: bool = True, cond_max: float = 1e12) -> complex:
    """``F (Id - H)^{-1}(1)(0)``; with ``include_unit`` the pair (1, 1), which
    the final-step operator never produces, is added as ``e^{i tau c(1)}``."""
    s = complex(s)
    if s.real <= 1:
        raise ValueError("need Re s > 1")
    cfg = config or OperatorConfig()
    H = build(s, tau, cost, cfg)
    F = build_final(s, tau, cost, cfg)
    M = np.eye(cfg.n) - H.matrix
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cond_max:
        raise SpectralError(f"Id - H is numerically singular (condition {cond:.3g})")
    v = np.linalg.solve(M, np.ones(cfg.n))
    val = F.at_zero(v)
    if include_unit:
        val += np.exp(1j * tau * cost(1))
    return complex(val)


def resolvent_condition(s, tau, cost, config=None) -> float:
    cfg = config or OperatorConfig()
    return float(np.linalg.cond(np.eye(cfg.n) - build(s, tau, cost, cfg).matrix))


@dataclass(frozen=True)
class EFactor:
    tau: float
    E: complex
    sigma: complex
    ds_lambda: complex


def E_factor(tau: float, cost: CostFunction, config: OperatorConfig | None = None,
             sigma: complex | None = None, nu0: float = 1.0) -> EFactor:
    """``E(i tau) = -1/(d_s lambda) * F P(1)(0)`` at ``s = sigma(i tau)``."""
    if sigma is None:
        sigma = solve_sigma(tau, cost, config, nu0=nu0).sigma
    H = build(sigma, tau, cost, config)
    sd = dominant_eig(H, near=1.0)
    F = build_final(sigma, tau, cost, config)
    fp = F.at_zero(sd.project(np.ones(H.config.n)))
    dl = ds_lambda(sigma, tau, cost, config, near=sd.eigenvalue)
    return EFactor(float(tau), complex(-fp / dl), complex(sigma), complex(dl))


def small_tau_prediction(tau: float, N: int, cost: CostFunction, config: OperatorConfig | None = None) -> complex:
    """``E(i tau) / (E(0) sigma(i tau)) * N^{2 (sigma(i tau) - sigma(0))}``."""
    e0 = E_factor(0.0, cost, config)
    et = E_factor(tau, cost, config)
    return et.E / (e0.E * et.sigma) * complex(N) ** (2 * (et.sigma - e0.sigma))


# ---------------------------------------------------------------- resolvent-norm probe

@lru_cache(maxsize=8)
def _pl_layout(n: int, b: float, m_max: int, alg: AlgorithmKind):
    x = np.linspace(0.0, b, n)
    ms, eps = admissible_pairs(alg, m_max)
    y = 1.0 / (ms[None, :] + eps[None, :] * x[:, None])
    idx = np.clip(np.searchsorted(x, y, side="right") - 1, 0, n - 2)
    frac = (y - x[idx]) / (x[idx + 1] - x[idx])
    return x, ms, eps, idx, frac, np.log(ms[None, :] + eps[None, :] * x[:, None])


def pl_matrix(s, tau, cost, n: int = 256, m_max: int = 2000, alg=AlgorithmKind.ORDINARY) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-linear Nyström matrix; entries are nonnegative at real s, tau = 0.

    Branches past ``m_max`` are lumped onto the node x = 0 with their
    closed-form weight sums.
    """
    alg = AlgorithmKind.parse(alg)
    b = float(DOMAIN_RIGHT[alg])
    x, ms, eps, idx, frac, logd = _pl_layout(n, b, m_max, alg)
    ctab = _cost_values(cost, m_max)
    W = np.exp(1j * tau * ctab[ms])[None, :] * np.exp(-2 * complex(s) * logd)
    A = np.zeros((n, n), dtype=complex)
    rows = np.repeat(np.arange(n), ms.size)
    np.add.at(A, (rows, idx.ravel()), (W * (1 - frac)).ravel())
    np.add.at(A, (rows, idx.ravel() + 1), (W * frac).ravel())
    tail_cfg = OperatorConfig(n=n if n <= 512 else 512, M_max=m_max, algorithm=alg, taylor_order=1)
    if tail_cfg.n == n:
        T = _tail_weight_sums(tail_cfg, cost, complex(s), tau)
        if T is not None:
            # the tail sums are evaluated on Chebyshev nodes; resample to x
            xc = _grid(tail_cfg.n, b)[0]
            t0 = interp_matrix(xc, _grid(tail_cfg.n, b)[1], x) @ T[0]
            A[:, 0] += t0
    return A, x


@dataclass(frozen=True)
class ResolventProbe:
    sigma: float
    t: float
    tau: float
    norm: float
    singular: bool
    lambda_dominant: complex
    weight: str = "perron-weighted sup norm, piecewise-linear discretization"


def resolvent_norm_probe(sigma: float, t: float, tau: float, cost: CostFunction,
                         config: OperatorConfig | None = None, n_pl: int = 256, m_pl: int = 2000,
                         singular_tol: float = 1e-6) -> ResolventProbe:
    """Heuristic size of ``(Id - H_{sigma + it, i tau})^{-1}``.

    The norm is the sup norm weighted by the Perron vector ``v`` of the
    real operator at ``sigma``: ``max_i sum_j |B_ij| v_j / v_i``.  Near the
    spectral locus ``lambda = 1`` a singularity flag is returned instead.
    """
    cfg = config or OperatorConfig()
    s = complex(sigma, t)
    lam = eigenvalue(s, tau, cost, cfg)
    if abs(lam - 1) < singular_tol:
        return ResolventProbe(sigma, t, tau, math.inf, True, lam)
    A, _ = pl_matrix(s, tau, cost, n_pl, m_pl, cfg.algorithm)
    P, _ = pl_matrix(sigma, 0.0, cost, n_pl, m_pl, cfg.algorithm)
    vals, vecs = np.linalg.eig(P.real)
    k = int(np.argmax(vals.real))
    v = np.abs(vecs[:, k].real)
    v = v / v.max()
    M = np.eye(n_pl) - A
    try:
        B = np.linalg.solve(M, np.eye(n_pl))
    except np.linalg.LinAlgError:
        return ResolventProbe(sigma, t, tau, math.inf, True, lam)
    if not np.all(np.isfinite(B)):
        return ResolventProbe(sigma, t, tau, math.inf, True, lam)
    norm = float(np.max((np.abs(B) @ v) / v))
    return ResolventProbe(sigma, t, tau, norm, False, lam)


def perron_eigenvalue_pl(sigma: float, cost, n_pl=256, m_pl=2000, alg=AlgorithmKind.ORDINARY) -> float:
    P, _ = pl_matrix(sigma, 0.0, cost, n_pl, m_pl, alg)
    return float(np.max(np.linalg.eigvals(P.real).real))


@dataclass(frozen=True)
class ProbeSweep:
    rows: list
    slope: float
    intercept: float


def resolvent_sweep(sigma: float, t: float, taus, cost: CostFunction, config: OperatorConfig | None = None,
                    **kw) -> ProbeSweep:
    """Probe on a tau grid; fitted log-log slope of norm against |tau| over the
    nonsingular points."""
    cfg = config or OperatorConfig()
    rows = []
    for tau in taus:
        pr = resolvent_norm_probe(sigma, t, tau, cost, cfg, **kw)
        op = build(complex(sigma, t), tau, cost, cfg)
        try:
            sd = dominant_eig(op)
            lam, gap = sd.eigenvalue, sd.gap
        except SpectralError:
            lam, gap = pr.lambda_dominant, 0.0
        rows.append({"s_re": sigma, "s_im": t, "tau": float(tau), "lambda_re": lam.real,
                     "lambda_im": lam.imag, "gap": gap,
                     "resolvent_norm": None if pr.singular else pr.norm, "singular": pr.singular})
    ok = [(abs(r["tau"]), r["resolvent_norm"]) for r in rows if r["resolvent_norm"] and r["tau"] != 0]
    if len(ok) >= 2:
        a = np.array(ok)
        slope, icpt = np.polyfit(np.log(a[:, 0]), np.log(a[:, 1]), 1)
    else:
        slope = icpt = math.nan
    return ProbeSweep(rows, float(slope), float(icpt))


def sweep_json(sweep: ProbeSweep) -> str:
    return json.dumps({"rows": sweep.rows, "loglog_slope": sweep.slope, "loglog_intercept": sweep.intercept},
                      indent=2)
