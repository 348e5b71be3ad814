"""Acceptance criteria C1..C13.  Each test prints one PASS/FAIL line; the
lines are repeated in the pytest terminal summary."""

import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from euclid_llt.cf_core import AlgorithmKind, expand, reconstruct
from euclid_llt.costs import CostFunction
from euclid_llt.diophantine import periodic_point, single_digit_alpha, strongly_dio_report
from euclid_llt.ensemble import (EnsembleSpec, SmoothingSpec, count, count_ratio, dirichlet_series,
                                 histogram_snapshots, log_slope, moments_table, smoothed_char_fn,
                                 smoothed_histogram)
from euclid_llt.limit_lab import (Gaussian, RegionConfig, clt_check, fourier_inversion_check, llt_interval,
                                  mollifier_fit, mollifier_hat_quadrature, mollify, plateau, region_profile)
from euclid_llt.transfer_op import (OperatorConfig, build, dirichlet_via_resolvent, dominant_eig,
                                    drift_dispersion, interpolate, invariant_density, nodes, small_tau_prediction)

ONE = CostFunction.constant(1)
LOG = CostFunction.log()
POW2 = [2 ** k for k in range(8, 15)]


def report(tag: str, ok: bool, detail: str) -> None:
    line = f"{tag:<4} {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def spectral():
    return {"one": drift_dispersion(ONE), "log": drift_dispersion(LOG)}


def sieve_totients(n):
    phi = list(range(n + 1))
    for i in range(2, n + 1):
        if phi[i] == i:
            for j in range(i, n + 1, i):
                phi[j] -= phi[j] // i
    return phi


def test_c1_exact_counting():
    phi = sieve_totients(5000)
    acc, bad = 0, []
    for N in range(1, 5001):
        acc += phi[N]
        if count(N) != acc:
            bad.append(N)
    r = count_ratio(1000)
    ok = not bad and 0.995 <= r <= 1.005
    report("C1", ok, f"count(N) == totient sieve for N<=5000 (mismatches={len(bad)}); "
                     f"count(1000)/(3e6/pi^2) = {r:.6f} in [0.995, 1.005]")


def test_c2_round_trip():
    failures = violations = checked = 0
    for alg in AlgorithmKind:
        for q in range(1, 501):
            for p in range(1, q + 1):
                if math.gcd(p, q) != 1:
                    continue
                e = expand(p, q, alg)
                r = reconstruct(e)
                failures += (r.p, r.q) != (p, q)
                violations += len(e.constraint_violations())
                checked += 1
    report("C2", failures == 0 and violations == 0,
           f"{checked} expansions (3 algorithms, q<=500): round-trip failures={failures}, "
           f"digit-constraint violations={violations}")


def test_c3_spectral_anchor():
    cfg = OperatorConfig(n=48, M_max=10_000, tail_mode="integral-correction")
    sd = dominant_eig(build(1.0, 0.0, ONE, cfg))
    lam_err = abs(sd.eigenvalue - 1)
    y = np.linspace(0, 1, 1001)
    vec_err = max(float(np.max(np.abs(sd.right.real - invariant_density(nodes(cfg))))),
                  float(np.max(np.abs(interpolate(cfg, sd.right.real, y) - invariant_density(y)))))
    report("C3", lam_err < 1e-8 and vec_err < 1e-6,
           f"|lambda(1,0) - 1| = {lam_err:.2e} (< 1e-8); sup|v - f1| = {vec_err:.2e} (< 1e-6)")


def test_c4_drift(spectral):
    out, ok = [], True
    for name, cost, tol in (("one", ONE, 0.03), ("log", LOG, 0.05)):
        rows = moments_table(POW2, cost)
        slope, _ = log_slope(POW2, [r.mean for r in rows])
        mu = spectral[name].mu
        rel = abs(slope - mu) / mu
        ok &= rel <= tol
        out.append(f"{name}: mu={mu:.6f} slope={slope:.6f} rel={rel:.4f} (<= {tol})")
    report("C4", ok, "; ".join(out))


def test_c5_dispersion(spectral):
    rows = moments_table(POW2, ONE)
    slope, _ = log_slope(POW2, [r.var for r in rows])
    d2 = spectral["one"].delta2
    rel = abs(slope - d2) / d2
    report("C5", rel <= 0.10, f"one: delta^2={d2:.6f} slope(V_N)={slope:.6f} rel={rel:.4f} (<= 0.10)")


def test_c6_dirichlet_resolvent():
    out, ok = [], True
    for s, tau in ((1.5, 0.0), (1.25, 0.3)):
        op = dirichlet_via_resolvent(s, tau, LOG)
        ser = dirichlet_series(s, LOG, tau, 20_000)
        rel = abs(ser.corrected - op) / abs(op)
        raw = abs(ser.partial - op)
        ok &= rel <= 1e-3 and raw <= ser.tail_bound
        out.append(f"(s,tau)=({s},{tau}): rel={rel:.2e} (<= 1e-3), |partial-op|={raw:.2e} <= bound {ser.tail_bound:.2e}")
    report("C6", ok, "; ".join(out))


def test_c7_small_tau_law():
    N, tau = 10_000, 0.05
    emp = abs(smoothed_char_fn(N, SmoothingSpec(), ONE, tau, route="histogram"))
    pred = abs(small_tau_prediction(tau, N, ONE))
    rel = abs(emp - pred) / pred
    report("C7", rel <= 0.05, f"N=1e4 tau=0.05: |E_N|={emp:.6f} predicted={pred:.6f} rel={rel:.2e} (<= 0.05)")


def test_c8_clt_trend(spectral):
    mu, d = spectral["one"].mu, math.sqrt(spectral["one"].delta2)
    snaps = histogram_snapshots(EnsembleSpec(POW2[-1], ONE), POW2)
    dist = [clt_check(N, ONE, mu, d, hist=snaps[N]) for N in POW2]
    inversions = sum(1 for a, b in zip(dist, dist[1:]) if b > a)
    c_hat = max(x * math.sqrt(math.log(N)) for x, N in zip(dist, POW2))
    bounded = all(x <= c_hat / math.sqrt(math.log(N)) + 1e-15 for x, N in zip(dist, POW2))
    report("C8", inversions <= 1 and bounded,
           "distances " + ", ".join(f"{x:.4f}" for x in dist)
           + f"; inversions={inversions} (<= 1); C_hat={c_hat:.4f}")


def test_c9_lattice_llt(spectral):
    mu, d = spectral["one"].mu, math.sqrt(spectral["one"].delta2)
    Ns = [1000, 10_000, 30_000]
    snaps = histogram_snapshots(EnsembleSpec(Ns[-1], ONE), Ns)
    ratios = [llt_interval(N, ONE, 0.0, (-0.5, 0.5), mu, d, hist=snaps[N]).ratio for N in Ns]
    gaps = [abs(r - 1) for r in ratios]
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and 0.7 <= ratios[-1] <= 1.3
    report("C9", ok, "ratios " + ", ".join(f"N={N}: {r:.4f}" for N, r in zip(Ns, ratios))
           + "; |ratio-1| decreasing, last in [0.7, 1.3]")


def test_c10_mollifier():
    grid = [(dl, t) for dl in (0.1, 0.5, 1.0, 2.0) for t in (0.5, 1.0, 2.0, 5.0)]
    quad = {(dl, t): mollifier_hat_quadrature(dl, t) for dl, t in grid}
    err_claim = max(abs(quad[k] - math.exp(-(k[0] * k[1]) ** 2)) for k in grid)
    err_quarter = max(abs(quad[k] - math.exp(-(k[0] * k[1]) ** 2 / 4)) for k in grid)
    fit = mollifier_fit(plateau((0.0, 1.0), 0.25, +1), [1e-1, 1e-2, 1e-3])
    ok = err_claim <= 1e-10 and fit.spread <= 0.05
    report("C10", ok,
           f"max|quad - exp(-d^2 t^2)| = {err_claim:.3e} (<= 1e-10); "
           f"max|quad - exp(-d^2 t^2/4)| = {err_quarter:.1e}; "
           f"D = {', '.join(f'{x:.6f}' for x in fit.D)} spread={fit.spread:.1e} (<= 0.05)")


def test_c11_fourier_inversion(spectral):
    mu, d = spectral["log"].mu, math.sqrt(spectral["log"].delta2)
    g = fourier_inversion_check(500, LOG, 0.0, Gaussian(1.0), mu, d, tau_cutoff=12)
    psi = mollify(plateau((-1.0, 1.0), 0.01, +1), 0.1)
    m = fourier_inversion_check(2000, LOG, 0.3, psi, mu, d, tau_cutoff=150)
    report("C11", g.difference <= 1e-6 and m.difference <= 1e-4,
           f"gaussian N=500: |A-B|={g.difference:.2e} (<= 1e-6); "
           f"mollified plateau N=2000: |A-B|={m.difference:.2e} (<= 1e-4)")


def test_c12_diophantine_algebra():
    alpha_err = max(abs(single_digit_alpha(m) - periodic_point([m]).a) for m in range(1, 51))
    zero_ok = True
    tuple_sets = [[[1], [2], [3], [4]], [[1, 2], [3], [2, 2, 1], [5]], [[1], [1, 3], [2, 4], [7]]]
    for v in (1, 2, Fraction(3, 7)):
        for ts in tuple_sets:
            rep = strongly_dio_report(ts, CostFunction.constant(v), Q_max=200)
            zero_ok &= all(x == 0 for x in rep.L.values()) and all(rep.L_exact_zero.values())
    anti_ok = True
    for c in (LOG, CostFunction.bitlength(), CostFunction.identity()):
        rep = strongly_dio_report([[1], [2], [3], [4]], c, Q_max=200)
        anti_ok &= all(v == -rep.L_tilde[(k, j)] for (j, k), v in rep.L_tilde.items())
    report("C12", alpha_err <= 1e-12 and zero_ok and anti_ok,
           f"max|alpha(m) - a(m)|, m<=50 = {alpha_err:.1e} (<= 1e-12); constant costs L_1j == 0: {zero_ok}; "
           f"L~_jk == -L~_kj exactly: {anti_ok}")


def test_c13_lattice_resonance():
    N = 10_000
    cfg = RegionConfig(alpha2=1.0, points_per_region=64)
    sm = SmoothingSpec()
    h1 = smoothed_histogram(N, sm, EnsembleSpec(N, ONE))
    exact_one = h1.char_fn_turns(Fraction(1)) == 1
    p1 = region_profile(N, ONE, cfg, sm, hist=h1)
    pl = region_profile(N, LOG, cfg, sm)
    taus, mods = pl.regions["large"]
    env = pl.envelope["large"]
    below = pl.decay_observed and bool(np.all(mods <= env * (1 + 1e-12)))
    ok = exact_one and below and (not p1.decay_observed) and 2 * math.pi in p1.resonances
    report("C13", ok,
           f"c=1: E_N(e^(2 pi i C)) == 1 exactly: {exact_one}, resonances={[round(r, 4) for r in p1.resonances]}, "
           f"region-3 decay violated: {not p1.decay_observed}; c=log: region-3 envelope alpha'={pl.alpha_hat:.3f} "
           f"holds: {below} (L_N={pl.L_N:.2f}, alpha''=1)")
