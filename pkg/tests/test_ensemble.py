import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from euclid_llt.cf_core import AlgorithmKind
from euclid_llt.costs import CostFunction
from euclid_llt.ensemble import (CostHistogram, EnsembleSpec, SmoothingError, SmoothingSpec, cesaro, cesaro_count,
                                 char_fn, count, count_ratio, dirichlet_series, discrepancy_fit, enumerate_pairs,
                                 histogram, histogram_snapshots, moments, moments_table, phi_profile,
                                 smoothed_char_fn, smoothed_histogram, smoothed_identity_exact, smoothing_weights)


def sieve_totients(n):
    phi = list(range(n + 1))
    for i in range(2, n + 1):
        if phi[i] == i:
            for j in range(i, n + 1, i):
                phi[j] -= phi[j] // i
    return phi


def euclid_digits(p, q):
    out = []
    while p:
        out.append(q // p)
        p, q = q % p, p
    return out


def brute_costs(N, c):
    return [sum(c(m) for m in euclid_digits(p, q)) for q in range(1, N + 1) for p in range(1, q + 1)
            if math.gcd(p, q) == 1]


def test_count_matches_sieve():
    phi = sieve_totients(5000)
    acc = 0
    for N in range(1, 5001):
        acc += phi[N]
        if N % 97 == 0 or N < 30 or N == 5000:
            assert count(N) == acc


def test_count_examples():
    assert count(10) == 32
    assert count(1) == 1
    assert count(10, coprime_only=False) == 55
    assert 0.995 <= count_ratio(1000) <= 1.005


def test_enumerate_small():
    pairs = [(p, q) for p, q, _ in enumerate_pairs(EnsembleSpec(10))]
    assert len(pairs) == 32 and pairs[0] == (1, 1)
    assert len(list(enumerate_pairs(EnsembleSpec(10, coprime_only=False)))) == 55


@pytest.mark.parametrize("cost", [CostFunction.constant(1), CostFunction.log(), CostFunction.bitlength()])
def test_moments_vs_brute_force(cost):
    vals = brute_costs(60, cost)
    e, v = moments(EnsembleSpec(60, cost))
    assert e == pytest.approx(np.mean(vals), rel=1e-13)
    assert v == pytest.approx(np.var(vals), rel=1e-11)


def test_moments_N1():
    assert moments(EnsembleSpec(1)) == (1.0, 0.0)


def test_moments_table_consistent_with_single_runs():
    rows = moments_table([10, 40, 100], CostFunction.constant(1))
    for r in rows:
        e, v = moments(EnsembleSpec(r.N))
        assert r.mean == pytest.approx(e, rel=1e-14) and r.var == pytest.approx(v, rel=1e-10)
        assert r.count == count(r.N)


def test_histogram_counts_and_values():
    h = histogram(EnsembleSpec(200))
    assert h.total == count(200)
    assert np.all(h.values == np.round(h.values)) and h.values.min() >= 1
    brute = {}
    for c in brute_costs(200, CostFunction.constant(1)):
        brute[c] = brute.get(c, 0) + 1
    assert dict(zip(h.values.astype(int).tolist(), h.counts.tolist())) == brute


def test_histogram_merge_is_order_free():
    spec = EnsembleSpec(300, CostFunction.log())
    parts = [histogram(spec, q_range=r) for r in [(1, 80), (81, 200), (201, 300)]]
    whole = histogram(spec)
    assert parts[0].merge(parts[1]).merge(parts[2]) == whole
    assert parts[2].merge(parts[0].merge(parts[1])) == whole


def test_histogram_thread_independent():
    spec = EnsembleSpec(400, CostFunction.log())
    assert histogram(spec, threads=1) == histogram(spec, threads=3)


def test_snapshots_match_direct():
    spec = EnsembleSpec(300)
    snaps = histogram_snapshots(spec, [50, 300, 120])
    for N, h in snaps.items():
        assert h == histogram(spec.with_N(N))


def test_char_fn_properties():
    spec = EnsembleSpec(100)
    assert char_fn(spec, 0.0) == 1
    z = complex(char_fn(spec, 0.3))
    assert complex(char_fn(spec, -0.3)) == pytest.approx(z.conjugate(), abs=1e-15)
    direct = sum(cmath.exp(0.3j * c) for c in brute_costs(100, CostFunction.constant(1))) / count(100)
    assert z == pytest.approx(direct, abs=1e-14)
    taus = np.linspace(-10, 10, 41)
    assert np.all(np.abs(char_fn(spec, taus)) <= 1 + 1e-15)


def test_lattice_periodicity_exact():
    h = histogram(EnsembleSpec(150))
    assert h.char_fn_turns(Fraction(1)) == 1
    for t in (0.2, 1.1):
        assert complex(h.char_fn(t + 2 * math.pi)) == pytest.approx(complex(h.char_fn(t)), abs=1e-12)


def test_cesaro_examples():
    phi = sieve_totients(10)
    assert cesaro(10, CostFunction.constant(1), 0.0) == sum(sum(phi[1:M + 1]) for M in range(1, 11))
    assert cesaro_count(10) == sum(sum(phi[1:M + 1]) for M in range(1, 11))
    spec = EnsembleSpec(40, CostFunction.log())
    a = cesaro(40, CostFunction.log(), 0.7)
    b = cesaro(39, CostFunction.log(), 0.7)
    assert a - b == pytest.approx(complex(phi_profile(spec, 0.7)[40]), abs=1e-10)
    assert abs(a) <= cesaro_count(40)


def test_smoothing_weights_are_shell_multiplicities():
    N, N0 = 30, 22
    w = smoothing_weights(N, N0)
    for q in range(1, N + 1):
        assert w[q] == sum(1 for Q in range(N0, N + 1) if q <= Q)


@pytest.mark.parametrize("cost", [CostFunction.constant(1), CostFunction.log()])
def test_smoothed_identity_exact(cost):
    sm = SmoothingSpec()
    assert smoothed_identity_exact(200, sm, EnsembleSpec(200, cost))
    vals = [smoothed_char_fn(200, sm, cost, 0.4, route=r) for r in ("cesaro", "direct", "histogram")]
    assert abs(vals[0] - vals[1]) < 1e-13 and abs(vals[1] - vals[2]) < 1e-13
    assert smoothed_char_fn(200, sm, cost, 0.0) == 1


def test_smoothed_histogram_total():
    sm = SmoothingSpec()
    N = 300
    N0 = sm.window_start(N)
    h = smoothed_histogram(N, sm, EnsembleSpec(N))
    assert h.total == sum(count(Q) for Q in range(N0, N + 1))


def test_smoothing_validity():
    with pytest.raises(SmoothingError):
        SmoothingSpec(gamma0=2.0).check(1000)
    assert SmoothingSpec().valid(1000)


def test_discrepancy_scales_with_xi():
    fit = discrepancy_fit(2000, SmoothingSpec(), EnsembleSpec(2000))
    assert fit.max_difference <= fit.C_hat * fit.xi + 1e-15
    assert fit.C_hat < 1.0


def test_dirichlet_tau0_matches_sieve():
    Q = 2000
    phi = sieve_totients(Q)
    ref = math.fsum(phi[q] * q ** -3.0 for q in range(1, Q + 1))
    res = dirichlet_series(1.5, CostFunction.log(), 0.0, Q)
    assert res.partial.real == pytest.approx(ref, rel=1e-13)
    # zeta(2)/zeta(3) is the full sum; the rigorous bound covers the truncation
    full = (math.pi ** 2 / 6) / 1.2020569031595942
    assert 0 < full - res.partial.real <= res.tail_bound
    assert abs(res.corrected.real - full) < abs(res.partial.real - full) / 10


def test_dirichlet_rejects_bad_s():
    with pytest.raises(ValueError):
        dirichlet_series(1.0, CostFunction.log(), 0.0, 1000)


def test_centered_natural_domain_halves_the_ensemble():
    full = EnsembleSpec(200, algorithm=AlgorithmKind.CENTERED)
    nat = EnsembleSpec(200, algorithm=AlgorithmKind.CENTERED, natural_domain=True)
    h_full, h_nat = histogram(full), histogram(nat)
    assert h_nat.total == sum(1 for q in range(2, 201) for p in range(1, q // 2 + 1) if math.gcd(p, q) == 1)
    assert h_full.total == count(200)


def test_histogram_csv_json():
    h = histogram(EnsembleSpec(20))
    lines = h.to_csv().strip().splitlines()
    assert len(lines) == len(h.keys) + 1
    assert sum(h.to_json()["counts"]) == count(20)
