import math
import warnings

import numpy as np
import pytest
from scipy import integrate, special

from euclid_llt.costs import CostFunction
from euclid_llt.ensemble import EnsembleSpec, SmoothingSpec, histogram, smoothed_histogram
from euclid_llt.limit_lab import (CenteringSpec, CutoffWarning, Gaussian, Interval, RegionConfig, Trapezoid,
                                  ZeroFunction, clt_check, fourier_inversion_check, gaussian_target,
                                  kolmogorov_distance, llt_interval, llt_smooth, mollifier, mollifier_fit,
                                  mollifier_hat, mollifier_hat_quadrature, mollify, plateau, region_profile)

ONE = CostFunction.constant(1)
LOG = CostFunction.log()
MU1, D1 = 12 * math.log(2) / math.pi ** 2, math.sqrt(0.5160624)
MUL, DL = 0.8325255, math.sqrt(0.1046079)


def numeric_hat(f, lo, hi, tau):
    re = integrate.quad(lambda y: float(f(y)) * math.cos(tau * y), lo, hi, limit=400, epsabs=1e-13)[0]
    im = integrate.quad(lambda y: -float(f(y)) * math.sin(tau * y), lo, hi, limit=400, epsabs=1e-13)[0]
    return complex(re, im)


def test_centering():
    cs = CenteringSpec(0.5, 1000, 0.8, 0.7)
    L = math.log(1000)
    assert cs.Q == pytest.approx(0.8 * L + 0.7 * 0.5 * math.sqrt(L))
    with pytest.raises(ValueError):
        CenteringSpec(0, 1, 1, 1)
    with pytest.raises(ValueError):
        CenteringSpec(0, 10, 1, 0)


@pytest.mark.parametrize("J,delta", [((-1, 1), 0.01), ((0, 3), 0.1), ((-0.5, 0.5), 0.0025)])
def test_plateau_sandwich_and_mass(J, delta):
    lo, hi = plateau(J, delta, +1), plateau(J, delta, -1)
    y = np.linspace(J[0] - 1, J[1] + 1, 20001)
    chi = Interval(*J)(y)
    assert np.all(hi(y) <= chi) and np.all(chi <= lo(y))
    r = math.sqrt(delta)
    assert np.allclose(lo(y)[(y >= J[0] - r) & (y <= J[1] + r)], 1, atol=1e-12, rtol=0)
    assert np.allclose(hi(y)[(y <= J[0] + r) | (y >= J[1] - r)], 0, atol=1e-12, rtol=0)
    for f in (lo, hi):
        assert abs(f.integral() - (J[1] - J[0])) <= 4 * r
        q = integrate.quad(f, *f.support, points=f.breakpoints(), epsabs=1e-12)[0]
        assert q == pytest.approx(f.integral(), abs=1e-8)


def test_plateau_minus_needs_room():
    with pytest.raises(ValueError):
        plateau((0, 1), 0.1, -1)


def test_transforms_match_quadrature():
    for f in [Trapezoid(-1.0, 0.7, 0.3), Interval(-0.2, 1.1)]:
        for tau in (0.0, 0.9, 4.0):
            assert complex(f.hat(np.array([tau]))[0]) == pytest.approx(
                numeric_hat(f, *f.support, tau), abs=1e-9)
    g = Gaussian(0.7, 0.3)
    assert complex(g.hat(np.array([1.3]))[0]) == pytest.approx(numeric_hat(g, -10, 10, 1.3), abs=1e-10)


@pytest.mark.parametrize("delta", [0.05, 0.5, 2.0])
@pytest.mark.parametrize("tau", [0.0, 0.7, 2.0, 5.0])
def test_mollifier_transform(delta, tau):
    # Delta(x) = e^{-x^2}/sqrt(pi) has transform e^{-tau^2/4}
    assert mollifier_hat_quadrature(delta, tau) == pytest.approx(math.exp(-(delta * tau) ** 2 / 4), abs=1e-12)
    assert float(mollifier_hat(delta, tau)) == pytest.approx(math.exp(-(delta * tau) ** 2 / 4), abs=1e-15)


def test_mollifier_has_unit_mass():
    assert integrate.quad(mollifier(0.3), -10, 10)[0] == pytest.approx(1, abs=1e-12)
    m = mollify(plateau((-1, 1), 0.04, +1), 0.1)
    assert integrate.quad(m, *m.support, limit=200)[0] == pytest.approx(m.base.integral(), abs=1e-8)


def test_mollified_closed_form_matches_convolution():
    base = Trapezoid(-1.0, 0.5, 0.2)
    m = mollify(base, 0.15)
    kern = mollifier(0.15)
    for y in (-1.1, -0.9, 0.0, 0.55, 0.8):
        conv = integrate.quad(lambda u: float(base(u)) * float(kern(y - u)), *base.support,
                              points=base.breakpoints(), epsabs=1e-13)[0]
        assert float(m(y)) == pytest.approx(conv, abs=1e-10)
    ib = mollify(Interval(0, 1), 0.2)
    assert float(ib(0.5)) == pytest.approx(special.erf(2.5), abs=1e-12)


def test_mollifier_fit_stable():
    fit = mollifier_fit(plateau((0, 1), 0.25, +1), [1e-1, 1e-2, 1e-3])
    assert fit.spread < 1e-6
    assert fit.D[0] == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-6)


def test_kolmogorov_degenerate():
    n = 4000
    q = (np.arange(n) + 0.5) / n
    d = kolmogorov_distance(special.ndtri(q), np.ones(n))
    assert d == pytest.approx(0.5 / n, rel=1e-9)


def test_clt_deterministic_and_small():
    h = histogram(EnsembleSpec(2000))
    a = clt_check(2000, ONE, MU1, D1, hist=h)
    assert a == clt_check(2000, ONE, MU1, D1, hist=h)
    assert 0 < a < 0.2
    with pytest.raises(ValueError):
        clt_check(8, ONE, MU1, D1)


def test_llt_targets():
    r = llt_interval(500, ONE, 0.0, (-0.5, 0.5), MU1, D1)
    assert r.target == pytest.approx(1 / (D1 * math.sqrt(2 * math.pi)))
    assert gaussian_target(0.7, D1) == gaussian_target(-0.7, D1) < gaussian_target(0, D1)


def test_llt_interval_counts_half_open():
    h = histogram(EnsembleSpec(300))
    N = 300
    Q = CenteringSpec(0.0, N, MU1, D1).Q
    k = round(Q)
    r = llt_interval(N, ONE, 0.0, (k - Q - 1, k - Q), MU1, D1, hist=h)
    p_k = h.counts[h.values == k].sum() / h.total
    assert r.lhs == pytest.approx(math.sqrt(math.log(N)) * p_k, rel=1e-14)


def test_llt_sandwich():
    N = 3000
    h = histogram(EnsembleSpec(N, CostFunction.bitlength()))
    J = (-1.0, 1.0)
    for x in (-0.5, 0.0, 0.8):
        mid = llt_interval(N, None, x, J, 1.0, 1.0, hist=h).lhs
        lo = llt_smooth(N, None, x, plateau(J, 0.01, -1), 1.0, 1.0, hist=h).lhs
        hi = llt_smooth(N, None, x, plateau(J, 0.01, +1), 1.0, 1.0, hist=h).lhs
        assert lo <= mid <= hi


def test_llt_smooth_zero():
    r = llt_smooth(200, ONE, 0.0, ZeroFunction(), MU1, D1)
    assert r.lhs == 0 and r.target == 0


def test_inversion_zero_function():
    r = fourier_inversion_check(200, LOG, 0.0, ZeroFunction(), MUL, DL, tau_cutoff=5)
    assert r.route_a == 0 and r.route_b == 0


def test_inversion_gaussian_two_routes():
    r = fourier_inversion_check(500, LOG, 0.0, Gaussian(1.0), MUL, DL, tau_cutoff=12)
    assert r.difference < 1e-6


def test_inversion_cutoff_warning():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        fourier_inversion_check(200, LOG, 0.0, Gaussian(1.0), MUL, DL, tau_cutoff=2)
    assert any(issubclass(x.category, CutoffWarning) for x in w)


def test_region_profile_basic():
    prof = region_profile(1500, ONE, RegionConfig(points_per_region=8, alpha2=1.0))
    taus, mods = prof.regions["small"]
    assert taus[0] == 0 and mods[0] == 1
    assert 2 * math.pi in prof.resonances
    assert not prof.decay_observed
    lines = prof.to_csv().strip().splitlines()
    assert lines[0] == "region,tau,modulus,envelope"


def test_lattice_char_fn_periodic_smoothed():
    h = smoothed_histogram(800, SmoothingSpec(), EnsembleSpec(800))
    for t in (0.3, 1.7):
        assert complex(h.char_fn(t + 2 * math.pi)) == pytest.approx(complex(h.char_fn(t)), abs=1e-12)
