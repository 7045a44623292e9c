import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twopoint_wave.expressions import Expr
from twopoint_wave.model import (
    AdmissibilityError,
    GeneralBoundaryCoefficients,
    ProblemData,
    ProblemParameters,
    SingularTransformError,
    check_assumptions,
    check_compatibility,
    half_line_l2_sq,
    hellwig_transform,
    mu_star,
)

SEC5 = ProblemParameters(lam=1, lam0=1, lam1=1, lam_tilde0=-0.5, lam_tilde1=-0.5, p=3, alpha=4, beta=4)


# -------------------------------------------------------------------- mu*


def test_mu_star_examples():
    assert mu_star(ProblemParameters(lam0=1, lam1=1, lam_tilde0=0, lam_tilde1=0)) == 1.0
    assert mu_star(SEC5) == 0.75
    with pytest.raises(AdmissibilityError):
        mu_star(ProblemParameters(lam0=1, lam1=1, lam_tilde0=1, lam_tilde1=1))


pos = st.floats(0.05, 10.0)
anyf = st.floats(-5.0, 5.0)


@given(pos, pos, anyf, anyf)
def test_mu_star_swap_symmetry(l0, l1, a, b):
    p = ProblemParameters(lam0=l0, lam1=l1, lam_tilde0=a, lam_tilde1=b)
    if not abs(a + b) < 2 * math.sqrt(l0 * l1):
        with pytest.raises(AdmissibilityError):
            mu_star(p)
        return
    assert mu_star(p) == pytest.approx(mu_star(p.swapped()), rel=1e-14, abs=1e-15)


@given(pos, pos, st.floats(-1, 1))
def test_mu_star_equal_cross_damping_form(l0, l1, frac):
    lt = frac * 0.999 * math.sqrt(l0 * l1)
    p = ProblemParameters(lam0=l0, lam1=l1, lam_tilde0=lt, lam_tilde1=lt)
    assert mu_star(p) == pytest.approx((l0 * l1 - lt * lt) * min(1 / l0, 1 / l1), rel=1e-12)


def test_quadratic_form_bound(rng):
    for _ in range(1000):
        l0, l1 = rng.uniform(0.05, 5, 2)
        s = rng.uniform(-1, 1) * 0.999 * 2 * math.sqrt(l0 * l1)
        a = rng.uniform(-3, 3)
        p = ProblemParameters(lam0=l0, lam1=l1, lam_tilde0=a, lam_tilde1=s - a)
        mu = mu_star(p)
        x, y = rng.normal(size=2) * rng.uniform(0.01, 10)
        assert l0 * x * x + l1 * y * y + s * x * y >= 0.5 * mu * (x * x + y * y) - 1e-12


# -------------------------------------------------------------------- assumptions


def test_assumptions_general_sec5():
    r = check_assumptions(SEC5, ProblemData(h_tilde0="exp(3-2*t)", h_tilde1="-exp(-1-2*t)"), "general")
    assert r.a1_ok and r.a2_ok and r.a3_ok and r.ok
    assert r.mu_star == 0.75 and r.q == 3


def test_assumptions_p2_fails_a1():
    r = check_assumptions(ProblemParameters(p=2.0), ProblemData(), "blowup")
    assert r.a1_ok is False
    assert any(f.startswith("A1:") for f in r.failures())


def test_assumptions_blowup_h_bound():
    p = ProblemParameters(p=3, alpha=4, beta=4, lam_tilde0=-0.5, lam_tilde1=-0.5)
    ok = check_assumptions(p, ProblemData(h_tilde0=0.04, h_tilde1=0.04), "blowup")
    assert ok.h_tilde_blowup_bound == pytest.approx(0.05)
    assert ok.a3prime_ok and ok.a2prime_ok
    bad = check_assumptions(p, ProblemData(h_tilde0=0.06, h_tilde1=0.06), "blowup")
    assert bad.a3prime_ok is False
    nonconst = check_assumptions(p, ProblemData(h_tilde0="0.01*t", h_tilde1="0.01*t"), "blowup")
    assert nonconst.a3prime_ok is False


def test_assumptions_blowup_unequal_cross_damping():
    p = ProblemParameters(lam_tilde0=0.1, lam_tilde1=0.2)
    assert check_assumptions(p, ProblemData(), "blowup").a2prime_ok is False


def test_assumptions_decay():
    ok = check_assumptions(SEC5, ProblemData(h_tilde0="exp(-t)", h_tilde1="0"), "decay")
    assert ok.a3doubleprime_ok and ok.cutoff == 100.0
    bad = check_assumptions(SEC5, ProblemData(h_tilde0="1", h_tilde1="0"), "decay")
    assert bad.a3doubleprime_ok is False


def test_assumptions_pure():
    d = ProblemData(h_tilde0="exp(-t)")
    assert check_assumptions(SEC5, d, "decay") == check_assumptions(SEC5, d, "decay")


def test_unknown_mode():
    with pytest.raises(ValueError):
        check_assumptions(SEC5, ProblemData(), "other")


def test_half_line_norm_oracles():
    assert half_line_l2_sq(Expr("exp(3-2*t)"), 5.0) == pytest.approx(math.exp(6) / 4, rel=1e-9)
    assert half_line_l2_sq(Expr("-exp(-1-2*t)"), 5.0) == pytest.approx(math.exp(-2) / 4, rel=1e-9)


# -------------------------------------------------------------------- Hellwig


def _coeffs(a, b, f0="sin(t)", f1="exp(-t)"):
    return GeneralBoundaryCoefficients(alpha=a, beta=b, f0=f0, f1=f1)


def test_hellwig_identity_case():
    z = (0.0, 0.0, 0.0)
    c = hellwig_transform(_coeffs(((0.0, 1.0, 0.0), z), (z, (0.0, 1.0, 0.0))))
    for name in ("h0", "h1", "lam0", "lam1", "h_tilde0", "h_tilde1", "lam_tilde0", "lam_tilde1"):
        assert getattr(c, name) == 0.0
    assert c.g0(t=0.7) == pytest.approx(math.sin(0.7))
    assert c.g1(t=0.7) == pytest.approx(-math.exp(-0.7))


def test_hellwig_singular():
    with pytest.raises(SingularTransformError):
        hellwig_transform(_coeffs(((0, 1, 0), (0, 1, 0)), ((0, 1, 0), (0, 1, 0))))


def test_hellwig_hand_example():
    c = hellwig_transform(_coeffs(((1.0, 2.0, 0.0), (3.0, 1.0, 0.0)), ((0.0, 1.0, 0.0), (0.0, 1.0, 0.0))))
    assert c.h0 == 2.0


def hellwig_residual(coeffs, rng, samples=20):
    """Max residual of the original rows after substituting the canonical fluxes."""
    c = hellwig_transform(coeffs)
    worst = 0.0
    for _ in range(samples):
        u0, ut0, u1, ut1, t = rng.normal(size=5)
        ux0 = c.h0 * u0 + c.lam0 * ut0 + c.h_tilde1 * u1 + c.lam_tilde1 * ut1 + c.g0(t=t)
        ux1 = -(c.h1 * u1 + c.lam1 * ut1 + c.h_tilde0 * u0 + c.lam_tilde0 * ut0 + c.g1(t=t))
        f = (coeffs.f0(t=t), coeffs.f1(t=t))
        for i in range(2):
            a, b = coeffs.alpha[i], coeffs.beta[i]
            row = a[0] * u0 + a[1] * ux0 + a[2] * ut0 + b[0] * u1 + b[1] * ux1 + b[2] * ut1 - f[i]
            scale = 1 + sum(abs(v) for v in (*a, *b)) * max(1, abs(ux0), abs(ux1))
            worst = max(worst, abs(row) / scale)
    return worst


def test_hellwig_round_trip_random(rng):
    draws = 0
    while draws < 100:
        a = rng.normal(size=(2, 3))
        b = rng.normal(size=(2, 3))
        coeffs = _coeffs(tuple(map(tuple, a)), tuple(map(tuple, b)))
        if abs(coeffs.determinant) < 1e-3:
            continue
        assert hellwig_residual(coeffs, rng) < 1e-10
        draws += 1


# -------------------------------------------------------------------- compatibility


def test_compatibility_zero_data():
    r = check_compatibility(SEC5, ProblemData(), 1e-8)
    assert (r.r0, r.r1) == (0.0, 0.0) and r.passed


def test_compatibility_linear_u0():
    p = ProblemParameters(alpha=4, lam_tilde1=0.0)
    r = check_compatibility(p, ProblemData(u0="x"), 1e-8)
    assert r.r0 == pytest.approx(1.0, abs=1e-8) and not r.passed and r.approximate


def test_compatibility_infinite_tol():
    assert check_compatibility(SEC5, ProblemData(u0="5*x^3", u1="x"), math.inf).passed


def test_compatibility_manufactured_problem_passes():
    from twopoint_wave.verification import manufactured_problem

    p, d = manufactured_problem()
    r = check_compatibility(p, d, 1e-12)
    assert r.passed and not r.approximate
