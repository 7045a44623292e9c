import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twopoint_wave.diagnostics import (
    DiagnosticsError,
    FunctionalConfig,
    blowup_functional_L,
    blowup_time_bound,
    decay_constants,
    discrete_norms,
    energy_E,
    evaluate_state,
    fit_exponential_decay,
    functional_H,
    functional_I_J,
    functional_Phi_psi,
    lyapunov_script_L,
    max_decrease,
    nondecreasing_within,
    sandwich_bounds,
)
from twopoint_wave.discretization import SemiDiscreteState, SpatialGrid
from twopoint_wave.model import ProblemData, ProblemParameters

P = ProblemParameters(lam=1, lam0=1, lam1=1, lam_tilde0=-0.5, lam_tilde1=-0.5, p=3, alpha=4, beta=4)
G = SpatialGrid(10)


def const_state(c, v=0.0, grid=G):
    n = grid.N + 1
    return SemiDiscreteState(0.0, np.full(n, float(c)), np.full(n, float(v)))


# norms


def test_norms_constant_and_linear():
    nb = discrete_norms(const_state(1.0), P, G)
    assert nb.l2_sq == pytest.approx(1.0, abs=1e-15) and nb.grad_sq == 0.0 and nb.h1_sq == pytest.approx(1.0)
    lin = SemiDiscreteState(0.0, G.nodes.copy(), np.zeros(11))
    nb = discrete_norms(lin, P, G)
    assert nb.l2_sq == pytest.approx(0.335, abs=1e-14) and nb.grad_sq == pytest.approx(1.0, abs=1e-14)
    nb = discrete_norms(const_state(0.0), P, G)
    assert nb.l2_sq == nb.grad_sq == nb.lp_p == nb.velocity_sq == 0.0


def test_quadrature_order():
    exact = (math.e**2 - 1) / 2
    errs = []
    for N in (10, 20, 40, 80):
        g = SpatialGrid(N)
        errs.append(abs(discrete_norms(SemiDiscreteState(0, np.exp(g.nodes), np.zeros(N + 1)), P, g).l2_sq - exact))
    for a, b in zip(errs, errs[1:]):
        assert math.log2(a / b) >= 1.9


# functionals: closed-form oracles


def test_energy_examples():
    assert energy_E(const_state(0.0), P, G) == 0.0
    assert energy_E(const_state(0.1), P, G) == pytest.approx(0.005 - 0.001 / 3 - 2e-4 / 4, rel=1e-12)


def test_energy_converges_to_continuum_value():
    e = math.e
    exact = 0.5 * (e**2 - 1) / 2 + 0.5 * (e**2 - 1) - (e**3 - 1) / 9 - 0.25 - e**4 / 4
    assert exact == pytest.approx(-11.2284, abs=1e-4)
    g = SpatialGrid(400)
    s = SemiDiscreteState(0.0, np.exp(g.nodes), -np.exp(g.nodes))
    assert energy_E(s, P, g) == pytest.approx(exact, rel=1e-5)


def test_H_examples():
    assert functional_H(const_state(0.0), P, G, 0.0) == 0.0
    assert functional_H(const_state(5.0), P, G, 0.0) == pytest.approx(341.6666666667, rel=1e-12)
    assert functional_H(const_state(5.0), P, G, 0.04) == pytest.approx(340.6666666667, rel=1e-12)


def test_I_J_examples():
    assert functional_I_J(const_state(0.0), P, G) == (0.0, 0.0)
    assert functional_I_J(const_state(0.1), P, G)[0] == pytest.approx(0.0088, rel=1e-12)
    assert functional_I_J(const_state(5.0), P, G)[0] == pytest.approx(-1350.0, rel=1e-12)


def test_Phi_psi_examples():
    assert functional_Phi_psi(const_state(0.0), P, G) == (0.0, 0.0)
    Phi, psi = functional_Phi_psi(const_state(1.0), P, G)
    assert Phi == pytest.approx(1.0) and psi == pytest.approx(1.5)
    with pytest.raises(DiagnosticsError):
        functional_Phi_psi(const_state(1.0), ProblemParameters(lam_tilde0=0.1, lam_tilde1=0.2), G)


def test_blowup_L():
    s = const_state(5.0)
    H = functional_H(s, P, G, 0.0)
    assert blowup_functional_L(s, P, G, FunctionalConfig(eta=1 / 6, epsilon=0.0)) == pytest.approx(H ** (5 / 6))
    assert blowup_functional_L(s, P, G, FunctionalConfig(eta=0.0, epsilon=0.0)) == pytest.approx(H)
    L = blowup_functional_L(s, P, G, FunctionalConfig(eta=1 / 6, epsilon=0.01))
    assert L == pytest.approx(341.6666666667 ** (5 / 6) + 0.01 * 25.0, rel=1e-12)
    with pytest.raises(DiagnosticsError):
        blowup_functional_L(const_state(0.1), P, G, FunctionalConfig())
    with pytest.raises(DiagnosticsError):
        blowup_functional_L(s, P, G, FunctionalConfig(eta=0.4))


def test_script_L_examples():
    s = const_state(0.1)
    assert lyapunov_script_L(s, P, G, 0.0) == energy_E(s, P, G)
    assert lyapunov_script_L(const_state(0.0), P, G, 0.3) == 0.0
    assert lyapunov_script_L(s, P, G, 0.1) == pytest.approx(0.0046166666667 + 0.0015, rel=1e-10)


# constants


def test_decay_constants_examples():
    d = ProblemData()
    assert decay_constants(P, d, 0.0, FunctionalConfig()).eta_star == 0.0
    dc = decay_constants(P, d, 0.0046166666666666667, FunctionalConfig())
    assert dc.r == 1.0
    x = 6 * 0.0046166666666666667
    assert dc.eta_star == pytest.approx(2**1.5 * x**0.5 + 8 * x, rel=1e-12)
    assert dc.eta_star == pytest.approx(0.6923, abs=1e-4) and dc.decay_condition
    assert dc.epsilon1 == pytest.approx((1 - dc.eta_star) / 2)
    assert dc.smallness_ok and dc.delta_below_lambda and dc.cutoff == 100.0
    with pytest.raises(DiagnosticsError):
        decay_constants(P, d, -1.0, FunctionalConfig())
    with pytest.raises(DiagnosticsError):
        decay_constants(ProblemParameters(p=2.0), d, 0.0, FunctionalConfig())


def test_decay_constants_r_with_coupling():
    d = ProblemData(h_tilde0="exp(-t)", h_tilde1="0")
    dc = decay_constants(P, d, 0.0, FunctionalConfig())
    assert dc.r == pytest.approx(math.exp(4 * 3 / (0.75 * 1) * 0.5), rel=1e-9)


def test_sandwich_bounds():
    b1, b2 = sandwich_bounds(P, 0.1, 3.0)
    assert b1 == pytest.approx(7 / 30, abs=1e-12) and b2 == pytest.approx(5.9, abs=1e-12)
    b1, b2 = sandwich_bounds(P, 0.0, 3.0)
    assert b1 == pytest.approx(1 / 3) and b2 == pytest.approx(4.0)
    with pytest.raises(DiagnosticsError):
        sandwich_bounds(P, 1 / 3, 3.0)


def test_blowup_time_bound():
    assert blowup_time_bound(1 / 6, 1.0, 1.0) == pytest.approx(5.0, abs=1e-12)
    assert blowup_time_bound(1 / 6, 1.0, 2.0) == pytest.approx(5 * 2**-0.2, rel=1e-12)
    assert blowup_time_bound(1 / 6, 1.0, 2.0) < blowup_time_bound(1 / 6, 1.0, 1.0)
    for args in ((0.0, 1.0, 1.0), (1 / 6, 0.0, 1.0), (1 / 6, 1.0, -1.0)):
        with pytest.raises(DiagnosticsError):
            blowup_time_bound(*args)


# fits


def test_fit_examples():
    t = np.linspace(0, 3, 10)
    f = fit_exponential_decay(t, 3 * np.exp(-2 * t))
    assert f.C == pytest.approx(3) and f.gamma == pytest.approx(2) and f.residual < 1e-10
    f = fit_exponential_decay(t, np.ones(10))
    assert f.gamma == pytest.approx(0, abs=1e-12) and f.C == pytest.approx(1)
    f = fit_exponential_decay(t, 3 * np.exp(-2 * t) * (1 + 0.01 * np.sin(t)))
    assert abs(f.gamma - 2) < 0.05 and f.residual <= 0.011
    with pytest.raises(DiagnosticsError):
        fit_exponential_decay(t[:2], np.ones(2))
    with pytest.raises(DiagnosticsError):
        fit_exponential_decay(t, np.r_[1.0, np.zeros(9)])


def test_monotone_helpers():
    assert max_decrease([1, 2, 1.5, 3]) == 0.5
    ok, slack = nondecreasing_within([1.0, 0.9, 2.0], [0.02, 0.0])
    assert ok and slack[0] == pytest.approx(0.1)
    assert not nondecreasing_within([1.0, 0.5], [0.01])[0]


# properties on random states


def random_state(rng):
    N = int(rng.integers(2, 60))
    scale = 10 ** rng.uniform(-3, 1.5)
    g = SpatialGrid(N)
    return g, SemiDiscreteState(0.0, scale * rng.normal(size=N + 1), scale * rng.normal(size=N + 1))


@given(st.integers(0, 2**32 - 1), st.floats(-0.05, 0.05))
def test_identities(seed, h):
    rng = np.random.default_rng(seed)
    g, s = random_state(rng)
    E = energy_E(s, P, g)
    H = functional_H(s, P, g, h)
    nb = discrete_norms(s, P, g)
    scale = max(1.0, abs(E), abs(H))
    assert abs(H + E + h * s.U[0] * s.U[-1]) <= 1e-13 * scale
    _, J = functional_I_J(s, P, g)
    assert abs((J - E) + 0.5 * nb.velocity_sq) <= 1e-13 * max(1.0, abs(J), abs(E))
    s0 = SemiDiscreteState(0.0, s.U, np.zeros_like(s.V))
    assert abs(energy_E(s0, P, g) - functional_I_J(s0, P, g)[1]) <= 1e-13 * max(1.0, abs(J))


def test_power_and_sup_bounds_on_random_states(rng):
    for _ in range(1000):
        g, s = random_state(rng)
        nb = discrete_norms(s, P, g)
        r1, r2, r3 = rng.uniform(2, P.p), rng.uniform(2, P.alpha), rng.uniform(2, P.beta)
        lhs = nb.lp_p ** (r1 / P.p) + abs(nb.u_left) ** r2 + abs(nb.u_right) ** r3
        rhs = 5 * (nb.h1_sq + nb.lp_p + abs(nb.u_left) ** P.alpha + abs(nb.u_right) ** P.beta)
        assert lhs <= rhs + 1e-10
        assert np.max(np.abs(s.U)) <= math.sqrt(2) * math.sqrt(nb.h1_sq) + 1e-10


def test_evaluate_state_modes():
    fv = evaluate_state(const_state(0.1), P, G, FunctionalConfig())
    assert fv.H is not None and fv.L_blowup is None  # H < 0 here
    fv = evaluate_state(const_state(5.0), P, G, FunctionalConfig())
    assert fv.L_blowup is not None and fv.L_blowup > 0
    fv = evaluate_state(const_state(1.0), ProblemParameters(lam_tilde0=0.1, lam_tilde1=0.2), G, FunctionalConfig())
    assert fv.H is None and fv.Phi is None
