import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grwsim.semigroup import (
    MINUS_PROJECTOR,
    PLUS_PROJECTOR,
    CriticalDampingError,
    DensityMatrix2,
    IntegrationError,
    PureState2,
    TimeSeries,
    ToyParams,
    ValidationError,
    closed_form_series,
    closed_form_solution,
    detect_plateau,
    evolve_numeric,
    initial_superposition,
    lindblad_rhs,
    lindblad_rhs_matrix,
    mixture,
    mode_amplitudes,
    pure_to_density,
    relaxation_rates,
    steady_state,
)

A = math.sqrt(0.48)
B = math.sqrt(0.52)

# 50-digit mpmath evaluation of exp(M t) for the reduced (x, y) system,
# computed outside this package and frozen here.
MP_RHO1_EPS2_T1 = 0.49038456402847868
MP_RHO1_EPS6_T1E3 = 0.48000100719919847
MP_RHO1_EPS6_T1E10 = 0.49963370552321022
# scipy.linalg.expm of the hand-built 4x4 generator, start (a, -ib), t = 1 s
EXPM_RHO1_TILDE_T1 = 0.4711690829417965


def default_rho():
    return pure_to_density(PureState2(A, 1j * B))


def rk4_matrix_oracle(rho, omega, lam, t, dt):
    """Plain RK4 on the 2x2 matrix equation, written independently of the package."""
    h = omega * np.array([[0, 1], [1, 0]], dtype=complex)
    p_plus = np.diag([1.0, 0.0]).astype(complex)
    p_minus = np.diag([0.0, 1.0]).astype(complex)

    def f(r):
        return -1j * (h @ r - r @ h) + lam * (p_plus @ r @ p_plus + p_minus @ r @ p_minus) - lam * r

    n = int(round(t / dt))
    r = rho.copy()
    for _ in range(n):
        k1 = f(r)
        k2 = f(r + 0.5 * dt * k1)
        k3 = f(r + 0.5 * dt * k2)
        k4 = f(r + dt * k3)
        r = r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return r


def random_density(draw_r, draw_phase, draw_frac):
    r1 = draw_r
    radius = math.sqrt(r1 * (1 - r1)) * draw_frac
    return DensityMatrix2(r1, radius * complex(math.cos(draw_phase), math.sin(draw_phase)))


densities = st.builds(
    random_density,
    st.floats(0.0, 1.0),
    st.floats(0.0, 2 * math.pi),
    st.floats(0.0, 1.0),
)


class TestTypes:
    def test_toy_params_epsilon(self):
        p = ToyParams(omega=1.0, lambda_rate=100.0)
        assert p.epsilon == 1.0 / 100.0
        assert ToyParams.from_epsilon(1e-6).omega == pytest.approx(1e-4)
        assert ToyParams.from_epsilon(1e-6).lambda_rate == 100.0

    @pytest.mark.parametrize("omega,lam", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0), (math.nan, 1.0)])
    def test_toy_params_rejects(self, omega, lam):
        with pytest.raises(ValidationError):
            ToyParams(omega, lam)

    def test_pure_state_normalization(self):
        PureState2(A, 1j * B)
        with pytest.raises(ValidationError):
            PureState2(1.0, 1.0)

    def test_density_invariants(self):
        with pytest.raises(ValidationError):
            DensityMatrix2(1.2, 0)
        with pytest.raises(ValidationError):
            DensityMatrix2(0.5, 0.6)
        rho = DensityMatrix2(0.3, 0.1 + 0.2j)
        m = rho.matrix
        assert np.trace(m).real == pytest.approx(1.0, abs=1e-15)
        assert DensityMatrix2.from_matrix(m) == rho

    def test_projectors(self):
        eye = np.eye(2)
        assert np.array_equal(PLUS_PROJECTOR + MINUS_PROJECTOR, eye)
        for p in (PLUS_PROJECTOR, MINUS_PROJECTOR):
            assert np.array_equal(p @ p, p)
        assert np.array_equal(PLUS_PROJECTOR @ MINUS_PROJECTOR, np.zeros((2, 2)))

    def test_time_series_validates(self):
        with pytest.raises(ValidationError):
            TimeSeries([0.0, 1.0, 1.0], [0.5] * 3, [0] * 3)
        with pytest.raises(ValidationError):
            TimeSeries([0.0, 1.0], [0.5], [0])


class TestPureToDensity:
    def test_basis(self):
        rho = pure_to_density(PureState2(1, 0))
        assert rho.rho1 == 1.0 and rho.rho3 == 0

    def test_default_superposition(self):
        rho = default_rho()
        assert rho.rho1 == pytest.approx(0.48, abs=1e-15)
        assert rho.rho3 == pytest.approx(-1j * math.sqrt(0.48 * 0.52), abs=1e-15)
        assert abs(rho.rho3.imag + 0.499600) < 1e-6

    def test_symmetric(self):
        s = 1 / math.sqrt(2)
        rho = pure_to_density(PureState2(s, s))
        assert rho.rho1 == pytest.approx(0.5) and rho.rho3 == pytest.approx(0.5)

    @given(st.floats(0, 1), st.floats(0, 2 * math.pi))
    def test_purity(self, w, phase):
        psi = PureState2(math.sqrt(w), math.sqrt(1 - w) * complex(math.cos(phase), math.sin(phase)))
        rho = pure_to_density(psi)
        assert abs(abs(rho.rho3) ** 2 - rho.rho1 * (1 - rho.rho1)) < 1e-12

    def test_rejects_non_state(self):
        with pytest.raises(ValidationError):
            pure_to_density((1, 0))


class TestRhs:
    def test_steady(self):
        assert lindblad_rhs(DensityMatrix2(0.5, 0), ToyParams(1.0)) == (0.0, 0j)

    def test_basis_state(self):
        d1, d3 = lindblad_rhs(DensityMatrix2(1.0, 0), ToyParams(1.0, 100.0))
        assert d1 == 0.0
        assert d3 == pytest.approx(1j)

    def test_default_superposition(self):
        d1, _ = lindblad_rhs(default_rho(), ToyParams(1.0, 100.0))
        assert d1 == pytest.approx(2 * math.sqrt(0.2496), rel=1e-14)
        assert d1 == pytest.approx(0.999200, abs=1e-6)

    @given(densities, st.floats(0, 50), st.floats(0.1, 200))
    def test_matches_matrix_form(self, rho, omega, lam):
        p = ToyParams(omega, lam)
        d1, d3 = lindblad_rhs(rho, p)
        full = lindblad_rhs_matrix(rho.matrix, p)
        scale = 1 + omega + lam
        assert abs(full[0, 0] - d1) <= 1e-12 * scale
        assert abs(full[0, 1] - d3) <= 1e-12 * scale
        # trace-free and Hermitian increment
        assert abs(np.trace(full)) <= 1e-12 * scale
        assert np.max(np.abs(full - full.conj().T)) <= 1e-12 * scale


class TestClosedForm:
    def test_identity_at_zero(self):
        rho = default_rho()
        assert closed_form_solution(rho, ToyParams(1.0), 0.0) == rho

    def test_eps2_one_second_vs_rk4(self):
        rho = default_rho()
        got = closed_form_solution(rho, ToyParams(1.0, 100.0), 1.0)
        oracle = rk4_matrix_oracle(rho.matrix, 1.0, 100.0, 1.0, 1e-5)
        assert got.rho1 == pytest.approx(oracle[0, 0].real, abs=1e-12)
        assert got.rho3 == pytest.approx(oracle[0, 1], abs=1e-12)
        assert got.rho1 == pytest.approx(MP_RHO1_EPS2_T1, abs=1e-14)
        assert round(got.rho1, 5) == 0.49038

    def test_slow_mode_vs_eigendecomposition(self):
        p = ToyParams(1.0, 100.0)
        s_slow, s_fast = relaxation_rates(p)
        evals, evecs = np.linalg.eig(np.array([[0.0, -2.0], [2.0, -100.0]]))
        order = np.argsort(-evals.real)
        assert s_slow.real == pytest.approx(evals[order[0]], rel=1e-12)
        assert s_fast.real == pytest.approx(evals[order[1]], rel=1e-12)
        coeffs = np.linalg.solve(evecs, [0.48 - 0.5, -A * B])
        x_amp = evecs[0] * coeffs
        x_s, x_f = mode_amplitudes(default_rho(), p)
        assert x_s.real == pytest.approx(x_amp[order[0]], abs=1e-14)
        assert x_f.real == pytest.approx(x_amp[order[1]], abs=1e-14)
        assert x_s.real == pytest.approx(-0.010008, abs=1e-6)
        assert -s_slow.real == pytest.approx(0.040016, abs=1e-6)

    def test_eps6_reaches_quantum_weight(self):
        got = closed_form_solution(default_rho(), ToyParams.from_epsilon(1e-6), 1e3)
        # reduction leaves an O(eps) offset of about 1.007e-6 above 0.48
        assert abs(got.rho1 - 0.48) < 1.01e-6
        assert got.rho1 == pytest.approx(MP_RHO1_EPS6_T1E3, abs=1e-15)

    def test_long_horizon_precision(self):
        # slow rate 4e-10/s must not lose digits to cancellation
        got = closed_form_solution(default_rho(), ToyParams.from_epsilon(1e-6), 1e10)
        assert got.rho1 == pytest.approx(MP_RHO1_EPS6_T1E10, abs=1e-14)

    def test_underdamped_regime(self):
        # lambda < 4 omega: complex eigenvalues, still a real solution
        rho = default_rho()
        p = ToyParams(40.0, 100.0)
        got = closed_form_solution(rho, p, 0.05)
        oracle = rk4_matrix_oracle(rho.matrix, 40.0, 100.0, 0.05, 1e-5)
        assert got.rho1 == pytest.approx(oracle[0, 0].real, abs=1e-12)

    def test_critical_damping_rejected(self):
        with pytest.raises(CriticalDampingError):
            closed_form_solution(default_rho(), ToyParams(25.0, 100.0), 1.0)

    def test_negative_time(self):
        with pytest.raises(ValidationError):
            closed_form_solution(default_rho(), ToyParams(1.0), -1.0)

    def test_mirror_state(self):
        tilde = pure_to_density(initial_superposition(sign=-1))
        got = closed_form_solution(tilde, ToyParams(1.0, 100.0), 1.0)
        assert got.rho1 == pytest.approx(EXPM_RHO1_TILDE_T1, abs=1e-12)

    def test_series_matches_pointwise(self):
        rho = default_rho()
        p = ToyParams(1.0)
        grid = np.linspace(0, 3, 7)
        series = closed_form_series(rho, p, grid)
        for i, t in enumerate(grid):
            assert series[i].rho1 == pytest.approx(closed_form_solution(rho, p, t).rho1, abs=1e-15)


class TestEvolveNumeric:
    def test_steady_state_constant(self):
        series = evolve_numeric(DensityMatrix2(0.5, 0), ToyParams(1.0), np.linspace(0, 10, 11))
        assert np.all(series.rho1 == 0.5)
        assert np.all(series.rho3 == 0)

    def test_eps2_matches_closed_form(self):
        rho = default_rho()
        p = ToyParams.from_epsilon(1e-2)
        grid = np.linspace(0, 60, 61)
        series = evolve_numeric(rho, p, grid)
        assert abs(series.rho1[1] - closed_form_solution(rho, p, 1.0).rho1) <= 1e-9
        assert series.max_violation() <= 1e-10

    def test_eps6_long_horizon(self):
        grid = np.concatenate(([0.0], np.logspace(-4, 10, 300)))
        series = evolve_numeric(default_rho(), ToyParams.from_epsilon(1e-6), grid)
        assert series.rho1[-1] > 0.499
        assert series.rho1[-1] == pytest.approx(MP_RHO1_EPS6_T1E10, abs=1e-9)

    def test_rk4_fixed_step(self):
        rho = default_rho()
        p = ToyParams(1.0)
        series = evolve_numeric(rho, p, [0.0, 0.5, 1.0], method="rk4")
        assert series.rho1[-1] == pytest.approx(MP_RHO1_EPS2_T1, abs=1e-9)

    def test_bad_grid(self):
        with pytest.raises(ValidationError):
            evolve_numeric(default_rho(), ToyParams(1.0), [0.5, 1.0])
        with pytest.raises(ValidationError):
            evolve_numeric(default_rho(), ToyParams(1.0), [0.0, 2.0, 1.0])
        with pytest.raises(ValidationError):
            evolve_numeric(default_rho(), ToyParams(1.0), [0.0, 1.0], method="euler")

    def test_step_underflow(self):
        with pytest.raises(IntegrationError) as info:
            evolve_numeric(default_rho(), ToyParams(1.0), [0.0, 1.0], atol=1e-300)
        assert info.value.last_time >= 0.0

    def test_decoherence_rate(self):
        rho = DensityMatrix2(0.5, 0.3 - 0.1j)
        p = ToyParams(1.0, 100.0)
        grid = np.linspace(0, 0.1, 21)
        series = evolve_numeric(rho, p, grid)
        expected = 0.3 * np.exp(-100.0 * grid)
        assert np.max(np.abs(series.rho3.real - expected)) <= 1e-10
        closed = closed_form_series(rho, p, grid)
        assert np.array_equal(closed.rho3.real, 0.3 * np.exp(-100.0 * grid))


class TestProperties:
    @settings(max_examples=100, deadline=None)
    @given(densities, densities, st.floats(0, 1))
    def test_linearity(self, rho_a, rho_b, w):
        p = ToyParams.from_epsilon(1e-2)
        t = 0.7
        mixed = mixture([rho_a, rho_b], [w, 1 - w])
        lhs = closed_form_solution(mixed, p, t)
        ea, eb = closed_form_solution(rho_a, p, t), closed_form_solution(rho_b, p, t)
        assert abs(lhs.rho1 - (w * ea.rho1 + (1 - w) * eb.rho1)) <= 1e-10
        assert abs(lhs.rho3 - (w * ea.rho3 + (1 - w) * eb.rho3)) <= 1e-10

    def test_linearity_numeric(self):
        rng = np.random.default_rng(5)
        p = ToyParams.from_epsilon(1e-2)
        grid = [0.0, 0.05, 0.7]
        for _ in range(100):
            r1a, r1b = rng.random(2)
            rho_a = random_density(r1a, rng.uniform(0, 2 * math.pi), rng.random())
            rho_b = random_density(r1b, rng.uniform(0, 2 * math.pi), rng.random())
            w = rng.random()
            mixed = evolve_numeric(mixture([rho_a, rho_b], [w, 1 - w]), p, grid)
            sa, sb = evolve_numeric(rho_a, p, grid), evolve_numeric(rho_b, p, grid)
            assert np.max(np.abs(mixed.rho1 - (w * sa.rho1 + (1 - w) * sb.rho1))) <= 1e-10
            assert np.max(np.abs(mixed.rho3 - (w * sa.rho3 + (1 - w) * sb.rho3))) <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(densities, st.sampled_from([1e-6, 1e-2, 0.2, 0.6]))
    def test_positivity_along_closed_form(self, rho, eps):
        p = ToyParams.from_epsilon(eps)
        series = closed_form_series(rho, p, np.concatenate(([0.0], np.logspace(-4, 3, 60))))
        assert series.max_violation() <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(densities, st.sampled_from([1e-2, 0.2]))
    def test_convergence_bound(self, rho, eps):
        p = ToyParams.from_epsilon(eps)
        s1, s2 = relaxation_rates(p)
        x_s, x_f = mode_amplitudes(rho, p)
        grid = np.linspace(0, 50, 101)
        series = closed_form_series(rho, p, grid)
        bound = abs(x_s) * np.exp(s1.real * grid) + abs(x_f) * np.exp(s2.real * grid)
        assert np.all(np.abs(series.rho1 - 0.5) <= bound + 1e-12)
        # monotone decay on the slow-mode tail
        tail = np.abs(series.rho1[grid >= 1.0] - 0.5)
        assert np.all(np.diff(tail) <= 1e-15)


class TestSteadyState:
    @pytest.mark.parametrize("p", [ToyParams(1.0), ToyParams(0.0), ToyParams(1e-4, 3.0)])
    def test_steady(self, p):
        rho = steady_state(p)
        assert (rho.rho1, rho.rho3) == (0.5, 0)
        assert lindblad_rhs(rho, p) == (0.0, 0j)


class TestPlateau:
    def test_constant_series(self):
        grid = np.linspace(0, 10, 11)
        series = TimeSeries(grid, np.full(11, 0.5), np.zeros(11))
        plateau = detect_plateau(series, 0.1, 0.0025)
        assert plateau.end == 10.0 and plateau.censored
        assert plateau.value == 0.5

    def test_eps2(self):
        series = closed_form_series(default_rho(), ToyParams.from_epsilon(1e-2), np.linspace(0, 60, 6001))
        plateau = detect_plateau(series, 0.1, 0.0025)
        assert plateau.value == pytest.approx(0.4900, abs=1e-4)
        # band exit located with brentq on the closed form: t = 7.3143708
        assert plateau.duration == pytest.approx(7.2143708, abs=1e-6)

    def test_eps6(self):
        grid = np.concatenate(([0.0], np.logspace(-4, 12, 1601)))
        series = closed_form_series(default_rho(), ToyParams.from_epsilon(1e-6), grid)
        plateau = detect_plateau(series, 0.1, 0.0025)
        assert abs(plateau.value - 0.48) <= 1e-4
        assert plateau.duration > 1e8

    def test_too_short(self):
        series = TimeSeries([0.0, 0.05], [0.5, 0.5], [0, 0])
        with pytest.raises(ValidationError):
            detect_plateau(series, 0.1, 0.0025)
        with pytest.raises(ValidationError):
            detect_plateau(series, 0.0, -1.0)
