import numpy as np
import pytest

from phasecat import (
    BoundState,
    GridSpec,
    NumericalError,
    Potential,
    ScatteringData,
    ValidationError,
    accumulation_experiment,
    build_omega,
    recover_potential,
    solve_marchenko,
    staggered_k_grid,
)
from phasecat.inverse_scattering import MarchenkoKernel, accumulation_ladder
from tests.conftest import BOX, K_STANDARD


def reflectionless_sd(states):
    k = K_STANDARD
    s11 = np.ones(len(k), dtype=complex)
    for b in states:
        s11 *= (1j * b.kappa + k) / (k - 1j * b.kappa)
    z = np.zeros(len(k), dtype=complex)
    return ScatteringData(k_grid=k, s11=s11, s12=z, s21=z.copy(), s22=s11.copy(),
                          bound_states=tuple(states))


def empty_sd():
    k = K_STANDARD
    one = np.ones(len(k), dtype=complex)
    z = np.zeros(len(k), dtype=complex)
    return ScatteringData(k_grid=k, s11=one, s12=z, s21=z.copy(), s22=one.copy(), bound_states=())


class TestBuildOmega:
    def test_single_state_kernel(self):
        m = 2.0
        mk = build_omega(reflectionless_sd([BoundState(1.0, m)]))
        assert np.max(np.abs(mk.a_plus)) < 1e-12
        assert np.max(np.abs(mk.omega_plus - m * np.exp(-mk.t_grid))) < 1e-12

    def test_empty_kernel(self):
        mk = build_omega(empty_sd())
        assert np.max(np.abs(mk.omega_plus)) < 1e-12

    def test_weak_gaussian_real(self, gauss01_sd_fine):
        mk = build_omega(gauss01_sd_fine, t_min=-24.0)
        assert np.all(np.isreal(mk.a_plus))
        # kernel invariant: omega = a + bound sum, decayed at t_max
        assert abs(mk.omega_plus[-1]) < 1e-8 * max(1.0, np.max(np.abs(mk.omega_plus)))

    def test_nondecaying_reflection_rejected(self):
        k = K_STANDARD
        r = 0.5 * np.ones(len(k), dtype=complex)  # no decay at the edges
        t = np.sqrt(1 - 0.25) * np.ones(len(k), dtype=complex)
        sd = ScatteringData(k_grid=k, s11=t, s12=r, s21=r.copy(), s22=t.copy(), bound_states=())
        with pytest.raises(ValidationError):
            build_omega(sd)

    def test_kernel_invariant_enforced(self):
        t = np.linspace(0, 10, 64)
        with pytest.raises(ValidationError):
            MarchenkoKernel(t_grid=t, a_plus=np.zeros(64), omega_plus=np.ones(64),
                            bound_states=())


RANK1_SPEC = GridSpec(-6.0, 6.0, 256)


class TestSolveMarchenko:
    def test_zero_kernel(self):
        tk = solve_marchenko(build_omega(empty_sd()), RANK1_SPEC)
        assert np.max(np.abs(tk.diagonal)) < 1e-14

    def test_rank_one_closed_form(self):
        m = 2.0
        tk = solve_marchenko(build_omega(reflectionless_sd([BoundState(1.0, m)])), RANK1_SPEC)
        x = RANK1_SPEC.x()
        exact = -m * np.exp(-2 * x) / (1.0 + (m / 2.0) * np.exp(-2 * x))
        assert np.max(np.abs(tk.diagonal - exact)) < 1e-8
        assert tk.residual < 1e-8

    def test_kernel_decay_and_diagonal_continuity(self):
        tk = solve_marchenko(build_omega(reflectionless_sd([BoundState(1.0, 2.0)])), RANK1_SPEC)
        # B(x, .) decays toward the kernel cutoff
        bmax = max(np.max(np.abs(b)) for b in tk.values)
        for b in tk.values:
            assert abs(b[-1]) < 1e-6 * bmax
        # the diagonal trace has no isolated jumps beyond the local mesh scale
        jumps = np.abs(np.diff(tk.diagonal))
        local = 0.5 * (jumps[:-2] + jumps[2:])
        assert np.all(jumps[1:-1] <= 10.0 * local + 1e-12)

    def test_rank_two_finite(self):
        # the kappa=2 kernel grows like e^{-4x}; keep x_min inside the
        # conditioning budget
        sd = reflectionless_sd([BoundState(2.0, 12.0), BoundState(1.0, 6.0)])
        tk = solve_marchenko(build_omega(sd), GridSpec(-3.0, 5.0, 256))
        assert np.all(np.isfinite(tk.diagonal))
        assert tk.residual < 1e-8

    def test_ill_conditioned_names_x(self):
        sd = reflectionless_sd([BoundState(2.0, 12.0)])
        with pytest.raises(NumericalError, match="x="):
            solve_marchenko(build_omega(sd, t_min=-40.0), GridSpec(-16.0, 4.0, 256))


class TestRecoverPotential:
    def test_zero(self):
        q = recover_potential(solve_marchenko(build_omega(empty_sd()), RANK1_SPEC))
        assert np.max(np.abs(q.values)) < 1e-12

    def test_single_state_is_shifted_sech2(self):
        # norming m fixes the center at x0 = ln(m/2)/2; the recovery box is
        # centered on the well so its tails stay inside the support zone
        for m, x0 in ((2.0, 0.0), (2.0 * np.e**2, 1.0)):
            spec = GridSpec(-6.0 + x0, 6.0 + x0, 256)
            sd = reflectionless_sd([BoundState(1.0, m)])
            tk = solve_marchenko(build_omega(sd), spec)
            q = recover_potential(tk)
            x = spec.x()
            exact = -2.0 / np.cosh(x - x0) ** 2
            assert np.max(np.abs(q.values - exact)) < 1e-3

    def test_round_trip_sech2(self, sech2_sd):
        spec = GridSpec(-8.0, 8.0, 512)
        tk = solve_marchenko(build_omega(sech2_sd), spec)
        q = recover_potential(tk)
        exact = -2.0 / np.cosh(spec.x()) ** 2
        assert np.max(np.abs(q.values - exact)) < 1e-2 * 2.0

    def test_round_trip_weak_gaussian(self, gauss01_sd_fine):
        spec = GridSpec(-12.0, 12.0, 512)
        tk = solve_marchenko(build_omega(gauss01_sd_fine, t_min=-24.0), spec)
        q = recover_potential(tk)
        exact = 0.1 * np.exp(-spec.x() ** 2)
        assert np.max(np.abs(q.values - exact)) < 1e-2 * 0.1

    def test_recovered_is_real_potential(self, sech2_sd):
        tk = solve_marchenko(build_omega(sech2_sd), GridSpec(-8.0, 8.0, 512))
        q = recover_potential(tk)
        assert isinstance(q, Potential)
        assert np.all(np.isreal(q.values))


class TestAccumulation:
    def test_ladder(self):
        assert accumulation_ladder(1) == [1]
        assert accumulation_ladder(32) == [1, 2, 4, 8, 16, 32]
        assert accumulation_ladder(5) == [1, 2, 4, 5]

    def test_single_order_stable(self):
        rep = accumulation_experiment(1, 1.0)
        assert rep.verdict == "stable"
        assert len(rep.rows) == 1
        assert np.isfinite(rep.rows[0].norms.sup_grad)

    def test_trend(self):
        rep = accumulation_experiment(32, 1.0)
        supg = [r.norms.sup_grad for r in rep.rows]
        assert all(b >= 0.99 * a for a, b in zip(supg, supg[1:]))
        assert rep.growth_ratio_supgrad > 1.0
        assert rep.verdict == "catastrophe_trend"
        # bounded L2 envelope is reported
        assert rep.max_l2_drift < 1.0

    def test_e_inf_scaling(self):
        # doubling e_inf rescales x by 1/2 and the gradient sup by 8
        r1 = accumulation_experiment(4, 1.0)
        r2 = accumulation_experiment(4, 2.0)
        for a, b in zip(r1.rows, r2.rows):
            exponent = np.log2(b.norms.sup_grad / a.norms.sup_grad)
            assert abs(exponent - 3.0) < 0.02

    def test_reflection_profile_keeps_trend(self):
        pk = np.linspace(-8.0, 8.0, 257)
        profile = (pk, 0.2 * np.exp(-(pk**2)))
        rep = accumulation_experiment(16, 1.0, refl_modulus_profile=profile)
        assert rep.verdict == "catastrophe_trend"

    def test_validation(self):
        with pytest.raises(ValidationError):
            accumulation_experiment(0, 1.0)
        with pytest.raises(ValidationError):
            accumulation_experiment(4, -1.0)
