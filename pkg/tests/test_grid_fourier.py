import numpy as np
import pytest

from phasecat import (
    GridFunction,
    GridSpec,
    SpectralFunction,
    ValidationError,
    agmon_check,
    forward_transform,
    inverse_transform,
    norms,
    phase_decompose,
    translate_via_phase,
)
from phasecat.grid_fourier import (
    read_grid_csv,
    read_spectral_csv,
    transform_at,
    write_grid_csv,
    write_spectral_csv,
)

SPEC = GridSpec(-20.0, 20.0, 4096)


def gaussian(spec=SPEC):
    return GridFunction.from_callable(spec, lambda x: np.exp(-x**2 / 2))


class TestGridSpec:
    def test_basic(self):
        s = GridSpec(-1.0, 1.0, 64)
        assert s.spacing == pytest.approx(2.0 / 64)
        assert len(s.x()) == 64
        assert len(s.k()) == 64
        assert 0.0 in s.k()

    @pytest.mark.parametrize("args", [(1.0, -1.0, 64), (-1.0, 1.0, 60), (-1.0, 1.0, 8)])
    def test_invalid(self, args):
        with pytest.raises(ValidationError):
            GridSpec(*args)

    def test_nonfinite_samples_rejected(self):
        v = np.zeros(64)
        v[3] = np.nan
        with pytest.raises(ValidationError):
            GridFunction(GridSpec(-1, 1, 64), v)


class TestForwardTransform:
    def test_gaussian_pair(self):
        F = forward_transform(gaussian())
        exact = np.sqrt(2 * np.pi) * np.exp(-F.k_grid**2 / 2)
        assert np.max(np.abs(F.values - exact)) < 1e-8

    def test_zero(self):
        F = forward_transform(GridFunction(SPEC, np.zeros(SPEC.n_points)))
        assert np.all(F.values == 0)
        assert F.winding == 0

    def test_plancherel_gaussian(self):
        f = gaussian()
        F = forward_transform(f)
        l2_x = norms(f).l2
        dk = F.k_grid[1] - F.k_grid[0]
        l2_k = np.sqrt(dk * np.sum(F.modulus**2))
        assert abs(l2_x - l2_k / np.sqrt(2 * np.pi)) < 1e-8 * l2_x

    def test_warns_on_nondecaying(self):
        f = GridFunction.from_callable(SPEC, lambda x: np.cosh(x / 20))
        with pytest.warns(UserWarning):
            forward_transform(f)


class TestInverseTransform:
    def test_round_trip(self):
        f = gaussian()
        g = inverse_transform(forward_transform(f))
        rel = np.sqrt(np.sum(np.abs(g.values - f.values) ** 2) / np.sum(np.abs(f.values) ** 2))
        assert rel < 1e-10

    def test_lorentzian_spectrum(self):
        # (1/2pi) int e^{ikx}/(1+k^2) dk = exp(-|x|)/2
        F = SpectralFunction.from_values(SPEC.k(), 1.0 / (1.0 + SPEC.k() ** 2), grid_spec=SPEC)
        f = inverse_transform(F)
        x = SPEC.x()
        assert np.max(np.abs(f.values - np.exp(-np.abs(x)) / 2)) < 1e-3  # kink-limited
        mid = SPEC.n_points // 2
        assert np.argmax(np.abs(f.values)) == mid and x[mid] == 0.0
        # even decaying profile
        assert abs(f.values[mid + 100] - f.values[mid - 100]) < 1e-10

    def test_zero(self):
        F = SpectralFunction.from_values(SPEC.k(), np.zeros(SPEC.n_points), grid_spec=SPEC)
        assert np.all(inverse_transform(F).values == 0)

    def test_grid_mismatch(self):
        F = forward_transform(gaussian())
        with pytest.raises(ValidationError):
            inverse_transform(F, GridSpec(-10, 10, 4096))
        bare = SpectralFunction.from_values(F.k_grid, F.values)
        with pytest.raises(ValidationError):
            inverse_transform(bare)


class TestNorms:
    def test_gaussian_l2(self):
        assert norms(gaussian()).l2 == pytest.approx(np.pi**0.25, abs=1e-6)

    def test_zero(self):
        rep = norms(GridFunction(SPEC, np.zeros(SPEC.n_points)))
        assert rep.l2 == rep.sup == rep.h1_seminorm == rep.sup_grad == rep.m_norm == 0.0

    def test_m_norm_exponential(self):
        spec = GridSpec(-40.0, 40.0, 8192)
        f = GridFunction.from_callable(spec, lambda x: np.exp(-np.abs(x)))
        # int e^{-|x|} (1+|x|) dx = 4
        assert norms(f).m_norm == pytest.approx(4.0, abs=1e-3)


class TestAgmon:
    def test_smoothed_exponential_saturates(self):
        spec = GridSpec(-40.0, 40.0, 65536)
        eps = 0.01
        f = GridFunction.from_callable(spec, lambda x: np.exp(-(np.sqrt(x**2 + eps**2) - eps)))
        ratio = agmon_check(f)["ratio"]
        assert abs(ratio - 1.0) < 0.05

    def test_zero(self):
        out = agmon_check(GridFunction(SPEC, np.zeros(SPEC.n_points)))
        assert out == {"lhs": 0.0, "rhs": 0.0, "ratio": 0.0}

    def test_gaussian_below_one(self):
        out = agmon_check(gaussian())
        assert out["ratio"] < 1.0
        assert out["lhs"] <= out["rhs"]

    def test_complex_rejected(self):
        f = GridFunction.from_callable(SPEC, lambda x: np.exp(1j * x - x**2))
        with pytest.raises(ValidationError):
            agmon_check(f)


class TestPhaseDecompose:
    def test_linear_phase(self):
        a = 0.7
        g = np.exp(-SPEC.k() ** 2 / 8)
        F = SpectralFunction.from_values(SPEC.k(), g * np.exp(1j * a * SPEC.k()))
        modulus, phase, winding = phase_decompose(F)
        usable = F.phase_mask
        assert np.max(np.abs(phase[usable] - a * SPEC.k()[usable])) < 1e-8
        kmax = np.max(np.abs(SPEC.k()[usable]))
        assert winding == int(np.round(2 * a * kmax / (2 * np.pi)))

    def test_real_positive(self):
        F = SpectralFunction.from_values(SPEC.k(), 1.0 / (1.0 + SPEC.k() ** 2))
        assert np.all(F.phase_unwrapped == 0)
        assert F.winding == 0

    def test_single_rotation_factor(self):
        k = np.linspace(-200.0, 200.0, 40001)
        F = SpectralFunction.from_values(k, ((1j - k) / (1j + k)) / (1 + k**2))
        assert abs(F.winding) == 1

    def test_no_large_jumps_when_unmasked(self):
        rng = np.random.default_rng(7)
        vals = np.exp(1j * np.cumsum(rng.uniform(-2.5, 2.5, SPEC.n_points)))
        F = SpectralFunction.from_values(SPEC.k(), vals)
        split = SPEC.n_points // 2
        for half in (slice(0, split), slice(split, None)):
            d = np.diff(F.phase_unwrapped[half])
            assert np.max(np.abs(d)) <= np.pi + 1e-12

    def test_masked_carry_forward(self):
        k = np.linspace(-1, 1, 21)
        vals = np.exp(1j * k)
        vals[15] = 0.0
        F = SpectralFunction.from_values(k, vals)
        assert not F.phase_mask[15]
        assert F.phase_unwrapped[15] == F.phase_unwrapped[14]

    def test_decomposition_reconstructs_values(self):
        rng = np.random.default_rng(13)
        vals = rng.normal(size=64) + 1j * rng.normal(size=64)
        F = SpectralFunction.from_values(np.arange(64.0), vals)
        recon = F.modulus * np.exp(1j * F.phase_unwrapped)
        assert np.max(np.abs(recon - vals)[F.phase_mask]) < 1e-12


class TestTranslate:
    def test_zero_shift(self):
        f = gaussian()
        g = translate_via_phase(f, 0.0)
        assert np.max(np.abs(g.values - f.values)) < 1e-14

    def test_gaussian_shift(self):
        # positive shift moves the graph toward -x under this convention
        f = gaussian()
        g = translate_via_phase(f, 1.0)
        x = SPEC.x()
        assert np.max(np.abs(g.values - np.exp(-((x + 1.0) ** 2) / 2))) < 1e-8

    def test_matches_index_roll(self):
        f = gaussian()
        m = 37
        g = translate_via_phase(f, m * SPEC.spacing)
        rolled = np.roll(f.values, -m)
        rel = np.sqrt(np.sum(np.abs(g.values - rolled) ** 2) / np.sum(np.abs(f.values) ** 2))
        assert rel < 1e-8

    def test_modulus_invariance(self):
        f = gaussian()
        F = forward_transform(f)
        G = forward_transform(translate_via_phase(f, 1.0))
        assert np.max(np.abs(G.modulus - F.modulus)) < 1e-12

    def test_shift_too_large(self):
        with pytest.raises(ValidationError):
            translate_via_phase(gaussian(), 11.0)


class TestQuadratureHelpers:
    def test_transform_at_matches_fft(self):
        f = gaussian()
        F = forward_transform(f)
        ks = F.k_grid[100:200:7]
        direct = transform_at(f, ks)
        assert np.max(np.abs(direct - F.values[100:200:7])) < 1e-10


class TestCsvIO:
    def test_grid_round_trip(self, tmp_path):
        f = GridFunction.from_callable(SPEC, lambda x: np.exp(-x**2) * (1 + 2j))
        p = tmp_path / "f.csv"
        write_grid_csv(p, f)
        g = read_grid_csv(p)
        assert g.spec == f.spec
        assert np.max(np.abs(g.values - f.values)) == 0.0

    def test_spectral_round_trip(self, tmp_path):
        F = forward_transform(gaussian())
        p = tmp_path / "F.csv"
        write_spectral_csv(p, F)
        G = read_spectral_csv(p)
        assert np.max(np.abs(G.values - F.values)) == 0.0

    def test_malformed_reports_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,re,im\n0.0,1.0,0.0\n0.1,oops,0.0\n")
        with pytest.raises(ValidationError, match="line 3"):
            read_grid_csv(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValidationError, match="line 1"):
            read_grid_csv(p)
