"""Recovery of the potential's transform from the scattering phase.

Quantities on a symmetric staggered k-grid:

    phi      = 2 * unwrapped arg s11              (transmission phase, odd in k)
    I12      = 2ik s12 - qt(2k),  I21 = 2ik s21 - qt(-2k)
               (qt = transform of q; both corrections start at second order
               in the potential, the first order cancels by construction)
    R12, R21 = Re / Im of (-I12 + I21 cos(phi) + i I12 sin(phi))
               (primary combination; a second path takes Re / Im of
               (I21 e^{i phi} - I12) and feeds the residual check)
    U, V     = ((1+cos phi) R12 + sin phi R21) / sin phi,
               ((-1+sin phi) R12 + (1-cos phi) R21) / sin phi
               evaluated only where |sin phi| >= singular_tol (the system's
               determinant is sin phi; the zeros of the phase are exposed
               through the mask instead of poisoning the output)

The defining complex relation U+iV+I12 = (U-iV+I21) e^{i phi} is kept as a
diagnostic residual; it is reported, never asserted, because the closed
form above does not solve the relation identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .forward_scattering import (
    Potential,
    ScatteringData,
    bound_states,
    born_series,
    dispersion_s11,
    staggered_k_grid,
)
from .grid_fourier import inverse_quadrature_at, transform_at, unwrap_phase

DEFAULT_SINGULAR_TOL = 1e-8
PHASE_MODULUS_FLOOR = 1e-12


@dataclass(frozen=True)
class PhaseSystem:
    k_grid: np.ndarray
    phi: np.ndarray
    i12: np.ndarray
    i21: np.ndarray
    r12: np.ndarray
    r21: np.ndarray
    u: np.ndarray
    v: np.ndarray
    sin_phi_mask: np.ndarray  # True where |sin phi| >= singular_tol
    winding: int

    def to_json_dict(self) -> dict:
        def pairs(a):
            return [[float(x.real), float(x.imag)] for x in a]

        return {
            "k": [float(x) for x in self.k_grid],
            "phi": [float(x) for x in self.phi],
            "i12": pairs(self.i12),
            "i21": pairs(self.i21),
            "r12": [float(x) for x in self.r12],
            "r21": [float(x) for x in self.r21],
            "u": [float(x) for x in self.u],
            "v": [float(x) for x in self.v],
            "sin_phi_mask": [bool(b) for b in self.sin_phi_mask],
            "winding": self.winding,
        }


def phase_from_s11(sd: ScatteringData):
    """phi = 2 * unwrapped arg s11 and its winding count.

    The winding counts full 2pi turns of phi by total variation over the
    two half-lines (the jump across k = 0 in the full-reflection limit is
    not a turn and is excluded)."""
    k = np.asarray(sd.k_grid, dtype=float)
    order = np.argsort(k)
    phase, mask = unwrap_phase(k[order], sd.s11[order], atol=PHASE_MODULUS_FLOOR)
    phi_sorted = 2.0 * phase
    split = int(np.searchsorted(k[order], 0.0))
    tv = float(np.sum(np.abs(np.diff(phi_sorted[:split])))) + float(
        np.sum(np.abs(np.diff(phi_sorted[split:])))
    )
    wind = int(np.round(tv / (2.0 * np.pi)))
    phi = np.empty_like(phi_sorted)
    phi[order] = phi_sorted
    out_mask = np.empty_like(mask)
    out_mask[order] = mask
    return phi, wind, out_mask


def correction_terms(q: Potential, sd: ScatteringData):
    """Second-and-higher-order parts of the reflection data:
    i12 = 2ik s12 - qt(2k), i21 = 2ik s21 - qt(-2k)."""
    k = np.asarray(sd.k_grid, dtype=float)
    qt_plus = transform_at(q.grid, 2.0 * k)
    qt_minus = transform_at(q.grid, -2.0 * k)
    i12 = 2j * k * sd.s12 - qt_plus
    i21 = 2j * k * sd.s21 - qt_minus
    return i12, i21


def _check_aligned(*arrays):
    n = {np.asarray(a).shape for a in arrays}
    if len(n) != 1:
        raise ValidationError("arrays must share one k-grid")


def r_terms(i12, i21, phi):
    """Primary combination: R12 + i R21 = -I12 + I21 cos(phi) + i (I12 sin(phi))."""
    _check_aligned(i12, i21, phi)
    z = -i12 + i21 * np.cos(phi) + 1j * (i12 * np.sin(phi))
    return z.real, z.imag


def r_terms_direct(i12, i21, phi):
    """Direct form Re/Im of (I21 e^{i phi} - I12), used by the residual path."""
    _check_aligned(i12, i21, phi)
    z = i21 * np.exp(1j * phi) - i12
    return z.real, z.imag


def solve_uv(r12, r21, phi, singular_tol: float = DEFAULT_SINGULAR_TOL):
    """Evaluate the closed-form solution of the phase system for (U, V).

    Samples with |sin phi| < singular_tol are masked (the determinant of
    the underlying linear system is sin phi); masked samples carry 0 in the
    returned arrays.  A fully masked grid with nonzero inputs is an error;
    all-zero inputs are the trivial fixed point and return zeros.
    """
    r12 = np.asarray(r12, dtype=float)
    r21 = np.asarray(r21, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _check_aligned(r12, r21, phi)
    s = np.sin(phi)
    c = np.cos(phi)
    mask = np.abs(s) >= singular_tol
    if not mask.any():
        if np.all(r12 == 0.0) and np.all(r21 == 0.0):
            return np.zeros_like(r12), np.zeros_like(r12), mask
        raise NumericalError("phase degenerate everywhere")
    u = np.zeros_like(r12)
    v = np.zeros_like(r12)
    sm = s[mask]
    cm = c[mask]
    u[mask] = ((1.0 + cm) * r12[mask] + sm * r21[mask]) / sm
    v[mask] = ((-1.0 + sm) * r12[mask] + (1.0 - cm) * r21[mask]) / sm
    if not (np.all(np.isfinite(u[mask])) and np.all(np.isfinite(v[mask]))):
        raise NumericalError("non-finite values on unmasked samples")
    return u, v, mask


def relation_residual(u, v, i12, i21, phi):
    """Pointwise |U+iV+I12 - (U-iV+I21) e^{i phi}| (diagnostic only)."""
    _check_aligned(u, v, i12, i21, phi)
    lhs = u + 1j * v + i12
    rhs = (u - 1j * v + i21) * np.exp(1j * np.asarray(phi, dtype=float))
    return np.abs(lhs - rhs)


def _spectral_k_derivative(values: np.ndarray, dk: float) -> np.ndarray:
    """Derivative along a uniform k-array via FFT (data assumed decayed at
    the array ends)."""
    n = len(values)
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=dk)
    out = np.fft.ifft(1j * xi * np.fft.fft(values))
    return out


def bound_report(q: Potential, i12, i21, k_grid, u=None, v=None, r12=None, r21=None, mask=None) -> dict:
    """Record sup|q| against the integral of the correction terms and their
    k-derivatives.  Ratios are reported, never asserted: the comparison
    constant is not specified and the two sides scale differently with the
    potential amplitude."""
    k = np.asarray(k_grid, dtype=float)
    order = np.argsort(k)
    dk = float(k[order][1] - k[order][0])
    i12s = np.asarray(i12)[order]
    i21s = np.asarray(i21)[order]
    di12 = _spectral_k_derivative(i12s, dk)
    di21 = _spectral_k_derivative(i21s, dk)
    integrand = np.abs(i12s) + np.abs(i21s) + np.abs(di12) + np.abs(di21)
    rhs = float(np.trapezoid(integrand, dx=dk))
    lhs = float(np.max(np.abs(q.values)))
    out = {
        "lhs_sup_q": lhs,
        "rhs_integral": rhs,
        "ratio": lhs / rhs if rhs > 0 else 0.0,
    }
    if u is not None and r12 is not None:
        u = np.asarray(u)[order]
        v = np.asarray(v)[order]
        r12s = np.asarray(r12)[order]
        r21s = np.asarray(r21)[order]
        msk = np.asarray(mask)[order] if mask is not None else np.ones(len(k), bool)
        dr12 = _spectral_k_derivative(r12s, dk)
        dr21 = _spectral_k_derivative(r21s, dk)
        denom = np.abs(r12s) + np.abs(r21s) + np.abs(dr12) + np.abs(dr21)
        usable = msk & (denom > 0)
        ratios = (np.abs(u[usable]) + np.abs(v[usable])) / denom[usable]
        out["uv_bound_ratio"] = float(np.max(ratios)) if usable.any() else 0.0
    return out


def build_phase_system(
    q: Potential,
    sd: ScatteringData,
    singular_tol: float = DEFAULT_SINGULAR_TOL,
) -> PhaseSystem:
    """Full phase pipeline for a potential with its scattering data."""
    phi, wind, _ = phase_from_s11(sd)
    i12, i21 = correction_terms(q, sd)
    r12, r21 = r_terms(i12, i21, phi)
    u, v, mask = solve_uv(r12, r21, phi, singular_tol=singular_tol)
    return PhaseSystem(
        k_grid=np.asarray(sd.k_grid, dtype=float),
        phi=phi,
        i12=i12,
        i21=i21,
        r12=r12,
        r21=r21,
        u=u,
        v=v,
        sin_phi_mask=mask,
        winding=wind,
    )


def _reflected(q: Potential) -> Potential:
    """q(-x) on the same (symmetric) grid; the left reflection of q is the
    right reflection of the mirror image."""
    spec = q.spec
    if abs(spec.x_min + spec.x_max) > 1e-12 * spec.width:
        raise ValidationError("parity trick needs a symmetric box")
    vals = np.concatenate(([0.0], q.values[:0:-1]))  # x_max itself is off-grid
    return Potential.from_samples(spec, vals)


def q_representation_residual(
    q: Potential,
    max_born_order: int = 3,
    k_grid=None,
    singular_tol: float = DEFAULT_SINGULAR_TOL,
) -> float:
    """Relative L2 distance between q and its phase-space reconstruction.

    The correction terms are evaluated from the truncated plane-wave series
    (their first-order parts cancel against the discrete transform of q
    exactly), the phase comes from the modulus dispersion formula with the
    discrete spectrum attached, (U, V) follow from the closed-form solve,
    and the candidate potential is the inverse transform of U+iV read as
    the transform of q at 2k.
    """
    if q.m_norm >= 0.5:
        raise ValidationError(
            f"representation residual needs a weak potential (m_norm={q.m_norm:.3f} >= 0.5)"
        )
    sup_q = float(np.max(np.abs(q.values)))
    if sup_q == 0.0:
        return 0.0
    if k_grid is None:
        k_grid = staggered_k_grid(8.0, 512)
    k = np.asarray(k_grid, dtype=float)

    s12_born = born_series(q, k, max_born_order)
    s21_born = born_series(_reflected(q), k, max_born_order)

    qt_plus = transform_at(q.grid, 2.0 * k)
    qt_minus = transform_at(q.grid, -2.0 * k)
    i12 = 2j * k * s12_born - qt_plus
    i21 = 2j * k * s21_born - qt_minus

    refl_mod = np.clip(np.abs(s12_born), 0.0, 1.0 - 1e-12)
    states = bound_states(q)
    s11 = dispersion_s11(refl_mod, states, k)
    phase, _ = unwrap_phase(k, s11, atol=PHASE_MODULUS_FLOOR)
    phi = 2.0 * phase

    r12, r21 = r_terms(i12, i21, phi)
    u, v, mask = solve_uv(r12, r21, phi, singular_tol=singular_tol)
    if np.count_nonzero(~mask) > 0.5 * len(mask):
        raise NumericalError(
            f"phase degenerate on {np.count_nonzero(~mask)}/{len(mask)} samples"
        )

    order = np.argsort(k)
    kappa_grid = 2.0 * k[order]  # U+iV samples the transform at 2k
    qt_candidate = (u + 1j * v)[order]
    x = q.spec.x()
    q_hat = inverse_quadrature_at(kappa_grid, qt_candidate, x).real

    w = np.full(len(x), q.spec.spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    num = float(np.sqrt(np.sum(w * np.abs(q_hat - q.values) ** 2)))
    den = float(np.sqrt(np.sum(w * np.abs(q.values) ** 2)))
    return num / den
