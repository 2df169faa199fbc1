"""The unimodular-phase test family and its blow-up diagnostics report.

The family is defined in the dual domain:

    ft_n(k) = D(k)^n / (1 + k^2),   D(k) = (i - k)/(i + k),

so |ft_n| = 1/(1+k^2) for every n: only the phase changes with n, and the
phase of D^n is exactly 2 n atan(k) (winding n across the full line).

Under the toolkit's transform convention the inverse transform has the
closed form

    f_n(x) = c * s * (-1)^(n-1) (|x|/n) exp(-|x|) L^(1)_{n-1}(2|x|)

supported on one half-line, where L^(1)_m is the generalized Laguerre
polynomial with alpha = 1.  The support side, the global sign s, and the
constant c are convention artifacts; they are fixed once per process by a
numerical calibration against the inverse transform at n = 1 (see
:func:`calibrate_closed_form`).  The 1/n factor is forced by Parseval:
|ft_n| is n-independent, hence so is ||f_n||_L2, and the Laguerre L2 norm
grows like n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .grid_fourier import (
    GridFunction,
    GridSpec,
    NormReport,
    SpectralFunction,
    inverse_transform,
    norms,
)

LAGUERRE_MAX_DEGREE = 200
# x-spacing must resolve the fastest oscillation of the closed form, whose
# local wavenumber grows linearly in n.
ALIAS_GUARD = np.pi / 4.0


@dataclass(frozen=True)
class FamilyParams:
    n: int
    spec: GridSpec

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError(f"family order must be >= 0, got {self.n}")

    def check_resolution(self):
        if self.n * self.spec.spacing >= ALIAS_GUARD:
            raise ValidationError(
                f"grid spacing {self.spec.spacing:.3g} cannot resolve order n={self.n}: "
                f"need n*h < pi/4"
            )


@dataclass(frozen=True)
class FamilyRow:
    n: int
    norms: NormReport
    winding: int


@dataclass(frozen=True)
class CatastropheReport:
    rows: tuple[FamilyRow, ...]
    growth_ratio_supgrad: float
    max_l2_drift: float
    max_h1_drift: float
    verdict: str  # "catastrophe_trend" | "stable"

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {
                    "n": r.n,
                    "l2": r.norms.l2,
                    "h1": r.norms.h1_seminorm,
                    "sup": r.norms.sup,
                    "sup_grad": r.norms.sup_grad,
                    "winding": r.winding,
                }
                for r in self.rows
            ],
            "growth_ratio_supgrad": self.growth_ratio_supgrad,
            "max_l2_drift": self.max_l2_drift,
            "max_h1_drift": self.max_h1_drift,
            "verdict": self.verdict,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,l2,h1,sup,sup_grad,winding\n")
            for r in self.rows:
                fh.write(
                    f"{r.n},{float(r.norms.l2)!r},{float(r.norms.h1_seminorm)!r},"
                    f"{float(r.norms.sup)!r},{float(r.norms.sup_grad)!r},{r.winding}\n"
                )

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")


def blaschke_spectrum(p: FamilyParams) -> SpectralFunction:
    """Spectral samples of the family member of order n.

    The modulus is filled with 1/(1+k^2) exactly and the phase with the
    analytic branch 2*n*atan(k), which is already continuous: the winding is
    exact on any grid.
    """
    p.check_resolution()
    k = p.spec.k()
    modulus = 1.0 / (1.0 + k * k)
    phase = 2.0 * p.n * np.arctan(k)
    return SpectralFunction.from_modulus_phase(k, modulus, phase, grid_spec=p.spec)


def laguerre_eval(m: int, y, alpha: int = 1):
    """Generalized Laguerre polynomial L^(alpha)_m(y) by three-term recurrence.

    The recurrence is stable at double precision for m <= 200 and y >= 0,
    which is the regime the closed form needs (y = 2|x|).
    """
    if m < 0 or m > LAGUERRE_MAX_DEGREE:
        raise ValidationError(f"Laguerre degree must be in [0, {LAGUERRE_MAX_DEGREE}]")
    y = np.asarray(y, dtype=float)
    t0 = np.ones_like(y)
    if m == 0:
        return t0 if t0.ndim else float(t0)
    t1 = 1.0 + alpha - y
    if m == 1:
        return t1
    a, b = t0, t1
    for j in range(1, m):
        a, b = b, ((2.0 * j + alpha + 1.0 - y) * b - (j + alpha) * a) / (j + 1.0)
    return b


def _scaled_laguerre(m: int, alpha: int, y: np.ndarray) -> np.ndarray:
    """exp(-y/2) * L^(alpha)_m(y); the same recurrence applied to scaled
    initial values, which avoids overflow for large y."""
    e = np.exp(-0.5 * y)
    t0 = e
    if m == 0:
        return t0
    t1 = (1.0 + alpha - y) * e
    if m == 1:
        return t1
    a, b = t0, t1
    for j in range(1, m):
        a, b = b, ((2.0 * j + alpha + 1.0 - y) * b - (j + alpha) * a) / (j + 1.0)
    return b


def _half_line_template(n: int, x: np.ndarray, side: int) -> np.ndarray:
    """(-1)^(n-1) (|x|/n) exp(-|x|) L^(1)_{n-1}(2|x|) on the half-line
    side*x <= 0, zero elsewhere."""
    out = np.zeros_like(x)
    s = -side * x  # s >= 0 on the support side
    m = s >= 0.0
    sm = s[m]
    out[m] = (-1.0) ** (n - 1) * (sm / n) * _scaled_laguerre(n - 1, 1, 2.0 * sm)
    return out


@dataclass(frozen=True)
class ClosedFormCalibration:
    side: int  # +1: support on x <= 0; -1: support on x >= 0
    sign: float
    constant: float


@lru_cache(maxsize=1)
def calibrate_closed_form() -> ClosedFormCalibration:
    """Fix (support side, sign, constant) once by least squares against the
    numerical inverse transform of the n = 1 spectrum."""
    spec = GridSpec(-40.0, 40.0, 4096)
    member = inverse_transform(blaschke_spectrum(FamilyParams(1, spec))).values.real
    x = spec.x()
    best = None
    for side in (+1, -1):
        t = _half_line_template(1, x, side)
        denom = float(np.dot(t, t))
        c = float(np.dot(t, member)) / denom
        resid = float(np.max(np.abs(member - c * t)))
        if best is None or resid < best[0]:
            best = (resid, side, c)
    resid, side, c = best
    sup = float(np.max(np.abs(member)))
    if resid > 0.05 * sup:
        raise ValidationError("closed-form calibration failed to match the transform")
    return ClosedFormCalibration(side=side, sign=float(np.sign(c)), constant=abs(c))


def laguerre_closed_form(p: FamilyParams) -> GridFunction:
    """Calibrated closed-form family member sampled on p.spec."""
    if p.n < 1:
        raise ValidationError("closed form requires n >= 1")
    if p.n - 1 > LAGUERRE_MAX_DEGREE:
        raise ValidationError(f"closed form capped at n <= {LAGUERRE_MAX_DEGREE + 1}")
    p.check_resolution()
    cal = calibrate_closed_form()
    x = p.spec.x()
    vals = cal.sign * cal.constant * _half_line_template(p.n, x, cal.side)
    return GridFunction(p.spec, vals.astype(complex))


def _trend_holds(values, slack: float = 0.01) -> bool:
    return all(values[i + 1] >= (1.0 - slack) * values[i] for i in range(len(values) - 1))


def family_report(n_list, spec: GridSpec) -> CatastropheReport:
    """Norm rows of the family across ascending orders n.

    Rows are measured on the band-limited member (the inverse transform of
    the sampled spectrum): its discrete L2/H1 norms inherit the exact
    n-independence of the sampled modulus through Parseval.
    """
    n_list = list(n_list)
    if not n_list:
        raise ValidationError("n_list must be nonempty")
    if any(n < 1 for n in n_list) or sorted(n_list) != n_list:
        raise ValidationError("n_list must be ascending positive integers")
    FamilyParams(max(n_list), spec).check_resolution()

    rows = []
    for n in n_list:
        F = blaschke_spectrum(FamilyParams(n, spec))
        member = inverse_transform(F)
        rows.append(FamilyRow(n=n, norms=norms(member), winding=F.winding))

    l2s = np.array([r.norms.l2 for r in rows])
    h1s = np.array([r.norms.h1_seminorm for r in rows])
    sups = np.array([r.norms.sup for r in rows])
    supgs = np.array([r.norms.sup_grad for r in rows])
    max_l2_drift = float(np.max(np.abs(l2s - l2s[0])) / l2s[0]) if l2s[0] else 0.0
    max_h1_drift = float(np.max(np.abs(h1s - h1s[0])) / h1s[0]) if h1s[0] else 0.0
    sup_drift = float(np.max(np.abs(sups - sups[0])) / sups[0]) if sups[0] else 0.0
    ratio = float(supgs[-1] / supgs[0]) if supgs[0] else 0.0

    trending = (
        len(rows) > 1
        and _trend_holds(supgs)
        and ratio > 1.0
        and max_l2_drift < 0.01
        and sup_drift < 0.01
    )
    return CatastropheReport(
        rows=tuple(rows),
        growth_ratio_supgrad=ratio,
        max_l2_drift=max_l2_drift,
        max_h1_drift=max_h1_drift,
        verdict="catastrophe_trend" if trending else "stable",
    )
