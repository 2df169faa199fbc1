"""Uniform-grid functions on an interval, their Fourier transforms, and norms.

Conventions (fixed once, used by every other module):

    ft(k) = int f(x) exp(-i k x) dx          (forward)
    f(x)  = (1/2pi) int ft(k) exp(+i k x) dk (inverse)

so Parseval reads ||f||_L2 = (2pi)^{-1/2} ||ft||_L2.

The grid x_j = x_min + j h, j = 0..N-1, h = (x_max - x_min)/N covers one
period of the implied periodic extension; x_max is identified with x_min.
Quadrature is the trapezoidal rule on that periodic extension, i.e. the
plain rectangle sum h * sum(f_j).  With this choice the discrete transform
pair is exactly unitary: Parseval holds to rounding error for *every* grid
function, not just decaying ones.

The dual k-grid is the FFT grid 2pi*m/(N h) in ascending order; it contains
k = 0 and the negative Nyquist mode but not the positive one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Phase samples with modulus below this are considered undefined; the
# unwrapped phase is carried forward across them.
PHASE_ATOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform sampling of [x_min, x_max) with a power-of-two point count."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValidationError(f"x_min={self.x_min} must be < x_max={self.x_max}")
        n = self.n_points
        if n < 16 or (n & (n - 1)) != 0:
            raise ValidationError(f"n_points must be a power of two >= 16, got {n}")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    def x(self) -> np.ndarray:
        return self.x_min + self.spacing * np.arange(self.n_points)

    def k(self) -> np.ndarray:
        """FFT-dual wavenumbers in ascending order."""
        return 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(self.n_points, d=self.spacing))


@dataclass(frozen=True)
class GridFunction:
    """Complex samples of a function on a GridSpec."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.spec.n_points,):
            raise ValidationError(
                f"values length {v.shape} does not match n_points={self.spec.n_points}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("grid function contains non-finite samples")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, spec: GridSpec, fn) -> "GridFunction":
        return cls(spec, np.asarray(fn(spec.x()), dtype=complex))

    def real_values(self, tol: float = 1e-8) -> np.ndarray:
        sup = float(np.max(np.abs(self.values))) or 1.0
        if np.max(np.abs(self.values.imag)) > tol * sup:
            raise ValidationError("grid function is not real-valued")
        return self.values.real


@dataclass(frozen=True)
class SpectralFunction:
    """Sampled Fourier data with modulus / unwrapped-phase decomposition.

    ``phase_mask`` is True where the modulus is large enough for the phase to
    be defined; on masked-out samples the unwrapped phase is carried forward
    from the previous usable sample.
    """

    k_grid: np.ndarray
    values: np.ndarray
    modulus: np.ndarray
    phase_unwrapped: np.ndarray
    winding: int
    phase_mask: np.ndarray
    grid_spec: GridSpec | None = field(default=None, compare=False)

    @classmethod
    def from_values(
        cls,
        k_grid: np.ndarray,
        values: np.ndarray,
        grid_spec: GridSpec | None = None,
        atol: float = PHASE_ATOL,
    ) -> "SpectralFunction":
        k_grid = np.asarray(k_grid, dtype=float)
        values = np.asarray(values, dtype=complex)
        if k_grid.shape != values.shape:
            raise ValidationError("k_grid and values must have the same length")
        if not np.all(np.isfinite(values)):
            raise ValidationError("spectral values contain non-finite samples")
        modulus = np.abs(values)
        phase, mask = unwrap_phase(k_grid, values, atol=atol)
        wind = winding_number(phase)
        return cls(k_grid, values, modulus, phase, wind, mask, grid_spec)

    @classmethod
    def from_modulus_phase(
        cls,
        k_grid: np.ndarray,
        modulus: np.ndarray,
        phase_unwrapped: np.ndarray,
        grid_spec: GridSpec | None = None,
    ) -> "SpectralFunction":
        """Build from an already-continuous phase (no numerical unwrapping)."""
        k_grid = np.asarray(k_grid, dtype=float)
        modulus = np.asarray(modulus, dtype=float)
        phase = np.asarray(phase_unwrapped, dtype=float)
        values = modulus * np.exp(1j * phase)
        mask = modulus >= PHASE_ATOL
        return cls(k_grid, values, modulus, phase, winding_number(phase), mask, grid_spec)


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1_seminorm: float
    sup: float
    sup_grad: float
    m_norm: float


def unwrap_phase(k_grid, values, atol: float = PHASE_ATOL):
    """Unwrap arg(values) outward from k = 0, each half-line anchored at its
    own innermost sample's principal argument.

    Anchoring the halves independently keeps conjugate-symmetric data odd
    even when the underlying phase has a genuine jump across k = 0 (the
    full-reflection limit); folding across the origin would silently absorb
    that jump into the unwrapping.

    Returns (phase, mask).  mask is False where |values| < atol; there the
    phase is held at the previous usable sample's value.
    """
    values = np.asarray(values, dtype=complex)
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(np.diff(k_grid) <= 0):
        raise ValidationError("phase unwrapping expects an ascending k grid")
    n = len(values)
    mask = np.abs(values) >= atol
    raw = np.angle(values)
    phase = np.zeros(n)

    def _scan(idx_range):
        prev = None
        for i in idx_range:
            if mask[i]:
                if prev is None:
                    prev = raw[i]
                else:
                    delta = raw[i] - np.mod(prev, 2.0 * np.pi)
                    # fold the increment into (-pi, pi]
                    delta = delta - 2.0 * np.pi * np.round(delta / (2.0 * np.pi))
                    prev = prev + delta
            phase[i] = 0.0 if prev is None else prev

    # ascending-k layout assumed; split at the first nonnegative sample,
    # which also anchors the k = 0 node when the grid carries one
    split = int(np.searchsorted(k_grid, 0.0))
    _scan(range(split, n))
    _scan(range(split - 1, -1, -1))
    return phase, mask


def winding_number(phase_unwrapped) -> int:
    p = np.asarray(phase_unwrapped, dtype=float)
    if len(p) < 2:
        return 0
    return int(np.round((p[-1] - p[0]) / (2.0 * np.pi)))


def forward_transform(f: GridFunction) -> SpectralFunction:
    """Discrete approximation of ft(k) = int f exp(-ikx) dx on the dual grid."""
    spec = f.spec
    v = f.values
    sup = float(np.max(np.abs(v)))
    if sup > 0.0:
        edge = max(abs(v[0]), abs(v[-1]))
        if edge >= 1e-8 * sup:
            warnings.warn(
                "grid function does not decay at the box ends; "
                "the transform treats it as periodic",
                stacklevel=2,
            )
    raw_k = 2.0 * np.pi * np.fft.fftfreq(spec.n_points, d=spec.spacing)
    raw = spec.spacing * np.exp(-1j * raw_k * spec.x_min) * np.fft.fft(v)
    values = np.fft.fftshift(raw)
    return SpectralFunction.from_values(spec.k(), values, grid_spec=spec)


def inverse_transform(F: SpectralFunction, spec: GridSpec | None = None) -> GridFunction:
    """Exact inverse of :func:`forward_transform` on the same grid."""
    spec = spec or F.grid_spec
    if spec is None:
        raise ValidationError("spectral function carries no grid; pass spec explicitly")
    k = spec.k()
    if F.k_grid.shape != k.shape or not np.allclose(F.k_grid, k, rtol=0.0, atol=1e-9):
        raise ValidationError("spectral samples are not on the dual grid of the given spec")
    raw = np.fft.ifftshift(F.values * np.exp(1j * F.k_grid * spec.x_min))
    v = np.fft.ifft(raw) / spec.spacing
    return GridFunction(spec, v)


def spectral_derivative(f: GridFunction) -> GridFunction:
    """d/dx via multiplication by ik in the dual domain (Nyquist mode zeroed)."""
    spec = f.spec
    raw_k = 2.0 * np.pi * np.fft.fftfreq(spec.n_points, d=spec.spacing)
    fk = np.fft.fft(f.values)
    fk *= 1j * raw_k
    fk[spec.n_points // 2] = 0.0
    return GridFunction(spec, np.fft.ifft(fk))


def norms(f: GridFunction) -> NormReport:
    """L2, H1-seminorm, sup norms and the weighted norm int |f|(1+|x|) dx.

    l2 and m_norm use the periodic trapezoid rule (rectangle sum); the
    derivative norms use the spectral derivative of the samples.
    """
    h = f.spec.spacing
    x = f.spec.x()
    absv = np.abs(f.values)
    l2 = float(np.sqrt(h * np.sum(absv**2)))
    sup = float(np.max(absv))
    df = spectral_derivative(f)
    absd = np.abs(df.values)
    h1 = float(np.sqrt(h * np.sum(absd**2)))
    sup_grad = float(np.max(absd))
    m_norm = float(h * np.sum(absv * (1.0 + np.abs(x))))
    return NormReport(l2=l2, h1_seminorm=h1, sup=sup, sup_grad=sup_grad, m_norm=m_norm)


def agmon_check(f: GridFunction) -> dict:
    """Check max|f|^2 <= 2 ||f|| ||f'|| for real decaying samples.

    Returns ``lhs`` = sup^2, ``rhs`` = 2*l2*h1 (the conservative bound), and
    ``ratio`` = sup^2/(l2*h1), normalized so the extremal two-sided
    exponential family saturates at 1; every admissible function satisfies
    ratio <= 1 (+ discretization slack).
    """
    f.real_values()
    rep = norms(f)
    lhs = rep.sup**2
    denom = rep.l2 * rep.h1_seminorm
    rhs = 2.0 * denom
    ratio = 0.0 if lhs == 0.0 else lhs / denom
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio}


def phase_decompose(F: SpectralFunction):
    """Return (modulus, unwrapped phase, winding) of spectral samples."""
    return F.modulus, F.phase_unwrapped, F.winding


def translate_via_phase(f: GridFunction, shift: float) -> GridFunction:
    """Multiply the transform by exp(ik*shift) and invert.

    Under the sign convention above this maps f(x) to f(x + shift), i.e. the
    graph moves toward -x for positive shift.  |ft| is unchanged.
    """
    if abs(shift) >= f.spec.width / 4.0:
        raise ValidationError(
            f"|shift|={abs(shift)} exceeds a quarter of the box width {f.spec.width}"
        )
    F = forward_transform(f)
    shifted = SpectralFunction.from_values(
        F.k_grid, F.values * np.exp(1j * F.k_grid * shift), grid_spec=f.spec
    )
    return inverse_transform(shifted)


def transform_at(f: GridFunction, k_values) -> np.ndarray:
    """ft(k) at arbitrary wavenumbers by direct quadrature (trapezoid)."""
    k_values = np.atleast_1d(np.asarray(k_values, dtype=float))
    x = f.spec.x()
    w = np.full(f.spec.n_points, f.spec.spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    return (w * f.values) @ np.exp(-1j * np.outer(x, k_values))


def inverse_quadrature_at(k_grid, values, x_values) -> np.ndarray:
    """(1/2pi) int values(k) exp(ikx) dk at arbitrary x by trapezoid sum."""
    k_grid = np.asarray(k_grid, dtype=float)
    values = np.asarray(values, dtype=complex)
    x_values = np.atleast_1d(np.asarray(x_values, dtype=float))
    w = np.empty_like(k_grid)
    w[1:-1] = 0.5 * (k_grid[2:] - k_grid[:-2])
    w[0] = 0.5 * (k_grid[1] - k_grid[0])
    w[-1] = 0.5 * (k_grid[-1] - k_grid[-2])
    return (w * values) @ np.exp(1j * np.outer(k_grid, x_values)) / (2.0 * np.pi)


# ---------------------------------------------------------------------------
# CSV I/O: grid functions as "x,re,im" (im optional), spectra as "k,re,im".


def _read_columns(path, names):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = [c.strip() for c in header.split(",")]
        if cols not in (names[0], names[1]):
            raise ValidationError(
                f"{path}: line 1: expected header {','.join(names[1])} "
                f"(got {header!r})"
            )
        ncol = len(cols)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != ncol:
                raise ValidationError(f"{path}: line {lineno}: expected {ncol} fields")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.asarray(rows), ncol


def read_grid_csv(path) -> GridFunction:
    data, ncol = _read_columns(path, (["x", "re"], ["x", "re", "im"]))
    x = data[:, 0]
    values = data[:, 1] + (1j * data[:, 2] if ncol == 3 else 0.0)
    n = len(x)
    h = np.diff(x)
    if n < 16 or not np.allclose(h, h[0], rtol=1e-9, atol=1e-12):
        raise ValidationError(f"{path}: grid must be uniform with >= 16 points")
    spec = GridSpec(float(x[0]), float(x[0] + n * h[0]), n)
    return GridFunction(spec, values)


def write_grid_csv(path, f: GridFunction) -> None:
    x = f.spec.x()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,re,im\n")
        for xi, vi in zip(x, f.values):
            fh.write(f"{float(xi)!r},{float(vi.real)!r},{float(vi.imag)!r}\n")


def read_spectral_csv(path) -> SpectralFunction:
    data, _ = _read_columns(path, (["k", "re", "im"], ["k", "re", "im"]))
    return SpectralFunction.from_values(data[:, 0], data[:, 1] + 1j * data[:, 2])


def write_spectral_csv(path, F: SpectralFunction) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,re,im\n")
        for ki, vi in zip(F.k_grid, F.values):
            fh.write(f"{float(ki)!r},{float(vi.real)!r},{float(vi.imag)!r}\n")
