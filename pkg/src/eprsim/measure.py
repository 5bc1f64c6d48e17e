"""First-layer measure on the diagonal cells, detector functions, and factors.

The measure for a setting pair (a, b) puts constant mass on unit squares
lined up along the main diagonal of Omega.  Three negative-axis cells carry
|a_k||b_k| and reproduce the spin correlation -a.b exactly; the positive
cells carry the spline products N_i(|a_k|) * psi_i(|b_k|) / 2 whose total is
sum_k (|a_k|-|b_k|)^2 / 2 up to the clipping defect, so the total mass lands
in [1, 1 + 1/(4 n^2)).

Cell layout along the diagonal (cell index i labels the square [i-1, i)^2):

  i = -2, -1, 0        component k = 1 - i, mass |a_k||b_k|
  i = 1 .. 3n          component ceil(i/n), spline index 1 .. n
  i = 3n+1 .. 3n+9     boundary spline indices -2, -1, 0 per component

The nine trailing cells hold the left-boundary splines that the exact
polynomial reproduction needs; without them the positive mass would fall
short whenever a component is below 3/n.  Omega is [-3, 3n+9)^2 accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .splines import (
    SplineSystem,
    basis_matrix,
    build_spline_system,
    clipped_weight_matrix,
)

SETTING_NORM_TOL = 1e-9


def as_setting(v, normalize: bool = False, tol: float = SETTING_NORM_TOL) -> np.ndarray:
    """Validate a measurement setting as a unit vector in R^3.

    Rejects vectors whose norm deviates from 1 by more than `tol` unless
    `normalize` is requested; the returned array is always renormalized to
    unit length and read-only.
    """
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"setting must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("setting components must be finite")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("setting must be a nonzero vector")
    if not normalize and abs(norm - 1.0) > tol:
        raise ValueError(f"setting norm {norm!r} deviates from 1 by more than {tol}")
    out = arr / norm
    out.setflags(write=False)
    return out


def setting_from_angle(theta_degrees: float) -> np.ndarray:
    """Coplanar setting (cos t, sin t, 0) for an angle in degrees."""
    t = np.deg2rad(float(theta_degrees))
    return as_setting([np.cos(t), np.sin(t), 0.0], normalize=True)


def validate_weights(p) -> np.ndarray:
    """Validate interval weights: nonnegative, summing to 1 within 1e-12."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.size < 1:
        raise ValueError("weight vector must have at least one entry")
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("weights must be finite and nonnegative")
    if abs(float(arr.sum()) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {arr.sum()!r}")
    out = arr.copy()
    out.setflags(write=False)
    return out


def _sign(x: float) -> float:
    # sign(0) = +1 throughout the construction
    return 1.0 if x >= 0.0 else -1.0


def detector_a(a, u):
    """Station-1 detector A_a(u): sign(a_k) on [-k, -k+1); -1/+1 half-cell
    alternation on [j, j+1) for j >= 0; +1 elsewhere.  Vectorized over u."""
    a = np.asarray(a, dtype=float)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.ones_like(u_arr)
    neg = (u_arr >= -3.0) & (u_arr < 0.0)
    k = (-np.floor(u_arr[neg])).astype(int)  # 1, 2, 3
    out[neg] = np.where(a[k - 1] >= 0.0, 1.0, -1.0)
    pos = u_arr >= 0.0
    out[pos] = np.where(u_arr[pos] - np.floor(u_arr[pos]) < 0.5, -1.0, 1.0)
    return out if np.ndim(u) else float(out[0])


def detector_b(b, v):
    """Station-2 detector B_b(v) = -A_b(v) pointwise."""
    b = np.asarray(b, dtype=float)
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    out = -np.ones_like(v_arr)
    neg = (v_arr >= -3.0) & (v_arr < 0.0)
    k = (-np.floor(v_arr[neg])).astype(int)
    out[neg] = np.where(b[k - 1] >= 0.0, -1.0, 1.0)
    pos = v_arr >= 0.0
    out[pos] = np.where(v_arr[pos] - np.floor(v_arr[pos]) < 0.5, 1.0, -1.0)
    return out if np.ndim(v) else float(out[0])


def step_sign(w: float, interval_count: int) -> float:
    """Alternating sign step s(w) = (-1)^l on [(l-1)/L, l/L), l = 1 .. L."""
    if interval_count < 1:
        raise ValueError("interval count must be >= 1")
    wv = float(w)
    if not 0.0 <= wv < 1.0:
        raise ValueError(f"w must lie in [0, 1), got {wv}")
    ell = int(wv * interval_count) + 1
    return -1.0 if ell % 2 else 1.0


def step_weight(w: float, weights) -> float:
    """Weight lookup q(w) = p_l on [(l-1)/L, l/L)."""
    p = np.asarray(weights, dtype=float)
    wv = float(w)
    if not 0.0 <= wv < 1.0:
        raise ValueError(f"w must lie in [0, 1), got {wv}")
    return float(p[int(wv * p.size)])


def diagonal_cell_count(n: int) -> int:
    """Number of diagonal cells: 3 negative + 3n main + 9 boundary."""
    return 3 * n + 12


def cell_component_and_index(n: int, i: int) -> tuple[int, int]:
    """Map a positive diagonal cell i >= 1 to (component 0..2, spline index)."""
    if 1 <= i <= 3 * n:
        comp = (i - 1) // n
        return comp, i - comp * n
    if 3 * n < i <= 3 * n + 9:
        e = i - 3 * n - 1  # 0 .. 8
        return e // 3, (e % 3) - 2
    raise ValueError(f"cell index {i} is not a positive diagonal cell for n={n}")


def _cell_mass_vector(sys: SplineSystem, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Masses of all diagonal cells, position p <-> cell index i = p - 2."""
    n = sys.n
    absa = np.abs(a)
    absb = np.abs(b)
    na = basis_matrix(sys, absa)  # (n+3, 3): rows i=-2..n, cols components
    pb = clipped_weight_matrix(sys, absb)
    masses = np.empty(diagonal_cell_count(n))
    # cells i = -2, -1, 0 hold components k = 3, 2, 1
    masses[0:3] = (absa * absb)[::-1]
    for comp in range(3):
        block = 0.5 * na[:, comp] * pb[:, comp]  # indices i = -2 .. n
        # main cells carry i = 1 .. n, boundary cells carry i = -2 .. 0
        masses[3 + comp * n : 3 + (comp + 1) * n] = block[3:]
        masses[3 + 3 * n + comp * 3 : 3 + 3 * n + (comp + 1) * 3] = block[:3]
    return masses


@dataclass(frozen=True)
class BaseMeasure:
    """First-layer measure: settings, spline system, and diagonal cell masses."""

    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    system: SplineSystem
    cell_masses: np.ndarray = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def domain_high(self) -> float:
        """Omega = [-3, domain_high)^2."""
        return float(3 * self.n + 9)

    def cell_mass(self, i: int) -> float:
        """Mass of diagonal cell [i-1, i)^2, i = -2 .. 3n+9."""
        if not -2 <= i <= 3 * self.n + 9:
            raise ValueError(f"cell index {i} outside [-2, {3 * self.n + 9}]")
        return float(self.cell_masses[i + 2])


def build_measure(a, b, n: int, normalize_settings: bool = False) -> BaseMeasure:
    """Construct the first-layer measure for unit settings a, b and n >= 4."""
    a = as_setting(a, normalize=normalize_settings)
    b = as_setting(b, normalize=normalize_settings)
    sys = build_spline_system(n)
    masses = _cell_mass_vector(sys, a, b)
    masses.setflags(write=False)
    return BaseMeasure(a=a, b=b, system=sys, cell_masses=masses)


def diagonal_indicator(u: float, v: float, n: int) -> int:
    """kappa(u, v): 1 iff (u, v) lies in a diagonal cell [i-1, i)^2 of Omega."""
    uf, vf = float(u), float(v)
    hi = 3 * n + 9
    if not (-3.0 <= uf < hi and -3.0 <= vf < hi):
        return 0
    return 1 if np.floor(uf) == np.floor(vf) else 0


def column_weight(mu: BaseMeasure, u: float) -> float:
    """First density factor sigma(u): depends on the setting a only."""
    uf = float(u)
    if uf < -3.0 or uf >= mu.domain_high:
        return 0.0
    i = int(np.floor(uf)) + 1  # cell index of the column strip
    if i <= 0:
        return float(abs(mu.a[-i]))  # k = 1 - i, component index k-1 = -i
    comp, s = cell_component_and_index(mu.n, i)
    return float(basis_matrix(mu.system, abs(mu.a[comp]))[s + 2, 0])


def row_weight(mu: BaseMeasure, v: float) -> float:
    """Second density factor tau(v): depends on the setting b only."""
    vf = float(v)
    if vf < -3.0 or vf >= mu.domain_high:
        return 0.0
    i = int(np.floor(vf)) + 1
    if i <= 0:
        return float(abs(mu.b[-i]))
    comp, s = cell_component_and_index(mu.n, i)
    return float(0.5 * clipped_weight_matrix(mu.system, abs(mu.b[comp]))[s + 2, 0])


def density(mu: BaseMeasure, u: float, v: float) -> float:
    """Joint density sigma(u) tau(v) kappa(u, v); constant on each cell."""
    if not diagonal_indicator(u, v, mu.n):
        return 0.0
    return column_weight(mu, u) * row_weight(mu, v)


def total_mass(mu: BaseMeasure) -> float:
    """Exact total mass: sum of all diagonal cell masses."""
    return float(mu.cell_masses.sum())


def theta_hat(mu: BaseMeasure) -> float:
    """Excess over unit mass in units of n^-2 (should sit in [0, 1/4))."""
    return (total_mass(mu) - 1.0) * mu.n * mu.n


def cell_pair_integral(mu: BaseMeasure, i: int) -> float:
    """Exact integral of A B d(mass) over diagonal cell i.

    The density is constant on the cell, and A (resp. B) is constant on each
    half of the cell's column (row), so the integral is a finite product.
    Positive cells vanish because A averages to zero over a unit interval.
    """
    mass = mu.cell_mass(i)
    if i <= 0:
        k = 1 - i
        a_avg = _sign(mu.a[k - 1])
        b_avg = -_sign(mu.b[k - 1])
    else:
        a_avg = 0.5 * (-1.0 + 1.0)
        b_avg = 0.5 * (1.0 - 1.0)
    return a_avg * b_avg * mass


def pair_integral(mu: BaseMeasure) -> float:
    """Integral of A_a(u) B_b(v) against the measure over Omega: equals -a.b."""
    return float(sum(cell_pair_integral(mu, i) for i in range(-2, 3 * mu.n + 10)))


@dataclass(frozen=True)
class GapVariantMass:
    """Mass accounting for the squared-gap variant measure.

    Replaces the spline cells by three cells on [0, 3)^2 carrying
    (|a_k| - |b_k|)^2.  As defined the total is 2 - sum |a_k||b_k|, which is
    unity only for componentwise-equal settings; `is_unit_mass` flags that.
    """

    m1: float
    m2: float
    cell_masses: np.ndarray = field(repr=False, compare=False)

    @property
    def total(self) -> float:
        return self.m1 + self.m2

    @property
    def is_unit_mass(self) -> bool:
        return abs(self.total - 1.0) <= 1e-12


def gap_variant(a, b, normalize_settings: bool = False) -> GapVariantMass:
    """Mass breakdown of the variant measure on Omega = [-3, 3)^2.

    Negative cells keep |a_k||b_k|; cells [k-1, k)^2, k = 1, 2, 3 carry
    (|a_k| - |b_k|)^2.  The pair integral is unchanged (-a.b) because the
    positive cells still integrate A and B to zero.
    """
    a = as_setting(a, normalize=normalize_settings)
    b = as_setting(b, normalize=normalize_settings)
    absa, absb = np.abs(a), np.abs(b)
    gaps = (absa - absb) ** 2
    cells = np.concatenate([(absa * absb)[::-1], gaps])
    cells.setflags(write=False)
    return GapVariantMass(m1=float(np.sum(absa * absb)), m2=float(gaps.sum()), cell_masses=cells)
