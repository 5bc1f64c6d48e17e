"""Uniform quadratic B-spline system with Marsden-identity weights.

The system carries the order-3 (piecewise-quadratic) B-splines N_i on the
uniform knots nu/n, together with the knot polynomials
phi_i(y) = (y - y_{i+1})(y - y_{i+2}) that reproduce (y - x)^2 exactly, and
their nonnegative clips psi_i (phi zeroed on its sign-changing interval).
The clipped sum approximates (y - x)^2 from above with defect at most
1/(4 n^2), which is what bounds the measure excess downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_ORDER_PARAM = 4

# Basis indices run i = FIRST_INDEX .. n; the three extra left-boundary
# splines are required for exact polynomial reproduction on [0, 1].
FIRST_INDEX = -2


@dataclass(frozen=True)
class SplineSystem:
    """Immutable quadratic B-spline basis on knots nu/n, nu = -2 .. n+3."""

    n: int
    knots: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.n < MIN_ORDER_PARAM:
            raise ValueError(f"order parameter n must be >= {MIN_ORDER_PARAM}, got {self.n}")
        knots = np.arange(FIRST_INDEX, self.n + 4, dtype=float) / self.n
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @property
    def index_range(self) -> range:
        """Basis indices i = -2 .. n (n + 3 functions)."""
        return range(FIRST_INDEX, self.n + 1)

    @property
    def basis_count(self) -> int:
        return self.n + 3

    def knot(self, nu: int) -> float:
        """Knot y_nu = nu / n for nu = -2 .. n+3."""
        if not FIRST_INDEX <= nu <= self.n + 3:
            raise ValueError(f"knot index {nu} outside [-2, {self.n + 3}]")
        return float(self.knots[nu - FIRST_INDEX])

    def _check_index(self, i: int) -> None:
        if not FIRST_INDEX <= i <= self.n:
            raise ValueError(f"basis index {i} outside [{FIRST_INDEX}, {self.n}]")


def build_spline_system(n: int) -> SplineSystem:
    """Build the quadratic spline system for integer n >= 4."""
    return SplineSystem(int(n))


def basis_matrix(sys: SplineSystem, x) -> np.ndarray:
    """All basis values N_i(x): shape (n + 3, len(x)), row j holds i = j - 2.

    Bottom-up Cox-de Boor recursion over the whole knot vector.  Supports are
    half-open [y_i, y_{i+3}); at x = 1 the extended knots make the recursion
    close the basis from the right without special-casing.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    knots = sys.knots
    left = knots[:-1, None]
    right = knots[1:, None]
    b = ((left <= x) & (x < right)).astype(float)
    for order in (2, 3):
        m = b.shape[0] - 1
        t_i = knots[:m, None]
        t_i1 = knots[1 : 1 + m, None]
        t_deg = knots[order - 1 : order - 1 + m, None]
        t_end = knots[order : order + m, None]
        b = (x - t_i) / (t_deg - t_i) * b[:m] + (t_end - x) / (t_end - t_i1) * b[1 : 1 + m]
    return b


def basis_value(sys: SplineSystem, i: int, x: float) -> float:
    """N_i(x) for a single index; zero outside [y_i, y_{i+3})."""
    sys._check_index(i)
    return float(basis_matrix(sys, x)[i - FIRST_INDEX, 0])


def marsden_weight_matrix(sys: SplineSystem, y) -> np.ndarray:
    """phi_i(y) = (y - y_{i+1})(y - y_{i+2}) for all i: shape (n + 3, len(y))."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = sys.n
    y1 = sys.knots[1 : n + 4, None]  # y_{i+1} for i = -2 .. n
    y2 = sys.knots[2 : n + 5, None]  # y_{i+2}
    return (y - y1) * (y - y2)


def marsden_weight(sys: SplineSystem, i: int, y: float) -> float:
    """Knot polynomial phi_i(y), exact quadratic in y."""
    sys._check_index(i)
    return float((y - sys.knot(i + 1)) * (y - sys.knot(i + 2)))


def _check_unit_interval(name: str, value: np.ndarray) -> None:
    if np.any(value < 0.0) or np.any(value > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")


def clipped_weight_matrix(sys: SplineSystem, y) -> np.ndarray:
    """psi_i(y): phi_i with the closed interval [y_{i+1}, y_{i+2}] zeroed.

    On that interval phi is the only negative lobe and |phi| <= 1/(4 n^2),
    so clipping keeps every weight in [0, 2] for y in [0, 1].
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _check_unit_interval("y", y)
    n = sys.n
    y1 = sys.knots[1 : n + 4, None]
    y2 = sys.knots[2 : n + 5, None]
    phi = (y - y1) * (y - y2)
    return np.where((y >= y1) & (y <= y2), 0.0, phi)


def clipped_weight(sys: SplineSystem, i: int, y: float) -> float:
    """psi_i(y) for a single index; y restricted to [0, 1]."""
    sys._check_index(i)
    yv = float(y)
    _check_unit_interval("y", np.asarray(yv))
    if sys.knot(i + 1) <= yv <= sys.knot(i + 2):
        return 0.0
    return marsden_weight(sys, i, yv)


def approx_squared_diff(sys: SplineSystem, x: float, y: float) -> float:
    """S(x, y) = sum_i psi_i(y) N_i(x); satisfies 0 <= S - (y-x)^2 <= 1/(4 n^2)."""
    xv = np.asarray(float(x))
    yv = np.asarray(float(y))
    _check_unit_interval("x", xv)
    _check_unit_interval("y", yv)
    return float(clipped_weight_matrix(sys, yv)[:, 0] @ basis_matrix(sys, xv)[:, 0])


def approx_squared_diff_grid(sys: SplineSystem, xs, ys) -> np.ndarray:
    """S(x, y) on a grid: shape (len(ys), len(xs))."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    _check_unit_interval("x", xs)
    _check_unit_interval("y", ys)
    return clipped_weight_matrix(sys, ys).T @ basis_matrix(sys, xs)


def squared_diff_defect_bound(sys: SplineSystem) -> float:
    """Upper bound 1/(4 n^2) on S(x, y) - (y - x)^2 over the unit square."""
    return 0.25 / (sys.n * sys.n)
