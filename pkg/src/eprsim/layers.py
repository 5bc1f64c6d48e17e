"""Randomized permuted layers with sign-flipped companions.

A layer relocates every diagonal unit ensemble (cell mass plus the detector
strips of its column and row) to a new position: one permutation of the
column strips and an independent permutation of the row strips.  Because
each column and each row of the base layer holds exactly one mass-carrying
ensemble, restricting placements to one ensemble per row and column makes a
layer exactly a pair of permutations, and every relocation preserves both
the factored density form and the per-layer correlation integral.

Each layer comes with a companion carrying the identical density but negated
detector functions; summed over a companion pair the outcome functions
cancel pointwise, which is what removes any conditional outcome bias.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .measure import BaseMeasure, _sign, step_weight, validate_weights

UNIVERSE_SCHEMA = "layer-universe/1"


def layer_count(n: int) -> int:
    """Published count of distinct layer arrangements, one half of the label
    range: 36 * C(3n+3, 3)^2 * C(9n^2, 3n) * (3n)!  (exact integer)."""
    if n < 4:
        raise ValueError(f"order parameter n must be >= 4, got {n}")
    return (
        36
        * math.comb(3 * n + 3, 3) ** 2
        * math.comb(9 * n * n, 3 * n)
        * math.factorial(3 * n)
    )


@dataclass(frozen=True)
class Layer:
    """One permuted arrangement: ensemble -> (column, row) relocation.

    `col_to[p]` / `row_to[p]` give the new column/row *position* of the
    ensemble at diagonal position p (position = cell index + 2); both arrays
    are permutations of 0 .. 3n+11.  `sign` is +1 for an original layer and
    -1 for its companion, which shares the relocation and weights.
    """

    n: int
    col_to: np.ndarray = field(repr=False, compare=False)
    row_to: np.ndarray = field(repr=False, compare=False)
    weights: np.ndarray = field(repr=False, compare=False)
    sign: int = 1

    def __post_init__(self):
        size = 3 * self.n + 12
        for name in ("col_to", "row_to"):
            perm = np.asarray(getattr(self, name), dtype=np.int64)
            if sorted(perm.tolist()) != list(range(size)):
                raise ValueError(f"{name} must be a permutation of 0..{size - 1}")
            perm.setflags(write=False)
            object.__setattr__(self, name, perm)
        object.__setattr__(self, "weights", validate_weights(self.weights))
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    @property
    def cell_count(self) -> int:
        return 3 * self.n + 12

    @property
    def interval_count(self) -> int:
        return int(self.weights.size)

    def col_inverse(self) -> np.ndarray:
        inv = np.empty_like(self.col_to)
        inv[self.col_to] = np.arange(self.col_to.size)
        return inv

    def row_inverse(self) -> np.ndarray:
        inv = np.empty_like(self.row_to)
        inv[self.row_to] = np.arange(self.row_to.size)
        return inv

    # descriptive views of the relocation ------------------------------------
    def unit_ensemble_columns(self) -> tuple[int, ...]:
        """Cell indices of the three columns receiving the unit ensembles."""
        return tuple(int(c) - 2 for c in self.col_to[:3])

    def unit_ensemble_rows(self) -> tuple[int, ...]:
        return tuple(int(r) - 2 for r in self.row_to[:3])

    def companion(self) -> "Layer":
        return Layer(self.n, self.col_to, self.row_to, self.weights, -self.sign)

    @classmethod
    def identity(cls, n: int, weights, sign: int = 1) -> "Layer":
        size = 3 * n + 12
        eye = np.arange(size)
        return cls(n, eye, eye, np.asarray(weights, dtype=float), sign)


def sample_layer_pair(
    n: int,
    interval_count: int,
    rng: np.random.Generator,
    tie_weights: bool = False,
    tie_vector=None,
) -> tuple[Layer, Layer]:
    """Uniformly sample one layer and its companion.

    Columns and rows are relocated by independent uniform permutations, which
    is the uniform law over all placements with one mass ensemble per row and
    column.  Weights come from a symmetric Dirichlet(1) prior unless
    `tie_weights` pins them to a layer-independent vector (uniform by
    default, or `tie_vector`).
    """
    if n < 4:
        raise ValueError(f"order parameter n must be >= 4, got {n}")
    if interval_count < 1:
        raise ValueError("interval count must be >= 1")
    size = 3 * n + 12
    col = rng.permutation(size)
    row = rng.permutation(size)
    if tie_weights:
        if tie_vector is None:
            weights = np.full(interval_count, 1.0 / interval_count)
        else:
            weights = validate_weights(tie_vector)
    else:
        weights = rng.dirichlet(np.ones(interval_count))
        weights = weights / weights.sum()
    original = Layer(n, col, row, weights, sign=1)
    return original, original.companion()


@dataclass(frozen=True)
class LayerUniverse:
    """A finite sampled family of companion layer pairs.

    Labels m = 1 .. 2M: odd labels are originals, even labels their
    companions.  The cached arrays stack the per-label relocations for
    vectorized sampling and analysis.
    """

    n: int
    interval_count: int
    layers: tuple[Layer, ...]
    col_to_all: np.ndarray = field(repr=False, compare=False, default=None)
    row_to_all: np.ndarray = field(repr=False, compare=False, default=None)
    weights_all: np.ndarray = field(repr=False, compare=False, default=None)
    signs: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if not self.layers or len(self.layers) % 2:
            raise ValueError("universe needs a positive even number of layers")
        stacks = {
            "col_to_all": np.stack([lay.col_to for lay in self.layers]),
            "row_to_all": np.stack([lay.row_to for lay in self.layers]),
            "weights_all": np.stack([lay.weights for lay in self.layers]),
            "signs": np.array([lay.sign for lay in self.layers], dtype=np.int64),
        }
        for name, arr in stacks.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def label_count(self) -> int:
        return len(self.layers)

    @property
    def pair_count(self) -> int:
        return len(self.layers) // 2

    def layer(self, m: int) -> Layer:
        """Layer for label m = 1 .. 2M."""
        if not 1 <= m <= self.label_count:
            raise ValueError(f"label {m} outside 1..{self.label_count}")
        return self.layers[m - 1]


def build_universe(
    n: int,
    interval_count: int,
    pair_count: int,
    rng: np.random.Generator,
    tie_weights: bool = False,
    tie_vector=None,
) -> LayerUniverse:
    """Sample `pair_count` companion pairs into a universe of 2M labels."""
    if pair_count < 1:
        raise ValueError("pair count must be >= 1")
    layers: list[Layer] = []
    for _ in range(pair_count):
        layers.extend(sample_layer_pair(n, interval_count, rng, tie_weights, tie_vector))
    return LayerUniverse(n=n, interval_count=interval_count, layers=tuple(layers))


# --- evaluation ---------------------------------------------------------------


_OUTSIDE = -1000


def _origin_cells(perm_inverse: np.ndarray, coords: np.ndarray, size: int, outside_base: bool):
    """Original cell index (i = -2 .. 3n+9) whose strip covers each coordinate.

    Outside Omega there is nothing to permute: with `outside_base` the
    coordinate's own cell index is returned so the base detector profile
    continues unchanged; otherwise the sentinel marks zero density.
    """
    cell = np.floor(coords).astype(np.int64) + 1
    inside = (coords >= -3.0) & (coords < size - 3.0)
    fallback = cell if outside_base else np.full(coords.shape, _OUTSIDE, dtype=np.int64)
    origin = fallback.copy()
    origin[inside] = perm_inverse[cell[inside] + 2] - 2
    return origin


def _column_origin(layer: Layer, u, outside_base: bool = False) -> np.ndarray:
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    return _origin_cells(layer.col_inverse(), u_arr, layer.cell_count, outside_base)


def _row_origin(layer: Layer, v, outside_base: bool = False) -> np.ndarray:
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    return _origin_cells(layer.row_inverse(), v_arr, layer.cell_count, outside_base)


def _base_a_profile(a: np.ndarray, origin: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """A value from an original column index and the within-cell offset."""
    out = np.ones(origin.shape)
    neg = (origin >= -2) & (origin <= 0)
    comp = -origin[neg]  # component index k - 1
    out[neg] = np.where(a[comp] >= 0.0, 1.0, -1.0)
    pos = origin >= 1
    out[pos] = np.where(offset[pos] < 0.5, -1.0, 1.0)
    return out


def _base_b_profile(b: np.ndarray, origin: np.ndarray, offset: np.ndarray) -> np.ndarray:
    out = -np.ones(origin.shape)
    neg = (origin >= -2) & (origin <= 0)
    comp = -origin[neg]
    out[neg] = np.where(b[comp] >= 0.0, -1.0, 1.0)
    pos = origin >= 1
    out[pos] = np.where(offset[pos] < 0.5, 1.0, -1.0)
    return out


def _step_signs(w, interval_count: int) -> np.ndarray:
    w_arr = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(w_arr < 0.0) or np.any(w_arr >= 1.0):
        raise ValueError("w must lie in [0, 1)")
    ell = (w_arr * interval_count).astype(np.int64) + 1
    return np.where(ell % 2 == 1, -1.0, 1.0)


def layer_spin_a(layer: Layer, a, u, w):
    """Spin outcome on this layer: sign * A(relocated u) * s(w).  Total in u."""
    a = np.asarray(a, dtype=float)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    origin = _column_origin(layer, u_arr, outside_base=True)
    offset = u_arr - np.floor(u_arr)
    out = layer.sign * _base_a_profile(a, origin, offset) * _step_signs(w, layer.interval_count)
    return out if np.ndim(u) else float(out[0])


def layer_spin_b(layer: Layer, b, v, w):
    """Spin outcome at the second station: sign * B(relocated v) * s(w)."""
    b = np.asarray(b, dtype=float)
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    origin = _row_origin(layer, v_arr, outside_base=True)
    offset = v_arr - np.floor(v_arr)
    out = layer.sign * _base_b_profile(b, origin, offset) * _step_signs(w, layer.interval_count)
    return out if np.ndim(v) else float(out[0])


def layer_density(layer: Layer, mu: BaseMeasure, u: float, v: float, w: float) -> float:
    """Permuted product density sigma tau kappa q at a point; 0 off-support."""
    if layer.n != mu.n:
        raise ValueError("layer and measure use different n")
    wf = float(w)
    if not 0.0 <= wf < 1.0:
        raise ValueError("w must lie in [0, 1)")
    ou = int(_column_origin(layer, u)[0])
    ov = int(_row_origin(layer, v)[0])
    if ou == _OUTSIDE or ov == _OUTSIDE or ou != ov:
        return 0.0
    return mu.cell_mass(ou) * step_weight(wf, layer.weights)


def layer_total_mass(layer: Layer, mu: BaseMeasure) -> float:
    """Mass after relocation; permutation only moves cells, so this equals
    the base total mass exactly (summed in original-ensemble order)."""
    return float(mu.cell_masses.sum())


def layer_pair_integral(layer: Layer, mu: BaseMeasure) -> float:
    """Exact per-layer integral of A B against the layer measure.

    On each relocated cell the density is constant and the detector values
    are constant per half-strip, so the triple integral collapses to a sum
    of products; the w factor contributes sum_l p_l * s_l^2 = 1.
    """
    a_avg = np.zeros(layer.cell_count)
    b_avg = np.zeros(layer.cell_count)
    a_avg[0:3] = [_sign(mu.a[2]), _sign(mu.a[1]), _sign(mu.a[0])]
    b_avg[0:3] = [-_sign(mu.b[2]), -_sign(mu.b[1]), -_sign(mu.b[0])]
    w_factor = float(layer.weights.sum())  # sum_l p_l * s_l^2 with s^2 == 1
    sign_sq = layer.sign * layer.sign  # both outcomes carry the layer sign
    return float((mu.cell_masses * a_avg * b_avg).sum() * sign_sq * w_factor)


def joint_density(
    universe: LayerUniverse, mu: BaseMeasure, u: float, v: float, w: float, m: int
) -> float:
    """Joint density of (station-1, station-2, source, label) at one point.

    Per-layer densities are normalized by the base total mass before mixing
    so the whole object is an exact probability law on cells x intervals x
    labels.
    """
    lay = universe.layer(m)
    mass = float(mu.cell_masses.sum())
    return layer_density(lay, mu, u, v, w) / mass / universe.label_count


# --- serialization -------------------------------------------------------------


def universe_to_dict(universe: LayerUniverse) -> dict:
    pairs = []
    for k in range(universe.pair_count):
        lay = universe.layers[2 * k]
        pairs.append(
            {
                "columns": (lay.col_to - 2).tolist(),
                "rows": (lay.row_to - 2).tolist(),
                "weights": lay.weights.tolist(),
            }
        )
    return {
        "schema": UNIVERSE_SCHEMA,
        "n": universe.n,
        "interval_count": universe.interval_count,
        "pairs": pairs,
    }


def universe_from_dict(doc: dict) -> LayerUniverse:
    schema = doc.get("schema")
    if schema != UNIVERSE_SCHEMA:
        raise ValueError(
            f"unsupported universe schema {schema!r}; this build reads {UNIVERSE_SCHEMA!r}"
        )
    n = int(doc["n"])
    interval_count = int(doc["interval_count"])
    layers: list[Layer] = []
    for pair in doc["pairs"]:
        col = np.asarray(pair["columns"], dtype=np.int64) + 2
        row = np.asarray(pair["rows"], dtype=np.int64) + 2
        weights = np.asarray(pair["weights"], dtype=float)
        original = Layer(n, col, row, weights, sign=1)
        layers.extend((original, original.companion()))
    return LayerUniverse(n=n, interval_count=interval_count, layers=tuple(layers))


def save_universe(universe: LayerUniverse, path) -> None:
    Path(path).write_text(json.dumps(universe_to_dict(universe), sort_keys=True))


def load_universe(path) -> LayerUniverse:
    return universe_from_dict(json.loads(Path(path).read_text()))
