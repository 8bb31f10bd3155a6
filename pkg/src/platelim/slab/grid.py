"""Uniform grid on the rescaled slab S x (-1/2, 1/2) and deformation fields.

The slab is stored at unit thickness; the physical thickness ``h`` and the
energy-scaling exponent ``beta`` ride along with the grid.  Vertical
stations are built exactly antisymmetric about the mid-surface so that odd
moments in the thickness direction cancel exactly in floating point (see
``fold_vertical``).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

CLAMP_CHOICES = ("full", "left", "right", "bottom", "top")


@dataclass(frozen=True)
class SlabGrid:
    """Geometry, resolution, thickness and scaling regime of the slab.

    Parameters
    ----------
    length1, length2 : float
        Side lengths of the mid-surface S = [0, L1] x [0, L2].
    n1, n2, n3 : int
        Node counts per direction (n1, n2 >= 4; n3 >= 2); the vertical
        coordinate spans [-1/2, 1/2].
    h : float
        Dimensionless thickness, 0 < h < 1.
    beta : float
        Energy-scaling exponent, >= 4; the load scales as h^alpha with
        alpha = (beta + 2)/2.
    clamp : str
        Which part of the lateral boundary is clamped: ``full`` or one of
        ``left``/``right`` (x1 = 0 / L1), ``bottom``/``top`` (x2 = 0 / L2).
    """

    length1: float = 1.0
    length2: float = 1.0
    n1: int = 17
    n2: int = 17
    n3: int = 4
    h: float = 0.25
    beta: float = 4.0
    clamp: str = "full"

    def __post_init__(self):
        if self.length1 <= 0.0 or self.length2 <= 0.0:
            raise ValueError("side lengths must be positive")
        if self.n1 < 4 or self.n2 < 4:
            raise ValueError("in-plane node counts must be at least 4")
        if self.n3 < 2:
            raise ValueError("vertical node count must be at least 2")
        if not 0.0 < self.h < 1.0:
            raise ValueError("thickness h must lie in (0, 1)")
        if self.beta < 4.0:
            raise ValueError("scaling exponent beta must be >= 4")
        if self.clamp not in CLAMP_CHOICES:
            raise ValueError(f"clamp must be one of {CLAMP_CHOICES}")

    @property
    def alpha(self) -> float:
        return 0.5 * (self.beta + 2.0)

    @cached_property
    def x1(self) -> np.ndarray:
        return np.linspace(0.0, self.length1, self.n1)

    @cached_property
    def x2(self) -> np.ndarray:
        return np.linspace(0.0, self.length2, self.n2)

    @cached_property
    def x3(self) -> np.ndarray:
        # (i - m) and (m - i) are exact floats, so x3 is exactly antisymmetric
        m = 0.5 * (self.n3 - 1)
        return (np.arange(self.n3) - m) / (self.n3 - 1)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.length1 / (self.n1 - 1),
                self.length2 / (self.n2 - 1),
                1.0 / (self.n3 - 1))

    @property
    def cell_volume(self) -> float:
        d1, d2, d3 = self.spacing
        return d1 * d2 * d3

    @property
    def cell_shape(self) -> tuple[int, int, int]:
        return (self.n1 - 1, self.n2 - 1, self.n3 - 1)

    @property
    def node_count(self) -> int:
        return self.n1 * self.n2 * self.n3

    @cached_property
    def clamped_plane_mask(self) -> np.ndarray:
        """Boolean (n1, n2) mask of clamped mid-surface nodes."""
        mask = np.zeros((self.n1, self.n2), dtype=bool)
        if self.clamp in ("full", "left"):
            mask[0, :] = True
        if self.clamp in ("full", "right"):
            mask[-1, :] = True
        if self.clamp in ("full", "bottom"):
            mask[:, 0] = True
        if self.clamp in ("full", "top"):
            mask[:, -1] = True
        return mask

    @cached_property
    def clamped_node_mask(self) -> np.ndarray:
        """Boolean (n1, n2, n3) mask of clamped slab nodes."""
        return np.broadcast_to(self.clamped_plane_mask[:, :, None],
                               (self.n1, self.n2, self.n3)).copy()

    @cached_property
    def free_dof_indices(self) -> np.ndarray:
        """Flat indices of unconstrained displacement dofs (3 per free node)."""
        free_nodes = ~self.clamped_node_mask.reshape(-1)
        return np.flatnonzero(np.repeat(free_nodes, 3))

    def metadata(self) -> dict:
        return {
            "length1": self.length1, "length2": self.length2,
            "n1": self.n1, "n2": self.n2, "n3": self.n3,
            "h": self.h, "beta": self.beta, "clamp": self.clamp,
        }

    @classmethod
    def from_metadata(cls, meta: dict) -> "SlabGrid":
        return cls(**{k: meta[k] for k in
                      ("length1", "length2", "n1", "n2", "n3", "h", "beta", "clamp")})


def rest_state(grid: SlabGrid) -> np.ndarray:
    """The clamped reference deformation y = (x', h x3) as (n1, n2, n3, 3)."""
    y = np.empty((grid.n1, grid.n2, grid.n3, 3))
    y[..., 0] = grid.x1[:, None, None]
    y[..., 1] = grid.x2[None, :, None]
    y[..., 2] = grid.h * grid.x3[None, None, :]
    return y


def clamp_values_ok(y: np.ndarray, grid: SlabGrid) -> bool:
    """True when the clamped nodes carry exactly the reference values."""
    rest = rest_state(grid)
    mask = grid.clamped_node_mask
    return bool(np.all(y[mask] == rest[mask]))


@dataclass(frozen=True)
class DeformationField3:
    """Nodal deformation y on a slab grid; clamped values held exactly."""

    grid: SlabGrid
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        expected = (self.grid.n1, self.grid.n2, self.grid.n3, 3)
        if y.shape != expected:
            raise ValueError(f"deformation shape {y.shape} != {expected}")
        if not clamp_values_ok(y, self.grid):
            raise ValueError("clamped nodes must carry the reference values exactly")
        object.__setattr__(self, "y", y)

    def displacement(self) -> np.ndarray:
        return self.y - rest_state(self.grid)


def fold_vertical(values: np.ndarray, weights: np.ndarray, axis: int = -1) -> np.ndarray:
    """Weighted sum along a vertical axis, pairing symmetric stations first.

    With exactly antisymmetric data and symmetric weights the pairs cancel
    exactly, so odd moments of the rest state come out as exact zeros.
    """
    values = np.moveaxis(np.asarray(values), axis, -1)
    n = values.shape[-1]
    total = np.zeros(values.shape[:-1])
    for k in range(n // 2):
        total = total + (weights[k] * values[..., k] + weights[n - 1 - k] * values[..., n - 1 - k])
    if n % 2 == 1:
        mid = n // 2
        total = total + weights[mid] * values[..., mid]
    return total


def trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n, spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def save_deformation(field: DeformationField3, path: str | Path, fmt: str = "csv") -> list[Path]:
    """Write a deformation as CSV (node index, coordinates, y) or .npy,
    plus a JSON sidecar with the grid metadata."""
    path = Path(path)
    grid = field.grid
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = {"grid": grid.metadata(), "format": fmt}
    written = []
    if fmt == "csv":
        X1, X2, X3 = np.meshgrid(grid.x1, grid.x2, grid.x3, indexing="ij")
        flat_y = field.y.reshape(-1, 3)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "x1", "x2", "x3", "y1", "y2", "y3"])
            coords = np.stack([X1.ravel(), X2.ravel(), X3.ravel()], axis=1)
            for idx in range(flat_y.shape[0]):
                writer.writerow([idx, *(repr(c) for c in coords[idx]),
                                 *(repr(v) for v in flat_y[idx])])
        written.append(path)
    elif fmt == "npy":
        np.save(path.with_suffix(".npy"), field.y)
        written.append(path.with_suffix(".npy"))
        meta["array"] = path.with_suffix(".npy").name
    else:
        raise ValueError(f"unknown deformation format {fmt!r}")
    sidecar.write_text(json.dumps(meta, indent=2))
    written.append(sidecar)
    return written


def load_deformation(path: str | Path) -> DeformationField3:
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = json.loads(sidecar.read_text())
    grid = SlabGrid.from_metadata(meta["grid"])
    if meta["format"] == "npy":
        y = np.load(path.parent / meta["array"])
    else:
        y = np.empty((grid.node_count, 3))
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                y[int(row[0])] = [float(row[4]), float(row[5]), float(row[6])]
        y = y.reshape(grid.n1, grid.n2, grid.n3, 3)
    return DeformationField3(grid, y)
