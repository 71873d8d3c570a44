"""Uniform tensor-product grid carrying a density sampled at the nodes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class GridField:
    """Nonnegative node values on a square lattice ``lo + i*dx`` per axis.

    ``values`` has one array axis per space dimension, indexed ``ij``.
    """

    values: np.ndarray
    lo: tuple[float, ...]
    dx: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        self.dx = float(self.dx)
        if len(self.lo) != self.values.ndim:
            raise ValueError(f"lo has {len(self.lo)} entries for a {self.values.ndim}-d field")
        if self.dx <= 0:
            raise ValueError("grid spacing must be positive")

    @classmethod
    def zeros(cls, lo: float, hi: float, nx: int, dim: int) -> GridField:
        if hi <= lo:
            raise ValueError(f"grid bounds need lo < hi, got [{lo}, {hi}]")
        if nx < 2:
            raise ValueError("need at least two gridpoints per axis")
        dx = (hi - lo) / (nx - 1)
        return cls(np.zeros((nx,) * dim), (lo,) * dim, dx)

    @classmethod
    def from_function(cls, func, lo: float, hi: float, nx: int, dim: int, normalize: bool = False) -> GridField:
        """Sample ``func(points)`` at the nodes; ``points`` has a trailing axis of size ``dim``."""
        g = cls.zeros(lo, hi, nx, dim)
        g.values = np.asarray(func(g.points()), dtype=float).reshape(g.shape)
        if normalize:
            g.values = g.values / g.mass
        return g

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(lo + (n - 1) * self.dx for lo, n in zip(self.lo, self.shape))

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    def axis_nodes(self, axis: int) -> np.ndarray:
        return self.lo[axis] + self.dx * np.arange(self.shape[axis])

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.axis_nodes(k) for k in range(self.dim)], indexing="ij")

    def points(self) -> np.ndarray:
        """Node coordinates with shape ``(*shape, dim)``."""
        return np.stack(self.mesh(), axis=-1)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def first_moment(self) -> np.ndarray:
        return np.array([(c * self.values).sum() * self.cell_volume for c in self.mesh()])

    def mean(self) -> np.ndarray:
        return self.first_moment() / self.mass

    def energy(self) -> float:
        """Second moment ``int |x|^2/2 f``."""
        r2 = sum(c**2 for c in self.mesh())
        return float(0.5 * (r2 * self.values).sum() * self.cell_volume)

    def with_values(self, values: np.ndarray) -> GridField:
        return GridField(values, self.lo, self.dx, dict(self.meta))

    def same_grid(self, other: GridField, atol: float = 1e-12) -> bool:
        return (
            self.shape == other.shape
            and abs(self.dx - other.dx) <= atol
            and np.allclose(self.lo, other.lo, rtol=0.0, atol=atol)
        )

    def copy(self) -> GridField:
        return self.with_values(self.values.copy())
