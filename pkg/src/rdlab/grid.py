"""Cell-centred fields on an n-dimensional box with zero-flux boundaries.

Every difference operator pads with reflected ghost cells (ghost value equals
the adjacent interior value), so the discrete normal derivative vanishes on
each face and the cell sum of the Laplacian telescopes to zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

POS_TOL = 1e-12


class InvalidFieldError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    n: int
    cells: Tuple[int, ...]
    h: float

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "h", float(self.h))
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if len(cells) != self.n:
            raise ValueError(f"need {self.n} cell counts, got {len(cells)}")
        if any(c < 2 for c in cells):
            raise ValueError("every axis needs at least 2 cells")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"spacing must be positive, got {self.h}")

    @classmethod
    def box(cls, n: int, length: float, h: float) -> "DomainSpec":
        """Cube of side ``length`` (rounded to a whole number of cells)."""
        m = int(round(length / h))
        return cls(n, (m,) * n, h)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.cells

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def volume(self) -> float:
        return self.cell_volume * float(np.prod(self.cells))

    @property
    def lengths(self) -> Tuple[float, ...]:
        return tuple(c * self.h for c in self.cells)

    def coords(self) -> Tuple[np.ndarray, ...]:
        """Cell-centre coordinates, one broadcastable array per axis."""
        axes = [(np.arange(c) + 0.5) * self.h for c in self.cells]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    def index(self, *idx: int) -> Tuple[int, ...]:
        if len(idx) != self.n or any(not 0 <= i < c for i, c in zip(idx, self.cells)):
            raise IndexError(f"grid index {idx} outside {self.cells}")
        return tuple(idx)


@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.domain.shape:
            raise InvalidFieldError(f"values shape {v.shape} != domain {self.domain.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidFieldError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, domain: DomainSpec, fn) -> "ScalarField":
        vals = np.broadcast_to(fn(*domain.coords()), domain.shape)
        return cls(domain, vals)

    @classmethod
    def constant(cls, domain: DomainSpec, c: float) -> "ScalarField":
        return cls(domain, np.full(domain.shape, float(c)))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.domain, values)

    def is_density(self, tol: float = POS_TOL) -> bool:
        return bool(self.values.min() >= -tol)

    def __getitem__(self, idx):
        return self.values[self.domain.index(*idx)]


def _check_p(p: float) -> None:
    if not p >= 1:
        raise ValueError(f"exponent p must be >= 1, got {p}")


def _padded(u: np.ndarray) -> np.ndarray:
    return np.pad(u, 1, mode="edge")


def _interior(ndim: int, axis: int, offset: int) -> tuple:
    sl = [slice(1, -1)] * ndim
    stop = -1 + offset
    sl[axis] = slice(1 + offset, stop if stop != 0 else None)
    return tuple(sl)


def _second_diff(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    up = _padded(u)
    return (up[_interior(u.ndim, axis, 1)] - 2.0 * u + up[_interior(u.ndim, axis, -1)]) / h**2


def _central_diff(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    up = _padded(u)
    return (up[_interior(u.ndim, axis, 1)] - up[_interior(u.ndim, axis, -1)]) / (2.0 * h)


def laplacian_array(u: np.ndarray, h: float) -> np.ndarray:
    """Raw-array Laplacian used inside the time stepper's hot loop.

    Written as a difference of face fluxes with zero flux on the boundary
    faces, which is the reflected-ghost stencil in conservative form.
    """
    out = np.zeros_like(u)
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    for ax in range(u.ndim):
        flux = np.diff(u, axis=ax)
        lo[ax], hi[ax] = slice(None, -1), slice(1, None)
        out[tuple(lo)] += flux
        out[tuple(hi)] -= flux
        lo[ax] = hi[ax] = slice(None)
    out /= h * h
    return out


def laplacian(f: ScalarField) -> ScalarField:
    return f.with_values(laplacian_array(f.values, f.domain.h))


def gradient_components(f: ScalarField) -> list[np.ndarray]:
    return [_central_diff(f.values, f.domain.h, ax) for ax in range(f.domain.n)]


def second_derivatives(f: ScalarField) -> dict[tuple[int, int], np.ndarray]:
    """All n*n second partials; mixed ones are central differences of central differences."""
    u, h = f.values, f.domain.h
    grads = [_central_diff(u, h, ax) for ax in range(f.domain.n)]
    out = {}
    for i in range(f.domain.n):
        for j in range(f.domain.n):
            out[i, j] = _second_diff(u, h, i) if i == j else _central_diff(grads[j], h, i)
    return out


def integrate(f: ScalarField) -> float:
    return float(f.values.sum() * f.domain.cell_volume)


def mean_density(f: ScalarField) -> float:
    return float(f.values.mean())


def p_norm_integral(f: ScalarField, p: float) -> float:
    """Midpoint quadrature of |u|^p (the p-th power of the p-norm, no root)."""
    _check_p(p)
    return float(np.sum(np.abs(f.values) ** p) * f.domain.cell_volume)


def gradient_p_integral(f: ScalarField, p: float) -> float:
    _check_p(p)
    sq = sum(g * g for g in gradient_components(f))
    return float(np.sum(sq ** (p / 2.0)) * f.domain.cell_volume)


def second_deriv_p_integral(f: ScalarField, p: float) -> float:
    _check_p(p)
    total = sum(np.sum(np.abs(d) ** p) for d in second_derivatives(f).values())
    return float(total * f.domain.cell_volume)


def variance_integral(f: ScalarField) -> float:
    """|Omega|^-1 times the integral of (u - mean)^2."""
    u = f.values
    return float(np.mean((u - u.mean()) ** 2))
