"""Reaction terms and diffusion-free reference solutions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .grid import POS_TOL, ScalarField


class ModelKind(str, enum.Enum):
    PAIR = "pair"
    TRIPLET = "triplet"
    PCPD = "pcpd"


class PositivityError(ValueError):
    pass


class NoExponentialRegimeError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Reaction model.

    ``lam`` is the pair rate (sign-free for PCPD), ``mu`` the triplet rate,
    ``D`` the diffusion constant (annihilation models are rescaled to D=1).
    """

    kind: ModelKind
    lam: float = 0.0
    mu: float = 0.0
    D: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.PAIR and not self.lam > 0:
            raise ValueError("pair annihilation needs lam > 0")
        if self.kind in (ModelKind.TRIPLET, ModelKind.PCPD) and not self.mu > 0:
            raise ValueError(f"{self.kind.value} needs mu > 0")
        if self.kind is not ModelKind.PCPD and self.D != 1.0:
            raise ValueError("annihilation models use unit diffusion")
        if not self.D >= 0:
            raise ValueError("diffusion constant must be >= 0")

    @classmethod
    def pair(cls, lam: float) -> "ModelSpec":
        return cls(ModelKind.PAIR, lam=lam)

    @classmethod
    def triplet(cls, mu: float) -> "ModelSpec":
        return cls(ModelKind.TRIPLET, mu=mu)

    @classmethod
    def pcpd(cls, lam: float, mu: float, D: float = 1.0) -> "ModelSpec":
        return cls(ModelKind.PCPD, lam=lam, mu=mu, D=D)


def reaction_values(m: ModelSpec, u):
    """Pointwise reaction term on raw values (scalar or array)."""
    if m.kind is ModelKind.PAIR:
        return -m.lam * u * u
    if m.kind is ModelKind.TRIPLET:
        return -m.mu * u * u * u
    return m.lam * u * u - m.mu * u * u * u


def reaction_rhs(m: ModelSpec, f: ScalarField) -> ScalarField:
    if not f.is_density():
        raise PositivityError(f"negative density {f.values.min():.3e} beyond tolerance")
    return f.with_values(reaction_values(m, f.values))


def _pcpd_ode(m: ModelSpec, a0: float, t: float) -> float:
    if t == 0 or a0 == 0:
        return a0
    sol = solve_ivp(
        lambda _, y: reaction_values(m, y),
        (0.0, t),
        [a0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    if not sol.success:
        raise RuntimeError(f"PCPD reference integration failed: {sol.message}")
    return float(sol.y[0, -1])


def homogeneous_exact(m: ModelSpec, a0: float, t: float) -> float:
    if a0 < 0 or t < 0:
        raise ValueError("a0 and t must be non-negative")
    if m.kind is ModelKind.PAIR:
        return a0 / (1.0 + a0 * m.lam * t)
    if m.kind is ModelKind.TRIPLET:
        return a0 / math.sqrt(1.0 + 2.0 * m.mu * a0 * a0 * t)
    return _pcpd_ode(m, a0, t)


def homogeneous_series(m: ModelSpec, a0: float, times) -> np.ndarray:
    """Reference solution at many times; one dense integration for PCPD."""
    times = np.asarray(times, dtype=float)
    if m.kind is not ModelKind.PCPD:
        return np.array([homogeneous_exact(m, a0, t) for t in times])
    if a0 == 0:
        return np.zeros_like(times)
    sol = solve_ivp(
        lambda _, y: reaction_values(m, y),
        (0.0, float(times.max())),
        [a0],
        method="DOP853",
        t_eval=times,
        rtol=1e-12,
        atol=1e-14,
    )
    if not sol.success:
        raise RuntimeError(f"PCPD reference integration failed: {sol.message}")
    return sol.y[0]


def pcpd_steady_state(m: ModelSpec) -> float:
    if m.kind is not ModelKind.PCPD:
        raise ValueError("steady state is defined for the PCPD model only")
    return m.lam / m.mu if m.lam > 0 else 0.0


def pcpd_relaxation_rate(m: ModelSpec) -> float:
    """Inverse relaxation time from linearising lam*a^2 - mu*a^3 at lam/mu."""
    if m.kind is not ModelKind.PCPD:
        raise ValueError("relaxation rate is defined for the PCPD model only")
    if m.lam <= 0:
        raise NoExponentialRegimeError(f"lam={m.lam} <= 0 has no exponential relaxation")
    return m.lam**2 / m.mu
