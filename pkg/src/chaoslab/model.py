"""Model zoo: confinement and interaction potentials with bound metadata.

Potential handles are expected to be numpy-vectorized (accept arrays).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import NonFinite

__all__ = [
    "QuarticConfinement",
    "RankOneInteraction",
    "GeneralPotential",
    "GeneralKernel",
    "ModelSpec",
    "curie_weiss_model",
    "gaussian_model",
    "energy_per_particle",
    "gibbs_log_density_unnormalized",
    "reduced_kernel_force",
]


@dataclass(frozen=True)
class QuarticConfinement:
    """V(x) = theta/4 x^4 + sigma/2 x^2."""

    theta: float
    sigma: float

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        if self.theta == 0 and self.sigma <= 0:
            raise ValueError("theta = 0 requires sigma > 0 (Gaussian oracle model)")

    def v(self, x):
        x = np.asarray(x, dtype=float)
        return self.theta / 4.0 * x**4 + self.sigma / 2.0 * x**2

    def grad_v(self, x):
        x = np.asarray(x, dtype=float)
        return self.theta * x**3 + self.sigma * x


@dataclass(frozen=True)
class RankOneInteraction:
    """W(x, y) = -J x y."""

    J: float

    def w(self, x, y):
        return -self.J * np.asarray(x, dtype=float) * np.asarray(y, dtype=float)

    def grad1_w(self, x, y):
        return -self.J * np.asarray(y, dtype=float) * np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class GeneralPotential:
    v: Callable[[np.ndarray], np.ndarray]
    grad_v: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GeneralKernel:
    w: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad1_w: Callable[[np.ndarray, np.ndarray], np.ndarray]
    symmetric: bool = True


Confinement = Union[QuarticConfinement, GeneralPotential]
Interaction = Union[RankOneInteraction, GeneralKernel]


@dataclass(frozen=True)
class ModelSpec:
    """A mean-field model with sign-decomposition metadata.

    The Lipschitz/force bounds are user supplied; for a rank-one
    interaction with J > 0 the concave part is W_- = J x y, so
    lipschitz_minus = J and lipschitz_plus = 0 (and symmetrically
    for J < 0).
    """

    confinement: Confinement
    interaction: Interaction
    dimension: int = 1
    lipschitz_plus: float = 0.0
    lipschitz_minus: float = 0.0
    force_bound: float = 0.0
    force_bound_minus: float = 0.0
    convexity_kappa: float = 0.0

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        for name in ("lipschitz_plus", "lipschitz_minus", "force_bound",
                     "force_bound_minus", "convexity_kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def is_rank_one(self) -> bool:
        return isinstance(self.interaction, RankOneInteraction)

    @property
    def is_quartic(self) -> bool:
        return isinstance(self.confinement, QuarticConfinement)

    @property
    def is_gaussian(self) -> bool:
        """True for the closed-form oracle family (theta = 0, sigma > 0)."""
        return self.is_quartic and self.confinement.theta == 0.0

    @property
    def coupling(self) -> float:
        if not self.is_rank_one:
            raise TypeError("coupling is defined for rank-one interactions only")
        return self.interaction.J

    def potential(self, x):
        return self.confinement.v(x)

    def grad_potential(self, x):
        return self.confinement.grad_v(x)

    def kernel(self, x, y):
        return self.interaction.w(x, y)

    def kernel_force(self, x, y):
        return self.interaction.grad1_w(x, y)

    def fingerprint(self) -> str:
        """Stable hash of the model parameters (best effort for general handles)."""
        if self.is_quartic and self.is_rank_one:
            payload = {
                "family": "quartic-rank-one",
                "theta": self.confinement.theta,
                "sigma": self.confinement.sigma,
                "J": self.interaction.J,
                "d": self.dimension,
            }
        else:
            payload = {"family": "general", "repr": repr(self)}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def curie_weiss_model(theta: float, sigma: float, J: float, dimension: int = 1) -> ModelSpec:
    """Quartic confinement with rank-one coupling, bound metadata filled in."""
    if theta <= 0:
        raise ValueError("Curie-Weiss model requires theta > 0")
    return ModelSpec(
        confinement=QuarticConfinement(theta, sigma),
        interaction=RankOneInteraction(J),
        dimension=dimension,
        lipschitz_plus=max(-J, 0.0),
        lipschitz_minus=max(J, 0.0),
    )


def gaussian_model(sigma: float, J: float, dimension: int = 1) -> ModelSpec:
    """Pure Gaussian oracle model: theta = 0, closed forms available downstream."""
    return ModelSpec(
        confinement=QuarticConfinement(0.0, sigma),
        interaction=RankOneInteraction(J),
        dimension=dimension,
        lipschitz_plus=max(-J, 0.0),
        lipschitz_minus=max(J, 0.0),
    )


def energy_per_particle(model: ModelSpec, config) -> float:
    """Potential free energy per particle, diagonal terms included.

    (1/N) sum_i V(x_i) + (1/2N^2) sum_{i,j} W(x_i, x_j).
    """
    x = np.asarray(config, dtype=float)
    n = x.size
    v_part = float(np.sum(model.potential(x))) / n
    if model.is_rank_one:
        s = float(np.sum(x))
        w_part = -model.coupling * s * s / (2.0 * n * n)
    else:
        w_part = float(np.sum(model.kernel(x[:, None], x[None, :]))) / (2.0 * n * n)
    total = v_part + w_part
    if not np.isfinite(total):
        raise NonFinite("energy overflowed")
    return total


def gibbs_log_density_unnormalized(model: ModelSpec, config) -> float:
    """Exponent of the N-particle Gibbs density: -sum V - (1/2N) sum W."""
    x = np.asarray(config, dtype=float)
    value = -x.size * energy_per_particle(model, x)
    if not np.isfinite(value):
        raise NonFinite("Gibbs exponent overflowed")
    return value


def reduced_kernel_force(model: ModelSpec, mstar_mean_force, x, y):
    """Force of the reduced kernel: grad1 W(x, y) - <grad1 W(x, .), m_*>."""
    return model.kernel_force(x, y) - mstar_mean_force(x)
