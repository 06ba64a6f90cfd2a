"""Besov/Sobolev norms and inner products on wavelet coefficients.

Four spaces drive everything: the sup-coefficient norm (the ambient Banach
space of the curves), its l1 dual proxy, the negative-order weighted space
carrying the estimator's inner product, and positive-order Sobolev norms for
the covariance scale.  Product-space (extended state) versions aggregate the
componentwise quantities: sup across components for the norm, sum across
components for the inner product.

The dyadic level weights 2^(-2*j*beta) (resp. 2^(+2*j*gamma)) realize the
weighted coefficient functionals; the scaling block at level J carries the
same weight as detail level J.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .mra import WaveletBasis, WaveletDecomposition, decompose_batch

__all__ = [
    "ExtendedState",
    "SpaceParams",
    "b_star_norm",
    "b_sup_norm",
    "ext_inner",
    "ext_sup_norm",
    "htilde_inner",
    "htilde_weights",
    "sobolev_norm",
    "sobolev_weights",
]


@dataclass(frozen=True)
class SpaceParams:
    """Smoothness indices of the function-space scenario.

    beta is the negative-order index of the weak space (must exceed 1/2);
    gamma holds one positive index per state component (endogenous first),
    each required to exceed 2*beta.
    """

    beta: float
    gamma: tuple[float, ...]

    def __post_init__(self):
        if not self.beta > 0.5:
            raise ConfigError(f"beta must exceed 1/2, got {self.beta}")
        for i, g in enumerate(self.gamma):
            if not g > 2.0 * self.beta:
                raise ConfigError(
                    f"gamma[{i}]={g} must exceed 2*beta={2 * self.beta}"
                )

    @property
    def b(self) -> int:
        """Number of exogenous components."""
        return len(self.gamma) - 1


@dataclass(frozen=True)
class ExtendedState:
    """One (b+1)-tuple of curves on a common uniform grid over [0,1]:
    row 0 is the endogenous curve, rows 1..b the (forward-shifted) exogenous
    ones."""

    components: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=float)
        if arr.ndim != 2:
            raise DimensionError("extended state needs a 2-D (components x grid) layout")
        object.__setattr__(self, "components", arr)

    @property
    def b(self) -> int:
        return self.components.shape[0] - 1

    @property
    def n_points(self) -> int:
        return self.components.shape[1]

    def __add__(self, other: "ExtendedState") -> "ExtendedState":
        return ExtendedState(self.components + other.components)

    def __sub__(self, other: "ExtendedState") -> "ExtendedState":
        return ExtendedState(self.components - other.components)

    def __mul__(self, scalar: float) -> "ExtendedState":
        return ExtendedState(self.components * scalar)

    __rmul__ = __mul__


def _level_exponents(primary_level: int, last_level: int) -> np.ndarray:
    """Per-coefficient level index j, alpha block first (counted at level J)."""
    levels = [np.full(2**primary_level, primary_level)]
    levels += [np.full(2**j, j) for j in range(primary_level, last_level + 1)]
    return np.concatenate(levels).astype(float)


def htilde_weights(primary_level: int, last_level: int, beta: float) -> np.ndarray:
    """Coefficient weights 2^(-2*j*beta) of the weak-space inner product."""
    return 2.0 ** (-2.0 * beta * _level_exponents(primary_level, last_level))


def sobolev_weights(primary_level: int, last_level: int, gamma: float) -> np.ndarray:
    """Coefficient weights 2^(+2*j*gamma) of the order-gamma Sobolev norm."""
    return 2.0 ** (2.0 * gamma * _level_exponents(primary_level, last_level))


def b_sup_norm(f: WaveletDecomposition) -> float:
    """Sup of all coefficient magnitudes (ambient-space norm proxy)."""
    return float(np.abs(f.flatten()).max())


def b_star_norm(f: WaveletDecomposition) -> float:
    """Sum of all coefficient magnitudes (dual-space norm proxy)."""
    return float(np.abs(f.flatten()).sum())


def htilde_inner(f: WaveletDecomposition, g: WaveletDecomposition, beta: float) -> float:
    """Weighted coefficient inner product with dyadic weights 2^(-2*j*beta)."""
    cf, cg = f.flatten(), g.flatten()
    if cf.shape != cg.shape:
        raise DimensionError("decompositions have mismatched coefficient shapes")
    j = len(f.alpha).bit_length() - 1
    k = j + len(f.beta) - 1
    return float(np.sum(htilde_weights(j, k, beta) * cf * cg))


def sobolev_norm(f: WaveletDecomposition, gamma: float) -> float:
    """Order-gamma Sobolev norm: sqrt of the 2^(2*j*gamma)-weighted energy."""
    c = f.flatten()
    j = len(f.alpha).bit_length() - 1
    k = j + len(f.beta) - 1
    return float(np.sqrt(np.sum(sobolev_weights(j, k, gamma) * c * c)))


def state_coefficients(x: ExtendedState, basis: WaveletBasis) -> np.ndarray:
    """(b+1, n_coefficients) wavelet coefficients of all components."""
    return decompose_batch(x.components, basis)


def ext_sup_norm(x: ExtendedState, basis: WaveletBasis) -> float:
    """Product-space norm: max over components of the sup-coefficient norm."""
    return float(np.abs(state_coefficients(x, basis)).max())


def ext_inner(x: ExtendedState, y: ExtendedState, basis: WaveletBasis, beta: float) -> float:
    """Product-space inner product: sum over components of the weak-space
    componentwise inner products."""
    if x.components.shape != y.components.shape:
        raise DimensionError(
            f"extended states have shapes {x.components.shape} vs {y.components.shape}"
        )
    cx = state_coefficients(x, basis)
    cy = state_coefficients(y, basis)
    w = htilde_weights(basis.primary_level, basis.last_level, beta)
    return float(np.sum(w * cx * cy))
