"""Componentwise estimation of the extended autocorrelation operator.

The empirical autocovariance of an extended-state sample is handled through
its Gram matrix in the weak-space geometry (the "kernel trick" of functional
PCA): eigenfunctions are linear combinations of the sample states, so the
n x n symmetric eigenproblem replaces an infinite-dimensional one.  For large
samples the dual route through the d x d weighted coefficient second-moment
matrix gives bit-compatible eigenpairs at a fraction of the cost; both routes
are exposed and tested against each other.

On top of the eigensystem sit the truncated estimator (projected
cross-covariance times inverted autocovariance), the plug-in predictor, and
the deterministic consistency diagnostics: spectral-gap coefficients, the
consistency ratio and the almost-sure error upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import eigsh

from .errors import ConfigError, DegenerateGapError, DimensionError, TruncationError
from .mra import WaveletBasis, decompose_batch
from .procgen import ModelSpec, synthesize
from .spaces import ExtendedState, htilde_weights

__all__ = [
    "EmpiricalCovariance",
    "EmpiricalCrossCovariance",
    "EmpiricalEigenSystem",
    "EstimatedOperator",
    "assumption_a3_proxy",
    "consistency_ratio",
    "eigendecompose",
    "empirical_autocovariance",
    "empirical_cross_covariance",
    "error_upper_bound",
    "estimate_rho",
    "predict_next",
    "spectral_gap_coefficients",
    "truncation_level",
]

TRUNCATION_RULES = ("log_n", "log2_sqrt", "ln_n_5_2")

# above this sample size the dual coefficient-space eigenproblem replaces the
# explicit n x n Gram matrix (identical eigenpairs, far cheaper)
_GRAM_ROUTE_MAX_N = 600


def _stack_states(sample) -> np.ndarray:
    """(n, b+1, grid) array from a sequence of ExtendedState or an array."""
    if isinstance(sample, np.ndarray):
        arr = sample
    else:
        arr = np.stack([s.components if isinstance(s, ExtendedState) else s for s in sample])
    if arr.ndim != 3:
        raise DimensionError("sample must stack to (n, components, grid)")
    return np.asarray(arr, dtype=float)


@dataclass(frozen=True)
class _SampleGeometry:
    """Shared representation of a sample in the weak product-space geometry."""

    states: np.ndarray = field(repr=False)
    weighted: np.ndarray = field(repr=False)  # (n, (b+1)*ncoef), sqrt(weight)-scaled
    basis: WaveletBasis
    beta: float

    @property
    def n(self) -> int:
        return self.states.shape[0]

    def weighted_coeffs_of(self, state: ExtendedState) -> np.ndarray:
        if state.components.shape != self.states.shape[1:]:
            raise DimensionError(
                f"state shape {state.components.shape} does not match sample "
                f"shape {self.states.shape[1:]}"
            )
        coeffs = decompose_batch(state.components, self.basis)
        return (coeffs * self._sqrt_w).ravel()

    @property
    def _sqrt_w(self) -> np.ndarray:
        return np.sqrt(htilde_weights(self.basis.primary_level, self.basis.last_level, self.beta))


def _geometry(sample, basis: WaveletBasis, beta: float) -> _SampleGeometry:
    states = _stack_states(sample)
    n, n_comp, n_grid = states.shape
    if n_grid != basis.n_points:
        raise DimensionError(
            f"sample grid has {n_grid} points, basis grid has {basis.n_points}"
        )
    coeffs = decompose_batch(states.reshape(n * n_comp, n_grid), basis)
    coeffs = coeffs.reshape(n, n_comp, basis.n_coefficients)
    sqrt_w = np.sqrt(htilde_weights(basis.primary_level, basis.last_level, beta))
    weighted = (coeffs * sqrt_w).reshape(n, n_comp * basis.n_coefficients)
    return _SampleGeometry(states=states, weighted=weighted, basis=basis, beta=beta)


@dataclass(frozen=True)
class EmpiricalCovariance:
    """Gram representation of the empirical autocovariance (1/n) sum X_i (x) X_i."""

    geometry: _SampleGeometry

    @property
    def n(self) -> int:
        return self.geometry.n

    def gram(self) -> np.ndarray:
        """G[i,l] = <X_i, X_l> / n in the weak product-space inner product."""
        y = self.geometry.weighted
        return (y @ y.T) / self.n

    def dense(self) -> np.ndarray:
        """Coefficient-space covariance (d x d) in the orthonormalized
        weighted coordinates; shares its nonzero spectrum with the Gram."""
        y = self.geometry.weighted
        return (y.T @ y) / self.n


@dataclass(frozen=True)
class EmpiricalCrossCovariance:
    """Gram representation of the lag-1 cross-covariance
    (1/(n-1)) sum X_i (x) X_(i+1)."""

    geometry: _SampleGeometry

    @property
    def n(self) -> int:
        return self.geometry.n

    def dense(self) -> np.ndarray:
        """Coefficient-space matrix mapping y-coordinates of x to those of
        the lagged image: (1/(n-1)) sum y_(i+1) y_i^T."""
        y = self.geometry.weighted
        return (y[1:].T @ y[:-1]) / (self.n - 1)


def empirical_autocovariance(sample, basis: WaveletBasis, beta: float) -> EmpiricalCovariance:
    geo = _geometry(sample, basis, beta)
    if geo.n < 2:
        raise ConfigError("need at least two states")
    return EmpiricalCovariance(geo)


def empirical_cross_covariance(sample, basis: WaveletBasis, beta: float) -> EmpiricalCrossCovariance:
    geo = _geometry(sample, basis, beta)
    if geo.n < 2:
        raise ConfigError("need at least two states")
    return EmpiricalCrossCovariance(geo)


@dataclass(frozen=True)
class EmpiricalEigenSystem:
    """Descending eigenvalues of the empirical autocovariance together with
    the eigenstates, stored both as sample-combination weights and as weighted
    coefficient vectors (rows orthonormal under the product inner product)."""

    eigenvalues: np.ndarray
    sample_weights: np.ndarray = field(repr=False)  # (k_eff, n)
    weighted_rep: np.ndarray = field(repr=False)  # (k_eff, d)
    geometry: _SampleGeometry = field(repr=False)

    @property
    def sample_size(self) -> int:
        return self.geometry.n

    @property
    def n_eigenstates(self) -> int:
        return self.weighted_rep.shape[0]

    def eigenstate(self, j: int) -> ExtendedState:
        """Lift eigenstate j back to grid curves."""
        flat = self.sample_weights[j] @ self.geometry.states.reshape(self.sample_size, -1)
        return ExtendedState(flat.reshape(self.geometry.states.shape[1:]))

    def projections(self, weighted_coeffs: np.ndarray, k: int) -> np.ndarray:
        """Inner products of a state (given in weighted coordinates) with the
        first k eigenstates."""
        return self.weighted_rep[:k] @ weighted_coeffs


def eigendecompose(
    cov: EmpiricalCovariance, k: int | None = None, route: str = "auto"
) -> EmpiricalEigenSystem:
    """Solve the empirical eigenproblem.

    route="gram" works on the n x n Gram matrix (full symmetric solve, or a
    Lanczos top-k solve when k is given and n is large); route="dual" works on
    the d x d weighted coefficient second-moment matrix.  The nonzero spectra
    coincide, so "auto" picks by size.  Eigenstate signs are fixed so the
    largest-magnitude weighted coordinate is positive.
    """
    geo = cov.geometry
    n, d = geo.weighted.shape
    if route == "auto":
        route = "gram" if n <= _GRAM_ROUTE_MAX_N or n <= d else "dual"
    y = geo.weighted

    if route == "gram":
        gram = (y @ y.T) / n
        if k is not None and k + 2 < n and n > _GRAM_ROUTE_MAX_N:
            eigval, eigvec = eigsh(gram, k=min(k + 2, n - 1), which="LA")
        else:
            eigval, eigvec = np.linalg.eigh(gram)
        order = np.argsort(eigval)[::-1]
        eigval = eigval[order]
        eigvec = eigvec[:, order]
        positive = eigval > max(eigval[0], 0.0) * 1e-14
        n_pos = int(positive.sum())
        lam = eigval[:n_pos]
        weights = eigvec[:, :n_pos].T / np.sqrt(n * lam)[:, None]
        weighted_rep = weights @ y
    elif route == "dual":
        second_moment = (y.T @ y) / n
        eigval, eigvec = np.linalg.eigh(second_moment)
        order = np.argsort(eigval)[::-1]
        eigval = eigval[order]
        eigvec = eigvec[:, order]
        positive = eigval > max(eigval[0], 0.0) * 1e-14
        n_pos = int(positive.sum())
        lam = eigval[:n_pos]
        weighted_rep = eigvec[:, :n_pos].T
        weights = (y @ eigvec[:, :n_pos] / (n * lam)).T
    else:
        raise ConfigError(f"unknown eigendecomposition route {route!r}")

    if k is not None:
        keep = min(k, n_pos)
        lam = lam[:keep]
        weights = weights[:keep]
        weighted_rep = weighted_rep[:keep]

    # deterministic sign: largest-magnitude weighted coordinate positive
    lead = np.argmax(np.abs(weighted_rep), axis=1)
    signs = np.sign(weighted_rep[np.arange(len(lead)), lead])
    signs[signs == 0.0] = 1.0
    weighted_rep = weighted_rep * signs[:, None]
    weights = weights * signs[:, None]

    full_eigenvalues = np.zeros(n)
    full_eigenvalues[: len(lam)] = lam
    return EmpiricalEigenSystem(
        eigenvalues=full_eigenvalues,
        sample_weights=weights,
        weighted_rep=weighted_rep,
        geometry=geo,
    )


def truncation_level(n: int, rule: str) -> int:
    """Sample-size-driven number of retained eigen-directions (floored at 1)."""
    if n < 2:
        raise ConfigError("need n >= 2")
    if rule == "log_n":
        value = math.log(n)
    elif rule == "log2_sqrt":
        value = math.log2(math.sqrt(n))
    elif rule == "ln_n_5_2":
        value = 2.5 * math.log(n)
    else:
        raise ConfigError(f"unknown truncation rule {rule!r} (use one of {TRUNCATION_RULES})")
    return max(1, int(value))


@dataclass(frozen=True)
class EstimatedOperator:
    """Truncated componentwise estimator stored against the empirical
    eigenstates: coefficients[l, j] = <D_n phi_j, phi_l> / C_j."""

    k_n: int
    coefficients: np.ndarray
    eigensystem: EmpiricalEigenSystem

    def apply_weighted(self, weighted_coeffs: np.ndarray) -> np.ndarray:
        """Eigenstate-space image coordinates of one state."""
        p = self.eigensystem.projections(weighted_coeffs, self.k_n)
        return self.coefficients @ p


def estimate_rho(
    sample,
    k_n: int,
    basis: WaveletBasis,
    beta: float,
    eigensystem: EmpiricalEigenSystem | None = None,
) -> EstimatedOperator:
    """Componentwise estimator: project the empirical cross-covariance onto
    the first k_n empirical eigen-directions and divide by the eigenvalues."""
    if eigensystem is None:
        eigensystem = eigendecompose(
            empirical_autocovariance(sample, basis, beta), k=k_n
        )
    if k_n < 1:
        raise ConfigError("k_n must be >= 1")
    lam = eigensystem.eigenvalues
    if k_n > eigensystem.n_eigenstates or lam[k_n - 1] <= 0.0:
        raise TruncationError(
            f"empirical eigenvalue C_(n,{k_n}) is not positive; "
            f"only {eigensystem.n_eigenstates} positive directions available - "
            "use a smaller k_n"
        )
    y = eigensystem.geometry.weighted
    n = eigensystem.sample_size
    proj = y @ eigensystem.weighted_rep[:k_n].T  # <X_i, phi_j>, shape (n, k_n)
    cross = (proj[1:].T @ proj[:-1]) / (n - 1)  # <D_n phi_j, phi_l> at [l, j]
    coefficients = cross / lam[:k_n][None, :]
    return EstimatedOperator(k_n=k_n, coefficients=coefficients, eigensystem=eigensystem)


def predict_next(op: EstimatedOperator, state: ExtendedState) -> ExtendedState:
    """Plug-in prediction: apply the estimated operator to one extended state."""
    geo = op.eigensystem.geometry
    yx = geo.weighted_coeffs_of(state)
    q = op.apply_weighted(yx)
    flat = (q @ op.eigensystem.sample_weights[: op.k_n]) @ geo.states.reshape(geo.n, -1)
    return ExtendedState(flat.reshape(geo.states.shape[1:]))


def spectral_gap_coefficients(eigenvalues: Sequence[float], k: int) -> np.ndarray:
    """Reciprocal spectral-gap coefficients a_1..a_k scaled by 2*sqrt(2)."""
    lam = np.asarray(eigenvalues, dtype=float)
    if k < 1:
        raise ConfigError("need k >= 1")
    if len(lam) < k + 1:
        raise ConfigError(f"need eigenvalues through index {k + 1}, got {len(lam)}")
    gaps = lam[:k] - lam[1 : k + 1]
    if np.any(gaps <= 1e-12):
        raise DegenerateGapError("tied eigenvalues: spectral gaps degenerate")
    scale = 2.0 * np.sqrt(2.0)
    out = np.empty(k)
    out[0] = scale / gaps[0]
    for j in range(1, k):
        out[j] = scale * max(1.0 / gaps[j - 1], 1.0 / gaps[j])
    return out


def consistency_ratio(eigenvalues: Sequence[float], n: int, k_n: int) -> float:
    """k_n * C_(k_n)^-1 * sum(a_j) relative to sqrt(n / ln n): the quantity
    whose decay witnesses the strong-consistency condition."""
    lam = np.asarray(eigenvalues, dtype=float)
    a = spectral_gap_coefficients(lam, k_n)
    return float(k_n / lam[k_n - 1] * a.sum() / math.sqrt(n / math.log(n)))


def error_upper_bound(
    x0_norm: float, eigenvalues: Sequence[float], n: int, k_n: int
) -> float:
    """Almost-sure upper bound for the plug-in prediction error norm:
    ||X_0|| * exp(-n / (C_(k_n)^-2 k_n^2 (sum a_j)^2))."""
    lam = np.asarray(eigenvalues, dtype=float)
    a = spectral_gap_coefficients(lam, k_n)
    denom = lam[k_n - 1] ** (-2.0) * k_n**2 * a.sum() ** 2
    return float(x0_norm * math.exp(-n / denom))


def assumption_a3_proxy(
    operator,
    eigensystem: EmpiricalEigenSystem,
    k: int,
    basis: WaveletBasis,
    beta: float,
    probes: int = 200,
    rng=0,
) -> float:
    """Randomized lower bound L_k of the unit-ball sup residual of the
    operator after projection onto the first k eigenstates.

    `operator` is either a ModelSpec (the true block operator, applied exactly
    in sine-coefficient space; probes drawn uniform per sine coefficient) or
    an EstimatedOperator (probes drawn uniform per wavelet coefficient).
    Probes are normalized to unit sup-coefficient norm; the residual norm is
    maximized over them.
    """
    return _a3_residuals(operator, eigensystem, [k], basis, beta, probes, rng)[0]


def _a3_residuals(
    operator,
    eigensystem: EmpiricalEigenSystem,
    ks: Sequence[int],
    basis: WaveletBasis,
    beta: float,
    probes: int = 200,
    rng=0,
) -> np.ndarray:
    """L_k for several k on one shared probe set (used by the diagnostics)."""
    if max(ks) > eigensystem.n_eigenstates:
        raise ConfigError(
            f"k={max(ks)} exceeds the {eigensystem.n_eigenstates} available eigenstates"
        )
    rng = np.random.default_rng(rng)
    geo = eigensystem.geometry
    n_comp = geo.states.shape[1]
    grid = np.linspace(0.0, 1.0, geo.states.shape[2])

    if isinstance(operator, ModelSpec):
        dim = operator.dim
        probe_coeffs = rng.uniform(-1.0, 1.0, size=(probes, dim))
        probe_states = synthesize(probe_coeffs, operator.m_terms, grid)
        sup = np.abs(
            decompose_batch(probe_states.reshape(probes * n_comp, -1), basis)
        ).reshape(probes, -1).max(axis=1)
        probe_coeffs /= sup[:, None]
        images = synthesize(
            operator.apply_rho_coeffs(probe_coeffs), operator.m_terms, grid
        )
    elif isinstance(operator, EstimatedOperator):
        probe_wave = rng.uniform(
            -1.0, 1.0, size=(probes, n_comp, basis.n_coefficients)
        )
        probe_wave /= np.abs(probe_wave).reshape(probes, -1).max(axis=1)[:, None, None]
        probe_states = probe_wave @ basis.matrix
        images = np.stack(
            [
                predict_next(operator, ExtendedState(probe_states[i])).components
                for i in range(probes)
            ]
        )
    else:
        raise ConfigError("operator must be a ModelSpec or an EstimatedOperator")

    image_coeffs = decompose_batch(images.reshape(probes * n_comp, -1), basis).reshape(
        probes, n_comp, -1
    )
    sqrt_w = np.sqrt(htilde_weights(basis.primary_level, basis.last_level, beta))
    image_y = (image_coeffs * sqrt_w).reshape(probes, -1)
    eig_coeffs = (eigensystem.weighted_rep / np.tile(sqrt_w, n_comp)).reshape(
        eigensystem.n_eigenstates, n_comp, -1
    )

    out = np.empty(len(ks))
    for idx, k in enumerate(ks):
        if k == 0:
            resid = image_coeffs
        else:
            proj = image_y @ eigensystem.weighted_rep[:k].T  # (p, k)
            resid = image_coeffs - np.tensordot(proj, eig_coeffs[:k], axes=(1, 0))
        out[idx] = np.abs(resid).reshape(probes, -1).max(axis=1).max()
    return out
