"""Spectral model construction and simulation of ARBX(1) trajectories.

All operators are represented by their coefficient matrices against the
L2-orthonormal sine basis sqrt(2) sin(pi j x), truncated at M terms.  The
extended state stacks the endogenous component and the b exogenous ones, so
the transition acts on coefficient vectors of length (b+1)*M: first block row
(autocorrelation, exogenous couplings a_i), diagonal u_i below, zero blocks
elsewhere.  Trajectories are generated by Gaussian sampling of the initial
state and innovations plus the state recursion, then synthesized on a uniform
grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ModelError
from .spaces import ExtendedState, SpaceParams

__all__ = [
    "BlockOperator",
    "ModelSpec",
    "SpectralOperator",
    "Trajectory",
    "build_autocorrelation",
    "build_innovation_covariance",
    "build_state_covariance",
    "gamma_values",
    "make_model",
    "psd_project",
    "sample_coefficients",
    "sample_gaussian_state",
    "simulate",
    "sine_basis",
    "sine_matrix",
    "spectral_radius_check",
    "synthesize",
    "theoretical_eigenvalues",
]


def sine_basis(j: int, x):
    """Value of the j-th L2([0,1])-orthonormal sine function sqrt(2) sin(pi j x)."""
    if j < 1:
        raise ConfigError(f"sine basis index must be >= 1, got {j}")
    return np.sqrt(2.0) * np.sin(np.pi * j * np.asarray(x, dtype=float))


def sine_matrix(m_terms: int, grid: np.ndarray) -> np.ndarray:
    """(m_terms, len(grid)) table of the first m_terms sine functions."""
    j = np.arange(1, m_terms + 1)[:, None]
    return np.sqrt(2.0) * np.sin(np.pi * j * np.asarray(grid, dtype=float)[None, :])


def gamma_values(family: str, b: int, beta: float) -> tuple[float, ...]:
    """The two parametric smoothness families: gamma1 grows linearly in the
    component index, gamma2 logarithmically (more regular curves)."""
    if family == "gamma1":
        return tuple(2.0 * beta + i / 10.0 for i in range(1, b + 2))
    if family == "gamma2":
        return tuple(2.0 * beta + math.log10(i + 1) for i in range(1, b + 2))
    raise ConfigError(f"unknown gamma family {family!r} (use gamma1 or gamma2)")


@dataclass(frozen=True)
class SpectralOperator:
    """Operator on curves given by o[j,h] = <O(phi_j), phi_h> on the sine basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ConfigError("spectral operator needs a square matrix with M >= 1")
        if not np.isfinite(m).all():
            raise ConfigError("spectral operator entries must be finite")
        object.__setattr__(self, "matrix", m)

    @property
    def truncation(self) -> int:
        return self.matrix.shape[0]

    def apply_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficient image c'_h = sum_j o[j,h] c_j."""
        return np.asarray(coeffs, dtype=float) @ self.matrix


def _power_entries(m_terms: int, exponent: float) -> np.ndarray:
    return (1.0 + np.arange(1, m_terms + 1, dtype=float)) ** (-exponent)


def _off_diagonal(m_terms: int, power: int, denom: float) -> np.ndarray:
    """Matrix exp(-|j-h|^power / denom) with zeroed diagonal."""
    j = np.arange(m_terms, dtype=float)
    d = np.abs(j[:, None] - j[None, :])
    out = np.exp(-(d**power) / denom)
    np.fill_diagonal(out, 0.0)
    return out


def build_state_covariance(params: SpaceParams, m_terms: int) -> np.ndarray:
    """Initial-state covariance on the stacked sine coefficients.

    Every (r,c) component block is diagonal in the common sine eigenbasis with
    entries (1+j)^(-(gamma_r+gamma_c)/2); the diagonal blocks are the Bessel
    potentials (1+j)^(-gamma_c).  Per sine index the cross-component block is
    rank one, so the assembled matrix is PSD by construction.
    """
    gam = np.asarray(params.gamma)
    n_comp = len(gam)
    dim = n_comp * m_terms
    cov = np.zeros((dim, dim))
    for r in range(n_comp):
        for c in range(n_comp):
            entries = _power_entries(m_terms, 0.5 * (gam[r] + gam[c]))
            block = np.diag(entries)
            cov[r * m_terms : (r + 1) * m_terms, c * m_terms : (c + 1) * m_terms] = block
    cov, _ = psd_project(cov)
    return cov


def theoretical_eigenvalues(params: SpaceParams, m_terms: int) -> np.ndarray:
    """Positive eigenvalues of the initial-state covariance, descending.

    The j-th sine index contributes the single eigenvalue
    sum_c (1+j)^(-gamma_c); the remaining b*M eigenvalues vanish.
    """
    gam = np.asarray(params.gamma)[:, None]
    vals = ((1.0 + np.arange(1, m_terms + 1, dtype=float)) ** (-gam)).sum(axis=0)
    return np.sort(vals)[::-1]


@dataclass(frozen=True)
class BlockOperator:
    """(b+1)x(b+1) block matrix of spectral operators acting on extended states."""

    rho: SpectralOperator
    a: tuple[SpectralOperator, ...]
    u: tuple[SpectralOperator, ...]

    @property
    def b(self) -> int:
        return len(self.a)

    @property
    def truncation(self) -> int:
        return self.rho.truncation

    @property
    def transition(self) -> np.ndarray:
        """Dense matrix mapping a stacked coefficient vector one step ahead."""
        m = self.truncation
        dim = (self.b + 1) * m
        t = np.zeros((dim, dim))
        t[:m, :m] = self.rho.matrix.T
        for i, (ai, ui) in enumerate(zip(self.a, self.u), start=1):
            t[:m, i * m : (i + 1) * m] = ai.matrix.T
            t[i * m : (i + 1) * m, i * m : (i + 1) * m] = ui.matrix.T
        return t


def build_autocorrelation(b: int, w_scale: float, m_terms: int) -> BlockOperator:
    """Autocorrelation block operator with the power-law diagonals and
    exponentially decaying off-diagonal spectral entries."""
    if b < 1:
        raise ConfigError("need at least one exogenous component")
    if w_scale <= 0:
        raise ConfigError("the off-diagonal range W must be positive")
    rho = np.diag(_power_entries(m_terms, 1.5)) + _off_diagonal(m_terms, 1, w_scale)
    a_ops = []
    u_ops = []
    for i in range(1, b + 1):
        u_i = np.diag(_power_entries(m_terms, 3.0 + 0.5 * i)) + _off_diagonal(
            m_terms, 2, w_scale
        )
        a_i = np.diag(_power_entries(m_terms, 4.0 + 0.5 * i)) + _off_diagonal(
            m_terms, 3, w_scale
        )
        u_ops.append(SpectralOperator(u_i))
        a_ops.append(SpectralOperator(a_i))
    return BlockOperator(rho=SpectralOperator(rho), a=tuple(a_ops), u=tuple(u_ops))


def build_innovation_covariance(
    params: SpaceParams, autocorr: BlockOperator, w_scale: float
) -> tuple[np.ndarray, float]:
    """Innovation covariance with componentwise diagonal blocks.

    Diagonal entries make each sine mode marginally stationary,
    (1+j)^(-gamma) * (1 - diag(op)^2); off-diagonal entries follow the printed
    exp(-|j-h|^p / W^2) laws, which are not automatically PSD, so negative
    eigenvalues are clipped.  Returns (covariance, clipped mass).
    """
    m = autocorr.truncation
    gam = np.asarray(params.gamma)
    n_comp = len(gam)
    dim = n_comp * m
    cov = np.zeros((dim, dim))
    for c in range(n_comp):
        op = autocorr.rho if c == 0 else autocorr.u[c - 1]
        diag = _power_entries(m, gam[c]) * (1.0 - np.diag(op.matrix) ** 2)
        power = 2 if c == 0 else 3
        block = np.diag(diag) + _off_diagonal(m, power, w_scale**2)
        cov[c * m : (c + 1) * m, c * m : (c + 1) * m] = block
    return psd_project(cov)


def psd_project(mat: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Symmetrize, clip negative eigenvalues at zero, and report the clipped
    eigenvalue mass."""
    sym = 0.5 * (mat + mat.T)
    eigval, eigvec = np.linalg.eigh(sym)
    clipped_mass = float(-eigval[eigval < 0.0].sum())
    projected = (eigvec * np.clip(eigval, 0.0, None)) @ eigvec.T
    projected = 0.5 * (projected + projected.T)
    if np.linalg.eigvalsh(projected).min() < -tol:
        raise ModelError("covariance still indefinite after projection")
    return projected, clipped_mass


@dataclass(frozen=True)
class ModelSpec:
    """Fully assembled simulation model: smoothness parameters, spectral
    operators and the two Gaussian covariances."""

    params: SpaceParams
    gamma_family: str | None
    w_scale: float
    m_terms: int
    grid_size: int
    autocorrelation: BlockOperator
    state_covariance: np.ndarray = field(repr=False)
    innovation_covariance: np.ndarray = field(repr=False)
    innovation_clip_mass: float = 0.0
    stationarity_j0: int | None = None

    @property
    def b(self) -> int:
        return self.params.b

    @property
    def dim(self) -> int:
        return (self.b + 1) * self.m_terms

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size)

    def apply_rho_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Image of stacked coefficient vectors under the block operator."""
        return np.asarray(coeffs, dtype=float) @ self.autocorrelation.transition.T

    def config_dict(self) -> dict:
        return {
            "b": self.b,
            "beta": self.params.beta,
            "gamma": list(self.params.gamma),
            "gamma_family": self.gamma_family,
            "W": self.w_scale,
            "M": self.m_terms,
            "grid_size": self.grid_size,
        }


def make_model(
    b: int = 3,
    beta: float = 0.6,
    gamma_family: str = "gamma1",
    w_scale: float = 0.4,
    m_terms: int = 50,
    grid_size: int = 64,
    gamma: tuple[float, ...] | None = None,
) -> ModelSpec:
    """Assemble the simulation model; explicit `gamma` overrides the family."""
    if gamma is not None:
        params = SpaceParams(beta=beta, gamma=tuple(gamma))
        family = None
    else:
        params = SpaceParams(beta=beta, gamma=gamma_values(gamma_family, b, beta))
        family = gamma_family
    if params.b != b:
        raise ConfigError(f"gamma has {params.b + 1} entries but b={b} needs {b + 1}")
    if grid_size < 2:
        raise ConfigError("grid needs at least 2 points")
    autocorr = build_autocorrelation(b, w_scale, m_terms)
    c_state = build_state_covariance(params, m_terms)
    c_innov, clip_mass = build_innovation_covariance(params, autocorr, w_scale)
    report = spectral_radius_check(autocorr.transition)
    return ModelSpec(
        params=params,
        gamma_family=family,
        w_scale=w_scale,
        m_terms=m_terms,
        grid_size=grid_size,
        autocorrelation=autocorr,
        state_covariance=c_state,
        innovation_covariance=c_innov,
        innovation_clip_mass=clip_mass,
        stationarity_j0=report["j0"],
    )


@dataclass(frozen=True)
class Trajectory:
    """Simulated extended states: grid synthesis plus the underlying
    coefficient paths."""

    states: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    spec: ModelSpec

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def delta_h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def state(self, idx: int) -> ExtendedState:
        return ExtendedState(self.states[idx])


def _gaussian_factor(cov: np.ndarray) -> np.ndarray:
    """Symmetric square-root factor robust to semidefiniteness."""
    eigval, eigvec = np.linalg.eigh(0.5 * (cov + cov.T))
    if eigval.min() < -1e-8 * max(eigval.max(), 1.0):
        raise ModelError("covariance is not positive semidefinite")
    return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def sample_coefficients(cov: np.ndarray, size: int, rng) -> np.ndarray:
    """(size, dim) Gaussian coefficient draws with covariance `cov`."""
    rng = np.random.default_rng(rng)
    factor = _gaussian_factor(cov)
    return rng.standard_normal((size, cov.shape[0])) @ factor.T


def synthesize(coeffs: np.ndarray, m_terms: int, grid: np.ndarray) -> np.ndarray:
    """Turn stacked coefficient vectors (..., (b+1)*M) into grid curves
    (..., b+1, len(grid))."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_comp = coeffs.shape[-1] // m_terms
    shaped = coeffs.reshape(*coeffs.shape[:-1], n_comp, m_terms)
    return shaped @ sine_matrix(m_terms, grid)


def sample_gaussian_state(
    cov: np.ndarray, m_terms: int, grid: np.ndarray, rng
) -> ExtendedState:
    """One Gaussian extended state: coefficient draw plus sine synthesis."""
    coeffs = sample_coefficients(cov, 1, rng)[0]
    return ExtendedState(synthesize(coeffs, m_terms, grid))


def spectral_radius_check(spec_or_matrix, j_max: int = 20) -> dict:
    """Operator norms of the transition powers in the coefficient l2 proxy.

    Returns {"j0": first power with norm < 1 (or None), "norms": array}.
    """
    if isinstance(spec_or_matrix, ModelSpec):
        transition = spec_or_matrix.autocorrelation.transition
    elif isinstance(spec_or_matrix, BlockOperator):
        transition = spec_or_matrix.transition
    else:
        transition = np.asarray(spec_or_matrix, dtype=float)
    norms = []
    j0 = None
    power = np.eye(transition.shape[0])
    for j in range(1, j_max + 1):
        power = power @ transition
        norms.append(float(np.linalg.norm(power, 2)))
        if j0 is None and norms[-1] < 1.0:
            j0 = j
    return {"j0": j0, "norms": np.asarray(norms)}


def simulate(spec: ModelSpec, n: int, burn_in: int = 200, rng=0) -> Trajectory:
    """Simulate n extended states of the ARBX(1) recursion.

    The initial state is drawn from the state covariance, innovations from the
    innovation covariance; the first `burn_in` states are discarded.  With
    burn_in=0 the first returned state is the initial draw itself.
    """
    if n < 1:
        raise ConfigError("need n >= 1 states")
    if burn_in < 0:
        raise ConfigError("burn_in must be >= 0")
    j0 = spec.stationarity_j0
    if j0 is None:
        j0 = spectral_radius_check(spec)["j0"]
    if j0 is None:
        raise ModelError(
            "transition operator has no power with norm < 1: non-stationary model"
        )
    rng = np.random.default_rng(rng)
    dim = spec.dim
    transition = spec.autocorrelation.transition
    init = _gaussian_factor(spec.state_covariance) @ rng.standard_normal(dim)
    total = n + burn_in
    innov = rng.standard_normal((total - 1, dim)) @ _gaussian_factor(
        spec.innovation_covariance
    ).T

    path = np.empty((total, dim))
    path[0] = init
    current = init
    for t in range(1, total):
        current = transition @ current + innov[t - 1]
        path[t] = current
    kept = path[burn_in:]
    grid = spec.grid
    states = synthesize(kept, spec.m_terms, grid)
    return Trajectory(states=states, coeffs=kept, grid=grid, spec=spec)
