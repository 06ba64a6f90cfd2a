"""Daubechies wavelet bases on [0,1] and curve analysis/synthesis.

The basis is generated by the cascade (successive refinement) algorithm from
the Daubechies low-pass filter, periodized onto [0,1] and normalized in the
discrete L2 norm of the working grid.  Coefficients are computed by
trapezoidal quadrature against the stored basis functions instead of pyramid
filtering, so curves may live on any uniform grid (after resampling the basis
onto it), not only dyadic ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import comb

from .errors import ConfigError, DimensionError

__all__ = [
    "WaveletBasis",
    "WaveletDecomposition",
    "build_basis",
    "daubechies_filter",
    "decompose",
    "decompose_batch",
    "reconstruct",
    "reconstruct_batch",
    "resample_basis",
]


def daubechies_filter(order: int) -> np.ndarray:
    """Low-pass refinement filter of the Daubechies wavelet with `order`
    vanishing moments (extremal phase, length 2*order, sum = sqrt(2)).

    Built by spectral factorization: roots of the Bernstein-type polynomial
    P(y) = sum_k C(order-1+k, k) y^k are mapped to z-plane roots, the root
    inside the unit circle is kept from each pair, and the minimal-phase
    factor is combined with ((1+z)/2)^order.
    """
    if order == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    p_coef = [float(comb(order - 1 + k, k, exact=True)) for k in range(order)]
    y_roots = np.roots(p_coef[::-1])
    lowpass = np.poly1d([0.5, 0.5]) ** order
    for y in y_roots:
        # z + 1/z = 2 - 4y; keep the root inside the unit circle
        b = 2.0 - 4.0 * y
        disc = np.sqrt(b * b - 4.0 + 0j)
        z = (b + disc) / 2.0
        if abs(z) > 1.0:
            z = (b - disc) / 2.0
        lowpass = lowpass * np.poly1d([1.0, -z])
    h = np.real(lowpass.coeffs)
    h *= np.sqrt(2.0) / h.sum()
    # extremal-phase convention: energy concentrated at the leading taps
    if abs(h[0]) < abs(h[-1]):
        h = h[::-1]
    return h


def _scaling_tables(h: np.ndarray, refinements: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact dyadic samples of the father and mother wavelet on their support.

    Returns (father, mother, step) where both arrays sample [0, 2N-1] at
    spacing `step` = 2**-refinements.  The integer samples of the father
    solve the refinement eigenproblem; each cascade pass then doubles the
    resolution exactly.
    """
    n_taps = len(h)
    support = n_taps - 1
    # phi(k) = sqrt(2) * sum_j h_j phi(2k - j): eigenvector of T for eigenvalue 1
    t_mat = np.zeros((support + 1, support + 1))
    for k in range(support + 1):
        for m in range(support + 1):
            j = 2 * k - m
            if 0 <= j < n_taps:
                t_mat[k, m] = np.sqrt(2.0) * h[j]
    eigvals, eigvecs = np.linalg.eig(t_mat)
    idx = int(np.argmin(np.abs(eigvals - 1.0)))
    phi = np.real(eigvecs[:, idx])
    phi /= phi.sum()

    def refine(values: np.ndarray, level: int) -> np.ndarray:
        step = 2**level
        out = np.zeros(support * 2 * step + 1)
        for j in range(n_taps):
            out[j * step : j * step + len(values)] += np.sqrt(2.0) * h[j] * values
        return out

    for level in range(refinements):
        phi = refine(phi, level)

    # psi from the second-finest father table: psi(x) = sqrt(2) sum g_j phi(2x - j)
    g = h[::-1].copy()
    g[1::2] *= -1.0
    coarse_step = 2 ** (refinements - 1)
    coarse_len = support * coarse_step + 1
    coarse = phi[::2][:coarse_len] if refinements >= 1 else phi
    psi = np.zeros(support * 2 * coarse_step + 1)
    for j in range(n_taps):
        psi[j * coarse_step : j * coarse_step + coarse_len] += np.sqrt(2.0) * g[j] * coarse
    return phi, psi, 2.0**-refinements


def _periodized_rows(
    table: np.ndarray, step: float, level: int, grid: np.ndarray, support: float
) -> np.ndarray:
    """Sample all 2**level periodized translates 2^(level/2) w(2^level x - k)
    of the tabulated wavelet w on `grid`, one row per translate."""
    n_trans = 2**level
    xs = np.arange(len(table)) * step
    rows = np.empty((n_trans, len(grid)))
    scale = 2.0 ** (level / 2.0)
    base = 2.0**level * grid
    for k in range(n_trans):
        acc = np.zeros(len(grid))
        l_min = int(np.floor((k - base.max()) / n_trans))
        l_max = int(np.ceil((k + support - base.min()) / n_trans))
        for l in range(l_min, l_max + 1):
            arg = base + l * n_trans - k
            mask = (arg >= 0.0) & (arg <= support)
            if mask.any():
                acc[mask] += np.interp(arg[mask], xs, table)
        rows[k] = scale * acc
    return rows


def trapezoid_weights(n_points: int) -> np.ndarray:
    """Trapezoidal quadrature weights for a uniform inclusive grid on [0,1]."""
    if n_points < 2:
        raise ConfigError("quadrature grid needs at least 2 points")
    w = np.full(n_points, 1.0 / (n_points - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class WaveletDecomposition:
    """Wavelet coefficients of one curve: scaling block `alpha` (2^J entries)
    and detail blocks `beta[j-J]` (2^j entries each) for j = J..K."""

    alpha: np.ndarray
    beta: tuple[np.ndarray, ...]

    @property
    def n_total(self) -> int:
        return len(self.alpha) + sum(len(b) for b in self.beta)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.alpha, *self.beta])

    @classmethod
    def from_flat(cls, flat: np.ndarray, primary_level: int, last_level: int) -> "WaveletDecomposition":
        flat = np.asarray(flat, dtype=float)
        sizes = [2**primary_level] + [2**j for j in range(primary_level, last_level + 1)]
        if len(flat) != sum(sizes):
            raise DimensionError(
                f"flat vector of length {len(flat)} does not match levels "
                f"J={primary_level}..K={last_level} ({sum(sizes)} coefficients)"
            )
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        return cls(alpha=parts[0], beta=tuple(parts[1:]))


@dataclass(frozen=True)
class WaveletBasis:
    """Periodized Daubechies basis sampled on a uniform inclusive grid on [0,1].

    `matrix` stacks all basis functions row-wise in coefficient order
    [alpha_(J,0..2^J-1), beta_(J,.), ..., beta_(K,.)]; every row has unit
    discrete L2 norm on `grid`.
    """

    order: int
    grid_levels: int
    primary_level: int
    last_level: int
    grid: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return len(self.grid)

    @property
    def n_coefficients(self) -> int:
        return self.matrix.shape[0]

    @property
    def father(self) -> np.ndarray:
        """Rows of the scaling functions phi_(J,k)."""
        return self.matrix[: 2**self.primary_level]

    def mother(self, j: int) -> np.ndarray:
        """Rows of the detail functions psi_(j,k) for one level j."""
        if not self.primary_level <= j <= self.last_level:
            raise ConfigError(f"level {j} outside {self.primary_level}..{self.last_level}")
        start = 2**self.primary_level
        for level in range(self.primary_level, j):
            start += 2**level
        return self.matrix[start : start + 2**j]

    @property
    def quadrature(self) -> np.ndarray:
        """(n_points, n_coefficients) matrix turning curve samples into
        coefficients: coeffs = values @ quadrature."""
        return (self.matrix * trapezoid_weights(self.n_points)).T

    def level_sizes(self) -> list[int]:
        return [2**self.primary_level] + [
            2**j for j in range(self.primary_level, self.last_level + 1)
        ]


def build_basis(
    order: int,
    grid_levels: int,
    primary_level: int = 2,
    last_level: int = 6,
    refinements: int = 14,
) -> WaveletBasis:
    """Generate the periodized Daubechies basis (father level J, details J..K)
    on the 2**grid_levels-point uniform grid over [0,1].

    The optimality constraint K < grid_levels/2 (K below the log2 square root
    of the number of grid points) and the minimum primary level J >= 1 are
    enforced here.
    """
    if not 2 <= order <= 20:
        raise ConfigError(f"Daubechies order must lie in [2, 20], got {order}")
    if primary_level < 1:
        raise ConfigError("primary level must be >= 1 (2^J >= 2 required)")
    if last_level < primary_level:
        raise ConfigError("last level must be >= primary level")
    if not last_level < grid_levels / 2.0:
        raise ConfigError(
            f"last level K={last_level} violates K < L/2 with L={grid_levels}"
        )
    if 2**grid_levels < 4 * order:
        raise ConfigError(
            f"grid of 2^{grid_levels} points too coarse for a length-{2 * order} filter"
        )
    if refinements < 10:
        raise ConfigError("cascade needs at least 10 refinement iterations")

    h = daubechies_filter(order)
    support = float(len(h) - 1)
    father_tab, mother_tab, step = _scaling_tables(h, refinements)

    n_points = 2**grid_levels
    grid = np.linspace(0.0, 1.0, n_points)
    rows = [_periodized_rows(father_tab, step, primary_level, grid, support)]
    for j in range(primary_level, last_level + 1):
        rows.append(_periodized_rows(mother_tab, step, j, grid, support))
    matrix = np.vstack(rows)

    w = trapezoid_weights(n_points)
    norms = np.sqrt((matrix**2 * w).sum(axis=1))
    matrix = matrix / norms[:, None]
    return WaveletBasis(
        order=order,
        grid_levels=grid_levels,
        primary_level=primary_level,
        last_level=last_level,
        grid=grid,
        matrix=matrix,
    )


def decompose_batch(values: np.ndarray, basis: WaveletBasis) -> np.ndarray:
    """Coefficients of many curves at once; rows are curves on the basis grid."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[1] != basis.n_points:
        raise DimensionError(
            f"curves have {values.shape[1]} points, basis grid has {basis.n_points}; "
            "resample the basis first"
        )
    return values @ basis.quadrature


def decompose(curve: np.ndarray, basis: WaveletBasis) -> WaveletDecomposition:
    """Wavelet analysis of one curve by quadrature against the stored basis."""
    flat = decompose_batch(curve, basis)[0]
    return WaveletDecomposition.from_flat(flat, basis.primary_level, basis.last_level)


def reconstruct_batch(coeffs: np.ndarray, basis: WaveletBasis) -> np.ndarray:
    """Synthesize curves from rows of flat coefficient vectors."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if coeffs.shape[1] != basis.n_coefficients:
        raise DimensionError(
            f"{coeffs.shape[1]} coefficients do not match basis size {basis.n_coefficients}"
        )
    return coeffs @ basis.matrix


def reconstruct(coeffs: WaveletDecomposition, basis: WaveletBasis) -> np.ndarray:
    """Synthesize sum_k alpha_k phi_(J,k) + sum_(j,k) beta_(j,k) psi_(j,k) on the grid."""
    if coeffs.n_total != basis.n_coefficients:
        raise DimensionError(
            f"decomposition with {coeffs.n_total} coefficients does not match "
            f"basis size {basis.n_coefficients}"
        )
    return reconstruct_batch(coeffs.flatten(), basis)[0]


def resample_basis(basis: WaveletBasis, target_grid_size: int) -> WaveletBasis:
    """Natural-cubic-spline interpolation of every basis function onto a
    uniform inclusive grid of `target_grid_size` points, then discrete-L2
    renormalization there."""
    if target_grid_size < 2:
        raise ConfigError("target grid needs at least 2 points")
    new_grid = np.linspace(0.0, 1.0, target_grid_size)
    spline = CubicSpline(basis.grid, basis.matrix, axis=1, bc_type="natural")
    matrix = spline(new_grid)
    w = trapezoid_weights(target_grid_size)
    norms = np.sqrt((matrix**2 * w).sum(axis=1))
    norms[norms == 0.0] = 1.0
    matrix = matrix / norms[:, None]
    return WaveletBasis(
        order=basis.order,
        grid_levels=basis.grid_levels,
        primary_level=basis.primary_level,
        last_level=basis.last_level,
        grid=new_grid,
        matrix=matrix,
    )
