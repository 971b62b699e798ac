"""Quadrature-basis transforms and Gaussian covariance propagation.

A scattering matrix with particle-hole structure becomes a real matrix in
the per-mode quadrature basis ``x = (a + a*)/sqrt(2)``,
``p = (a - a*)/(sqrt(2) i)``; for the lossless single-port model it is
symplectic there.  Gaussian states then propagate by congruence of their
covariance matrix, which this module computes both analytically and by
seeded Monte Carlo sampling.

Monte Carlo draws use numpy's PCG64 generator (``default_rng``), so results
are reproducible across platforms for a fixed seed.  Sampling may be
partitioned across threads by deriving per-thread seeds from the base seed
and combining the results sample-weighted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasisInconsistencyError, InvalidArgumentError
from .model import ModeGrid
from .scattering import ScatteringMatrix

# Variance of each vacuum quadrature in natural units: the quantum of
# fluctuation is absorbed here, so sampled processes have std 1/sqrt(2).
VACUUM_SCALE = 0.5

IMAG_RESIDUAL_TOL = 1e-9

# Per-mode canonical map from (a, a*) to (x, p).
_U2 = np.array([[1.0, 1.0], [-1.0j, 1.0j]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureScattering:
    """Scattering matrix in the interleaved quadrature basis (x, p per mode).

    ``imag_residual`` records the largest imaginary part discarded when
    projecting to a real matrix; it stays far below tolerance whenever the
    source matrix has proper particle-hole structure.
    """

    matrix: np.ndarray
    grid: ModeGrid
    imag_residual: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric positive-semidefinite quadrature covariance matrix."""

    matrix: np.ndarray
    vacuum_scale: float = VACUUM_SCALE

    def __post_init__(self):
        v = np.asarray(self.matrix, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InvalidArgumentError("covariance matrix must be square")
        sym_defect = float(np.max(np.abs(v - v.T))) if v.size else 0.0
        if sym_defect > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
            raise InvalidArgumentError(f"covariance not symmetric (defect {sym_defect:.2e})")
        min_eig = float(np.min(np.linalg.eigvalsh(v))) if v.size else 0.0
        if min_eig < -1e-10 * max(1.0, float(np.max(np.abs(v)))):
            raise InvalidArgumentError(f"covariance not PSD (min eigenvalue {min_eig:.2e})")
        v.flags.writeable = False
        object.__setattr__(self, "matrix", v)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


def quadrature_transform(n_modes: int) -> np.ndarray:
    """Block-diagonal unitary mapping the interleaved (a, a*) basis to (x, p)."""
    return np.kron(np.eye(n_modes), _U2)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form, one 2x2 rotation generator per mode."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def to_quadrature(
    s: ScatteringMatrix, tol: float = IMAG_RESIDUAL_TOL
) -> QuadratureScattering:
    """Express a scattering matrix in the quadrature basis.

    Computes ``U S U+`` with the per-mode canonical block and keeps the real
    part.  A residual imaginary part above ``tol`` means the input lacks
    particle-hole structure (malformed basis), which raises.
    """
    u = quadrature_transform(s.n_modes)
    sx = u @ s.matrix @ u.conj().T
    residual = float(np.max(np.abs(sx.imag)))
    if residual > tol:
        raise BasisInconsistencyError(
            f"imaginary residual {residual:.3e} exceeds {tol:.1e}: "
            "input is not a particle-hole symmetric scattering matrix"
        )
    return QuadratureScattering(matrix=sx.real, grid=s.grid, imag_residual=residual)


def symplectic_defect(sx: QuadratureScattering) -> float:
    """Max-norm of ``Sx O Sx^T - O`` against the symplectic form ``O``."""
    omega = symplectic_form(sx.grid.n_modes)
    return float(np.max(np.abs(sx.matrix @ omega @ sx.matrix.T - omega)))


def vacuum_covariance(grid: ModeGrid, vacuum_scale: float = VACUUM_SCALE) -> CovarianceMatrix:
    """Uncorrelated vacuum input: ``vacuum_scale`` times the identity."""
    return CovarianceMatrix(vacuum_scale * np.eye(2 * grid.n_modes), vacuum_scale)


def propagate_covariance(
    sx: QuadratureScattering, v_in: CovarianceMatrix
) -> CovarianceMatrix:
    """Propagate a covariance through the scattering: ``Sx V Sx^T``.

    Symmetry is enforced by averaging with the transpose after the product,
    guarding against accumulation of rounding asymmetry.
    """
    if v_in.matrix.shape != sx.matrix.shape:
        raise InvalidArgumentError("covariance and scattering dimensions differ")
    v = sx.matrix @ v_in.matrix @ sx.matrix.T
    v = 0.5 * (v + v.T)
    return CovarianceMatrix(v, v_in.vacuum_scale)


def sample_covariance(
    sx: QuadratureScattering,
    sample_count: int,
    seed: int,
    vacuum_scale: float = VACUUM_SCALE,
    chunk_size: int = 16384,
) -> CovarianceMatrix:
    """Estimate the output covariance by Monte Carlo vacuum sampling.

    Draws ``sample_count`` i.i.d. quadrature vectors of independent
    zero-mean Gaussians with standard deviation ``sqrt(vacuum_scale)``,
    maps each through the quadrature scattering matrix, and returns the
    empirical (mean-subtracted, unbiased) covariance.  Bit-identical for a
    fixed seed.
    """
    if sample_count < 2:
        raise InvalidArgumentError("sample_count must be at least 2")
    rng = np.random.default_rng(seed)
    dim = sx.matrix.shape[0]
    std = np.sqrt(vacuum_scale)
    total = np.zeros(dim)
    products = np.zeros((dim, dim))
    drawn = 0
    while drawn < sample_count:
        count = min(chunk_size, sample_count - drawn)
        out = rng.normal(0.0, std, size=(count, dim)) @ sx.matrix.T
        total += out.sum(axis=0)
        products += out.T @ out
        drawn += count
    mean = total / sample_count
    v = (products - sample_count * np.outer(mean, mean)) / (sample_count - 1)
    v = 0.5 * (v + v.T)
    return CovarianceMatrix(v, vacuum_scale)


def block_magnitudes(matrix: np.ndarray) -> np.ndarray:
    """Mode-level reduction: max absolute entry of each per-mode 2x2 block."""
    m = np.asarray(matrix)
    n = m.shape[0] // 2
    return np.abs(m).reshape(n, 2, n, 2).max(axis=(1, 3))


def connectivity_pattern(matrix: np.ndarray, relative_threshold: float = 1e-2) -> np.ndarray:
    """Boolean mode-connectivity pattern of a matrix in an interleaved basis.

    Reduces to per-mode-pair block magnitudes, zeroes the diagonal, and
    thresholds at ``relative_threshold`` times the largest off-diagonal
    block.  Used to compare the connectivity of scattering and covariance
    matrices on an equal footing.
    """
    blocks = block_magnitudes(matrix)
    np.fill_diagonal(blocks, 0.0)
    peak = float(blocks.max())
    if peak == 0.0:
        return np.zeros_like(blocks, dtype=bool)
    return blocks >= relative_threshold * peak
