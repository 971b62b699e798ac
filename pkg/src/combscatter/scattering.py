"""Harmonic-balance system assembly and scattering-matrix computation.

The linearized equations of motion for the comb amplitudes close into a
``2n x 2n`` linear system over the interleaved vector
``(a_-J, a*_-J, ..., a_J, a*_J)``.  Inverting it and applying the
input-output matching condition yields the scattering matrix; magnitudes
are reported in dB relative to the pump-off reflection.

Pure functions on immutable inputs; independent scheme evaluations (phase
sweeps, fit grids) can run in parallel with no shared state.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import (
    AboveThresholdError,
    DegenerateNormalizationError,
    InternalConsistencyError,
    InvalidArgumentError,
)
from .model import CouplingSet, DeviceParams, ModeGrid, PumpScheme, resolve_couplings

# Condition estimates beyond this default mark the system as effectively
# singular: the pump has reached the parametric oscillation threshold and
# the linearized model no longer applies.
DEFAULT_CONDITION_CAP = 1e12

# Magnitudes below 1e-12 clamp to -240 dB so text outputs stay finite.
DB_FLOOR = -240.0
_DB_FLOOR_AMPLITUDE = 10.0 ** (DB_FLOOR / 20.0)


class Normalization(enum.Enum):
    RAW = "raw"
    PUMP_OFF_RELATIVE = "pump_off_relative"


@dataclass(frozen=True)
class SystemMatrix:
    """Coefficient matrix of the harmonic-balance system.

    ``matrix`` holds the left-hand-side coefficients in the interleaved
    basis: the row of a mode amplitude carries ``i*(w0 - w_i) + gamma/2``
    on the diagonal (detuning convention) and ``-i * strength`` in the
    conjugate column of every coupled partner; conjugate-amplitude rows are
    the complex-conjugate mirrors, so the whole matrix satisfies the
    particle-hole symmetry ``M = Sx conj(M) Sx`` with ``Sx`` the per-mode
    swap of each interleaved pair.  ``k_coupling`` is the constant diagonal
    of the mode/transmission-line coupling matrix, ``sqrt(gamma)``.
    """

    matrix: np.ndarray
    k_coupling: float
    grid: ModeGrid

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class ScatteringMatrix:
    """Input-output scattering matrix in the interleaved (a, a*) basis."""

    matrix: np.ndarray
    grid: ModeGrid
    normalization: Normalization = Normalization.RAW
    condition_estimate: float = float("nan")

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=complex)
        s.flags.writeable = False
        object.__setattr__(self, "matrix", s)

    @property
    def n_modes(self) -> int:
        return self.grid.n_modes


def particle_hole_swap(n_modes: int) -> np.ndarray:
    """Permutation that swaps each (a, a*) pair of the interleaved basis."""
    swap = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        swap[2 * k, 2 * k + 1] = 1.0
        swap[2 * k + 1, 2 * k] = 1.0
    return swap


def particle_hole_defect(matrix: np.ndarray) -> float:
    """Max-norm violation of ``M = Sx conj(M) Sx``."""
    m = np.asarray(matrix)
    swap = particle_hole_swap(m.shape[0] // 2)
    return float(np.max(np.abs(m - swap @ np.conj(m) @ swap)))


def assemble_system(
    grid: ModeGrid, params: DeviceParams, couplings: CouplingSet
) -> SystemMatrix:
    """Build the harmonic-balance coefficient matrix.

    Each mode contributes a 2x2 diagonal block with detuning and damping;
    each coupling entry populates the amplitude-to-conjugate positions of
    its pair (both orientations) and their conjugate mirrors.  A coupling
    referencing an index off the grid is an internal inconsistency, not a
    user error.
    """
    n = grid.n_modes
    gamma = params.port_coupling
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in grid.indices:
        detuning = params.resonance_frequency - grid.frequency(j)
        m[grid.a_slot(j), grid.a_slot(j)] = 1j * detuning + gamma / 2.0
        m[grid.a_conj_slot(j), grid.a_conj_slot(j)] = -1j * detuning + gamma / 2.0
    for entry in couplings:
        if not (grid.contains(entry.i) and grid.contains(entry.j)):
            raise InternalConsistencyError(
                f"coupling ({entry.i}, {entry.j}) references a mode outside the grid"
            )
        off = -1j * entry.strength
        m[grid.a_slot(entry.i), grid.a_conj_slot(entry.j)] += off
        m[grid.a_conj_slot(entry.i), grid.a_slot(entry.j)] += np.conj(off)
        if entry.i != entry.j:
            m[grid.a_slot(entry.j), grid.a_conj_slot(entry.i)] += off
            m[grid.a_conj_slot(entry.j), grid.a_slot(entry.i)] += np.conj(off)
    return SystemMatrix(matrix=m, k_coupling=float(np.sqrt(gamma)), grid=grid)


def scattering_matrix(
    system: SystemMatrix, condition_cap: float = DEFAULT_CONDITION_CAP
) -> ScatteringMatrix:
    """Invert the harmonic-balance system into a scattering matrix.

    Uses a dense LU factorization with partial pivoting plus the cheap
    LAPACK reciprocal-condition estimate.  A condition estimate above
    ``condition_cap`` (or an outright singular factorization) means the
    pump has reached the parametric oscillation threshold, where the
    weak-pump linearization is invalid; that raises rather than returning
    garbage.

    With the coupling matrix a constant ``sqrt(gamma)`` on the diagonal,
    the input-output relation reduces to ``S = gamma * M^-1 - I`` for the
    stored coefficient matrix (the conventional factor of i is absorbed in
    the stored rows).
    """
    m = system.matrix
    anorm = np.linalg.norm(m, 1)
    with warnings.catch_warnings():
        # singularity is detected through the condition estimate below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0:
        raise InternalConsistencyError(f"condition estimator failed (info={info})")
    cond = np.inf if rcond == 0.0 else 1.0 / float(rcond)
    if not np.isfinite(cond) or cond > condition_cap:
        raise AboveThresholdError(
            "parametric oscillation threshold reached: system condition estimate "
            f"{cond:.3e} exceeds cap {condition_cap:.1e}",
            condition_estimate=cond,
        )
    gamma = system.k_coupling**2
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(m.shape[0], dtype=complex), check_finite=False)
    s = gamma * inv - np.eye(m.shape[0], dtype=complex)
    return ScatteringMatrix(
        matrix=s, grid=system.grid, normalization=Normalization.RAW, condition_estimate=cond
    )


def simulate_scattering(
    grid: ModeGrid,
    params: DeviceParams,
    scheme: PumpScheme,
    condition_cap: float = DEFAULT_CONDITION_CAP,
) -> ScatteringMatrix:
    """Resolve couplings, assemble, and invert in one step."""
    couplings = resolve_couplings(grid, scheme, params)
    return scattering_matrix(assemble_system(grid, params, couplings), condition_cap)


def pump_off_scattering(grid: ModeGrid, params: DeviceParams) -> ScatteringMatrix:
    """Scattering with all pumps off: diagonal all-pass reflection."""
    return scattering_matrix(assemble_system(grid, params, CouplingSet()))


def magnitude_db(values: np.ndarray) -> np.ndarray:
    """20*log10 magnitude with the clamp floor applied."""
    return 20.0 * np.log10(np.maximum(np.abs(values), _DB_FLOOR_AMPLITUDE))


def normalize_pump_off(s_on: ScatteringMatrix, s_off: ScatteringMatrix) -> np.ndarray:
    """Express scattering magnitudes in dB relative to the pump-off case.

    Entry ``(i, j)`` becomes ``20*log10(|S_on[i, j]| / |S_off[j, j]|)``:
    each column is referenced to the pump-off reflection magnitude of the
    driven mode.  In the lossless single-port model the reference is
    exactly 1 and the result equals the raw dB magnitude.
    """
    if s_on.grid != s_off.grid:
        raise InternalConsistencyError("pump-on and pump-off matrices use different grids")
    ref = np.abs(np.diag(s_off.matrix))
    if np.any(ref < 1e-12):
        raise DegenerateNormalizationError(
            "pump-off reflection vanishes on some mode; cannot normalize"
        )
    return magnitude_db(s_on.matrix / ref[np.newaxis, :])


def pump_off_normalized_db(
    grid: ModeGrid,
    params: DeviceParams,
    scheme: PumpScheme,
    condition_cap: float = DEFAULT_CONDITION_CAP,
) -> np.ndarray:
    """Simulate a scheme and normalize it to its own pump-off reference."""
    s_on = simulate_scattering(grid, params, scheme, condition_cap)
    s_off = pump_off_scattering(grid, params)
    return normalize_pump_off(s_on, s_off)


def scale_for_ratio(ratio: float, params: DeviceParams) -> float:
    """Tone amplitude giving the dimensionless strength ratio.

    ``ratio`` is the identifiable combination (resonance frequency times
    complex-strength magnitude over port coupling); the returned amplitude
    is twice the complex-strength magnitude.
    """
    if ratio < 0:
        raise InvalidArgumentError("ratio must be non-negative")
    return 2.0 * ratio * params.port_coupling / params.resonance_frequency
