"""System assembly, inversion, pump-off normalization."""

import numpy as np
import pytest

from combscatter import (
    AboveThresholdError,
    Coupling,
    CouplingSet,
    DegenerateNormalizationError,
    DeviceParams,
    InternalConsistencyError,
    ModeGrid,
    PumpScheme,
    assemble_system,
    normalize_pump_off,
    particle_hole_defect,
    pump_off_scattering,
    resolve_couplings,
    scattering_matrix,
    simulate_scattering,
)
from combscatter.scattering import Normalization, ScatteringMatrix
from conftest import COUPLING, RESONANCE, TWO_PI, analytic_two_mode_block, balanced_scheme


def random_scheme(rng, max_ratio=0.1):
    count = int(rng.integers(1, 5))
    offsets = rng.choice(np.arange(-8, 9), size=count, replace=False)
    tones = balanced_scheme(
        DeviceParams(RESONANCE, COUPLING), [int(o) for o in offsets], 1.0
    ).tones
    from combscatter import PumpTone

    out = []
    for t in tones:
        ratio = float(rng.uniform(0.01, max_ratio))
        amp = 2.0 * ratio * COUPLING / RESONANCE
        out.append(PumpTone(t.offset, amp, float(rng.uniform(0, TWO_PI))))
    return PumpScheme(tuple(out))


class TestAssemble:
    def test_zero_pump_system_is_diagonal(self, grid, device):
        system = assemble_system(grid, device, CouplingSet())
        off_diag = system.matrix - np.diag(np.diag(system.matrix))
        assert np.all(off_diag == 0)
        assert system.k_coupling == pytest.approx(np.sqrt(device.port_coupling))

    def test_diagonal_follows_detuning_convention(self, grid, device):
        system = assemble_system(grid, device, CouplingSet())
        j = 13
        detuning = device.resonance_frequency - grid.frequency(j)
        expected = 1j * detuning + device.port_coupling / 2
        assert system.matrix[grid.a_slot(j), grid.a_slot(j)] == expected
        assert system.matrix[grid.a_conj_slot(j), grid.a_conj_slot(j)] == np.conj(expected)

    def test_particle_hole_structure_exact(self, grid, device):
        rng = np.random.default_rng(3)
        for _ in range(5):
            scheme = random_scheme(rng)
            system = assemble_system(grid, device, resolve_couplings(grid, scheme, device))
            assert particle_hole_defect(system.matrix) == 0.0

    def test_coupling_outside_grid_rejected(self, grid, device):
        bad = CouplingSet((Coupling(0, 48, 1.0 + 0j),))
        with pytest.raises(InternalConsistencyError):
            assemble_system(grid, device, bad)

    def test_coupling_entry_orientation(self, grid, device):
        strength = 2.0e8 * np.exp(0.3j)
        system = assemble_system(grid, device, CouplingSet((Coupling(1, 3, strength),)))
        assert system.matrix[grid.a_slot(1), grid.a_conj_slot(3)] == -1j * strength
        assert system.matrix[grid.a_slot(3), grid.a_conj_slot(1)] == -1j * strength
        assert system.matrix[grid.a_conj_slot(1), grid.a_slot(3)] == np.conj(-1j * strength)

    def test_degenerate_coupling_populates_cross_entry_once(self, grid, device):
        strength = 1.0e8 + 0j
        system = assemble_system(grid, device, CouplingSet((Coupling(2, 2, strength),)))
        assert system.matrix[grid.a_slot(2), grid.a_conj_slot(2)] == -1j * strength


class TestScatteringMatrix:
    def test_pump_off_all_pass(self, grid, device):
        s = pump_off_scattering(grid, device)
        diag = np.abs(np.diag(s.matrix))
        assert np.max(np.abs(diag - 1.0)) < 1e-10
        off = s.matrix - np.diag(np.diag(s.matrix))
        assert np.max(np.abs(off)) < 1e-10

    def test_two_mode_oracle_50_random_triples(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(50):
            gamma = TWO_PI * 10 ** rng.uniform(6.5, 8.8)
            spacing = gamma * 10 ** rng.uniform(-4, -0.7)
            threshold = np.sqrt(spacing**2 + gamma**2 / 4)
            magnitude = rng.uniform(0.05, 0.8) * threshold
            strength = magnitude * np.exp(1j * rng.uniform(0, TWO_PI))
            grid = ModeGrid(RESONANCE, spacing, 1)
            device = DeviceParams(RESONANCE, gamma)
            system = assemble_system(
                grid, device, CouplingSet((Coupling(-1, 1, strength),))
            )
            s = scattering_matrix(system).matrix
            s_ii, s_ij, s_ji, s_jj = analytic_two_mode_block(
                spacing, -spacing, gamma, strength
            )
            scale = max(abs(s_ii), abs(s_ij))
            err = max(
                abs(s[grid.a_slot(-1), grid.a_slot(-1)] - s_ii),
                abs(s[grid.a_slot(-1), grid.a_conj_slot(1)] - s_ij),
                abs(s[grid.a_conj_slot(1), grid.a_slot(-1)] - s_ji),
                abs(s[grid.a_conj_slot(1), grid.a_conj_slot(1)] - s_jj),
            )
            worst = max(worst, err / scale)
        assert worst < 1e-12

    def test_signal_gain_minus_idler_gain_is_unity(self, grid, device):
        # Bogoliubov relation of the lossless model, mode pair (28, -28)
        scheme = balanced_scheme(device, [0], 0.2)
        s = simulate_scattering(grid, device, scheme).matrix
        gain = abs(s[grid.a_slot(28), grid.a_slot(28)]) ** 2
        idler = abs(s[grid.a_slot(28), grid.a_conj_slot(-28)]) ** 2
        assert gain - idler == pytest.approx(1.0, rel=1e-10)

    def test_driven_column_dominated_by_direct_idlers(self, grid, device):
        # driving mode 28 of the three-pump scheme, the three strongest
        # off-diagonal responses are the directly pumped partners
        scheme = balanced_scheme(device, [-4, 0, 4], 0.085)
        s = simulate_scattering(grid, device, scheme).matrix
        column = np.abs(s[:, grid.a_slot(28)])
        column[grid.a_slot(28)] = 0.0  # drop the reflection
        top_rows = np.argsort(column)[-3:]
        expected = {grid.a_conj_slot(m) for m in (-32, -28, -24)}
        assert set(top_rows.tolist()) == expected

    def test_particle_hole_structure_of_s(self, grid, device):
        rng = np.random.default_rng(7)
        for _ in range(5):
            s = simulate_scattering(grid, device, random_scheme(rng))
            assert particle_hole_defect(s.matrix) < 1e-10

    def test_zero_amplitude_recovers_pump_off_exactly(self, grid, device):
        scheme = balanced_scheme(device, [-4, 0, 4], 0.0)
        s_zero = simulate_scattering(grid, device, scheme)
        s_off = pump_off_scattering(grid, device)
        assert np.array_equal(s_zero.matrix, s_off.matrix)

    def test_construction_is_order_independent(self, grid, device):
        scheme = balanced_scheme(device, [-4, 0, 4], 0.07)
        couplings = resolve_couplings(grid, scheme, device)
        shuffled = list(couplings.entries)
        np.random.default_rng(0).shuffle(shuffled)
        a = assemble_system(grid, device, couplings).matrix
        b = assemble_system(grid, device, CouplingSet(tuple(shuffled))).matrix
        assert np.array_equal(a, b)

    def test_global_pump_phase_leaves_magnitudes_invariant(self, grid, device):
        base = balanced_scheme(device, [-4, 0, 4], 0.085, [0.3, 1.1, 2.0])
        delta = 0.77
        shifted = PumpScheme(
            tuple(
                type(t)(t.offset, t.amplitude, t.phase + delta) for t in base.tones
            )
        )
        s0 = simulate_scattering(grid, device, base).matrix
        s1 = simulate_scattering(grid, device, shifted).matrix
        assert np.max(np.abs(np.abs(s0) - np.abs(s1))) < 1e-10

    def test_single_pump_phase_invariance(self, grid, device):
        a = simulate_scattering(grid, device, balanced_scheme(device, [0], 0.085, [0.0]))
        b = simulate_scattering(grid, device, balanced_scheme(device, [0], 0.085, [2.4]))
        assert np.max(np.abs(np.abs(a.matrix) - np.abs(b.matrix))) < 1e-10

    def test_two_pump_relative_phase_invariance(self, grid, device):
        a = simulate_scattering(
            grid, device, balanced_scheme(device, [-2, 2], 0.085, [0.0, 0.0])
        )
        b = simulate_scattering(
            grid, device, balanced_scheme(device, [-2, 2], 0.085, [0.0, 1.9])
        )
        assert np.max(np.abs(np.abs(a.matrix) - np.abs(b.matrix))) < 1e-10

    def test_condition_estimate_grows_toward_threshold(self, device):
        # single coupled pair on resonance: threshold at ratio 1/2
        grid = ModeGrid(RESONANCE, TWO_PI * 0.1e6, 1)
        conds = []
        for ratio in (0.1, 0.3, 0.45, 0.49):
            scheme = balanced_scheme(device, [0], ratio)
            conds.append(simulate_scattering(grid, device, scheme).condition_estimate)
        assert all(a < b for a, b in zip(conds, conds[1:]))

    def test_above_threshold_raises(self, device):
        # the degenerate center-mode block goes singular at ratio 1/2
        grid = ModeGrid(RESONANCE, TWO_PI * 0.1e6, 1)
        with pytest.raises(AboveThresholdError):
            simulate_scattering(grid, device, balanced_scheme(device, [0], 0.5))

    def test_condition_cap_is_configurable(self, grid, device):
        scheme = balanced_scheme(device, [-4, 0, 4], 0.085)
        couplings = resolve_couplings(grid, scheme, device)
        system = assemble_system(grid, device, couplings)
        with pytest.raises(AboveThresholdError):
            scattering_matrix(system, condition_cap=1.0)

    def test_matrices_are_read_only(self, grid, device):
        s = pump_off_scattering(grid, device)
        with pytest.raises(ValueError):
            s.matrix[0, 0] = 0.0


class TestNormalizePumpOff:
    def test_pump_off_against_itself(self, grid, device):
        s_off = pump_off_scattering(grid, device)
        db = normalize_pump_off(s_off, s_off)
        assert np.max(np.abs(np.diag(db))) < 1e-9
        off = db - np.diag(np.diag(db))
        assert np.min(off + np.eye(len(db)) * 1e9) == -240.0  # clamped floor

    def test_lossless_db_equals_raw_magnitude(self, grid, device):
        scheme = balanced_scheme(device, [-4, 0, 4], 0.085)
        s_on = simulate_scattering(grid, device, scheme)
        s_off = pump_off_scattering(grid, device)
        db = normalize_pump_off(s_on, s_off)
        raw = 20 * np.log10(np.maximum(np.abs(s_on.matrix), 1e-12))
        assert np.allclose(db, raw, atol=1e-9)

    def test_degenerate_reference_rejected(self, grid, device):
        s_off = pump_off_scattering(grid, device)
        broken = np.array(s_off.matrix)
        broken[0, 0] = 0.0
        fake = ScatteringMatrix(broken, grid, Normalization.RAW)
        with pytest.raises(DegenerateNormalizationError):
            normalize_pump_off(s_off, fake)

    def test_grid_mismatch_rejected(self, grid, device):
        other = ModeGrid(grid.center_frequency, grid.spacing, 3)
        with pytest.raises(InternalConsistencyError):
            normalize_pump_off(
                pump_off_scattering(grid, device), pump_off_scattering(other, device)
            )
