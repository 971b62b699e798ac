"""Shared fixtures and independent oracles used across the test suite."""

import math

import numpy as np
import pytest

from combscatter import DeviceParams, ModeGrid, PumpScheme, scale_for_ratio

TWO_PI = 2.0 * math.pi

# Device and comb values used throughout: resonance 4.2 GHz, linewidth
# 112 MHz, spacing 0.1 MHz, 95 modes.
RESONANCE = TWO_PI * 4.2e9
COUPLING = TWO_PI * 112e6
SPACING = TWO_PI * 0.1e6
HALF_SPAN = 47


@pytest.fixture(scope="session")
def device():
    return DeviceParams(resonance_frequency=RESONANCE, port_coupling=COUPLING)


@pytest.fixture(scope="session")
def grid():
    return ModeGrid(center_frequency=RESONANCE, spacing=SPACING, half_span=HALF_SPAN)


def balanced_scheme(device, offsets, ratio, phases=None) -> PumpScheme:
    """Equal-strength scheme at a given dimensionless strength ratio."""
    return PumpScheme.balanced(offsets, scale_for_ratio(ratio, device), phases)


def analytic_two_mode_block(detuning_i, detuning_j, gamma, strength):
    """Hand inversion of the two-mode parametric block.

    For a single coupling between modes i and j the 4x4 system splits into
    two conjugate 2x2 blocks.  Solving the (a_i, a*_j) block by hand:

        [ d_i     -i c ] [a_i ]   [sqrt(g) b_i ]
        [ i c*    e_j  ] [a*_j] = [sqrt(g) b*_j]

    with d_i = i*detuning_i + gamma/2, e_j = -i*detuning_j + gamma/2 and
    c the complex coupling strength.  Cramer inversion and the input-output
    relation give the four scattering entries returned here as
    (S_ii, S_ij*, S_j*i, S_j*j*).
    """
    d_i = 1j * detuning_i + gamma / 2.0
    e_j = -1j * detuning_j + gamma / 2.0
    det = d_i * e_j - abs(strength) ** 2
    s_ii = gamma * e_j / det - 1.0
    s_ij = 1j * gamma * strength / det
    s_ji = -1j * gamma * np.conj(strength) / det
    s_jj = gamma * d_i / det - 1.0
    return s_ii, s_ij, s_ji, s_jj


def brute_force_pairs(offsets, half_span):
    """Enumerate coupled (i, j) pairs by scanning the whole index square."""
    pairs = set()
    for m in offsets:
        for i in range(-half_span, half_span + 1):
            for j in range(-half_span, half_span + 1):
                if i + j == m:
                    pairs.add((min(i, j), max(i, j)))
    return pairs
