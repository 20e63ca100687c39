"""Scattering matrices, transfer rows, spectra and their invariants."""

from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import TAU, near_singular_model, two_mode_converter

from modescatter import (
    ConfigurationError,
    DomainError,
    NearSingularError,
    NoiseEnvironment,
    UndefinedNoiseError,
    added_noise,
    assemble_dynamics,
    bose_occupancy,
    eta,
    noise_commutator_residual,
    noise_flux,
    physical_slot_mask,
    scattering_matrix,
    spectrum_sweep,
    sum_rule_residual,
    symplectic_residual,
    transfer_pair,
    transfer_row,
)
from modescatter.errors import ModeScatterError


def _converter_cooperativity(g_hz: float, kappa_hz: float) -> float:
    g = TAU * g_hz
    kappa = TAU * kappa_hz
    return 4.0 * g**2 / (kappa * kappa)


def test_bose_occupancy_zero_temperature() -> None:
    assert bose_occupancy(TAU * 5.0e9, 0.0) == 0.0


def test_bose_occupancy_classical_limit() -> None:
    # k T >> hbar omega: occupancy approaches kT / (hbar omega) - 1/2.
    from scipy.constants import hbar, k

    omega = TAU * 5.0e6
    t = 0.03
    classical = k * t / (hbar * omega)
    value = bose_occupancy(omega, t)
    assert value == pytest.approx(classical - 0.5, rel=1e-3)


def test_bose_occupancy_deep_quantum_tail() -> None:
    # Far above the expm1 cutoff only the exponential tail survives.
    from scipy.constants import hbar, k

    omega = TAU * 5.0e9
    t = hbar * omega / (k * 800.0)  # x = 800 > 700 cutoff
    assert bose_occupancy(omega, t) == pytest.approx(math.exp(-800.0), rel=1e-12)


def test_bose_occupancy_rejects_nonpositive_frequency() -> None:
    with pytest.raises(DomainError):
        bose_occupancy(0.0, 1.0)
    with pytest.raises(DomainError):
        bose_occupancy(-1.0, 1.0)


def test_bose_occupancy_rejects_negative_temperature() -> None:
    with pytest.raises(DomainError):
        bose_occupancy(1.0e9, -0.1)


def test_environment_constant_and_temperature() -> None:
    env = NoiseEnvironment.constant({"a": 2.5})
    assert env.occupancy("a", 1.0) == 2.5
    env_t = NoiseEnvironment.from_temperatures({"a": 0.0})
    assert env_t.occupancy("a", TAU * 1.0e9) == 0.0


def test_environment_unknown_port_raises() -> None:
    env = NoiseEnvironment.constant({"a": 1.0})
    with pytest.raises(ConfigurationError):
        env.occupancy("b", 1.0)


def test_environment_from_dynamics_copies_port_temperatures() -> None:
    dyn = assemble_dynamics(two_mode_converter(t_a=0.05, t_b=0.01))
    env = NoiseEnvironment.from_dynamics(dyn)
    assert env.spec["sig"] == ("temperature", 0.05)
    assert env.spec["out"] == ("temperature", 0.01)


def test_converter_efficiency_matches_closed_form() -> None:
    # Matched two-mode conversion: eta(resonance) = 4C/(1+C)^2 with the
    # cooperativity C = 4 g^2 / (kappa_a kappa_b).
    g_hz, kappa_hz, detune_hz = 1.0e6, 4.0e6, 1.0e6
    dyn = assemble_dynamics(two_mode_converter(g_hz, kappa_hz, kappa_hz, detune_hz))
    c = _converter_cooperativity(g_hz, kappa_hz)
    row = transfer_row(scattering_matrix(dyn, TAU * detune_hz))
    assert eta(row) == pytest.approx(4.0 * c / (1.0 + c) ** 2, rel=1e-12)


def test_converter_added_noise_matches_closed_form() -> None:
    # At resonance the only noise reaching the exit is its own thermal
    # back-reflection |S_bb|^2 n_b with S_bb = (C-1)/(C+1).
    g_hz, kappa_hz, detune_hz = 1.0e6, 4.0e6, 1.0e6
    dyn = assemble_dynamics(two_mode_converter(g_hz, kappa_hz, kappa_hz, detune_hz))
    c = _converter_cooperativity(g_hz, kappa_hz)
    n_b = 1.7
    env = NoiseEnvironment.constant({"sig": 0.0, "out": n_b})
    row = transfer_row(scattering_matrix(dyn, TAU * detune_hz))
    efficiency = 4.0 * c / (1.0 + c) ** 2
    reflect = ((c - 1.0) / (c + 1.0)) ** 2
    assert added_noise(row, env) == pytest.approx(
        reflect * n_b / efficiency, rel=1e-10
    )


def test_scattering_matrix_is_quasi_unitary() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    for omega_hz in (1.0e5, 1.0e6, 3.7e6):
        s = scattering_matrix(dyn, TAU * omega_hz)
        assert s.unitarity_residual < 1e-12
        assert symplectic_residual(s.matrix, s.metric) < 1e-12


def test_particle_hole_mirror() -> None:
    # S(-omega) equals the slot-swapped conjugate of S(+omega).
    dyn = assemble_dynamics(two_mode_converter())
    omega = TAU * 0.7e6
    s_up = scattering_matrix(dyn, omega).matrix
    s_dn = scattering_matrix(dyn, -omega).matrix
    p = 2
    swap = np.concatenate([np.arange(p, 2 * p), np.arange(0, p)])
    np.testing.assert_allclose(
        s_dn, s_up.conj()[np.ix_(swap, swap)], atol=1e-14
    )


def test_physical_slot_mask_positive_centers() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    mask = physical_slot_mask(dyn.ports, TAU * 1.0e6)
    assert mask.all()
    # A sideband beyond the acoustic band center kills that creation slot.
    mask_far = physical_slot_mask(dyn.ports, TAU * 4.5e9)
    assert mask_far[0] and mask_far[1]
    assert not mask_far[3]


def test_transfer_row_masks_unphysical_columns() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    omega = TAU * 4.5e9  # above the 4 GHz acoustic center
    row = transfer_row(scattering_matrix(dyn, omega))
    assert ("out", "v") in row.dropped
    assert row.v_coeffs["out"] == 0.0j
    assert row.physical_output  # exit lab frequency stays positive


def test_transfer_row_unknown_exit_raises() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    s = scattering_matrix(dyn, TAU * 1.0e6)
    with pytest.raises(ConfigurationError):
        transfer_row(s, exit_port="nope")


def test_transfer_pair_requires_positive_frequency() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    with pytest.raises(DomainError):
        transfer_pair(dyn, -1.0)
    with pytest.raises(DomainError):
        transfer_pair(dyn, 0.0)


def test_row_invariants_on_rotating_network() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    for omega_hz in (2.0e5, 1.0e6, 8.0e6):
        up, dn = transfer_pair(dyn, TAU * omega_hz)
        for row in (up, dn):
            assert sum_rule_residual(row) < 1e-12
            assert noise_commutator_residual(row) < 1e-12


def test_added_noise_undefined_where_efficiency_vanishes() -> None:
    u = {"s": 0.0, "e": 1.0}
    v = {"s": 0.0, "e": 0.0}
    from conftest import plain_row

    row = plain_row(TAU * 1.0e6, u, v)
    env = NoiseEnvironment.constant({"s": 0.0, "e": 0.0})
    with pytest.raises(UndefinedNoiseError):
        added_noise(row, env)


def test_noise_flux_counts_vacuum_on_creation_columns() -> None:
    from conftest import plain_row

    # One noise creation coefficient of weight |v|^2 = 0.25 at n = 0 adds
    # a quarter quantum of amplified vacuum.
    row = plain_row(TAU * 1.0e6, {"s": 1.0, "e": 0.0}, {"e": 0.5})
    env = NoiseEnvironment.constant({"s": 0.0, "e": 0.0})
    assert noise_flux(row, env) == pytest.approx(0.25, abs=1e-15)


def test_near_singular_point_raises_with_frequency() -> None:
    model = near_singular_model(delta_hz=2.0e6, gamma_hz=1.0e5)
    dyn = assemble_dynamics(model)
    with pytest.raises(NearSingularError) as excinfo:
        scattering_matrix(dyn, TAU * 2.0e6)
    assert excinfo.value.omega == pytest.approx(TAU * 2.0e6)
    # Away from the undamped eigenvalue the solve is fine.
    s = scattering_matrix(dyn, TAU * 3.0e6)
    assert s.unitarity_residual < 1e-10


def test_spectrum_sweep_matches_pointwise_evaluation() -> None:
    dyn = assemble_dynamics(two_mode_converter(t_a=0.05, t_b=0.02))
    env = NoiseEnvironment.from_dynamics(dyn)
    omegas = np.linspace(TAU * 2.0e5, TAU * 3.0e6, 41)
    grid = spectrum_sweep(dyn, env, omegas)
    assert not grid.failures
    for i in (0, 13, 40):
        up, dn = transfer_pair(dyn, float(omegas[i]))
        assert grid.eta_up[i] == pytest.approx(eta(up), rel=1e-12)
        assert grid.noise_up[i] == pytest.approx(added_noise(up, env), rel=1e-10)
        assert grid.sumrule_resid[i] < 1e-12
        assert grid.symplectic_resid[i] < 1e-12
        # A pure beam-splitter network has no phase-conjugating transfer,
        # so the lower-sideband efficiency vanishes identically and its
        # added noise is undefined.
        assert eta(dn) == 0.0
        assert grid.eta_dn[i] == 0.0
        assert math.isnan(grid.noise_dn[i])
        with pytest.raises(UndefinedNoiseError):
            added_noise(dn, env)


def test_spectrum_sweep_lower_sideband_with_conjugating_transfer() -> None:
    # Two-mode squeezing gives a nonzero creation-coefficient transfer, so
    # the lower sideband carries finite efficiency and noise.
    dyn = assemble_dynamics(near_singular_model(delta_hz=2.0e6, gamma_hz=1.0e5))
    env = NoiseEnvironment.constant({"pa": 0.4, "pb": 1.1})
    omegas = np.array([TAU * 2.6e6, TAU * 3.0e6, TAU * 3.4e6])
    grid = spectrum_sweep(dyn, env, omegas)
    assert not grid.failures
    for i in range(omegas.size):
        up, dn = transfer_pair(dyn, float(omegas[i]))
        assert eta(dn) > 0.0
        assert grid.eta_dn[i] == pytest.approx(eta(dn), rel=1e-12)
        assert grid.noise_dn[i] == pytest.approx(added_noise(dn, env), rel=1e-10)
        # The mirror statement of the beam-splitter case: a pure squeezer
        # converts nothing on the upper sideband.
        assert eta(up) == 0.0
        assert math.isnan(grid.noise_up[i])


def test_spectrum_sweep_rows_match_transfer_rows() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    env = NoiseEnvironment.from_dynamics(dyn)
    omegas = np.array([TAU * 5.0e5, TAU * 1.0e6])
    grid = spectrum_sweep(dyn, env, omegas, store_rows=True)
    assert grid.rows_up is not None and grid.rows_dn is not None
    up, dn = transfer_pair(dyn, float(omegas[1]))
    stored_up = grid.rows_up[1]
    stored_dn = grid.rows_dn[1]
    assert stored_up is not None and stored_dn is not None
    for name in ("sig", "out"):
        assert stored_up.u_coeffs[name] == pytest.approx(up.u_coeffs[name], abs=1e-14)
        assert stored_dn.v_coeffs[name] == pytest.approx(dn.v_coeffs[name], abs=1e-14)


def test_spectrum_sweep_store_rows_off() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    env = NoiseEnvironment.from_dynamics(dyn)
    grid = spectrum_sweep(
        dyn, env, np.linspace(TAU * 1.0e5, TAU * 2.0e6, 11), store_rows=False
    )
    assert grid.rows_up is None
    assert grid.rows_dn is None


def test_spectrum_sweep_records_singular_points_as_failures() -> None:
    dyn = assemble_dynamics(near_singular_model(delta_hz=2.0e6, gamma_hz=1.0e5))
    env = NoiseEnvironment.from_dynamics(dyn)
    omegas = np.array([TAU * 1.0e6, TAU * 2.0e6, TAU * 3.0e6])
    grid = spectrum_sweep(dyn, env, omegas)
    assert len(grid.failures) == 1
    failure = grid.failures[0]
    assert failure.index == 1
    assert failure.omega == pytest.approx(TAU * 2.0e6)
    assert math.isnan(grid.eta_up[1])
    assert math.isnan(grid.noise_dn[1])
    assert math.isfinite(grid.eta_up[0])
    assert math.isfinite(grid.eta_up[2])


@pytest.mark.parametrize(
    "omegas",
    [
        np.array([]),
        np.array([-1.0, 1.0]),
        np.array([2.0, 1.0]),
        np.array([1.0, 1.0]),
    ],
)
def test_spectrum_sweep_rejects_bad_grids(omegas: np.ndarray) -> None:
    dyn = assemble_dynamics(two_mode_converter())
    env = NoiseEnvironment.from_dynamics(dyn)
    with pytest.raises(ConfigurationError):
        spectrum_sweep(dyn, env, omegas)


def test_spectrum_sweep_unknown_exit_port() -> None:
    dyn = assemble_dynamics(two_mode_converter())
    env = NoiseEnvironment.from_dynamics(dyn)
    with pytest.raises(ConfigurationError):
        spectrum_sweep(dyn, env, np.array([1.0, 2.0, 3.0]), exit_port="nope")


def test_errors_share_base_class() -> None:
    assert issubclass(NearSingularError, ModeScatterError)
    assert issubclass(ConfigurationError, ModeScatterError)
    assert issubclass(DomainError, ModeScatterError)
