"""Shared builders for the test suite."""

from __future__ import annotations

import math

import numpy as np

from modescatter import (
    Band,
    Coupling,
    Drive,
    InternalMode,
    NoiseEnvironment,
    Port,
    TransducerModel,
    TransferRow,
)

TAU = 2.0 * math.pi


def two_mode_converter(
    g_hz: float = 1.0e6,
    kappa_a_hz: float = 4.0e6,
    kappa_b_hz: float = 4.0e6,
    detune_hz: float = 1.0e6,
    t_a: float = 0.0,
    t_b: float = 0.0,
) -> TransducerModel:
    """Two rotating modes in separate bands bridged by a driven exchange term.

    Both modes sit ``detune_hz`` above their band centers, so the conversion
    resonance lands at a positive sideband frequency.
    """
    ca, cb = TAU * 6.0e9, TAU * 4.0e9
    band_a = Band("uwave", ca)
    band_b = Band("acoustic", cb)
    ma = InternalMode("ma", band_a, "rotating", ca + TAU * detune_hz)
    mb = InternalMode("mb", band_b, "rotating", cb + TAU * detune_hz)
    pump = Drive("pump", ca - cb)
    coupling = Coupling(ma, mb, TAU * g_hz, "beam-splitter", drive=pump)
    ports = (
        Port("sig", ma, TAU * kappa_a_hz, t_a, role="signal"),
        Port("out", mb, TAU * kappa_b_hz, t_b, role="exit"),
    )
    return TransducerModel(
        (band_a, band_b), (ma, mb), (pump,), (coupling,), ports
    )


def near_singular_model(
    delta_hz: float = 2.0e6, gamma_hz: float = 1.0e5
) -> TransducerModel:
    """Marginally stable squeezer: S(omega) is singular at the detuning.

    Two rotating modes detuned by +/- delta with a two-mode-squeezing rate
    of exactly half the (equal) port rates put an undamped eigenvalue at
    -i*delta, so the scattering solve blows up at omega = delta while the
    stability check still passes.
    """
    ca, cb = TAU * 3.0e9, TAU * 1.0e9
    delta = TAU * delta_hz
    gamma = TAU * gamma_hz
    band_a = Band("a", ca)
    band_b = Band("b", cb)
    ma = InternalMode("ma", band_a, "rotating", ca + delta)
    mb = InternalMode("mb", band_b, "rotating", cb - delta)
    pump = Drive("pump", ca + cb)
    coupling = Coupling(ma, mb, gamma / 2.0, "two-mode-squeezing", drive=pump)
    ports = (
        Port("pa", ma, gamma, 0.0, role="signal"),
        Port("pb", mb, gamma, 0.0, role="exit"),
    )
    return TransducerModel(
        (band_a, band_b), (ma, mb), (pump,), (coupling,), ports
    )


def synthetic_row_pair(
    rng: np.random.Generator, n_noise: int = 2, omega: float = 1.0e6
) -> tuple[TransferRow, TransferRow, NoiseEnvironment]:
    """Random commutator-consistent exit rows at +/- omega plus occupancies.

    Each row is rescaled so its flux balance sum(|U|^2) - sum(|V|^2) = 1
    holds exactly, as it does for any row of a quasi-unitary scattering
    matrix restricted to physical slots.
    """
    names = ["e", "s"] + [f"n{k}" for k in range(n_noise)]
    centers = {name: (k + 1) * 1.0e12 for k, name in enumerate(names)}

    def draw(sign: float) -> TransferRow:
        u = {n: complex(rng.normal(), rng.normal()) for n in names}
        v = {n: complex(rng.normal(), rng.normal()) for n in names}
        a = sum(abs(c) ** 2 for c in u.values())
        b = sum(abs(c) ** 2 for c in v.values())
        beta = rng.uniform(0.0, 0.8)
        v_scale = math.sqrt(beta * a / b)
        norm = math.sqrt(a * (1.0 - beta))
        u = {n: c / norm for n, c in u.items()}
        v = {n: c * v_scale / norm for n, c in v.items()}
        return TransferRow(
            omega=sign * omega,
            exit_port="e",
            signal_port="s",
            u_coeffs=u,
            v_coeffs=v,
            port_centers=centers,
            dropped=(),
            physical_output=True,
        )

    env = NoiseEnvironment.constant(
        {name: float(rng.uniform(0.0, 3.0)) for name in names}
    )
    return draw(1.0), draw(-1.0), env


def plain_row(
    omega: float,
    u: dict[str, complex],
    v: dict[str, complex],
    signal: str = "s",
    exit_name: str = "e",
) -> TransferRow:
    names = sorted(set(u) | set(v) | {signal, exit_name})
    centers = {name: (k + 1) * 1.0e12 for k, name in enumerate(names)}
    return TransferRow(
        omega=omega,
        exit_port=exit_name,
        signal_port=signal,
        u_coeffs={n: complex(u.get(n, 0.0)) for n in names},
        v_coeffs={n: complex(v.get(n, 0.0)) for n in names},
        port_centers=centers,
        dropped=(),
        physical_output=True,
    )
