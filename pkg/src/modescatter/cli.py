"""Command-line interface.

Subcommands::

    spectra       sweep efficiency / added noise over a frequency grid
    fom           application figures of merit at a signal frequency
    optimize      bounded search over port/coupling parameters
    protocol-sim  heralded-entanglement Monte Carlo vs exact enumeration
    validate      model validation plus scattering self-consistency checks

All command-line frequencies and rates are in Hz (converted internally to
angular units); temperatures are in kelvin. Exit codes: 0 success, 1 model
validation or application failure, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .applications.counting import (
    SpectralShape,
    TemporalShape,
    counting_yield,
    dark_count_rate,
)
from .applications.entangle import (
    ProtocolSpec,
    entangle_fidelity_asymptotic,
    entangle_fidelity_exact,
    protocol_enumerate,
    protocol_montecarlo,
)
from .applications.heterodyne import heterodyne_sensitivity
from .applications.qubit import qubit_fidelity
from .electromech import closed_form_row
from .errors import (
    ConfigurationError,
    ModelValidationError,
    ModeScatterError,
    NearSingularError,
)
from .modelfile import (
    BUILTIN_MODELS,
    angular_to_hz,
    electromech_params,
    get_builtin,
    hz_to_angular,
    load_model,
    model_with,
)
from .network import (
    DoubledDynamics,
    TransducerModel,
    assemble_dynamics,
    random_stable_model,
    rwa_report,
    validate_model,
)
from .optimize import OBJECTIVES, OptimizeSpec, run_optimization
from .scattering import (
    NoiseEnvironment,
    added_noise,
    eta,
    physical_slot_mask,
    scattering_matrix,
    spectrum_sweep,
    sum_rule_residual,
    symplectic_residual,
    transfer_pair,
)

_CSV_HEADER = (
    "omega_hz",
    "eta_up",
    "eta_dn",
    "N_up",
    "N_dn",
    "sumrule_resid",
    "symplectic_resid",
)

_CHECK_TOL = 1e-8


# ---------------------------------------------------------------------------
# shared argument handling


def _parse_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"{what}: {text!r} is not a number") from None


def _parse_set_pairs(pairs: Sequence[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigurationError(
                f"--set expects KEY=VALUE, got {pair!r}"
            )
        out[key.strip()] = value.strip()
    return out


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model source")
    group.add_argument("--model", metavar="PATH", help="JSON model file")
    group.add_argument(
        "--builtin",
        metavar="NAME",
        help=f"builtin model ({', '.join(BUILTIN_MODELS)})",
    )
    group.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help=(
            "override a parameter; for --builtin, KEY is a builtin parameter"
            " name (Hz / kelvin); for --model, KEY is a dotted path such as"
            " ports.NAME.rate (Hz), ports.NAME.temperature (K), or"
            " couplings.INDEX.rate (Hz)"
        ),
    )


def _resolve_model(args: argparse.Namespace) -> TransducerModel:
    if bool(args.model) == bool(args.builtin):
        raise ConfigurationError(
            "provide exactly one model source: --model PATH or --builtin NAME"
        )
    sets = _parse_set_pairs(args.set or [])
    if args.builtin:
        overrides = {
            key: _parse_float(value, f"--set {key}")
            for key, value in sets.items()
        }
        return get_builtin(args.builtin, overrides)
    model = load_model(args.model)
    if sets:
        assignments: dict[str, float] = {}
        for key, value in sets.items():
            number = _parse_float(value, f"--set {key}")
            if key.endswith(".rate"):
                number = hz_to_angular(number)
            assignments[key] = number
        model = model_with(model, assignments)
        report = validate_model(model)
        if report.errors:
            raise ModelValidationError(
                "model failed validation after --set overrides",
                errors=tuple(report.errors),
            )
    return model


def _add_grid_args(parser: argparse.ArgumentParser, required: bool) -> None:
    grid = parser.add_argument_group("frequency grid (Hz)")
    grid.add_argument(
        "--omega-min", type=float, required=required, help="grid start, Hz"
    )
    grid.add_argument(
        "--omega-max", type=float, required=required, help="grid end, Hz"
    )
    grid.add_argument(
        "--points", type=int, default=2001, help="grid size (default 2001)"
    )


def _grid_omegas(args: argparse.Namespace, log: bool = False) -> np.ndarray:
    if args.omega_min is None or args.omega_max is None:
        raise ConfigurationError("this command needs --omega-min and --omega-max")
    if not 0.0 < args.omega_min < args.omega_max:
        raise ConfigurationError(
            "need 0 < --omega-min < --omega-max (both in Hz)"
        )
    if args.points < 2:
        raise ConfigurationError("--points must be at least 2")
    lo = hz_to_angular(args.omega_min)
    hi = hz_to_angular(args.omega_max)
    if log:
        return np.geomspace(lo, hi, args.points)
    return np.linspace(lo, hi, args.points)


def _check_exit(dyn: DoubledDynamics, exit_name: str | None) -> None:
    if exit_name is None:
        return
    names = {info.name for info in dyn.ports}
    if exit_name not in names:
        raise ConfigurationError(
            f"--exit {exit_name!r}: no such port (have {', '.join(sorted(names))})"
        )


def _parse_kv_spec(text: str, what: str) -> tuple[str, dict[str, float]]:
    kind, _, rest = text.partition(":")
    params: dict[str, float] = {}
    if rest:
        for chunk in rest.split(","):
            key, sep, value = chunk.partition("=")
            if not sep:
                raise ConfigurationError(
                    f"{what}: expected key=value, got {chunk!r}"
                )
            params[key.strip()] = _parse_float(value, f"{what} {key.strip()}")
    return kind.strip(), params


def _spectral_shape(text: str) -> SpectralShape:
    kind, params = _parse_kv_spec(text, "--h-in")
    try:
        if kind == "delta":
            shape = SpectralShape.delta(hz_to_angular(params.pop("center_hz")))
        elif kind == "gaussian":
            shape = SpectralShape.gaussian(
                hz_to_angular(params.pop("center_hz")),
                hz_to_angular(params.pop("sigma_hz")),
            )
        elif kind == "lorentzian":
            shape = SpectralShape.lorentzian(
                hz_to_angular(params.pop("center_hz")),
                hz_to_angular(params.pop("fwhm_hz")),
            )
        else:
            raise ConfigurationError(
                f"--h-in: unknown kind {kind!r} (delta, gaussian, lorentzian)"
            )
    except KeyError as exc:
        raise ConfigurationError(f"--h-in {kind}: missing parameter {exc}") from None
    if params:
        raise ConfigurationError(
            f"--h-in {kind}: unexpected parameters {sorted(params)}"
        )
    return shape


def _temporal_shape(text: str) -> TemporalShape:
    kind, params = _parse_kv_spec(text, "--h-out")
    try:
        if kind == "exponential":
            shape = TemporalShape.exponential(params.pop("rate_per_s"))
        elif kind == "boxcar":
            shape = TemporalShape.boxcar(params.pop("duration_s"))
        else:
            raise ConfigurationError(
                f"--h-out: unknown kind {kind!r} (exponential, boxcar)"
            )
    except KeyError as exc:
        raise ConfigurationError(f"--h-out {kind}: missing parameter {exc}") from None
    if params:
        raise ConfigurationError(
            f"--h-out {kind}: unexpected parameters {sorted(params)}"
        )
    return shape


def _sanitize(value: Any) -> Any:
    """JSON-safe copy: non-finite floats become None, complex become [re, im]."""
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, complex):
        return [_sanitize(value.real), _sanitize(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _emit(payload: Mapping[str, Any], as_json: bool) -> None:
    if as_json:
        print(json.dumps(_sanitize(payload), indent=2))
        return

    def walk(prefix: str, obj: Any) -> None:
        if isinstance(obj, Mapping):
            for key, value in obj.items():
                walk(f"{prefix}{key}." if prefix else f"{key}.", value)
            return
        name = prefix[:-1]
        if isinstance(obj, complex):
            print(f"{name} = {obj.real:.12g}{obj.imag:+.12g}j")
        elif isinstance(obj, float):
            print(f"{name} = {obj:.12g}")
        else:
            print(f"{name} = {obj}")

    walk("", payload)


# ---------------------------------------------------------------------------
# spectra


def _cmd_spectra(args: argparse.Namespace) -> int:
    model = _resolve_model(args)
    dyn = assemble_dynamics(model)
    _check_exit(dyn, args.exit)
    env = NoiseEnvironment.from_dynamics(dyn)
    omegas = _grid_omegas(args, log=args.log)
    grid = spectrum_sweep(dyn, env, omegas, exit_port=args.exit, store_rows=False)

    columns = (
        [angular_to_hz(float(w)) for w in grid.omegas],
        grid.eta_up,
        grid.eta_dn,
        grid.noise_up,
        grid.noise_dn,
        grid.sumrule_resid,
        grid.symplectic_resid,
    )

    if args.format == "csv":
        stream = open(args.out, "w", newline="") if args.out else sys.stdout
        try:
            writer = csv.writer(stream)
            writer.writerow(_CSV_HEADER)
            for row in zip(*columns):
                writer.writerow(
                    "" if not math.isfinite(float(x)) else repr(float(x))
                    for x in row
                )
        finally:
            if args.out:
                stream.close()
    else:
        payload = dict(zip(_CSV_HEADER, ([float(x) for x in col] for col in columns)))
        payload["failures"] = [
            {"index": f.index, "omega_hz": angular_to_hz(f.omega), "message": f.message}
            for f in grid.failures
        ]
        text = json.dumps(_sanitize(payload), indent=2)
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)

    if grid.failures and args.format == "csv":
        if args.out:
            sibling = Path(args.out).with_name(Path(args.out).stem + ".errors.json")
            sibling.write_text(
                json.dumps(
                    [
                        {
                            "index": f.index,
                            "omega_hz": angular_to_hz(f.omega),
                            "message": f.message,
                        }
                        for f in grid.failures
                    ],
                    indent=2,
                )
                + "\n"
            )
            print(f"wrote {len(grid.failures)} failure(s) to {sibling}", file=sys.stderr)
        else:
            for f in grid.failures:
                print(
                    f"failure at omega={angular_to_hz(f.omega):.6e} Hz: {f.message}",
                    file=sys.stderr,
                )

    eta_up = np.asarray(grid.eta_up, dtype=float)
    if np.any(np.isfinite(eta_up)):
        peak = int(np.nanargmax(eta_up))
        noise_at_peak = float(np.asarray(grid.noise_up)[peak])
        resid = np.asarray(grid.sumrule_resid, dtype=float)
        max_resid = (
            float(np.nanmax(np.abs(resid))) if np.any(np.isfinite(resid)) else math.nan
        )
        print(
            f"peak eta_up = {eta_up[peak]:.6g} at"
            f" {angular_to_hz(float(grid.omegas[peak])):.6e} Hz;"
            f" N_up there = {noise_at_peak:.6g};"
            f" max |sum-rule residual| = {max_resid:.3g};"
            f" {len(grid.failures)} failed point(s)",
            file=sys.stderr,
        )
    else:
        print("no finite efficiency points in sweep", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# fom


def _cmd_fom(args: argparse.Namespace) -> int:
    model = _resolve_model(args)
    dyn = assemble_dynamics(model)
    _check_exit(dyn, args.exit)
    env = NoiseEnvironment.from_dynamics(dyn)
    omega_sig = hz_to_angular(args.omega_sig)
    payload: dict[str, Any] = {"app": args.app, "omega_sig_hz": args.omega_sig}

    if args.app == "qubit":
        up, _ = transfer_pair(dyn, omega_sig, exit_port=args.exit)
        eta_plus = eta(up)
        n_plus = added_noise(up, env)
        payload.update(
            eta_plus=eta_plus,
            n_plus=n_plus,
            fidelity=qubit_fidelity(eta_plus, n_plus),
        )
    elif args.app == "heterodyne":
        up, dn = transfer_pair(dyn, omega_sig, exit_port=args.exit)
        result = heterodyne_sensitivity(up, dn, env, theta_lo=args.theta_lo)
        payload.update(
            theta_lo=result.theta_lo,
            p_s=result.p_s,
            bound=result.bound,
            eta_up=result.eta_up,
            eta_dn=result.eta_dn,
            flux_up=result.flux_up,
            flux_dn=result.flux_dn,
            f_corr=result.f_corr,
            t_lo_abs=abs(result.t_lo),
        )
    elif args.app == "counting":
        if args.h_in is None or args.h_out is None or args.window is None:
            raise ConfigurationError(
                "fom --app counting needs --h-in, --h-out, and --window"
            )
        omegas = _grid_omegas(args)
        grid = spectrum_sweep(
            dyn, env, omegas, exit_port=args.exit, store_rows=False
        )
        result = counting_yield(
            grid,
            _spectral_shape(args.h_in),
            _temporal_shape(args.h_out),
            args.window,
            omega_sig,
        )
        payload.update(
            eta_plus=result.eta_plus,
            n_plus=result.n_plus,
            bandwidth_rad_per_s=result.bandwidth,
            bandwidth_hz=result.bandwidth_hz,
            dark_rate_per_s=result.rate,
            eta_h=result.eta_h,
            capture=result.capture,
            n_out_mean=result.n_out_mean,
        )
    else:  # entangle
        if args.window is None:
            raise ConfigurationError("fom --app entangle needs --window")
        omegas = _grid_omegas(args)
        grid = spectrum_sweep(
            dyn, env, omegas, exit_port=args.exit, store_rows=False
        )
        dark = dark_count_rate(grid, omega_sig)
        p_d = dark.rate * args.window
        if not 0.0 <= p_d < 1.0:
            raise ConfigurationError(
                f"window dark-click probability {p_d:.3g} outside [0, 1);"
                " shrink --window"
            )
        eff = min(dark.eta_plus, 1.0)
        payload.update(
            eta_plus=dark.eta_plus,
            n_plus=dark.n_plus,
            bandwidth_hz=dark.bandwidth_hz,
            dark_rate_per_s=dark.rate,
            p_d=p_d,
        )
        for scheme in ("one-click", "two-click"):
            if args.p_e is not None:
                p_e = args.p_e
            elif scheme == "two-click":
                p_e = 0.5
            else:
                p_e_opt = (
                    math.sqrt(p_d / (eff * (1.0 - eff / 2.0))) if eff > 0 else 0.0
                )
                p_e = min(max(p_e_opt, 1e-6), 0.5)
            spec = ProtocolSpec(scheme, p_e, p_d, eff)
            exact = entangle_fidelity_exact(spec)
            entry: dict[str, Any] = {
                "p_e": p_e,
                "fidelity": exact.fidelity,
                "success_probability": exact.success_probability,
            }
            try:
                entry["fidelity_asymptotic"] = entangle_fidelity_asymptotic(
                    spec
                ).fidelity
            except ModeScatterError:
                entry["fidelity_asymptotic"] = math.nan
            payload[scheme] = entry

    _emit(payload, args.json)
    return 0


# ---------------------------------------------------------------------------
# optimize


def _parse_var(text: str) -> tuple[str, float, float]:
    parts = text.rsplit(":", 2)
    if len(parts) != 3:
        raise ConfigurationError(
            f"--var expects PATH:LOW:HIGH, got {text!r}"
        )
    path = parts[0]
    low = _parse_float(parts[1], f"--var {path} low")
    high = _parse_float(parts[2], f"--var {path} high")
    if path.endswith(".rate"):
        low, high = hz_to_angular(low), hz_to_angular(high)
    return path, low, high


def _cmd_optimize(args: argparse.Namespace) -> int:
    model = _resolve_model(args)
    variables = tuple(_parse_var(text) for text in args.var)
    spec = OptimizeSpec(
        variables=variables,
        objective=args.objective,
        omega_sig=hz_to_angular(args.omega_sig),
        omega_min=hz_to_angular(args.omega_min) if args.omega_min else None,
        omega_max=hz_to_angular(args.omega_max) if args.omega_max else None,
        points=args.points,
        window=args.window if args.window is not None else 0.0,
        exit_port=args.exit,
        budget=args.budget,
        tolerance=args.tol,
        seed=args.seed,
    )
    result = run_optimization(model, spec)

    best_display = {
        path: (
            f"{angular_to_hz(value):.9g} Hz"
            if path.endswith(".rate")
            else f"{value:.9g} K"
        )
        for path, value in result.best_params.items()
    }
    print(f"objective      {result.objective}")
    print(f"best value     {result.best_value:.9g}")
    for path, text in best_display.items():
        print(f"best {path} = {text}")
    print(f"evaluations    {result.n_evals}")
    print(f"converged      {result.converged}")
    if args.out:
        trace = [
            {
                "params_rad_s": list(entry.params),
                "value": entry.value,
                "feasible": entry.feasible,
            }
            for entry in result.trace
        ]
        Path(args.out).write_text(
            json.dumps(
                _sanitize(
                    {
                        "objective": result.objective,
                        "variable_paths": list(result.variable_paths),
                        "best_params_rad_s": dict(result.best_params),
                        "best_value": result.best_value,
                        "n_evals": result.n_evals,
                        "converged": result.converged,
                        "trace": trace,
                    }
                ),
                indent=2,
            )
            + "\n"
        )
        print(f"trace written to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# protocol-sim


def _cmd_protocol_sim(args: argparse.Namespace) -> int:
    spec = ProtocolSpec(args.scheme, args.p_e, args.p_d, args.eta)
    exact = entangle_fidelity_exact(spec)
    enum = protocol_enumerate(spec)
    mc = protocol_montecarlo(spec, args.trials, args.seed)

    def row(label: str, a: float, b: float, c: float, se: float | None) -> str:
        mc_text = f"{c:.6f}" + (f" +/- {se:.6f}" if se is not None else "")
        return f"{label:<22} {a:>12.8f} {b:>12.8f}   {mc_text}"

    print(
        f"scheme={spec.scheme} p_e={spec.p_e} p_d={spec.p_d} eta={spec.eta}"
        f" trials={args.trials} seed={args.seed}"
    )
    print(f"{'quantity':<22} {'exact':>12} {'enumerate':>12}   monte-carlo")
    print(
        row(
            "fidelity",
            exact.fidelity,
            enum.fidelity,
            mc.fidelity,
            mc.fidelity_stderr,
        )
    )
    print(
        row(
            "success_probability",
            exact.success_probability,
            enum.success_probability,
            mc.success_probability,
            mc.success_stderr,
        )
    )
    print(
        row(
            "photon_herald_prob",
            exact.photon_herald_probability,
            enum.photon_herald_probability,
            mc.photon_herald_probability,
            None,
        )
    )
    for key in ("00", "psi_plus", "01", "10", "11"):
        print(
            row(
                f"pop[{key}]",
                exact.populations[key],
                enum.populations[key],
                mc.populations[key],
                None,
            )
        )
    gap = max(
        abs(exact.fidelity - enum.fidelity),
        abs(exact.success_probability - enum.success_probability),
        max(
            abs(exact.populations[k] - enum.populations[k])
            for k in exact.populations
        ),
    )
    print(f"max |exact - enumerate| = {gap:.3e}; heralds = {mc.herald_count}")
    return 0


# ---------------------------------------------------------------------------
# validate


def _probe_frequencies(dyn: DoubledDynamics, count: int = 7) -> np.ndarray:
    eigs = np.linalg.eigvals(dyn.dyn_matrix)
    scale = float(np.max(np.abs(eigs))) if eigs.size else 1.0
    if not math.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    base = np.geomspace(0.01 * scale, 10.0 * scale, count)
    centers = sorted(
        {abs(val.imag) for val in eigs if abs(val.imag) > 1e-9 * scale}
    )
    return np.unique(np.concatenate([base, np.asarray(centers, dtype=float)]))


def _scattering_checks(
    dyn: DoubledDynamics, omegas: np.ndarray
) -> dict[str, float]:
    """Worst-case residuals over the probe frequencies.

    ``unitarity`` uses the physical-slot-restricted quasi-unitarity defect;
    ``particle_hole`` checks S(-w) against the slot-swapped conjugate of
    S(w), which is exact for any doubled-basis model; ``sum_rule`` covers
    the exit-row flux balance on physically defined rows.
    """
    p = dyn.n_ports
    swap = np.concatenate([np.arange(p, 2 * p), np.arange(0, p)])
    worst = {"unitarity": 0.0, "particle_hole": 0.0, "sum_rule": 0.0}
    skipped = 0
    for omega in omegas:
        try:
            s_up = scattering_matrix(dyn, float(omega))
            s_dn = scattering_matrix(dyn, -float(omega))
        except NearSingularError:
            skipped += 1
            continue
        mask = physical_slot_mask(dyn.ports, float(omega))
        worst["unitarity"] = max(
            worst["unitarity"],
            symplectic_residual(s_up.matrix, dyn.metric, mask=mask),
        )
        mismatch = float(
            np.max(np.abs(s_dn.matrix - np.conj(s_up.matrix)[np.ix_(swap, swap)]))
        )
        worst["particle_hole"] = max(worst["particle_hole"], mismatch)
        try:
            up, dn = transfer_pair(dyn, float(omega))
        except ModeScatterError:
            continue
        for row in (up, dn):
            resid = sum_rule_residual(row)
            if math.isfinite(resid):
                worst["sum_rule"] = max(worst["sum_rule"], abs(resid))
    worst["skipped"] = float(skipped)
    return worst


def _cmd_validate(args: argparse.Namespace) -> int:
    model = _resolve_model(args)
    report = validate_model(model)
    for line in report.errors:
        print(f"error:   {line}")
    for line in report.warnings:
        print(f"warning: {line}")
    for line in report.notes:
        print(f"note:    {line}")
    if report.errors:
        raise ModelValidationError(
            "model failed validation", errors=tuple(report.errors)
        )

    dyn = assemble_dynamics(model)
    rwa = rwa_report(model)
    if rwa.entries and rwa.min_ratio is not None:
        print(f"rwa: minimum separation ratio = {rwa.min_ratio:.3g}")

    has_quadrature = any(info.flavor == "lab-quadrature" for info in dyn.ports)
    worst = _scattering_checks(dyn, _probe_frequencies(dyn))
    print(
        f"checks: unitarity={worst['unitarity']:.3e}"
        f" particle-hole={worst['particle_hole']:.3e}"
        f" sum-rule={worst['sum_rule']:.3e}"
        f" (skipped {int(worst['skipped'])} near-singular point(s))"
    )

    failures: list[str] = []
    if worst["particle_hole"] > _CHECK_TOL:
        failures.append(
            f"particle-hole symmetry residual {worst['particle_hole']:.3e}"
            f" exceeds {_CHECK_TOL:g}"
        )
    if has_quadrature:
        print(
            "note: model couples quadrature ports; restricted unitarity and"
            " sum-rule residuals are informational (exact only at the"
            " quadrature mode's resonance)"
        )
    else:
        if worst["unitarity"] > _CHECK_TOL:
            failures.append(
                f"quasi-unitarity residual {worst['unitarity']:.3e} exceeds"
                f" {_CHECK_TOL:g}"
            )
        if worst["sum_rule"] > _CHECK_TOL:
            failures.append(
                f"sum-rule residual {worst['sum_rule']:.3e} exceeds {_CHECK_TOL:g}"
            )

    if args.builtin == "electromech":
        params = electromech_params(
            {
                key: _parse_float(value, f"--set {key}")
                for key, value in _parse_set_pairs(args.set or []).items()
            }
        )
        scale = params.omega_m
        rel_worst = 0.0
        for factor in (0.5, 0.9, 1.0, 1.1, 1.5):
            omega = factor * scale
            up, _ = transfer_pair(dyn, omega)
            ref = closed_form_row(params, omega)
            num = np.array(
                [up.u_coeffs[k] for k in sorted(up.u_coeffs)]
                + [up.v_coeffs[k] for k in sorted(up.v_coeffs)]
            )
            want = np.array(
                [ref.u_coeffs[k] for k in sorted(ref.u_coeffs)]
                + [ref.v_coeffs[k] for k in sorted(ref.v_coeffs)]
            )
            denom = max(float(np.max(np.abs(want))), 1e-300)
            rel_worst = max(
                rel_worst, float(np.max(np.abs(num - want))) / denom
            )
        print(f"oracle: closed-form row max relative deviation = {rel_worst:.3e}")
        if rel_worst > 1e-6:
            failures.append(
                f"closed-form oracle deviation {rel_worst:.3e} exceeds 1e-06"
            )

    if args.ensemble:
        rng = np.random.default_rng(args.seed)
        ens_worst = {"unitarity": 0.0, "particle_hole": 0.0, "sum_rule": 0.0}
        for _ in range(args.ensemble):
            sample = random_stable_model(rng)
            sample_dyn = assemble_dynamics(sample)
            probe = _probe_frequencies(sample_dyn, count=5)
            res = _scattering_checks(sample_dyn, probe)
            for key in ens_worst:
                ens_worst[key] = max(ens_worst[key], res[key])
        print(
            f"ensemble({args.ensemble}): unitarity={ens_worst['unitarity']:.3e}"
            f" particle-hole={ens_worst['particle_hole']:.3e}"
            f" sum-rule={ens_worst['sum_rule']:.3e}"
        )
        for key, value in ens_worst.items():
            if value > _CHECK_TOL:
                failures.append(
                    f"ensemble {key} residual {value:.3e} exceeds {_CHECK_TOL:g}"
                )

    if failures:
        raise ModelValidationError(
            "consistency checks failed", errors=tuple(failures)
        )
    print("validate: OK")
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modescatter",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    spectra = sub.add_parser(
        "spectra", help="sweep efficiency and added noise over frequency"
    )
    _add_model_args(spectra)
    _add_grid_args(spectra, required=True)
    spectra.add_argument("--log", action="store_true", help="log-spaced grid")
    spectra.add_argument("--exit", metavar="PORT", help="override the exit port")
    spectra.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    spectra.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="output format"
    )
    spectra.set_defaults(func=_cmd_spectra)

    fom = sub.add_parser("fom", help="application figures of merit")
    _add_model_args(fom)
    fom.add_argument(
        "--app",
        required=True,
        choices=("heterodyne", "qubit", "counting", "entangle"),
    )
    fom.add_argument(
        "--omega-sig", type=float, required=True, help="signal frequency, Hz"
    )
    fom.add_argument("--exit", metavar="PORT", help="override the exit port")
    fom.add_argument(
        "--theta-lo",
        type=float,
        default=None,
        help="heterodyne: local-oscillator phase in radians (default optimal)",
    )
    _add_grid_args(fom, required=False)
    fom.add_argument(
        "--window", type=float, default=None, help="detection window, seconds"
    )
    fom.add_argument(
        "--h-in",
        metavar="SPEC",
        help=(
            "counting: input photon spectrum, e.g. delta:center_hz=5e6,"
            " gaussian:center_hz=5e6,sigma_hz=1e3, or"
            " lorentzian:center_hz=5e6,fwhm_hz=1e3"
        ),
    )
    fom.add_argument(
        "--h-out",
        metavar="SPEC",
        help=(
            "counting: output temporal mode, e.g. exponential:rate_per_s=1e4"
            " or boxcar:duration_s=1e-3"
        ),
    )
    fom.add_argument(
        "--p-e",
        type=float,
        default=None,
        help="entangle: force the excitation probability",
    )
    fom.add_argument("--json", action="store_true", help="emit JSON")
    fom.set_defaults(func=_cmd_fom)

    optimize = sub.add_parser("optimize", help="tune model parameters")
    _add_model_args(optimize)
    optimize.add_argument("--objective", required=True, choices=OBJECTIVES)
    optimize.add_argument(
        "--var",
        action="append",
        required=True,
        metavar="PATH:LOW:HIGH",
        help=(
            "search variable with bounds; rate paths in Hz, e.g."
            " ports.wg.rate:1e3:1e7"
        ),
    )
    optimize.add_argument(
        "--omega-sig", type=float, required=True, help="signal frequency, Hz"
    )
    _add_grid_args(optimize, required=False)
    optimize.add_argument(
        "--window",
        type=float,
        default=None,
        help="entangle objectives: detection window, seconds",
    )
    optimize.add_argument("--exit", metavar="PORT", help="override the exit port")
    optimize.add_argument("--budget", type=int, default=200)
    optimize.add_argument("--tol", type=float, default=1e-6)
    optimize.add_argument("--seed", type=int, default=0)
    optimize.add_argument("--out", metavar="PATH", help="write trace JSON here")
    optimize.set_defaults(func=_cmd_optimize)

    sim = sub.add_parser(
        "protocol-sim",
        help="compare Monte Carlo and exact heralded-entanglement results",
    )
    sim.add_argument("--scheme", required=True, choices=("one-click", "two-click"))
    sim.add_argument("--p-e", type=float, required=True)
    sim.add_argument("--p-d", type=float, required=True)
    sim.add_argument("--eta", type=float, required=True)
    sim.add_argument("--trials", type=int, default=100_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=_cmd_protocol_sim)

    validate = sub.add_parser(
        "validate", help="validate a model and run consistency checks"
    )
    _add_model_args(validate)
    validate.add_argument(
        "--ensemble",
        type=int,
        default=0,
        metavar="N",
        help="also check N random stable models",
    )
    validate.add_argument("--seed", type=int, default=0)
    validate.set_defaults(func=_cmd_validate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except ModelValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for line in exc.errors:
            print(f"  - {line}", file=sys.stderr)
        return exc.exit_code
    except ModeScatterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
