"""Heralded entanglement of two remote emitters through transducers.

Both emitters are symmetrically excited (probability ``p_e`` of emitting a
photon each round), their photons are transduced, mixed on a balanced beam
splitter and detected by two arms. Each arm independently registers a
spurious click with probability ``p_d`` per round (transduced noise photons
acting as dark counts). A round heralds when at least one click lands in
exactly one arm. The one-click scheme conditions on a single round; the
two-click scheme adds a second round after a symmetric flip of both
emitters, so the complementary emitter must also deliver a photon.

Event rules, shared by all three evaluation routes in this module:

* an emitted photon survives transduction and detection with probability
  ``eta``;
* a single surviving photon exits either beam-splitter arm with
  probability 1/2;
* two surviving photons in the same round bunch (mode-matched interference)
  and exit together through one arm, chosen with probability 1/2;
* the heralded one-excitation branch is a coherent Bell state precisely
  when every photon emitted in the conditioning rounds was detected
  (a lost photon tags the emitter in principle, leaving an even mixture of
  |01> and |10>); the detector-sign bookkeeping rotates both Bell signs
  onto the symmetric state.

Populations are labeled by the emitter configuration of the first round
(before any flip). Three routes are provided: ``entangle_fidelity_exact``
evaluates closed-form branch weights; ``protocol_enumerate`` walks the full
microscopic outcome tree and serves as the independent oracle;
``protocol_montecarlo`` samples it stochastically.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Literal, Mapping

import numpy as np

from ..errors import ConfigurationError, DomainError, NoHeraldError, ValidityWarning

Scheme = Literal["one-click", "two-click"]

_SCHEMES = ("one-click", "two-click")

#: Trials per vectorized Monte Carlo chunk.
_MC_CHUNK = 1 << 18


@dataclass(frozen=True)
class ProtocolSpec:
    """Parameters of a heralded-entanglement run.

    ``p_e``: excitation (emission) probability per emitter per round;
    ``p_d``: spurious-click probability per arm per round;
    ``eta``: per-photon transduction-plus-detection efficiency.
    """

    scheme: Scheme
    p_e: float
    p_d: float
    eta: float

    def __post_init__(self) -> None:
        if self.scheme not in _SCHEMES:
            raise ConfigurationError(
                f"unknown scheme {self.scheme!r}; expected one of {_SCHEMES}"
            )
        if not (0.0 <= self.p_e <= 1.0):
            raise ConfigurationError(f"p_e must lie in [0, 1], got {self.p_e!r}")
        if not (0.0 <= self.p_d < 1.0):
            raise ConfigurationError(f"p_d must lie in [0, 1), got {self.p_d!r}")
        if not (0.0 <= self.eta <= 1.0):
            raise ConfigurationError(f"eta must lie in [0, 1], got {self.eta!r}")


@dataclass(frozen=True)
class ProtocolResult:
    """Conditional state of the emitters given the herald.

    ``populations`` holds the normalized weights on the first-round basis
    states ``"00"``, ``"01"``, ``"10"``, ``"11"`` plus the coherent Bell
    weight ``"psi_plus"`` (the ``"01"``/``"10"`` entries are the incoherent
    remainder). ``success_probability`` counts every herald;
    ``photon_herald_probability`` counts only heralds in which each
    conditioning round's click pattern was caused by a detected photon.
    ``normalization`` is the unnormalized trace of the heralded state, which
    for these weights equals the success probability. Monte Carlo results
    additionally carry standard errors and counts.
    """

    scheme: Scheme
    populations: Mapping[str, float]
    fidelity: float
    success_probability: float
    photon_herald_probability: float
    normalization: float
    fidelity_stderr: float | None = None
    success_stderr: float | None = None
    herald_count: int | None = None
    trials: int | None = None


@dataclass(frozen=True)
class AsymptoticEntangleResult:
    """Small-noise expansion of the conditional fidelity.

    ``fidelity`` evaluates the expansion at the spec's own ``p_e``;
    ``p_e_opt`` and ``fidelity_opt`` give the excitation probability that
    maximizes the expansion and its value there (1/2 by construction for
    the two-click scheme).
    """

    fidelity: float
    p_e_opt: float
    fidelity_opt: float


def _result_from_unnormalized(
    scheme: Scheme,
    w00: float,
    w_psi: float,
    w01: float,
    w10: float,
    w11: float,
    photon_weight: float,
) -> ProtocolResult:
    norm = w00 + w_psi + w01 + w10 + w11
    if norm <= 0.0:
        raise NoHeraldError(
            "the herald condition has probability 0 for these parameters",
            herald_count=0,
        )
    populations = {
        "00": w00 / norm,
        "psi_plus": w_psi / norm,
        "01": w01 / norm,
        "10": w10 / norm,
        "11": w11 / norm,
    }
    fidelity = populations["psi_plus"] + 0.5 * (populations["01"] + populations["10"])
    return ProtocolResult(
        scheme=scheme,
        populations=populations,
        fidelity=fidelity,
        success_probability=norm,
        photon_herald_probability=photon_weight,
        normalization=norm,
    )


def _round_factors(p_d: float, eta: float) -> tuple[float, float, float, float, float]:
    """Herald factors of one round, by number of photons emitted.

    Returns ``(h0, h1, c1, h2, c2)``: the herald probability with 0, 1, 2
    emitted photons, and the photon-caused (coherence-compatible) parts of
    the 1- and 2-photon cases.
    """
    keep = 1.0 - p_d
    h0 = 2.0 * p_d * keep
    c1 = eta * keep
    h1 = c1 + (1.0 - eta) * 2.0 * p_d * keep
    c2 = (1.0 - (1.0 - eta) ** 2) * keep
    h2 = c2 + (1.0 - eta) ** 2 * 2.0 * p_d * keep
    return h0, h1, c1, h2, c2


def entangle_fidelity_exact(spec: ProtocolSpec) -> ProtocolResult:
    """Closed-form conditional populations and fidelity.

    One-click branch weights (unnormalized, common factor ``1 - p_d`` from
    the silent arm):

    * neither emits, one arm dark-counts;
    * one emits and is detected (coherent Bell branch);
    * one emits, the photon is lost, one arm dark-counts (even mixture);
    * both emit: at least one detected, or none detected with a dark count.

    The two-click weights are products of per-round herald factors, the
    second round seeing the flipped emitter configuration.
    """
    p_e, p_d, eta = spec.p_e, spec.p_d, spec.eta
    h0, h1, c1, h2, c2 = _round_factors(p_d, eta)
    if spec.scheme == "one-click":
        keep = 1.0 - p_d
        w00 = (1.0 - p_e) ** 2 * h0
        w_psi = 2.0 * p_e * (1.0 - p_e) * c1
        mix = 2.0 * p_e * (1.0 - p_e) * (1.0 - eta) * 2.0 * p_d * keep
        w11 = p_e**2 * h2
        photon = w_psi + p_e**2 * c2
    else:
        w00 = (1.0 - p_e) ** 2 * h0 * h2
        w_psi = 2.0 * p_e * (1.0 - p_e) * c1**2
        mix = 2.0 * p_e * (1.0 - p_e) * (h1**2 - c1**2)
        w11 = p_e**2 * h2 * h0
        photon = w_psi
    return _result_from_unnormalized(
        spec.scheme, w00, w_psi, mix / 2.0, mix / 2.0, w11, photon
    )


def entangle_fidelity_asymptotic(spec: ProtocolSpec) -> AsymptoticEntangleResult:
    """Small ``p_e``, small ``p_d`` expansion of the conditional fidelity.

    One-click: ``F = 1 - p_e (1 - eta/2) - p_d / (eta p_e)``, maximized at
    ``p_e = sqrt(p_d / (eta (1 - eta/2)))`` where it equals
    ``1 - 2 sqrt((1/eta - 1/2) p_d)``. Two-click (at ``p_e = 1/2``):
    ``F = 1 - (6/eta - 4) p_d``. A :class:`ValidityWarning` is emitted when
    the stated orderings ``p_d/eta << p_e << 1`` (one-click) or
    ``(6/eta - 4) p_d << 1`` (two-click) are not comfortably satisfied.
    """
    p_e, p_d, eta = spec.p_e, spec.p_d, spec.eta
    if eta <= 0.0:
        raise DomainError("asymptotic fidelities require eta > 0")
    if spec.scheme == "one-click":
        if p_e <= 0.0:
            raise DomainError("the one-click expansion requires p_e > 0")
        if p_e > 0.3 or p_d / eta > 0.3 * p_e:
            warnings.warn(
                "one-click expansion outside its regime "
                f"(needs p_d/eta << p_e << 1; got p_d/eta={p_d / eta:.3g}, "
                f"p_e={p_e:.3g})",
                ValidityWarning,
                stacklevel=2,
            )
        fidelity = 1.0 - p_e * (1.0 - eta / 2.0) - p_d / (eta * p_e)
        p_e_opt = math.sqrt(p_d / (eta * (1.0 - eta / 2.0)))
        fidelity_opt = 1.0 - 2.0 * math.sqrt((1.0 / eta - 0.5) * p_d)
        return AsymptoticEntangleResult(
            fidelity=fidelity, p_e_opt=p_e_opt, fidelity_opt=fidelity_opt
        )
    penalty = (6.0 / eta - 4.0) * p_d
    if penalty > 0.2:
        warnings.warn(
            "two-click expansion outside its regime "
            f"((6/eta - 4) p_d = {penalty:.3g} is not small)",
            ValidityWarning,
            stacklevel=2,
        )
    fidelity = 1.0 - penalty
    return AsymptoticEntangleResult(
        fidelity=fidelity, p_e_opt=0.5, fidelity_opt=fidelity
    )


def _round_events(
    p_d: float, eta: float, n_emit: int
) -> Iterator[tuple[float, bool, int]]:
    """Microscopic outcomes of one round: (probability, heralded, detected).

    Enumerates per-photon detection, the beam-splitter arm (single photon
    or bunched pair), and both arms' dark-count flags.
    """
    for flags in itertools.product((0, 1), repeat=n_emit):
        p_det = 1.0
        for f in flags:
            p_det *= eta if f else 1.0 - eta
        n_det = sum(flags)
        arm_choices = ((None, 1.0),) if n_det == 0 else ((0, 0.5), (1, 0.5))
        for arm, p_arm in arm_choices:
            for d0, d1 in itertools.product((0, 1), (0, 1)):
                p_dark = (p_d if d0 else 1.0 - p_d) * (p_d if d1 else 1.0 - p_d)
                clicks = [d0, d1]
                if arm is not None:
                    clicks[arm] = 1
                heralded = clicks[0] + clicks[1] == 1
                yield p_det * p_arm * p_dark, heralded, n_det


def protocol_enumerate(spec: ProtocolSpec) -> ProtocolResult:
    """Exhaustive walk of the microscopic outcome tree.

    Completely independent of the closed-form branch weights: emitter
    configurations, per-photon detections, beam-splitter arms and dark
    counts are enumerated one microscopic event at a time and accumulated
    into the heralded populations.
    """
    p_e, p_d, eta = spec.p_e, spec.p_d, spec.eta
    n_rounds = 1 if spec.scheme == "one-click" else 2
    weights = {"00": 0.0, "psi_plus": 0.0, "01": 0.0, "10": 0.0, "11": 0.0}
    photon = 0.0
    for e1, e2 in itertools.product((0, 1), (0, 1)):
        sector = (p_e if e1 else 1.0 - p_e) * (p_e if e2 else 1.0 - p_e)
        if sector == 0.0:
            continue
        emits = [e1 + e2]
        if n_rounds == 2:
            emits.append((1 - e1) + (1 - e2))
        rounds = [
            [ev for ev in _round_events(p_d, eta, n) if ev[1]] for n in emits
        ]
        for combo in itertools.product(*rounds):
            prob = sector
            coherent = True
            caused = True
            for (p, _, n_det), n_emit in zip(combo, emits):
                prob *= p
                coherent = coherent and n_det == n_emit
                caused = caused and n_det >= 1
            if e1 != e2 and coherent:
                weights["psi_plus"] += prob
            else:
                weights[f"{e1}{e2}"] += prob
            if caused:
                photon += prob
    return _result_from_unnormalized(
        spec.scheme,
        weights["00"],
        weights["psi_plus"],
        weights["01"],
        weights["10"],
        weights["11"],
        photon,
    )


def _mc_round(
    rng: np.random.Generator,
    emit1: np.ndarray,
    emit2: np.ndarray,
    eta: float,
    p_d: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized single round: (heralded, all emitted detected, any detected)."""
    n = emit1.size
    det1 = emit1 & (rng.random(n) < eta)
    det2 = emit2 & (rng.random(n) < eta)
    any_det = det1 | det2
    # one arm draw serves both the single-photon and the bunched-pair case
    arm0 = rng.random(n) < 0.5
    dark0 = rng.random(n) < p_d
    dark1 = rng.random(n) < p_d
    click0 = (any_det & arm0) | dark0
    click1 = (any_det & ~arm0) | dark1
    heralded = click0 ^ click1
    all_det = (det1 | ~emit1) & (det2 | ~emit2)
    return heralded, all_det, any_det


def protocol_montecarlo(
    spec: ProtocolSpec, trials: int, seed: int
) -> ProtocolResult:
    """Stochastic estimate of the heralded populations and fidelity.

    Trials are simulated in fixed-size vectorized chunks, each driven by its
    own child of ``SeedSequence(seed)``, so results are bit-reproducible for
    a given ``(seed, trials)`` and independent of chunk scheduling.
    Fidelity uses the per-trial overlap weights {0, 1/2, 1}; its standard
    error is the sample standard deviation of those weights over heralded
    trials, and the success probability carries a binomial standard error.

    Raises
    ------
    NoHeraldError
        If no trial heralds (carries ``herald_count = 0``).
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be at least 1, got {trials!r}")
    p_e, p_d, eta = spec.p_e, spec.p_d, spec.eta
    two_click = spec.scheme == "two-click"

    n_chunks = (trials + _MC_CHUNK - 1) // _MC_CHUNK
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    herald_count = 0
    photon_count = 0
    weight_sum = 0.0
    weight_sq_sum = 0.0
    class_counts = {"00": 0, "psi_plus": 0, "01": 0, "10": 0, "11": 0}

    done = 0
    for child in children:
        n = min(_MC_CHUNK, trials - done)
        done += n
        rng = np.random.default_rng(child)
        emit1 = rng.random(n) < p_e
        emit2 = rng.random(n) < p_e
        heralded, all_det, any_det = _mc_round(rng, emit1, emit2, eta, p_d)
        caused = any_det
        if two_click:
            her2, all2, any2 = _mc_round(rng, ~emit1, ~emit2, eta, p_d)
            heralded &= her2
            all_det &= all2
            caused = caused & any2
        one_exc = emit1 ^ emit2
        bell = heralded & one_exc & all_det
        mixed = heralded & one_exc & ~all_det
        weights = np.zeros(n)
        weights[bell] = 1.0
        weights[mixed] = 0.5

        herald_count += int(heralded.sum())
        photon_count += int((heralded & caused).sum())
        weight_sum += float(weights[heralded].sum())
        weight_sq_sum += float((weights[heralded] ** 2).sum())
        class_counts["psi_plus"] += int(bell.sum())
        class_counts["00"] += int((heralded & ~emit1 & ~emit2).sum())
        class_counts["11"] += int((heralded & emit1 & emit2).sum())
        class_counts["01"] += int((mixed & ~emit1 & emit2).sum())
        class_counts["10"] += int((mixed & emit1 & ~emit2).sum())

    if herald_count == 0:
        raise NoHeraldError(
            f"no heralds in {trials} trials; cannot condition",
            herald_count=0,
        )
    fidelity = weight_sum / herald_count
    var = max(weight_sq_sum / herald_count - fidelity**2, 0.0)
    fidelity_stderr = math.sqrt(var / herald_count)
    success = herald_count / trials
    success_stderr = math.sqrt(success * (1.0 - success) / trials)
    populations = {k: v / herald_count for k, v in class_counts.items()}
    return ProtocolResult(
        scheme=spec.scheme,
        populations=populations,
        fidelity=fidelity,
        success_probability=success,
        photon_herald_probability=photon_count / trials,
        normalization=success,
        fidelity_stderr=fidelity_stderr,
        success_stderr=success_stderr,
        herald_count=herald_count,
        trials=trials,
    )
