"""Heralded hyperparallel CNOT and CNOT^N gate runs.

One run sends the control photon (a) and then each target photon through the
polarization and spatial routing stages of ``circuit``. The two spins start
in (up+down)/sqrt2; target photons are wrapped in polarization/spatial
Hadamards so that a block transit toggles them conditioned on the spin, and
final spin Hadamards convert the accumulated Z kicks into measurable flips.
Measuring the spins and applying the outcome-dependent phase feed-forward to
photon a leaves the same conditional photon state for every spin record: a
CNOT on the polarization bits (control a) and, independently, a CNOT on the
spatial bits, both applied to each target.

A run is trace-decreasing: with block transmission T, the heralded-success
probability is |T|^(4(N+1)) for N targets, the detector sinks hold the
heralded-failure mass, and the absorbed sink holds the rest.

Two modes: "amplitude" evolves amplitudes once and reports the full outcome
distribution (the conditional state is outcome-independent, so the reported
spin record is just the canonical first branch); "sampled" additionally draws
the spin record from a seeded RNG. Per-shot realizations of the heralding
itself (click / absorb / succeed) are provided by ``sample_run`` and
``sample_shots``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .circuit import ElementTrace, stage_polarization, stage_spatial
from .errors import DegeneratePhysicsError, ValidationError
from .hyperstate import (
    ABSORBED,
    DETECTOR_B1,
    DETECTOR_B2,
    BasisLabel,
    HyperState,
    PhotonSpec,
    Pol,
    Spatial,
    Spin,
    _expand,
    fidelity,
    init_state,
    pol_mask,
    spatial_mask,
)
from .scattering import BlockCoeffs, CavityParams, block_coeffs, scatter_coeffs

# Below this transmission magnitude the gate cannot post-select a success.
MIN_BLOCK_T = 1e-12

MODES = ("amplitude", "sampled")


@dataclass(frozen=True)
class GateConfig:
    """Physics and execution settings for one gate run.

    mirror_T_override replaces the balancing mirrors' transmission (which
    defaults to the block's own T so that all branches attenuate equally).
    Setting it to anything else unbalances the interferometer and degrades
    fidelity; it exists for exactly that kind of what-if run.
    """

    params: CavityParams
    n_targets: int = 1
    mirror_T_override: complex | None = None
    mode: str = "amplitude"
    rng_seed: int | None = None

    def __post_init__(self):
        if not isinstance(self.params, CavityParams):
            raise ValidationError("params must be a CavityParams")
        if self.n_targets < 1:
            raise ValidationError(f"n_targets must be >= 1, got {self.n_targets}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "sampled" and self.rng_seed is None:
            raise ValidationError("sampled mode requires rng_seed")
        if self.mirror_T_override is not None:
            if abs(self.mirror_T_override) > 1.0 + 1e-12:
                raise ValidationError(
                    f"mirror override magnitude {abs(self.mirror_T_override)} exceeds 1")


class OutcomeBranch(NamedTuple):
    """One spin-measurement branch after feed-forward. probability is
    absolute (all branches together sum to the success probability)."""
    spin_record: tuple[Spin, Spin]
    probability: float
    corrections: tuple[bool, bool]  # (pol phase applied, spatial phase applied)
    state: HyperState               # photon-only, normalized, corrected


@dataclass
class GateOutcome:
    """Full result of one gate run.

    success_prob + heralded_failure_prob + absorbed_prob = 1 (to rounding).
    branches lists every nonzero spin outcome; conditional_state is the
    corrected state of the reported branch (they are all equal up to a global
    phase, which is the point of the feed-forward).
    """

    conditional_state: HyperState
    spin_record: tuple[Spin, Spin]
    corrections: tuple[bool, bool]
    success_prob: float
    detector_probs: dict[str, float]
    absorbed_prob: float
    branches: tuple[OutcomeBranch, ...]
    trace: ElementTrace = field(default_factory=ElementTrace)

    @property
    def heralded_failure_prob(self) -> float:
        return math.fsum(self.detector_probs.values())


# stage hook receives (photon, detector sink, norm before, sinks before, state after)
StageHook = Callable[[int, str, float, dict[str, float], HyperState], None]


def _check_targets(targets: Sequence[PhotonSpec], cfg: GateConfig) -> None:
    if len(targets) != cfg.n_targets:
        raise ValidationError(
            f"got {len(targets)} target specs but n_targets={cfg.n_targets}")


def _run_protocol(control: PhotonSpec, targets: Sequence[PhotonSpec],
                  cfg: GateConfig, stage_hook: StageHook | None = None
                  ) -> tuple[HyperState, BlockCoeffs, ElementTrace]:
    """Evolve the joint state through the whole optical train, up to (not
    including) the spin measurement."""
    _check_targets(targets, cfg)
    bc = block_coeffs(scatter_coeffs(cfg.params))
    if abs(bc.T) < MIN_BLOCK_T:
        raise DegeneratePhysicsError(
            f"basic block never transmits (|T|={abs(bc.T):.3e}): "
            "the gate cannot herald a success")
    mirror_T = bc.T if cfg.mirror_T_override is None else cfg.mirror_T_override
    trace = ElementTrace()
    state = init_state([control, *targets], spins="plus")
    trace.append("prepare", None, f"{1 + len(targets)} photons, spins (up+down)/sqrt2")

    def run_stage(stage, photon: int, detector: str) -> None:
        if stage_hook is None:
            stage(state, photon, bc, mirror_T, trace)
            return
        pre_norm = state.norm_sq()
        pre_sinks = dict(state.sinks)
        stage(state, photon, bc, mirror_T, trace)
        stage_hook(photon, detector, pre_norm, pre_sinks, state)

    run_stage(stage_polarization, 0, DETECTOR_B1)
    run_stage(stage_spatial, 0, DETECTOR_B2)
    state.spin_hadamard(1)
    trace.append("spin_hadamard", None, "spin=1")
    state.spin_hadamard(2)
    trace.append("spin_hadamard", None, "spin=2")
    for i in range(1, 1 + len(targets)):
        state.pol_hadamard(i)
        trace.append("pol_hadamard", i)
        state.spatial_hadamard(i)
        trace.append("spatial_hadamard", i)
        run_stage(stage_polarization, i, DETECTOR_B1)
        run_stage(stage_spatial, i, DETECTOR_B2)
        state.pol_hadamard(i)
        trace.append("pol_hadamard", i)
        state.spatial_hadamard(i)
        trace.append("spatial_hadamard", i)
    state.spin_hadamard(1)
    trace.append("spin_hadamard", None, "spin=1")
    state.spin_hadamard(2)
    trace.append("spin_hadamard", None, "spin=2")
    return state, bc, trace


def _measure_and_correct(state: HyperState) -> tuple[OutcomeBranch, ...]:
    """Spin measurement plus feed-forward: spin 1 down flips the sign of
    photon a's L component, spin 2 down flips the sign of its mode-2
    component. After that every branch holds the same photon state."""
    branches = []
    for outcome, prob, collapsed in state.measure_spins():
        fix_pol = outcome[0] is Spin.DOWN
        fix_spatial = outcome[1] is Spin.DOWN
        if fix_pol:
            collapsed.pol_phase(0)
        if fix_spatial:
            collapsed.spatial_phase(0)
        branches.append(OutcomeBranch(outcome, prob, (fix_pol, fix_spatial), collapsed))
    return tuple(branches)


def hyper_cnot_n(control: PhotonSpec, targets: Sequence[PhotonSpec],
                 cfg: GateConfig) -> GateOutcome:
    """Run the CNOT^N gate (photon a controls every target, in both degrees
    of freedom at once) and return the heralded outcome."""
    state, _, trace = _run_protocol(control, targets, cfg)
    success = state.norm_sq()
    detector_probs = {DETECTOR_B1: state.sinks[DETECTOR_B1],
                      DETECTOR_B2: state.sinks[DETECTOR_B2]}
    absorbed = state.sinks[ABSORBED]
    branches = _measure_and_correct(state)
    if cfg.mode == "sampled":
        rng = np.random.default_rng(cfg.rng_seed)
        probs = np.array([b.probability for b in branches]) / success
        chosen = branches[int(rng.choice(len(branches), p=probs / probs.sum()))]
    else:
        chosen = branches[0]
    return GateOutcome(
        conditional_state=chosen.state,
        spin_record=chosen.spin_record,
        corrections=chosen.corrections,
        success_prob=success,
        detector_probs=detector_probs,
        absorbed_prob=absorbed,
        branches=branches,
        trace=trace,
    )


def hyper_cnot(control: PhotonSpec, target: PhotonSpec,
               cfg: GateConfig) -> GateOutcome:
    """Two-photon special case of hyper_cnot_n."""
    if cfg.n_targets != 1:
        raise ValidationError(
            f"hyper_cnot is the single-target gate; config says n_targets={cfg.n_targets}")
    return hyper_cnot_n(control, [target], cfg)


def ideal_hyper_cnot_n(control: PhotonSpec,
                       targets: Sequence[PhotonSpec]) -> HyperState:
    """Exact state the lossless gate should emit, built directly from the
    truth rule rather than the optical train: on the control's L component
    every target's polarization pair is swapped, and on the control's mode-2
    component every target's spatial pair is swapped. Photon-only,
    normalized."""
    if not isinstance(control, PhotonSpec):
        raise ValidationError("control is not a PhotonSpec")
    n = 1 + len(targets)
    amps: dict[int, complex] = {}
    for cp in (0, 1):
        for cs in (0, 1):
            c_amp = control.pol[cp] * control.spatial[cs]
            if c_amp == 0:
                continue
            sub = {(cp << 0) | (cs << 1): c_amp}
            for i, t in enumerate(targets, start=1):
                if not isinstance(t, PhotonSpec):
                    raise ValidationError(f"target {i - 1} is not a PhotonSpec")
                pol_pair = t.pol if cp == 0 else (t.pol[1], t.pol[0])
                spat_pair = t.spatial if cs == 0 else (t.spatial[1], t.spatial[0])
                sub = _expand(sub, pol_mask(i), pol_pair)
                sub = _expand(sub, spatial_mask(i), spat_pair)
            amps.update(sub)  # control bits differ per (cp, cs): labels disjoint
    return HyperState(n, amps, has_spins=False)


def ideal_hyper_cnot(control: PhotonSpec, target: PhotonSpec) -> HyperState:
    return ideal_hyper_cnot_n(control, [target])


class TruthRow(NamedTuple):
    control: str   # e.g. "R,1"
    target: str
    output: str    # dominant output basis label, e.g. "a:R,1 b:L,2"
    fidelity: float


def truth_table(cfg: GateConfig) -> list[TruthRow]:
    """All 16 two-photon basis inputs through the gate. Each output is a
    single basis state; fidelity is taken against the truth rule."""
    if cfg.n_targets != 1:
        raise ValidationError("truth_table is defined for the single-target gate")
    rows = []
    for cp in (Pol.R, Pol.L):
        for cs in (Spatial.M1, Spatial.M2):
            for tp in (Pol.R, Pol.L):
                for ts in (Spatial.M1, Spatial.M2):
                    control = PhotonSpec.basis(cp, cs)
                    target = PhotonSpec.basis(tp, ts)
                    out = hyper_cnot(control, target, cfg)
                    label, _ = max(out.conditional_state.amplitudes.items(),
                                   key=lambda kv: abs(kv[1]))
                    rows.append(TruthRow(
                        control=f"{cp.name},{int(cs) + 1}",
                        target=f"{tp.name},{int(ts) + 1}",
                        output=str(BasisLabel(label, 2, has_spins=False)),
                        fidelity=fidelity(out.conditional_state,
                                          ideal_hyper_cnot(control, target)),
                    ))
    return rows


# ---------------------------------------------------------------------------
# Per-shot sampling.
#
# The optical train factors into a chain of stages, each of which clicks,
# absorbs, or passes the photon with probabilities that do not depend on
# earlier survivals (the conditional state entering each stage is fixed).
# One amplitude run therefore yields the exact per-stage conditional
# probabilities, and shots reduce to walking that ladder with uniforms --
# the same trajectory distribution as resolving each element stochastically,
# at a tiny fraction of the cost.
# ---------------------------------------------------------------------------

class StageStep(NamedTuple):
    photon: int
    detector: str
    q_click: float   # P(detector click | reached this stage)
    q_absorb: float  # P(silent absorption | reached this stage)


class ShotRecord(NamedTuple):
    """Outcome of one realized shot. result is "success", "heralded_failure"
    (detector and photon say which click), or "absorbed" (photon says where
    the run died). state/spin_record/corrections are set only on success."""
    result: str
    detector: str | None
    photon: int | None
    spin_record: tuple[Spin, Spin] | None
    corrections: tuple[bool, bool] | None
    state: HyperState | None


@dataclass
class SampleStats:
    """Aggregate counts over many shots."""

    shots: int
    successes: int
    detector_clicks: dict[str, int]
    absorbed: int
    spin_counts: dict[tuple[Spin, Spin], int]
    success_prob: float  # exact value the frequency estimates

    @property
    def success_frequency(self) -> float:
        return self.successes / self.shots


def _ladder(control: PhotonSpec, targets: Sequence[PhotonSpec], cfg: GateConfig
            ) -> tuple[list[StageStep], tuple[OutcomeBranch, ...], float]:
    steps: list[StageStep] = []

    def hook(photon: int, detector: str, pre_norm: float,
             pre_sinks: dict[str, float], state: HyperState) -> None:
        d_click = state.sinks[detector] - pre_sinks[detector]
        d_abs = state.sinks[ABSORBED] - pre_sinks[ABSORBED]
        steps.append(StageStep(photon, detector,
                               d_click / pre_norm, d_abs / pre_norm))

    state, _, _ = _run_protocol(control, targets, cfg, stage_hook=hook)
    success = state.norm_sq()
    branches = _measure_and_correct(state)
    return steps, branches, success


def _require_seed(cfg: GateConfig) -> None:
    if cfg.rng_seed is None:
        raise ValidationError("sampling requires a GateConfig with rng_seed set")


def _realize(row: np.ndarray, steps: list[StageStep],
             branches: tuple[OutcomeBranch, ...], success: float) -> ShotRecord:
    for k, st in enumerate(steps):
        u = row[k]
        if u < st.q_click:
            return ShotRecord("heralded_failure", st.detector, st.photon,
                              None, None, None)
        if u < st.q_click + st.q_absorb:
            return ShotRecord("absorbed", None, st.photon, None, None, None)
    cum = 0.0
    u = row[len(steps)]
    for b in branches:
        cum += b.probability / success
        if u < cum:
            return ShotRecord("success", None, None, b.spin_record,
                              b.corrections, b.state)
    b = branches[-1]
    return ShotRecord("success", None, None, b.spin_record, b.corrections, b.state)


def sample_run(control: PhotonSpec, targets: Sequence[PhotonSpec],
               cfg: GateConfig) -> ShotRecord:
    """Realize a single shot (seeded). The first shot of sample_shots with
    the same seed is this shot."""
    _require_seed(cfg)
    steps, branches, success = _ladder(control, targets, cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    return _realize(rng.random(len(steps) + 1), steps, branches, success)


def sample_shots(control: PhotonSpec, targets: Sequence[PhotonSpec],
                 cfg: GateConfig, shots: int) -> SampleStats:
    """Realize many shots and tally them. Deterministic given the seed."""
    _require_seed(cfg)
    if shots < 1:
        raise ValidationError(f"shots must be >= 1, got {shots}")
    steps, branches, success = _ladder(control, targets, cfg)
    k = len(steps)
    rng = np.random.default_rng(cfg.rng_seed)
    u = rng.random((shots, k + 1))

    q_click = np.array([s.q_click for s in steps])
    q_fail = np.array([s.q_click + s.q_absorb for s in steps])
    fails = u[:, :k] < q_fail
    any_fail = fails.any(axis=1)
    first = np.where(any_fail, fails.argmax(axis=1), k)

    detector_clicks = {DETECTOR_B1: 0, DETECTOR_B2: 0}
    absorbed = 0
    fail_idx = np.flatnonzero(any_fail)
    if fail_idx.size:
        at = first[fail_idx]
        clicked = u[fail_idx, at] < q_click[at]
        for step_i, step in enumerate(steps):
            here = at == step_i
            detector_clicks[step.detector] += int(np.count_nonzero(clicked & here))
            absorbed += int(np.count_nonzero(~clicked & here))

    spin_counts = {b.spin_record: 0 for b in branches}
    succ_idx = np.flatnonzero(~any_fail)
    if succ_idx.size:
        cond = np.array([b.probability for b in branches]) / success
        cum = np.cumsum(cond)
        cum[-1] = max(cum[-1], 1.0)  # guard the top edge against rounding
        pick = np.searchsorted(cum, u[succ_idx, k], side="right")
        pick = np.minimum(pick, len(branches) - 1)
        for b_i, count in zip(*np.unique(pick, return_counts=True)):
            spin_counts[branches[int(b_i)].spin_record] += int(count)

    return SampleStats(
        shots=shots,
        successes=int(succ_idx.size),
        detector_clicks=detector_clicks,
        absorbed=absorbed,
        spin_counts=spin_counts,
        success_prob=success,
    )
