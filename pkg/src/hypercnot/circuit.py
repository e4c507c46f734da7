"""Optical elements and the two per-photon routing stages of the gate.

The gate hardware routes each photon, one at a time, through two stages:

  polarization stage   R branch crosses a partially transmitting mirror;
                       the L branch is bit-flipped onto R, crosses the first
                       basic block (spin 1), and comes back out as L. Both
                       branches pick up the same transmission factor, and the
                       L branch additionally applies a Z to spin 1.

  spatial stage        mode-1 branch crosses a mirror; the mode-2 branch
                       crosses the second basic block (spin 2) with flip
                       plates arranged so net polarization is preserved.

A basic block acts on an incoming R photon as an effective two-outcome map:
with amplitude D the photon reflects unchanged into a heralding detector
(failure), with amplitude T it transmits with polarization flipped and a Z
applied to the block's spin. Whatever the two amplitudes leave behind is
absorbed. ``block_interact`` implements that effective map; the raw
single-pass scattering rules are also available (``raw_cavity_pass``) for
validating any future explicit reconstruction of the block interior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .errors import RoutingContractError, ValidationError
from .hyperstate import (
    ABSORBED,
    DETECTOR_B1,
    DETECTOR_B2,
    HyperState,
    Pol,
    Spatial,
    pol_mask,
    spatial_mask,
    spin_mask,
)
from .scattering import BlockCoeffs, ScatterCoeffs

# Predicate over one photon's (pol, spatial) bits selecting a branch.
BranchSelector = Callable[[Pol, Spatial], bool]


class Direction(Enum):
    """Propagation direction relative to the cavity quantization axis. Only
    raw_cavity_pass needs it: together with circular polarization it fixes
    the photon's spin projection and hence which spin state couples."""
    ALONG_AXIS = 0
    AGAINST_AXIS = 1


@dataclass
class ElementTrace:
    """Append-only log of (element, photon, branch condition) records for one
    gate run. Two runs with identical inputs produce equal traces."""

    records: list[tuple[str, int | None, str]] = field(default_factory=list)

    def append(self, element: str, photon: int | None, condition: str = "") -> None:
        self.records.append((element, photon, condition))

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def _log(trace: ElementTrace | None, element: str, photon: int | None,
         condition: str = "") -> None:
    if trace is not None:
        trace.append(element, photon, condition)


def mirror_attenuate(state: HyperState, photon: int,
                     selector: BranchSelector | None, T: complex,
                     trace: ElementTrace | None = None,
                     condition: str = "") -> HyperState:
    """Multiply the selected branch of one photon by T, depositing the lost
    mass 1-|T|^2 per amplitude into the absorbed sink. selector=None selects
    every amplitude."""
    if abs(T) > 1.0 + 1e-12:
        raise ValidationError(f"mirror transmission |T|={abs(T)} exceeds 1")
    pm = state._photon_mask(photon, spatial=False)
    sm = state._photon_mask(photon, spatial=True)
    loss = max(0.0, 1.0 - abs(T) ** 2)
    out: dict[int, complex] = {}
    lost: list[float] = []
    for label, amp in state.amplitudes.items():
        if selector is None or selector(Pol(1 if label & pm else 0),
                                        Spatial(1 if label & sm else 0)):
            out[label] = amp * T
            lost.append(loss * abs(amp) ** 2)
        else:
            out[label] = amp
    state.amplitudes = out
    state._prune()
    state.deposit(ABSORBED, math.fsum(lost))
    _log(trace, "mirror", photon, condition)
    return state


def block_interact(state: HyperState, photon: int, which_spin: int,
                   bc: BlockCoeffs, detector_sink: str,
                   trace: ElementTrace | None = None,
                   condition: str = "") -> HyperState:
    """Effective basic-block map on a routed branch whose photon is R.

    Transmission: factor T, polarization flipped to L, Z on which_spin.
    Reflection: mass |D|^2 per amplitude deposited in detector_sink (heralded
    failure) and removed from the coherent state. The remainder
    (1-|D|^2-|T|^2 per amplitude) goes to the absorbed sink.
    """
    d2 = abs(bc.D) ** 2
    t2 = abs(bc.T) ** 2
    if d2 + t2 > 1.0 + 1e-9:
        raise ValidationError(f"block coefficients violate |D|^2+|T|^2<=1 ({d2 + t2})")
    pm = state._photon_mask(photon, spatial=False)
    zm = state._spin_bit_mask(which_spin)
    absorb_frac = max(0.0, 1.0 - d2 - t2)
    out: dict[int, complex] = {}
    clicked: list[float] = []
    lost: list[float] = []
    for label, amp in state.amplitudes.items():
        if label & pm:
            raise RoutingContractError(
                f"L-polarized amplitude routed into a basic block "
                f"(photon {photon}, label {label:#x}): routing bug")
        p = abs(amp) ** 2
        clicked.append(d2 * p)
        lost.append(absorb_frac * p)
        new_amp = bc.T * amp
        if label & zm:
            new_amp = -new_amp
        out[label | pm] = new_amp
    state.amplitudes = out
    state._prune()
    state.deposit(detector_sink, math.fsum(clicked))
    state.deposit(ABSORBED, math.fsum(lost))
    _log(trace, "block", photon, condition or f"spin={which_spin} sink={detector_sink}")
    return state


def raw_cavity_pass(state: HyperState, photon: int, which_spin: int,
                    sc: ScatterCoeffs, direction: Direction
                    ) -> tuple[HyperState, HyperState]:
    """One pass of a photon through the bare cavity, split by output port.

    A photon whose spin projection matches the given spin's state couples to
    the dipole and scatters with (r, t); otherwise it sees the cold cavity
    and scatters with (r0, t0). Reflection flips the polarization (it also
    reverses propagation, which the caller tracks as routing context). R
    propagating along the axis and L propagating against it carry projection
    +1; the other two combinations carry -1.

    Returns (transmitted, reflected) as new states; the input is untouched
    and the two output norms need not add to the input norm (side leakage
    and dipole decay are lossy).
    """
    pm = state._photon_mask(photon, spatial=False)
    zm = state._spin_bit_mask(which_spin)
    if not isinstance(direction, Direction):
        raise ValidationError(f"direction must be a Direction, got {direction!r}")
    dbit = direction.value
    trans: dict[int, complex] = {}
    refl: dict[int, complex] = {}
    for label, amp in state.amplitudes.items():
        p = 1 if label & pm else 0
        s = 1 if label & zm else 0
        coupled = (p ^ dbit) == s
        tc, rc = (sc.t, sc.r) if coupled else (sc.t0, sc.r0)
        trans[label] = tc * amp
        refl[label ^ pm] = rc * amp
    mk = lambda amps: HyperState(state.n_photons, amps, has_spins=state.has_spins,
                                 prune_threshold=state.prune_threshold)
    t_state, r_state = mk(trans), mk(refl)
    t_state._prune()
    r_state._prune()
    return t_state, r_state


def _split_by_mask(state: HyperState, mask: int) -> tuple[HyperState, HyperState]:
    """Partition amplitudes by one bit into two sink-free working states."""
    lo: dict[int, complex] = {}
    hi: dict[int, complex] = {}
    for label, amp in state.amplitudes.items():
        (hi if label & mask else lo)[label] = amp
    mk = lambda amps: HyperState(state.n_photons, amps, has_spins=state.has_spins,
                                 prune_threshold=state.prune_threshold)
    return mk(lo), mk(hi)


def _merge_into(state: HyperState, *parts: HyperState) -> None:
    """Coherently reunite branch states (amplitudes add on label collision)
    and fold their sink deposits into the parent."""
    merged: dict[int, complex] = {}
    for part in parts:
        for label, amp in part.amplitudes.items():
            merged[label] = merged.get(label, 0j) + amp
        for sid, mass in part.sinks.items():
            if mass:
                state.sinks[sid] += mass
    state.amplitudes = merged
    state._prune()


def stage_polarization(state: HyperState, photon: int, bc: BlockCoeffs,
                       mirror_T: complex | None = None,
                       trace: ElementTrace | None = None) -> HyperState:
    """First routing stage: splits on polarization, sends R across a mirror
    and L (bit-flipped) through the block coupled to spin 1, then reunites.
    Net: R branch x mirror_T; L branch x T with a Z on spin 1."""
    t_mirror = bc.T if mirror_T is None else mirror_T
    pm = state._photon_mask(photon, spatial=False)
    _log(trace, "split_pol", photon)
    r_part, l_part = _split_by_mask(state, pm)
    mirror_attenuate(r_part, photon, None, t_mirror, trace, "pol=R")
    l_part.pol_flip(photon)
    _log(trace, "pol_flip", photon, "pol=L")
    block_interact(l_part, photon, 1, bc, DETECTOR_B1, trace,
                   f"pol=L spin=1 sink={DETECTOR_B1}")
    _merge_into(state, r_part, l_part)
    _log(trace, "reunite_pol", photon)
    return state


def stage_spatial(state: HyperState, photon: int, bc: BlockCoeffs,
                  mirror_T: complex | None = None,
                  trace: ElementTrace | None = None) -> HyperState:
    """Second routing stage: splits on spatial mode, sends mode 1 across a
    mirror and mode 2 through the block coupled to spin 2. Flip plates around
    the block keep the mode-2 branch's polarization unchanged. Net: mode-1
    branch x mirror_T; mode-2 branch x T with a Z on spin 2."""
    t_mirror = bc.T if mirror_T is None else mirror_T
    sm = state._photon_mask(photon, spatial=True)
    _log(trace, "split_spatial", photon)
    m1_part, m2_part = _split_by_mask(state, sm)
    mirror_attenuate(m1_part, photon, None, t_mirror, trace, "spatial=1")
    pm = state._photon_mask(photon, spatial=False)
    r_sub, l_sub = _split_by_mask(m2_part, pm)
    # L enters flipped to R and leaves the block as L.
    l_sub.pol_flip(photon)
    _log(trace, "pol_flip", photon, "spatial=2 pol=L")
    block_interact(l_sub, photon, 2, bc, DETECTOR_B2, trace,
                   f"spatial=2 pol=L spin=2 sink={DETECTOR_B2}")
    # R leaves the block as L and is flipped back to R.
    block_interact(r_sub, photon, 2, bc, DETECTOR_B2, trace,
                   f"spatial=2 pol=R spin=2 sink={DETECTOR_B2}")
    r_sub.pol_flip(photon)
    _log(trace, "pol_flip", photon, "spatial=2 pol=R")
    _merge_into(state, m1_part, l_sub, r_sub)
    _log(trace, "reunite_spatial", photon)
    return state
