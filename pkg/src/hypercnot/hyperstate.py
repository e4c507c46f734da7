"""Sparse amplitude state of P dual-rail photons and two stationary spins.

Each photon carries two bits: a circular-polarization bit (R=0, L=1) and a
spatial-mode bit (mode 1 = 0, mode 2 = 1). Two spin bits (up=0, down=1)
follow the photon bits. A basis label packs them into one integer in the
canonical order

    photon 0 pol | photon 0 spatial | photon 1 pol | ... | spin 1 | spin 2

with "photon 0 pol" the least significant bit. This ordering is part of the
public contract; CLI reports and tests rely on it.

Amplitudes live in a sparse dict keyed by the packed label. The state is not
kept normalized: heralding and absorption move probability mass out of the
coherent amplitudes into named sink accumulators, so for any initially
normalized state

    sum |amplitude|^2  +  sum sinks  =  1

holds (to rounding) after every complete element application. All probability
reductions use math.fsum, so results do not depend on dict insertion order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, NamedTuple, Sequence

from .errors import AmplitudeLostError, ValidationError

_SQRT_HALF = 1.0 / math.sqrt(2.0)

# Probability sinks for non-trace-preserving bookkeeping.
DETECTOR_B1 = "detector_B1"
DETECTOR_B2 = "detector_B2"
ABSORBED = "absorbed"
SINK_IDS = (DETECTOR_B1, DETECTOR_B2, ABSORBED)

# Tolerance on |c0|^2 + |c1|^2 = 1 for ingested coefficient pairs.
NORM_TOL = 1e-9


class Pol(IntEnum):
    """Circular polarization bit."""
    R = 0
    L = 1


class Spatial(IntEnum):
    """Spatial-mode bit (path 1 or path 2)."""
    M1 = 0
    M2 = 1


class Spin(IntEnum):
    """Electron spin bit in the measurement basis."""
    UP = 0
    DOWN = 1


@dataclass(frozen=True)
class PhotonSpec:
    """Input single-photon state: complex coefficient pairs for (R, L) and
    (mode 1, mode 2). Each pair must be normalized within NORM_TOL."""

    pol: tuple[complex, complex]
    spatial: tuple[complex, complex]

    def __post_init__(self):
        object.__setattr__(self, "pol", (complex(self.pol[0]), complex(self.pol[1])))
        object.__setattr__(self, "spatial",
                           (complex(self.spatial[0]), complex(self.spatial[1])))
        for name, pair in (("pol", self.pol), ("spatial", self.spatial)):
            nrm = abs(pair[0]) ** 2 + abs(pair[1]) ** 2
            if abs(nrm - 1.0) > NORM_TOL:
                raise ValidationError(
                    f"{name} pair {pair} has squared norm {nrm:.12g}, expected 1")

    @classmethod
    def basis(cls, pol: Pol, spatial: Spatial) -> "PhotonSpec":
        return cls(pol=(1 - int(pol), int(pol)), spatial=(1 - int(spatial), int(spatial)))

    @classmethod
    def uniform(cls) -> "PhotonSpec":
        """Uniform superposition in both degrees of freedom."""
        h = (_SQRT_HALF, _SQRT_HALF)
        return cls(pol=h, spatial=h)


def pol_mask(photon: int) -> int:
    return 1 << (2 * photon)


def spatial_mask(photon: int) -> int:
    return 1 << (2 * photon + 1)


def spin_mask(n_photons: int, which_spin: int) -> int:
    return 1 << (2 * n_photons + which_spin - 1)


def pack_label(pol_bits: Sequence[int], spatial_bits: Sequence[int],
               spin_bits: Sequence[int] = ()) -> int:
    """Pack per-photon (pol, spatial) bits and optional (spin1, spin2) bits
    into a canonical basis label."""
    if len(pol_bits) != len(spatial_bits):
        raise ValidationError("pol_bits and spatial_bits must have equal length")
    bits = 0
    for i, (p, s) in enumerate(zip(pol_bits, spatial_bits)):
        bits |= (int(p) & 1) << (2 * i)
        bits |= (int(s) & 1) << (2 * i + 1)
    for k, sp in enumerate(spin_bits):
        bits |= (int(sp) & 1) << (2 * len(pol_bits) + k)
    return bits


@dataclass(frozen=True)
class BasisLabel:
    """Unpacked view of one basis label; str() gives the report form, e.g.
    ``a:R,1 b:L,2`` (photon 0 is named a, targets b or b1..bN)."""

    bits: int
    n_photons: int
    has_spins: bool = True

    def pol(self, photon: int) -> Pol:
        return Pol((self.bits >> (2 * photon)) & 1)

    def spatial(self, photon: int) -> Spatial:
        return Spatial((self.bits >> (2 * photon + 1)) & 1)

    def spin(self, which_spin: int) -> Spin:
        return Spin((self.bits >> (2 * self.n_photons + which_spin - 1)) & 1)

    def photon_name(self, photon: int) -> str:
        if photon == 0:
            return "a"
        return "b" if self.n_photons == 2 else f"b{photon}"

    def __str__(self) -> str:
        parts = [f"{self.photon_name(i)}:{self.pol(i).name},{int(self.spatial(i)) + 1}"
                 for i in range(self.n_photons)]
        if self.has_spins:
            parts.append(f"s1:{self.spin(1).name.lower()} s2:{self.spin(2).name.lower()}")
        return " ".join(parts)


class SpinMeasurement(NamedTuple):
    outcome: tuple[Spin, Spin]
    probability: float
    state: "HyperState"  # collapsed, photon-only, normalized


class HyperState:
    """Joint amplitude state of ``n_photons`` photons plus (optionally) the
    two spins, with sink accumulators for heralded clicks and absorption.

    prune_threshold: amplitudes with magnitude <= threshold are dropped after
    each operation. The default 0.0 drops only exact zeros (no information is
    ever lost); raise it only for stress tests.
    """

    def __init__(self, n_photons: int, amplitudes: dict[int, complex] | None = None,
                 sinks: dict[str, float] | None = None, has_spins: bool = True,
                 prune_threshold: float = 0.0):
        if n_photons < 1:
            raise ValidationError(f"need at least one photon, got {n_photons}")
        self.n_photons = n_photons
        self.has_spins = has_spins
        self.amplitudes = dict(amplitudes) if amplitudes else {}
        self.sinks = {sid: 0.0 for sid in SINK_IDS}
        if sinks:
            for sid, mass in sinks.items():
                self._check_sink(sid, mass)
                self.sinks[sid] = float(mass)
        self.prune_threshold = prune_threshold

    # -- bookkeeping ------------------------------------------------------

    @property
    def n_bits(self) -> int:
        return 2 * self.n_photons + (2 if self.has_spins else 0)

    def copy(self) -> "HyperState":
        return HyperState(self.n_photons, self.amplitudes, self.sinks,
                          self.has_spins, self.prune_threshold)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HyperState):
            return NotImplemented
        return (self.n_photons == other.n_photons
                and self.has_spins == other.has_spins
                and self.amplitudes == other.amplitudes
                and self.sinks == other.sinks)

    def __repr__(self) -> str:
        return (f"HyperState(n_photons={self.n_photons}, has_spins={self.has_spins}, "
                f"{len(self.amplitudes)} amplitudes, sinks={self.sinks})")

    def norm_sq(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.amplitudes.values())

    def total_probability(self) -> float:
        """Coherent norm squared plus everything deposited in sinks."""
        return math.fsum([self.norm_sq(), *self.sinks.values()])

    def labeled_amplitudes(self) -> list[tuple[BasisLabel, complex]]:
        """Amplitudes in canonical (ascending label) order."""
        return [(BasisLabel(bits, self.n_photons, self.has_spins), amp)
                for bits, amp in sorted(self.amplitudes.items())]

    def _prune(self) -> None:
        thr = self.prune_threshold
        self.amplitudes = {l: a for l, a in self.amplitudes.items() if abs(a) > thr}

    def _photon_mask(self, photon: int, spatial: bool) -> int:
        if not 0 <= photon < self.n_photons:
            raise ValidationError(
                f"invalid photon index {photon} for {self.n_photons}-photon state")
        return spatial_mask(photon) if spatial else pol_mask(photon)

    def _spin_bit_mask(self, which_spin: int) -> int:
        if not self.has_spins:
            raise ValidationError("state has no spins (already measured out)")
        if which_spin not in (1, 2):
            raise ValidationError(f"invalid spin id {which_spin}, expected 1 or 2")
        return spin_mask(self.n_photons, which_spin)

    def _check_sink(self, sink_id: str, mass: float) -> None:
        if sink_id not in SINK_IDS:
            raise ValidationError(f"unknown sink id {sink_id!r}, expected one of {SINK_IDS}")
        if mass < 0:
            raise ValidationError(f"sink mass must be >= 0, got {mass}")

    # -- generic bit operations -------------------------------------------

    def _hadamard(self, mask: int) -> None:
        out: dict[int, complex] = {}
        for label, amp in self.amplitudes.items():
            half = _SQRT_HALF * amp
            lo = label & ~mask
            hi = label | mask
            out[lo] = out.get(lo, 0j) + half
            if label & mask:
                out[hi] = out.get(hi, 0j) - half
            else:
                out[hi] = out.get(hi, 0j) + half
        self.amplitudes = out
        self._prune()

    def _flip(self, mask: int) -> None:
        self.amplitudes = {label ^ mask: amp for label, amp in self.amplitudes.items()}

    def _phase(self, mask: int) -> None:
        self.amplitudes = {label: (-amp if label & mask else amp)
                           for label, amp in self.amplitudes.items()}

    # -- public single-dof operations --------------------------------------

    def pol_hadamard(self, photon: int) -> "HyperState":
        """R -> (R+L)/sqrt2, L -> (R-L)/sqrt2 on one photon (half-wave plate)."""
        self._hadamard(self._photon_mask(photon, spatial=False))
        return self

    def spatial_hadamard(self, photon: int) -> "HyperState":
        """mode1 -> (m1+m2)/sqrt2, mode2 -> (m1-m2)/sqrt2 (50:50 beam splitter)."""
        self._hadamard(self._photon_mask(photon, spatial=True))
        return self

    def pol_flip(self, photon: int) -> "HyperState":
        """Swap R and L amplitudes of one photon (bit-flip plate)."""
        self._flip(self._photon_mask(photon, spatial=False))
        return self

    def pol_phase(self, photon: int) -> "HyperState":
        """Negate amplitudes with this photon in L."""
        self._phase(self._photon_mask(photon, spatial=False))
        return self

    def spatial_phase(self, photon: int) -> "HyperState":
        """Negate amplitudes with this photon in mode 2."""
        self._phase(self._photon_mask(photon, spatial=True))
        return self

    def spin_hadamard(self, which_spin: int) -> "HyperState":
        """up -> (up+down)/sqrt2, down -> (up-down)/sqrt2; maps the conjugate
        basis states (up +/- down)/sqrt2 back onto up/down."""
        self._hadamard(self._spin_bit_mask(which_spin))
        return self

    def spin_z(self, which_spin: int) -> "HyperState":
        """Negate amplitudes with this spin down."""
        self._phase(self._spin_bit_mask(which_spin))
        return self

    def deposit(self, sink_id: str, mass: float) -> "HyperState":
        """Accumulate removed probability mass into a sink."""
        self._check_sink(sink_id, mass)
        self.sinks[sink_id] += mass
        return self

    # -- measurement -------------------------------------------------------

    def measure_spins(self) -> list[SpinMeasurement]:
        """Project both spins onto the up/down basis.

        Returns the outcome branches with nonzero probability, in canonical
        order (up,up), (up,down), (down,up), (down,down). Probabilities are
        absolute (they sum to the remaining coherent norm squared, not to 1);
        each collapsed state is photon-only and renormalized.
        """
        if not self.has_spins:
            raise ValidationError("state has no spins (already measured out)")
        m1 = spin_mask(self.n_photons, 1)
        m2 = spin_mask(self.n_photons, 2)
        photon_bits = (1 << (2 * self.n_photons)) - 1
        buckets: dict[tuple[int, int], dict[int, complex]] = {}
        for label, amp in self.amplitudes.items():
            key = (1 if label & m1 else 0, 1 if label & m2 else 0)
            buckets.setdefault(key, {})[label & photon_bits] = amp
        total = self.norm_sq()
        if total <= 0.0:
            raise AmplitudeLostError("all amplitude lost: nothing left to measure")
        results = []
        for key in ((0, 0), (0, 1), (1, 0), (1, 1)):
            branch = buckets.get(key)
            if not branch:
                continue
            prob = math.fsum(abs(a) ** 2 for a in branch.values())
            if prob <= 0.0:
                continue
            scale = 1.0 / math.sqrt(prob)
            collapsed = HyperState(
                self.n_photons,
                {l: a * scale for l, a in branch.items()},
                has_spins=False,
                prune_threshold=self.prune_threshold,
            )
            results.append(SpinMeasurement((Spin(key[0]), Spin(key[1])), prob, collapsed))
        return results


def init_state(photons: Sequence[PhotonSpec], spins: str = "plus",
               prune_threshold: float = 0.0) -> HyperState:
    """Product state of the given photons and the two spins.

    spins="plus" prepares both spins in (up+down)/sqrt2 (a Hadamard applied to
    up,up); spins="up" leaves them in up,up.
    """
    if not photons:
        raise ValidationError("need at least one photon")
    if spins not in ("plus", "up"):
        raise ValidationError(f"spins must be 'plus' or 'up', got {spins!r}")
    amps: dict[int, complex] = {0: 1.0 + 0j}
    for i, spec in enumerate(photons):
        if not isinstance(spec, PhotonSpec):
            raise ValidationError(f"photon {i} is not a PhotonSpec")
        amps = _expand(amps, pol_mask(i), spec.pol)
        amps = _expand(amps, spatial_mask(i), spec.spatial)
    state = HyperState(len(photons), amps, has_spins=True,
                       prune_threshold=prune_threshold)
    if spins == "plus":
        state.spin_hadamard(1)
        state.spin_hadamard(2)
    return state


def _expand(amps: dict[int, complex], mask: int,
            pair: tuple[complex, complex]) -> dict[int, complex]:
    out: dict[int, complex] = {}
    c0, c1 = pair
    for label, amp in amps.items():
        if c0 != 0:
            out[label] = amp * c0
        if c1 != 0:
            out[label | mask] = amp * c1
    return out


def fidelity(state: HyperState, ideal: HyperState) -> float:
    """Squared inner-product magnitude of two photon-only states. Insensitive
    to global phase; norms are divided out."""
    if state.n_photons != ideal.n_photons or state.has_spins != ideal.has_spins:
        raise ValidationError(
            f"dimension mismatch: {state.n_photons} photons (spins={state.has_spins}) "
            f"vs {ideal.n_photons} (spins={ideal.has_spins})")
    na = state.norm_sq()
    nb = ideal.norm_sq()
    if na <= 0.0 or nb <= 0.0:
        raise ValidationError("cannot compute fidelity of a zero-norm state")
    prods = []
    for label, amp in state.amplitudes.items():
        other = ideal.amplitudes.get(label)
        if other is not None:
            prods.append(amp.conjugate() * other)
    inner = complex(math.fsum(p.real for p in prods), math.fsum(p.imag for p in prods))
    return abs(inner) ** 2 / (na * nb)
