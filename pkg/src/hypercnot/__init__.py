"""Simulator for heralded hyperparallel photonic CNOT gates.

A single emitter-in-cavity unit ("basic block") either transmits a photon
with a spin-conditioned polarization flip or reflects it into a heralding
detector. Two such blocks plus linear optics implement a CNOT -- and, with
more target photons, a CNOT^N -- acting simultaneously on the polarization
and spatial-mode qubits of each photon. The simulation tracks exact sparse
amplitudes, heralded-failure detectors, and absorption, and reproduces the
gate's closed-form success probability |T|^(4(N+1)).
"""

from .analysis import (
    ScanSummary,
    SweepGrid,
    SweepRow,
    emit_report,
    fidelity_scan,
    load_report,
    random_photon_spec,
    sweep_efficiency,
)
from .circuit import (
    Direction,
    ElementTrace,
    block_interact,
    mirror_attenuate,
    raw_cavity_pass,
    stage_polarization,
    stage_spatial,
)
from .errors import (
    AmplitudeLostError,
    DegeneratePhysicsError,
    RoutingContractError,
    ValidationError,
)
from .gates import (
    GateConfig,
    GateOutcome,
    OutcomeBranch,
    SampleStats,
    ShotRecord,
    hyper_cnot,
    hyper_cnot_n,
    ideal_hyper_cnot,
    ideal_hyper_cnot_n,
    sample_run,
    sample_shots,
    truth_table,
)
from .hyperstate import (
    ABSORBED,
    DETECTOR_B1,
    DETECTOR_B2,
    SINK_IDS,
    BasisLabel,
    HyperState,
    PhotonSpec,
    Pol,
    Spatial,
    Spin,
    SpinMeasurement,
    fidelity,
    init_state,
    pack_label,
)
from .scattering import (
    BlockCoeffs,
    CavityParams,
    DephasingParams,
    ScatterCoeffs,
    block_coeffs,
    cold_coeffs,
    dephasing_penalty,
    efficiency,
    hot_coeffs,
    scatter_coeffs,
)

__version__ = "0.1.0"

__all__ = [
    "ABSORBED",
    "AmplitudeLostError",
    "BasisLabel",
    "BlockCoeffs",
    "CavityParams",
    "DETECTOR_B1",
    "DETECTOR_B2",
    "DegeneratePhysicsError",
    "DephasingParams",
    "Direction",
    "ElementTrace",
    "GateConfig",
    "GateOutcome",
    "HyperState",
    "OutcomeBranch",
    "PhotonSpec",
    "Pol",
    "RoutingContractError",
    "SINK_IDS",
    "SampleStats",
    "ScanSummary",
    "ScatterCoeffs",
    "ShotRecord",
    "Spatial",
    "Spin",
    "SpinMeasurement",
    "SweepGrid",
    "SweepRow",
    "ValidationError",
    "block_coeffs",
    "block_interact",
    "cold_coeffs",
    "dephasing_penalty",
    "efficiency",
    "emit_report",
    "fidelity",
    "fidelity_scan",
    "hot_coeffs",
    "hyper_cnot",
    "hyper_cnot_n",
    "ideal_hyper_cnot",
    "ideal_hyper_cnot_n",
    "init_state",
    "load_report",
    "mirror_attenuate",
    "pack_label",
    "random_photon_spec",
    "raw_cavity_pass",
    "sample_run",
    "sample_shots",
    "scatter_coeffs",
    "stage_polarization",
    "stage_spatial",
    "sweep_efficiency",
    "truth_table",
]
