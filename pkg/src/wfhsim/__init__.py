"""Click statistics of weak-field homodyne detection on two-mode entangled states."""

from .detector import (
    GprModel,
    JointClickMatrix,
    apply_response,
    apply_response_single,
    binning_matrix,
    estimate_fock_weights,
    gpr_reflectivity,
    invert_response,
    loss_matrix,
)
from .fock import BeamSplitter, FockCutoff, bs_split_displacement, displaced_fock_overlap
from .states import (
    SingleModeMixture,
    TwoModeState,
    g2_of_distribution,
    make_noisy_tmss,
    make_ssps_input,
    make_tmss,
    split_on_balanced_bs,
)
from .wfh import (
    PhaseScan,
    WFHChannel,
    joint_photon_stats,
    single_mode_stats,
    ssps_scan,
    tmss_scan,
)
from .bell import (
    BellSettings,
    OutcomeTable,
    SearchConfig,
    cglmp_I,
    layer_probabilities,
    lossy_layer_check,
    optimize_IM,
    outcome_tables,
    output_amplitudes_m2,
)
from .oracle import CircuitSpec, bs_unitary, circuit_for_channels, simulate_circuit

__version__ = "0.1.0"

__all__ = [
    "BeamSplitter",
    "BellSettings",
    "CircuitSpec",
    "FockCutoff",
    "GprModel",
    "JointClickMatrix",
    "OutcomeTable",
    "PhaseScan",
    "SearchConfig",
    "SingleModeMixture",
    "TwoModeState",
    "WFHChannel",
    "apply_response",
    "apply_response_single",
    "binning_matrix",
    "bs_split_displacement",
    "bs_unitary",
    "cglmp_I",
    "circuit_for_channels",
    "displaced_fock_overlap",
    "estimate_fock_weights",
    "g2_of_distribution",
    "gpr_reflectivity",
    "invert_response",
    "joint_photon_stats",
    "layer_probabilities",
    "loss_matrix",
    "lossy_layer_check",
    "make_noisy_tmss",
    "make_ssps_input",
    "make_tmss",
    "optimize_IM",
    "outcome_tables",
    "output_amplitudes_m2",
    "simulate_circuit",
    "single_mode_stats",
    "split_on_balanced_bs",
    "ssps_scan",
    "tmss_scan",
    "__version__",
]
