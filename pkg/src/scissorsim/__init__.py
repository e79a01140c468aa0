"""Few-photon Fock-space simulation of a heralded noiseless single-photon amplifier."""

from .amplifier import (
    AmplifierParams,
    AmplifierResult,
    FringeRecord,
    GainMeasurement,
    amplify,
    coherent_input,
    gain_ideal,
    gain_measurement,
    gain_nonpnr,
    gain_sweep,
    measured_gain,
    phase_average,
    phase_state,
    simulate_amplifier,
    simulate_full_interferometer,
    vmax,
)
from .detection import CLICK, NO_CLICK, DetectorKind, DetectorModel, HeraldOutcome, herald, povm_elements
from .fock import (
    DensityOperator,
    FockBasis,
    StateVector,
    build_basis,
    mix,
    partial_trace,
    pure_state,
    to_density,
)
from .optics import Beamsplitter, LossChannel, apply_beamsplitter, apply_loss, apply_phase
from .source import SpdcSource, distinguishable_pair, hom_visibility, pair_state

__version__ = "0.1.0"
