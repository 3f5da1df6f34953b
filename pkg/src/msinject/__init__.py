"""Monte-Carlo simulator for biased-noise magic-state injection on
rectangular XZZX surface codes."""

from .analysis import (
    FitResult,
    RateEstimate,
    convert_axis,
    distill_15to1,
    fit_linear,
    fit_quadratic,
    rates,
)
from .decoder import (
    DetectorGraph,
    MatchResult,
    build_detector_graph,
    decode,
    exhaustive_decode,
    ml_decode_small,
)
from .engine import CompiledProgram
from .lattice import CodeLayout, build_layout, min_logical_weight, verify_layout
from .noise import (
    MeasFlip,
    MultiQubitChannel,
    NoiseModel,
    OneQubitChannel,
    average_gate_bias,
    channel_for,
    sample,
    total_error,
)
from .pauli import PauliString
from .protocol import (
    STANDARD_Z,
    THREE_QUBIT_ZZZ,
    TWO_QUBIT_ZZ,
    VARIANTS,
    CircuitProgram,
    InitPattern,
    Stage1Program,
    build_stage1,
    build_stage2,
    compute_fixed_stabilizers,
)
from .sim import (
    Tally,
    TrialOutcome,
    classify_residual,
    propagate,
    run_experiment,
    run_trial,
)

__version__ = "0.1.0"
