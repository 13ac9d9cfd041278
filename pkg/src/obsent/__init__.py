"""Observational entropy of quantum coarse-grainings, recovered states and theorem checks."""

from .entropy import (
    fidelity,
    kl_divergence,
    observational_entropy,
    observed_relative_entropy,
    quantum_relative_entropy,
    trace_distance,
    von_neumann_entropy,
)
from .errors import (
    DimensionMismatch,
    DocumentError,
    DomainError,
    InvariantViolation,
    LabelMismatch,
    ObsentError,
    SupportLeak,
    ZeroVolumeOutcome,
)
from .objects import (
    ClassicalDistribution,
    CoarseGrainingSequence,
    DensityMatrix,
    Instrument,
    KrausMap,
    Povm,
    StochasticMatrix,
    compose_sequence,
    outcome_statistics,
    post_measurement_states,
)
from .recovery import (
    PetzMap,
    commuting_basis,
    jeffrey_retrodict,
    petz_recovered_state,
    recovered_state,
)
from .sampling import SamplerConfig
from .theorems import VerificationReport

__version__ = "0.1.0"
