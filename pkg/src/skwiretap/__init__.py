"""Feedback-coded private communication over lossy bosonic wiretap channels.

Implements the Schalkwijk-Kailath feedback protocol on the classical channel
induced by coherent encoding plus homodyne detection, the closed-form rate,
error, and privacy-leakage bounds that go with it, and a reproducible Monte
Carlo harness that checks the simulation against every analytic prediction.
"""

from .channels import (
    AffineChannel,
    EveTap,
    NoiseModel,
    RngLane,
    ThermalWiretapParams,
    TrialLanes,
    as_affine,
    eve_tap_transmit,
    forward_transmit,
    sample_noise,
)
from .harness import (
    ConfigError,
    Diagnostics,
    ExperimentConfig,
    ExperimentReport,
    MessageSelection,
    TrialResult,
    compare_bounds,
    diagnostics,
    run_experiment,
    run_trial,
    wilson_interval,
)
from .infotheory import (
    BoundNotActiveError,
    BoundQuery,
    LeakageBudget,
    RateQuery,
    TetrationBound,
    awgn_capacity,
    chebyshev_error_bound,
    g_entropy,
    induced_sigma2,
    leakage_budget,
    phi,
    phi_inverse,
    q_function,
    rate_coherent_homodyne,
    rate_squeezed_homodyne,
    sk_error_bound,
    tetration_error_bound,
    tetration_order,
)
from .protocol import (
    AliceState,
    BobState,
    Codebook,
    ProtocolOrderError,
    SkSchedule,
    Transcript,
    alice_finish,
    alice_round,
    bob_round,
    decode,
    make_codebook,
    make_schedule,
    mmse_oracle,
    run_protocol,
)

__version__ = "1.0.0"
