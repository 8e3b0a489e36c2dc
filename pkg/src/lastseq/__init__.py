"""lastseq: lattice space-time coded MIMO ARQ links decoded by biased
best-first tree search with a retransmission time-out.

The library is organized as:

- ``lattices``    nested mod-p codebooks, mod-Lambda encoding, radii
- ``channel``     quasi-static Rayleigh fading and its real-valued lifting
- ``equalizer``   MMSE-DFE filters and QR reduction of the code-channel
- ``decoders``    stack, list-sphere, and greedy DFE decoders
- ``protocol``    incremental-redundancy session orchestration
- ``analysis``    closed-form tradeoff and complexity evaluators
- ``experiments`` seeded, reproducible SNR sweeps and budget tuning
"""

from .lattices import (LatticeGenerator, NestedCode, RadiusEstimates,
                       build_loeliger_code, mod_lambda, encode, sample_dither,
                       estimate_radii)
from .channel import (ChannelRealization, RealChannelStack, sample_channel,
                      realify, transmit, LONG_TERM, SHORT_TERM)
from .equalizer import (PreprocessedRound, compute_filters, preprocess,
                        mod_rate)
from .decoders import (DecoderConfig, DecodeOutcome, StackNode,
                       ListDecodeResult, stack_decode, list_sphere_decode,
                       babai_dfe_decode, coset_map, node_bound_diagnostic,
                       ListSizeExceeded, StackOverflow)
from .protocol import SessionConfig, SessionStats, LinkMetrics, run_session, \
    aggregate
from .analysis import (DmtCurve, dmt_curve, uniform_zeta,
                       optimal_arq_tradeoff, bias_schedule, bias_to_alpha,
                       achievable_rate, gamma_out_bound,
                       avg_gamma_out_asymptotic, complexity_ratio,
                       outage_probability, outage_exponent)
from .experiments import (ExperimentPlan, Variant, ExperimentResults,
                          run_experiment, tune_gamma_out, trial_rng,
                          db_to_linear)

__version__ = "0.1.0"
