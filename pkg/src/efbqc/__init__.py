"""Encoded-fusion FBQC simulator: fusion statistics, fusion-network decoding
and threshold estimation under photon loss."""

from .analytics import (
    BlockStats,
    EncodingParams,
    OutcomeErasureModel,
    block_stats,
    erasure_model,
    logical_success,
    loss_at_erasure_budget,
    optimize_j,
    outcome_erasure,
)
from .lattice import AgnosticNoise, ErrorSample, FusionNetwork, OpticalNoise, build_network, sample_errors, syndrome
from .decoder import DecodeResult, decode, decode_batch, logical_check

__version__ = "0.1.0"
