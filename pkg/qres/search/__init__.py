"""Cells, codebooks and the noisy oracle."""

from qres.search.codebook import Codebook, dump_codebook, generate_codebook, load_codebook
from qres.search.oracle import noiseless_answers, oracle_and_noise, sample_responses
from qres.search.space import (
    DecoderMode,
    SearchConfig,
    cells_from_log,
    estimate_point,
    excess_resolution,
    fixed_target,
    gamma,
    gamma_inv,
    midpoint,
    quantize,
    quantize_point,
    uniform_targets,
)

__all__ = [
    "Codebook",
    "DecoderMode",
    "SearchConfig",
    "cells_from_log",
    "dump_codebook",
    "estimate_point",
    "excess_resolution",
    "fixed_target",
    "gamma",
    "gamma_inv",
    "generate_codebook",
    "load_codebook",
    "midpoint",
    "noiseless_answers",
    "oracle_and_noise",
    "quantize",
    "quantize_point",
    "sample_responses",
    "uniform_targets",
]
