"""Trainable projected gradient decoding for binary LDPC codes."""

from .code import (
    AlistError, GeneratorMatrix, ParityCheckMatrix, design_rate, format_alist,
    gf2_generator, load_alist, parse_alist, random_codeword, syndrome_check,
)
from .decoder import DecodeConfig, DecodeResult, TpgParams, decode, decode_batch
from .polytope import PolytopeMatrices, build_constraint_index, build_qrd, penalty, penalty_gradient

__version__ = "0.1.0"
