"""Sparse DFT recovery by CRT-guided subsampling and peeling."""

from .crt import ConstructionError, crt_reconstruct, generate_coprime_set
from .decoder import DecoderConfig, DecodeReport, classify_bin, decode, full_pipeline
from .frontend import FrontendPlan, compute_observations
from .spectrum import SparseSpectrum, SpectrumSignal, TimeSignal, example_spectrum, random_sparse_spectrum

__version__ = "0.1.0"
