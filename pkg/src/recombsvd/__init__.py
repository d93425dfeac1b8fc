"""Recombination hot spot detection from the SVD of smoothed pairwise Hamming distances."""

__version__ = "0.1.0"

from .detector import DetectionReport, DetectorConfig, detect  # noqa: E402
from .distmat import SmoothedDistanceMatrix, build_matrix  # noqa: E402
from .seqio import SequencePopulation, parse_fasta, read_fasta  # noqa: E402
from .simgen import SimulationConfig, simulate  # noqa: E402
from .svdcore import SvdFactors, truncated_svd  # noqa: E402

__all__ = [
    "DetectionReport",
    "DetectorConfig",
    "SequencePopulation",
    "SimulationConfig",
    "SmoothedDistanceMatrix",
    "SvdFactors",
    "build_matrix",
    "detect",
    "parse_fasta",
    "read_fasta",
    "simulate",
    "truncated_svd",
]
