"""Clonability of orthogonal composite states and key-distribution schemes built on it."""

__version__ = "0.1.0"

from .cloneability import CloneVerdict, Mechanism, StateSet, Verdict, classify_pair, classify_set
from .protocols import (
    BasisSpec,
    Protocol,
    make_bb84_composite,
    make_gv,
    make_koashi_imoto,
    make_minimal,
)
from .qlinalg import DensityMatrix, PureState, partial_trace
from .simulator import report, run, sweep

__all__ = [
    "BasisSpec", "CloneVerdict", "DensityMatrix", "Mechanism", "Protocol", "PureState",
    "StateSet", "Verdict", "classify_pair", "classify_set", "make_bb84_composite", "make_gv",
    "make_koashi_imoto", "make_minimal", "partial_trace", "report", "run", "sweep",
]
