"""Stochastic subgradient method with averaging for box-constrained nonsmooth problems.

The package bundles the optimizer itself (``optimizer``), the gap-function
machinery used to measure stationarity (``gap``), stochastic subgradient
oracles (``oracles``), a from-scratch ReLU network objective (``relunet``),
a chain-rule verification lab (``chainlab``), an integrator for the limiting
continuous-time dynamics (``dynamics``), and dataset / trace file handling
(``dataio``).  Hot numeric kernels live in ``kernels`` with a compiled
extension selected at import when available.
"""

from .chainlab import (
    ChainRuleReport,
    Path,
    SelectionFunction,
    chain_rule_check,
    compose_subgrad,
    path_integral,
)
from .core import (
    AlgoParams,
    BoxConstraint,
    DataError,
    SsamError,
    StepSchedule,
    UsageError,
    project_box,
    tau,
)
from .dataio import (
    Dataset,
    ExperimentConfig,
    load_csv,
    read_trace,
    standardize,
    synth_teacher,
    write_trace,
)
from .dynamics import FlowState, LyapunovReading, flow_step, integrate
from .gap import GapResult, eta, stationarity_ok, ybar
from .optimizer import IterateState, Trace, TraceRow, run, sgd_step, ssam_init, ssam_step
from .oracles import L1Oracle, NoiseSpec, NoisyOracle, QuadraticOracle, with_noise
from .relunet import NetArch, NetParams, ReluSampleOracle, Sample

__all__ = [
    "AlgoParams",
    "BoxConstraint",
    "ChainRuleReport",
    "DataError",
    "Dataset",
    "ExperimentConfig",
    "FlowState",
    "GapResult",
    "IterateState",
    "L1Oracle",
    "LyapunovReading",
    "NetArch",
    "NetParams",
    "NoiseSpec",
    "NoisyOracle",
    "Path",
    "QuadraticOracle",
    "ReluSampleOracle",
    "Sample",
    "SelectionFunction",
    "SsamError",
    "StepSchedule",
    "Trace",
    "TraceRow",
    "UsageError",
    "chain_rule_check",
    "compose_subgrad",
    "eta",
    "flow_step",
    "integrate",
    "load_csv",
    "path_integral",
    "project_box",
    "read_trace",
    "run",
    "sgd_step",
    "ssam_init",
    "ssam_step",
    "standardize",
    "stationarity_ok",
    "synth_teacher",
    "tau",
    "with_noise",
    "write_trace",
    "ybar",
]

__version__ = "0.1.0"
