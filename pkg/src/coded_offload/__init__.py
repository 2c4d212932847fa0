"""Straggler-tolerant offloading of matrix-vector products to edge nodes.

Each of K edge nodes stores a coded share mu of a matrix. Users upload
inputs, the q fastest nodes compute, and the results are downloaded
cooperatively. The package gives exact normalized latencies with their lower
bounds, plus a finite-field encoder/decoder and a Monte Carlo engine that
check them.
"""
from .config import NetworkConfig, RunConfig, SimParams, load_config
from .dof import downlink_dof, uplink_dof
from .errors import (EmptyRegion, FieldTooSmall, InfeasibleBaseline, InfeasibleError, NoFeasibleRate,
                     RangeError, SizingError, Unrecoverable, ValidationError)
from .latency import (LatencyTriplet, baselines, end_to_end, gap_report, nct_achievable, nct_lower,
                      ndlt_achievable, ndlt_lower, nult_achievable, nult_lower, optimize, region)
from .scheme import build_assignment, design_scheme, feasible_pairs, select_code_rates

__version__ = "0.1.0"
