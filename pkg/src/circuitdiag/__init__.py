"""Sequential fault diagnosis of combinational circuits.

Compiles a probabilistic circuit model into smooth d-DNNF, proposes one
measurement at a time via a failure-probability + entropy heuristic, and
scales through structural abstraction, component cloning, cardinality
pruning, and a diagnostic-cost estimator.
"""

from .abstraction import AbstractionView, Cone, abstraction, cone_subsystem
from .circuit import (Circuit, CircuitError, FaultScenario, Gate,
                      depth_levels, parse_bench, render_bench, simulate)
from .cloning import CloneMap, clone, minimize_abstraction, parent_partition
from .costmodel import (CostEstimate, destroy_cones, edc, measurement_points,
                        select_abstraction)
from .diagnose import (DiagnosisSession, SimulationOracle, System, diagnose,
                       entropy, hpsd, meets_criteria_flat, meets_criteria_sim,
                       psd)
from .encode import (ModelParams, WeightedCnf, cone_failure_priors,
                     cone_prior, encode_abstraction, encode_flat)
from .gen import GenSpec, generate_circuit, generate_scenarios

__version__ = "0.1.0"
