"""Multivariate decomposition method (MDM) for infinite-variate integrals."""

from mdm.active_set import ActiveSet, CapacityError, build_active_set
from mdm.coeff_tables import (
    CombinationTables,
    LevelAssignment,
    QmcTables,
    SmolyakTables,
    build_combination_tables,
    build_qmc_tables,
    build_smolyak_tables,
)
from mdm.decomposition import AnchoredIntegrand, CallableIntegrand, anchored_term
from mdm.engines import (
    MdmReport,
    run_naive,
    run_qmc,
    run_rqmc,
    run_smolyak_combination,
    run_smolyak_direct,
)
from mdm.integrands import NormModel, TestIntegrand, zeta
from mdm.lattice import LatticeSequence, random_shifts
from mdm.pod_weights import PodWeights
from mdm.quad1d import TabulatedFamily, TrapezoidalFamily
from mdm.tolerance import ToleranceParams, compute_tolerance

__version__ = "0.1.0"

__all__ = [
    "ActiveSet", "AnchoredIntegrand", "CallableIntegrand", "CapacityError", "CombinationTables",
    "LatticeSequence", "LevelAssignment", "MdmReport", "NormModel", "PodWeights", "QmcTables",
    "SmolyakTables", "TabulatedFamily", "TestIntegrand", "ToleranceParams", "TrapezoidalFamily",
    "anchored_term", "build_active_set", "build_combination_tables", "build_qmc_tables",
    "build_smolyak_tables", "compute_tolerance", "random_shifts", "run_naive", "run_qmc", "run_rqmc",
    "run_smolyak_combination", "run_smolyak_direct", "zeta",
]
