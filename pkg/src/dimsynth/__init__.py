"""Jacobian assembly, manipulability metrics and multi-start dimensional synthesis."""
from .design import DesignLayout
from .interior_point import BoxProblem, OptResult, SynthesisOptions, Tolerances, interior_point_minimize
from .jacobian import (
    Configuration,
    JacobianParts,
    JointPlacement,
    NonSquareA2,
    SingularA2,
    assemble_system,
    reduced_jacobian,
    type2_matrices,
)
from .metrics import MetricReport, evaluate, manipulability, scaled_metrics
from .multistart import ExhaustedRestarts, SynthesisResult, multi_start_synthesize
from .synthesis import Prescription, derive_link_lengths, rank_prescription, run_catalog
from .io import ParseError, load_catalog, load_configuration, load_topology
from .topology import JointKind, Topology, build_topology, detect_superfluous, enumerate_paths

__version__ = "0.1.0"
