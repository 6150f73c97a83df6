"""Subcritical contact process: simulator on the graphical construction, minimal
paths, cluster point patterns and checks of the quasi-stationary limit laws."""

__version__ = "0.1.0"

from .clusters import (ClusterSet, MarkedMeasure, MesoGrid, box_statistics, extract_clusters,
                       marked_measure)
from .config import ExperimentConfig, load_config, parse_config
from .errors import (ContactScaleError, InsufficientDataError, NumericError, OrderingError,
                     ParameterError, UsageError, WindowOverflowError)
from .estimators import (EmpiricalLaw, alpha_and_h, conditioned_box_law, estimate_alpha,
                         estimate_h, estimate_rho, simulate_replicas, yaglom_law)
from .graphical import (GraphicalEvents, SpaceTimePoint, backward_reachable_set,
                        generate_events, max_lambda_path_jumps, open_path_exists)
from .kernels import BACKEND
from .lattice import Box, Ring
from .oracle import build_chain, spectral_summary
from .params import SimParams
from .process import CanonicalConfig, Configuration, absorption_time, canonical_form, evolve
from .stats import TestReport, ks_test, poisson_suite, tv_distance
from .workpath import (PriorityOrder, WorkPath, break_point, classify_good, favorable_intervals,
                       minimal_path)
