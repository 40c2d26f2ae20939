"""Numerical laboratory for conditional measures of invariant measures along
laminations: leaf metrics and Hausdorff measures, packing regularity,
invariant metric systems, and the atomic / Hausdorff dichotomy."""

from .errors import ArgumentError, DomainError
from .metric_core import (AtomicMeasure, Ball, DiracMeasure, HausdorffEstimate, HausdorffMeasure, LeafMetric,
                          LeafModel, annulus_mass_profile, doubling_constant, hausdorff_estimate)
from .packing import (RegularityCertificate, certify_regularity, density_ratios, greedy_cover, greedy_pack,
                      transfer_constants)
from .lamination import Chart, PlaqueId, locate, overlap_pairs
from .systems import OrbitStream, SystemSpec, orbit, step
from .metric_systems import (BiLipschitzReport, MetricSystem, bilipschitz_constants, invariance_defect,
                             sup_metric_truncated)
from .disintegration import (EmpiricalConditional, disintegrate, normalize_unit_ball, overlap_consistency,
                             proportionality)
from .classifier import (DichotomyVerdict, DistortionLadder, Thresholds, atom_detect, classify,
                         distortion_ladder, uniformity_check)
from .pipeline import run_dichotomy

__version__ = "0.1.0"
