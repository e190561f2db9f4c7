"""Numerical laboratory for random linear embeddings of homogeneous sets.

Submodules
----------
geometry    point sets, difference sets, dyadic layers, Kuratowski embedding
covering    greedy nets and the homogeneity (Assouad-type) fit
cube_slice  hyperplane sections and slabs of the unit cube
chain       orthogonal and norming-functional subspace chains
probe       random probe maps and small-ball probabilities
distortion  distortion profiles, failure measures, bi-Lipschitz checks
harness     config-driven experiments
"""

__version__ = "0.1.0"

from .errors import InequalityViolation, QuadratureError, ValidationError
from .geometry import (
    LayerDecomposition,
    NormTag,
    PointSet,
    difference_set,
    dyadic_layers,
    kuratowski_embed,
    normalize_diameter,
)
from .covering import Cover, HomogeneityFit, assouad_estimate, dyadic_scale_grid, greedy_cover, localized_counts
from .cube_slice import SliceQuery, SliceResult, section_density, slab_volume_exact, slab_volume_mc, verify_ball_bound
from .chain import FunctionalChain, OrthoChain, build_functional_chain, build_orthogonal_chain
from .probe import Mode, ProbeConfig, ProbeMap, mu_bound_mc, sample_probe_map, sample_probe_maps
from .distortion import (
    BilipCheck,
    DistortionProfile,
    FailureReport,
    failure_measure,
    final_constant_check,
    fit_gamma,
    profile,
    verify_almost_bilip,
)
from .fixtures import generate_fixture
from .harness import ExperimentConfig, RunManifest, run_experiment

__all__ = [
    "__version__",
    "InequalityViolation",
    "QuadratureError",
    "ValidationError",
    "LayerDecomposition",
    "NormTag",
    "PointSet",
    "difference_set",
    "dyadic_layers",
    "kuratowski_embed",
    "normalize_diameter",
    "Cover",
    "HomogeneityFit",
    "assouad_estimate",
    "dyadic_scale_grid",
    "greedy_cover",
    "localized_counts",
    "SliceQuery",
    "SliceResult",
    "section_density",
    "slab_volume_exact",
    "slab_volume_mc",
    "verify_ball_bound",
    "FunctionalChain",
    "OrthoChain",
    "build_functional_chain",
    "build_orthogonal_chain",
    "Mode",
    "ProbeConfig",
    "ProbeMap",
    "mu_bound_mc",
    "sample_probe_map",
    "sample_probe_maps",
    "BilipCheck",
    "DistortionProfile",
    "FailureReport",
    "failure_measure",
    "final_constant_check",
    "fit_gamma",
    "profile",
    "verify_almost_bilip",
    "generate_fixture",
    "ExperimentConfig",
    "RunManifest",
    "run_experiment",
]
