"""Jet-level linearization of polynomial holomorphic contractions and
automorphic potentials on the resulting Hopf manifolds."""

from .contraction import ContractionSpec, check_inverse, validate
from .errors import (BasisMismatchError, HopfError, IllConditionedError, InvalidInputError,
                     NotAContractionError, NotDiagonalizableError, SingularLinearPartError,
                     VerificationError)
from .jets import Jet, JetMap, compose, compose_map, inverse_map, monomial_basis, power_table
from .koopman import KoopmanMatrix, build
from .linearizer import (EmbeddingModel, export_linear_hopf, linearize, linearize_closure,
                         linearize_root_prune, verify, verify_injectivity, verify_semiconjugacy)
from .pipeline import RunConfig, run_pipeline
from .potential import (LinearHopfModel, build_automorphic_potential, build_flow_potential,
                        build_potential, build_potential_approx, check_psh, pull_back_potential)
from .spectral import detect_resonances, f_finite_span, root_decomposition, triangularize

__version__ = "0.1.0"

__all__ = [
    "BasisMismatchError", "ContractionSpec", "EmbeddingModel", "HopfError", "IllConditionedError",
    "InvalidInputError", "Jet", "JetMap", "KoopmanMatrix", "LinearHopfModel",
    "NotAContractionError", "NotDiagonalizableError", "RunConfig", "SingularLinearPartError",
    "VerificationError", "build", "build_automorphic_potential", "build_flow_potential",
    "build_potential", "build_potential_approx", "check_inverse", "check_psh", "compose",
    "compose_map", "detect_resonances", "export_linear_hopf", "f_finite_span", "inverse_map",
    "linearize", "linearize_closure", "linearize_root_prune", "monomial_basis", "power_table",
    "pull_back_potential", "root_decomposition", "run_pipeline", "triangularize", "validate",
    "verify", "verify_injectivity", "verify_semiconjugacy",
]
