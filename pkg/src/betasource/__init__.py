"""Beta-ensembles with an external source: Jack polynomials, hypergeometric
series of matrix argument, eigenvalue samplers, characteristic-polynomial
averages and their phase-transition limits."""

__version__ = "0.1.0"

from .combinatorics import DomainError, JackParams, Partition, jack_eval, jack_polynomial
from .hyperfun import HypergeometricSpec, TruncationPolicy, hyperg_one_set, hyperg_two_set
from .ensembles import EnsembleSpec, Family, SDEConfig, density, sample_many
from .charpoly import CharPolyQuery, cue_moment, duality_check_gaussian, duality_check_laguerre, exact_k_gaussian, exact_k_laguerre
from .scalinglimits import LimitKind, LimitSpec, Regime, const_phi, const_psi, limit_function
from .transition import ExperimentConfig, build_source, classify_regime, run_convergence_scan

__all__ = [
    "CharPolyQuery", "DomainError", "EnsembleSpec", "ExperimentConfig", "Family", "HypergeometricSpec",
    "JackParams", "LimitKind", "LimitSpec", "Partition", "Regime", "SDEConfig", "TruncationPolicy",
    "build_source", "classify_regime", "const_phi", "const_psi", "cue_moment", "density",
    "duality_check_gaussian", "duality_check_laguerre", "exact_k_gaussian", "exact_k_laguerre",
    "hyperg_one_set", "hyperg_two_set", "jack_eval", "jack_polynomial", "limit_function",
    "run_convergence_scan", "sample_many",
]
