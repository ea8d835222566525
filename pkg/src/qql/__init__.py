"""Quantum query algorithms over +-1-valued oracles: simulation, counting
bounds, polynomial-method checks, reference constructions, and numerical
search for optimal distinguishers."""
from importlib import import_module

from .bounds import (
    BoundQuery,
    is_feasible,
    m_sum,
    m_sum_terms,
    max_distinguishable,
    sorting_lower_bound,
)
from .errors import (
    CapacityError,
    ModelError,
    ParameterError,
    QqlError,
    ValidationError,
)
from .functions import (
    BooleanFunction,
    FunctionFamily,
    all_functions_family,
    character_family,
    chi,
    explicit_family,
    family_from_json,
    family_to_json,
    grover_family,
    load_family,
    make_family,
    save_family,
)
from .polynomials import (
    LemmaAuditReport,
    MultilinearPolynomial,
    evaluate_on_all,
    evaluate_poly,
    extract_polynomials,
    lemma_audit,
    lemma_floor,
    minimizer,
    parseval,
)
from .reference import (
    AlgorithmBundle,
    build_character_distinguisher,
    build_uniform_subset_algorithm,
    predicted_success,
)
from .simulator import (
    Algorithm,
    DenseUnitary,
    Measurement,
    Picture,
    QuantumState,
    apply_oracle,
    apply_oracle_bitflip,
    apply_oracle_phase,
    convert_algorithm,
    convert_measurement,
    convert_picture,
    outcome_probabilities,
    run,
    success_matrix,
    worst_case_success,
)
from .walsh import fwht

__version__ = "0.1.0"

_LAZY_MODULES = {"optimizer", "cli"}


def __getattr__(name: str):
    # The optimizer drags in torch; load it only when actually asked for.
    if name in _LAZY_MODULES:
        return import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
