"""Exact nc-Hodge calculus on finite cohomology-ring models."""

__version__ = "0.1.0"

from .charclass import (  # noqa: E402,F401
    chern_character,
    line_bundle,
    modified_todd_class,
    resolve_bundle,
    todd_class,
    trivial_bundle,
)
from .cohring import (  # noqa: E402,F401
    CohClass,
    CohRing,
    build_builtin,
    integrate,
    load_ring,
    projective_space,
    validate_ring,
)
from .family import connect, flatness_check, intertwining_defect, load_family, mc_check  # noqa: E402,F401
from .graphs import AdmissibleGraph, enumerate_admissible, vanishing_check, weight_estimate  # noqa: E402,F401
from .ncvshs import HPElement, hkr_embed, twist, vee  # noqa: E402,F401
from .pairing import (  # noqa: E402,F401
    canonical_pairing,
    higher_residue,
    hrr_chi,
    residue_gram,
    symmetry_defect,
    symmetry_sweep,
)
from .scalars import CharSeries, TauScalar, modified_todd_series, todd_series  # noqa: E402,F401
from .tracing import RECORDER, traced  # noqa: E402,F401

__all__ = [
    "AdmissibleGraph",
    "CharSeries",
    "CohClass",
    "CohRing",
    "HPElement",
    "RECORDER",
    "TauScalar",
    "build_builtin",
    "canonical_pairing",
    "chern_character",
    "connect",
    "enumerate_admissible",
    "flatness_check",
    "higher_residue",
    "hkr_embed",
    "hrr_chi",
    "integrate",
    "intertwining_defect",
    "line_bundle",
    "load_family",
    "load_ring",
    "mc_check",
    "modified_todd_class",
    "modified_todd_series",
    "projective_space",
    "residue_gram",
    "resolve_bundle",
    "symmetry_defect",
    "symmetry_sweep",
    "todd_class",
    "todd_series",
    "traced",
    "trivial_bundle",
    "twist",
    "validate_ring",
    "vanishing_check",
    "vee",
    "weight_estimate",
]
