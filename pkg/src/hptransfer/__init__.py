"""Exact homotopy transfer for A-infinity and pre-Calabi-Yau structures on dg quivers."""

from .ainfty import (
    AinfError,
    HomCollection,
    ObstructionError,
    compose_morphisms,
    differential_structure,
    identity_morphism,
    invert_morphism,
    is_ainf,
    is_morphism,
    mi_defect,
    minimal_model,
    quasi_inverse,
    stasheff_defect,
    transfer_from_target,
    transfer_to_target,
    transport_structure,
)
from .bundle import Bundle, BundleError, parse, serialize
from .exactla import GF, QQ, Field, field_from_descriptor
from .graded import DgQuiver, GradedMap, GradedSpace, cohomology_contraction
from .multi import MultiCollection, cyclic_action, is_cyclically_invariant, symmetrize
from .precy import (
    PcyError,
    PcyObstructionError,
    compose_pcy,
    embed_ainf,
    identity_pcy,
    invert_pcy,
    mc_defect,
    pcy_mi_defect,
    pcy_minimal_model,
    pcy_quasi_inverse,
    restrict_to_ainf,
    transfer_pcy_from_target,
    transfer_pcy_to_target,
    transport_pcy,
)

__version__ = "0.1.0"
