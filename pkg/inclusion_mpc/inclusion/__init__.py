"""Data-driven differential inclusions: envelopes, contraction and side information."""

from inclusion_mpc.inclusion.constraints import ConstraintSpec, apply_algebraic_contraction
from inclusion_mpc.inclusion.contract import contract_datapoint
from inclusion_mpc.inclusion.differential import DiffInclusion, inclusion_eval
from inclusion_mpc.inclusion.envelope import (
    EnvelopeModel,
    EnvelopeRecord,
    EnvelopeSet,
    envelope_eval,
)
from inclusion_mpc.inclusion.refine import RefineOptions, construct, refine
from inclusion_mpc.inclusion.side import KnownFactor, KnownTermsSpec, SideInfo

__all__ = [
    "ConstraintSpec",
    "DiffInclusion",
    "EnvelopeModel",
    "EnvelopeRecord",
    "EnvelopeSet",
    "KnownFactor",
    "KnownTermsSpec",
    "RefineOptions",
    "SideInfo",
    "apply_algebraic_contraction",
    "construct",
    "contract_datapoint",
    "envelope_eval",
    "inclusion_eval",
    "refine",
]
