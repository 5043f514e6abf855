"""Certified numerics for horizon-crossing channels on finite-dimensional models."""

__version__ = "0.1.0"

from .channels import (
    Channel,
    ChannelError,
    ChannelFamilySpec,
    HorizonModel,
    complementary_channel,
    embed_family_as_horizon,
    exterior_channel,
    ideal_channel,
    ideal_infall,
    ideal_model,
    interior_channel,
    make_family,
    random_model,
    swap_model,
)
from .entangled import SchmidtInput, der_bound_check, er_state, factorization_residual, joint_state
from .linalg import SeededRng, SubsystemLayout, haar_unitary, partial_trace, random_pure_state, tensor_product, trace_norm
from .metrics import DiamondResult, diamond_distance, fidelity_to_pure, fvdg_check, trace_distance
from .tradeoff import (
    ScalingFit,
    TradeoffReport,
    VerifyConfig,
    compute_dmax,
    compute_epsilon,
    interior_fidelity,
    lemma1_check,
    pivot_radius,
    scaling_fit,
    verify_tradeoff,
)
