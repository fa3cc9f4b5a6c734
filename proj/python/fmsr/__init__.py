"""Finger-specific shadow rewards with information sharing for a planar hand."""

from ._core import (
    Env,
    ablation_report,
    checkpoint_info,
    config_diff,
    desk_config,
    evaluate,
    failure_row,
    is_success,
    load_config,
    metropolis_weights,
    occupancy_masses,
    full_scale_config,
    q_dcc,
    q_msv,
    q_vew,
    shadow_log_term,
    share,
    train,
)

__all__ = [
    "Env",
    "ablation_report",
    "checkpoint_info",
    "config_diff",
    "desk_config",
    "evaluate",
    "failure_row",
    "is_success",
    "load_config",
    "metropolis_weights",
    "occupancy_masses",
    "full_scale_config",
    "q_dcc",
    "q_msv",
    "q_vew",
    "shadow_log_term",
    "share",
    "train",
]
