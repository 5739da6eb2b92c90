"""Sum-rate maximization for SZFDPC MIMO broadcast channels under per-antenna power limits."""
from .channels import (ChannelSet, ScenarioConfig, generate_channels, load_channels,
                       save_channels, snr_to_power)
from .effective import (EffectiveChannelSet, bc_sum_rate, effective_channels, papc_usage,
                        zero_interference_residual)
from .ao import BcSolution, SolveReport, mac_to_bc, sca_alpha, solve
from .kernels import BACKEND as KERNEL_BACKEND

__all__ = [
    "ChannelSet", "ScenarioConfig", "generate_channels", "load_channels", "save_channels",
    "snr_to_power", "EffectiveChannelSet", "bc_sum_rate", "effective_channels", "papc_usage",
    "zero_interference_residual", "BcSolution", "SolveReport", "mac_to_bc", "sca_alpha",
    "solve", "KERNEL_BACKEND",
]
