"""Planner-in-the-loop inverse reinforcement learning toolkit.

Sampling-based MPC over synthetic road tracks plus linear, latent (EM) and
deep maximum-entropy IRL trainers that learn reward functions from
demonstrations projected into the planner's sampled policy sets.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
