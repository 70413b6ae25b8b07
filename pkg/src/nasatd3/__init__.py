"""Image-based TD3 with an autoencoder and novelty/surprise intrinsic rewards."""

from .config import RunConfig, load_config
from .kernels import BACKEND as KERNEL_BACKEND

__all__ = ["RunConfig", "load_config", "KERNEL_BACKEND"]
__version__ = "0.1.0"
