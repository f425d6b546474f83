"""qkdsim: ground-to-LEO entangled-photon QKD uplink simulator.

Pass geometry, free-space link budget under atmospheric turbulence,
entangled-pair secret-key rates, on-board data budget, and an event-level
Monte Carlo cross-check with clock-offset recovery.
"""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND

__all__ = ["__version__", "KERNEL_BACKEND"]
