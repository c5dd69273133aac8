"""Walking-droplet wave simulator over variable bottom topography."""

from .params import ConfigError, FluidParams, ForcingParams, NondimGroups, faraday_scales, nondim_groups
from .spectral import FourierBasis, Grid

__all__ = [
    "ConfigError",
    "FluidParams",
    "ForcingParams",
    "NondimGroups",
    "faraday_scales",
    "nondim_groups",
    "FourierBasis",
    "Grid",
]
