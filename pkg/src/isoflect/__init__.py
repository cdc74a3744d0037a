"""Zero mean curvature surfaces in the simply isotropic 3-space."""

__version__ = "0.1.0"
