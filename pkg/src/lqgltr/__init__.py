"""LQG/LTR sensitivity loop-shaping toolkit for gimbal LOS stabilization."""

__version__ = "0.1.0"
