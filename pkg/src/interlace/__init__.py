"""Interlaced particle processes on the circle: kernels, couplings, bead model."""

__version__ = "0.1.0"
