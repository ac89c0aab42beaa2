"""Synthetic dataset generation, bird's-eye-view warping and segmentation metrics
for miniature autonomous-driving tracks."""

__version__ = "0.1.0"
