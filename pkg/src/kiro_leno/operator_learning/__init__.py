"""Laplacian eigenfunction-based neural operator learning for reaction-diffusion dynamics."""
