"""
PolarMap v1.0 - GPT-based exterior conformal maps
Boundary-integral generalized polarization tensors and the Riemann map they determine
"""

__version__ = "1.0.0"
