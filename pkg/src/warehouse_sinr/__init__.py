"""
Warehouse SINR lab: a propagation oracle for procedural warehouse floors,
physics-informed input tensors, and a numpy three-branch VAE (with an AE
baseline) that predicts SINR heatmaps from them.
"""

__version__ = "0.1.0"
