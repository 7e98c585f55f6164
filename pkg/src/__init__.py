"""
Coherent configuration toolkit: scheme verification, adjacency algebra,
theorem checks and degree-profile feasibility.
"""

__version__ = '0.1.0'
