"""Fragmentation of distributed exchanges across two miner clusters.

Closed-form miner economics, a two-cluster P2P message-delay simulator,
Monte Carlo first-to-post probabilities and the regression that links
the local speed advantage to cluster distance and asymmetry.
"""

from dexfrag.econ import EconParams, Region

__version__ = "0.1.0"

__all__ = ["EconParams", "Region", "__version__"]
