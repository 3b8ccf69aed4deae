"""Information-geometric complexity toolkit.

Fisher-Rao metrics on statistical manifolds, geodesic flows, volume-based
complexity measures, and maximum relative entropy updating.
"""

__version__ = "0.1.0"
