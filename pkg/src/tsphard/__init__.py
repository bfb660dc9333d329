"""Feature-based analysis of Euclidean TSP instance hardness for 2-opt."""

__version__ = "0.1.0"
