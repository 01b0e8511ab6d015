"""Analysis, synthesis and simulation of heterogeneous vehicle platoons on
directed acyclic communication graphs."""

__version__ = "0.1.0"
