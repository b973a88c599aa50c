"""Food-wine pairing over a heterogeneous food/compound/wine graph."""

__version__ = "0.1.0"
