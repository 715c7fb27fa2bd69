"""CM lifts of supersingular elliptic curves: Gross lattices, theta series,
their modular decomposition, and exact exception sets."""

__version__ = "0.1.0"
