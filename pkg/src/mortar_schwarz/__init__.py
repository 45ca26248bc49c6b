"""Non-conforming Robin-Schwarz domain decomposition with P1 elements and mortar projections."""

__version__ = "0.1.0"
