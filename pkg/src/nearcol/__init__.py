"""Exact lattice toolkit: nearest-colattice approx-CVP with precomputation and
the approx-CVPP-from-Hermite-SVP reduction."""

__version__ = "0.1.0"
