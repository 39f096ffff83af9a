"""ARMC - Dense, implicit-operator, and structured linear-algebra kernels."""
