"""ARMC - File formats for observations, matrices, factors, and instances."""
