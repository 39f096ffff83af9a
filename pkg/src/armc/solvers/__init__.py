"""ARMC - Iterative robust matrix completion solvers."""
