"""ARMC - Synthetic robust matrix completion instances."""
