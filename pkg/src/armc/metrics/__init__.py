"""ARMC - Recovery metrics."""
