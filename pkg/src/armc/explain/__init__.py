"""ARMC - Human-readable run summaries."""
