"""ARMC - Experiment orchestration."""
