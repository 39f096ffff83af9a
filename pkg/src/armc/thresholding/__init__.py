"""ARMC - Outlier thresholding operators and schedules."""
