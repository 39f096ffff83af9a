"""ARMC - Observation storage and P_Omega kernels."""
