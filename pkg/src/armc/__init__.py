"""
ARMC - Accelerated Robust Matrix Completion

Recovers a rank-r matrix from a sampled subset of its entries when some
observed entries carry large sparse outliers and all carry small noise.

Design Principles:
- Low-rank iterates live as compact SVD factors, never as dense n x n arrays
- Tangent-space projection keeps every low-rank update at O(|Omega| r + n r^2)
- Sparse iterates are aligned with the observation set, one value per sample
- Every experiment is reproducible from (config, seed) alone
"""

__version__ = "1.0.0"
