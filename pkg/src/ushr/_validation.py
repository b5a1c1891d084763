"""Input validation helpers shared by the estimator classes."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_frames(X, n_samples: int | None = None, *, allow_int: bool = True) -> np.ndarray:
    """Validate a 2-D (n_frames, n_samples) frame matrix.

    Integer input (ADC counts) keeps its dtype when ``allow_int``; anything
    else is converted to float64.
    """
    X = np.asarray(X)
    keep_int = allow_int and np.issubdtype(X.dtype, np.integer)
    X = check_array(X, dtype=None if keep_int else np.float64, ensure_min_samples=2)
    if n_samples is not None and X.shape[1] != n_samples:
        raise ValueError(
            f"X has {X.shape[1]} samples per frame, estimator expects {n_samples}"
        )
    return X


def check_positive(name: str, value) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
