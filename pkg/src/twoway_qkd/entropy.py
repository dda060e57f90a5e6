"""Binary entropy helpers shared by every rate formula."""

import numpy as np
from scipy.special import entr, xlog1py

_LN2 = np.log(2.0)
_CLAMP_TOL = 1e-12


def _as_probability(p):
    p = np.asarray(p, dtype=float)
    if np.any((p < -_CLAMP_TOL) | (p > 1 + _CLAMP_TOL)):
        raise ValueError(f"probability argument outside [0, 1]: {p}")
    return np.clip(p, 0.0, 1.0)


def h2(p):
    """Binary entropy in bits, with h2(0) = h2(1) = 0.

    Arguments within 1e-12 of [0, 1] are clamped; anything further out
    raises ``ValueError``. Works elementwise on arrays.

    >>> float(h2(0.5))
    1.0
    >>> float(h2(0.0))
    0.0
    """
    p = _as_probability(p)
    return ((entr(p) + entr(1.0 - p)) / _LN2)[()]


def one_minus_h2(p):
    """``1 - h2(p)`` without cancellation near p = 1/2.

    Near 1/2 the naive difference loses every significant digit (the true
    value is ~ 2.885 (1/2 - p)**2); the boundary search depends on
    resolving key rates of order 1e-16, so the log1p form is used there.
    """
    p = _as_probability(p)
    x = 1.0 - 2.0 * p
    central = (xlog1py(1.0 + x, x) + xlog1py(1.0 - x, -x)) / (2.0 * _LN2)
    tails = 1.0 - (entr(p) + entr(1.0 - p)) / _LN2
    return np.where(np.abs(x) < 0.5, central, tails)[()]
