"""Bell-diagonal two-qubit states and the Gottesman-Lo B and P steps.

A state is the probability vector ``(q00, q10, q11, q01)`` over the Bell
basis, where the first index flags a bit error and the second a phase
error. Off-diagonal elements are never needed by the protocols here.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import NamedTuple

from scipy.optimize import bisect

from .entropy import h2

__all__ = [
    "BellDiagonal",
    "ErrorRates",
    "DegeneratePostselectionError",
    "rates_of",
    "css_rate",
    "b_step",
    "p_step",
    "phase_bound_from_fidelity",
]

NORM_TOL = 1e-12


class DegeneratePostselectionError(ArithmeticError):
    """A B step whose parity check never passes."""


@dataclass(frozen=True)
class BellDiagonal:
    q00: float
    q10: float
    q11: float
    q01: float

    def __post_init__(self):
        for name in ("q00", "q10", "q11", "q01"):
            v = getattr(self, name)
            if not -NORM_TOL <= v <= 1 + NORM_TOL:
                raise ValueError(f"{name}={v} is not a probability")
        total = self.q00 + self.q10 + self.q11 + self.q01
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"Bell-diagonal weights sum to {total!r}, not 1")

    @classmethod
    def from_rates(cls, delta_b: float, delta_p: float, q11: float = 0.0) -> "BellDiagonal":
        """State with the given error rates and ``q11`` (0 is the worst case)."""
        return cls(1.0 - delta_b - delta_p + q11, delta_b - q11, q11, delta_p - q11)

    @classmethod
    def perfect(cls) -> "BellDiagonal":
        return cls(1.0, 0.0, 0.0, 0.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.q00, self.q10, self.q11, self.q01)

    @property
    def delta_b(self) -> float:
        return self.q10 + self.q11

    @property
    def delta_p(self) -> float:
        return self.q11 + self.q01


class ErrorRates(NamedTuple):
    delta_b: float
    delta_p: float


def rates_of(state: BellDiagonal) -> ErrorRates:
    """Bit error ``q10 + q11`` and phase error ``q11 + q01``."""
    return ErrorRates(state.delta_b, state.delta_p)


def css_rate(rates: ErrorRates, q: float = 1.0) -> float:
    """One-way hashing yield ``q * (1 - H2(delta_b) - H2(delta_p))``.

    Not clamped: negative values mean no key, and callers decide.
    """
    if not 0 < q <= 1:
        raise ValueError(f"sifting factor must be in (0, 1], got {q}")
    return q * (1.0 - float(h2(rates.delta_b)) - float(h2(rates.delta_p)))


def b_step(control: BellDiagonal, target: BellDiagonal) -> tuple[float, BellDiagonal]:
    """Bilateral XOR of ``control`` onto ``target`` followed by a Z-basis parity check.

    Returns the survival probability and the post-selected control state.
    Raises :class:`DegeneratePostselectionError` when the parities can never
    agree.
    """
    c00, c10, c11, c01 = control.as_tuple()
    t00, t10, t11, t01 = target.as_tuple()
    w = (c00 * t00 + c01 * t01, c10 * t10 + c11 * t11, c10 * t11 + c11 * t10, c00 * t01 + c01 * t00)
    # the four weights add up to (c00+c01)(t00+t01) + (c10+c11)(t10+t11);
    # summing them directly keeps repeated steps normalized
    p_s = math.fsum(w)
    if p_s < 1e-300:
        raise DegeneratePostselectionError("B step survival probability is zero")
    out = BellDiagonal(*(x / p_s for x in w))
    return p_s, out


def p_step(state: BellDiagonal) -> BellDiagonal:
    """Classical P step: three identical pairs collapse to their joint parity.

    Bit errors add modulo 2 and the output phase flips when at least two of
    the three inputs carry a phase error.
    """
    a, b, c, d = state.as_tuple()  # q00, q10, q11, q01
    w = (
        a**3 + 3 * a**2 * d + 3 * b**2 * (a + d) + 6 * a * b * c,
        b**3 + 3 * b**2 * c + 3 * a**2 * (b + c) + 6 * a * b * d,
        c**3 + 3 * b * c**2 + 3 * d**2 * (b + c) + 6 * a * c * d,
        d**3 + 3 * a * d**2 + 3 * c**2 * (a + d) + 6 * b * c * d,
    )
    total = math.fsum(w)  # (a + b + c + d)**3 up to rounding
    return BellDiagonal(*(x / total for x in w))


def _fidelity_rhs(delta_b: float, delta_p: float) -> float:
    return math.sqrt((1 - delta_b) * (1 - delta_p)) + math.sqrt(delta_b * delta_p)


def phase_bound_from_fidelity(fidelity: float, delta_b: float) -> float:
    """Largest phase error rate compatible with a source of basis fidelity ``F``.

    Solves ``F = sqrt((1-db)(1-dp)) + sqrt(db*dp)`` for ``dp`` on
    ``[db, 1/2]``, where the right-hand side falls monotonically from 1.
    The answer is capped at 1/2.
    """
    if not 0 <= fidelity <= 1:
        raise ValueError(f"fidelity must be in [0, 1], got {fidelity}")
    if not 0 <= delta_b < 0.5:
        raise ValueError(f"delta_b must be in [0, 1/2), got {delta_b}")
    if fidelity >= 1.0:
        return delta_b
    if _fidelity_rhs(delta_b, 0.5) >= fidelity:
        return 0.5
    return bisect(lambda dp: _fidelity_rhs(delta_b, dp) - fidelity, delta_b, 0.5, xtol=1e-15, rtol=4 * sys.float_info.epsilon)
