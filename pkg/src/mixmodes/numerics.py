"""Precision-managed scalar arithmetic shared by every evaluation routine.

Two interchangeable arithmetic backends sit behind one small interface:

* hardware doubles (``mantissa_bits == 53``), the fast path, valid while
  the quantities being resolved stay comfortably above 2**-53;
* MPFR software floats (via :mod:`gmpy2`) with a mantissa width chosen
  at runtime, for everything finer.

The oscillations this package certifies shrink like ``exp(-pi*N/2)``,
i.e. roughly ``2**(-2.266*N)`` relative to the carrier, so hardware
doubles are provably insufficient once ``N`` grows past ~18.
:func:`required_bits` encodes the working precision for a given ``N``,
including a fixed 64-bit guard margin for accumulated rounding.

All functions here are pure; MPFR precision is managed with thread-local
contexts that are restored on exit, so concurrent use is safe.
"""

from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass

import gmpy2

DOUBLE_BITS = 53
GUARD_BITS = 64
# Extra working bits used inside evaluation kernels so that ulp-level
# agreement at the *requested* precision is not polluted by the rounding
# of individual series terms.
KERNEL_GUARD_BITS = 32

_TINIEST = 5e-324  # smallest positive subnormal double


def required_bits(n: int) -> int:
    """Mantissa bits needed to resolve the size-``n`` lattice oscillation.

    The amplitude to resolve is ``exp(-pi*n/2) ~ 2**(-2.266*n)``; a fixed
    64-bit guard absorbs rounding accumulated over the O(n)-term sums.
    Returns ``64 + ceil(2.27*n)``, computed in exact integer arithmetic
    (``ceil(227*n/100)``) so float rounding can never shift the ceiling.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return GUARD_BITS + -((-227 * n) // 100)


@dataclass(frozen=True)
class PrecisionContext:
    """Evaluation precision plus the tolerances derived from it.

    mantissa_bits: significand width of the active format (53 = hardware
        double, anything larger selects the MPFR backend).
    abs_tol: absolute cutoff for series tails.
    rel_tol: relative tolerance for comparisons at this precision.
    """

    mantissa_bits: int = DOUBLE_BITS
    abs_tol: float = math.ldexp(1.0, -(DOUBLE_BITS + 8))
    rel_tol: float = math.ldexp(1.0, -(DOUBLE_BITS - 16))

    def __post_init__(self) -> None:
        if self.mantissa_bits < DOUBLE_BITS:
            raise ValueError(f"mantissa_bits must be >= {DOUBLE_BITS}")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")

    @classmethod
    def for_bits(cls, bits: int) -> "PrecisionContext":
        abs_tol = max(math.ldexp(1.0, -min(bits + 8, 1070)), _TINIEST)
        rel_tol = max(math.ldexp(1.0, -min(bits - 16, 1070)), _TINIEST)
        return cls(mantissa_bits=bits, abs_tol=abs_tol, rel_tol=rel_tol)

    @classmethod
    def for_size(cls, n: int) -> "PrecisionContext":
        """Context at required_bits(n), the default policy for lattice size n."""
        return cls.for_bits(required_bits(n))

    @property
    def is_extended(self) -> bool:
        return self.mantissa_bits > DOUBLE_BITS

    @property
    def working_bits(self) -> int:
        """Internal kernel precision: requested bits plus guard digits."""
        return self.mantissa_bits + KERNEL_GUARD_BITS

    def workspace(self):
        """Context manager activating the backend for kernel evaluation."""
        if self.is_extended:
            return gmpy2.context(precision=self.working_bits)
        return nullcontext()


def neumaier_double(values) -> float:
    """Neumaier-compensated double sum of ``values`` in the given order."""
    total = 0.0
    comp = 0.0
    for v in values:
        v = float(v)
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


def neumaier_mpfr(values):
    """Neumaier-compensated mpfr sum; the caller must have set the
    desired gmpy2 context."""
    total = gmpy2.mpfr(0)
    comp = gmpy2.mpfr(0)
    for v in values:
        v = gmpy2.mpfr(v)
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


def compensated_sum(terms, ctx: PrecisionContext = PrecisionContext()):
    """Sum ``terms`` in a fixed order with Neumaier compensation.

    The error is bounded by 2 ulp of the active format provided the
    cancellation among the terms stays within the compensation range
    (one extra word); an empty iterable sums to zero.  Deterministic for
    a fixed input order.  Returns a float on the double backend and an
    ``mpfr`` on the extended backend.
    """
    if not ctx.is_extended:
        return neumaier_double(terms)
    with gmpy2.context(precision=ctx.mantissa_bits):
        return neumaier_mpfr(terms)
