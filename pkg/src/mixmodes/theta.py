"""Periodized Gaussians (lattice theta sums) and certified bounds on them.

The object of study is the full lattice periodization

    f_a(x) = sum_{n in Z^d} (2*pi)**(-d/2) * exp(-|x - a*n|^2 / 2),

an ``a``-periodic smooth function.  Two absolutely convergent series
compute it:

* space domain -- the defining sum, whose terms decay like
  ``exp(-(a*n)^2/2)``; efficient for large ``a``;
* frequency domain -- its Fourier expansion
  ``f_a(x) = (1/a^d) * prod_j (1 + 2*sum_{n>=1} exp(-2*pi^2*n^2/a^2)
  * cos(2*pi*n*x_j/a))``, whose coefficients decay like
  ``exp(-2*pi^2*n^2/a^2)``; efficient for small ``a``.

Equating the two decay exponents ``a^2/2`` and ``2*pi^2/a^2`` puts the
crossover at ``a = sqrt(2*pi)``; :func:`theta` dispatches on it.

The central quantity downstream is the peak-to-trough drop over one cell,

    h(a) = f_a(0) - f_a(a/2) = (4/a) * sum_{n odd, n>0} exp(-2*pi^2*n^2/a^2),

computed here by that cancellation-free series, together with its
closed-form sandwich

    (4/a)*e^{-2*pi^2/a^2}  <=  h(a)  <=  (4/a)*e^{-2*pi^2/a^2} / (1 - e^{-2*pi^2/a^2}),

and the uniform bound on the error of truncating the lattice to
``|n| <= N`` (:func:`truncation_bound`).  Any function ``g`` that stays
within ``h(a)/2`` of ``f_a`` on a union of lattice cells must have a mode
inside every one of those cells; the certificates in
:mod:`mixmodes.modes` rest on that observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import gmpy2

from .numerics import PrecisionContext, neumaier_double, neumaier_mpfr

#: domain crossover: frequency series below, space series at or above
CROSSOVER = math.sqrt(2.0 * math.pi)

_DOUBLE_CTX = PrecisionContext()
_MAX_TERMS = 10**6
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ThetaSeries:
    """Lattice periodization of the standard Gaussian with pitch ``a``
    in dimension ``dim``; the d-dimensional sum factors into a product
    of one-dimensional sums, which is how it is evaluated."""

    a: float
    dim: int = 1

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError("a must be positive")
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")


def _pt(x, dim):
    if dim == 1 and not isinstance(x, (tuple, list)):
        return (x,)
    pt = tuple(x)
    if len(pt) != dim:
        raise ValueError(f"point {x!r} does not have dim {dim}")
    return pt


# ----------------------------------------------------------------------
# one-dimensional kernels
# ----------------------------------------------------------------------

def _t1_space_double(a, x, abs_tol):
    inv = 1.0 / _SQRT_2PI
    r = x - a * round(x / a)
    terms = [math.exp(-0.5 * r * r)]
    n = 1
    while True:
        m = a * n - abs(r)
        # remaining |k| >= n terms are dominated by a geometric series
        # with ratio exp(-a*m):  sum <= 2*exp(-m^2/2)/(1 - exp(-a*m))
        tail = 2.0 * math.exp(-0.5 * m * m) / (1.0 - math.exp(-a * m))
        if tail * inv < abs_tol:
            break
        up = a * n - r
        dn = a * n + r
        terms.append(math.exp(-0.5 * up * up))
        terms.append(math.exp(-0.5 * dn * dn))
        n += 1
        if n > _MAX_TERMS:
            raise RuntimeError("space series failed to converge")
    return inv * neumaier_double(terms)


def _t1_freq_double(a, x, abs_tol):
    beta = 2.0 * math.pi * math.pi / (a * a)
    fr = x / a
    fr -= round(fr)
    terms = [1.0]
    n = 1
    while True:
        # sum_{m>=n} e^{-beta m^2} <= e^{-beta n^2} / (1 - e^{-beta n})
        tail = 2.0 * math.exp(-beta * n * n) / (1.0 - math.exp(-beta * n))
        if tail / a < abs_tol:
            break
        terms.append(2.0 * math.exp(-beta * n * n) * math.cos(2.0 * math.pi * n * fr))
        n += 1
        if n > _MAX_TERMS:
            raise RuntimeError("frequency series failed to converge")
    return neumaier_double(terms) / a


def _t1_space_mpfr(a, x, abs_tol):
    # caller has set the working gmpy2 context
    a = gmpy2.mpfr(a)
    x = gmpy2.mpfr(x)
    inv = 1 / gmpy2.sqrt(2 * gmpy2.const_pi())
    r = x - a * gmpy2.rint(x / a)
    terms = [gmpy2.exp(-r * r / 2)]
    n = 1
    while True:
        m = a * n - abs(r)
        tail = 2 * gmpy2.exp(-m * m / 2) / (1 - gmpy2.exp(-a * m))
        if tail * inv < abs_tol:
            break
        up = a * n - r
        dn = a * n + r
        terms.append(gmpy2.exp(-up * up / 2))
        terms.append(gmpy2.exp(-dn * dn / 2))
        n += 1
        if n > _MAX_TERMS:
            raise RuntimeError("space series failed to converge")
    return inv * neumaier_mpfr(terms)


def _t1_freq_mpfr(a, x, abs_tol):
    a = gmpy2.mpfr(a)
    x = gmpy2.mpfr(x)
    beta = 2 * gmpy2.const_pi() ** 2 / (a * a)
    tau = 2 * gmpy2.const_pi()
    fr = x / a
    fr -= gmpy2.rint(fr)
    terms = [gmpy2.mpfr(1)]
    n = 1
    while True:
        tail = 2 * gmpy2.exp(-beta * n * n) / (1 - gmpy2.exp(-beta * n))
        if tail / a < abs_tol:
            break
        terms.append(2 * gmpy2.exp(-beta * n * n) * gmpy2.cos(tau * n * fr))
        n += 1
        if n > _MAX_TERMS:
            raise RuntimeError("frequency series failed to converge")
    return neumaier_mpfr(terms) / a


def _t1_auto_double(a, x, abs_tol):
    if a < CROSSOVER:
        return _t1_freq_double(a, x, abs_tol)
    return _t1_space_double(a, x, abs_tol)


def _t1_auto_mpfr(a, x, abs_tol):
    if a < CROSSOVER:
        return _t1_freq_mpfr(a, x, abs_tol)
    return _t1_space_mpfr(a, x, abs_tol)


def _product_eval(t: ThetaSeries, x, ctx: PrecisionContext, kernel_double, kernel_mpfr):
    pt = _pt(x, t.dim)
    if ctx.is_extended:
        with ctx.workspace():
            out = gmpy2.mpfr(1)
            for xi in pt:
                out *= kernel_mpfr(t.a, xi, ctx.abs_tol)
            return out
    out = 1.0
    for xi in pt:
        out *= kernel_double(t.a, float(xi), ctx.abs_tol)
    return out


def theta_space(t: ThetaSeries, x, ctx: PrecisionContext = _DOUBLE_CTX):
    """Evaluate the periodization by the direct lattice sum, truncated when
    a certified tail bound falls below ``ctx.abs_tol``."""
    return _product_eval(t, x, ctx, _t1_space_double, _t1_space_mpfr)


def theta_freq(t: ThetaSeries, x, ctx: PrecisionContext = _DOUBLE_CTX):
    """Evaluate the periodization by its Fourier series, truncated when a
    certified tail bound falls below ``ctx.abs_tol``."""
    return _product_eval(t, x, ctx, _t1_freq_double, _t1_freq_mpfr)


def theta(t: ThetaSeries, x, ctx: PrecisionContext = _DOUBLE_CTX):
    """Evaluate via whichever domain converges faster for this pitch."""
    return _product_eval(t, x, ctx, _t1_auto_double, _t1_auto_mpfr)


# ----------------------------------------------------------------------
# the one-cell drop h(a) and its sandwich
# ----------------------------------------------------------------------

def h_exact(a: float, ctx: PrecisionContext = _DOUBLE_CTX):
    """Peak-to-trough drop over one cell, ``f_a(0) - f_a(a/2)``.

    Evaluated by the cancellation-free odd-frequency series
    ``(4/a) * sum_{n odd} exp(-2*pi^2*n^2/a^2)``: at ``x = a/2`` the
    cosines flip sign exactly for odd ``n`` and cancel for even ``n``,
    so no subtractive loss occurs at any precision.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if ctx.is_extended:
        with ctx.workspace():
            am = gmpy2.mpfr(a)
            beta = 2 * gmpy2.const_pi() ** 2 / (am * am)
            rel = gmpy2.exp2(-(ctx.working_bits + 8))
            total = gmpy2.exp(-beta)
            n = 3
            while True:
                tail = gmpy2.exp(-beta * n * n) / (1 - gmpy2.exp(-beta * n))
                if tail < rel * total:
                    break
                total += gmpy2.exp(-beta * n * n)
                n += 2
                if n > _MAX_TERMS:
                    raise RuntimeError("h series failed to converge")
            return 4 / am * total
    beta = 2.0 * math.pi * math.pi / (a * a)
    rel = math.ldexp(1.0, -61)
    total = math.exp(-beta)
    if total == 0.0:
        return 0.0
    n = 3
    while True:
        tail = math.exp(-beta * n * n) / (1.0 - math.exp(-beta * n))
        if tail < rel * total:
            break
        total += math.exp(-beta * n * n)
        n += 2
        if n > _MAX_TERMS:
            raise RuntimeError("h series failed to converge")
    return 4.0 / a * total


class HBounds(NamedTuple):
    """Closed-form sandwich for the one-cell drop ``h(a)``."""

    lower: float
    upper: float


def h_bounds(a: float) -> HBounds:
    """Sandwich ``lower <= h(a) <= upper`` with
    ``lower = (4/a)*exp(-2*pi^2/a^2)`` (first series term) and
    ``upper = lower / (1 - exp(-2*pi^2/a^2))`` (geometric domination of
    the rest).  The same pair also bounds the full oscillation
    ``max f_a - min f_a``."""
    if not a > 0:
        raise ValueError("a must be positive")
    q = math.exp(-2.0 * math.pi * math.pi / (a * a))
    lower = 4.0 / a * q
    if lower == 0.0:
        raise ValueError(f"drop at a={a} underflows the double format")
    return HBounds(lower, lower / (1.0 - q))


def h_bounds_at(a: float, ctx: PrecisionContext = _DOUBLE_CTX):
    """The :func:`h_bounds` pair evaluated as context-native scalars.

    For small ``a`` the sandwich is tighter than any fixed precision, so
    ordering checks against an extended-precision ``h_exact`` must use
    bounds carrying the same rounding; comparing against the
    double-rounded :func:`h_bounds` manufactures 1-ulp violations.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not ctx.is_extended:
        return tuple(h_bounds(a))
    with ctx.workspace():
        am = gmpy2.mpfr(a)
        q = gmpy2.exp(-2 * gmpy2.const_pi() ** 2 / (am * am))
        lower = 4 / am * q
        return lower, lower / (1 - q)


def _golden_extreme(f, lo, hi, want_max, iters):
    """Golden-section search returning the best value seen (never worse
    than any probe, including the endpoints)."""
    phi = 0.6180339887498949
    best = f(lo)
    v = f(hi)
    best = max(best, v) if want_max else min(best, v)
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        pick1 = f1 > f2 if want_max else f1 < f2
        if pick1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = f(x1)
            probe = f1
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = f(x2)
            probe = f2
        best = max(best, probe) if want_max else min(best, probe)
    return best


def hbar_exact(a: float, ctx: PrecisionContext = _DOUBLE_CTX):
    """Full oscillation ``max f_a - min f_a`` over one period.

    The period is sampled at 1024 points (which include the lattice
    point and the half-cell point exactly) and the best bracket around
    each extreme candidate is refined by golden-section search; the
    extreme value returned is the best evaluation seen, so the result
    never exceeds the true oscillation.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    n_samples = 1024

    def run(f, step, iters):
        vals = [f(i * step) for i in range(n_samples)]
        imax = max(range(n_samples), key=lambda i: vals[i])
        imin = min(range(n_samples), key=lambda i: vals[i])
        vmax = _golden_extreme(
            f, (imax - 1) * step, (imax + 1) * step, True, iters
        )
        vmin = _golden_extreme(
            f, (imin - 1) * step, (imin + 1) * step, False, iters
        )
        vmax = max(vmax, vals[imax])
        vmin = min(vmin, vals[imin])
        return vmax - vmin

    if ctx.is_extended:
        with ctx.workspace():
            am = gmpy2.mpfr(a)
            step = am / n_samples
            iters = int(1.5 * (ctx.working_bits // 2 + 16))
            return run(lambda x: _t1_auto_mpfr(a, x, ctx.abs_tol), step, iters)
    return run(lambda x: _t1_auto_double(a, x, ctx.abs_tol), a / n_samples, 64)


# ----------------------------------------------------------------------
# lattice truncation estimates
# ----------------------------------------------------------------------

def truncation_bound(a: float, N: int) -> float:
    """Uniform bound on ``|f_a(x) - f_{a,N}(x)|`` for ``|x| <= a*N/2``,
    where ``f_{a,N}`` keeps only the ``|n| <= N`` lattice terms:

        (2/sqrt(2*pi)) * exp(-a^2 N^2/8) * exp(-a^2 N/2) / (1 - exp(-a^2 N/2)).

    Each discarded center sits at distance at least ``a*N/2 + a*k`` from
    ``x``; expanding the square and dominating by a geometric series in
    ``exp(-a^2 N/2)`` gives the bound.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    q = math.exp(-0.5 * a * a * N)
    return (2.0 / _SQRT_2PI) * math.exp(-a * a * N * N / 8.0) * q / (1.0 - q)


def truncated_lattice_gradient_bound(a: float, N: int, d: int) -> float:
    """Certified upper bound on ``||grad f||_2`` over ``|x|_inf <= a*N/2``
    for the unit-weight truncated lattice ``make_lattice_d(a, N, d)``.

    The truncated sum factors across coordinates, so
    ``||grad|| <= sqrt(d) * sup|f1N'| * (sup f1N)^(d-1)`` with ``f1N`` the
    one-dimensional truncated sum.  ``|f1N'|`` splits into the full
    periodization's derivative, bounded via its Fourier series by
    ``D1 = (4*pi/a^2) * sum n*exp(-2*pi^2*n^2/a^2)``, plus the derivative
    of the discarded tail, bounded by the same distance/geometric
    argument as :func:`truncation_bound`; and ``f1N <= f1 <= f1(0)``
    because the discarded terms are positive.

    Far sharper than the triangle-inequality Lipschitz constant (which
    grows with the component count and cannot see the cancellation
    between neighboring bumps), yet still a proven bound; the cube
    certificates for lattice sweeps rely on it to keep the boundary
    sampling pitch humane.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    if a * N / 2.0 < 1.0:
        raise ValueError("bound derivation needs a*N/2 >= 1")
    beta = 2.0 * math.pi * math.pi / (a * a)
    s_d1 = 0.0
    s_f = 0.0
    n = 1
    while True:
        t = math.exp(-beta * n * n)
        s_d1 += n * t
        s_f += t
        if n * t < 1e-30 * (s_d1 + 1e-300) and n > 1:
            break
        n += 1
        if n > _MAX_TERMS:
            raise RuntimeError("derivative series failed to converge")
    slack = 1.0 + 1e-12  # covers the dropped series tails many times over
    d1 = (4.0 * math.pi / (a * a)) * s_d1 * slack
    q = math.exp(-0.5 * a * a * N)
    tail_grad = (
        (2.0 / _SQRT_2PI)
        * math.exp(-a * a * N * N / 8.0)
        * ((0.5 * a * N) * q / (1.0 - q) + a * q / ((1.0 - q) ** 2))
    )
    f1_max = (1.0 / a) * (1.0 + 2.0 * s_f) * slack
    return math.sqrt(d) * (d1 + tail_grad) * f1_max ** (d - 1)


# ----------------------------------------------------------------------
# multidimensional center-to-edge drop (diagnostic)
# ----------------------------------------------------------------------

class CenterEdgeGap(NamedTuple):
    gap: float
    proxy: float


def theta_d_center_edge_gap(
    a: float, d: int, ctx: PrecisionContext = _DOUBLE_CTX
) -> CenterEdgeGap:
    """Drop from the lattice point to the boundary of its cell in ``d``
    dimensions: ``f_a(0) - max{f_a(x) : |x|_inf = a/2}``.

    The boundary maximum is approximated by sampling one face on a
    ``32^(d-1)`` grid and refining coordinatewise around the best sample
    (all ``2*d`` faces agree by lattice symmetry); sampling can only
    undershoot the face maximum, so the returned gap never understates
    the drop.  Also returns the coarse hill-height proxy
    ``(3/a^d) * exp(-1/(2*a^2))`` for comparison; see
    :func:`proxy_threshold` for where that proxy is actually a valid
    lower bound.  Diagnostic only: downstream certificates derive their
    own margins.
    """
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    proxy = (3.0 / a**d) * math.exp(-1.0 / (2.0 * a * a))

    def compute(f1, half):
        c1 = f1(0.0)
        e1 = f1(half)
        if d == 1:
            return c1 - e1
        n_grid = 32
        grid = [-half + (2 * half) * k / (n_grid - 1) for k in range(n_grid)]
        vals = [f1(g) for g in grid]
        if d == 2:
            best_i = max(range(n_grid), key=lambda i: vals[i])
            free_best = _golden_extreme(
                f1, grid[max(best_i - 1, 0)], grid[min(best_i + 1, n_grid - 1)],
                True, iters,
            )
            free_best = max(free_best, vals[best_i])
            return c1 * c1 - e1 * free_best
        # d == 3: the face value factors as e1 * f1(y1) * f1(y2), so the
        # per-coordinate refinement above applies to each factor
        best_i = max(range(n_grid), key=lambda i: vals[i])
        free_best = _golden_extreme(
            f1, grid[max(best_i - 1, 0)], grid[min(best_i + 1, n_grid - 1)],
            True, iters,
        )
        free_best = max(free_best, vals[best_i])
        return c1**3 - e1 * free_best * free_best

    if ctx.is_extended:
        with ctx.workspace():
            iters = int(1.5 * (ctx.working_bits // 2 + 16))
            gap = compute(
                lambda x: _t1_auto_mpfr(a, x, ctx.abs_tol), gmpy2.mpfr(a) / 2
            )
            return CenterEdgeGap(float(gap), proxy)
    iters = 64
    gap = compute(lambda x: _t1_auto_double(a, float(x), ctx.abs_tol), a / 2.0)
    return CenterEdgeGap(float(gap), proxy)


def proxy_threshold(
    d: int,
    ctx: PrecisionContext = _DOUBLE_CTX,
    a_lo: float = 0.5,
    a_hi: float = 6.0,
    step: float = 0.1,
) -> Optional[float]:
    """Smallest grid value of ``a`` from which the hill-height proxy
    ``(3/a^d)*exp(-1/(2*a^2))`` stays a valid lower bound for the true
    center-to-edge drop all the way up to ``a_hi``.

    The proxy decays far more slowly than the true (Fourier-driven) drop
    as ``a`` shrinks, so it is only usable above a per-dimension
    threshold; returns ``None`` when it fails even at ``a_hi``.
    """
    n = int(round((a_hi - a_lo) / step))
    threshold = None
    for k in range(n, -1, -1):
        a = a_lo + k * step
        gap, proxy = theta_d_center_edge_gap(a, d, ctx)
        if proxy <= gap:
            threshold = a
        else:
            break
    return threshold
