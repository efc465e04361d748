"""Finite Gaussian mixtures with identity covariance.

A mixture is a weighted sum of standard Gaussian bumps

    f(x) = sum_k  w_k * (2*pi)**(-d/2) * exp(-|x - a_k|^2 / 2),

with all the structure carried by the centers ``a_k`` and weights
``w_k``.  Besides the generic container this module provides the three
center layouts the rest of the package studies:

* ``make_gamma``   -- equal-weight lattice, 2N+1 probability mass points;
* ``make_faN``     -- the same lattice with unit weights (a truncated
  periodization rather than a probability density);
* ``make_Gamma``   -- a unit-mass Gaussian at the origin plus two distant
  equal-weight lattice blocks, weighted so the mixing distribution has
  variance at most one;
* ``make_lattice_d`` -- the d-dimensional unit-weight lattice cube.

Evaluations accept a :class:`~mixmodes.numerics.PrecisionContext` and run
on either the double or the MPFR backend; components whose squared
distance to ``x`` exceeds the underflow threshold of the active format
contribute exactly zero, which is the correct rounding of their value.

Lattice constructions store each center coordinate ``a*n`` as the exact
product of the double ``a`` with the integer ``n`` (held in a 96-bit
scalar, wide enough for any component count this module permits).
Rounding the products to doubles would jitter the centers by about one
part in 1e16, which is far larger than the density oscillations the
extended backend resolves at large ``N``; an exactly periodic lattice
keeps those oscillations intact.  JSON interchange rounds centers to
double fidelity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product as _iter_product
from typing import Optional

import gmpy2
import numpy as np

from .numerics import PrecisionContext, compensated_sum, neumaier_mpfr

_DOUBLE_CTX = PrecisionContext()
_NORM_TOL = 1e-9
_MAX_COMPONENTS = 10**7
# 53-bit double times an integer index |n| <= 5e6 needs at most 76 bits.
_CENTER_BITS = 96


def _exact_products(a: float, ns) -> dict:
    """Map each integer ``n`` to the exact value of ``a * n``."""
    with gmpy2.context(precision=_CENTER_BITS):
        am = gmpy2.mpfr(a)
        return {n: am * n for n in ns}


@dataclass(frozen=True)
class BoundBox:
    """Declares that every center satisfies ``max_j |a_kj| <= half_width``."""

    half_width: float

    def __post_init__(self) -> None:
        if not self.half_width >= 0:
            raise ValueError("half_width must be nonnegative")


@dataclass(frozen=True)
class Mixture:
    """Immutable Gaussian mixture: centers, positive weights, a flag for
    whether the weights form a probability vector, and an optional
    declared bound on the center coordinates."""

    dim: int
    centers: tuple
    weights: tuple
    normalized: bool
    bound: Optional[BoundBox] = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if len(self.centers) == 0 or len(self.centers) != len(self.weights):
            raise ValueError("centers and weights must be equal-length and nonempty")
        for c in self.centers:
            if len(c) != self.dim:
                raise ValueError(f"center {c!r} does not have dim {self.dim}")
        for w in self.weights:
            if not w > 0:
                raise ValueError("weights must be positive")
        if self.normalized:
            s = compensated_sum(self.weights)
            if abs(s - 1.0) > _NORM_TOL * len(self.weights):
                raise ValueError(f"normalized mixture weights sum to {s!r}, not 1")
        if self.bound is not None:
            sup = max(abs(v) for c in self.centers for v in c)
            if sup > self.bound.half_width * (1 + 1e-12):
                raise ValueError("centers exceed the declared BoundBox")

    @property
    def n_components(self) -> int:
        return len(self.centers)

    def as_arrays(self):
        """Centers and weights as float arrays (for vectorized double paths)."""
        return (
            np.asarray(self.centers, dtype=float),
            np.asarray(self.weights, dtype=float),
        )


def _as_mixture(dim, centers, weights, normalized, half_width=None) -> Mixture:
    bound = BoundBox(half_width) if half_width is not None else None
    return Mixture(
        dim=dim,
        centers=tuple(tuple(float(v) for v in c) for c in centers),
        weights=tuple(float(w) for w in weights),
        normalized=normalized,
        bound=bound,
    )


def make_gamma(a: float, N: int) -> Mixture:
    """Equal-weight lattice mixture: centers ``a*n`` for ``|n| <= N``,
    each with weight ``1/(2N+1)``."""
    if not a > 0:
        raise ValueError("a must be positive")
    if N < 0:
        raise ValueError("N must be >= 0")
    w = 1.0 / (2 * N + 1)
    prod = _exact_products(a, range(-N, N + 1))
    centers = tuple((prod[n],) for n in range(-N, N + 1))
    return Mixture(1, centers, (w,) * (2 * N + 1), True, BoundBox(a * N))


def make_faN(a: float, N: int) -> Mixture:
    """Unit-weight lattice sum: the gamma layout scaled by ``2N+1``.

    Not a probability density; it is the truncation of the full lattice
    periodization to ``|n| <= N``.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if N < 0:
        raise ValueError("N must be >= 0")
    prod = _exact_products(a, range(-N, N + 1))
    centers = tuple((prod[n],) for n in range(-N, N + 1))
    return Mixture(1, centers, (1.0,) * (2 * N + 1), False, BoundBox(a * N))


def default_outer_weight_scale(N: int) -> float:
    """The weight parameter ``1/(12*pi*(3N+1))`` that pins the mixing
    variance of :func:`make_Gamma` at (just under) one."""
    return 1.0 / (12.0 * math.pi * (3 * N + 1))


def make_Gamma(N: int, alpha: Optional[float] = None) -> Mixture:
    """Central unit Gaussian plus two lattice blocks at ``N <= |n| <= 3N``.

    The lattice pitch is fixed internally at ``a = 2*sqrt(pi)/sqrt(N)``.
    Weight ``1 - 2*alpha`` sits at the origin and each of the ``2*(2N+1)``
    outer centers carries ``alpha/(2N+1)``; the default ``alpha`` makes
    the mixing distribution's variance at most one.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if alpha is None:
        alpha = default_outer_weight_scale(N)
    if not (0 < alpha < 0.5):
        raise ValueError("alpha must lie in (0, 1/2)")
    a = 2.0 * math.sqrt(math.pi) / math.sqrt(N)
    w_out = alpha / (2 * N + 1)
    prod = _exact_products(a, range(-3 * N, 3 * N + 1))
    centers = []
    weights = []
    for n in range(-3 * N, -N + 1):
        centers.append((prod[n],))
        weights.append(w_out)
    centers.append((0.0,))
    weights.append(1.0 - 2.0 * alpha)
    for n in range(N, 3 * N + 1):
        centers.append((prod[n],))
        weights.append(w_out)
    return Mixture(
        1, tuple(centers), tuple(weights), True, BoundBox(a * (3 * N))
    )


def make_lattice_d(a: float, N: int, d: int) -> Mixture:
    """Unit-weight lattice over the cube ``{-N..N}^d``, pitch ``a``."""
    if not a > 0:
        raise ValueError("a must be positive")
    if N < 0:
        raise ValueError("N must be >= 0")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    count = (2 * N + 1) ** d
    if count > _MAX_COMPONENTS:
        raise ValueError(f"{count} components exceeds the {_MAX_COMPONENTS} guard")
    prod = _exact_products(a, range(-N, N + 1))
    centers = tuple(
        tuple(prod[k] for k in idx)
        for idx in _iter_product(range(-N, N + 1), repeat=d)
    )
    return Mixture(d, centers, (1.0,) * count, False, BoundBox(a * N))


def _as_point(x, dim: int):
    if dim == 1 and not isinstance(x, (tuple, list, np.ndarray)):
        return (x,)
    pt = tuple(x)
    if len(pt) != dim:
        raise ValueError(f"point {x!r} does not have dim {dim}")
    return pt


def density(m: Mixture, x, ctx: PrecisionContext = _DOUBLE_CTX):
    """Mixture density at ``x``, summed with compensation in a fixed order.

    Returns a float (double backend) or mpfr (extended backend).
    """
    pt = _as_point(x, m.dim)
    if ctx.is_extended:
        with ctx.workspace():
            xs = [gmpy2.mpfr(v) for v in pt]
            terms = []
            for c, w in zip(m.centers, m.weights):
                q = gmpy2.mpfr(0)
                for xi, ci in zip(xs, c):
                    dt = xi - ci
                    q += dt * dt
                terms.append(w * gmpy2.exp(-q / 2))
            total = neumaier_mpfr(terms)
            norm = 1 / gmpy2.sqrt(2 * gmpy2.const_pi()) ** m.dim
            return total * norm
    xs = [float(v) for v in pt]
    terms = []
    for c, w in zip(m.centers, m.weights):
        q = 0.0
        for xi, ci in zip(xs, c):
            dt = xi - float(ci)
            q += dt * dt
        terms.append(w * math.exp(-0.5 * q))
    total = compensated_sum(terms, ctx)
    return total * (2.0 * math.pi) ** (-m.dim / 2.0)


def density_gradient(m: Mixture, x, ctx: PrecisionContext = _DOUBLE_CTX):
    """Gradient of :func:`density` at ``x``: a length-``dim`` tuple of
    ``sum_k w_k (a_kj - x_j) * (2*pi)**(-d/2) * exp(-|x - a_k|^2/2)``."""
    pt = _as_point(x, m.dim)
    if ctx.is_extended:
        with ctx.workspace():
            xs = [gmpy2.mpfr(v) for v in pt]
            per_coord = [[] for _ in range(m.dim)]
            for c, w in zip(m.centers, m.weights):
                q = gmpy2.mpfr(0)
                for xi, ci in zip(xs, c):
                    dt = xi - ci
                    q += dt * dt
                e = w * gmpy2.exp(-q / 2)
                for j in range(m.dim):
                    per_coord[j].append((c[j] - xs[j]) * e)
            norm = 1 / gmpy2.sqrt(2 * gmpy2.const_pi()) ** m.dim
            return tuple(neumaier_mpfr(ts) * norm for ts in per_coord)
    xs = [float(v) for v in pt]
    per_coord = [[] for _ in range(m.dim)]
    for c, w in zip(m.centers, m.weights):
        cf = [float(ci) for ci in c]
        q = 0.0
        for xi, ci in zip(xs, cf):
            dt = xi - ci
            q += dt * dt
        e = w * math.exp(-0.5 * q)
        for j in range(m.dim):
            per_coord[j].append((cf[j] - xs[j]) * e)
    norm = (2.0 * math.pi) ** (-m.dim / 2.0)
    return tuple(compensated_sum(ts, ctx) * norm for ts in per_coord)


def mixing_variance(m: Mixture) -> float:
    """Variance of the mixing distribution, ``sum w|a|^2 - |sum w a|^2``.

    Only meaningful for probability mixtures; raises otherwise.
    """
    if not m.normalized:
        raise ValueError("mixing_variance requires a normalized mixture")
    # 128-bit accumulation keeps the result correct to the last double bit
    # even when centers carry more precision than a double holds.
    with gmpy2.context(precision=128):
        second = gmpy2.mpfr(0)
        means = [gmpy2.mpfr(0) for _ in range(m.dim)]
        for c, w in zip(m.centers, m.weights):
            wm = gmpy2.mpfr(w)
            for j, v in enumerate(c):
                vm = gmpy2.mpfr(v)
                second += wm * vm * vm
                means[j] += wm * vm
        for mj in means:
            second -= mj * mj
        return max(float(second), 0.0)


def mixture_to_json(m: Mixture) -> str:
    return json.dumps(
        {
            "dim": m.dim,
            "centers": [[float(v) for v in c] for c in m.centers],
            "weights": list(m.weights),
            "normalized": m.normalized,
        }
    )


def mixture_from_json(text: str) -> Mixture:
    obj = json.loads(text)
    return _as_mixture(
        int(obj["dim"]), obj["centers"], obj["weights"], bool(obj["normalized"])
    )
