"""Mode location and counting for Gaussian mixtures, honest about what is
proved versus what is merely observed.

A mode is a strict local maximum of the mixture density.  Four methods,
in increasing order of rigor per claim:

* ``dense_grid_oracle`` -- double-precision grid scan, strict against all
  neighbors; cheap cross-check, proves nothing.
* ``count_modes_1d`` -- sign changes of the derivative on a grid finer
  than an eighth of the closest center spacing, each bracket narrowed by
  bisection; counts every mode the grid resolves but carries no
  certificate.
* ``certified_lower_bound_1d`` -- for each candidate interval, a mode is
  certified inside whenever the density at the midpoint beats both
  endpoint values by more than a precision-scaled margin; a continuous
  function larger inside than on the boundary has an interior maximum,
  and the margin keeps rounding from manufacturing one.
* ``count_modes_cube_d`` -- the same interior-beats-boundary argument on
  axis-aligned cubes, with the sampled boundary maximum inflated by a
  gradient bound times the sample covering radius so that unsampled
  boundary points cannot hide a larger value.

Certified counts are lower bounds by construction: a failed certificate
contributes zero, never an error.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .mixture import Mixture, density, density_gradient
from .numerics import PrecisionContext

_DOUBLE_CTX = PrecisionContext()
_ORACLE_MAX_POINTS = 10**8
#: certificates must clear the working precision by this many bits
_MARGIN_GUARD_BITS = 32


class Method(str, Enum):
    SIGN_CHANGE = "sign_change"
    INTERVAL_CERTIFICATE = "interval_certificate"
    CUBE_CERTIFICATE = "cube_certificate"
    DENSE_GRID_ORACLE = "dense_grid_oracle"


@dataclass(frozen=True)
class ModeReport:
    """Outcome of one counting run.  ``certified`` marks methods whose
    count is a proven lower bound on the number of modes in the region;
    ``locations`` are approximate (bracket midpoints or cube centers)."""

    count: int
    locations: tuple[tuple[float, ...], ...]
    certified: bool
    method: Method
    precision_bits: int
    search_region: tuple[tuple[float, float], ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "count": self.count,
                "locations": [list(p) for p in self.locations],
                "certified": self.certified,
                "method": self.method.value,
                "precision_bits": self.precision_bits,
                "region": [list(ax) for ax in self.search_region],
            }
        )


@dataclass(frozen=True)
class IntervalFamily:
    """Ordered intervals with pairwise disjoint interiors; shared
    endpoints are allowed, as is ulp-level overlap from rounding the
    endpoints of abutting cells."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for lo, hi in ivs:
            if not lo < hi:
                raise ValueError(f"degenerate interval ({lo}, {hi})")
        for (alo, ahi), (blo, bhi) in zip(ivs, ivs[1:]):
            if blo < alo:
                raise ValueError("intervals must be sorted by left endpoint")
            if blo < ahi - 1e-9 * (ahi - alo):
                raise ValueError(f"intervals ({alo},{ahi}) and ({blo},{bhi}) overlap")

    def __len__(self) -> int:
        return len(self.intervals)


def _axis_indices(a: float, lo: float, hi: float) -> range:
    # cell n is [a*n - a/2, a*n + a/2]; admit cells whose closed hull lies
    # inside [lo, hi] up to an ulp-scale tolerance, so that a region meant
    # to hold exactly 2k+1 cells is not short-changed by rounding
    tol = 1e-9 * a
    n_min = math.ceil((lo - tol) / a + 0.5 - 1e-12)
    n_max = math.floor((hi + tol) / a - 0.5 + 1e-12)
    return range(n_min, n_max + 1)


def lattice_intervals(a: float, region: tuple[float, float]) -> IntervalFamily:
    """Cells ``[a*n - a/2, a*n + a/2]`` entirely contained in ``region``."""
    if not a > 0:
        raise ValueError("a must be positive")
    lo, hi = float(region[0]), float(region[1])
    if not lo < hi:
        raise ValueError("empty region")
    cells = tuple(
        (a * n - a / 2.0, a * n + a / 2.0) for n in _axis_indices(a, lo, hi)
    )
    return IntervalFamily(cells)


def lattice_cubes(
    a: float, half_extent: float, d: int
) -> tuple[tuple[tuple[float, float], ...], ...]:
    """Cubes ``prod_j [a*n_j - a/2, a*n_j + a/2]`` contained in the box
    ``|x|_inf <= half_extent``, ordered lexicographically in ``n``."""
    if not a > 0:
        raise ValueError("a must be positive")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    ns = list(_axis_indices(a, -half_extent, half_extent))
    cubes = []
    for combo in itertools.product(ns, repeat=d):
        cubes.append(tuple((a * n - a / 2.0, a * n + a / 2.0) for n in combo))
    return tuple(cubes)


def _min_center_gap(m: Mixture) -> Optional[float]:
    xs = sorted({c[0] for c in m.centers})
    if len(xs) < 2:
        return None
    return min(b - x for x, b in zip(xs, xs[1:]))


def _sign(g) -> int:
    if g > 0:
        return 1
    if g < 0:
        return -1
    return 0


def count_modes_1d(
    m: Mixture,
    region: tuple[float, float],
    grid_step: float,
    ctx: PrecisionContext = _DOUBLE_CTX,
) -> ModeReport:
    """Count derivative sign changes from + to - over ``region``.

    ``grid_step`` must not exceed an eighth of the smallest gap between
    distinct centers: two modes of a mixture with unit-variance
    components cannot sit closer than the centers that produce them, so
    this pitch cannot step over a +/- pair.  Runs of exact zeros on the
    grid (symmetry points) are compressed into the enclosing sign
    pattern.  Each detected bracket is narrowed by bisection to one
    millionth of the grid pitch.
    """
    if m.dim != 1:
        raise ValueError("count_modes_1d handles dim 1 only")
    lo, hi = float(region[0]), float(region[1])
    if not lo < hi:
        raise ValueError("empty region")
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    gap = _min_center_gap(m)
    cap = 1.0 / 8.0 if gap is None else gap / 8.0
    if grid_step > cap * (1.0 + 1e-9):
        raise ValueError(f"grid_step {grid_step} exceeds the cap {cap}")

    def grad(x: float):
        return density_gradient(m, x, ctx)[0]

    n_steps = max(int(math.ceil((hi - lo) / grid_step)), 1)
    xs = [lo + (hi - lo) * i / n_steps for i in range(n_steps + 1)]
    width_target = grid_step * 1e-6

    locations: list[tuple[float, ...]] = []
    last_sign = 0
    last_x = xs[0]
    for x in xs:
        s = _sign(grad(x))
        if s == 0:
            continue
        if last_sign > 0 and s < 0:
            blo, bhi = last_x, x
            for _ in range(200):
                if bhi - blo <= width_target:
                    break
                mid = 0.5 * (blo + bhi)
                if grad(mid) > 0:
                    blo = mid
                else:
                    bhi = mid
            locations.append((0.5 * (blo + bhi),))
        last_sign = s
        last_x = x
    return ModeReport(
        count=len(locations),
        locations=tuple(locations),
        certified=False,
        method=Method.SIGN_CHANGE,
        precision_bits=ctx.mantissa_bits,
        search_region=((lo, hi),),
    )


def certified_lower_bound_1d(
    m: Mixture,
    family: IntervalFamily,
    ctx: PrecisionContext = _DOUBLE_CTX,
) -> ModeReport:
    """Certify a mode inside each interval where the midpoint density
    beats both endpoint densities by more than ``2**-(bits-32)`` times
    the midpoint value.  Ties and sub-margin wins do not count; the
    returned count is a proven lower bound for the union of intervals.
    """
    if m.dim != 1:
        raise ValueError("certified_lower_bound_1d handles dim 1 only")
    scale = math.ldexp(1.0, -(ctx.mantissa_bits - _MARGIN_GUARD_BITS))
    locations: list[tuple[float, ...]] = []
    with ctx.workspace():
        for lo, hi in family.intervals:
            mid = 0.5 * (lo + hi)
            fm = density(m, mid, ctx)
            fl = density(m, lo, ctx)
            fr = density(m, hi, ctx)
            edge = fl if fl >= fr else fr
            if fm - edge > scale * fm:
                locations.append((mid,))
    region = (
        ((family.intervals[0][0], family.intervals[-1][1]),)
        if family.intervals
        else ((0.0, 0.0),)
    )
    return ModeReport(
        count=len(locations),
        locations=tuple(locations),
        certified=True,
        method=Method.INTERVAL_CERTIFICATE,
        precision_bits=ctx.mantissa_bits,
        search_region=region,
    )


def lipschitz_bound(m: Mixture) -> float:
    """Global bound on ``||grad density||_2`` from the triangle
    inequality: total weight times the peak gradient magnitude
    ``exp(-1/2) * (2*pi)**(-d/2)`` of one component."""
    total_w = math.fsum(m.weights)
    return total_w * math.exp(-0.5) * (2.0 * math.pi) ** (-m.dim / 2.0)


def _face_points(
    cube: tuple[tuple[float, float], ...], boundary_step: float
):
    """Axis-grid samples of the cube boundary with per-face pitch at most
    ``boundary_step``; every boundary point is then within Euclidean
    distance ``boundary_step * sqrt(d-1) / 2 < boundary_step * sqrt(d) / 2``
    of some sample."""
    d = len(cube)
    axis_grids = []
    for lo, hi in cube:
        n = max(int(math.ceil((hi - lo) / boundary_step)), 1)
        axis_grids.append([lo + (hi - lo) * i / n for i in range(n + 1)])
    for j in range(d):
        others = [axis_grids[k] for k in range(d) if k != j]
        for fixed in (cube[j][0], cube[j][1]):
            for combo in itertools.product(*others):
                pt = list(combo)
                pt.insert(j, fixed)
                yield tuple(pt)


def _cubes_disjoint(cubes) -> bool:
    for i in range(len(cubes)):
        for j in range(i + 1, len(cubes)):
            if all(
                blo < ahi - 1e-9 * (ahi - alo) and alo < bhi - 1e-9 * (bhi - blo)
                for (alo, ahi), (blo, bhi) in zip(cubes[i], cubes[j])
            ):
                return False
    return True


def count_modes_cube_d(
    m: Mixture,
    cubes: Sequence[tuple[tuple[float, float], ...]],
    boundary_step: float,
    ctx: PrecisionContext = _DOUBLE_CTX,
    grad_bound: Optional[float] = None,
) -> ModeReport:
    """Certify a mode inside each cube whose center density beats the
    sampled boundary maximum by more than the precision margin plus
    ``grad_bound * boundary_step * sqrt(d)/2``; that slack exceeds the
    sample covering radius times the gradient bound, so the true
    boundary maximum is beaten too.  ``grad_bound`` defaults to
    :func:`lipschitz_bound`; callers holding a sharper proven bound for
    their region should pass it, since the triangle-inequality default
    forces impractically fine sampling once the certificate gap is
    small.  Cubes that fail contribute zero.
    """
    if not cubes:
        raise ValueError("no cubes given")
    d = m.dim
    if d not in (2, 3):
        raise ValueError("count_modes_cube_d handles dim 2 or 3 only")
    for cube in cubes:
        if len(cube) != d:
            raise ValueError("cube dimension does not match mixture")
        for lo, hi in cube:
            if not lo < hi:
                raise ValueError(f"degenerate cube axis ({lo}, {hi})")
            if boundary_step > (hi - lo) / 8.0 * (1.0 + 1e-9):
                raise ValueError("boundary_step must be <= cube side / 8")
    if not _cubes_disjoint(cubes):
        raise ValueError("cube interiors overlap")
    L = lipschitz_bound(m) if grad_bound is None else float(grad_bound)
    if not L > 0:
        raise ValueError("grad_bound must be positive")
    cover = 0.5 * boundary_step * math.sqrt(d)
    scale = math.ldexp(1.0, -(ctx.mantissa_bits - _MARGIN_GUARD_BITS))
    locations: list[tuple[float, ...]] = []
    with ctx.workspace():
        for cube in cubes:
            center = tuple(0.5 * (lo + hi) for lo, hi in cube)
            fc = density(m, center, ctx)
            threshold = fc - scale * fc - L * cover
            if not threshold > 0:
                continue
            ok = True
            for pt in _face_points(cube, boundary_step):
                if density(m, pt, ctx) >= threshold:
                    ok = False
                    break
            if ok:
                locations.append(center)
    region = tuple(
        (min(c[j][0] for c in cubes), max(c[j][1] for c in cubes))
        for j in range(d)
    )
    return ModeReport(
        count=len(locations),
        locations=tuple(locations),
        certified=True,
        method=Method.CUBE_CERTIFICATE,
        precision_bits=ctx.mantissa_bits,
        search_region=region,
    )


def dense_grid_oracle(
    m: Mixture,
    region: Sequence[tuple[float, float]],
    points_per_unit: float,
    ctx: PrecisionContext = _DOUBLE_CTX,
) -> ModeReport:
    """Brute-force reference count: evaluate the density on a regular
    grid over ``region`` and report interior points strictly greater
    than every neighbor (all ``3**d - 1`` of them).  Adjacent marks are
    merged, keeping the larger value, so a plateau straddling two pixels
    is not double-counted.  No certificate; refuses grids beyond
    ``10**8`` points.  The double backend is vectorized; the extended
    backend evaluates pointwise and is meant for small cross-checks.
    """
    region = tuple((float(lo), float(hi)) for lo, hi in region)
    if len(region) != m.dim:
        raise ValueError("region dimension does not match mixture")
    if not points_per_unit > 0:
        raise ValueError("points_per_unit must be positive")
    axes = []
    total = 1
    for lo, hi in region:
        if not lo < hi:
            raise ValueError("empty region")
        n = max(int(round((hi - lo) * points_per_unit)), 2) + 1
        total *= n
        axes.append(np.linspace(lo, hi, n))
    if total > _ORACLE_MAX_POINTS:
        raise ValueError(f"grid of {total} points exceeds {_ORACLE_MAX_POINTS}")

    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    if ctx.is_extended:
        vals = np.empty(pts.shape[0], dtype=object)
        with ctx.workspace():
            for i, row in enumerate(pts):
                vals[i] = density(m, tuple(row), ctx)
    else:
        centers, weights = m.as_arrays()
        norm = (2.0 * math.pi) ** (-m.dim / 2.0)
        vals = np.empty(pts.shape[0])
        chunk = 1 << 15
        for i in range(0, pts.shape[0], chunk):
            block = pts[i : i + chunk]
            q = ((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            vals[i : i + chunk] = (weights[None, :] * np.exp(-0.5 * q)).sum(axis=1)
        vals *= norm
    vals = vals.reshape([len(ax) for ax in axes])

    d = m.dim
    inner = tuple(slice(1, -1) for _ in range(d))
    mask = np.ones(vals[inner].shape, dtype=bool)
    core = vals[inner]
    for offset in itertools.product((-1, 0, 1), repeat=d):
        if all(o == 0 for o in offset):
            continue
        sl = tuple(slice(1 + o, vals.shape[k] - 1 + o) for k, o in enumerate(offset))
        mask &= core > vals[sl]
    idx = np.argwhere(mask) + 1

    # merge marks that touch (Chebyshev-adjacent), keeping the higher one
    marks = sorted(
        (tuple(int(i) for i in row) for row in idx),
        key=lambda t: -vals[t],
    )
    kept: list[tuple[int, ...]] = []
    for t in marks:
        if all(max(abs(a - b) for a, b in zip(t, k)) > 1 for k in kept):
            kept.append(t)
    locations = tuple(
        tuple(float(axes[j][t[j]]) for j in range(d)) for t in sorted(kept)
    )
    return ModeReport(
        count=len(locations),
        locations=locations,
        certified=False,
        method=Method.DENSE_GRID_ORACLE,
        precision_bits=ctx.mantissa_bits,
        search_region=region,
    )
