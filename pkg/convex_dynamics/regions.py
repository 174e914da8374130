"""Invariant regions of the greedy map phi_gamma.

A region Q is invariant when phi_gamma(Q) lies in Q for every gamma in P.
phi_gamma is the translation x -> x + gamma - v_i on the closed Voronoi cell
R_{v_i}, so invariance is decided by the extreme points of every cell
intersected with Q and by the vertices of P in gamma.

Regions share a small protocol used by the verifiers: dim, scale,
slack(points) (non-negative inside), contains_many(points),
boundary_points(count), random_points(rng, count), critical_points(polytope)
and to_text().
"""
import logging
import itertools
from fractions import Fraction

import numpy as np
from dataclasses import dataclass
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection, ConvexHull, QhullError

from convex_dynamics import utils
from convex_dynamics.polytope import DimensionError

log = logging.getLogger(__name__)

# Slack below -VERIFY_TOLERANCE * (1 + scale) counts as leaving the region
VERIFY_TOLERANCE = 1e-9

# Largest violation accepted from the linear programs of the exact check
EXACT_TOLERANCE = 1e-7

# Relative tolerance for treating a sample as lying on several closed Voronoi cells
CELL_TIE_TOLERANCE = 1e-9

DEFAULT_BOUNDARY_SAMPLES = 2000
DEFAULT_GAMMA_SAMPLES = 64
GAMMA_CHUNK = 16


class RegionError(RuntimeError):
    """Raised when a region cannot be built or no invariant region is found."""


@dataclass(frozen=True)
class RegionVerdict(object):
    """Outcome of an invariance check.

    margin is the smallest slack of an image point; a negative margin comes
    with a witness {x, gamma, image}.
    """
    passed: bool
    margin: float
    samples: int
    method: str
    witness: dict = None
    t: float = None
    rho: float = None

    def to_dict(self):
        record = {'pass': self.passed, 'margin': self.margin, 'samples': self.samples, 'method': self.method}
        if self.t is not None:
            record['t'] = self.t
        if self.rho is not None:
            record['rho'] = self.rho
        if self.witness is not None:
            record['witness'] = self.witness
        return record


def _witness(x, gamma, image):
    return {'x': [float(value) for value in x], 'gamma': [float(value) for value in gamma],
            'image': [float(value) for value in image]}


class IntervalRegion(object):
    """Closed interval [low, high] of the line."""

    dim = 1

    def __init__(self, low, high):
        if not low <= high:
            raise RegionError("Empty interval [%r, %r]" % (low, high))
        self.low = float(low)
        self.high = float(high)

    def __repr__(self):
        return "IntervalRegion([%r, %r])" % (self.low, self.high)

    @property
    def scale(self):
        return max(abs(self.low), abs(self.high))

    def slack(self, points):
        points = np.asarray(points, dtype=float).reshape(-1)
        return np.minimum(points - self.low, self.high - points)

    def contains(self, x, tolerance=VERIFY_TOLERANCE):
        return bool(self.slack([x])[0] >= -tolerance)

    def contains_many(self, points, tolerance=VERIFY_TOLERANCE):
        return self.slack(points) >= -tolerance

    def boundary_points(self, count):
        return np.linspace(self.low, self.high, max(count, 2)).reshape(-1, 1)

    def random_points(self, rng, count):
        return rng.uniform(self.low, self.high, size=(count, 1))

    def critical_points(self, polytope):
        """Endpoints and the cell boundaries (midpoints between vertices) inside the interval."""
        vertices = np.sort(polytope.vertices[:, 0])
        middles = (vertices[1:] + vertices[:-1]) / 2.0
        middles = middles[(middles >= self.low) & (middles <= self.high)]
        return np.concatenate([[self.low, self.high], middles]).reshape(-1, 1)

    def to_text(self):
        return u"seg %r 0.0 %r 0.0\n" % (self.low, self.high)


class HalfspaceRegion(object):
    """Intersection of half-spaces n_j . x <= d_j with unit normals n_j.

    Usage example:

    >>> region = HalfspaceRegion([(1, 0), (-1, 0), (0, 1), (0, -1)], [1, 1, 1, 1])
    >>> region.contains((0.5, -0.5))
    True
    """

    def __init__(self, normals, offsets, name=None):
        normals = np.array(normals, dtype=float)
        offsets = np.array(offsets, dtype=float).reshape(-1)
        if normals.ndim != 2 or len(normals) != len(offsets) or len(normals) == 0:
            raise RegionError("Mismatched constraints: %s normals, %d offsets" % (normals.shape, len(offsets)))

        lengths = np.linalg.norm(normals, axis=1)
        if np.any(lengths <= 0) or not np.all(np.isfinite(normals)) or not np.all(np.isfinite(offsets)):
            raise RegionError("Constraint normals must be finite and nonzero")

        self.normals = normals / lengths[:, None]
        self.offsets = offsets / lengths
        self.name = name or 'region'
        self._vertices = None

    def __repr__(self):
        return "HalfspaceRegion(%s, %d constraints, N=%d)" % (self.name, len(self.offsets), self.dim)

    @property
    def dim(self):
        return self.normals.shape[1]

    @property
    def scale(self):
        return float(np.max(np.abs(self.offsets)))

    def translated(self, t):
        """Return the region with every constraint moved outward by t."""
        return HalfspaceRegion(self.normals, self.offsets + t, name=self.name)

    def scaled(self, rho):
        return HalfspaceRegion(self.normals, self.offsets * rho, name=self.name)

    def slack(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return np.min(self.offsets[None, :] - points.dot(self.normals.T), axis=1)

    def contains(self, x, tolerance=VERIFY_TOLERANCE):
        return bool(self.slack(x)[0] >= -tolerance)

    def contains_many(self, points, tolerance=VERIFY_TOLERANCE):
        return self.slack(points) >= -tolerance

    def interior_point(self):
        """Return the Chebyshev centre and radius of the region."""
        dim = self.dim
        costs = np.zeros(dim + 1)
        costs[-1] = -1.0
        constraints = np.hstack([self.normals, np.ones((len(self.offsets), 1))])
        result = linprog(costs, A_ub=constraints, b_ub=self.offsets,
                         bounds=[(None, None)] * dim + [(0, None)], method='highs')
        if result.status == 3:
            raise RegionError("%r is unbounded" % self)
        if result.status != 0:
            raise RegionError("%r has no interior: %s" % (self, result.message))

        radius = result.x[-1]
        if radius <= 1e-12:
            raise RegionError("%r has an empty interior" % self)
        return result.x[:-1], radius

    def vertices(self):
        """Vertices of the bounded region, counter-clockwise in 2-D."""
        if self._vertices is not None:
            return self._vertices

        if self.dim == 1:
            signs = self.normals[:, 0]
            if not (np.any(signs > 0) and np.any(signs < 0)):
                raise RegionError("%r is unbounded" % self)
            low = np.max(-self.offsets[signs < 0])
            high = np.min(self.offsets[signs > 0])
            if low > high:
                raise RegionError("%r is empty" % self)
            self._vertices = np.array([[low], [high]])
            return self._vertices

        center, _ = self.interior_point()
        try:
            intersection = HalfspaceIntersection(np.hstack([self.normals, -self.offsets[:, None]]), center)
        except QhullError as error:
            raise RegionError("Vertex enumeration of %r failed: %s" % (self, error))

        points = np.unique(np.round(intersection.intersections, 12), axis=0)
        if self.dim == 2:
            angles = np.arctan2(points[:, 1] - center[1], points[:, 0] - center[0])
            points = points[np.argsort(angles)]
        self._vertices = points
        return points

    def boundary_points(self, count):
        """Dense boundary sample: the perimeter in 2-D, rays from the centre otherwise."""
        vertices = self.vertices()
        if self.dim == 1:
            return np.linspace(vertices[0, 0], vertices[1, 0], max(count, 2)).reshape(-1, 1)

        if self.dim == 2:
            closed = np.vstack([vertices, vertices[:1]])
            lengths = np.linalg.norm(np.diff(closed, axis=0), axis=1)
            ends = np.cumsum(lengths)
            positions = np.linspace(0.0, ends[-1], count, endpoint=False)
            edges = np.minimum(np.searchsorted(ends, positions, side='right'), len(lengths) - 1)
            fractions = (positions - (ends[edges] - lengths[edges])) / lengths[edges]
            return closed[edges] + fractions[:, None] * (closed[edges + 1] - closed[edges])

        center, _ = self.interior_point()
        directions = np.random.default_rng(count).normal(size=(count, self.dim))
        return np.vstack([vertices, self._ray_exits(center, directions)])

    def _ray_exits(self, center, directions):
        rates = directions.dot(self.normals.T)
        room = self.offsets - self.normals.dot(center)
        steps = np.where(rates > 1e-15, room[None, :] / np.where(rates > 1e-15, rates, 1.0), np.inf).min(axis=1)
        return center + steps[:, None] * directions

    def random_points(self, rng, count):
        """Random convex combinations of the region's vertices."""
        vertices = self.vertices()
        return rng.dirichlet(np.ones(len(vertices)), size=count).dot(vertices)

    def critical_points(self, polytope):
        """Vertices of every closed Voronoi cell intersected with the region (2-D).

        They are the region's vertices, the crossings of Voronoi bisectors with
        the region's edges and the Voronoi vertices inside the region. Other
        dimensions return the region's vertices.
        """
        vertices = self.vertices()
        if self.dim != 2:
            return vertices

        points = [vertices]
        closed = np.vstack([vertices, vertices[:1]])
        bisectors = [(polytope.vertices[j] - polytope.vertices[i],
                      (polytope.vertices[j].dot(polytope.vertices[j]) - polytope.vertices[i].dot(polytope.vertices[i])) / 2.0)
                     for i, j in itertools.combinations(range(len(polytope)), 2)]

        for normal, offset in bisectors:
            for start, end in zip(closed[:-1], closed[1:]):
                along = normal.dot(end - start)
                if abs(along) < 1e-15:
                    continue
                fraction = (offset - normal.dot(start)) / along
                if -1e-12 <= fraction <= 1 + 1e-12:
                    points.append((start + fraction * (end - start))[None, :])

        for (n1, d1), (n2, d2) in itertools.combinations(bisectors, 2):
            matrix = np.array([n1, n2])
            if abs(np.linalg.det(matrix)) < 1e-12:
                continue
            corner = np.linalg.solve(matrix, [d1, d2])
            if self.contains(corner):
                points.append(corner[None, :])
        return np.vstack(points)

    def to_text(self):
        """Boundary as 'seg x0 y0 x1 y1' lines (2-D regions only)."""
        if self.dim != 2:
            raise RegionError("Boundary export needs a 2-D region, %r is %d-D" % (self, self.dim))
        vertices = self.vertices()
        closed = np.vstack([vertices, vertices[:1]])
        return u''.join(u"seg %r %r %r %r\n" % (float(a[0]), float(a[1]), float(b[0]), float(b[1]))
                        for a, b in zip(closed[:-1], closed[1:]))


def _interval_ends(polytope):
    if polytope.dim != 1 or len(polytope) != 2:
        raise RegionError("Interval regions need a 1-D polytope with 2 vertices, got %r" % polytope)
    v0, v1 = polytope.vertices[0, 0], polytope.vertices[1, 0]
    if v1 <= v0:
        raise RegionError("Interval polytope needs v0 < v1, got [%r, %r]" % (v0, v1))
    return v0, v1


def _interval_verdict(low, high, v0, v1, t=None):
    """Exact invariance of [low, high] under the interval map, in rational arithmetic.

    On [low, m] (m the midpoint, a tie resolved to v0) phi is x + gamma - v0,
    whose images reach up to m + v1 - v0; on (m, high] phi is x + gamma - v1,
    whose images come down to (but never reach) m - (v1 - v0).
    """
    low, high, v0, v1 = Fraction(low), Fraction(high), Fraction(v0), Fraction(v1)
    middle = (v0 + v1) / 2
    width = v1 - v0
    margin = min(high - (middle + width), (middle - width) - low)
    witness = None
    if margin < 0:
        if middle + width > high:
            witness = _witness([middle], [v1], [middle + width])
        else:
            x = (middle + low + width) / 2
            witness = _witness([x], [v0], [x - width])
    return RegionVerdict(passed=margin >= 0, margin=float(margin), samples=2, method='exact-interval', witness=witness, t=t)


def interval_region(polytope, t):
    """Return ([v0 - t, v1 + t], verdict); invariant exactly when t >= (v1 - v0) / 2."""
    if t < 0:
        raise RegionError("Translation t must be non-negative, got %r" % t)
    v0, v1 = _interval_ends(polytope)
    low, high = Fraction(v0) - Fraction(t), Fraction(v1) + Fraction(t)
    verdict = _interval_verdict(low, high, v0, v1, t=float(t))
    log.debug("Interval region [%s, %s]: %s", float(low), float(high), verdict.passed)
    return IntervalRegion(float(low), float(high)), verdict


def polygon_region(polytope, t):
    """Return Q_t, the polygon with every edge of P moved outward by t."""
    if t < 0:
        raise RegionError("Translation t must be non-negative, got %r" % t)
    if polytope.dim != 2 or len(polytope) < 3:
        raise RegionError("Polygon regions need a 2-D polytope with at least 3 vertices, got %r" % polytope)

    try:
        hull = ConvexHull(polytope.vertices)
    except QhullError:
        raise RegionError("Vertices of %r are collinear" % polytope)

    if len(hull.vertices) != len(polytope):
        raise RegionError("Vertices of %r are not in convex position" % polytope)

    return HalfspaceRegion(hull.equations[:, :-1], -hull.equations[:, -1] + t, name='Q_t(%s, %g)' % (polytope.name, t))


def _closed_cell_images(polytope, xs):
    """Return x - v_i for every sample and vertex, and the mask of closed cells holding each sample."""
    squared = np.sum((xs[:, None, :] - polytope.vertices[None, :, :]) ** 2, axis=2)
    tolerance = CELL_TIE_TOLERANCE * (1.0 + squared.max(axis=1, keepdims=True))
    tied = squared <= squared.min(axis=1, keepdims=True) + tolerance
    moved = xs[:, None, :] - polytope.vertices[None, :, :]
    return moved, tied


def _sample_invariance(region, polytope, boundary_samples, gamma_samples, rng, workers):
    dim = polytope.dim
    xs = np.vstack([region.boundary_points(boundary_samples),
                    region.critical_points(polytope),
                    region.random_points(rng, max(1, boundary_samples // 4))])
    gammas = np.vstack([polytope.vertices, polytope.random_points(rng, gamma_samples)])
    moved, tied = _closed_cell_images(polytope, xs)

    def check(chunk):
        images = moved[None, :, :, :] + gammas[chunk][:, None, None, :]
        slack = region.slack(images.reshape(-1, dim)).reshape(images.shape[:3])
        slack = np.where(tied[None, :, :], slack, np.inf)
        g, s, v = np.unravel_index(np.argmin(slack), slack.shape)
        return slack[g, s, v], chunk.start + g, s, v

    results = utils.run_parallel(check, utils.chunks(len(gammas), GAMMA_CHUNK), workers)
    margin, g, s, v = min(results, key=lambda result: result[0])
    tolerance = VERIFY_TOLERANCE * (1.0 + region.scale)
    passed = bool(margin >= -tolerance)
    witness = None if passed else _witness(xs[s], gammas[g], moved[s, v] + gammas[g])
    return RegionVerdict(passed=passed, margin=float(margin), samples=len(xs) * len(gammas), method='sampling', witness=witness)


def verify_invariance(region, polytope, boundary_samples=DEFAULT_BOUNDARY_SAMPLES, gamma_samples=DEFAULT_GAMMA_SAMPLES,
                      rng=None, workers=None, recheck=True):
    """Check phi_gamma(region) lies in region by sampling.

    x ranges over a dense boundary sample, the vertices of the closed Voronoi
    cells cut by the region and random interior points; gamma over the
    vertices of P plus random points of P. A point lying on several closed
    cells is mapped by each of their vertices. A pass is re-checked at double
    density before it is accepted. Interval regions of a 1-D P are decided
    exactly.

    :param region: a region object (IntervalRegion, HalfspaceRegion, ConvexRegion2D).
    :param Polytope polytope: quantization alphabet.
    :param rng: numpy Generator for the random samples.
    :param int workers: thread pool size for the gamma chunks.
    :return RegionVerdict: the first-found worst violation, or the smallest margin.
    """
    if region.dim != polytope.dim:
        raise DimensionError("%r does not match %r" % (region, polytope))

    if isinstance(region, IntervalRegion) and len(polytope) == 2:
        v0, v1 = _interval_ends(polytope)
        return _interval_verdict(region.low, region.high, v0, v1)

    rng = rng if rng is not None else np.random.default_rng(0)
    verdict = _sample_invariance(region, polytope, boundary_samples, gamma_samples, rng, workers)
    if verdict.passed and recheck:
        dense = _sample_invariance(region, polytope, 2 * boundary_samples, 2 * gamma_samples, rng, workers)
        verdict = RegionVerdict(passed=dense.passed, margin=min(verdict.margin, dense.margin),
                                samples=verdict.samples + dense.samples, method='sampling', witness=dense.witness)

    log.debug("Sampled invariance of %r under %r: pass=%s margin=%.3g", region, polytope, verdict.passed, verdict.margin)
    return verdict


def exact_invariance(region, polytope, tolerance=EXACT_TOLERANCE):
    """Decide invariance of a half-space region by linear programming.

    For every closed cell R_i and region constraint (n, d) the program
    max n.x over R_i and Q gives the largest reach of the translation by
    gamma - v_i; maximizing n.gamma over the vertices of P completes the check.
    """
    if isinstance(region, IntervalRegion):
        v0, v1 = _interval_ends(polytope)
        return _interval_verdict(region.low, region.high, v0, v1)

    if region.dim != polytope.dim:
        raise DimensionError("%r does not match %r" % (region, polytope))

    bounds = [(None, None)] * polytope.dim
    reach = polytope.vertices.dot(region.normals.T).max(axis=0)
    margin, witness, programs = np.inf, None, 0
    for i, vertex in enumerate(polytope.vertices):
        cell_normals, cell_offsets = polytope.voronoi_matrix(i)
        constraints = np.vstack([cell_normals, region.normals])
        offsets = np.concatenate([cell_offsets, region.offsets])
        for k, (normal, offset) in enumerate(zip(region.normals, region.offsets)):
            result = linprog(-normal, A_ub=constraints, b_ub=offsets, bounds=bounds, method='highs')
            programs += 1
            if result.status == 2:
                break
            if result.status == 3:
                raise RegionError("Cell %d of %r is unbounded inside %r" % (i, polytope, region))
            if result.status != 0:
                raise RegionError("Linear program failed on cell %d: %s" % (i, result.message))

            slack = offset - (-result.fun + reach[k] - normal.dot(vertex))
            if slack < margin:
                margin = slack
                gamma = polytope.vertices[np.argmax(polytope.vertices.dot(normal))]
                witness = _witness(result.x, gamma, result.x + gamma - vertex)

    passed = bool(margin >= -tolerance)
    return RegionVerdict(passed=passed, margin=float(margin), samples=programs, method='exact-lp',
                         witness=None if passed else witness)


@dataclass(frozen=True)
class MinT(object):
    """Result of the search for the smallest invariant Q_t."""
    t: float
    verdict: RegionVerdict
    below: RegionVerdict = None
    monotonic: bool = True
    resolution: float = None

    def to_dict(self):
        return {'t': self.t, 'resolution': self.resolution, 'monotonic': self.monotonic,
                'verdict': self.verdict.to_dict(), 'below': self.below.to_dict() if self.below else None}


def find_min_t(polytope, resolution=1e-3, cap=None, exact=False, boundary_samples=DEFAULT_BOUNDARY_SAMPLES,
               gamma_samples=DEFAULT_GAMMA_SAMPLES, seed=0, recheck_factor=4, workers=None):
    """Bisect for the smallest t at which Q_t is invariant.

    Bisection assumes the pass predicate is monotone in t. The result is
    re-verified at T with recheck_factor times the sampling budget and at
    T - 10 * resolution, where it is expected to fail; a pass there is
    reported as non-monotonic.

    :param float cap: largest t tried, 100 * diam(P) by default.
    :param bool exact: decide each t by linear programming instead of sampling.
    :param int seed: seed of the sampling Generator, fixed for every t.
    """
    if polytope.dim == 1:
        v0, v1 = _interval_ends(polytope)
        t = float((Fraction(v1) - Fraction(v0)) / 2)
        _, verdict = interval_region(polytope, t)
        below_t = t - 10 * resolution
        below = interval_region(polytope, below_t)[1] if below_t >= 0 else None
        return MinT(t=t, verdict=verdict, below=below, monotonic=True, resolution=resolution)

    def check(t, factor=1):
        region = polygon_region(polytope, t)
        if exact:
            return exact_invariance(region, polytope)
        return verify_invariance(region, polytope, boundary_samples=factor * boundary_samples,
                                 gamma_samples=factor * gamma_samples, rng=utils.make_rng(seed), workers=workers)

    cap = cap if cap is not None else 100 * polytope.diameter()
    high = polytope.diameter()
    while not check(high).passed:
        high *= 2
        if high > cap:
            raise RegionError("No invariant Q_t of %r with t <= %g" % (polytope, cap))

    low = 0.0
    if check(low).passed:
        high = low
    while high - low > resolution:
        middle = (low + high) / 2.0
        if check(middle).passed:
            high = middle
        else:
            low = middle

    verdict = check(high, recheck_factor)
    verdict = RegionVerdict(passed=verdict.passed, margin=verdict.margin, samples=verdict.samples,
                            method=verdict.method, witness=verdict.witness, t=high)
    below = None
    below_t = high - 10 * resolution
    if below_t >= 0:
        below = check(below_t)
        below = RegionVerdict(passed=below.passed, margin=below.margin, samples=below.samples,
                              method=below.method, witness=below.witness, t=below_t)

    monotonic = verdict.passed and (below is None or not below.passed)
    if not monotonic:
        log.warning("Non-monotonic invariance around t=%g for %r: pass at T=%s, pass below=%s",
                    high, polytope, verdict.passed, below.passed if below else None)
    log.info("Smallest invariant Q_t of %r: t=%g (resolution %g)", polytope, high, resolution)
    return MinT(t=high, verdict=verdict, below=below, monotonic=monotonic, resolution=resolution)


@dataclass(frozen=True)
class Absorption(object):
    """Steps until an orbit entered the region, and whether it stayed for the confirmation steps."""
    entry_step: int
    confirm_steps: int
    stayed: bool
    excess: np.ndarray

    def to_dict(self):
        return {'entry_step': self.entry_step, 'confirm_steps': self.confirm_steps, 'stayed': self.stayed,
                'initial_excess': float(self.excess[0]) if len(self.excess) else 0.0}


def absorption_test(region, polytope, margin, x0, max_steps=10 ** 5, rng=None, gammas=None, confirm_steps=1000):
    """Iterate phi with random inputs of P shrunk by margin until the orbit enters region.

    :param float margin: shrink fraction in (0, 1) defining P0.
    :param x0: starting point.
    :param gammas: optional callable k -> gamma replacing the random inputs.
    :param int confirm_steps: steps after entry that must stay inside.
    :return Absorption: entry step and the excess (-slack) of every step before entry.
    """
    inner = polytope.shrunk(margin)
    rng = rng if rng is not None else np.random.default_rng(0)
    tolerance = VERIFY_TOLERANCE * (1.0 + region.scale)
    x = polytope.check_point(x0)
    vertices = polytope.vertices

    batch = np.zeros((0, polytope.dim))
    excess = []
    entry = None
    stayed = True
    for k in range(max_steps + confirm_steps + 1):
        slack = float(region.slack(x[None, :])[0])
        if entry is None:
            if slack >= -tolerance:
                entry = k
                log.debug("Orbit from %r entered %r at step %d", x0, region, k)
            else:
                excess.append(-slack)
                if k == max_steps:
                    raise RegionError("Orbit did not enter %r within %d steps, final excess %g" % (region, max_steps, -slack))
        elif slack < -tolerance:
            stayed = False
            log.warning("Orbit left %r at step %d, %d steps after entry", region, k, k - entry)
            break

        if entry is not None and k >= entry + confirm_steps:
            break

        if gammas is not None:
            gamma = polytope.check_point(gammas(k))
        else:
            if not len(batch):
                batch = inner.random_points(rng, 4096)
            gamma, batch = batch[0], batch[1:]
        x = x + gamma - vertices[polytope.nearest_vertex(x)]

    return Absorption(entry_step=entry, confirm_steps=confirm_steps, stayed=stayed, excess=np.array(excess))
