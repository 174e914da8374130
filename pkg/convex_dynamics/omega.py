"""Proto-invariant sets of the plane built from directions on the unit circle.

Omega is the unit circle with a small open arc removed around every marked
direction (the unit normals of all vertex differences v_i - v_j) while the
marked directions themselves are kept. Q_inf is the intersection of the
half-planes x . w <= 1 over w in Omega, and rho * Q_inf is invariant for
all large enough rho.

In polar form a point at angle a lies in Q_inf when |x| cos(dist(a, Omega)) <= 1,
so each removed arc of centre c and half-angle theta flattens the circle into
three tangent segments meeting at angles c - theta/2 and c + theta/2.
"""
import math
import logging
import itertools

import numpy as np
from dataclasses import dataclass

from convex_dynamics import regions
from convex_dynamics.polytope import DimensionError
from convex_dynamics.regions import RegionError

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi

# Marked directions closer than this angle are merged
ANGLE_TOLERANCE = 1e-9

# Turning and closure tolerance of the boundary checks
BOUNDARY_TOLERANCE = 1e-9

# Doubling search for rho runs up to this multiple of the largest diameter
RHO_CAP_FACTOR = 100


def _wrap(angles):
    return np.mod(angles, TWO_PI)


def _unit(angle):
    return np.array([math.cos(angle), math.sin(angle)])


def marked_directions(polytopes):
    """Return the sorted angles of both unit normals of v_i - v_j over all pairs of all polytopes."""
    angles = []
    for polytope in polytopes:
        if polytope.dim != 2:
            raise DimensionError("Omega needs 2-D polytopes, got %r" % polytope)
        for v_i, v_j in itertools.combinations(polytope.vertices, 2):
            dx, dy = v_j - v_i
            normal = math.atan2(dx, -dy)
            angles.extend([normal, normal + math.pi])

    angles = np.sort(_wrap(np.array(angles)))
    unique = [angles[0]]
    for angle in angles[1:]:
        if angle - unique[-1] > ANGLE_TOLERANCE:
            unique.append(angle)
    if len(unique) > 1 and unique[0] + TWO_PI - unique[-1] <= ANGLE_TOLERANCE:
        unique.pop()
    return np.array(unique)


class Omega2D(object):
    """Unit circle minus open arcs of half-angle theta about the marked directions.

    With no marked directions Omega is the whole circle.
    """

    def __init__(self, marked, theta=0.0):
        marked = np.sort(_wrap(np.asarray(marked, dtype=float).reshape(-1)))
        gap = self.min_gap_of(marked)
        if len(marked) and not 0 < theta < gap / 2.0:
            raise RegionError("Arcs of half-angle %.6g interfere: the smallest gap between marked directions is %.6g"
                              % (theta, gap))

        self.marked = marked
        self.theta = float(theta) if len(marked) else 0.0
        self.min_gap = gap

    def __repr__(self):
        return "Omega2D(%d marked, theta=%.4g deg)" % (len(self.marked), math.degrees(self.theta))

    @staticmethod
    def min_gap_of(marked):
        if len(marked) == 0:
            return TWO_PI
        gaps = np.diff(np.concatenate([marked, [marked[0] + TWO_PI]]))
        return float(gaps.min())

    @property
    def arcs(self):
        """Removed arcs as (centre angle, half-angle) pairs."""
        return [(float(center), self.theta) for center in self.marked]

    def distance(self, angles):
        """Angular distance from each angle to the retained set."""
        angles = _wrap(np.asarray(angles, dtype=float))
        if len(self.marked) == 0:
            return np.zeros(angles.shape)
        offsets = np.abs((angles[..., None] - self.marked + math.pi) % TWO_PI - math.pi)
        inside = offsets < self.theta
        to_retained = np.where(inside, np.minimum(offsets, self.theta - offsets), np.inf).min(axis=-1)
        return np.where(np.any(inside, axis=-1), to_retained, 0.0)

    def retains(self, angle):
        return bool(self.distance(np.array([angle]))[0] == 0.0)

    def antipodal(self):
        """Return True when every marked direction has its opposite marked too."""
        opposite = _wrap(self.marked + math.pi)
        return all(np.min(np.abs((self.marked - angle + math.pi) % TWO_PI - math.pi)) <= ANGLE_TOLERANCE
                   for angle in opposite)


def build_omega_2d(polytope, theta=None):
    """Return Omega for a 2-D polytope, theta defaulting to a third of the smallest gap."""
    return build_omega(polytope if isinstance(polytope, (list, tuple)) else [polytope], theta)


def build_omega(polytopes, theta=None):
    marked = marked_directions(polytopes)
    if len(marked) < 2:
        raise RegionError("Degenerate marked directions %r" % (marked.tolist(),))
    if theta is None:
        theta = Omega2D.min_gap_of(marked) / 3.0
    omega = Omega2D(marked, theta)
    log.debug("Built %r from %d polytopes", omega, len(polytopes))
    return omega


@dataclass(frozen=True)
class Arc(object):
    radius: float
    start: float
    end: float

    def point(self, angle):
        return self.radius * _unit(angle)

    @property
    def first(self):
        return self.point(self.start)

    @property
    def last(self):
        return self.point(self.end)

    @property
    def turning(self):
        return self.end - self.start

    def directions(self):
        return _unit(self.start + math.pi / 2), _unit(self.end + math.pi / 2)

    def to_text(self):
        return u"arc 0.0 0.0 %r %r %r\n" % (self.radius, self.start, self.end)


@dataclass(frozen=True)
class Segment(object):
    first: np.ndarray
    last: np.ndarray
    turning = 0.0

    def directions(self):
        direction = (self.last - self.first) / np.linalg.norm(self.last - self.first)
        return direction, direction

    def to_text(self):
        return u"seg %r %r %r %r\n" % (float(self.first[0]), float(self.first[1]), float(self.last[0]), float(self.last[1]))


class ConvexRegion2D(object):
    """rho * Q_inf with its boundary as arcs of radius rho and tangent segments."""

    dim = 2

    def __init__(self, omega, rho=1.0):
        if rho <= 0:
            raise RegionError("Scale rho must be positive, got %r" % rho)
        self.omega = omega
        self.rho = float(rho)
        self.boundary = self._assemble()
        self.check_convex()

    def __repr__(self):
        return "ConvexRegion2D(%r, rho=%g)" % (self.omega, self.rho)

    @property
    def scale(self):
        return self.rho / math.cos(self.omega.theta / 2.0)

    def corners(self):
        """Boundary breakpoints: arc endpoints and the two corners of every notch."""
        points = []
        corner_radius = self.rho / math.cos(self.omega.theta / 2.0)
        for center, theta in self.omega.arcs:
            points.extend([self.rho * _unit(center - theta), corner_radius * _unit(center - theta / 2.0),
                           corner_radius * _unit(center + theta / 2.0), self.rho * _unit(center + theta)])
        return np.array(points).reshape(-1, 2)

    def _assemble(self):
        arcs = self.omega.arcs
        if not arcs:
            return [Arc(self.rho, 0.0, TWO_PI)]

        elements = []
        corner_radius = self.rho / math.cos(self.omega.theta / 2.0)
        for index, (center, theta) in enumerate(arcs):
            next_center, next_theta = arcs[(index + 1) % len(arcs)]
            if index == len(arcs) - 1:
                next_center += TWO_PI

            start = self.rho * _unit(center - theta)
            low_corner = corner_radius * _unit(center - theta / 2.0)
            high_corner = corner_radius * _unit(center + theta / 2.0)
            end = self.rho * _unit(center + theta)
            elements.extend([Segment(start, low_corner), Segment(low_corner, high_corner), Segment(high_corner, end)])

            if next_center - next_theta > center + theta:
                elements.append(Arc(self.rho, center + theta, next_center - next_theta))
        return elements

    def check_convex(self):
        """Verify the boundary closes up and turns left by a total of 2 pi."""
        count = len(self.boundary)
        total = 0.0
        for index, element in enumerate(self.boundary):
            following = self.boundary[(index + 1) % count]
            if np.linalg.norm(element.last - following.first) > BOUNDARY_TOLERANCE * (1 + self.rho):
                raise RegionError("Boundary of %r is not closed at element %d" % (self, index))

            _, outgoing = element.directions()
            incoming, _ = following.directions()
            turn = math.atan2(outgoing[0] * incoming[1] - outgoing[1] * incoming[0], outgoing.dot(incoming))
            if turn < -BOUNDARY_TOLERANCE:
                raise RegionError("Boundary of %r turns clockwise after element %d" % (self, index))
            total += turn + element.turning

        if abs(total - TWO_PI) > 1e-6:
            raise RegionError("Boundary of %r turns by %.9g instead of 2 pi" % (self, total))
        return True

    def _unit_slack(self, points):
        radii = np.linalg.norm(points, axis=1)
        angles = np.arctan2(points[:, 1], points[:, 0])
        return 1.0 - radii * np.cos(self.omega.distance(angles))

    def slack(self, points):
        """rho * (1 - |x / rho| cos(dist(angle of x, Omega)))."""
        return self.rho * self._unit_slack(np.asarray(points, dtype=float).reshape(-1, 2) / self.rho)

    def contains_many(self, points, tolerance=regions.VERIFY_TOLERANCE):
        """Membership of x in rho * Q_inf, decided as membership of x / rho in Q_inf."""
        return self._unit_slack(np.asarray(points, dtype=float).reshape(-1, 2) / self.rho) >= -tolerance

    def contains(self, x, tolerance=regions.VERIFY_TOLERANCE):
        return bool(self.contains_many(x, tolerance)[0])

    def radius(self, angles):
        """Distance from the origin to the boundary along each angle."""
        return self.rho / np.cos(self.omega.distance(angles))

    def boundary_points(self, count):
        angles = np.linspace(0.0, TWO_PI, count, endpoint=False)
        return np.vstack([self.radius(angles)[:, None] * np.column_stack([np.cos(angles), np.sin(angles)]), self.corners()])

    def random_points(self, rng, count):
        angles = rng.uniform(0.0, TWO_PI, size=count)
        radii = self.radius(angles) * np.sqrt(rng.uniform(size=count))
        return radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])

    def _deepest_on_line(self, base, along):
        """Return the point of the line base + s * along with the largest slack, None when it misses the region.

        The slack is concave along a line, so a ternary search finds its maximum.
        """
        low, high = -(self.scale + np.linalg.norm(base)), self.scale + np.linalg.norm(base)
        for _ in range(100):
            left, right = low + (high - low) / 3.0, high - (high - low) / 3.0
            if self.slack(base + left * along)[0] < self.slack(base + right * along)[0]:
                low = left
            else:
                high = right
        point = base + (low + high) / 2.0 * along
        return point if self.slack(point)[0] >= 0 else None

    def critical_points(self, polytope):
        """Notch corners and the points where Voronoi bisectors cross the boundary."""
        points = [self.corners()]
        for v_i, v_j in itertools.combinations(polytope.vertices, 2):
            normal = v_j - v_i
            offset = (v_j.dot(v_j) - v_i.dot(v_i)) / 2.0
            base = normal * offset / normal.dot(normal)
            along = np.array([-normal[1], normal[0]]) / np.linalg.norm(normal)
            if self.slack(base)[0] < 0:
                # The line may still clip a notch corner beyond the circle of radius rho
                base = self._deepest_on_line(base, along)
                if base is None:
                    continue
            # The bisector leaves the region once on each side of base
            for sign in (1.0, -1.0):
                low, high = 0.0, 4.0 * self.scale + np.linalg.norm(base)
                for _ in range(60):
                    middle = (low + high) / 2.0
                    if self.slack(base + sign * middle * along)[0] >= 0:
                        low = middle
                    else:
                        high = middle
                points.append((base + sign * low * along)[None, :])
        return np.vstack(points)

    def to_text(self):
        """Boundary as 'arc cx cy r a0 a1' and 'seg x0 y0 x1 y1' lines in angular order."""
        return u''.join(element.to_text() for element in self.boundary)


def build_q_infinity(omega, rho=1.0):
    """Return rho * Q_inf for omega."""
    region = ConvexRegion2D(omega, rho)
    log.debug("Built %r with %d boundary elements", region, len(region.boundary))
    return region


def find_rho(polytopes, omega, boundary_samples=regions.DEFAULT_BOUNDARY_SAMPLES,
             gamma_samples=regions.DEFAULT_GAMMA_SAMPLES, rng_factory=None, workers=None):
    """Double rho from the largest diameter until rho * Q_inf is invariant for every polytope.

    :param rng_factory: callable returning a fresh numpy Generator per check.
    :return tuple: (rho, region, verdicts) with one verdict per polytope.
    """
    rng_factory = rng_factory or (lambda: np.random.default_rng(0))
    diameter = max(polytope.diameter() for polytope in polytopes)
    rho = diameter
    while rho <= RHO_CAP_FACTOR * diameter * (1 + 1e-12):
        region = build_q_infinity(omega, rho)
        verdicts = [regions.verify_invariance(region, polytope, boundary_samples=boundary_samples,
                                              gamma_samples=gamma_samples, rng=rng_factory(), workers=workers)
                    for polytope in polytopes]
        if all(verdict.passed for verdict in verdicts):
            log.info("rho=%g makes %r invariant for %d polytopes", rho, region, len(polytopes))
            return rho, region, [_with_rho(verdict, rho) for verdict in verdicts]
        log.debug("rho=%g fails: margins %s", rho, [verdict.margin for verdict in verdicts])
        rho *= 2

    raise RegionError("No invariant rho * Q_inf with rho <= %g * %g" % (RHO_CAP_FACTOR, diameter))


def _with_rho(verdict, rho):
    return regions.RegionVerdict(passed=verdict.passed, margin=verdict.margin, samples=verdict.samples,
                                 method=verdict.method, witness=verdict.witness, rho=rho)


def shared_region(polytopes, rho=None, theta=None, **kwargs):
    """Return one region invariant for the dynamics of every polytope.

    Omega is built from the marked directions of all polytopes together. With
    rho given the region is only verified at that scale.

    :return tuple: (region, verdicts) with one verdict per polytope.
    """
    polytopes = list(polytopes)
    omega = build_omega(polytopes, theta)
    if rho is None:
        _, region, verdicts = find_rho(polytopes, omega, **kwargs)
        return region, verdicts

    region = build_q_infinity(omega, rho)
    rng_factory = kwargs.pop('rng_factory', None) or (lambda: np.random.default_rng(0))
    verdicts = [_with_rho(regions.verify_invariance(region, polytope, rng=rng_factory(), **kwargs), rho)
                for polytope in polytopes]
    return region, verdicts
