"""Polytopes as indexed vertex sets and nearest-vertex (Voronoi) queries.

Vertex order is construction order and is significant: among vertices at
exactly the same distance the smallest index wins.
"""
import io
import logging
import itertools

import numpy as np
from scipy.spatial import ConvexHull, QhullError

log = logging.getLogger(__name__)

# Relative tolerance deciding that two squared distances are tied
TIE_TOLERANCE = 1e-12


class PolytopeError(ValueError):
    """Raised on invalid vertex sets or unknown presets."""


class DimensionError(PolytopeError):
    """Raised when a point does not live in the polytope's ambient space."""


class Polytope(object):
    """Convex hull of an ordered list of vertices in R^N.

    Usage example:

    >>> square = Polytope([(0, 0), (1, 0), (1, 1), (0, 1)], name='square')
    >>> square.nearest_vertex((0.5, 0.5))
    0
    """

    def __init__(self, vertices, name=None):
        """Initialize the polytope.

        :param vertices: sequence of M >= 2 distinct points sharing a dimension.
        :param str name: optional display name.
        """
        vertices = np.array(vertices, dtype=float)
        if vertices.ndim == 1:
            vertices = vertices.reshape(-1, 1)

        if vertices.ndim != 2 or len(vertices) < 2:
            raise PolytopeError("A polytope needs at least 2 vertices, got: %r" % (vertices.tolist(),))

        if not np.all(np.isfinite(vertices)):
            raise PolytopeError("Vertices must be finite: %r" % (vertices.tolist(),))

        if len(np.unique(vertices, axis=0)) != len(vertices):
            raise PolytopeError("Vertices must be distinct: %r" % (vertices.tolist(),))

        vertices.setflags(write=False)
        self.vertices = vertices
        self.name = name or 'polytope'
        self._hull_equations = None
        self._hull_computed = False

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return "Polytope(%s, M=%d, N=%d)" % (self.name, len(self), self.dim)

    @property
    def dim(self):
        """Ambient dimension N."""
        return self.vertices.shape[1]

    @property
    def centroid(self):
        """Mean of the vertices."""
        return self.vertices.mean(axis=0)

    def check_point(self, x):
        """Return x as a float vector, raising DimensionError on a mismatch."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise DimensionError("Point of dimension %d given to %r" % (x.shape[0], self))
        return x

    def nearest_vertex(self, x):
        """Return the index of the vertex closest to x, smallest index among ties.

        :param x: point of dimension N.
        :return int: vertex id.
        """
        x = self.check_point(x)
        squared = np.sum((self.vertices - x) ** 2, axis=1)
        return first_tied(squared)

    def nearest_vertices(self, points):
        """Vectorized nearest_vertex over an (S, N) array of points."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionError("Points of shape %s given to %r" % (points.shape, self))

        squared = np.sum((points[:, None, :] - self.vertices[None, :, :]) ** 2, axis=2)
        smallest = squared.min(axis=1, keepdims=True)
        tolerance = TIE_TOLERANCE * (1.0 + squared.max(axis=1, keepdims=True))
        return np.argmax(squared <= smallest + tolerance, axis=1)

    def voronoi_halfspaces(self, i):
        """Return the bisector half-spaces whose intersection is R_{v_i}.

        Each half-space is a pair (normal, offset) meaning normal.x <= offset.

        :param int i: vertex id.
        :return list: one (normal, offset) pair per other vertex.
        """
        if not 0 <= i < len(self):
            raise PolytopeError("Invalid vertex id %d for %r" % (i, self))

        v_i = self.vertices[i]
        halfspaces = []
        for j, v_j in enumerate(self.vertices):
            if j == i:
                continue
            halfspaces.append((v_j - v_i, (v_j.dot(v_j) - v_i.dot(v_i)) / 2.0))
        return halfspaces

    def voronoi_matrix(self, i):
        """Return R_{v_i} as a stacked (A, b) pair with A x <= b."""
        halfspaces = self.voronoi_halfspaces(i)
        return np.array([normal for normal, _ in halfspaces]), np.array([offset for _, offset in halfspaces])

    def diameter(self):
        """Largest distance between two vertices."""
        differences = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt(np.max(np.sum(differences ** 2, axis=2))))

    def hull_equations(self):
        """Return the facet inequalities (A, b) of P with A x <= b, or None.

        The representation comes from qhull and exists only for full-dimensional
        polytopes; for N = 1 it is the interval [min, max].
        """
        if not self._hull_computed:
            self._hull_computed = True
            if self.dim == 1:
                low, high = self.vertices.min(), self.vertices.max()
                self._hull_equations = (np.array([[-1.0], [1.0]]), np.array([-low, high]))
            else:
                try:
                    hull = ConvexHull(self.vertices)
                    self._hull_equations = (hull.equations[:, :-1], -hull.equations[:, -1])
                except QhullError:
                    log.debug("%r is not full dimensional, no half-space representation", self)
        return self._hull_equations

    def contains(self, x, tolerance=1e-9):
        """Return True/False for hull membership, None when it cannot be decided."""
        equations = self.hull_equations()
        if equations is None:
            return None
        normals, offsets = equations
        return bool(np.all(normals.dot(self.check_point(x)) <= offsets + tolerance))

    def extreme_certificate(self, rng=None, directions=256):
        """Return ids of vertices for which no extremality certificate was found.

        A certificate is a direction in which the vertex is the unique maximizer,
        which proves it lies outside the hull of the others. The direction from the
        centroid is tried first, then random directions.

        :param rng: numpy Generator used for the random directions.
        :param int directions: number of random directions.
        :return list: uncertified vertex ids (empty for a valid vertex set).
        """
        rng = rng if rng is not None else np.random.default_rng(0)
        candidates = np.vstack([self.vertices - self.centroid, rng.normal(size=(directions, self.dim))])
        scores = candidates.dot(self.vertices.T)
        certified = set()
        for row in scores:
            best = np.argmax(row)
            if np.sum(row >= row[best] - 1e-12) == 1:
                certified.add(int(best))

        missing = [i for i in range(len(self)) if i not in certified]
        if missing:
            log.warning("No extremality certificate for vertices %s of %r", missing, self)
        return missing

    def shrunk(self, margin):
        """Return P shrunk toward its centroid by the fraction margin in (0, 1)."""
        if not 0 < margin < 1:
            raise PolytopeError("Shrink margin must lie in (0, 1), got %r" % margin)
        centroid = self.centroid
        return Polytope(centroid + (1.0 - margin) * (self.vertices - centroid), name='%s-shrunk' % self.name)

    def random_points(self, rng, count):
        """Return count random points of P as Dirichlet(1,...,1) convex combinations."""
        weights = rng.dirichlet(np.ones(len(self)), size=count)
        return weights.dot(self.vertices)


def first_tied(squared):
    """Return the smallest index whose squared distance ties with the minimum."""
    smallest = squared.min()
    tolerance = TIE_TOLERANCE * (1.0 + squared.max())
    return int(np.argmax(squared <= smallest + tolerance))


def nearest_vertex(polytope, x):
    """Return the id of the vertex of polytope closest to x (smallest index on ties)."""
    return polytope.nearest_vertex(x)


def voronoi_halfspaces(polytope, i):
    """Return the bisector half-spaces bounding the Voronoi region of vertex i."""
    return polytope.voronoi_halfspaces(i)


def diameter(polytope):
    """Return the largest vertex-to-vertex distance."""
    return polytope.diameter()


# Tristimulus vertices K, R, G, B, C, M, Y, W
TRISTIMULUS_LABELS = ('K', 'R', 'G', 'B', 'C', 'M', 'Y', 'W')
TRISTIMULUS_VERTICES = ((5, 6, 6), (30, 18, 7), (11, 22, 13), (9, 7, 20),
                        (21, 27, 72), (33, 18, 22), (65, 76, 14), (84, 87, 105))

# Corner of the RGB unit cube each tristimulus vertex stands for
TRISTIMULUS_CORNERS = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
                       (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1))

# Depth of the two cutting planes x+y-z = s and x+y-z = 1-s of the octahedral preset
OCTA_DEFAULT_CUT = 0.25
OCTA_LABELS = tuple('abcdefghijkl')


def interval():
    """The unit interval [0, 1]."""
    return Polytope([[0.0], [1.0]], name='interval')


def cube(dim):
    """Vertices {0,1}^dim in binary-counter order (first coordinate fastest)."""
    if dim < 1:
        raise PolytopeError("Cube dimension must be positive, got %r" % dim)
    vertices = [tuple(reversed(bits)) for bits in itertools.product((0, 1), repeat=dim)]
    return Polytope(vertices, name='cube%d' % dim)


def simplex(dim):
    """The origin followed by the dim standard basis vectors."""
    if dim < 1:
        raise PolytopeError("Simplex dimension must be positive, got %r" % dim)
    return Polytope(np.vstack([np.zeros(dim), np.eye(dim)]), name='simplex%d' % dim)


def tristimulus():
    """The 8-vertex colour polytope K, R, G, B, C, M, Y, W."""
    return Polytope(TRISTIMULUS_VERTICES, name='tristimulus')


def octa3d(cut=OCTA_DEFAULT_CUT):
    """Unit cube cut by the planes x+y-z = cut and x+y-z = 1-cut.

    Vertices come in the order a..l: abcdef lie on the lower cut, ghijkl on the
    upper one, with dc and hg parallel edges of the top face z = 1.
    """
    if not 0 < cut < 0.5:
        raise PolytopeError("Octahedral cut depth must lie in (0, 0.5), got %r" % cut)
    s = cut
    vertices = [(s, 0, 0), (1, 0, 1 - s), (1, s, 1), (s, 1, 1), (0, 1, 1 - s), (0, s, 0),
                (1 - s, 1, 1), (1, 1 - s, 1), (1, 0, s), (1 - s, 0, 0), (0, 1 - s, 0), (0, 1, s)]
    return Polytope(vertices, name='octa3d')


def regular_polygon(sides, radius=1.0, phase=0.0):
    """Regular polygon with counter-clockwise vertices on a circle."""
    if sides < 3:
        raise PolytopeError("A polygon needs at least 3 sides, got %r" % sides)
    angles = phase + 2 * np.pi * np.arange(sides) / sides
    return Polytope(radius * np.column_stack([np.cos(angles), np.sin(angles)]), name='polygon%d' % sides)


def _dimension_suffix(name, prefix):
    suffix = name[len(prefix):].strip('()')
    try:
        return int(suffix)
    except ValueError:
        raise PolytopeError("Invalid preset dimension in %r" % name)


def preset(name):
    """Return a named polytope.

    Supported names: interval, square, triangle, cube<N> / cube(N),
    simplex<N> / simplex(N), tristimulus, octa3d, polygon<N> / polygon(N)
    (regular, on the unit circle).
    """
    name = name.strip().lower()
    if name == 'interval':
        return interval()
    if name == 'square':
        return Polytope(cube(2).vertices[[0, 1, 3, 2]], name='square')
    if name == 'triangle':
        return simplex(2)
    if name == 'tristimulus':
        return tristimulus()
    if name == 'octa3d':
        return octa3d()
    if name.startswith('cube'):
        return cube(_dimension_suffix(name, 'cube'))
    if name.startswith('simplex'):
        return simplex(_dimension_suffix(name, 'simplex'))
    if name.startswith('polygon'):
        return regular_polygon(_dimension_suffix(name, 'polygon'))
    raise PolytopeError("Unknown polytope preset: %r" % name)


def parse_polytope(text, name=None):
    """Parse the plain-text literal format: one vertex per line, '#' comments."""
    vertices = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            vertices.append([float(value) for value in line.split()])
        except ValueError:
            raise PolytopeError("Invalid vertex on line %d: %r" % (line_number, line))

    if len({len(vertex) for vertex in vertices}) > 1:
        raise PolytopeError("Vertices of mixed dimension in %s" % (name or 'polytope literal'))
    return Polytope(vertices, name=name)


def load_polytope(path):
    """Load a polytope literal file."""
    log.debug("Loading polytope from %s", path)
    with io.open(path, 'r', encoding='utf-8') as polytope_file:
        return parse_polytope(polytope_file.read(), name=path)


def resolve(spec):
    """Return the polytope named by spec: a preset name or a literal file path."""
    try:
        return preset(spec)
    except PolytopeError:
        pass

    try:
        return load_polytope(spec)
    except (IOError, OSError):
        raise PolytopeError("%r is neither a preset nor a readable polytope file" % spec)
