"""Digital halftoning by simple and general error diffusion.

Pixels are processed in lexicographic order, pixel (i, j) of an image with
N columns getting index k = i * N + j. Simple diffusion carries the error of
pixel k-1 into pixel k, across line breaks too. General diffusion adds a
weighted sum of earlier errors taken from a neighborhood scheme laid out as

    p12 p11 p10 p9  p8        (row i-2, columns j-2 .. j+2)
    p7  p6  p5  p4  p3        (row i-1, columns j-2 .. j+2)
    p2  p1  *                 (row i)
"""
import io
import logging
from fractions import Fraction

import numpy as np
from dataclasses import dataclass

from convex_dynamics import dynamics
from convex_dynamics import polytope as geometry
from convex_dynamics.polytope import first_tied

log = logging.getLogger(__name__)

WEIGHT_SUM_TOLERANCE = 1e-9

# (row offset, column offset) of p1 .. p12; the neighbor of (i, j) is (i - row, j + col)
TABLE_LAYOUT = ((0, -1), (0, -2),
                (1, 2), (1, 1), (1, 0), (1, -1), (1, -2),
                (2, 2), (2, 1), (2, 0), (2, -1), (2, -2))


class SchemeError(ValueError):
    """Raised on invalid neighborhood schemes, rasters or windows."""


class Raster(object):
    """Row-major grid of C-channel input samples gamma(i, j)."""

    def __init__(self, samples):
        samples = np.array(samples, dtype=float)
        if samples.ndim == 2:
            samples = samples[:, :, None]

        if samples.ndim != 3 or samples.shape[0] == 0 or samples.shape[1] == 0:
            raise SchemeError("A raster needs shape (rows, cols[, channels]), got %s" % (samples.shape,))
        if not np.all(np.isfinite(samples)):
            raise SchemeError("Raster samples must be finite")

        samples.setflags(write=False)
        self.samples = samples

    def __repr__(self):
        return "Raster(%dx%d, C=%d)" % (self.height, self.width, self.channels)

    @property
    def height(self):
        return self.samples.shape[0]

    @property
    def width(self):
        return self.samples.shape[1]

    @property
    def channels(self):
        return self.samples.shape[2]

    def flat(self):
        """Samples in pixel-index order as a (rows * cols, C) array."""
        return self.samples.reshape(-1, self.channels)

    def mean(self):
        return self.flat().mean(axis=0)


class OutputRaster(object):
    """Grid of vertex ids V(i, j) chosen for a polytope."""

    def __init__(self, vids, polytope):
        vids = np.array(vids, dtype=int)
        if vids.ndim != 2:
            raise SchemeError("Output ids need shape (rows, cols), got %s" % (vids.shape,))
        if vids.size and (vids.min() < 0 or vids.max() >= len(polytope)):
            raise SchemeError("Output ids out of range for %r" % polytope)

        vids.setflags(write=False)
        self.vids = vids
        self.polytope = polytope

    @property
    def shape(self):
        return self.vids.shape

    def vertices(self):
        """Output vertex coordinates as a (rows, cols, C) array."""
        return self.polytope.vertices[self.vids]

    def mean(self):
        return self.vertices().reshape(-1, self.polytope.dim).mean(axis=0)


@dataclass(frozen=True)
class Tap(object):
    row_offset: int
    col_offset: int
    weight: float


class NeighborhoodScheme(object):
    """Probability weights over earlier pixels.

    Usage example:

    >>> scheme = NeighborhoodScheme([(0, -1, 0.5), (1, 0, 0.5)], name='half')
    >>> scheme.lags(width=10).tolist()
    [1, 10]
    """

    def __init__(self, taps, name=None):
        taps = [tap if isinstance(tap, Tap) else Tap(int(tap[0]), int(tap[1]), float(tap[2])) for tap in taps]
        if not taps:
            raise SchemeError("A scheme needs at least one tap")

        offsets = set()
        for tap in taps:
            if tap.row_offset < 0 or (tap.row_offset == 0 and tap.col_offset >= 0):
                raise SchemeError("Tap (%d, %d) does not precede the current pixel" % (tap.row_offset, tap.col_offset))
            if tap.weight < 0:
                raise SchemeError("Negative weight %r at (%d, %d)" % (tap.weight, tap.row_offset, tap.col_offset))
            if (tap.row_offset, tap.col_offset) in offsets:
                raise SchemeError("Duplicate tap (%d, %d)" % (tap.row_offset, tap.col_offset))
            offsets.add((tap.row_offset, tap.col_offset))

        total = sum(tap.weight for tap in taps)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise SchemeError("Scheme weights sum to %r, expected 1" % total)

        self.taps = tuple(taps)
        self.name = name or 'custom'

    def __len__(self):
        return len(self.taps)

    def __repr__(self):
        return "NeighborhoodScheme(%s, %d taps)" % (self.name, len(self))

    @property
    def depth(self):
        """Number of earlier rows the scheme reaches into."""
        return max(tap.row_offset for tap in self.taps)

    @property
    def weights(self):
        return np.array([tap.weight for tap in self.taps])

    def check_width(self, width):
        reach = max(abs(tap.col_offset) for tap in self.taps)
        if reach >= width:
            raise SchemeError("%r reaches %d columns, image is %d wide" % (self, reach, width))

    def lags(self, width):
        """Linear history lag of every tap: neighbor index = k - lag."""
        self.check_width(width)
        return np.array([tap.row_offset * width - tap.col_offset for tap in self.taps])

    def border_table(self, width):
        """Renormalized weights per (clipped row, column).

        Row i uses entry min(i, depth). Taps whose neighbor falls outside the
        image are dropped and the rest rescaled to sum 1; where no in-image
        mass is left the fallback flag is set.

        :return tuple: (weights of shape (depth + 1, width, taps), fallback of shape (depth + 1, width)).
        """
        self.check_width(width)
        rows = np.array([tap.row_offset for tap in self.taps])
        cols = np.array([tap.col_offset for tap in self.taps])
        row_classes = np.arange(self.depth + 1)[:, None, None]
        columns = np.arange(width)[None, :, None] + cols[None, None, :]
        valid = (row_classes >= rows[None, None, :]) & (columns >= 0) & (columns < width)

        masked = np.where(valid, self.weights[None, None, :], 0.0)
        mass = masked.sum(axis=2)
        fallback = mass <= 0
        table = masked / np.where(fallback, 1.0, mass)[:, :, None]
        return table, fallback


def scheme_from_table(weights, name=None):
    """Build a scheme from the twelve weights p1 .. p12 (zeros dropped)."""
    if len(weights) != len(TABLE_LAYOUT):
        raise SchemeError("Expected %d table weights, got %d" % (len(TABLE_LAYOUT), len(weights)))
    return NeighborhoodScheme([(row, col, float(weight)) for (row, col), weight in zip(TABLE_LAYOUT, weights) if weight],
                              name=name)


def simple_scheme():
    """Single tap on the previous pixel of the row; column 0 falls back to pixel k-1."""
    return NeighborhoodScheme([(0, -1, 1.0)], name='simple')


def _fractions(numerators, denominator):
    return [Fraction(numerator, denominator) for numerator in numerators]


SCHEMES = {
    'simple': simple_scheme,
    'fs3': lambda: scheme_from_table(_fractions([7, 0, 0, 0, 5, 4, 0, 0, 0, 0, 0, 0], 16), name='fs3'),
    'uniform12': lambda: scheme_from_table(_fractions([1] * 12, 12), name='uniform12'),
    'jjn12': lambda: scheme_from_table(_fractions([7, 5, 3, 5, 7, 5, 3, 1, 3, 5, 3, 1], 48), name='jjn12'),
}


def parse_scheme(text, name=None):
    """Parse lines 'row_offset col_offset weight' with '#' comments.

    Weights may be decimals or fractions such as 7/16.
    """
    taps = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise SchemeError("Line %d: expected 'row_offset col_offset weight', got %r" % (line_number, line))
        try:
            taps.append((int(fields[0]), int(fields[1]), float(Fraction(fields[2]))))
        except ValueError:
            raise SchemeError("Line %d: invalid tap %r" % (line_number, line))
    return NeighborhoodScheme(taps, name=name)


def load_scheme(path):
    with io.open(path, 'r', encoding='utf-8') as scheme_file:
        return parse_scheme(scheme_file.read(), name=path)


def resolve_scheme(spec):
    """Return the named scheme, or the scheme read from the file spec."""
    if isinstance(spec, NeighborhoodScheme):
        return spec
    if spec in SCHEMES:
        return SCHEMES[spec]()
    try:
        return load_scheme(spec)
    except (IOError, OSError):
        raise SchemeError("%r is neither a known scheme (%s) nor a readable scheme file" % (spec, ', '.join(sorted(SCHEMES))))


def _check_channels(img, polytope):
    if img.channels != polytope.dim:
        raise SchemeError("%r has %d channels, %r needs %d" % (img, img.channels, polytope, polytope.dim))


def halftone_simple(img, polytope, strict=False):
    """Simple error diffusion.

    :param Raster img: inputs gamma(i, j).
    :param Polytope polytope: output alphabet.
    :return tuple: (OutputRaster, error field of shape (rows, cols, C)).
    """
    _check_channels(img, polytope)
    trace = dynamics.run_orbit(polytope, img.flat(), strict=strict)
    shape = (img.height, img.width)
    log.debug("Simple diffusion of %r on %r", img, polytope)
    return OutputRaster(trace.vids.reshape(shape), polytope), trace.epss.reshape(shape + (polytope.dim,))


def halftone_general(img, polytope, scheme, strict=False):
    """General error diffusion with a neighborhood scheme.

    The modified input gamma(k) + sum_t w_t eps(k - lag_t) is quantized greedily.
    Weights are renormalized near borders; a pixel with no in-image neighbor
    uses the error of pixel k-1 as in simple diffusion.

    :param Raster img: inputs gamma(i, j).
    :param Polytope polytope: output alphabet.
    :param scheme: NeighborhoodScheme, scheme name or scheme file.
    :return tuple: (OutputRaster, error field of shape (rows, cols, C)).
    """
    _check_channels(img, polytope)
    scheme = resolve_scheme(scheme)
    width = img.width
    lags = scheme.lags(width)
    table, fallback = scheme.border_table(width)
    depth = scheme.depth
    # Taps with an in-image neighbor per (clipped row, column)
    in_image = [[np.nonzero(weights)[0] for weights in row] for row in table]

    gammas = img.flat()
    dynamics.check_inputs(polytope, gammas, strict)
    vertices = polytope.vertices
    count = len(gammas)
    errors = np.zeros((count, polytope.dim))
    vids = np.zeros(count, dtype=int)
    fallbacks = 0
    for k in range(count):
        i, j = divmod(k, width)
        row = i if i < depth else depth
        if fallback[row, j]:
            fallbacks += 1
            x = gammas[k] + errors[k - 1] if k else gammas[k].copy()
        else:
            taps = in_image[row][j]
            x = gammas[k] + table[row, j, taps].dot(errors[k - lags[taps]])
        vid = first_tied(np.sum((vertices - x) ** 2, axis=1))
        vids[k] = vid
        errors[k] = x - vertices[vid]

    log.debug("General diffusion of %r with %r: %d pixels used the previous-pixel fallback", img, scheme, fallbacks)
    shape = (img.height, img.width)
    return OutputRaster(vids.reshape(shape), polytope), errors.reshape(shape + (polytope.dim,))


def halftone(img, polytope, scheme='simple', strict=False):
    """Dispatch to simple or general diffusion by scheme."""
    if scheme == 'simple':
        return halftone_simple(img, polytope, strict=strict)
    return halftone_general(img, polytope, scheme, strict=strict)


def _residuals(img, out, polytope):
    return img.samples - polytope.vertices[out.vids]


def local_error(img, out, polytope, top, n):
    """Return E(R), the sum of gamma(i, j) - V(i, j) over the n x n window at top."""
    i, j = top
    if n < 1 or i < 0 or j < 0 or i + n > img.height or j + n > img.width:
        raise SchemeError("Window %dx%d at %r does not fit a %dx%d image" % (n, n, top, img.height, img.width))
    return _residuals(img, out, polytope)[i:i + n, j:j + n].sum(axis=(0, 1))


def average_fidelity(img, out):
    """Return ||mean input - mean output vertex|| over the whole image."""
    return float(np.linalg.norm(img.mean() - out.mean()))


@dataclass(frozen=True)
class ScalingResult(object):
    """Largest ||E(R)|| per window size and the log-log fit through them.

    slope and stderr are None when fewer than two maxima are positive.
    """
    points: tuple
    slope: float = None
    stderr: float = None
    anchors: int = 0

    @property
    def degenerate(self):
        return self.slope is None

    def excludes(self, slope, sigmas=3.0):
        """Return True when the fitted slope lies at least sigmas standard errors below slope."""
        if self.degenerate or self.stderr is None or not np.isfinite(self.stderr):
            return False
        return slope - self.slope >= sigmas * self.stderr

    def to_dict(self):
        return {'points': [[n, value] for n, value in self.points], 'slope': self.slope,
                'stderr': self.stderr, 'anchors': self.anchors, 'degenerate': self.degenerate}


def scaling_experiment(img, polytope, scheme, sizes, anchors=64, rng=None, output=None):
    """Measure max ||E(R)|| over sampled n x n windows for every n in sizes.

    :param scheme: scheme used to halftone img unless output is given.
    :param sizes: window sizes, at least two distinct ones.
    :param int anchors: random window positions per size.
    :param rng: numpy Generator for the anchors.
    :param OutputRaster output: precomputed halftone of img.
    :return ScalingResult: maxima and the least-squares slope of log max vs log n.
    """
    sizes = sorted(set(int(n) for n in sizes))
    if len(sizes) < 2:
        raise SchemeError("A scaling experiment needs at least 2 window sizes, got %r" % (sizes,))
    if sizes[0] < 1 or sizes[-1] > min(img.height, img.width):
        raise SchemeError("Window sizes %r do not fit a %dx%d image" % (sizes, img.height, img.width))

    rng = rng if rng is not None else np.random.default_rng(0)
    if output is None:
        output, _ = halftone(img, polytope, scheme)

    # Summed-area table with a zero first row and column
    areas = np.zeros((img.height + 1, img.width + 1, polytope.dim))
    areas[1:, 1:] = np.cumsum(np.cumsum(_residuals(img, output, polytope), axis=0), axis=1)

    points = []
    for n in sizes:
        tops = rng.integers(0, img.height - n + 1, size=anchors)
        lefts = rng.integers(0, img.width - n + 1, size=anchors)
        sums = areas[tops + n, lefts + n] - areas[tops, lefts + n] - areas[tops + n, lefts] + areas[tops, lefts]
        points.append((n, float(np.max(np.linalg.norm(sums, axis=1)))))

    fitted = [(n, value) for n, value in points if value > 1e-12]
    if len(fitted) < 2:
        log.warning("Degenerate scaling experiment: %d positive maxima in %r", len(fitted), points)
        return ScalingResult(points=tuple(points), anchors=anchors)

    logs_n = np.log([n for n, _ in fitted])
    logs_e = np.log([value for _, value in fitted])
    stderr = None
    if len(fitted) > 3:
        coefficients, covariance = np.polyfit(logs_n, logs_e, 1, cov=True)
        stderr = float(np.sqrt(covariance[0, 0]))
    else:
        coefficients = np.polyfit(logs_n, logs_e, 1)

    log.info("E(R) scaling over sizes %s: slope %.3f", sizes, coefficients[0])
    return ScalingResult(points=tuple(points), slope=float(coefficients[0]), stderr=stderr, anchors=anchors)


def raster_from_pixels(pixels, polytope):
    """Map 8-bit pixels to inputs of polytope.

    Samples become value / 255, except for the tristimulus polytope where RGB
    is mapped by trilinear interpolation of its vertices.
    """
    pixels = np.asarray(pixels, dtype=float) / 255.0
    if pixels.ndim == 2:
        pixels = pixels[:, :, None]
    if pixels.shape[2] != polytope.dim:
        raise SchemeError("Image has %d channels, %r needs %d" % (pixels.shape[2], polytope, polytope.dim))

    if is_tristimulus(polytope):
        corners = np.array(geometry.TRISTIMULUS_CORNERS, dtype=float)
        # weight of corner c is prod_a (c_a ? rgb_a : 1 - rgb_a)
        weights = np.prod(np.where(corners[None, None, :, :] > 0, pixels[:, :, None, :], 1.0 - pixels[:, :, None, :]), axis=3)
        return Raster(weights.dot(polytope.vertices))
    return Raster(pixels)


def is_tristimulus(polytope):
    return polytope.vertices.shape == (8, 3) and np.array_equal(polytope.vertices, np.array(geometry.TRISTIMULUS_VERTICES, dtype=float))


def render(out):
    """Render output vertices as 8-bit pixels.

    Tristimulus vertices render as their RGB cube corners; other vertices are
    clamped to [0, 1] and rescaled.
    """
    polytope = out.polytope
    palette = np.array(geometry.TRISTIMULUS_CORNERS, dtype=float) if is_tristimulus(polytope) else polytope.vertices
    pixels = np.rint(np.clip(palette, 0.0, 1.0) * 255.0).astype(np.uint8)[out.vids]
    return pixels[:, :, 0] if pixels.shape[2] == 1 else pixels
