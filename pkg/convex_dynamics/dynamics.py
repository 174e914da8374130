"""Greedy vertex-quantization dynamics.

The map phi_gamma(x) = x + gamma - v(x) and the cumulative error recursion

    eps(k) = eps(k-1) + gamma(k) - V(k),   V(k) = v(eps(k-1) + gamma(k))

are two views of the same orbit: x(k) = eps(k-1) + gamma(k) and
eps(k) = x(k) - v(x(k)).
"""
import io
import csv
import logging

import numpy as np
from dataclasses import dataclass

from convex_dynamics import polytope as geometry
from convex_dynamics.polytope import first_tied

log = logging.getLogger(__name__)

WEIGHT_SUM_TOLERANCE = 1e-12

NORMS = {
    'l1': lambda vectors: np.sum(np.abs(vectors), axis=-1),
    'l2': lambda vectors: np.sqrt(np.sum(vectors ** 2, axis=-1)),
    'linf': lambda vectors: np.max(np.abs(vectors), axis=-1),
}


class DynamicsError(ValueError):
    """Raised on invalid dynamics inputs."""


class WeightVector(object):
    """Probability vector weighting the m most recent errors (most recent first)."""

    def __init__(self, weights):
        weights = np.array(weights, dtype=float).reshape(-1)
        if len(weights) == 0:
            raise DynamicsError("A weight vector needs at least one entry")

        if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise DynamicsError("Weights must be nonnegative and sum to 1, got %r" % (weights.tolist(),))

        weights.setflags(write=False)
        self.w = weights

    def __len__(self):
        return len(self.w)

    def __repr__(self):
        return "WeightVector(%s)" % (self.w.tolist(),)


@dataclass(frozen=True, eq=False)
class Trace(object):
    """Orbit history of equal-length arrays.

    gammas[k], xs[k], vids[k], epss[k] are gamma(k), x(k), V(k) and eps(k);
    eps_init is the seed error eps(-1).
    """
    gammas: np.ndarray
    xs: np.ndarray
    vids: np.ndarray
    epss: np.ndarray
    eps_init: np.ndarray

    def __len__(self):
        return len(self.vids)

    def error_norms(self, norm='l2'):
        """Return ||eps(k)|| for every step in the requested norm."""
        return NORMS[norm](self.epss)

    def to_csv(self, path):
        """Write the trace as CSV: k, gamma_*, vid, eps_*, eps_norm."""
        dim = self.eps_init.shape[0]
        header = (['k'] + ['gamma_%d' % i for i in range(dim)] + ['vid'] +
                  ['eps_%d' % i for i in range(dim)] + ['eps_norm'])
        norms = self.error_norms()
        with io.open(path, 'w', newline='', encoding='utf-8') as trace_file:
            writer = csv.writer(trace_file)
            writer.writerow(header)
            for k in range(len(self)):
                writer.writerow([k] + [repr(value) for value in self.gammas[k]] + [int(self.vids[k])] +
                                [repr(value) for value in self.epss[k]] + [repr(norms[k])])
        log.debug("Wrote %d trace rows to %s", len(self), path)


def _as_vector(polytope, value):
    return polytope.check_point(value)


def _check_gamma(polytope, gamma, strict):
    if strict and polytope.contains(gamma) is False:
        raise DynamicsError("Input %r lies outside %r" % (gamma.tolist(), polytope))


def phi(polytope, gamma, x, strict=False):
    """Return phi_gamma(x) = x + gamma - v(x).

    :param Polytope polytope: quantization alphabet.
    :param gamma: input point, expected in P (checked in strict mode).
    :param x: point of R^N.
    """
    gamma = _as_vector(polytope, gamma)
    x = _as_vector(polytope, x)
    _check_gamma(polytope, gamma, strict)
    return x + gamma - polytope.vertices[polytope.nearest_vertex(x)]


def greedy_step(polytope, eps, gamma, strict=False):
    """Return (eps + gamma - v_V, V) with V the vertex nearest to eps + gamma."""
    gamma = _as_vector(polytope, gamma)
    _check_gamma(polytope, gamma, strict)
    x = _as_vector(polytope, eps) + gamma
    vid = polytope.nearest_vertex(x)
    return x - polytope.vertices[vid], vid


def general_step(polytope, history, weights, gamma, strict=False):
    """One step of general error diffusion.

    The modified input x = sum_i w_i history[i-1] + gamma is quantized greedily.

    :param history: the m most recent errors, history[0] the most recent.
    :param WeightVector weights: probability vector of length m.
    :return tuple: (x - v_V, V).
    """
    if not isinstance(weights, WeightVector):
        weights = WeightVector(weights)

    history = np.array(history, dtype=float).reshape(len(history), -1)
    if len(history) != len(weights):
        raise DynamicsError("History length %d does not match %d weights" % (len(history), len(weights)))
    if history.shape[1] != polytope.dim:
        raise geometry.DimensionError("History of dimension %d given to %r" % (history.shape[1], polytope))

    gamma = _as_vector(polytope, gamma)
    _check_gamma(polytope, gamma, strict)
    x = weights.w.dot(history) + gamma
    vid = polytope.nearest_vertex(x)
    return x - polytope.vertices[vid], vid


def input_array(polytope, gammas):
    gammas = np.array(gammas, dtype=float)
    if gammas.size == 0:
        return np.zeros((0, polytope.dim))
    gammas = gammas.reshape(len(gammas), -1)
    if gammas.shape[1] != polytope.dim:
        raise geometry.DimensionError("Inputs of dimension %d given to %r" % (gammas.shape[1], polytope))
    return gammas


def check_inputs(polytope, gammas, strict):
    """Raise DynamicsError in strict mode when an input row lies outside P."""
    if not strict or len(gammas) == 0:
        return
    equations = polytope.hull_equations()
    if equations is None:
        log.debug("Skipping input membership check for %r", polytope)
        return
    normals, offsets = equations
    outside = np.nonzero(np.any(gammas.dot(normals.T) > offsets + 1e-9, axis=1))[0]
    if len(outside):
        raise DynamicsError("Input %d (%r) lies outside %r" % (outside[0], gammas[outside[0]].tolist(), polytope))


def run_orbit(polytope, gammas, x0=None, eps_init=None, strict=False):
    """Iterate x(k+1) = phi_{gamma(k+1)}(x(k)) and record the full trace.

    :param Polytope polytope: quantization alphabet.
    :param gammas: sequence of inputs gamma(0..n-1).
    :param x0: starting point x(0); defaults to eps_init + gamma(0).
    :param eps_init: seed error eps(-1), zero by default; ignored when x0 is given.
    :param bool strict: check every input lies in P.
    :return Trace: trace of length n (empty for no inputs).
    """
    gammas = input_array(polytope, gammas)
    check_inputs(polytope, gammas, strict)

    dim = polytope.dim
    count = len(gammas)
    xs = np.zeros((count, dim))
    epss = np.zeros((count, dim))
    vids = np.zeros(count, dtype=int)

    if count == 0:
        seed = np.zeros(dim) if eps_init is None else _as_vector(polytope, eps_init)
        return _freeze(gammas, xs, vids, epss, seed)

    if x0 is not None:
        x = _as_vector(polytope, x0)
        seed = x - gammas[0]
    else:
        seed = np.zeros(dim) if eps_init is None else _as_vector(polytope, eps_init)
        x = seed + gammas[0]

    vertices = polytope.vertices
    for k in range(count):
        if k:
            x = epss[k - 1] + gammas[k]
        vid = first_tied(np.sum((vertices - x) ** 2, axis=1))
        xs[k] = x
        vids[k] = vid
        epss[k] = x - vertices[vid]

    log.debug("Ran %d steps on %r, sup error %.6g", count, polytope, np.sqrt(np.max(np.sum(epss ** 2, axis=1))))
    return _freeze(gammas, xs, vids, epss, seed)


def run_general_orbit(polytope, gammas, weights, history=None, strict=False):
    """Iterate general error diffusion along a linear input sequence.

    :param weights: a WeightVector, or a callable k -> WeightVector for
                    step-dependent weights.
    :param history: initial m most recent errors, zeros by default.
    :return Trace: xs holds the modified inputs.
    """
    gammas = input_array(polytope, gammas)
    check_inputs(polytope, gammas, strict)
    weights_at = weights if callable(weights) else (lambda k, fixed=weights: fixed)

    first = weights_at(0)
    depth = len(first)
    buffer = np.zeros((depth, polytope.dim)) if history is None else np.array(history, dtype=float).reshape(depth, -1)

    count = len(gammas)
    xs = np.zeros((count, polytope.dim))
    epss = np.zeros((count, polytope.dim))
    vids = np.zeros(count, dtype=int)
    for k in range(count):
        current = weights_at(k)
        if len(current) != depth:
            raise DynamicsError("Weight vector at step %d has length %d, expected %d" % (k, len(current), depth))

        x = current.w.dot(buffer) + gammas[k]
        vid = first_tied(np.sum((polytope.vertices - x) ** 2, axis=1))
        xs[k] = x
        vids[k] = vid
        epss[k] = x - polytope.vertices[vid]
        buffer = np.roll(buffer, 1, axis=0)
        buffer[0] = epss[k]

    return _freeze(gammas, xs, vids, epss, np.zeros(polytope.dim))


def _freeze(gammas, xs, vids, epss, seed):
    seed = np.array(seed, dtype=float)
    for array in (gammas, xs, vids, epss, seed):
        array.setflags(write=False)
    return Trace(gammas=gammas, xs=xs, vids=vids, epss=epss, eps_init=seed)


def random_gammas(polytope, count, rng):
    """Return count seeded uniform convex combinations of the vertices."""
    return polytope.random_points(rng, count)


def average_gap(trace, n):
    """Return ||mean(gamma(0..n-1)) - mean(V(0..n-1))|| for the trace's polytope outputs.

    The output vertices are recovered as x(k) - eps(k).
    """
    if n <= 0:
        raise DynamicsError("Average gap needs n >= 1, got %r" % n)
    if n > len(trace):
        raise DynamicsError("Average gap over %d steps of a %d step trace" % (n, len(trace)))

    outputs = trace.xs[:n] - trace.epss[:n]
    return float(np.linalg.norm(trace.gammas[:n].mean(axis=0) - outputs.mean(axis=0)))


def average_gaps(trace, ns):
    """Vectorized average_gap for several prefix lengths."""
    ns = np.asarray(ns, dtype=int)
    if np.any(ns <= 0) or np.any(ns > len(trace)):
        raise DynamicsError("Prefix lengths %r out of range for a %d step trace" % (ns.tolist(), len(trace)))

    outputs = trace.xs - trace.epss
    differences = np.cumsum(trace.gammas - outputs, axis=0)[ns - 1]
    return np.linalg.norm(differences, axis=1) / ns


def sup_error(trace, start=0, stop=None, norm='l2'):
    """Return max ||eps(k)|| over steps [start, stop)."""
    if len(trace) == 0:
        raise DynamicsError("Sup error of an empty trace")

    norms = trace.error_norms(norm)[start:stop]
    if len(norms) == 0:
        raise DynamicsError("Empty window [%r, %r) of a %d step trace" % (start, stop, len(trace)))
    return float(norms.max())


def plateau(trace, burn_in, split):
    """Return (sup over [burn_in, split), sup over [burn_in, end)).

    Bounded dynamics reach the sup before the split; the two values then agree.
    """
    return sup_error(trace, burn_in, split), sup_error(trace, burn_in)


def conjugacy_residual(polytope, trace):
    """Return the largest deviation of the trace from eps(k) = x(k) - v(x(k))
    and x(k+1) = phi_{gamma(k+1)}(x(k))."""
    if len(trace) == 0:
        return 0.0

    vids = polytope.nearest_vertices(trace.xs)
    chosen = polytope.vertices[vids]
    residual = np.max(np.abs(trace.epss - (trace.xs - chosen)))
    if len(trace) > 1:
        mapped = trace.xs[:-1] + trace.gammas[1:] - chosen[:-1]
        residual = max(residual, np.max(np.abs(trace.xs[1:] - mapped)))
    return float(residual)


@dataclass(frozen=True, eq=False)
class Schedule(object):
    """Assignment stream of the Chairman Assignment Problem and its running discrepancy."""
    assignments: np.ndarray
    running_sup: dict
    trace: Trace


def schedule(polytope, demands, norms=('l2',), strict=False):
    """Assign a vertex to every demand vector by the greedy rule.

    The greedy choice stays Euclidean; running sup ||eps|| is reported per
    requested norm.

    :param demands: sequence of demand points of P (checked in strict mode).
    :param norms: names from NORMS.
    """
    unknown = [norm for norm in norms if norm not in NORMS]
    if unknown:
        raise DynamicsError("Unknown norms %s, expected some of %s" % (unknown, sorted(NORMS)))

    trace = run_orbit(polytope, demands, strict=strict)
    running = {norm: np.maximum.accumulate(trace.error_norms(norm)) if len(trace) else np.zeros(0)
               for norm in norms}
    return Schedule(assignments=trace.vids, running_sup=running, trace=trace)
