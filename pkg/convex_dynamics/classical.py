"""Constant-input dynamics on [0, 1] and the predator-prey pursuit.

With P = [0, 1] and gamma constant, phi_gamma(x) = x + gamma - v(x) is the
rotation by gamma on the circle R/Z, v(x) = 1 exactly when x > 1/2, and the
interval I = [gamma - 1/2, gamma + 1/2] is invariant and absorbing.
"""
import io
import csv
import logging

import numpy as np
from dataclasses import dataclass

from convex_dynamics import dynamics
from convex_dynamics.polytope import first_tied

log = logging.getLogger(__name__)

GOLDEN = (5 ** 0.5 - 1) / 2
SILVER = 2 ** 0.5 - 1

INTERVAL_TOLERANCE = 1e-12
DEFAULT_MAX_WINDOW = 200


class ModelError(ValueError):
    """Raised on invalid model parameters or when an orbit misses the absorbing interval."""


def _bit(x):
    return 1 if x > 0.5 else 0


def _check_gamma(gamma, strict):
    if strict and not 0.0 <= gamma <= 1.0:
        raise ModelError("Constant input %r lies outside [0, 1]" % gamma)


def absorbing_interval(gamma):
    return gamma - 0.5, gamma + 0.5


@dataclass(frozen=True)
class BitSequence(object):
    bits: np.ndarray
    gamma: float
    x0: float

    def __len__(self):
        return len(self.bits)

    def to_string(self):
        return ''.join('1' if bit else '0' for bit in self.bits)


def sturmian(gamma, x0, n, strict=False):
    """Emit v(x(k)) for k < n along x(k+1) = x(k) + gamma - v(x(k)), x(0) = x0.

    Usage example:

    >>> sturmian(1 / 3.0, 0.0, 9).to_string()
    '001001001'
    """
    if n < 1:
        raise ModelError("Sequence length must be positive, got %r" % n)
    _check_gamma(gamma, strict)

    bits = np.zeros(n, dtype=np.uint8)
    x = float(x0)
    for k in range(n):
        bit = _bit(x)
        bits[k] = bit
        x = x + gamma - bit

    bits.setflags(write=False)
    return BitSequence(bits=bits, gamma=float(gamma), x0=float(x0))


@dataclass(frozen=True)
class SturmianStats(object):
    frequency: float
    balance_defect: int
    max_window: int

    def to_dict(self):
        return {'frequency': self.frequency, 'balance_defect': self.balance_defect, 'max_window': self.max_window}


def sturmian_stats(sequence, max_window=DEFAULT_MAX_WINDOW):
    """Return the frequency of ones and the balance defect over windows of length <= max_window.

    The balance defect is the largest spread, over window lengths L, between
    the most and the fewest ones found in a window of length L.
    """
    bits = np.asarray(sequence.bits if isinstance(sequence, BitSequence) else sequence, dtype=np.int64)
    if len(bits) == 0:
        raise ModelError("Statistics of an empty sequence")

    sums = np.concatenate([[0], np.cumsum(bits)])
    defect = 0
    for length in range(1, min(max_window, len(bits)) + 1):
        counts = sums[length:] - sums[:-length]
        defect = max(defect, int(counts.max() - counts.min()))
    return SturmianStats(frequency=float(sums[-1]) / len(bits), balance_defect=defect, max_window=max_window)


@dataclass(frozen=True)
class AbsorptionReport(object):
    """Entry steps into I per starting point, and whether the orbit stayed for the horizon."""
    gamma: float
    x0s: list
    entries: list
    stayed: list
    horizon: int

    @property
    def passed(self):
        return all(self.stayed)

    def to_dict(self):
        return {'gamma': self.gamma, 'interval': list(absorbing_interval(self.gamma)), 'horizon': self.horizon,
                'x0s': self.x0s, 'entries': self.entries, 'stayed': self.stayed, 'pass': self.passed}


def absorbing_interval_check(gamma, x0s, horizon=1000, max_steps=10 ** 6):
    """Iterate from every x0 until x enters I, then check it stays in I for horizon more steps.

    :param float gamma: constant input in [0, 1].
    :param list x0s: starting points.
    :raise ModelError: when an orbit has not entered I after max_steps.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ModelError("Constant input %r lies outside [0, 1]" % gamma)

    low, high = absorbing_interval(gamma)
    low, high = low - INTERVAL_TOLERANCE, high + INTERVAL_TOLERANCE
    entries, stayed = [], []
    for x0 in x0s:
        x = float(x0)
        steps = 0
        while not low <= x <= high:
            if steps == max_steps:
                raise ModelError("Orbit from %r missed I=[%g, %g] for %d steps, now at %r"
                                 % (x0, gamma - 0.5, gamma + 0.5, max_steps, x))
            x = x + gamma - _bit(x)
            steps += 1

        inside = True
        for _ in range(horizon):
            x = x + gamma - _bit(x)
            if not low <= x <= high:
                inside = False
                log.warning("Orbit from %r left I at %r", x0, x)
                break
        entries.append(steps)
        stayed.append(inside)

    return AbsorptionReport(gamma=float(gamma), x0s=[float(x0) for x0 in x0s], entries=entries,
                            stayed=stayed, horizon=horizon)


def visit_frequency(gamma, x0, n):
    """Fraction of k < n with x(k) in (1/2, gamma + 1/2].

    The left end is open because v(1/2) = 0; on I the visits are exactly the
    steps emitting 1.
    """
    if n < 1:
        raise ModelError("Orbit length must be positive, got %r" % n)
    x = float(x0)
    visits = 0
    for _ in range(n):
        if 0.5 < x <= gamma + 0.5:
            visits += 1
        x = x + gamma - _bit(x)
    return float(visits) / n


def rotation_conjugacy_residual(gamma, points=1001):
    """Largest |phi_gamma(x) - (x + gamma reduced into I)| over a grid of I."""
    low, high = absorbing_interval(gamma)
    xs = np.linspace(low, high, points)
    moved = xs + gamma - (xs > 0.5)
    shifted = xs + gamma
    rotated = np.where(shifted > high, shifted - 1.0, shifted)
    return float(np.max(np.abs(moved - rotated)))


@dataclass(frozen=True, eq=False)
class PursuitTrace(object):
    """Pursuit history: row n - 1 holds p(n), q(n), V(n+1) and eps(n) for n = 1..N.

    p_next[n - 1] is p(n+1), kept to check eps(n) = n (q(n) - p(n+1)).
    """
    ns: np.ndarray
    ps: np.ndarray
    qs: np.ndarray
    p_next: np.ndarray
    vids: np.ndarray
    epss: np.ndarray

    def __len__(self):
        return len(self.ns)

    @property
    def distances(self):
        return np.linalg.norm(self.qs - self.ps, axis=1)

    @property
    def eps_norms(self):
        return np.linalg.norm(self.epss, axis=1)

    def identity_residual(self):
        """Largest gap between eps(n) from the recursion and n (q(n) - p(n+1)) from the positions."""
        positional = self.ns[:, None] * (self.qs - self.p_next)
        return float(np.max(np.abs(positional - self.epss))) if len(self) else 0.0

    def caught_by(self, distance):
        """First n from which ||q - p|| stays below distance, None if never."""
        above = np.nonzero(self.distances >= distance)[0]
        if len(above) == 0:
            return int(self.ns[0]) if len(self) else None
        return None if above[-1] + 1 == len(self) else int(self.ns[above[-1] + 1])

    def to_csv(self, path):
        """Write columns n, p_*, q_*, distance, eps_norm."""
        dim = self.ps.shape[1]
        header = ['n'] + ['p_%d' % i for i in range(dim)] + ['q_%d' % i for i in range(dim)] + ['distance', 'eps_norm']
        distances, norms = self.distances, self.eps_norms
        with io.open(path, 'w', newline='', encoding='utf-8') as trace_file:
            writer = csv.writer(trace_file)
            writer.writerow(header)
            for row in range(len(self)):
                writer.writerow([int(self.ns[row])] + [repr(value) for value in self.ps[row]] +
                                [repr(value) for value in self.qs[row]] + [repr(distances[row]), repr(norms[row])])
        log.debug("Wrote %d pursuit rows to %s", len(self), path)


def pursuit(polytope, gammas, p0, q0, n_steps=None, strict=False):
    """Run the pursuit with the greedy strategy.

    p(1) = p0, q(1) = q0 and eps(0) = 0. The predator heads for
    V(n+1) = v(eps(n-1) + gamma(n)) and moves p(n+1) = p(n) + (V(n+1) - p(n)) / n;
    the prey moves q(n+1) = q(n) + (gamma(n+1) - q(n)) / (n+1). eps(1) is
    q(1) - p(2) and eps(n) = eps(n-1) + gamma(n) - V(n+1) afterwards.

    :param gammas: rows gamma(1), gamma(2), ... of points of P.
    :param int n_steps: number of rows to use, all of them by default.
    :return PursuitTrace: one row per n = 1..n_steps.
    """
    gammas = dynamics.input_array(polytope, gammas)
    if n_steps is not None:
        gammas = gammas[:n_steps]
    dynamics.check_inputs(polytope, gammas, strict)
    p = polytope.check_point(p0)
    q = polytope.check_point(q0)
    if np.array_equal(p, q):
        raise ModelError("Predator and prey must start apart, both at %r" % (p.tolist(),))

    count, dim = gammas.shape
    vertices = polytope.vertices
    ns = np.arange(1, count + 1)
    ps, qs, p_next, epss = (np.zeros((count, dim)) for _ in range(4))
    vids = np.zeros(count, dtype=int)

    eps = np.zeros(dim)
    for row in range(count):
        n = row + 1
        vid = first_tied(np.sum((vertices - (eps + gammas[row])) ** 2, axis=1))
        following = p + (vertices[vid] - p) / n
        eps = q - following if n == 1 else eps + gammas[row] - vertices[vid]

        ps[row], qs[row], p_next[row], epss[row], vids[row] = p, q, following, eps, vid
        p = following
        if row + 1 < count:
            q = q + (gammas[row + 1] - q) / (n + 1)

    trace = PursuitTrace(ns=ns, ps=ps, qs=qs, p_next=p_next, vids=vids, epss=epss)
    if count:
        log.debug("Pursuit on %r over %d steps: final distance %.3g", polytope, count, trace.distances[-1])
    return trace
