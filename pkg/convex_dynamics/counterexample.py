"""Three dimensional polytope for which no outward translation of its faces is invariant.

The polytope is the unit cube cut by the planes x+y-z = s and x+y-z = 1-s
(see polytope.octa3d). Its faces are moved outward in two groups: the two
hexagonal faces by hex_shift and the six cube-face pieces by face_shift.
Two failures compete:

* (a) a point of the closed cell R_g, such as the midpoint m of dc, is pushed
  out through the lower hexagonal face (or the face x = 0) by gamma = d;
* (b) a point of the closed cell R_c, such as the cube corner (1, 0, 1), is
  pushed out through the faces y = 0 or z = 0 by gamma = b.

Raising hex_shift cures (a) but lets the corner region where (b) happens
into the translated polytope, so every pair of shifts fails one of them.
"""
import math
import logging

import numpy as np
from dataclasses import dataclass
from scipy.optimize import linprog

from convex_dynamics import utils
from convex_dynamics.polytope import octa3d, OCTA_DEFAULT_CUT, OCTA_LABELS
from convex_dynamics.regions import HalfspaceRegion, RegionError, EXACT_TOLERANCE

log = logging.getLogger(__name__)

HEX_NORMAL = np.array([1.0, 1.0, -1.0]) / math.sqrt(3.0)

# (cell vertex, gamma vertex) of the two failures
FAILURE_A = ('g', 'd')
FAILURE_B = ('c', 'b')


def _index(label):
    return OCTA_LABELS.index(label)


def translated_polytope(hex_shift, face_shift, cut=OCTA_DEFAULT_CUT):
    """Return the octahedral polytope with its hexagonal and cube faces moved outward.

    :param float hex_shift: outward distance of the two hexagonal faces.
    :param float face_shift: outward distance of the six cube faces.
    :param float cut: depth of the two cutting planes, in (0, 0.5).
    :return tuple: (Polytope, HalfspaceRegion).
    """
    if hex_shift < 0 or face_shift < 0:
        raise RegionError("Face translations must be non-negative, got hex=%r face=%r" % (hex_shift, face_shift))

    polytope = octa3d(cut)
    normals = np.vstack([np.eye(3), -np.eye(3), HEX_NORMAL, -HEX_NORMAL])
    offsets = np.concatenate([np.full(3, 1.0 + face_shift), np.full(3, face_shift),
                              [(1.0 - cut) / math.sqrt(3.0) + hex_shift, -cut / math.sqrt(3.0) + hex_shift]])
    region = HalfspaceRegion(normals, offsets, name='octa3d(hex=%g, face=%g)' % (hex_shift, face_shift))
    return polytope, region


@dataclass(frozen=True)
class PushOut(object):
    """Largest excursion of the cell R_{cell} inside Q translated by gamma - v_cell.

    margin is the smallest slack of the translated cell over the constraints
    the translation moves toward; a negative margin means the failure occurs,
    with witness the point that leaves Q.
    """
    cell: str
    gamma: str
    margin: float
    witness: list = None
    named_point: list = None
    named_slack: float = None

    @property
    def fails(self):
        return self.margin < -EXACT_TOLERANCE

    def to_dict(self):
        return {'cell': self.cell, 'gamma': self.gamma, 'fails': self.fails, 'margin': self.margin,
                'witness': self.witness, 'named_point': self.named_point, 'named_slack': self.named_slack}


def push_out(polytope, region, cell, gamma, named_point=None):
    """Decide by linear programming whether R_cell cap Q translated by gamma - v_cell leaves Q.

    Only constraints whose normal has a positive component along the
    translation can be violated, one program is solved for each.

    :param str cell: label of the Voronoi cell.
    :param str gamma: label of the input vertex.
    :param named_point: optional point of the cell checked directly.
    """
    i, j = _index(cell), _index(gamma)
    shift = polytope.vertices[j] - polytope.vertices[i]
    cell_normals, cell_offsets = polytope.voronoi_matrix(i)
    constraints = np.vstack([cell_normals, region.normals])
    offsets = np.concatenate([cell_offsets, region.offsets])

    margin, witness = np.inf, None
    for normal, offset in zip(region.normals, region.offsets):
        if normal.dot(shift) <= 0:
            continue
        result = linprog(-normal, A_ub=constraints, b_ub=offsets, bounds=[(None, None)] * 3, method='highs')
        if result.status == 2:
            raise RegionError("Cell %s does not meet %r" % (cell, region))
        if result.status != 0:
            raise RegionError("Linear program failed on cell %s: %s" % (cell, result.message))

        slack = offset - (-result.fun + normal.dot(shift))
        if slack < margin:
            margin, witness = slack, result.x.tolist()

    named_slack = None
    if named_point is not None:
        named_point = np.asarray(named_point, dtype=float)
        if region.contains(named_point):
            named_slack = float(region.slack(named_point + shift)[0])

    return PushOut(cell=cell, gamma=gamma, margin=float(margin), witness=witness,
                   named_point=None if named_point is None else named_point.tolist(), named_slack=named_slack)


def named_points(cut=OCTA_DEFAULT_CUT):
    """The midpoint m of dc and the cube corner (1, 0, 1)."""
    polytope = octa3d(cut)
    middle = (polytope.vertices[_index('d')] + polytope.vertices[_index('c')]) / 2.0
    return middle, np.array([1.0, 0.0, 1.0])


@dataclass(frozen=True)
class CounterexampleCheck(object):
    """Both failure checks at one pair of face translations."""
    hex_shift: float
    face_shift: float
    failure_a: PushOut
    failure_b: PushOut

    @property
    def passed(self):
        return not (self.failure_a.fails or self.failure_b.fails)

    @property
    def mode(self):
        """'a', 'b', 'ab' or '-' when neither failure occurs."""
        return ''.join(name for name, check in (('a', self.failure_a), ('b', self.failure_b)) if check.fails) or '-'

    def to_dict(self):
        return {'hex_shift': self.hex_shift, 'face_shift': self.face_shift, 'mode': self.mode, 'pass': self.passed,
                'failure_a': self.failure_a.to_dict(), 'failure_b': self.failure_b.to_dict()}


def counterexample_3d(hex_shift, face_shift=0.0, cut=OCTA_DEFAULT_CUT):
    """Check failures (a) and (b) for one pair of face translations.

    :param float hex_shift: translation of the hexagonal faces abcdef and ghijkl.
    :param float face_shift: translation of the cube-face pieces.
    :return CounterexampleCheck: the two push-out results.
    """
    polytope, region = translated_polytope(hex_shift, face_shift, cut)
    middle, corner = named_points(cut)
    check = CounterexampleCheck(hex_shift=float(hex_shift), face_shift=float(face_shift),
                                failure_a=push_out(polytope, region, *FAILURE_A, named_point=middle),
                                failure_b=push_out(polytope, region, *FAILURE_B, named_point=corner))
    log.debug("Counterexample at hex=%g face=%g: mode %s", hex_shift, face_shift, check.mode)
    return check


@dataclass(frozen=True)
class Sweep(object):
    cut: float
    checks: list

    @property
    def passing(self):
        return [check for check in self.checks if check.passed]

    def counts(self):
        counts = {}
        for check in self.checks:
            counts[check.mode] = counts.get(check.mode, 0) + 1
        return counts

    def to_dict(self):
        return {'cut': self.cut, 'grid_points': len(self.checks), 'passing': len(self.passing),
                'modes': self.counts(), 'checks': [check.to_dict() for check in self.checks]}

    def to_text(self):
        """Table of failure modes: one row per hex shift, one column per face shift."""
        hex_shifts = sorted(set(check.hex_shift for check in self.checks))
        face_shifts = sorted(set(check.face_shift for check in self.checks))
        modes = {(check.hex_shift, check.face_shift): check.mode for check in self.checks}
        lines = [u'hex\\face ' + u' '.join(u'%5.2f' % shift for shift in face_shifts)]
        for hex_shift in hex_shifts:
            lines.append(u'%8.2f ' % hex_shift + u' '.join(u'%5s' % modes[(hex_shift, face_shift)]
                                                           for face_shift in face_shifts))
        return u'\n'.join(lines) + u'\n'


def sweep(hex_shifts, face_shifts, cut=OCTA_DEFAULT_CUT, workers=None):
    """Run counterexample_3d over the grid hex_shifts x face_shifts."""
    grid = [(hex_shift, face_shift) for hex_shift in hex_shifts for face_shift in face_shifts]
    checks = utils.run_parallel(lambda pair: counterexample_3d(pair[0], pair[1], cut), grid, workers)
    result = Sweep(cut=cut, checks=checks)
    log.info("Counterexample sweep over %d points: %d passing, modes %s", len(checks), len(result.passing), result.counts())
    return result
