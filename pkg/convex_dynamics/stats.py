import sys
import logging

import numpy as np
import humanfriendly

from convex_dynamics.dynamics import NORMS

log = logging.getLogger(__name__)

QUARTERS = 4


class NormStats(object):
    """Running summary of an error norm."""

    def __init__(self, name):
        """Initialize the norm summary."""
        self.name = name

        self.count = 0
        self.total = 0.0
        self.max = 0.0
        self.min = sys.float_info.max

    def update(self, value):
        """Update the summary in an iterative manner."""
        self.count += 1
        self.total += value

        if value > self.max:
            self.max = value

        if value <= self.min:
            self.min = value

    def update_many(self, values):
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) == 0:
            return
        self.count += len(values)
        self.total += float(values.sum())
        self.max = max(self.max, float(values.max()))
        self.min = min(self.min, float(values.min()))

    @property
    def avg(self):
        """Calculate the average norm and return it."""
        if self.count == 0:
            return None

        return self.total / self.count

    def __str__(self):
        """Return a string representation of the collected norm stats."""
        return str(self.to_dict())

    def to_dict(self):
        if self.count == 0:
            return {"name": self.name, "count": "0"}

        return {
            "name": self.name,
            "count": humanfriendly.format_number(self.count),
            "min": "%.9g" % self.min,
            "max": "%.9g" % self.max,
            "avg": "%.9g" % self.avg,
        }


class FieldStats(object):
    """Error field summary: the max error norm of every quarter of the pixels in processing order.

    The field plateaus when the later quarters do not exceed the first one,
    plateau_ratio is max over all quarters / max over the first quarter.
    """

    def __init__(self, errors, norm='l2'):
        """Initialize from an (M, N, C) error field."""
        errors = np.asarray(errors, dtype=float)
        if errors.ndim == 2:
            errors = errors[:, :, None]

        norms = NORMS[norm](errors.reshape(-1, errors.shape[-1]))
        if len(norms) < QUARTERS:
            raise ValueError("Error field of %d pixels is too small to split into quarters" % len(norms))

        self.norm = norm
        self.summary = NormStats(name=norm)
        self.summary.update_many(norms)
        self.quarter_maxima = [float(part.max()) for part in np.array_split(norms, QUARTERS)]

    @property
    def plateau_ratio(self):
        if self.quarter_maxima[0] == 0:
            return 1.0 if max(self.quarter_maxima) == 0 else float('inf')
        return max(self.quarter_maxima) / self.quarter_maxima[0]

    def plateaus(self, tolerance=0.05):
        return self.plateau_ratio <= 1.0 + tolerance

    def to_dict(self):
        return {
            "norm": self.norm,
            "summary": self.summary.to_dict(),
            "quarter_maxima": self.quarter_maxima,
            "plateau_ratio": self.plateau_ratio,
        }
