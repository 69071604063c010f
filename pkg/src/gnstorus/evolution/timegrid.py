"""Geometric time grids on (0, 1]."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class TimeGrid:
    """Geometric samples from t_min to t_max plus any ``anchors`` inside the range."""

    t_min: float
    t_max: float = 1.0
    steps_per_decade: int = 40
    anchors: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.t_min < self.t_max <= 1.0:
            raise DomainError(f"need 0 < t_min < t_max <= 1, got {self.t_min}, {self.t_max}")
        if self.steps_per_decade < 1:
            raise DomainError(f"steps_per_decade must be positive, got {self.steps_per_decade}")

    @cached_property
    def samples(self):
        decades = np.log10(self.t_max / self.t_min)
        count = max(2, int(np.ceil(decades * self.steps_per_decade)) + 1)
        t = np.geomspace(self.t_min, self.t_max, count)
        extra = [a for a in self.anchors if self.t_min < a < self.t_max]
        if extra:
            t = np.unique(np.concatenate([t, extra]))
            # drop samples that crowd an anchor
            keep = np.ones(t.size, bool)
            for a in extra:
                i = int(np.searchsorted(t, a))
                for j in (i - 1, i + 1):
                    if 0 < j < t.size - 1 and t[j] not in extra and abs(np.log(t[j] / a)) < 0.25 * np.log(10) / self.steps_per_decade:
                        keep[j] = False
            t = t[keep]
        return t

    def __len__(self):
        return len(self.samples)

    def index(self, t):
        """Index of the sample equal to t (to relative 1e-12)."""
        i = int(np.argmin(np.abs(self.samples - t)))
        if abs(self.samples[i] - t) > 1e-12 * t:
            raise DomainError(f"t = {t} is not a grid sample")
        return i
