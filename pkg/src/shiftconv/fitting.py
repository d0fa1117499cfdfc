"""Log-log least-squares fits shared by the coefficient and convolution scans."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class ExponentFit:
    """Fitted slope of ``log y`` against ``log x``."""

    theta: Optional[float]
    points: np.ndarray  # shape (n, 2): (log x, log y)
    slope: float
    intercept: float
    r2: float
    excluded: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "theta": self.theta,
            "points": [[float(a), float(b)] for a, b in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "excluded": list(self.excluded),
            **{k: v for k, v in self.extra.items()},
        }


def fit_loglog(x, y, theta=None, min_points=3):
    """Fit ``log|y| = slope * log x + intercept``; zero values are excluded."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = y > 0
    excluded = [float(v) for v in x[~keep]]
    if np.count_nonzero(keep) < min_points:
        raise ValueError(f"need at least {min_points} nonzero points, "
                         f"got {np.count_nonzero(keep)}")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(theta, np.column_stack([lx, ly]), float(slope),
                       float(intercept), r2, excluded)
