"""Log-log slope fitting for ratio tables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    table: List[Tuple[str, float]]  # (delta, ratio) rows

    def to_json_obj(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r2": self.r2,
            "table": [[d, r] for d, r in self.table],
        }


def fit_exponent(table: Dict) -> ExponentFit:
    """Least-squares slope of log(ratio) against log(1/delta).

    Needs at least 3 dyadic scales; the slope estimates the exponent Lambda
    in ratio ~ delta^-Lambda.
    """
    items = sorted(table.items(), key=lambda kv: -float(Fraction(kv[0])))
    if len(items) < 3:
        raise ValueError("need at least 3 scales to fit an exponent")
    deltas = [Fraction(k) for k, _ in items]
    for dl in deltas:
        if dl.numerator != 1 or (dl.denominator & (dl.denominator - 1)) != 0:
            raise ValueError(f"delta {dl} is not dyadic")
    x = np.array([math.log(1.0 / float(dl)) for dl in deltas])
    y = np.array([math.log(float(r)) for _, r in items])
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else 0.0
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(slope, intercept, stderr, r2,
                       [(str(dl), float(r)) for dl, r in zip(deltas, (r for _, r in items))])
