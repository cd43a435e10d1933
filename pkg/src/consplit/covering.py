"""External 1-norm coverings of the probability simplex.

Centers are built by gridding the nonnegative part of the m-dimensional 1-norm
ball at spacing r/(2m) and lifting each grid point with a last coordinate of
one minus its sum. Floor-rounding any simplex point onto the grid moves it by
less than r/2 in the first m coordinates, and the lift at most doubles that,
giving the radius-r covering property.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CoveringCapacityError(ValueError):
    """The requested radius would need more centers than the configured cap."""


@dataclass(frozen=True)
class Covering:
    radius: float
    centers: np.ndarray   # (count, m + 1)

    def __len__(self) -> int:
        return self.centers.shape[0]


def _grid_points(m: int, steps: int):
    """Nonnegative integer vectors of length m with coordinate sum <= steps,
    in lexicographic order."""
    if m == 1:
        for v in range(steps + 1):
            yield (v,)
        return
    for v in range(steps + 1):
        for rest in _grid_points(m - 1, steps - v):
            yield (v,) + rest


def build_covering(m: int, radius: float, cap: int = 10 ** 6) -> Covering:
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0 < radius <= 2:
        raise ValueError("radius must be in (0, 2]")
    if radius >= 2:
        # the simplex has 1-norm diameter 2, so its barycenter alone suffices
        center = np.full((1, m + 1), 1.0 / (m + 1))
        return Covering(radius, center)
    spacing = radius / (2 * m)
    steps = int(np.floor(1.0 / spacing))
    from math import comb
    count = comb(steps + m, m)
    if count > cap:
        raise CoveringCapacityError(
            f"covering would need {count} centers (cap {cap}); "
            f"increase the radius or reduce the number of constraints")
    centers = np.empty((count, m + 1))
    for i, combo in enumerate(_grid_points(m, steps)):
        head = np.array(combo, dtype=float) * spacing
        centers[i, :m] = head
        centers[i, m] = 1.0 - head.sum()
    return Covering(radius, centers)


def nearest_center(covering: Covering, lam: np.ndarray):
    """(index, center) minimizing the 1-norm distance; ties go to the lowest index."""
    lam = np.asarray(lam, dtype=float)
    dists = np.abs(covering.centers - lam[None, :]).sum(axis=1)
    idx = int(np.argmin(dists))  # argmin returns the first minimizer
    return idx, covering.centers[idx]
