"""Vector math and grid-ray primitives shared by the whole simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator


@dataclass(frozen=True)
class Vec3:
    """A point in meters. y is vertical (up); x/z span the floor plane."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite Vec3 component: ({self.x}, {self.y}, {self.z})")

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    @staticmethod
    def from_seq(seq) -> "Vec3":
        x, y, z = seq
        return Vec3(float(x), float(y), float(z))


def distance3d(a: Vec3, b: Vec3) -> float:
    """Euclidean distance in meters."""
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def horizontal_distance(a: Vec3, b: Vec3) -> float:
    """Distance in the floor plane, ignoring height."""
    return math.hypot(a.x - b.x, a.z - b.z)


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    theta = math.fmod(theta, 2.0 * math.pi)
    if theta > math.pi:
        theta -= 2.0 * math.pi
    elif theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


def bearing_to(origin: Vec3, target: Vec3) -> float:
    """Horizontal-plane angle of the origin->target ray; 0 points along +x."""
    return math.atan2(target.z - origin.z, target.x - origin.x)


def supercover_cells(ax: float, az: float, bx: float, bz: float) -> Iterator[tuple[int, int]]:
    """Every grid cell a segment touches, in cell-space coordinates.

    Inputs are continuous positions already divided by the cell size (so cell
    (i, j) spans [i, i+1) x [j, j+1)).  The traversal is a supercover: when
    the segment passes exactly through a cell corner, both orthogonal
    neighbours are yielded as well, which makes occlusion checks conservative.
    Yields cells from a to b, endpoints included.
    """
    ix, iz = math.floor(ax), math.floor(az)
    end_ix, end_iz = math.floor(bx), math.floor(bz)
    dx, dz = bx - ax, bz - az
    step_x = 1 if dx > 0 else -1
    step_z = 1 if dz > 0 else -1

    yield ix, iz
    if ix == end_ix and iz == end_iz:
        return

    # Parametric distances to the next vertical/horizontal grid lines.
    if dx != 0:
        next_x = ix + (1 if step_x > 0 else 0)
        t_max_x = (next_x - ax) / dx
        t_delta_x = abs(1.0 / dx)
    else:
        t_max_x = math.inf
        t_delta_x = math.inf
    if dz != 0:
        next_z = iz + (1 if step_z > 0 else 0)
        t_max_z = (next_z - az) / dz
        t_delta_z = abs(1.0 / dz)
    else:
        t_max_z = math.inf
        t_delta_z = math.inf

    while True:
        if abs(t_max_x - t_max_z) < 1e-12:
            # Corner crossing: include both side cells before the diagonal one.
            yield ix + step_x, iz
            yield ix, iz + step_z
            ix += step_x
            iz += step_z
            t_max_x += t_delta_x
            t_max_z += t_delta_z
        elif t_max_x < t_max_z:
            ix += step_x
            t_max_x += t_delta_x
        else:
            iz += step_z
            t_max_z += t_delta_z
        yield ix, iz
        if ix == end_ix and iz == end_iz:
            return
        if t_max_x > 1.0 + 1e-12 and t_max_z > 1.0 + 1e-12:
            # Numerical safety net; the loop above should have terminated.
            return
