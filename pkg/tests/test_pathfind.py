import random

import numpy as np
import pytest

from deliverysim.pathfind import astar, bfs_costs, reachable_mask


def random_grid(rng, width=24, height=24, density=0.3):
    blocked = np.zeros((width, height), dtype=bool)
    for cx in range(width):
        for cz in range(height):
            if rng.random() < density:
                blocked[cx, cz] = True
    return blocked


def test_straight_corridor():
    blocked = np.ones((12, 3), dtype=bool)
    blocked[1:11, 1] = False
    path = astar(blocked, (1, 1), (10, 1))
    assert path is not None
    assert len(path) == 10
    assert path[0] == (1, 1) and path[-1] == (10, 1)


def test_sealed_goal_is_unreachable():
    blocked = np.zeros((8, 8), dtype=bool)
    blocked[3:6, 3] = True
    blocked[3:6, 5] = True
    blocked[3, 4] = True
    blocked[5, 4] = True
    assert astar(blocked, (0, 0), (4, 4)) is None


def test_blocked_goal_returns_none():
    blocked = np.zeros((4, 4), dtype=bool)
    blocked[2, 2] = True
    assert astar(blocked, (0, 0), (2, 2)) is None


def test_off_grid_raises():
    blocked = np.zeros((4, 4), dtype=bool)
    with pytest.raises(ValueError):
        astar(blocked, (0, 0), (9, 9))


def test_astar_matches_bfs_on_random_grids():
    rng = random.Random(1234)
    checked = 0
    for _ in range(500):
        blocked = random_grid(rng)
        free = [(cx, cz) for cx in range(24) for cz in range(24) if not blocked[cx, cz]]
        start = free[rng.randrange(len(free))]
        goal = free[rng.randrange(len(free))]
        costs = bfs_costs(blocked, start)
        path = astar(blocked, start, goal)
        if costs[goal] < 0:
            assert path is None
        else:
            assert path is not None
            assert len(path) - 1 == costs[goal]
            # contiguous 4-connected steps over free cells
            for (ax, az), (bx, bz) in zip(path, path[1:]):
                assert abs(ax - bx) + abs(az - bz) == 1
                assert not blocked[bx, bz]
        checked += 1
    assert checked == 500


def test_reachable_mask_matches_bfs():
    rng = random.Random(99)
    blocked = random_grid(rng, density=0.35)
    free = [(cx, cz) for cx in range(24) for cz in range(24) if not blocked[cx, cz]]
    start = free[0]
    mask = reachable_mask(blocked, start)
    costs = bfs_costs(blocked, start)
    assert np.array_equal(mask, costs >= 0)
