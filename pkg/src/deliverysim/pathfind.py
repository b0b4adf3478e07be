"""Grid path planning: A* with a Manhattan heuristic plus BFS utilities.

Grids are numpy bool arrays indexed [cx, cz] where True means the cell is
blocked.  All movement is 4-connected with unit step cost, so BFS distance is
the optimality oracle for A*.
"""

from __future__ import annotations

import heapq
from collections import deque

import numpy as np

NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def astar(
    blocked: np.ndarray,
    start: tuple[int, int],
    goal: tuple[int, int],
) -> list[tuple[int, int]] | None:
    """Shortest 4-connected path from start to goal, both inclusive.

    Returns None when the goal is unreachable.  The start cell may be blocked
    (the walker is already standing there); the goal must be free.
    """
    width, height = blocked.shape
    for cx, cz in (start, goal):
        if not (0 <= cx < width and 0 <= cz < height):
            raise ValueError(f"cell {(cx, cz)} outside {width}x{height} grid")
    if blocked[goal]:
        return None
    if start == goal:
        return [start]

    g_cost = {start: 0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0  # deterministic tie-break for equal f-scores
    open_heap: list[tuple[int, int, tuple[int, int]]] = []
    heapq.heappush(open_heap, (abs(start[0] - goal[0]) + abs(start[1] - goal[1]), counter, start))
    closed: set[tuple[int, int]] = set()

    while open_heap:
        _, _, cell = heapq.heappop(open_heap)
        if cell in closed:
            continue
        if cell == goal:
            path = [cell]
            while cell in parent:
                cell = parent[cell]
                path.append(cell)
            path.reverse()
            return path
        closed.add(cell)
        cg = g_cost[cell]
        for dx, dz in NEIGHBOURS:
            nxt = (cell[0] + dx, cell[1] + dz)
            if not (0 <= nxt[0] < width and 0 <= nxt[1] < height):
                continue
            if blocked[nxt] or nxt in closed:
                continue
            ng = cg + 1
            if ng < g_cost.get(nxt, 1 << 30):
                g_cost[nxt] = ng
                parent[nxt] = cell
                counter += 1
                h = abs(nxt[0] - goal[0]) + abs(nxt[1] - goal[1])
                heapq.heappush(open_heap, (ng + h, counter, nxt))
    return None


def bfs_costs(blocked: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """Unit-cost BFS distance field from start; unreachable cells get -1."""
    width, height = blocked.shape
    costs = np.full((width, height), -1, dtype=np.int32)
    if blocked[start]:
        # Standing inside an obstacle still costs 0 to leave onto a free cell.
        pass
    costs[start] = 0
    queue = deque([start])
    while queue:
        cx, cz = queue.popleft()
        c = costs[cx, cz]
        for dx, dz in NEIGHBOURS:
            nx, nz = cx + dx, cz + dz
            if 0 <= nx < width and 0 <= nz < height and not blocked[nx, nz] and costs[nx, nz] < 0:
                costs[nx, nz] = c + 1
                queue.append((nx, nz))
    return costs


def reachable_mask(blocked: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """Boolean mask of cells reachable from start over free cells."""
    return bfs_costs(blocked, start) >= 0
