"""Marching cubes over a sampled scalar field (classic 256-case tables).

Vertices are deduplicated through global edge keys, so watertight fields
produce watertight triangle meshes. Winding is chosen so triangle
normals point outward (toward positive field values).
"""

from __future__ import annotations

import numpy as np

from .grids import GridKind, ScalarGrid
from .errors import InvalidKind
from .mc_tables import CORNER_OFFSETS, EDGE_CORNERS, EDGE_TABLE, TRI_TABLE
from .mesh import TriMesh

# Per local edge: (axis, base corner offset) of the global lattice edge.
_EDGE_AXIS = np.empty(12, dtype=np.int64)
_EDGE_BASE = np.empty((12, 3), dtype=np.int64)
for _e in range(12):
    _c1, _c2 = EDGE_CORNERS[_e]
    _o1, _o2 = CORNER_OFFSETS[_c1], CORNER_OFFSETS[_c2]
    _EDGE_AXIS[_e] = int(np.nonzero(_o1 != _o2)[0][0])
    _EDGE_BASE[_e] = np.minimum(_o1, _o2)


def mc_extract(grid: ScalarGrid, iso: float = 0.0) -> TriMesh:
    """Triangulate the iso-surface of a scalar grid."""
    if grid.kind == GridKind.OCC:
        raise InvalidKind("occupancy stores cell values, not signed vertex samples")
    v = grid.values - iso
    inside = v < 0

    m, n, k = grid.dims.vertex_shape
    index = np.zeros((m - 1, n - 1, k - 1), dtype=np.int32)
    for c, (ox, oy, oz) in enumerate(CORNER_OFFSETS):
        corner_in = inside[ox : ox + m - 1, oy : oy + n - 1, oz : oz + k - 1]
        index |= corner_in.astype(np.int32) << np.int32(c)

    active = EDGE_TABLE[index] != 0
    zz, yy, xx = np.nonzero(active.transpose(2, 1, 0))

    verts: list[np.ndarray] = []
    vert_ids: dict[tuple[int, int, int, int], int] = {}
    tris: list[tuple[int, int, int]] = []

    for ci, cj, ck in zip(xx, yy, zz):
        case = index[ci, cj, ck]
        table_row = TRI_TABLE[case]
        local: dict[int, int] = {}
        mask = EDGE_TABLE[case]
        for e in range(12):
            if not (mask >> e) & 1:
                continue
            axis = _EDGE_AXIS[e]
            bx = ci + _EDGE_BASE[e, 0]
            by = cj + _EDGE_BASE[e, 1]
            bz = ck + _EDGE_BASE[e, 2]
            key = (axis, bx, by, bz)
            vid = vert_ids.get(key)
            if vid is None:
                va = v[bx, by, bz]
                nb = [bx, by, bz]
                nb[axis] += 1
                vb = v[nb[0], nb[1], nb[2]]
                t = va / (va - vb)
                pos = np.array([bx, by, bz], dtype=np.float64)
                pos[axis] += t
                vid = len(verts)
                verts.append(pos)
                vert_ids[key] = vid
            local[e] = vid
        for s in range(0, 16, 3):
            if table_row[s] < 0:
                break
            # reversed table order so normals face the positive side
            tris.append((local[table_row[s]], local[table_row[s + 2]], local[table_row[s + 1]]))

    vertices = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    return TriMesh(vertices, np.asarray(tris, dtype=np.int64).reshape(-1, 3))
