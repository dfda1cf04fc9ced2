"""Shared face assembly for every dual-contouring style extractor.

A cell owning at least one flagged edge gets one mesh vertex. Every
flagged edge whose four surrounding cells all exist becomes one quad
joining those cells' vertices. For an edge along axis a the four cells
are listed counter-clockwise when viewed from +a, so the quad normal
follows +a; an optional sign grid reverses faces whose upper endpoint is
inside so that normals point outward.

Determinism: cells are numbered x-fastest (then y, then z) and faces are
emitted axis x, then y, then z, each block in the same memory order.
"""

from __future__ import annotations

import numpy as np

from .grids import EdgeField, SignGrid, VertexOffsetGrid
from .mesh import QuadMesh


def active_cell_mask(flags: EdgeField) -> np.ndarray:
    """True for cells with at least one of their 12 edges flagged."""
    fx, fy, fz = (a.astype(bool) for a in flags.axes)
    act = fx[:, :-1, :-1] | fx[:, 1:, :-1] | fx[:, :-1, 1:] | fx[:, 1:, 1:]
    act |= fy[:-1, :, :-1] | fy[1:, :, :-1] | fy[:-1, :, 1:] | fy[1:, :, 1:]
    act |= fz[:-1, :-1, :] | fz[1:, :-1, :] | fz[:-1, 1:, :] | fz[1:, 1:, :]
    return act


def _number_cells(active: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Assign vertex ids to active cells in x-fastest scan order.

    Returns (ids, cells) where ids maps cell index -> vertex id (-1 if
    inactive) and cells is the (V, 3) array of active cell coordinates in
    emission order.
    """
    ids = np.full(active.shape, -1, dtype=np.int64)
    zz, yy, xx = np.nonzero(active.transpose(2, 1, 0))
    ids[xx, yy, zz] = np.arange(len(xx))
    cells = np.stack([xx, yy, zz], axis=1)
    return ids, cells


def assemble_dual_mesh(
    flags: EdgeField,
    offsets: VertexOffsetGrid | np.ndarray,
    flip_inside: SignGrid | None = None,
) -> QuadMesh:
    off = offsets.offsets if isinstance(offsets, VertexOffsetGrid) else np.asarray(offsets)
    active = active_cell_mask(flags)
    ids, cells = _number_cells(active)
    vertices = cells.astype(np.float64) + off[cells[:, 0], cells[:, 1], cells[:, 2]]

    quad_blocks = []
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        arr = flags.axis(a).astype(bool)
        interior = [slice(None)] * 3
        interior[b] = slice(1, -1)
        interior[c] = slice(1, -1)
        block = arr[tuple(interior)]
        if block.size == 0:
            continue
        # edge coordinates in x-fastest order within this axis block
        zz, yy, xx = np.nonzero(block.transpose(2, 1, 0))
        if len(xx) == 0:
            continue
        base = np.stack([xx, yy, zz], axis=1)
        base[:, b] += 1
        base[:, c] += 1

        corner = np.zeros((4, 3), dtype=np.int64)
        corner[0, b], corner[0, c] = -1, -1
        corner[1, b], corner[1, c] = 0, -1
        corner[2, b], corner[2, c] = 0, 0
        corner[3, b], corner[3, c] = -1, 0
        quad = np.empty((len(base), 4), dtype=np.int64)
        for s in range(4):
            cell = base + corner[s]
            quad[:, s] = ids[cell[:, 0], cell[:, 1], cell[:, 2]]

        if flip_inside is not None:
            upper = base.copy()
            upper[:, a] += 1
            flip = flip_inside.inside[upper[:, 0], upper[:, 1], upper[:, 2]]
            quad[flip] = quad[flip, ::-1]
        quad_blocks.append(quad)

    quads = np.concatenate(quad_blocks, axis=0) if quad_blocks else np.empty((0, 4), np.int64)
    return QuadMesh(vertices.reshape(-1, 3), quads)
