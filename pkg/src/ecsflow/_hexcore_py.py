"""Pure-Python fallback for the compiled hex kernels.

Same contract as ``_hexcore``: ``dilate_step`` and ``count_both`` on an
odd-row-offset boolean lattice.
"""
import numpy as np


def dilate_step(occ):
    occ = np.asarray(occ, dtype=bool)
    out = occ.copy()
    out[:, 1:] |= occ[:, :-1]
    out[:, :-1] |= occ[:, 1:]
    vert = np.zeros_like(occ)
    vert[1:] |= occ[:-1]
    vert[:-1] |= occ[1:]
    # even rows reach columns (c-1, c) of the adjacent odd rows; odd rows reach (c, c+1)
    shifted = np.zeros_like(vert)
    shifted[0::2, 1:] = vert[0::2, :-1]
    shifted[1::2, :-1] = vert[1::2, 1:]
    out |= vert | shifted
    return out


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _union(parent, size, a, b):
    a = _find(parent, a)
    b = _find(parent, b)
    if a == b:
        return
    if size[a] < size[b]:
        a, b = b, a
    parent[b] = a
    size[a] += size[b]


def count_both(occ):
    occ = np.asarray(occ, dtype=bool)
    rows, cols = occ.shape
    cells = occ.ravel().tolist()
    n = rows * cols
    parent = list(range(n))
    size = [1] * n
    for r in range(rows):
        lo, hi = (0, 1) if r & 1 else (-1, 0)
        base = r * cols
        for c in range(cols):
            i = base + c
            v = cells[i]
            if c > 0 and cells[i - 1] == v:
                _union(parent, size, i, i - 1)
            if r > 0:
                for off in (lo, hi):
                    cc = c + off
                    if 0 <= cc < cols and cells[i - cols + off] == v:
                        _union(parent, size, i, i - cols + off)
    nb = nw = 0
    for i in range(n):
        if parent[i] == i:
            if cells[i]:
                nb += 1
            else:
                nw += 1
    return nb, nw
