# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hex-lattice kernels: one-step dilation and two-phase component counting.

Layout is the odd-row-offset brick wall: odd rows sit half a cell to the right
of even rows. Both phases use 6-connectivity.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


cdef inline void _union(Py_ssize_t[::1] parent, Py_ssize_t[::1] size,
                        Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a == b:
        return
    if size[a] < size[b]:
        a, b = b, a
    parent[b] = a
    size[a] += size[b]


cdef _as_u8(arr):
    # bool and uint8 share a layout, so a contiguous bool lattice is viewed, not copied
    arr = np.ascontiguousarray(arr)
    if arr.dtype == np.bool_:
        return arr.view(np.uint8)
    return (arr != 0).view(np.uint8)


def dilate_step(cnp.ndarray occ_in):
    """Grow the black set by one hexagonal step."""
    cdef cnp.uint8_t[:, ::1] occ = _as_u8(occ_in)
    cdef Py_ssize_t rows = occ.shape[0], cols = occ.shape[1]
    out_arr = np.empty((rows, cols), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, c, off
    cdef cnp.uint8_t v
    if cols == 0:
        return out_arr.view(np.bool_)
    with nogil:
        for r in range(rows):
            # gather: neighbours above/below sit at (c - 1, c) from even rows, (c, c + 1) from odd rows
            off = 1 if r & 1 else -1
            for c in range(cols):
                v = occ[r, c]
                if c > 0:
                    v |= occ[r, c - 1]
                if c + 1 < cols:
                    v |= occ[r, c + 1]
                out[r, c] = v
            if r > 0:
                _gather_row(out, occ, r, r - 1, off, cols)
            if r + 1 < rows:
                _gather_row(out, occ, r, r + 1, off, cols)
    return out_arr.view(np.bool_)


cdef inline void _gather_row(cnp.uint8_t[:, ::1] out, cnp.uint8_t[:, ::1] occ,
                             Py_ssize_t r, Py_ssize_t rr, Py_ssize_t off, Py_ssize_t cols) noexcept nogil:
    cdef Py_ssize_t c
    for c in range(cols):
        out[r, c] |= occ[rr, c]
    if off > 0:
        for c in range(cols - 1):
            out[r, c] |= occ[rr, c + 1]
    else:
        for c in range(1, cols):
            out[r, c] |= occ[rr, c - 1]


def count_both(cnp.ndarray occ_in):
    """Return ``(n_black, n_white)`` 6-connected component counts.

    Single Hoshen-Kopelman raster pass; cells are joined to already-visited
    neighbours (W, and the two upper neighbours) of the same phase.
    """
    cdef cnp.uint8_t[:, ::1] occ = _as_u8(occ_in)
    cdef Py_ssize_t rows = occ.shape[0], cols = occ.shape[1]
    cdef Py_ssize_t n = rows * cols
    parent_arr = np.arange(n, dtype=np.intp)
    size_arr = np.ones(n, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] size = size_arr
    cdef Py_ssize_t r, c, i, lo, hi
    cdef cnp.uint8_t v
    cdef Py_ssize_t nb = 0, nw = 0
    with nogil:
        for r in range(rows):
            if r & 1:
                lo = 0
                hi = 1
            else:
                lo = -1
                hi = 0
            for c in range(cols):
                i = r * cols + c
                v = occ[r, c]
                if c > 0 and occ[r, c - 1] == v:
                    _union(parent, size, i, i - 1)
                if r > 0:
                    if 0 <= c + lo < cols and occ[r - 1, c + lo] == v:
                        _union(parent, size, i, i - cols + lo)
                    if 0 <= c + hi < cols and occ[r - 1, c + hi] == v:
                        _union(parent, size, i, i - cols + hi)
        for i in range(n):
            if parent[i] == i:
                if occ[i // cols, i % cols]:
                    nb += 1
                else:
                    nw += 1
    return nb, nw
