# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled swap kernels for batches of rings."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def apply_swaps(double[:, ::1] eta, const cnp.int32_t[::1] bonds,
                const cnp.int64_t[::1] starts, const cnp.int64_t[::1] stops):
    """Apply bonds[starts[r]:stops[r]] in order to row r of eta, in place."""
    cdef Py_ssize_t R = eta.shape[0]
    cdef Py_ssize_t N = eta.shape[1]
    cdef Py_ssize_t r, j, x, y
    cdef double tmp
    with nogil:
        for r in range(R):
            for j in range(starts[r], stops[r]):
                x = bonds[j]
                y = x + 1
                if y == N:
                    y = 0
                tmp = eta[r, x]
                eta[r, x] = eta[r, y]
                eta[r, y] = tmp


def apply_bond_column(double[:, ::1] eta, const cnp.int32_t[::1] bonds):
    """Swap bond bonds[r] in row r; negative entries are skipped."""
    cdef Py_ssize_t R = eta.shape[0]
    cdef Py_ssize_t N = eta.shape[1]
    cdef Py_ssize_t r, x, y
    cdef double tmp
    with nogil:
        for r in range(R):
            x = bonds[r]
            if x < 0:
                continue
            y = x + 1
            if y == N:
                y = 0
            tmp = eta[r, x]
            eta[r, x] = eta[r, y]
            eta[r, y] = tmp
