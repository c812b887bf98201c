"""Pure numpy versions of the compiled swap kernels.

Rows are independent, so the k-th swap of every row is applied in one
vectorized step; the order within each row is preserved and the results
match the compiled loop bit for bit.
"""
import numpy as np


def apply_swaps(eta, bonds, starts, stops):
    N = eta.shape[1]
    counts = stops - starts
    if counts.size == 0:
        return
    for k in range(int(counts.max(initial=0))):
        rows = np.flatnonzero(counts > k)
        x = bonds[starts[rows] + k].astype(np.intp)
        y = x + 1
        y[y == N] = 0
        tmp = eta[rows, x]
        eta[rows, x] = eta[rows, y]
        eta[rows, y] = tmp


def apply_bond_column(eta, bonds):
    N = eta.shape[1]
    rows = np.flatnonzero(bonds >= 0)
    x = bonds[rows].astype(np.intp)
    y = x + 1
    y[y == N] = 0
    tmp = eta[rows, x]
    eta[rows, x] = eta[rows, y]
    eta[rows, y] = tmp
