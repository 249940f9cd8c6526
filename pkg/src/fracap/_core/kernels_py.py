"""Pure-numpy implementation of the pair-interaction kernels.

The modular and its gradient are dominated by the sum over all ordered
node pairs. These routines take the precomputed per-node exponents, the
pair exponent matrix and the pair weight matrix (quadrature weight times
the inverse distance power, zero on the diagonal) and reduce them.

``node_quadratic`` / ``pair_quadratic`` declare that the respective
exponent field is identically 2, replacing the elementwise power with
plain multiplication; callers precompute the flags once per kernel.

Summation is grouped into ``partitions`` contiguous row blocks; results
are bit-stable for a fixed partition count.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _row_blocks(n: int, partitions: int):
    parts = max(1, min(int(partitions), n))
    bounds = [(k * n) // parts for k in range(parts + 1)]
    return [(bounds[k], bounds[k + 1]) for k in range(parts) if bounds[k] < bounds[k + 1]]


def modular_terms(
    u,
    qvals,
    cell,
    pmat,
    wmat,
    partitions=1,
    node_quadratic=False,
    pair_quadratic=False,
    pair_symmetric=False,
):
    """Return (lebesgue_term, gagliardo_term) of the discrete modular.

    ``pair_symmetric`` exists for signature parity with the compiled
    backend; the vectorized reductions below gain nothing from it.
    """
    u = np.ascontiguousarray(u, dtype=float)
    n = u.shape[0]
    with np.errstate(over="ignore"):
        if node_quadratic:
            leb = cell * float(np.sum(u * u))
        else:
            leb = cell * float(np.sum(np.abs(u) ** qvals))
        gag = 0.0
        for r0, r1 in _row_blocks(n, partitions):
            diff = u[r0:r1, None] - u[None, :]
            if pair_quadratic:
                gag += float(np.sum(diff * diff * wmat[r0:r1]))
            else:
                gag += float(np.sum(np.abs(diff) ** pmat[r0:r1] * wmat[r0:r1]))
    return leb, gag


def modular_gradient(
    u,
    qvals,
    cell,
    pmat,
    wmat,
    partitions=1,
    node_quadratic=False,
    pair_quadratic=False,
    pair_symmetric=False,
    pmat_t=None,
    wmat_t=None,
):
    """Gradient of the discrete modular; pair terms vanish where u_i = u_j.

    The symmetry flag and transpose arguments exist for signature parity
    with the compiled backend; the vectorized column sums below need
    neither.
    """
    u = np.ascontiguousarray(u, dtype=float)
    n = u.shape[0]
    with np.errstate(over="ignore"):
        if node_quadratic:
            g = cell * 2.0 * u
        else:
            g = cell * qvals * np.abs(u) ** (qvals - 1.0) * np.sign(u)
        for r0, r1 in _row_blocks(n, partitions):
            diff = u[r0:r1, None] - u[None, :]
            if pair_quadratic:
                # |d|**(p-1) * sign(d) collapses to d itself when p = 2
                block = 2.0 * diff * wmat[r0:r1]
            else:
                mag = np.abs(diff)
                block = pmat[r0:r1] * mag ** (pmat[r0:r1] - 1.0) * wmat[r0:r1] * np.sign(diff)
            g[r0:r1] += block.sum(axis=1)
            g -= block.sum(axis=0)
    return g
