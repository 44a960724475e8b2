"""Small dense linear-algebra helpers shared by all modules.

Tolerances live here so that every rank decision in the package is made
the same way.
"""

import numpy as np

RANK_SLACK = 64.0
SNAP_TOL = 1e-8
COND_LIMIT = 1e12
HURWITZ_MARGIN = 1e-9
COINCIDENCE_TOL = 1e-6


def rank_tol(M, sv=None):
    """Threshold below which a singular value of ``M`` counts as zero."""
    M = np.atleast_2d(M)
    if sv is None:
        sv = np.linalg.svd(M, compute_uv=False)
    smax = sv[0] if sv.size else 0.0
    return max(M.shape) * smax * np.finfo(float).eps * RANK_SLACK


def numerical_rank(M):
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > rank_tol(M, sv)))


def snap(M, tol=SNAP_TOL):
    """Round entries within ``tol`` of 0 or 1 to exactly 0 or 1."""
    M = np.array(M, dtype=float, copy=True)
    M[np.abs(M) < tol] = 0.0
    M[np.abs(M - 1.0) < tol] = 1.0
    return M


def matrix_powers(S, k):
    """Return ``[I, S, ..., S**k]``."""
    S = np.asarray(S, dtype=float)
    out = [np.eye(S.shape[0])]
    for _ in range(k):
        out.append(out[-1] @ S)
    return out


def matrix_polynomial(coeffs, S):
    """Evaluate ``sum_i coeffs[i] * S**i`` (ascending coefficients)."""
    S = np.asarray(S, dtype=float)
    acc = np.zeros_like(S)
    for c in reversed(list(coeffs)):
        acc = acc @ S + c * np.eye(S.shape[0])
    return acc


def is_hurwitz(eigs, margin=HURWITZ_MARGIN):
    eigs = np.atleast_1d(eigs)
    return bool(np.all(eigs.real < -margin))


def monic_roots(coeffs):
    """Roots of ``s**d + coeffs[d-1] s**(d-1) + ... + coeffs[0]``."""
    coeffs = np.asarray(coeffs, dtype=float)
    return np.roots(np.concatenate([[1.0], coeffs[::-1]]))


def chain_offsets(lengths):
    """Start index of every chain in a concatenation of chains."""
    return np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(int)


def cluster_eigenvalues(eigs, tol=COINCIDENCE_TOL):
    """Distinct values of ``eigs`` up to ``tol``."""
    out = []
    for lam in np.atleast_1d(eigs):
        if all(abs(lam - mu) > tol for mu in out):
            out.append(complex(lam))
    return out


def multiset_distance(a, b):
    """Max distance under the best greedy matching of two equal-size sets.

    Returns ``inf`` when the sizes differ.
    """
    a = list(np.atleast_1d(a).astype(complex))
    b = list(np.atleast_1d(b).astype(complex))
    if len(a) != len(b):
        return float("inf")
    worst = 0.0
    for x in a:
        j = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b[j]))
        b.pop(j)
    return worst
