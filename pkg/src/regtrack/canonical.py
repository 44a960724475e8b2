"""Controllable canonical form, Brunovsky normalisation and output-chain transform.

Conventions
-----------
* Kronecker indices come from the input-wise column search
  ``b_1..b_m, A b_1..A b_m, ...``.
* The Luenberger transform uses, for chain ``i``, the row ``q_i`` of the
  inverse of the chain-ordered Krylov matrix that sits at the last position
  of chain ``i``; the new coordinates are ``q_i, q_i A, ..., q_i A^(k_i - 1)``.
  In these coordinates ``B`` has unit, upper-triangular last rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError
from .linalg import (COND_LIMIT, SNAP_TOL, chain_offsets, numerical_rank,
                     snap)
from .model import LinearSystem


def controllability(sys: LinearSystem):
    """Return ``(is_controllable, [B, AB, ..., A^(n-1) B])``."""
    cols = [sys.B]
    for _ in range(sys.n - 1):
        cols.append(sys.A @ cols[-1])
    W = np.hstack(cols)
    # columns scaled to unit norm so growth of A^k does not swamp the rank test
    norms = np.linalg.norm(W, axis=0)
    Wn = W[:, norms > 0] / norms[norms > 0]
    return numerical_rank(Wn) == sys.n, W


def _kronecker_search(sys):
    """Kept Krylov columns as ``{input: [A^0 b_i, A^1 b_i, ...]}``."""
    n, m = sys.n, sys.m
    kept = []
    chains = {i: [] for i in range(m)}
    alive = set(range(m))
    v = [sys.B[:, i].copy() for i in range(m)]
    for _ in range(n):
        for i in range(m):
            if i not in alive:
                continue
            col = v[i]
            nrm = np.linalg.norm(col)
            cand = kept + [col / nrm] if nrm > 0 else None
            if cand is not None and numerical_rank(np.column_stack(cand)) == len(cand):
                kept.append(col / nrm)
                chains[i].append(col)
                v[i] = sys.A @ col
            else:
                # once A^j b_i depends on earlier columns so do all its successors
                alive.discard(i)
        if len(kept) == n or not alive:
            break
    return chains, len(kept)


def kronecker_indices(sys: LinearSystem):
    """Controllability indices ``kappa_1..kappa_m`` (one per input)."""
    chains, total = _kronecker_search(sys)
    if total != sys.n:
        raise PreconditionError("system is not controllable")
    kappa = [len(chains[i]) for i in range(sys.m)]
    if min(kappa) < 1:
        raise PreconditionError("an input column is dependent on the others (rank B < m)")
    return kappa


@dataclass(frozen=True, eq=False)
class CanonicalDecomposition:
    T_tilde: np.ndarray
    kappa: tuple
    A_tilde: np.ndarray
    B_tilde: np.ndarray
    C_tilde: np.ndarray
    cond: float

    @property
    def system(self):
        """Canonical-frame plant with the structural zeros and ones imposed exactly."""
        A, B = brunovsky_matrices(self.kappa)
        ends = np.cumsum(self.kappa) - 1
        A[ends] = self.A_tilde[ends]
        for i, e in enumerate(ends):
            B[e, i + 1:] = self.B_tilde[e, i + 1:]
        return LinearSystem(A, B, self.C_tilde, frame="canonical")

    def to_dict(self):
        return {"T_tilde": self.T_tilde.tolist(), "kappa": list(self.kappa),
                "A_tilde": self.A_tilde.tolist(), "B_tilde": self.B_tilde.tolist(),
                "C_tilde": self.C_tilde.tolist(), "cond_T_tilde": self.cond}


def canonical_structure_residual(A, B, kappa):
    """Largest deviation of ``(A, B)`` from the controllable canonical pattern.

    Non-last rows of each chain must be unit shifts in ``A`` and zero in
    ``B``; the last rows of ``B`` must be unit upper triangular. The last
    rows of ``A`` are free.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    n = A.shape[0]
    off = chain_offsets(kappa)
    worst = 0.0
    for i, (o, k) in enumerate(zip(off, kappa)):
        for row in range(o, o + k - 1):
            target = np.zeros(n)
            target[row + 1] = 1.0
            worst = max(worst, np.max(np.abs(A[row] - target)), np.max(np.abs(B[row])))
        last = B[o + k - 1]
        target = np.zeros(B.shape[1])
        target[i] = 1.0
        target[i + 1:] = last[i + 1:]
        worst = max(worst, np.max(np.abs(last - target)))
    return worst


def to_controllable_canonical(sys: LinearSystem) -> CanonicalDecomposition:
    """Luenberger controllable canonical form ``(T A T^-1, T B, C T^-1)``."""
    chains, total = _kronecker_search(sys)
    if total != sys.n:
        raise PreconditionError("system is not controllable")
    kappa = tuple(len(chains[i]) for i in range(sys.m))
    if min(kappa) < 1:
        raise PreconditionError("rank(B) < m")
    L = np.column_stack([c for i in range(sys.m) for c in chains[i]])
    Linv = np.linalg.inv(L)
    ends = np.cumsum(kappa) - 1
    rows = []
    for i, k in enumerate(kappa):
        q = Linv[ends[i]]
        for _ in range(k):
            rows.append(q)
            q = q @ sys.A
    T = np.array(rows)
    cond = float(np.linalg.cond(T))
    if cond > COND_LIMIT:
        warnings.warn(f"canonical transform is ill-conditioned (cond={cond:.3g})")
    Ti = np.linalg.inv(T)
    At, Bt, Ct = T @ sys.A @ Ti, T @ sys.B, sys.C @ Ti
    resid = canonical_structure_residual(At, Bt, kappa)
    if resid > SNAP_TOL:
        raise NumericalError(f"canonical structure residual {resid:.3g} exceeds {SNAP_TOL}")
    return CanonicalDecomposition(T, kappa, At, Bt, Ct, cond)


def brunovsky_matrices(kappa):
    """Pure integrator chains ``(A', B')`` with chain lengths ``kappa``."""
    n, m = int(sum(kappa)), len(kappa)
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    for i, (o, k) in enumerate(zip(chain_offsets(kappa), kappa)):
        for j in range(k - 1):
            A[o + j, o + j + 1] = 1.0
        B[o + k - 1, i] = 1.0
    return A, B


@dataclass(frozen=True, eq=False)
class BrunovskyForm:
    """Pre-feedback ``u = -K_tilde x_tilde + F_tilde u'`` and the chains it yields."""

    K_tilde: np.ndarray
    F_tilde: np.ndarray
    A_prime: np.ndarray
    B_prime: np.ndarray
    C_tilde: np.ndarray
    kappa: tuple
    decomposition: CanonicalDecomposition

    @property
    def system(self):
        return LinearSystem(self.A_prime, self.B_prime, self.C_tilde, frame="brunovsky")

    def to_dict(self):
        return {"K_tilde": self.K_tilde.tolist(), "F_tilde": self.F_tilde.tolist(),
                "A_prime": self.A_prime.tolist(), "B_prime": self.B_prime.tolist(),
                "C_tilde": self.C_tilde.tolist(), "kappa": list(self.kappa)}


def brunovsky_normalize(dec: CanonicalDecomposition) -> BrunovskyForm:
    """Cancel the free rows of the canonical form by static feedback."""
    ends = np.cumsum(dec.kappa) - 1
    Bl = np.triu(dec.B_tilde[ends], 1) + np.eye(len(dec.kappa))
    Al = dec.A_tilde[ends]
    F = np.linalg.inv(Bl)
    K = F @ Al
    A_raw = dec.A_tilde - dec.B_tilde @ K
    B_raw = dec.B_tilde @ F
    A_ref, B_ref = brunovsky_matrices(dec.kappa)
    A_p, B_p = snap(A_raw), snap(B_raw)
    if not (np.array_equal(A_p, A_ref) and np.array_equal(B_p, B_ref)):
        err = max(np.max(np.abs(A_raw - A_ref)), np.max(np.abs(B_raw - B_ref)))
        raise NumericalError(f"Brunovsky structure violated after snapping (residual {err:.3g})")
    return BrunovskyForm(K, F, A_p, B_p, dec.C_tilde, dec.kappa, dec)


def flat_output_indices(kappa):
    """1-based positions of the chain heads, i.e. the flat output components."""
    return [int(o) + 1 for o in chain_offsets(kappa)]


@dataclass(frozen=True, eq=False)
class RelDegTransform:
    T: np.ndarray
    T_n: np.ndarray
    delta_list: tuple

    @property
    def delta(self):
        return int(sum(self.delta_list))


def output_chain_matrix(sys: LinearSystem, deltas):
    """Rows ``C_k, C_k A, ..., C_k A^(delta_k - 1)`` for every output."""
    rows = []
    for k, d in enumerate(deltas):
        row = sys.C[k]
        for _ in range(int(d)):
            rows.append(row)
            row = row @ sys.A
    return np.array(rows).reshape(-1, sys.n)


def reldeg_transform(sys: LinearSystem, deltas) -> RelDegTransform:
    """Output-derivative coordinates, completed to a regular ``T_n``.

    The completion appends, one at a time, the standard basis row that
    maximises the smallest singular value of the partial stack.
    """
    T = output_chain_matrix(sys, deltas)
    delta = T.shape[0]
    if numerical_rank(T) < delta:
        raise NumericalError(
            f"rank(T) < delta={delta}; relative degrees are inconsistent with the plant")
    Tn = T
    pool = list(range(sys.n))
    while Tn.shape[0] < sys.n:
        best, best_s = None, -1.0
        for j in pool:
            cand = np.vstack([Tn, np.eye(1, sys.n, j)])
            s = np.linalg.svd(cand, compute_uv=False)[-1]
            if s > best_s + 1e-12:
                best, best_s = j, s
        Tn = np.vstack([Tn, np.eye(1, sys.n, best)])
        pool.remove(best)
    if numerical_rank(Tn) < sys.n:
        raise NumericalError("could not complete T to a regular matrix")
    return RelDegTransform(T, Tn, tuple(int(d) for d in deltas))
