"""Relative degrees, invariant zeros and solvability of the regulator equations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, PreconditionError, StructuralError
from .linalg import (COINCIDENCE_TOL, COND_LIMIT, chain_offsets,
                     cluster_eigenvalues, matrix_polynomial, matrix_powers,
                     numerical_rank)
from .model import Exosystem, LinearSystem

RELDEG_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RelativeDegrees:
    deltas: tuple
    Dstar: np.ndarray

    @property
    def delta(self):
        return int(sum(self.deltas))

    def to_dict(self):
        return {"deltas": list(self.deltas), "delta": self.delta, "Dstar": self.Dstar.tolist()}


def relative_degrees(sys: LinearSystem) -> RelativeDegrees:
    """Per-output relative degree and the decoupling matrix ``D*``."""
    deltas, rows = [], []
    for k in range(sys.m):
        row = sys.C[k]
        for nu in range(1, sys.n + 1):
            d = row @ sys.B
            if np.linalg.norm(d) > RELDEG_TOL:
                deltas.append(nu)
                rows.append(d)
                break
            row = row @ sys.A
        else:
            raise PreconditionError(f"relative degree undefined for output {k + 1}")
    return RelativeDegrees(tuple(deltas), np.array(rows))


def rosenbrock_matrix(sys: LinearSystem, lam):
    n, m = sys.n, sys.m
    R = np.zeros((n + m, n + m), dtype=complex)
    R[:n, :n] = lam * np.eye(n) - sys.A
    R[:n, n:] = -sys.B
    R[n:, :n] = sys.C
    return R


def rosenbrock_rank(sys: LinearSystem, lam) -> int:
    return numerical_rank(rosenbrock_matrix(sys, lam))


@dataclass
class ZeroReport:
    invariant_zeros: list
    minimum_phase: bool
    pencil_coeffs: list  # ascending powers of lambda

    def to_dict(self):
        zs = []
        for z in self.invariant_zeros:
            zs.append(z.real if z.imag == 0 else [z.real, z.imag])
        return {"invariant_zeros": zs, "minimum_phase": self.minimum_phase,
                "pencil_coeffs": [c for c in self.pencil_coeffs]}


def _realify(z, tol=1e-9):
    z = complex(z)
    if abs(z.imag) <= tol * max(1.0, abs(z)):
        return complex(z.real, 0.0)
    return z


def invariant_zeros(sys: LinearSystem, coeff_tol=1e-9) -> ZeroReport:
    """Zeros as roots of ``det R(lambda)``, recovered by interpolation.

    The determinant is sampled at ``n + m + 1`` roots of unity scaled to a
    circle enclosing the spectrum of ``A``; on such a grid the interpolating
    polynomial is a discrete Fourier transform.
    """
    n, m = sys.n, sys.m
    N = n + m + 1
    rho = 1.0 + float(np.max(np.abs(np.linalg.eigvals(sys.A))))
    pts = rho * np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.array([np.linalg.det(rosenbrock_matrix(sys, p)) for p in pts])
    # p(rho e^{i theta_k}) = sum_j c_j rho^j e^{i j theta_k}
    scaled = np.fft.fft(vals) / N
    peak = np.max(np.abs(scaled))
    if peak == 0.0 or not np.isfinite(peak):
        raise NumericalError("system not left-invertible at this tolerance (det R == 0)")
    deg = 0
    for j in range(N):
        if abs(scaled[j]) > coeff_tol * peak:
            deg = j
    coeffs = (scaled[:deg + 1] / rho ** np.arange(deg + 1)).real
    if np.max(np.abs(coeffs)) == 0.0:
        raise NumericalError("system not left-invertible at this tolerance (det R == 0)")
    zeros = [_realify(z) for z in np.roots(coeffs[::-1])] if deg > 0 else []
    zeros.sort(key=lambda z: (z.real, z.imag))
    mp = all(z.real < 0 for z in zeros)
    return ZeroReport(zeros, mp, coeffs.tolist())


@dataclass
class SolvabilityVerdict:
    ok: bool
    failures: list = field(default_factory=list)  # offending eigenvalues of S
    ranks: dict = field(default_factory=dict)

    def to_dict(self):
        return {"ok": self.ok,
                "failures": [[z.real, z.imag] for z in self.failures]}


def check_solvability(sys: LinearSystem, exo: Exosystem) -> SolvabilityVerdict:
    """Rosenbrock rank test at every eigenvalue of ``S``."""
    if exo.outputs != sys.m:
        raise StructuralError(f"exosystem drives {exo.outputs} outputs, plant has {sys.m}")
    verdict = SolvabilityVerdict(True)
    for lam in cluster_eigenvalues(np.linalg.eigvals(exo.S)):
        rk = rosenbrock_rank(sys, lam)
        verdict.ranks[lam] = rk
        if rk < sys.n + sys.m:
            verdict.ok = False
            verdict.failures.append(lam)
    return verdict


def chain_lengths(sys: LinearSystem):
    """Chain lengths of a plant given in pure integrator-chain form.

    Raises :class:`PreconditionError` when ``(A, B)`` is not exactly of that form.
    """
    from .canonical import brunovsky_matrices

    A, B = sys.A, sys.B
    kappa = []
    for i in range(sys.m):
        col = B[:, i]
        nz = np.flatnonzero(col)
        if len(nz) != 1 or col[nz[0]] != 1.0:
            raise PreconditionError("plant is not in integrator-chain form")
        kappa.append(nz[0] + 1 - sum(kappa))
    if min(kappa) < 1 or sum(kappa) != sys.n:
        raise PreconditionError("plant is not in integrator-chain form")
    A_ref, B_ref = brunovsky_matrices(kappa)
    if not (np.array_equal(A, A_ref) and np.array_equal(B, B_ref)):
        raise PreconditionError("plant is not in integrator-chain form")
    return tuple(kappa)


def build_Mk(C, kappa, S_k):
    """Coefficient matrix of the seed rows for one exosystem block.

    ``M_k = Sbar_k (C^T kron I_rk)`` where ``Sbar_k`` is block diagonal with
    chain ``i`` contributing ``[I, S_k, ..., S_k^(kappa_i - 1)]``.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    S_k = np.atleast_2d(np.asarray(S_k, dtype=float))
    m, n = C.shape
    r = S_k.shape[0]
    if len(kappa) != m or sum(kappa) != n:
        raise StructuralError(f"kappa {tuple(kappa)} does not fit C of shape {C.shape}")
    pw = matrix_powers(S_k, max(kappa))
    Sbar = np.zeros((m * r, n * r))
    for l, (o, k) in enumerate(zip(chain_offsets(kappa), kappa)):
        for nu in range(k):
            Sbar[l * r:(l + 1) * r, (o + nu) * r:(o + nu + 1) * r] = pw[nu]
    return Sbar @ np.kron(C.T, np.eye(r))


def mk_scale(C, kappa, S_k):
    """Magnitude of the terms summed in ``M_k``: ``||Sbar_k|| ||C||``."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    pw = matrix_powers(np.atleast_2d(np.asarray(S_k, dtype=float)), max(kappa) - 1)
    return float(np.sqrt(sum(np.linalg.norm(P, 2) ** 2 for P in pw)) * np.linalg.norm(C, 2))


def polynomial_scale(coeffs, S):
    """``||c||_1 max_i ||S^i||``, a bound on the terms of ``sum c_i S^i``.

    Every coefficient enters, not only those multiplying large powers, since
    rounding in any coefficient is of order ``eps ||c||``.
    """
    pw = matrix_powers(np.atleast_2d(np.asarray(S, dtype=float)), len(coeffs) - 1)
    return float(np.sum(np.abs(coeffs)) * max(np.linalg.norm(P, 2) for P in pw))


def is_regular(M, scale=None, cond_limit=COND_LIMIT):
    """``sigma_min(M) > scale / cond_limit``.

    ``scale`` defaults to ``sigma_max(M)`` (a plain condition-number test).
    Passing the magnitude of the terms that were summed into ``M`` also
    catches cancellation to a tiny matrix, which a condition number misses
    when ``M`` is ``1 x 1``.
    """
    M = np.atleast_2d(M)
    if M.size == 0:
        return True
    sv = np.linalg.svd(M, compute_uv=False)
    ref = sv[0] if scale is None else max(scale, sv[0])
    return bool(sv[-1] > ref / cond_limit)


def companion_coefficients(sys: LinearSystem):
    """``(a, b)`` of a SISO plant in controllable canonical form.

    ``a`` are the denominator coefficients ``a_0..a_(n-1)``, ``b`` the
    numerator ``b_0..b_tau`` with ``b_tau != 0``.
    """
    if sys.m != 1:
        raise PreconditionError("companion coefficients need a SISO plant")
    n = sys.n
    A_ref = np.eye(n, k=1)
    A_ref[-1] = sys.A[-1]
    if not (np.allclose(sys.A, A_ref, atol=1e-12, rtol=0)
            and np.allclose(sys.B[:, 0], np.eye(1, n, n - 1)[0], atol=1e-12, rtol=0)):
        raise PreconditionError("SISO plant is not in controllable canonical form")
    a = -sys.A[-1].copy()
    b = sys.C[0].copy()
    nz = np.flatnonzero(np.abs(b) > RELDEG_TOL)
    if nz.size == 0:
        raise PreconditionError("output matrix is zero")
    b = b[:nz[-1] + 1]
    return a, b


def siso_MN(sys: LinearSystem, S):
    """``M = b(S)`` and ``N = a(S) + S^n`` for a companion-form SISO plant."""
    a, b = companion_coefficients(sys)
    S = np.atleast_2d(np.asarray(S, dtype=float))
    M = matrix_polynomial(b, S)
    N = matrix_polynomial(np.concatenate([a, [1.0]]), S)
    return M, N


def nearest_coincidence(zeros, S):
    """Eigenvalue of ``S`` closest to a plant zero, with its distance."""
    eig = np.linalg.eigvals(np.atleast_2d(S))
    if not len(zeros) or not len(eig):
        return None, float("inf")
    best = min(((abs(l - z), l) for l in eig for z in zeros), key=lambda p: p[0])
    return complex(best[1]), best[0]


def zero_coincides(zeros, S, tol=COINCIDENCE_TOL):
    return nearest_coincidence(zeros, S)[1] < tol
