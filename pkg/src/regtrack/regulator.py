"""Solutions of the regulator (Francis) equations

    Pi S = A Pi + B Gamma,    Q = C Pi.

Three routes are provided: a closed form for companion-form SISO plants,
a closed form for plants in integrator-chain form with a block-diagonal
exosystem, and a vectorised least-squares solve that makes no structural
assumptions. :func:`solve_regulator` runs the closed forms on an arbitrary
plant by passing through the canonical coordinates and back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .analysis import (build_Mk, chain_lengths, companion_coefficients,
                       invariant_zeros, is_regular, mk_scale,
                       nearest_coincidence, polynomial_scale, siso_MN)
from .canonical import brunovsky_normalize, to_controllable_canonical
from .errors import (NumericalError, PreconditionError, SolvabilityError,
                     StructuralError)
from .linalg import matrix_powers, numerical_rank
from .model import Exosystem, LinearSystem

RESID_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RegulatorSolution:
    Pi: np.ndarray
    Gamma: np.ndarray
    residual1: float
    residual2: float
    method: str

    def within(self, rtol=RESID_TOL):
        scale = 1.0 + np.linalg.norm(self.Pi)
        return self.residual1 < rtol * scale and self.residual2 < rtol * scale

    def to_dict(self):
        return {"Pi": self.Pi.tolist(), "Gamma": self.Gamma.tolist(),
                "residual1": self.residual1, "residual2": self.residual2,
                "method": self.method}


def residuals(A, B, C, S, Q, Pi, Gamma):
    r1 = np.linalg.norm(Pi @ S - A @ Pi - B @ Gamma)
    r2 = np.linalg.norm(Q - C @ Pi)
    return float(r1), float(r2)


def _finish(sys, exo, Pi, Gamma, method, rtol):
    r1, r2 = residuals(sys.A, sys.B, sys.C, exo.S, exo.Q, Pi, Gamma)
    sol = RegulatorSolution(Pi, Gamma, r1, r2, method)
    if rtol is not None and not sol.within(rtol):
        raise NumericalError(
            f"regulator residuals too large ({r1:.3g}, {r2:.3g}) for method {method}")
    return sol


def _solve_left(M, rhs, scale):
    """Row vector ``x`` with ``x M = rhs``; refuses near-singular ``M``.

    ``scale`` is the magnitude of the terms summed into ``M``.
    """
    if not is_regular(M, scale):
        return None
    lu = lu_factor(M)
    return lu_solve(lu, rhs, trans=1)


def _coincidence_error(sys, S, label):
    zeros = invariant_zeros(sys).invariant_zeros
    lam, _ = nearest_coincidence(zeros, S)
    where = f" at lambda={lam:.6g}" if lam is not None else ""
    return SolvabilityError(
        f"{label} is singular: a plant zero coincides with an exosystem eigenvalue{where}",
        eigenvalue=lam)


def solve_siso_analytic(sys: LinearSystem, exo: Exosystem, rtol=RESID_TOL) -> RegulatorSolution:
    """Closed-form solution for a SISO plant in controllable canonical form.

    The first row of ``Pi`` is ``Q M^-1`` with ``M = b(S)``; every further
    row is the previous one times ``S``; ``Gamma = Q M^-1 N`` with
    ``N = a(S) + S^n``.
    """
    if sys.m != 1 or exo.outputs != 1:
        raise PreconditionError("solve_siso_analytic needs a single-output plant and exosystem")
    M, N = siso_MN(sys, exo.S)
    _, b = companion_coefficients(sys)
    pi1 = _solve_left(M, exo.Q[0], polynomial_scale(b, exo.S))
    if pi1 is None:
        raise _coincidence_error(sys, exo.S, "M")
    Pi = np.array([pi1 @ P for P in matrix_powers(exo.S, sys.n - 1)])
    Gamma = (pi1 @ N).reshape(1, -1)
    return _finish(sys, exo, Pi, Gamma, "siso-analytic", rtol)


@dataclass(frozen=True, eq=False)
class BlockSolution:
    Pi_blocks: list      # Pi_blocks[i][j]: kappa_i x r_j
    Gamma_blocks: list   # Gamma_blocks[i][j]: 1 x r_j
    pi1_rows: list       # pi1_rows[i][j]: length r_j


def solve_mimo_analytic(sys: LinearSystem, exo: Exosystem, rtol=RESID_TOL):
    """Closed-form solution for a plant made of pure integrator chains.

    For every exosystem block ``k`` the seed rows ``pi1_{1k}..pi1_{mk}``
    solve ``[pi1_1k .. pi1_mk] M_k = [0 .. Q_k .. 0]``; block ``(i, j)`` of
    ``Pi`` then has rows ``pi1_ij S_j^l`` and ``Gamma_ij = pi1_ij S_j^kappa_i``.

    Returns ``(RegulatorSolution, BlockSolution)``.
    """
    kappa = chain_lengths(sys)
    m = sys.m
    if exo.block_sizes is None:
        if exo.outputs != 1:
            raise PreconditionError("analytic MIMO solution needs a block-diagonal exosystem")
        exo = Exosystem(exo.S, exo.Q, exo.omega0, block_sizes=(exo.r,))
    if len(exo.block_sizes) != m:
        raise StructuralError(f"exosystem has {len(exo.block_sizes)} blocks, plant has m={m}")
    blocks = exo.blocks
    pi1 = [[None] * m for _ in range(m)]
    for k, (S_k, Q_k) in enumerate(blocks):
        r = S_k.shape[0]
        Mk = build_Mk(sys.C, kappa, S_k)
        rhs = np.zeros(m * r)
        rhs[k * r:(k + 1) * r] = Q_k
        x = _solve_left(Mk, rhs, mk_scale(sys.C, kappa, S_k))
        if x is None:
            raise _coincidence_error(sys, S_k, f"M_{k + 1}")
        for i in range(m):
            pi1[i][k] = x[i * r:(i + 1) * r]
    Pi_blocks = [[None] * m for _ in range(m)]
    Gamma_blocks = [[None] * m for _ in range(m)]
    for j, (S_j, _) in enumerate(blocks):
        pw = matrix_powers(S_j, max(kappa))
        for i in range(m):
            Pi_blocks[i][j] = np.array([pi1[i][j] @ pw[l] for l in range(kappa[i])])
            Gamma_blocks[i][j] = (pi1[i][j] @ pw[kappa[i]]).reshape(1, -1)
    Pi = np.block(Pi_blocks)
    Gamma = np.block(Gamma_blocks)
    sol = _finish(sys, exo, Pi, Gamma, "mimo-analytic", rtol)
    return sol, BlockSolution(Pi_blocks, Gamma_blocks, pi1)


def regulator_operator(sys: LinearSystem, S):
    """Matrix of the linear map ``(vec Pi, vec Gamma) -> (vec(Pi S - A Pi - B Gamma), vec(C Pi))``.

    ``vec`` stacks columns, so ``vec(X Y Z) = (Z^T kron X) vec Y``.
    """
    n, m = sys.n, sys.m
    r = np.atleast_2d(S).shape[0]
    Ir = np.eye(r)
    top = np.hstack([np.kron(S.T, np.eye(n)) - np.kron(Ir, sys.A), -np.kron(Ir, sys.B)])
    bot = np.hstack([np.kron(Ir, sys.C), np.zeros((m * r, m * r))])
    return np.vstack([top, bot])


def solve_oracle(sys: LinearSystem, exo: Exosystem, rtol=RESID_TOL) -> RegulatorSolution:
    """Least-squares solve of the vectorised regulator equations.

    Works for any ``(S, Q)``, block diagonal or not.
    """
    n, m, r = sys.n, sys.m, exo.r
    if exo.outputs != m:
        raise StructuralError(f"exosystem drives {exo.outputs} outputs, plant has {m}")
    L = regulator_operator(sys, exo.S)
    rhs = np.concatenate([np.zeros(n * r), exo.Q.reshape(-1, order="F")])
    if numerical_rank(L) < L.shape[1]:
        raise _coincidence_error(sys, exo.S, "stacked regulator operator")
    z, *_ = np.linalg.lstsq(L, rhs, rcond=None)
    Pi = z[:n * r].reshape((n, r), order="F")
    Gamma = z[n * r:].reshape((m, r), order="F")
    return _finish(sys, exo, Pi, Gamma, "oracle", rtol)


def backtransform(sol: RegulatorSolution, T_tilde, K_tilde, F_tilde,
                  sys: LinearSystem, exo: Exosystem, rtol=1e-6) -> RegulatorSolution:
    """Map a solution from pre-feedback canonical coordinates to the plant's own.

    ``Pi_orig = T^-1 Pi`` and ``Gamma_orig = F Gamma - K Pi``; residuals are
    recomputed against the original ``(A, B, C)``.
    """
    Pi = np.linalg.solve(T_tilde, sol.Pi)
    Gamma = F_tilde @ sol.Gamma - K_tilde @ sol.Pi
    r1, r2 = residuals(sys.A, sys.B, sys.C, exo.S, exo.Q, Pi, Gamma)
    out = RegulatorSolution(Pi, Gamma, r1, r2, sol.method)
    if rtol is not None and not out.within(rtol):
        raise NumericalError(
            f"back-transformed residuals ({r1:.3g}, {r2:.3g}) exceed tolerance; "
            "canonical transform is ill-conditioned")
    return out


def recover_gamma(sys: LinearSystem, S, Pi):
    """``Gamma`` from ``B Gamma = Pi S - A Pi`` (``B`` has full column rank).

    Going through ``F Gamma - K Pi`` multiplies the tolerated error of the
    canonical ``Pi`` by ``|K|``, which is large whenever the canonical
    transform is badly scaled; this least-squares recovery is exact for an
    exact ``Pi`` and minimises the first residual otherwise.
    """
    G, *_ = np.linalg.lstsq(sys.B, Pi @ S - sys.A @ Pi, rcond=None)
    return G


def solve_regulator(sys: LinearSystem, exo: Exosystem, method="analytic",
                    rtol=RESID_TOL) -> RegulatorSolution:
    """Solve the regulator equations for an arbitrary square plant.

    ``method="analytic"`` goes through the canonical (SISO) or integrator-chain
    (MIMO) coordinates and transforms back; ``method="oracle"`` solves the
    vectorised system directly.
    """
    if exo.outputs != sys.m:
        raise StructuralError(f"exosystem drives {exo.outputs} outputs, plant has {sys.m}")
    if method == "oracle":
        return solve_oracle(sys, exo, rtol)
    if method != "analytic":
        raise ValueError(f"unknown method {method!r}")
    dec = to_controllable_canonical(sys)
    if sys.m == 1:
        sol = solve_siso_analytic(dec.system, exo, rtol=None)
        K, F = np.zeros((1, sys.n)), np.eye(1)
    else:
        bf = brunovsky_normalize(dec)
        sol, _ = solve_mimo_analytic(bf.system, exo, rtol=None)
        K, F = bf.K_tilde, bf.F_tilde
    Pi = backtransform(sol, dec.T_tilde, K, F, sys, exo, rtol=None).Pi
    out = _finish(sys, exo, Pi, recover_gamma(sys, exo.S, Pi), sol.method, None)
    if rtol is not None and not out.within(rtol):
        raise NumericalError(
            f"regulator residuals ({out.residual1:.3g}, {out.residual2:.3g}) exceed tolerance")
    return out


__all__ = ["RegulatorSolution", "BlockSolution", "solve_siso_analytic",
           "solve_mimo_analytic", "solve_oracle", "backtransform", "recover_gamma",
           "solve_regulator", "regulator_operator", "residuals", "companion_coefficients"]
