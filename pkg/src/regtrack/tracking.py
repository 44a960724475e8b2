"""Tracking controllers: flatness-based (FBT), regulator-based (ORT) and
zero cancellation / compensation.

All controllers have the form ``u = -K x + v`` where the feedforward ``v``
is either ``F @ omega`` (exosystem state, kind ``"exo"``) or ``F @ z``
with ``z`` the stacked reference derivatives
``(y1_d, ..., y1_d^(d1), y2_d, ...)`` (kind ``"stack"``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .analysis import (check_solvability, companion_coefficients,
                       invariant_zeros, relative_degrees)
from .canonical import (brunovsky_normalize, output_chain_matrix,
                        reldeg_transform, to_controllable_canonical)
from .errors import (NumericalError, PreconditionError, SolvabilityError,
                     StructuralError, ValidationError)
from .linalg import (COND_LIMIT, chain_offsets, is_hurwitz, monic_roots,
                     multiset_distance)
from .model import Exosystem, LinearSystem, exo_output_derivatives
from .regulator import solve_regulator

UNSTABLE_INTERNAL_DYNAMICS = "UNSTABLE_INTERNAL_DYNAMICS"
EQUIV_TOL = 1e-8
ZERO_MATCH_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ErrorDynamicsSpec:
    """Monic error polynomials ``s^d + p[d-1] s^(d-1) + ... + p[0]``, one per output."""

    p: tuple

    def __post_init__(self):
        polys = []
        for k, c in enumerate(self.p):
            c = np.array(c, dtype=float).reshape(-1)
            if c.size == 0:
                raise ValidationError(f"error polynomial {k + 1} is empty")
            if not np.all(np.isfinite(c)):
                raise ValidationError(f"error polynomial {k + 1} has non-finite coefficients")
            if not is_hurwitz(monic_roots(c)):
                raise PreconditionError(
                    f"error polynomial {k + 1} is not Hurwitz (roots {monic_roots(c)})")
            c.setflags(write=False)
            polys.append(c)
        if not polys:
            raise ValidationError("spec has no polynomials")
        object.__setattr__(self, "p", tuple(polys))

    @classmethod
    def from_poles(cls, poles):
        """Spec with the given closed-loop roots per output (conjugate pairs required)."""
        p = []
        for roots in poles:
            c = np.poly(np.asarray(roots, dtype=complex))
            if np.max(np.abs(c.imag)) > 1e-9 * max(1.0, np.max(np.abs(c))):
                raise ValidationError("complex poles must come in conjugate pairs")
            p.append(c.real[1:][::-1])
        return cls(tuple(p))

    @property
    def lengths(self):
        return tuple(len(c) for c in self.p)

    def roots(self):
        return [monic_roots(c) for c in self.p]

    def to_dict(self):
        return {"p": [c.tolist() for c in self.p]}


@dataclass(frozen=True, eq=False)
class TrackingController:
    K: np.ndarray
    kind: str                 # "exo" or "stack"
    F: np.ndarray
    frame: str = "original"
    orders: tuple = ()        # derivative orders per output for "stack"
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("exo", "stack"):
            raise ValidationError(f"unknown feedforward kind {self.kind!r}")
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if F.shape[0] != K.shape[0]:
            raise StructuralError(f"K has {K.shape[0]} rows, F has {F.shape[0]}")
        if self.kind == "stack" and F.shape[1] != sum(self.orders) + len(self.orders):
            raise StructuralError(
                f"stack feedforward needs {sum(self.orders) + len(self.orders)} columns, "
                f"got {F.shape[1]}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))

    def exo_gain(self, exo: Exosystem):
        """Feedforward acting on the exosystem state, ``v = F_exo omega``."""
        if self.kind == "exo":
            if self.F.shape[1] != exo.r:
                raise StructuralError(f"F has {self.F.shape[1]} columns, exosystem r={exo.r}")
            return self.F
        return self.F @ exo_output_derivatives(exo, self.orders)

    def to_dict(self):
        ff = {"kind": self.kind, "F": self.F.tolist()}
        if self.kind == "stack":
            ff["orders"] = list(self.orders)
        return {"K": self.K.tolist(), "feedforward": ff, "frame": self.frame,
                "warnings": list(self.warnings)}

    @classmethod
    def from_dict(cls, d):
        try:
            ff = d["feedforward"]
            return cls(np.array(d["K"], dtype=float), ff["kind"], np.array(ff["F"], dtype=float),
                       d.get("frame", "original"), tuple(ff.get("orders", ())),
                       list(d.get("warnings", [])))
        except KeyError as exc:
            raise ValidationError(f"controller: missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class EquivalenceReport:
    K_diff: float
    F_diff: float
    K_norm: float
    verdict: str
    K_ort: np.ndarray = field(repr=False, default=None)
    K_fbt: np.ndarray = field(repr=False, default=None)

    @property
    def equal(self):
        return self.verdict == "equal"

    def to_dict(self):
        return {"K_diff": self.K_diff, "F_diff": self.F_diff, "K_norm": self.K_norm,
                "verdict": self.verdict}


# -- gains ------------------------------------------------------------------------

def _spec_for(spec, lengths, what):
    if not isinstance(spec, ErrorDynamicsSpec):
        spec = ErrorDynamicsSpec(tuple(spec))
    if spec.lengths != tuple(lengths):
        raise PreconditionError(
            f"spec lengths {spec.lengths} do not match {what} {tuple(lengths)}")
    return spec


def _hurwitz_check(sys, K):
    eig = np.linalg.eigvals(sys.A - sys.B @ K)
    if not is_hurwitz(eig):
        raise PreconditionError(f"A - BK is not Hurwitz (max real part {eig.real.max():.3g})")


def place_poles(sys: LinearSystem, spec) -> np.ndarray:
    """Per-chain gain for a plant in pure integrator-chain form.

    Row ``i`` holds ``p_i0..p_i,kappa_i-1`` on the columns of chain ``i``.
    """
    from .analysis import chain_lengths

    kappa = chain_lengths(sys)
    spec = _spec_for(spec, kappa, "chain lengths")
    K = np.zeros((sys.m, sys.n))
    for i, (o, k) in enumerate(zip(chain_offsets(kappa), kappa)):
        K[i, o:o + k] = spec.p[i]
    return K


def brunovsky_gain(sys: LinearSystem, spec) -> np.ndarray:
    """Gain in the plant's own coordinates from a chain-indexed spec.

    The Brunovsky pre-feedback ``u = -K~ x~ + F~ u'`` followed by
    ``u' = -K_b x~`` gives ``K = (K~ + F~ K_b) T~``.
    """
    dec = to_controllable_canonical(sys)
    if sys.m == 1:
        a, _ = companion_coefficients(dec.system)
        K_t, F_t = -a.reshape(1, -1), np.eye(1)
        bsys = LinearSystem(*_chains(dec.kappa), np.zeros((1, sys.n)), frame="brunovsky")
    else:
        bf = brunovsky_normalize(dec)
        K_t, F_t, bsys = bf.K_tilde, bf.F_tilde, bf.system
    K_b = place_poles(bsys, spec)
    return (K_t + F_t @ K_b) @ dec.T_tilde


def _chains(kappa):
    from .canonical import brunovsky_matrices
    return brunovsky_matrices(kappa)


def output_frame_gain(sys: LinearSystem, spec) -> np.ndarray:
    """Gain placing ``A - BK`` at block-companion form in output-derivative coordinates.

    Needs ``delta = n``. With ``T`` the output chain matrix, ``K`` is the
    least-squares solution of ``(T B) K = T A - A_target T``, i.e.
    ``T (A - BK) T^-1 = A_target`` with the chains closed by the error
    polynomials. ``T`` is never inverted.
    """
    rd = relative_degrees(sys)
    if rd.delta != sys.n:
        raise PreconditionError("output not flat; compensate zeros or use ORT")
    spec = _spec_for(spec, rd.deltas, "relative degrees")
    T = output_chain_matrix(sys, rd.deltas)
    TB = T @ sys.B
    rhs = T @ sys.A - _closed_chains(rd.deltas, spec) @ T
    K, *_ = np.linalg.lstsq(TB, rhs, rcond=None)
    resid = np.linalg.norm(TB @ K - rhs)
    if resid > 1e-8 * (1 + np.linalg.norm(rhs)):
        raise NumericalError(f"output-frame placement inconsistent (residual {resid:.3g})")
    return K


def _closed_chains(lengths, spec):
    A, _ = _chains(lengths)
    for o, k, c in zip(chain_offsets(lengths), lengths, spec.p):
        A[o + k - 1, o:o + k] = -c
    return A


def gain_from_spec(sys: LinearSystem, spec, frame="auto") -> np.ndarray:
    """Stabilising gain from a spec indexed by chains or by relative degrees.

    ``frame="brunovsky"`` reads ``spec`` per Kronecker chain,
    ``frame="output"`` per output relative degree (needs ``delta = n``);
    ``"auto"`` uses the output frame when the lengths of ``spec`` fit it.
    """
    if frame == "auto":
        frame = "brunovsky"
        if sys.m > 1:
            rd = relative_degrees(sys)
            lengths = ErrorDynamicsSpec(tuple(spec.p if isinstance(spec, ErrorDynamicsSpec)
                                              else spec)).lengths
            if rd.delta == sys.n and lengths == rd.deltas:
                frame = "output"
    if frame == "output":
        return output_frame_gain(sys, spec)
    if frame == "brunovsky":
        return brunovsky_gain(sys, spec)
    raise ValueError(f"unknown frame {frame!r}")


# -- FBT / decoupling ------------------------------------------------------------------

def _decoupling(sys, spec, rd):
    """Decoupling law ``u = -(D*)^-1 (P (x_T - z) + A_d x - y_d^(delta))``.

    In plant coordinates ``K = (D*)^-1 (P T + A_d)`` with ``A_d`` the rows
    ``C_k A^delta_k``; the stack feedforward for output ``k`` is column ``k``
    of ``(D*)^-1`` times ``[p_k0, ..., p_k,delta_k-1, 1]``.
    """
    if np.linalg.cond(rd.Dstar) > COND_LIMIT:
        raise PreconditionError("decoupling matrix D* is singular; input-output decoupling fails")
    spec = _spec_for(spec, rd.deltas, "relative degrees")
    Dinv = np.linalg.inv(rd.Dstar)
    T = output_chain_matrix(sys, rd.deltas)
    Ad = np.array([sys.C[k] @ np.linalg.matrix_power(sys.A, d) for k, d in enumerate(rd.deltas)])
    P = block_diag(*[c.reshape(1, -1) for c in spec.p])
    K = Dinv @ (P @ T + Ad)
    cols = []
    for k in range(sys.m):
        cols.append(np.outer(Dinv[:, k], np.concatenate([spec.p[k], [1.0]])))
    return K, np.hstack(cols), spec


def design_fbt(sys: LinearSystem, spec) -> TrackingController:
    """Flatness-based tracking controller for a plant whose output is flat."""
    rd = relative_degrees(sys)
    if np.linalg.cond(rd.Dstar) > COND_LIMIT:
        raise PreconditionError("decoupling matrix D* is singular; input-output decoupling fails")
    if rd.delta < sys.n:
        raise PreconditionError("output not flat; compensate zeros or use ORT")
    K, F, _ = _decoupling(sys, spec, rd)
    return TrackingController(K, "stack", F, sys.frame, rd.deltas)


# -- ORT -------------------------------------------------------------------------------

def design_ort(sys: LinearSystem, exo: Exosystem, K=None, spec=None,
               method="analytic", frame="auto") -> TrackingController:
    """Regulator-based controller ``u = -K x + (K Pi + Gamma) omega``."""
    verdict = check_solvability(sys, exo)
    if not verdict.ok:
        lam = verdict.failures[0]
        raise SolvabilityError(
            f"regulator equations unsolvable: exosystem eigenvalue lambda={lam:.6g} "
            "is an invariant zero of the plant", eigenvalue=lam)
    if K is None:
        if spec is None:
            raise ValidationError("design_ort needs K or spec")
        K = gain_from_spec(sys, spec, frame)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (sys.m, sys.n):
        raise StructuralError(f"K must be {sys.m}x{sys.n}, got {K.shape}")
    _hurwitz_check(sys, K)
    if method == "analytic" and exo.block_sizes is None and exo.outputs > 1:
        method = "oracle"
    sol = solve_regulator(sys, exo, method=method)
    return TrackingController(K, "exo", K @ sol.Pi + sol.Gamma, sys.frame)


# -- zero cancellation / compensation --------------------------------------------------

def _nmp_warnings(zeros):
    return [UNSTABLE_INTERNAL_DYNAMICS] if any(z.real >= 0 for z in zeros) else []


def zero_cancel_siso(sys: LinearSystem, hat_coeffs) -> TrackingController:
    """Pole-zero cancelling controller for a SISO plant in controllable canonical form.

    With numerator ``b(s)`` of degree ``tau`` and ``delta = n - tau``, the
    closed-loop polynomial is ``b(s) (k^_1 + ... + k^_delta s^(delta-1)
    + s^delta / b_tau)``; ``K_i`` is its ``s^(i-1)`` coefficient minus
    ``a_(i-1)``. The feedforward ``[k^_1..k^_delta, 1/b_tau]`` acts on
    ``y_d .. y_d^(delta)``.
    """
    a, b = companion_coefficients(sys)
    tau = len(b) - 1
    if tau == 0:
        raise PreconditionError("plant has no zeros (tau=0): use design_fbt")
    delta = sys.n - tau
    hat = np.asarray(hat_coeffs, dtype=float).reshape(-1)
    if hat.size != delta:
        raise PreconditionError(f"need {delta} coefficients k^, got {hat.size}")
    tail = np.concatenate([hat, [1.0 / b[-1]]])
    prod = np.polynomial.polynomial.polymul(b, tail)
    K = (prod[:sys.n] - a).reshape(1, -1)
    zeros = np.roots(b[::-1])
    return TrackingController(K, "stack", tail.reshape(1, -1), sys.frame, (delta,),
                              _nmp_warnings(zeros))


def zero_cancel(sys: LinearSystem, hat_coeffs) -> TrackingController:
    """:func:`zero_cancel_siso` for a SISO plant in arbitrary coordinates."""
    if sys.m != 1:
        raise PreconditionError("zero cancellation by numerator factorisation needs m=1")
    dec = to_controllable_canonical(sys)
    c = zero_cancel_siso(dec.system, hat_coeffs)
    return TrackingController(c.K @ dec.T_tilde, c.kind, c.F, sys.frame, c.orders, c.warnings)


@dataclass(frozen=True, eq=False)
class Compensation:
    K_n: np.ndarray           # in T_n coordinates
    K: np.ndarray             # in the plant's coordinates
    reduced: LinearSystem     # delta-dimensional output-derivative part
    eta_spectrum: np.ndarray
    zeros: list
    T_n: np.ndarray
    warnings: list

    def to_dict(self):
        cpx = lambda v: [[z.real, z.imag] for z in np.asarray(v, dtype=complex)]
        return {"K_n": self.K_n.tolist(), "K": self.K.tolist(),
                "reduced": self.reduced.to_dict(), "eta_spectrum": cpx(self.eta_spectrum),
                "invariant_zeros": cpx(self.zeros), "warnings": list(self.warnings)}


def zero_compensate_mimo(sys: LinearSystem, check=True) -> Compensation:
    """Feedback that decouples the zero dynamics from the output chains.

    In ``T_n`` coordinates ``K_n = (D*)^-1 [0, A_d*]`` removes the coupling
    of the output chains to the remaining states; what is left on those
    states, ``A_eta - B_eta (D*)^-1 A_d*``, has the invariant zeros as its
    spectrum.
    """
    rd = relative_degrees(sys)
    if np.linalg.cond(rd.Dstar) > COND_LIMIT:
        raise PreconditionError("compensation inapplicable: decoupling matrix D* is singular")
    rt = reldeg_transform(sys, rd.deltas)
    Tn = rt.T_n
    Ti = np.linalg.inv(Tn)
    An, Bn, Cn = Tn @ sys.A @ Ti, Tn @ sys.B, sys.C @ Ti
    d = rd.delta
    ends = np.cumsum(rd.deltas) - 1
    Dinv = np.linalg.inv(rd.Dstar)
    A_star = An[ends, d:]
    K_n = np.hstack([np.zeros((sys.m, d)), Dinv @ A_star])
    A_eta = An[d:, d:] - Bn[d:] @ Dinv @ A_star
    spectrum = np.linalg.eigvals(A_eta) if d < sys.n else np.zeros(0, dtype=complex)
    zeros = invariant_zeros(sys).invariant_zeros if d < sys.n else []
    if check and multiset_distance(spectrum, zeros) > ZERO_MATCH_TOL * (
            1 + max([abs(z) for z in zeros], default=0.0)):
        raise NumericalError(
            f"zero-dynamics spectrum {np.sort_complex(spectrum)} does not match "
            f"invariant zeros {zeros}")
    reduced = LinearSystem(An[:d, :d], Bn[:d], Cn[:, :d], frame="output")
    return Compensation(K_n, K_n @ Tn, reduced, spectrum, list(zeros), Tn, _nmp_warnings(zeros))


def design_decoupling(sys: LinearSystem, spec) -> TrackingController:
    """Zero-compensating decoupling controller for ``delta <= n``.

    Equals :func:`zero_compensate_mimo` followed by the FBT law on the
    reduced system; the internal states follow the zero dynamics.
    """
    rd = relative_degrees(sys)
    K, F, _ = _decoupling(sys, spec, rd)
    warn = []
    if rd.delta < sys.n:
        warn = _nmp_warnings(invariant_zeros(sys).invariant_zeros)
    return TrackingController(K, "stack", F, sys.frame, rd.deltas, warn)


def design_cancel(sys: LinearSystem, spec) -> TrackingController:
    """Cancellation-mode controller from an error-dynamics spec.

    SISO plants with zeros use the numerator factorisation with
    ``k^ = p / b_tau``; everything else uses :func:`design_decoupling`.
    """
    if sys.m == 1:
        dec = to_controllable_canonical(sys)
        _, b = companion_coefficients(dec.system)
        if len(b) > 1:
            rd = relative_degrees(sys)
            spec = _spec_for(spec, rd.deltas, "relative degrees")
            return zero_cancel(sys, spec.p[0] / b[-1])
    return design_decoupling(sys, spec)


# -- equivalence -----------------------------------------------------------------------

def verify_equivalence(sys: LinearSystem, exo: Exosystem, spec,
                       tol=EQUIV_TOL) -> EquivalenceReport:
    """Build the FBT and ORT controllers for one spec and compare them.

    Gains are compared in output-derivative coordinates ``x_T = T x``;
    the ORT feedforward ``K Pi + Gamma`` is compared with the FBT stack
    gain pushed through ``y_k^(j) = Q_k S^j omega``.
    """
    rd = relative_degrees(sys)
    if rd.delta != sys.n:
        raise PreconditionError("output not flat; compensate zeros or use ORT")
    spec = _spec_for(spec, rd.deltas, "relative degrees")
    fbt = design_fbt(sys, spec)
    ort = design_ort(sys, exo, spec=spec, frame="brunovsky" if sys.m == 1 else "output")
    Ti = np.linalg.inv(output_chain_matrix(sys, rd.deltas))
    K_o, K_f = ort.K @ Ti, fbt.K @ Ti
    K_norm = float(np.linalg.norm(K_f))
    K_diff = float(np.linalg.norm(K_o - K_f))
    F_diff = float(np.linalg.norm(ort.exo_gain(exo) - fbt.exo_gain(exo)))
    bound = tol * (1 + K_norm)
    verdict = "equal" if K_diff < bound and F_diff < bound else "not equal"
    return EquivalenceReport(K_diff, F_diff, K_norm, verdict, K_o, K_f)


__all__ = ["ErrorDynamicsSpec", "TrackingController", "EquivalenceReport", "Compensation",
           "UNSTABLE_INTERNAL_DYNAMICS", "place_poles", "brunovsky_gain",
           "output_frame_gain", "gain_from_spec", "design_fbt", "design_ort",
           "zero_cancel_siso", "zero_cancel", "zero_compensate_mimo", "design_decoupling",
           "design_cancel", "verify_equivalence"]
