"""Plant, exosystem and reference-trajectory types.

A reference trajectory is a finite sum of Bohl terms (polynomials,
exponentials, sinusoids, damped sinusoids). Every such term has an exact
finite-dimensional generator, so a :class:`TrajectorySpec` can always be
turned into an :class:`Exosystem`, and its derivatives are available in
closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.linalg import block_diag

from .errors import StructuralError, ValidationError
from .linalg import numerical_rank


def _frozen(M, ndim=2):
    M = np.array(M, dtype=float)
    if ndim == 2:
        M = np.atleast_2d(M)
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Square LTI plant ``x' = A x + B u``, ``y = C x``.

    ``frame`` names the coordinates the matrices are expressed in; controllers
    carry the same tag and the simulator refuses to mix frames.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    frame: str = "original"

    def __post_init__(self):
        A, B, C = (_frozen(M) for M in (self.A, self.B, self.C))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        n = A.shape[0]
        if A.shape != (n, n):
            raise StructuralError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != n:
            raise StructuralError(f"B has {B.shape[0]} rows, expected n={n}")
        if C.shape[1] != n:
            raise StructuralError(f"C has {C.shape[1]} columns, expected n={n}")
        if C.shape[0] != B.shape[1]:
            raise StructuralError(
                f"plant is not square: {B.shape[1]} inputs, {C.shape[0]} outputs"
            )
        if B.shape[1] > n:
            raise StructuralError(f"m={B.shape[1]} exceeds n={n}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def transformed(self, T, frame=None) -> "LinearSystem":
        """Similarity transform ``x_new = T x``."""
        Ti = np.linalg.inv(T)
        return LinearSystem(T @ self.A @ Ti, T @ self.B, self.C @ Ti,
                            frame=frame or self.frame)

    def to_dict(self):
        return {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist()}


@dataclass
class Diagnostics:
    checks: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    controllable: bool = False

    @property
    def ok(self) -> bool:
        return all(self.checks.values()) and self.controllable


def validate_system(sys: LinearSystem) -> Diagnostics:
    """Check the rank conditions and controllability of a plant.

    Dimension errors are raised by the :class:`LinearSystem` constructor;
    everything else is reported in the returned diagnostics.
    """
    from .canonical import controllability

    diag = Diagnostics()
    rb = numerical_rank(sys.B)
    rc = numerical_rank(sys.C)
    diag.checks["rank_B"] = rb == sys.m
    diag.checks["rank_C"] = rc == sys.m
    if rb < sys.m:
        diag.messages.append(f"rank(B) < m ({rb} < {sys.m})")
    if rc < sys.m:
        diag.messages.append(f"rank(C) < m ({rc} < {sys.m})")
    diag.controllable, _ = controllability(sys)
    if not diag.controllable:
        diag.messages.append("(A, B) is not controllable")
    return diag


def require_valid(sys: LinearSystem) -> None:
    diag = validate_system(sys)
    if not diag.ok:
        raise ValidationError("; ".join(diag.messages))


@dataclass(frozen=True, eq=False)
class Exosystem:
    """Reference generator ``w' = S w``, ``y_d = Q w``.

    Built by :func:`assemble_exosystem` the generator is block diagonal with
    one block per output, and ``block_sizes`` records the block widths.
    A general (non block diagonal) pair has ``block_sizes=None``; only the
    numeric regulator solver accepts those.
    """

    S: np.ndarray
    Q: np.ndarray
    omega0: np.ndarray
    block_sizes: tuple | None = None

    def __post_init__(self):
        S, Q = _frozen(self.S), _frozen(self.Q)
        w0 = _frozen(self.omega0, ndim=1).reshape(-1)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "omega0", w0)
        r = S.shape[0]
        if S.shape != (r, r):
            raise StructuralError(f"S must be square, got {S.shape}")
        if Q.shape[1] != r:
            raise StructuralError(f"Q has {Q.shape[1]} columns, expected r={r}")
        if w0.shape != (r,):
            raise StructuralError(f"omega0 has length {w0.size}, expected r={r}")
        if self.block_sizes is not None:
            sizes = tuple(int(s) for s in self.block_sizes)
            object.__setattr__(self, "block_sizes", sizes)
            if sum(sizes) != r or len(sizes) != Q.shape[0]:
                raise StructuralError("block sizes do not match S and Q")

    @property
    def r(self) -> int:
        return self.S.shape[0]

    @property
    def outputs(self) -> int:
        return self.Q.shape[0]

    @property
    def blocks(self):
        """List of ``(S_k, Q_k)`` pairs, ``Q_k`` as a 1-D row."""
        if self.block_sizes is None:
            raise StructuralError("exosystem is not block diagonal")
        out, i = [], 0
        for k, rk in enumerate(self.block_sizes):
            out.append((self.S[i:i + rk, i:i + rk].copy(), self.Q[k, i:i + rk].copy()))
            i += rk
        return out

    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.block_sizes)]).astype(int)

    def warnings(self):
        """Diagnostics that do not prevent use of the exosystem."""
        msgs = []
        eig = np.linalg.eigvals(self.S) if self.r else np.array([])
        if np.any(eig.real < 0):
            msgs.append("exosystem has eigenvalues with negative real part "
                        "(modes vanish asymptotically)")
        return msgs

    def to_dict(self):
        if self.block_sizes is None:
            return {"S": self.S.tolist(), "Q": self.Q.tolist(),
                    "omega0": self.omega0.tolist()}
        return {"blocks": [{"S": S.tolist(), "Q": Q.tolist()} for S, Q in self.blocks],
                "omega0": self.omega0.tolist()}


def assemble_exosystem(blocks, omega0, m=None) -> Exosystem:
    """Stack per-output generators into a block-diagonal exosystem.

    Parameters
    ----------
    blocks : sequence of (S_k, Q_k)
        ``S_k`` is ``r_k x r_k`` and ``Q_k`` a row of length ``r_k``.
    omega0 : array_like
        Initial exosystem state, length ``sum(r_k)``.
    m : int, optional
        Number of plant outputs; if given the block count must match.
    """
    if m is not None and len(blocks) != m:
        raise ValidationError(f"exosystem has {len(blocks)} blocks, plant has m={m} outputs")
    if not blocks:
        raise ValidationError("exosystem needs at least one block")
    Ss, Qs = [], []
    for k, (S_k, Q_k) in enumerate(blocks):
        S_k = np.atleast_2d(np.asarray(S_k, dtype=float))
        Q_k = np.asarray(Q_k, dtype=float).reshape(-1)
        if S_k.shape[0] != S_k.shape[1]:
            raise ValidationError(f"block {k}: S is not square")
        if Q_k.size != S_k.shape[0]:
            raise ValidationError(
                f"block {k}: width mismatch, Q has {Q_k.size} entries, S is {S_k.shape[0]}x{S_k.shape[0]}"
            )
        Ss.append(S_k)
        Qs.append(Q_k.reshape(1, -1))
    exo = Exosystem(block_diag(*Ss), block_diag(*Qs), omega0,
                    block_sizes=tuple(S.shape[0] for S in Ss))
    for msg in exo.warnings():
        warnings.warn(msg, stacklevel=2)
    return exo


# -- Bohl terms ---------------------------------------------------------------

@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple  # ascending powers of t


@dataclass(frozen=True)
class Exponential:
    rate: float
    amp: float = 1.0


@dataclass(frozen=True)
class Sinusoid:
    freq: float
    amp: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class DampedSinusoid:
    rate: float
    freq: float
    amp: float = 1.0
    phase: float = 0.0


BohlTerm = Union[Polynomial, Exponential, Sinusoid, DampedSinusoid]


@dataclass(frozen=True)
class TrajectorySpec:
    """Per-output list of Bohl terms; each output is the sum of its terms."""

    outputs: tuple

    def __post_init__(self):
        outs = tuple(tuple(terms) for terms in self.outputs)
        if not outs or any(len(t) == 0 for t in outs):
            raise ValidationError("every output needs at least one term")
        object.__setattr__(self, "outputs", outs)

    @property
    def m(self):
        return len(self.outputs)

    def __call__(self, t):
        return eval_derivative_stack(self, [0] * self.m, t).values()[:, 0]


def _trim(coeffs):
    c = list(np.asarray(coeffs, dtype=float).reshape(-1))
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return c or [0.0]


def _term_block(term):
    """Minimal ``(S, Q, w0)`` reproducing one Bohl term."""
    if isinstance(term, Polynomial):
        c = _trim(term.coeffs)
        d = len(c) - 1
        S = np.eye(d + 1, k=1)
        # state = (p, p', ..., p^(d)); p^(j)(0) = j! c_j
        w0 = np.array([math.factorial(j) * c[j] for j in range(d + 1)])
        Q = np.eye(1, d + 1).reshape(-1)
        return S, Q, w0
    if isinstance(term, Exponential):
        return np.array([[term.rate]]), np.array([1.0]), np.array([term.amp])
    if isinstance(term, (Sinusoid, DampedSinusoid)):
        sigma = getattr(term, "rate", 0.0)
        w = term.freq
        if w == 0.0:
            val = term.amp * math.sin(term.phase)
            if sigma == 0.0:
                return _term_block(Polynomial((val,)))
            return _term_block(Exponential(sigma, val))
        # state = amp e^{sigma t} (sin(wt+phi), cos(wt+phi))
        S = np.array([[sigma, w], [-w, sigma]])
        w0 = term.amp * np.array([math.sin(term.phase), math.cos(term.phase)])
        return S, np.array([1.0, 0.0]), w0
    raise ValidationError(f"unsupported term kind {type(term).__name__}")


def realize_bohl(spec: TrajectorySpec) -> Exosystem:
    """Exosystem whose output reproduces ``spec`` exactly.

    One minimal block per term; terms of one output are concatenated, so
    block ``k`` of the result generates output ``k``.
    """
    blocks, w0 = [], []
    for terms in spec.outputs:
        parts = [_term_block(t) for t in terms]
        blocks.append((block_diag(*[p[0] for p in parts]),
                       np.concatenate([p[1] for p in parts])))
        w0.extend(np.concatenate([p[2] for p in parts]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exo = assemble_exosystem(blocks, w0)
    for msg in exo.warnings():
        warnings.warn(msg, stacklevel=2)
    return exo


def _term_derivatives(term, order, t):
    """Array of shape ``(order + 1, len(t))``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((order + 1,) + t.shape)
    if isinstance(term, Polynomial):
        p = np.polynomial.Polynomial(_trim(term.coeffs))
        for k in range(order + 1):
            out[k] = p(t)
            p = p.deriv()
        return out
    if isinstance(term, Exponential):
        for k in range(order + 1):
            out[k] = term.amp * term.rate ** k * np.exp(term.rate * t)
        return out
    if isinstance(term, (Sinusoid, DampedSinusoid)):
        # Im(c e^{lam t}) with c = amp e^{i phi}; d^k/dt^k multiplies by lam^k
        lam = complex(getattr(term, "rate", 0.0), term.freq)
        c = term.amp * np.exp(1j * term.phase)
        base = c * np.exp(lam * t)
        for k in range(order + 1):
            out[k] = np.imag(lam ** k * base)
        return out
    raise ValidationError(f"unsupported term kind {type(term).__name__}")


@dataclass
class DerivativeStack:
    """``stacks[k][j]`` is the j-th derivative of output k."""

    stacks: list

    def values(self):
        """Orders-padded 2-D view ``(m, max_order + 1)``."""
        width = max(len(s) for s in self.stacks)
        out = np.zeros((len(self.stacks), width))
        for k, s in enumerate(self.stacks):
            out[k, :len(s)] = s
        return out

    def flat(self):
        return np.concatenate([np.asarray(s) for s in self.stacks])


def eval_derivative_stack(spec: TrajectorySpec, orders: Sequence[int], t) -> DerivativeStack:
    """Exact derivatives ``y_d^(0..orders[k])`` of each output at time ``t``.

    ``t`` may be a scalar or an array; with an array every stack entry is an
    array over ``t``.
    """
    if len(orders) != spec.m:
        raise ValidationError(f"got {len(orders)} orders for {spec.m} outputs")
    stacks = []
    for terms, order in zip(spec.outputs, orders):
        acc = sum(_term_derivatives(term, int(order), t) for term in terms)
        stacks.append(acc)
    return DerivativeStack(stacks)


def exo_output_derivatives(exo: Exosystem, orders: Sequence[int]):
    """Rows ``Q_k S^j`` mapping the exosystem state to ``y_k^(j)``.

    Returns a ``(sum(orders) + m) x r`` matrix ordered output by output,
    matching the flattened :class:`DerivativeStack` layout.
    """
    if len(orders) != exo.outputs:
        raise ValidationError(f"got {len(orders)} orders for {exo.outputs} outputs")
    rows = []
    for k, order in enumerate(orders):
        row = exo.Q[k]
        for _ in range(int(order) + 1):
            rows.append(row)
            row = row @ exo.S
    return np.array(rows).reshape(-1, exo.r)
