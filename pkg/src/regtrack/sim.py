"""Fixed-step RK4 closed-loop simulation and tracking metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import PreconditionError, StructuralError, ValidationError
from .model import (Exosystem, LinearSystem, TrajectorySpec,
                    eval_derivative_stack)
from .tracking import TrackingController

OVERFLOW_GUARD = 1e9
DEFAULT_DT = 1e-3


@dataclass(frozen=True, eq=False)
class SimTrace:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    y_d: np.ndarray
    e: np.ndarray
    omega: Optional[np.ndarray] = None
    diverged: bool = False

    def __len__(self):
        return len(self.t)

    def header(self):
        n, m = self.x.shape[1], self.u.shape[1]
        cols = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)]
        cols += [f"y{i + 1}" for i in range(m)] + [f"yd{i + 1}" for i in range(m)]
        cols += [f"e{i + 1}" for i in range(m)]
        if self.omega is not None:
            cols += [f"w{i + 1}" for i in range(self.omega.shape[1])]
        return cols

    def table(self):
        parts = [self.t[:, None], self.x, self.u, self.y, self.y_d, self.e]
        if self.omega is not None:
            parts.append(self.omega)
        return np.hstack(parts)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            for row in self.table():
                w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class TrackingMetrics:
    final_error: float
    decay_rate: Union[float, str, None]
    diverged: bool

    def to_dict(self):
        return {"final_error": self.final_error, "decay_rate": self.decay_rate,
                "diverged": self.diverged}


def rk4_propagator(M, h):
    """One classical RK4 step of ``z' = M z`` as a matrix.

    For a linear time-invariant field the four stages collapse to the
    degree-4 Taylor polynomial of ``exp(h M)``.
    """
    hM = h * np.asarray(M)
    I = np.eye(hM.shape[0])
    return I + hM @ (I + hM @ (I + hM @ (I + hM / 4) / 3) / 2)


def _grid(horizon, dt):
    if not (horizon > 0 and dt > 0):
        raise ValidationError("horizon and dt must be positive")
    steps = int(round(horizon / dt))
    if steps < 1:
        raise ValidationError("horizon shorter than one step")
    return steps


def simulate(sys: LinearSystem, controller: TrackingController,
             reference: Union[Exosystem, TrajectorySpec], x0=None, horizon=10.0,
             dt=DEFAULT_DT, omega0=None) -> SimTrace:
    """Integrate ``x' = A x + B u`` (and ``omega' = S omega``) with ``u = -K x + v``.

    ``omega0`` overrides the exosystem's stored initial state. The run stops
    early, with ``diverged`` set, once any state exceeds the overflow guard.
    """
    if controller.frame != sys.frame:
        raise PreconditionError(
            f"controller frame {controller.frame!r} does not match plant frame {sys.frame!r}")
    if controller.K.shape != (sys.m, sys.n):
        raise StructuralError(f"controller K is {controller.K.shape}, plant needs {(sys.m, sys.n)}")
    steps = _grid(horizon, dt)
    x0 = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (sys.n,):
        raise StructuralError(f"x0 must have length {sys.n}")
    if isinstance(reference, Exosystem):
        return _simulate_exo(sys, controller, reference, x0, steps, dt, omega0)
    if isinstance(reference, TrajectorySpec):
        return _simulate_traj(sys, controller, reference, x0, steps, dt)
    raise ValidationError("reference must be an Exosystem or a TrajectorySpec")


def _simulate_exo(sys, ctrl, exo, x0, steps, dt, omega0):
    if exo.outputs != sys.m:
        raise StructuralError(f"exosystem drives {exo.outputs} outputs, plant has {sys.m}")
    n, r = sys.n, exo.r
    Fw = ctrl.exo_gain(exo)
    M = np.block([[sys.A - sys.B @ ctrl.K, sys.B @ Fw],
                  [np.zeros((r, n)), exo.S]])
    P = rk4_propagator(M, dt)
    w0 = exo.omega0 if omega0 is None else np.asarray(omega0, dtype=float).reshape(-1)
    z = np.empty((steps + 1, n + r))
    z[0] = np.concatenate([x0, w0])
    diverged = False
    last = steps
    for k in range(steps):
        z[k + 1] = P @ z[k]
        if not np.all(np.abs(z[k + 1, :n]) <= OVERFLOW_GUARD):
            diverged, last = True, k + 1
            break
    z = z[:last + 1]
    x, w = z[:, :n], z[:, n:]
    u = -x @ ctrl.K.T + w @ Fw.T
    y = x @ sys.C.T
    yd = w @ exo.Q.T
    t = dt * np.arange(last + 1)
    return SimTrace(t, x, u, y, yd, y - yd, w, diverged)


def _simulate_traj(sys, ctrl, spec, x0, steps, dt):
    if ctrl.kind != "stack":
        raise PreconditionError("an exosystem feedforward needs an exosystem reference")
    if spec.m != sys.m:
        raise StructuralError(f"trajectory has {spec.m} outputs, plant has {sys.m}")
    # stage times of every step lie on the half-step grid
    th = 0.5 * dt * np.arange(2 * steps + 1)
    stack = eval_derivative_stack(spec, ctrl.orders, th).flat()   # (dim, len(th))
    v = (ctrl.F @ stack).T
    Acl = sys.A - sys.B @ ctrl.K
    f = lambda x, k: Acl @ x + sys.B @ v[k]
    x = np.empty((steps + 1, sys.n))
    x[0] = x0
    diverged = False
    last = steps
    for k in range(steps):
        xk = x[k]
        k1 = f(xk, 2 * k)
        k2 = f(xk + 0.5 * dt * k1, 2 * k + 1)
        k3 = f(xk + 0.5 * dt * k2, 2 * k + 1)
        k4 = f(xk + dt * k3, 2 * k + 2)
        x[k + 1] = xk + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.abs(x[k + 1]) <= OVERFLOW_GUARD):
            diverged, last = True, k + 1
            break
    x = x[:last + 1]
    t = dt * np.arange(last + 1)
    u = -x @ ctrl.K.T + v[:2 * last + 1:2]
    y = x @ sys.C.T
    yd = spec_values(spec, t)
    return SimTrace(t, x, u, y, yd, y - yd, None, diverged)


def spec_values(spec: TrajectorySpec, t):
    """``y_d(t)`` as an array of shape ``(len(t), m)``."""
    st = eval_derivative_stack(spec, [0] * spec.m, np.asarray(t, dtype=float))
    return np.array([s[0] for s in st.stacks]).T


def metrics(trace: SimTrace) -> TrackingMetrics:
    """Final error norm and the slope of ``log ||e||`` over the last half."""
    if len(trace) == 0:
        raise ValidationError("empty trace")
    norms = np.linalg.norm(trace.e, axis=1)
    final = float(norms[-1])
    if trace.diverged:
        return TrackingMetrics(final, None, True)
    if not np.any(norms):
        return TrackingMetrics(final, "exact", False)
    half = len(norms) // 2
    tt, nn = trace.t[half:], norms[half:]
    keep = nn > 0
    if keep.sum() < 2:
        return TrackingMetrics(final, None, False)
    slope = np.polyfit(tt[keep], np.log(nn[keep]), 1)[0]
    return TrackingMetrics(final, float(slope), False)


def internal_spectrum(sys: LinearSystem, controller: TrackingController):
    """Eigenvalues of ``A - BK``, sorted by real part."""
    if controller.frame != sys.frame:
        raise PreconditionError(
            f"controller frame {controller.frame!r} does not match plant frame {sys.frame!r}")
    eig = np.linalg.eigvals(sys.A - sys.B @ controller.K)
    return eig[np.lexsort((eig.imag, eig.real))]


__all__ = ["SimTrace", "TrackingMetrics", "simulate", "metrics", "internal_spectrum",
           "rk4_propagator", "OVERFLOW_GUARD"]
