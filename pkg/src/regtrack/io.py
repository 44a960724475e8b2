"""JSON readers and writers for plants, exosystems, trajectories, specs and controllers.

Readers report the offending field (``plant.B[1]``) or, for malformed JSON,
the line and column.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import RegtrackError, ValidationError
from .model import (DampedSinusoid, Exosystem, Exponential, LinearSystem,
                    Polynomial, Sinusoid, TrajectorySpec, assemble_exosystem)


def read_json(path, what):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"{what}: cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{what}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _field(d, key, where):
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in d:
        raise ValidationError(f"{where}.{key}: missing field")
    return d[key]


def _matrix(v, where, ndim=2):
    try:
        M = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: not a numeric array (ragged or non-numeric)") from None
    if ndim == 2 and M.ndim == 1 and M.size:
        raise ValidationError(f"{where}: expected an array of rows")
    if M.ndim != ndim and not (ndim == 2 and M.size == 0):
        raise ValidationError(f"{where}: expected {ndim}-D array, got {M.ndim}-D")
    if not np.all(np.isfinite(M)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(M))[0])
        raise ValidationError(f"{where}{list(bad)}: non-finite entry")
    return M


def _scalar(d, key, where, default=None):
    if key not in d:
        if default is None:
            raise ValidationError(f"{where}.{key}: missing field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(f"{where}.{key}: expected a finite number")
    return float(v)


def plant_from_dict(d, where="plant") -> LinearSystem:
    A = _matrix(_field(d, "A", where), f"{where}.A")
    B = _matrix(_field(d, "B", where), f"{where}.B")
    C = _matrix(_field(d, "C", where), f"{where}.C")
    return LinearSystem(A, B, C)


def exosystem_from_dict(d, m=None, where="exo") -> Exosystem:
    w0 = _matrix(_field(d, "omega0", where), f"{where}.omega0", ndim=1)
    if "blocks" in d:
        blocks = d["blocks"]
        if not isinstance(blocks, list):
            raise ValidationError(f"{where}.blocks: expected a list")
        parsed = []
        for k, b in enumerate(blocks):
            bw = f"{where}.blocks[{k}]"
            S = _matrix(_field(b, "S", bw), f"{bw}.S")
            Q = np.atleast_1d(_matrix(_field(b, "Q", bw), f"{bw}.Q", ndim=1))
            parsed.append((S, Q))
        return assemble_exosystem(parsed, w0, m=m)
    S = _matrix(_field(d, "S", where), f"{where}.S")
    Q = _matrix(_field(d, "Q", where), f"{where}.Q")
    exo = Exosystem(S, Q, w0)
    if m is not None and exo.outputs != m:
        raise ValidationError(f"{where}.Q: drives {exo.outputs} outputs, plant has m={m}")
    return exo


def _term(d, where):
    kind = _field(d, "kind", where)
    if kind == "sin":
        return Sinusoid(_scalar(d, "freq", where), _scalar(d, "amp", where, 1.0),
                        _scalar(d, "phase", where, 0.0))
    if kind == "poly":
        return Polynomial(tuple(_matrix(_field(d, "coeffs", where), f"{where}.coeffs", 1)))
    if kind == "const":
        return Polynomial((_scalar(d, "value", where),))
    if kind == "exp":
        return Exponential(_scalar(d, "rate", where), _scalar(d, "amp", where, 1.0))
    if kind == "damped_sin":
        return DampedSinusoid(_scalar(d, "rate", where), _scalar(d, "freq", where),
                              _scalar(d, "amp", where, 1.0), _scalar(d, "phase", where, 0.0))
    raise ValidationError(f"{where}.kind: unknown term kind {kind!r}")


def trajectory_from_dict(d, where="traj") -> TrajectorySpec:
    outs = _field(d, "outputs", where)
    if not isinstance(outs, list) or not outs:
        raise ValidationError(f"{where}.outputs: expected a non-empty list")
    parsed = []
    for k, terms in enumerate(outs):
        if not isinstance(terms, list) or not terms:
            raise ValidationError(f"{where}.outputs[{k}]: expected a non-empty list of terms")
        parsed.append([_term(t, f"{where}.outputs[{k}][{j}]") for j, t in enumerate(terms)])
    return TrajectorySpec(tuple(parsed))


def spec_from_dict(d, where="spec"):
    """``{"p": [[...], ...]}`` or ``{"poles": [[...], ...]}``; poles may be ``[re, im]`` pairs."""
    from .tracking import ErrorDynamicsSpec

    if isinstance(d, dict) and "p" in d:
        p = d["p"]
        if not isinstance(p, list) or not p:
            raise ValidationError(f"{where}.p: expected a non-empty list of coefficient lists")
        return ErrorDynamicsSpec(tuple(_matrix(c, f"{where}.p[{k}]", 1) for k, c in enumerate(p)))
    if isinstance(d, dict) and "poles" in d:
        poles = []
        for k, roots in enumerate(d["poles"]):
            row = []
            for j, z in enumerate(roots):
                if isinstance(z, list) and len(z) == 2:
                    row.append(complex(z[0], z[1]))
                elif isinstance(z, (int, float)) and not isinstance(z, bool):
                    row.append(complex(z))
                else:
                    raise ValidationError(f"{where}.poles[{k}][{j}]: expected number or [re, im]")
            poles.append(row)
        return ErrorDynamicsSpec.from_poles(poles)
    raise ValidationError(f"{where}: needs field 'p' or 'poles'")


def controller_from_dict(d, where="controller"):
    from .tracking import TrackingController

    ff = _field(d, "feedforward", where)
    kind = _field(ff, "kind", f"{where}.feedforward")
    K = _matrix(_field(d, "K", where), f"{where}.K")
    F = _matrix(_field(ff, "F", f"{where}.feedforward"), f"{where}.feedforward.F")
    try:
        return TrackingController(K, kind, F, d.get("frame", "original"),
                                  tuple(ff.get("orders", ())), list(d.get("warnings", [])))
    except RegtrackError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return z.real if z.imag == 0 else [z.real, z.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, fixed indentation, trailing newline)."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))
