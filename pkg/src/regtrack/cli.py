"""Command-line front end.

Exit codes: 0 ok, 1 compare verdict "not equal", 2 validation or usage,
3 solvability, 4 precondition, 5 divergence.
"""

from __future__ import annotations

import argparse
import sys as _sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .analysis import invariant_zeros, relative_degrees
from .canonical import (brunovsky_normalize, flat_output_indices, kronecker_indices,
                        reldeg_transform, to_controllable_canonical)
from .errors import NumericalError, PreconditionError, RegtrackError, ValidationError
from .model import realize_bohl, validate_system
from .regulator import RESID_TOL, solve_regulator
from .sim import DEFAULT_DT, metrics, simulate
from .tracking import (design_cancel, design_fbt, design_ort,
                       verify_equivalence)

EXIT_OK, EXIT_NOT_EQUAL, EXIT_VALIDATION = 0, 1, 2
EXIT_SOLVABILITY, EXIT_PRECONDITION, EXIT_DIVERGENCE = 3, 4, 5


@dataclass
class RunConfig:
    command: str
    plant: Optional[Path] = None
    exo: Optional[Path] = None
    traj: Optional[Path] = None
    spec: Optional[Path] = None
    controller: Optional[Path] = None
    method: str = "analytic"
    mode: str = "ort"
    dt: float = DEFAULT_DT
    horizon: float = 10.0
    out: Path = Path(".")
    tol: float = RESID_TOL
    x0: Optional[list] = None

    def __post_init__(self):
        for name in ("plant", "exo", "traj", "spec", "controller"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ValidationError(f"--{name}: no such file {p}")
        for name in ("dt", "horizon", "tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"--{name} must be positive")
        self.out = Path(self.out)


def _need(cfg, name):
    p = getattr(cfg, name)
    if p is None:
        raise ValidationError(f"{cfg.command} needs --{name}")
    return p


def _plant(cfg):
    return io.plant_from_dict(io.read_json(_need(cfg, "plant"), "plant"))


def _exo(cfg, m):
    return io.exosystem_from_dict(io.read_json(_need(cfg, "exo"), "exo"), m=m)


def _spec(cfg):
    return io.spec_from_dict(io.read_json(_need(cfg, "spec"), "spec"))


def _emit(cfg, name, obj):
    cfg.out.mkdir(parents=True, exist_ok=True)
    io.write_json(cfg.out / name, obj)
    print(cfg.out / name)


def cmd_analyze(cfg):
    sys = _plant(cfg)
    diag = validate_system(sys)
    report = {"n": sys.n, "m": sys.m, "controllable": bool(diag.controllable),
              "checks": diag.checks, "messages": diag.messages}
    if diag.controllable:
        report["kappa"] = kronecker_indices(sys)
    try:
        rd = relative_degrees(sys)
        report.update(rd.to_dict())
    except PreconditionError as exc:
        report["relative_degree_error"] = str(exc)
    try:
        zr = invariant_zeros(sys)
        report["invariant_zeros"] = zr.invariant_zeros
        report["minimum_phase"] = zr.minimum_phase
    except (PreconditionError, NumericalError) as exc:
        report["invariant_zeros_error"] = str(exc)
    _emit(cfg, "analysis.json", report)
    # rank defects make the plant unusable downstream
    return EXIT_OK if all(diag.checks.values()) else EXIT_VALIDATION


def cmd_canon(cfg):
    sys = _plant(cfg)
    dec = to_controllable_canonical(sys)
    report = {"canonical": dec.to_dict(), "flat_output_indices": flat_output_indices(dec.kappa)}
    if sys.m > 1:
        report["brunovsky"] = brunovsky_normalize(dec).to_dict()
    rd = relative_degrees(sys)
    rt = reldeg_transform(sys, rd.deltas)
    report["reldeg"] = {"deltas": list(rt.delta_list), "T": rt.T, "T_n": rt.T_n}
    _emit(cfg, "canon.json", report)
    return EXIT_OK


def cmd_solve(cfg):
    sys = _plant(cfg)
    exo = _exo(cfg, sys.m)
    sol = solve_regulator(sys, exo, method=cfg.method, rtol=cfg.tol)
    _emit(cfg, "solution.json", sol.to_dict())
    return EXIT_OK


def _reference(cfg, m):
    if cfg.traj is not None:
        traj = io.trajectory_from_dict(io.read_json(cfg.traj, "traj"))
        if traj.m != m:
            raise ValidationError(f"traj: {traj.m} outputs, plant has m={m}")
        return traj
    return _exo(cfg, m)


def _design(cfg, sys):
    spec = _spec(cfg)
    if cfg.mode == "fbt":
        return design_fbt(sys, spec)
    if cfg.mode == "cancel":
        return design_cancel(sys, spec)
    ref = _reference(cfg, sys.m)
    exo = ref if cfg.traj is None else realize_bohl(ref)
    return design_ort(sys, exo, spec=spec, method=cfg.method)


def cmd_design(cfg):
    sys = _plant(cfg)
    ctrl = _design(cfg, sys)
    _emit(cfg, "controller.json", ctrl.to_dict())
    for w in ctrl.warnings:
        print(f"warning: {w}", file=_sys.stderr)
    return EXIT_OK


def cmd_compare(cfg):
    sys = _plant(cfg)
    exo = _exo(cfg, sys.m)
    rep = verify_equivalence(sys, exo, _spec(cfg))
    _emit(cfg, "equivalence.json", rep.to_dict())
    return EXIT_OK if rep.equal else EXIT_NOT_EQUAL


def cmd_simulate(cfg):
    sys = _plant(cfg)
    if cfg.controller is not None:
        ctrl = io.controller_from_dict(io.read_json(cfg.controller, "controller"))
    else:
        ctrl = _design(cfg, sys)
    ref = _reference(cfg, sys.m)
    if ctrl.kind == "exo" and cfg.traj is not None:
        ref = realize_bohl(ref)
    x0 = None
    if cfg.x0 is not None:
        x0 = np.array(cfg.x0, dtype=float)
        if x0.shape != (sys.n,):
            raise ValidationError(f"--x0 needs {sys.n} values, got {x0.size}")
    trace = simulate(sys, ctrl, ref, x0, cfg.horizon, cfg.dt)
    cfg.out.mkdir(parents=True, exist_ok=True)
    trace.to_csv(cfg.out / "trace.csv")
    met = metrics(trace)
    out = met.to_dict()
    out["warnings"] = list(ctrl.warnings)
    out["t_end"] = float(trace.t[-1])
    _emit(cfg, "metrics.json", out)
    return EXIT_DIVERGENCE if met.diverged else EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "canon": cmd_canon, "solve": cmd_solve,
            "design": cmd_design, "compare": cmd_compare, "simulate": cmd_simulate}


def build_parser():
    ap = argparse.ArgumentParser(prog="regtrack",
                                 description="Output regulation and flatness-based tracking workbench")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--plant", type=Path)
    ap.add_argument("--exo", type=Path)
    ap.add_argument("--traj", type=Path)
    ap.add_argument("--spec", type=Path)
    ap.add_argument("--controller", type=Path, help="controller JSON for simulate")
    ap.add_argument("--method", choices=["analytic", "oracle"], default="analytic")
    ap.add_argument("--mode", choices=["ort", "fbt", "cancel"], default="ort")
    ap.add_argument("--dt", type=float, default=DEFAULT_DT)
    ap.add_argument("--horizon", type=float, default=10.0)
    ap.add_argument("--out", type=Path, default=Path("."))
    ap.add_argument("--tol", type=float, default=RESID_TOL,
                    help="relative residual tolerance for solve")
    ap.add_argument("--x0", type=lambda s: [float(v) for v in s.split(",")],
                    help="initial plant state, comma separated")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    for name in ("dt", "horizon", "tol"):
        if not getattr(args, name) > 0:
            ap.error(f"--{name} must be positive")
    try:
        cfg = RunConfig(**vars(args))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return COMMANDS[cfg.command](cfg)
    except RegtrackError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return exc.exit_code


def entry():
    _sys.exit(main())


if __name__ == "__main__":
    entry()
