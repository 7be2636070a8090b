"""Config loading, command dispatch and deterministic export formats.

Config files are ``key = value`` lines; ``#`` starts a comment and dotted
keys form sections.  Unknown keys are hard errors.  Exit status: 0 on
success / all-pass, 1 on validation or property failure, 2 on usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .coeff_expr import CoefficientField, ExprEvalError, ExprParseError, parse_expr
from .fibering import eta, eta_tilde, fiber_terms, psi_derivatives, t_circ, t_tilde_circ
from .mesh import build_rect_mesh
from .problem import ProblemData, validate_hypotheses
from .props import run_property_suites
from .solver import SolverOptions, solve_two
from .space import norm_circ, norm_custom, norm_1p, norm_star, sample_fields
from .sweep import (
    SweepReport,
    SweepUndetermined,
    check_nzero_empty,
    estimate_lambda_star,
    estimate_lambda_tilde,
    estimate_sobolev_constant,
    sample_directions,
)

__all__ = ["Config", "ConfigError", "load_config", "run", "main"]

COMMANDS = ("validate", "norms", "fiber", "solve", "sweep", "props")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    p: float
    q: float
    kappa: float
    q1: float
    lam: float
    N: int = 2
    mu: str = "x"
    alpha: str = "1"
    beta: str = "1"
    zeta: str = "1"
    nx: int = 16
    ny: int = 16
    rect: tuple = (0.0, 0.0, 1.0, 1.0)
    solver: SolverOptions = field(default_factory=SolverOptions)
    sweep_samples: int = 200
    lambda_grid: tuple = (0.05, 0.1, 0.2, 0.4, 0.8)
    sweep_seed: int = 0

    def problem(self) -> ProblemData:
        return ProblemData(
            p=self.p,
            q=self.q,
            kappa=self.kappa,
            q1=self.q1,
            lam=self.lam,
            mu=self.mu,
            alpha=self.alpha,
            beta=self.beta,
            zeta=self.zeta,
            N=self.N,
        )

    def build_mesh(self):
        return build_rect_mesh(self.nx, self.ny, self.rect)


def _strip_quotes(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _parse_float(key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {value!r}") from None


def _parse_int(key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected an integer, got {value!r}") from None


def _parse_expr_value(key, value):
    try:
        parse_expr(value)
    except ExprParseError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from None
    return value


def _parse_float_list(key, value, count=None):
    parts = [v.strip() for v in value.split(",") if v.strip()]
    vals = tuple(_parse_float(key, v) for v in parts)
    if count is not None and len(vals) != count:
        raise ConfigError(f"key {key!r}: expected {count} comma-separated numbers, got {len(vals)}")
    return vals


REQUIRED_KEYS = ("p", "q", "kappa", "q1", "lambda")

_KEY_PARSERS = {
    "p": _parse_float,
    "q": _parse_float,
    "kappa": _parse_float,
    "q1": _parse_float,
    "lambda": _parse_float,
    "N": _parse_int,
    "mu": _parse_expr_value,
    "alpha": _parse_expr_value,
    "beta": _parse_expr_value,
    "zeta": _parse_expr_value,
    "mesh.nx": _parse_int,
    "mesh.ny": _parse_int,
    "rect": lambda k, v: _parse_float_list(k, v, 4),
    "solver.energy_tol": _parse_float,
    "solver.stall": _parse_int,
    "solver.max_iter": _parse_int,
    "solver.residual_tol": _parse_float,
    "solver.seed": _parse_int,
    "sweep.samples": _parse_int,
    "sweep.lambda_grid": lambda k, v: _parse_float_list(k, v),
    "sweep.seed": _parse_int,
}


def load_config(path: str) -> Config:
    """Parse a config file; unknown keys, missing required keys, type errors
    and expression parse errors are all ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None

    raw = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = _strip_quotes(value.strip())
        if key not in _KEY_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = _KEY_PARSERS[key](key, value)

    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"{path}: missing required keys: {', '.join(missing)}")

    solver = SolverOptions(
        energy_tol=raw.get("solver.energy_tol", 1e-10),
        stall=raw.get("solver.stall", 25),
        max_iter=raw.get("solver.max_iter", 20000),
        residual_tol=raw.get("solver.residual_tol", 1e-8),
        seed=raw.get("solver.seed", 0),
    )
    return Config(
        p=raw["p"],
        q=raw["q"],
        kappa=raw["kappa"],
        q1=raw["q1"],
        lam=raw["lambda"],
        N=raw.get("N", 2),
        mu=raw.get("mu", "x"),
        alpha=raw.get("alpha", "1"),
        beta=raw.get("beta", "1"),
        zeta=raw.get("zeta", "1"),
        nx=raw.get("mesh.nx", 16),
        ny=raw.get("mesh.ny", 16),
        rect=raw.get("rect", (0.0, 0.0, 1.0, 1.0)),
        solver=solver,
        sweep_samples=raw.get("sweep.samples", 200),
        lambda_grid=raw.get("sweep.lambda_grid", (0.05, 0.1, 0.2, 0.4, 0.8)),
        sweep_seed=raw.get("sweep.seed", 0),
    )


def _fmt(value) -> str:
    return repr(float(value))


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _nehari_dict(nc):
    return {"kind": nc.kind.value, "dpsi1": nc.dpsi1, "ddpsi1": nc.ddpsi1, "tol": nc.tol}


def _result_dict(res):
    if res is None:
        return None
    return {
        "energy": res.energy,
        "nehari": _nehari_dict(res.nehari),
        "residual": None
        if res.residual is None
        else {"residual_norm": res.residual.residual_norm, "term_max": res.residual.term_max},
        "iterations": res.iterations,
        "floor_activations": res.floor_activations,
        "converged": res.converged,
        "branch": res.branch,
        "start": res.start,
    }


def _solution_rows(mesh, u):
    for i in range(mesh.num_nodes):
        yield (str(i), _fmt(mesh.nodes[i, 0]), _fmt(mesh.nodes[i, 1]), _fmt(u[i]))


def _function_values(mesh, source: str):
    fld = CoefficientField.compile(source)
    vals = np.broadcast_to(
        np.asarray(fld(mesh.nodes[:, 0], mesh.nodes[:, 1]), dtype=float),
        mesh.nodes[:, 0].shape,
    )
    return np.array(vals, dtype=float)


def _cmd_validate(config: Config, out_dir: str, function: str) -> int:
    try:
        data = config.problem()
    except ValueError as exc:
        print(f"invalid problem parameters: {exc}")
        return 1
    mesh = config.build_mesh()
    report = validate_hypotheses(data, mesh)
    print(report)
    return 0 if report.ok else 1


def _cmd_norms(config: Config, out_dir: str, function: str) -> int:
    data = config.problem()
    mesh = config.build_mesh()
    u = _function_values(mesh, function)
    fields = sample_fields(mesh, data)
    print(f"norm_1p = {_fmt(norm_1p(mesh, data, u, fields))}")
    print(f"norm_custom = {_fmt(norm_custom(mesh, data, u, fields))}")
    print(f"norm_circ = {_fmt(norm_circ(mesh, data, u, fields=fields))}")
    print(f"norm_star = {_fmt(norm_star(mesh, data, u, fields=fields))}")
    return 0


def _cmd_fiber(config: Config, out_dir: str, function: str) -> int:
    data = config.problem()
    mesh = config.build_mesh()
    u = _function_values(mesh, function)
    ft = fiber_terms(mesh, data, u)
    lam = config.lam
    rows = []
    for t in np.logspace(-2, 2, 201):
        val, d1, d2 = psi_derivatives(ft, lam, float(t))
        rows.append(
            (
                _fmt(t),
                _fmt(val),
                _fmt(d1),
                _fmt(d2),
                _fmt(eta(ft, float(t))),
                _fmt(eta_tilde(ft, float(t))),
            )
        )
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "fiber.csv"), "t,psi,dpsi,ddpsi,eta,eta_tilde", rows)
    print(f"wrote {os.path.join(out_dir, 'fiber.csv')}")
    return 0


def _cmd_solve(config: Config, out_dir: str, function: str) -> int:
    data = config.problem()
    mesh = config.build_mesh()
    report = solve_two(mesh, data, config.lam, config.solver)
    os.makedirs(out_dir, exist_ok=True)
    if report.plus is not None:
        _write_csv(
            os.path.join(out_dir, "solution_plus.csv"),
            "node,x,y,value",
            _solution_rows(mesh, report.plus.u),
        )
    if report.minus is not None:
        _write_csv(
            os.path.join(out_dir, "solution_minus.csv"),
            "node,x,y,value",
            _solution_rows(mesh, report.minus.u),
        )
    payload = {
        "lam": report.lam,
        "plus": _result_dict(report.plus),
        "minus": _result_dict(report.minus),
        "plus_failures": list(report.plus_failures),
        "minus_failures": list(report.minus_failures),
        "sign_ok": report.sign_ok,
    }
    _write_json(os.path.join(out_dir, "solve_report.json"), payload)
    for name, res in (("plus", report.plus), ("minus", report.minus)):
        if res is None:
            print(f"{name}: no result (all starts failed)")
        else:
            print(
                f"{name}: energy={_fmt(res.energy)} converged={res.converged} "
                f"iterations={res.iterations}"
            )
    return 0 if report.sign_ok else 1


def _cmd_sweep(config: Config, out_dir: str, function: str) -> int:
    data = config.problem()
    mesh = config.build_mesh()
    fields = sample_fields(mesh, data)
    n = config.sweep_samples
    seed = config.sweep_seed
    lam_tilde = estimate_lambda_tilde(mesh, data, n, seed, fields)
    evidence = []
    for lam in config.lambda_grid:
        ev = check_nzero_empty(mesh, data, lam, n, seed, fields)
        evidence.append((lam, len(ev.tangencies) > 0))
    try:
        lam_star = estimate_lambda_star(mesh, data, config.lambda_grid, config.solver)
    except (SweepUndetermined, ValueError) as exc:
        print(f"lambda_star scan: {exc}")
        lam_star = None
    if lam_star is not None and lam_star > lam_tilde:
        # soft check: the threshold nesting can be violated by sampling noise
        print(
            f"warning: lambda_star_est {_fmt(lam_star)} exceeds "
            f"lambda_tilde_est {_fmt(lam_tilde)} (sampling artifact)"
        )
    sobolev = estimate_sobolev_constant(mesh, data, n, seed, fields=fields)
    report = SweepReport(
        lambda_tilde_est=lam_tilde,
        lambda_hat_evidence=tuple(evidence),
        lambda_star_est=lam_star,
        sobolev_S_est=sobolev,
        samples=n,
        seed=seed,
    )
    os.makedirs(out_dir, exist_ok=True)
    payload = {
        "lambda_tilde_est": report.lambda_tilde_est,
        "lambda_hat_evidence": [[lam, found] for lam, found in report.lambda_hat_evidence],
        "lambda_star_est": report.lambda_star_est,
        "sobolev_S_est": report.sobolev_S_est,
        "samples": report.samples,
        "seed": report.seed,
    }
    _write_json(os.path.join(out_dir, "sweep_report.json"), payload)

    rows = []
    for i, u in enumerate(sample_directions(mesh, n, seed)):
        ft = fiber_terms(mesh, data, u, fields)
        if ft.a > 0 and ft.d > 0 and ft.e > 0:
            tt, et_max = t_tilde_circ(ft)
            tc = t_circ(ft)
            row_tail = (
                _fmt(tt),
                _fmt(et_max / ft.e),
                _fmt(tc),
                _fmt(eta(ft, tc) / ft.e),
            )
        else:
            row_tail = ("", "", "", "")
        rows.append(
            (str(i), _fmt(ft.a), _fmt(ft.b), _fmt(ft.c), _fmt(ft.d), _fmt(ft.e)) + row_tail
        )
    _write_csv(
        os.path.join(out_dir, "sweep_samples.csv"),
        "sample,a,b,c,d,e,t_tilde_circ,eta_tilde_ratio,t_circ,eta_max_ratio",
        rows,
    )
    print(f"lambda_tilde_est = {_fmt(lam_tilde)}")
    if lam_star is not None:
        print(f"lambda_star_est = {_fmt(lam_star)}")
    print(f"sobolev_S_est = {_fmt(sobolev)}")
    return 0


def _cmd_props(config: Config, out_dir: str, function: str) -> int:
    data = config.problem()
    mesh = config.build_mesh()
    results = run_property_suites(mesh, data, seed=config.solver.seed)
    any_failed = False
    for res in results:
        status = "pass" if res.ok else "FAIL"
        print(f"{res.name}: {status} ({res.checked - res.failed}/{res.checked}, worst={res.worst:.3e})")
        any_failed = any_failed or not res.ok
    return 1 if any_failed else 0


_COMMANDS = {
    "validate": _cmd_validate,
    "norms": _cmd_norms,
    "fiber": _cmd_fiber,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "props": _cmd_props,
}


def run(command: str, config: Config, out_dir: str = "out", function: str = "1") -> int:
    """Dispatch one command against a loaded config; returns the exit status."""
    if command not in _COMMANDS:
        print(f"unknown command {command!r}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[command](config, out_dir, function)
    except (ExprParseError, ExprEvalError) as exc:
        print(f"function expression error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # unusable configuration (degenerate rectangle, invalid exponents, ...)
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="doublephase",
        description="Singular double phase Neumann problem: norms, fibers, solutions, thresholds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", "-c", required=True, help="path to a key = value config file")
        p.add_argument("--out", "-o", default="out", help="output directory (default: out)")
        if name in ("norms", "fiber"):
            p.add_argument(
                "--function",
                "-f",
                default="1",
                help="expression in x, y sampled at mesh nodes (default: 1)",
            )
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    function = getattr(args, "function", "1")
    return run(args.command, config, args.out, function)


if __name__ == "__main__":
    sys.exit(main())
