"""Command-line interface: simulate, equilibrium, certify, scan.

Each subcommand reads a JSON run configuration holding a ``body`` record, a
``field`` record, and exactly one task section named after the subcommand.
Floating point output is serialized with 17 significant digits so runs are
bitwise reproducible.

Exit codes: 0 on success (including "no solution found"), 2 for
configuration errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .core import BodyParams, ReducedState
from .dynamics import IntegratorConfig, integrate, relative_equilibrium_orbit
from .equilibrium import (
    Equilibrium,
    LevitationParams,
    build_levitation_equilibrium,
    build_support_state,
    solve_dipole_equilibrium,
    solve_levitation,
    solve_orbitron_equatorial,
)
from .errors import (
    BadSign,
    ConfigError,
    NegativeCentrifugal,
    NoEquilibrium,
    NoRealSolution,
    OrbitronError,
    WrongFieldSign,
)
from .fields import AxiFieldModel, eval_jet, model_from_config
from .potential import DipolePotential, hessian_blocks
from .scan import (
    ScanAxis,
    ScanSpec,
    dipoletron_window,
    levitation_sweep,
    radius_for_beta,
    split_levitation_model,
    stability_map,
    window_endpoints,
)
from .stability import (
    closed_form_conditions,
    eigen_certificate,
    levitation_conditions,
    orbitron_conditions,
    reduced_hessian,
)

__all__ = ["main"]

TASKS = ("simulate", "equilibrium", "certify", "scan")

# Domain errors that mean "the requested solution does not exist" rather
# than a broken computation; they exit 0 with a reason field.
NO_SOLUTION_ERRORS = (
    NoEquilibrium,
    NoRealSolution,
    NegativeCentrifugal,
    BadSign,
    WrongFieldSign,
)


def fmt17(x: float) -> str:
    """A float with 17 significant digits (shortest round-trip superset)."""
    return format(float(x), ".17g")


def _json_scalar(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        xf = float(x)
        if not math.isfinite(xf):
            return "null"
        return fmt17(xf)
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps17(obj, indent: int = 0) -> str:
    """JSON text with all floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {dumps17(v, indent + 1)}" for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps17(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _json_scalar(obj)


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps17(obj))
        fh.write("\n")


def _csv_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    xf = float(v)
    return fmt17(xf) if math.isfinite(xf) else "nan"


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _require(cfg: dict, key: str, kind, where: str):
    if key not in cfg:
        raise ConfigError(f"missing {key!r} in {where}")
    value = cfg[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{key} must be of type {kind.__name__}")
    return value


def _body_from_config(cfg: dict) -> BodyParams:
    rec = _require(cfg, "body", dict, "config")
    known = {"M", "I_perp", "I3", "mu", "g"}
    unknown = set(rec) - known
    if unknown:
        raise ConfigError(f"unknown body keys {sorted(unknown)}; known: {sorted(known)}")
    try:
        return BodyParams(**{k: float(v) for k, v in rec.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad body record: {exc}") from exc


def _model_from_config(cfg: dict) -> AxiFieldModel:
    return model_from_config(_require(cfg, "field", dict, "config"))


def _vector(rec, key: str, where: str) -> np.ndarray:
    v = _require(rec, key, list, where)
    if len(v) != 3 or not all(isinstance(c, (int, float)) for c in v):
        raise ConfigError(f"{where}.{key} must be a list of 3 numbers")
    return np.array([float(c) for c in v])


def _levitation_context(model: AxiFieldModel, b: BodyParams, r0: float):
    """(kappa, beta, xi2 helper data) implied by the model and body at r0."""
    linear, o_model = split_levitation_model(model)
    if b.g <= 0.0:
        raise ConfigError("levitation requires g > 0 in the body record")
    kappa = b.M * b.g / (b.mu * linear.Bp)
    beta = eval_jet(o_model, r0, 0.0).Br_z / linear.Bp
    return kappa, beta


def _solve_from_spec(spec: dict, model: AxiFieldModel, b: BodyParams) -> list[Equilibrium]:
    solver = _require(spec, "solver", str, "equilibrium")
    negative_omega = bool(spec.get("negative_omega", False))
    if solver == "orbitron":
        r0 = _require(spec, "r0", float, "equilibrium")
        pi0 = _require(spec, "pi0", float, "equilibrium")
        if "sigma" in spec:
            sigma = int(spec["sigma"])
            return [solve_orbitron_equatorial(model, b, r0, pi0, sigma, negative_omega)]
        # No explicit orientation: return one branch per admissible sigma.
        eqs = []
        first_error: OrbitronError | None = None
        for sigma in (1, -1):
            try:
                eqs.append(solve_orbitron_equatorial(model, b, r0, pi0, sigma, negative_omega))
            except NO_SOLUTION_ERRORS as exc:
                if first_error is None:
                    first_error = exc
        if not eqs:
            raise first_error if first_error is not None else NoEquilibrium(
                f"no equatorial branch at r0={r0}"
            )
        return eqs
    if solver == "dipole":
        r0 = _require(spec, "r0", float, "equilibrium")
        c2 = _require(spec, "C2", float, "equilibrium")
        return solve_dipole_equilibrium(model, b, r0, c2, negative_omega)
    if solver == "levitation":
        if "r0" in spec:
            r0 = _require(spec, "r0", float, "equilibrium")
        elif "beta" in spec:
            r0 = radius_for_beta(model, _require(spec, "beta", float, "equilibrium"))
        else:
            raise ConfigError("levitation solver needs r0 or beta")
        kappa, beta = _levitation_context(model, b, r0)
        nu_r, nu_z, xi2 = solve_levitation(beta, kappa)
        return [build_levitation_equilibrium(model, b, r0, nu_r, nu_z, xi2, negative_omega)]
    raise ConfigError(f"unknown solver {solver!r}")


def _one_task(cfg: dict) -> str:
    present = [t for t in TASKS if t in cfg]
    if len(present) != 1:
        raise ConfigError(f"config must contain exactly one task section from {TASKS}")
    return present[0]


def cmd_simulate(cfg: dict, out: str, include_casimir: bool) -> int:
    b = _body_from_config(cfg)
    model = _model_from_config(cfg)
    sec = _require(cfg, "simulate", dict, "config")
    V = DipolePotential(model, b)

    eq = None
    if "state" in sec:
        rec = sec["state"]
        s0 = ReducedState(
            x=_vector(rec, "x", "state"),
            p=_vector(rec, "p", "state"),
            nu=_vector(rec, "nu", "state"),
            pi=_vector(rec, "pi", "state"),
        )
    elif "from_equilibrium" in sec:
        eq = _solve_from_spec(sec["from_equilibrium"], model, b)[
            int(sec["from_equilibrium"].get("branch", 0))
        ]
        s0 = build_support_state(eq)
    else:
        raise ConfigError("simulate needs a 'state' or 'from_equilibrium' section")

    dt = sec.get("dt")
    if dt is None:
        # One period resolved by 2000 steps when the rotation rate is known,
        # otherwise a fixed 1 ms default.
        dt = 1e-3 if eq is None else (2.0 * math.pi / abs(eq.mult.omega)) / 2000.0
    icfg = IntegratorConfig(
        dt=float(dt),
        steps=_require(sec, "steps", int, "simulate"),
        scheme=str(sec.get("scheme", "rk4")),
        record_every=int(sec.get("record_every", 1)),
    )
    samples = integrate(s0, icfg, b, V, include_casimir=include_casimir)

    header = (
        ["t"]
        + [f"x{i}" for i in (1, 2, 3)]
        + [f"p{i}" for i in (1, 2, 3)]
        + [f"nu{i}" for i in (1, 2, 3)]
        + [f"pi{i}" for i in (1, 2, 3)]
        + ["h", "J3", "C1", "C2"]
    )
    rows = (
        [s.t, *s.state.x, *s.state.p, *s.state.nu, *s.state.pi, s.h, s.J3, s.C1, s.C2]
        for s in samples
    )
    _write_csv(out, header, rows)

    first = samples[0]
    drift = {}
    for name in ("h", "J3", "C1", "C2"):
        q0 = getattr(first, name)
        dmax = max(abs(getattr(s, name) - q0) for s in samples)
        drift[name] = dmax / max(1.0, abs(q0))
    summary = {"max_drift": drift, "steps": icfg.steps, "dt": icfg.dt}
    if eq is not None:
        last = samples[-1]
        ref = relative_equilibrium_orbit(eq, last.t).as_vector()
        got = last.state.as_vector()
        summary["final_state_deviation"] = float(
            max(abs(g - r) / max(1.0, abs(r)) for g, r in zip(got, ref))
        )
    _write_json(out + ".summary.json", summary)
    return 0


def cmd_equilibrium(cfg: dict, out: str) -> int:
    b = _body_from_config(cfg)
    model = _model_from_config(cfg)
    sec = _require(cfg, "equilibrium", dict, "config")
    try:
        eqs = _solve_from_spec(sec, model, b)
    except NO_SOLUTION_ERRORS as exc:
        _write_json(out, {"equilibria": [], "reason": type(exc).__name__})
        return 0
    _write_json(out, {"equilibria": [eq.to_record() for eq in eqs]})
    return 0


def cmd_certify(cfg: dict, out: str, oracle: bool) -> int:
    b = _body_from_config(cfg)
    model = _model_from_config(cfg)
    sec = _require(cfg, "certify", dict, "config")
    spec = _require(sec, "equilibrium", dict, "certify")
    method = str(sec.get("method", "closed_form"))
    try:
        eqs = _solve_from_spec(spec, model, b)
    except NO_SOLUTION_ERRORS as exc:
        _write_json(out, {"certificate": None, "reason": type(exc).__name__})
        return 0
    eq = eqs[int(spec.get("branch", 0))]

    if method == "closed_form":
        blocks = hessian_blocks(np.array([eq.r0, 0.0, 0.0]), eq.nu0, model, b)
        cert = closed_form_conditions(eq, b, blocks)
    elif method == "orbitron":
        cert = orbitron_conditions(eq, b, model)
    elif method == "levitation":
        kappa, beta = _levitation_context(model, b, eq.r0)
        xi2 = eq.mult.omega**2 * eq.r0 / b.g
        lev = LevitationParams(beta, kappa, xi2, abs(kappa) - 1.0)
        cert = levitation_conditions(eq, lev, b, model)
    else:
        raise ConfigError(f"unknown certify method {method!r}")

    result = {"equilibrium": eq.to_record(), "certificate": cert.to_record()}
    if oracle:
        blocks = hessian_blocks(np.array([eq.r0, 0.0, 0.0]), eq.nu0, model, b)
        form = reduced_hessian(eq, b, blocks)
        eig = eigen_certificate(form.Q)
        result["eigen"] = {
            "verdict": eig.verdict,
            "lambda_min": eig.lambda_min,
            "margin": eig.margin,
            "agrees": eig.verdict == cert.verdict,
        }
    _write_json(out, result)
    return 0


def cmd_scan(cfg: dict, out: str, refine: bool) -> int:
    b = _body_from_config(cfg)
    sec = _require(cfg, "scan", dict, "config")
    kind = _require(sec, "kind", str, "scan")

    if kind == "dipoletron_window":
        q = _require(sec, "q", float, "scan")
        h = _require(sec, "h", float, "scan")
        lo, hi = sec.get("ratio_range", (0.3, 1.5))
        rows = dipoletron_window(
            q,
            h,
            b,
            ratio_range=(float(lo), float(hi)),
            n=int(sec.get("n", 121)),
            sigma=int(sec.get("sigma", 1)),
        )
        if refine:
            lower, upper = window_endpoints(
                q, h, sigma=int(sec.get("sigma", 1)), ratio_range=(float(lo), float(hi))
            )
            _write_json(out + ".endpoints.json", {"lower": lower, "upper": upper})
    elif kind == "levitation_sweep":
        model = _model_from_config(cfg)
        rows = levitation_sweep(
            model,
            b,
            [float(k) for k in _require(sec, "kappa_values", list, "scan")],
            _require(sec, "beta", float, "scan"),
        )
    elif kind == "stability_map":
        model = _model_from_config(cfg)

        def axis(rec: dict, where: str) -> ScanAxis:
            return ScanAxis(
                name=_require(rec, "name", str, where),
                lo=_require(rec, "lo", float, where),
                hi=_require(rec, "hi", float, where),
                n=_require(rec, "n", int, where),
            )

        spec = ScanSpec(
            axis1=axis(_require(sec, "axis1", dict, "scan"), "scan.axis1"),
            axis2=axis(_require(sec, "axis2", dict, "scan"), "scan.axis2"),
            fixed={k: float(v) for k, v in sec.get("fixed", {}).items()},
        )
        rows = stability_map(spec, model, b)
    else:
        raise ConfigError(f"unknown scan kind {kind!r}")

    if not rows:
        raise ConfigError("scan produced no rows")
    header = list(rows[0].keys())
    _write_csv(out, header, ([row[k] for k in header] for row in rows))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orbitron",
        description="Relative equilibria and stability certificates for a magnetized top",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "integrate the reduced equations and write a trajectory CSV"),
        ("equilibrium", "solve for relative equilibria and write them as JSON"),
        ("certify", "run a stability certificate for one equilibrium"),
        ("scan", "sweep a parameter grid and write a CSV of certificates"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", required=True, help="output file path")
        if name == "simulate":
            p.add_argument(
                "--include-casimir-energy",
                action="store_true",
                help="add the constant axial spin energy to reported energies",
            )
        if name == "certify":
            p.add_argument(
                "--oracle",
                action="store_true",
                help="cross-check the verdict against the eigenvalue oracle",
            )
        if name == "scan":
            p.add_argument(
                "--refine",
                action="store_true",
                help="bisect window endpoints and write an .endpoints.json sidecar",
            )

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        task = _one_task(cfg)
        if task != args.command:
            raise ConfigError(
                f"config has a {task!r} section but the {args.command!r} command was invoked"
            )
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out, args.include_casimir_energy)
        if args.command == "equilibrium":
            return cmd_equilibrium(cfg, args.out)
        if args.command == "certify":
            return cmd_certify(cfg, args.out, args.oracle)
        return cmd_scan(cfg, args.out, args.refine)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OrbitronError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
