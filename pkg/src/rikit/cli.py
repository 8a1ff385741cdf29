"""Command-line front end: parse space specs, dispatch, emit JSON and CSV reports.

Exit codes: 0 success, 1 usage error, 2 a named hypothesis fails (the
condition is reported as JSON on stderr).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .counterexample import (
    HypothesisViolated,
    construct_psi,
    enlarged_marcinkiewicz_target,
    psi_table,
    verify_psi,
)
from .funcrep import (
    DEFAULT_RTOL,
    FLOOR_ENV,
    GridSpec,
    atom,
    evaluate,
    funcrep_from_json,
    funcrep_to_json,
    indicator,
    step_function,
)
from .marc_enlarge import (
    UnsupportedCase,
    check_conditions,
    enlarged_space,
    fundamental_bound,
    fundamental_Y,
    marcinkiewicz_sup_form,
    noncompactness_certificate,
    params_to_json,
    preset,
    witness_sequence,
)
from .norms import InadmissibleSpec, fundamental_function, lorentz_zygmund, norm, spec_from_json, spec_to_json
from .rearrange import rearrange
from .sobolev_embed import (
    OutOfCriterion,
    SobolevParams,
    compactness_verdict,
    endpoint_target_preset,
    optimal_target_preset,
    verdict_sweep,
)
from .sum_spaces import lz_noncompact_target, plan_sum_enlargement, ratio_kind

__all__ = ["UsageError", "build_parser", "execute", "main", "run"]

COMMANDS = ("norm", "fundamental", "counterexample", "enlarge-marcinkiewicz", "sum-enlarge",
            "verdict", "sweep", "selftest")
RTOL_MAX = 1e-3


class UsageError(ValueError):
    """Malformed command line or space description."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for hypothesis failures
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# argument parsing helpers


def _load_json(text: str):
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {text[1:]}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from exc


def _parse_space(text: str, a: float | None = None):
    obj = _load_json(text)
    try:
        return spec_from_json(obj, a)
    except InadmissibleSpec:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid space description: {exc}") from exc


def parse_function(text: str, a: float = 1.0):
    """FuncRep JSON, or one of the shorthands ``indicator``, ``step``, ``atom``."""
    obj = _load_json(text)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise UsageError("a function needs a JSON object with a 'kind'")
    kind = obj["kind"]
    a = float(obj.get("a", a))
    try:
        if kind == "indicator":
            return indicator(float(obj["s"]), a, float(obj.get("lo", 0.0)))
        if kind == "step":
            return step_function(obj["edges"], obj["values"], a)
        if kind == "atom":
            return atom(float(obj.get("c", 1.0)), float(obj.get("alpha", 0.0)),
                        float(obj.get("beta", 0.0)), float(obj.get("gamma", 0.0)),
                        float(obj.get("delta", 0.0)), a=a)
        return funcrep_from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid function description: {exc}") from exc


def _parse_phi(text: str):
    if text == "sqrt":
        return atom(1.0, 0.5)
    if text.startswith("power:"):
        return atom(1.0, float(text.split(":", 1)[1]))
    if text.startswith("powerlog:"):
        sig, beta = (float(x) for x in text.split(":", 1)[1].split(","))
        return atom(1.0, sig, beta)
    return parse_function(text)


def _parse_sobolev(text: str) -> SobolevParams:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"--sobolev expects n,m,d[,nu,omega]: {exc}") from exc
    if len(parts) not in (3, 5):
        raise UsageError("--sobolev expects n,m,d[,nu,omega]")
    n, m = parts[0], parts[1]
    if n != int(n) or m != int(m):
        raise UsageError("n and m must be integers")
    extra = parts[3:] if len(parts) == 5 else [1.0, 1.0]
    try:
        return SobolevParams(int(n), int(m), parts[2], *extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _ext(x: str) -> float:
    return math.inf if x.strip().lower() in ("inf", "infinity") else float(x)


def _parse_lz_triple(text: str) -> tuple[float, float, float]:
    body = text[3:] if text.startswith("lz:") else text
    try:
        p, q, alpha = (_ext(x) for x in body.split(","))
    except ValueError as exc:
        raise UsageError(f"expected lz:p,q,alpha, got {text!r}") from exc
    return p, q, alpha


def _floats(text: str) -> list[float]:
    try:
        return [_ext(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers: {exc}") from exc


def _rtol(text: str) -> float:
    try:
        r = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not 0 < r <= RTOL_MAX:
        raise argparse.ArgumentTypeError(f"rtol must lie in (0, {RTOL_MAX:g}]")
    return r


def _grid(args, a: float) -> GridSpec:
    rel = args.floor
    return GridSpec(a, None if rel is None else rel * a, args.ppd)


# --------------------------------------------------------------------------
# JSON hygiene


def _clean(obj):
    """Plain JSON: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# commands; each returns (report, csv header, csv rows)


def _cmd_norm(args):
    spec = _parse_space(args.space)
    f = parse_function(args.f, spec.a)
    grid = _grid(args, spec.a)
    value = norm(spec, f, grid)
    t = grid.points
    rows = np.column_stack([t, evaluate(rearrange(f, grid).base, t)])
    report = {"command": "norm", "space": spec_to_json(spec), "f": funcrep_to_json(f),
              "norm": value, "floor": grid.floor, "rtol": args.rtol}
    return report, ["t", "f_star"], rows


def _cmd_fundamental(args):
    spec = _parse_space(args.space)
    grid = _grid(args, spec.a)
    phi = fundamental_function(spec, grid)
    t = grid.points
    vals = phi(t)
    report = {"command": "fundamental", "space": spec_to_json(spec), "phi": funcrep_to_json(phi.f),
              "floor": grid.floor, "rtol": args.rtol}
    if args.at:
        report["values"] = {str(x): float(phi(x)) for x in _floats(args.at)}
    return report, ["t", "phi"], np.column_stack([t, vals])


def _cmd_counterexample(args):
    phi = _parse_phi(args.phi)
    c = construct_psi(phi, K=args.levels)
    rep = verify_psi(phi, c)
    spec, target = enlarged_marcinkiewicz_target(c)
    levels = []
    for k, (tk, tau) in enumerate(zip(spec.origin["log10_t_knots"][:-1], spec.origin["log10_tau"]),
                                  start=1):
        levels.append({"k": k, "log10_t_k": tk, "log10_tau_k": tau})
    report = {"command": "counterexample", "phi": funcrep_to_json(c.phi), "levels_requested": c.requested,
              "levels": levels, "construction": c.to_dict(), "certificates": rep.to_dict(),
              "all_certificates": rep.all_pass, "target": target,
              "floor": c.grid.floor, "rtol": args.rtol}
    rows = np.array(psi_table(c, _grid(args, c.a)))
    return report, ["t", "phi", "psi", "psi_over_phi"], rows


def _cmd_enlarge(args):
    sp = _parse_sobolev(args.sobolev) if args.sobolev else None
    if args.preset == "lz":
        if sp is None or args.p is None or args.alpha is None:
            raise UsageError("--preset lz needs --sobolev, --p and --alpha")
        a = sp.mass_nu
    else:
        a = args.a
    grid = _grid(args, a)
    params = preset(args.preset, sp=sp, p=args.p, alpha=args.alpha, beta=args.beta, a=a, grid=grid)
    conds = check_conditions(params)
    deltas = _floats(args.deltas) if args.deltas else [a / 10, a / 100]
    cert = noncompactness_certificate(params, deltas, grid)
    witnesses = []
    for k in (_floats(args.witness_k) if args.witness_k else []):
        try:
            val = marcinkiewicz_sup_form(params.phi, witness_sequence(params, int(k), grid), grid)
            witnesses.append({"k": int(k), "sup_form_norm": val})
        except ValueError as exc:
            witnesses.append({"k": int(k), "sup_form_norm": None,
                              "status": f"inconclusive at this floor ({exc})"})
    report = {"command": "enlarge-marcinkiewicz", "preset": args.preset,
              "params": params_to_json(params), "conditions": conds.to_dict(),
              "fundamental_bound": fundamental_bound(params, grid),
              "noncompactness_certificate": cert, "witnesses": witnesses,
              "floor": grid.floor, "rtol": args.rtol}
    if sp is not None and args.preset == "lz":
        X = lorentz_zygmund(args.p, "inf", args.alpha, a=sp.mass_omega)
        Y = enlarged_space(params)
        report["sobolev"] = sp.to_dict()
        report["domain"] = spec_to_json(X)
        report["Y_X"] = spec_to_json(optimal_target_preset(sp, X))
        report["verdict"] = compactness_verdict(sp, X, Y, grid=grid, rtol=args.rtol).to_dict()
    t = grid.points
    rows = np.column_stack([t, params.phi(t), params.b_value(t), fundamental_Y(params, grid)(t)])
    return report, ["t", "phi", "b", "phi_Y"], rows


def _cmd_sum_enlarge(args):
    if args.z1 or args.z2:
        if not (args.z1 and args.z2):
            raise UsageError("--z1 and --z2 go together")
        Z1, Z2 = _parse_space(args.z1), _parse_space(args.z2)
        grid = _grid(args, Z1.a)
        plan = plan_sum_enlargement(Z1, Z2, grid)
        report = {"command": "sum-enlarge", "plan": plan.to_dict(),
                  "duality_constant": plan.duality_constant(grid),
                  "floor": grid.floor, "rtol": args.rtol}
    else:
        if not (args.sobolev and args.domain):
            raise UsageError("sum-enlarge needs --sobolev and --domain, or --z1 and --z2")
        sp = _parse_sobolev(args.sobolev)
        p, q, alpha = _parse_lz_triple(args.domain)
        grid = _grid(args, sp.mass_nu)
        res = lz_noncompact_target(sp, p, q, alpha, args.s, grid)
        X = lorentz_zygmund(p, q, alpha, a=sp.mass_omega)
        plan = res["plan"]
        report = {"command": "sum-enlarge", "sobolev": sp.to_dict(), "domain": spec_to_json(X),
                  "s": args.s, "Y": spec_to_json(res["Y"]), "report": res["report"],
                  "plan": plan.to_dict(),
                  "verdict": compactness_verdict(sp, X, res["Y"], grid=grid, rtol=args.rtol).to_dict(),
                  "floor": grid.floor, "rtol": args.rtol}
        Z1, Z2 = plan.Z1, plan.Z2
    t = grid.points
    f1, f2 = fundamental_function(Z1, grid)(t), fundamental_function(Z2, grid)(t)
    return report, ["t", "phi_Z1", "phi_Z2", "ratio"], np.column_stack([t, f1, f2, f2 / f1])


def _cmd_verdict(args):
    sp = _parse_sobolev(args.sobolev)
    grid = _grid(args, sp.mass_nu)
    report = {"command": "verdict", "sobolev": sp.to_dict()}
    if args.endpoint:
        p, q, alpha = _parse_lz_triple(args.endpoint)
        ep = endpoint_target_preset(sp, p, q, alpha)
        Y, YX, X = ep["Lambda_psi"], ep["Y_X"], None
        report.update(domain=ep["X"], target=spec_to_json(Y), Y_X=spec_to_json(YX),
                      endpoint_report=ep["report"])
    else:
        if not args.domain:
            raise UsageError("verdict needs --domain (or --endpoint)")
        X = _parse_space(args.domain, sp.mass_omega)
        YX = None
        if args.target in (None, "optimal"):
            try:
                Y = optimal_target_preset(sp, X)
            except UnsupportedCase as exc:
                raise UsageError(f"no preset optimal target: {exc}") from exc
        else:
            Y = _parse_space(args.target, sp.mass_nu)
        report.update(domain=spec_to_json(X), target=spec_to_json(Y))
    v = compactness_verdict(sp, X, Y, Y_X=YX, grid=grid, rtol=args.rtol)
    report["verdict"] = v.to_dict()
    rows = None
    yx = YX
    if yx is None and X is not None:
        try:
            yx = optimal_target_preset(sp, X)
        except UnsupportedCase:
            yx = None
    if yx is not None:
        t = grid.points
        fy, fx = fundamental_function(Y, grid)(t), fundamental_function(yx, grid)(t)
        rows = np.column_stack([t, fy, fx, fy / fx])
        report["ratio"] = ratio_kind(Y, yx, grid)
    return report, ["t", "phi_Y", "phi_Y_X", "ratio"], rows


def _cmd_sweep(args):
    sp = _parse_sobolev(args.sobolev)
    grid = _grid(args, sp.mass_nu)
    q = "inf" if args.q.strip().lower() in ("inf", "infinity") else float(args.q)
    rows = verdict_sweep(sp, _floats(args.ps), _floats(args.alphas), q, args.s, grid)
    report = {"command": "sweep", "sobolev": sp.to_dict(), "rows": rows,
              "floor": grid.floor, "rtol": args.rtol}
    header = ["p", "alpha", "q", "target", "verdict", "reason"]
    return report, header, [[r[h] for h in header] for r in rows]


def _cmd_selftest(args):
    from .selftest import run_selftest

    criteria = [int(x) for x in _floats(args.criteria)] if args.criteria else None
    rel = args.floor
    if rel is None and os.environ.get(FLOOR_ENV):
        rel = float(os.environ[FLOOR_ENV])
    report = run_selftest(seed=args.seed, rtol=args.rtol, floor=rel, criteria=criteria)
    rows = [[c["criterion"], c["status"]] for c in report["criteria"]]
    return report, ["criterion", "status"], rows


_HANDLERS = {
    "norm": _cmd_norm,
    "fundamental": _cmd_fundamental,
    "counterexample": _cmd_counterexample,
    "enlarge-marcinkiewicz": _cmd_enlarge,
    "sum-enlarge": _cmd_sum_enlarge,
    "verdict": _cmd_verdict,
    "sweep": _cmd_sweep,
    "selftest": _cmd_selftest,
}


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--floor", type=float, default=None,
                        help=f"grid floor relative to a (default: ${FLOOR_ENV} or 1e-12)")
    common.add_argument("--ppd", type=int, default=64, help="grid points per decade")
    common.add_argument("--rtol", type=_rtol, default=DEFAULT_RTOL, help="relative tolerance in (0, 1e-3]")
    common.add_argument("--json", dest="json_path", default=None, help="write the JSON report here")
    common.add_argument("--csv", dest="csv_path", default=None, help="write the CSV projection here")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")

    parser = _Parser(prog="rikit", description="Rearrangement-invariant norms and Sobolev embeddings.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("norm", parents=[common], help="norm of a function in a space")
    s.add_argument("--space", required=True, help="space spec: inline JSON or @file")
    s.add_argument("--f", required=True, help="function: inline JSON or @file")

    s = sub.add_parser("fundamental", parents=[common], help="fundamental function of a space")
    s.add_argument("--space", required=True)
    s.add_argument("--at", default=None, help="comma-separated points to report")

    s = sub.add_parser("counterexample", parents=[common], help="oscillating psi below phi")
    s.add_argument("--phi", default="sqrt", help="sqrt, power:s, powerlog:s,b or function JSON")
    s.add_argument("--levels", type=int, default=10)

    s = sub.add_parser("enlarge-marcinkiewicz", parents=[common], help="enlarged Marcinkiewicz target")
    s.add_argument("--preset", choices=("i", "ii", "lz"), required=True)
    s.add_argument("--sobolev", default=None, help="n,m,d[,nu,omega]")
    s.add_argument("--p", type=_ext, default=None)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--deltas", default=None, help="comma-separated tail cut-offs")
    s.add_argument("--witness-k", default=None, help="comma-separated witness indices")

    s = sub.add_parser("sum-enlarge", parents=[common], help="sum target Y_X + Z")
    s.add_argument("--sobolev", default=None)
    s.add_argument("--domain", default=None, help="lz:p,q,alpha")
    s.add_argument("--s", type=float, default=1.0, help="second index of the added space")
    s.add_argument("--z1", default=None, help="space spec of the smaller summand")
    s.add_argument("--z2", default=None, help="space spec of the added summand")

    s = sub.add_parser("verdict", parents=[common], help="compactness verdict")
    s.add_argument("--sobolev", required=True)
    s.add_argument("--domain", default=None, help="space spec of X")
    s.add_argument("--target", default=None, help="space spec of Y, or 'optimal'")
    s.add_argument("--endpoint", default=None, help="p,q,alpha: Lorentz endpoint target preset")

    s = sub.add_parser("sweep", parents=[common], help="verdicts over a (p, alpha) lattice")
    s.add_argument("--sobolev", required=True)
    s.add_argument("--ps", required=True)
    s.add_argument("--alphas", required=True)
    s.add_argument("--q", default="inf")
    s.add_argument("--s", type=float, default=1.0)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    s.add_argument("--criteria", default=None, help="comma-separated subset, e.g. 1,3,8")
    return parser


# --------------------------------------------------------------------------
# entry points


def execute(argv) -> tuple[dict, list, object]:
    """Parse and run; returns ``(report, csv_header, csv_rows)``.  Raises on errors."""
    args = build_parser().parse_args(list(argv))
    if args.command is None:
        raise UsageError(f"a command is required: {', '.join(COMMANDS)}")
    return _HANDLERS[args.command](args)


def run(argv) -> dict:
    """In-process JSON round trip of a command (what ``main`` would print)."""
    report, _, _ = execute(argv)
    return json.loads(dumps(report))


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in ([] if rows is None else rows):
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _fail(code: int, payload: dict) -> int:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(list(argv))
    except UsageError as exc:
        return _fail(1, {"error": "usage", "message": str(exc)})
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        return _fail(1, {"error": "usage", "message": f"a command is required: {', '.join(COMMANDS)}"})
    try:
        report, header, rows = _HANDLERS[args.command](args)
    except UsageError as exc:
        return _fail(1, {"error": "usage", "message": str(exc)})
    except (HypothesisViolated, OutOfCriterion) as exc:
        return _fail(2, {"error": type(exc).__name__, "condition": exc.condition, "message": str(exc)})
    except (UnsupportedCase, InadmissibleSpec) as exc:
        return _fail(2, {"error": type(exc).__name__, "condition": type(exc).__name__,
                         "message": str(exc)})
    except ValueError as exc:  # remaining parameter errors are usage errors
        return _fail(1, {"error": "usage", "message": f"{type(exc).__name__}: {exc}"})
    text = dumps(report)
    if args.json_path:
        Path(args.json_path).write_text(text)
    if args.csv_path:
        _write_csv(args.csv_path, header, rows)
    if args.command == "norm":
        sys.stdout.write(dumps(report["norm"]))
    else:
        sys.stdout.write(text)
    if args.command == "selftest" and report["any_fail"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
