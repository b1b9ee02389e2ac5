"""Command-line front end: experiment runner, parameter queries, verification.

Subcommands
-----------
``run <config>``
    Execute the methods described by a TOML experiment config against its
    problem, write CSV/JSON traces, print one summary line per method.
    ``fig2`` and ``fig3`` name bundled configs.
``params <query>``
    Print closed-form parameter values (``nu``, ``gamma``, ``chain``,
    conversions) or emit the ``nu`` grid as CSV.
``verify <config>``
    Sample a class inequality for a declaratively described operator and emit
    the report as JSON.
``counterexample <name>``
    Reproduce a sharpness or failure-mode construction
    (``sharpness``, ``fix-collapse``, ``not-relaxed-cutter``, ``fixv``).

The environment variable ``FP_SEED`` overrides the config seed.  Output files
are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import parameter_algebra as pa
from .errors import ConfigError, FixopsError
from .hilbert import LinearMap, estimate_norm
from .operators import (
    Ball,
    Box,
    Halfspace,
    Hyperplane,
    Operator,
    compose,
    convex_combination,
    identity,
    landweber,
    projection,
    relax,
)
from .solver import (
    Status,
    StepRule,
    StoppingRule,
    atomic_write_text,
    fejer_check,
    iterate,
    preset_dr,
    preset_eadc,
    preset_moudafi,
    preset_raspc,
)
from . import verify as verify_mod


def _fmt(value: float) -> str:
    return format(value, ".17g")


# --------------------------------------------------------------------------
# config loading


def load_config(path_or_name: str) -> dict:
    """Load a TOML config from a path, or a bundled config by bare name."""
    if os.path.exists(path_or_name):
        with open(path_or_name, "rb") as handle:
            return tomllib.load(handle)
    bundled = resources.files("fixops").joinpath(f"configs/{path_or_name}.toml")
    if bundled.is_file():
        return tomllib.loads(bundled.read_text())
    raise ConfigError("config", f"no such file or bundled config: {path_or_name}")


def _get(table: dict, field: str, kind, where: str):
    if field not in table:
        raise ConfigError(f"{where}.{field}", "missing")
    value = table[field]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{field}", f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def build_set(table: dict, where: str):
    kind = _get(table, "kind", str, where)
    try:
        if kind == "hyperplane":
            return Hyperplane(_get(table, "normal", list, where), _get(table, "offset", float, where))
        if kind == "halfspace":
            return Halfspace(_get(table, "normal", list, where), _get(table, "offset", float, where))
        if kind == "ball":
            return Ball(_get(table, "center", list, where), _get(table, "radius", float, where))
        if kind == "box":
            return Box(_get(table, "lower", list, where), _get(table, "upper", list, where))
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from exc
    raise ConfigError(f"{where}.kind", f"unknown set kind {kind!r}")


def _problem_sets(problem: dict) -> dict:
    sets = {}
    for key, value in problem.items():
        if key.startswith("set_") and isinstance(value, dict):
            sets[key[4:]] = build_set(value, f"problem.{key}")
    return sets


def build_operator(node: dict, sets: dict, maps: dict, where: str = "operator") -> Operator:
    """Build an operator from a declarative composition tree."""
    op = _get(node, "op", str, where)
    if op == "project":
        name = _get(node, "set", str, where)
        if name not in sets:
            raise ConfigError(f"{where}.set", f"unknown set {name!r}")
        return projection(sets[name])
    if op == "identity":
        return identity(node.get("dim"))
    if op == "relax":
        lam = _get(node, "lambda", float, where)
        inner = build_operator(_get(node, "inner", dict, where), sets, maps, f"{where}.inner")
        try:
            return relax(inner, lam)
        except ValueError as exc:
            raise ConfigError(f"{where}.lambda", str(exc)) from exc
    if op == "compose":
        outer = build_operator(_get(node, "outer", dict, where), sets, maps, f"{where}.outer")
        inner = build_operator(_get(node, "inner", dict, where), sets, maps, f"{where}.inner")
        return compose(outer, inner)
    if op == "convex":
        terms = _get(node, "terms", list, where)
        weights = _get(node, "weights", list, where)
        ops = [build_operator(t, sets, maps, f"{where}.terms[{i}]") for i, t in enumerate(terms)]
        try:
            return convex_combination(ops, weights)
        except ValueError as exc:
            raise ConfigError(f"{where}.weights", str(exc)) from exc
    if op == "landweber":
        name = _get(node, "map", str, where)
        if name not in maps:
            raise ConfigError(f"{where}.map", f"unknown linear map {name!r}")
        inner = build_operator(_get(node, "inner", dict, where), sets, maps, f"{where}.inner")
        return landweber(inner, maps[name])
    raise ConfigError(f"{where}.op", f"unknown operator kind {op!r}")


def _build_maps(problem: dict) -> dict:
    maps = {}
    for key, value in problem.items():
        if key.startswith("map") and isinstance(value, dict):
            matrix = _get(value, "matrix", list, f"problem.{key}")
            try:
                A = LinearMap(matrix)
            except ValueError as exc:
                raise ConfigError(f"problem.{key}.matrix", str(exc)) from exc
            estimate_norm(A, seed=int(value.get("norm_seed", 0)))
            maps[key] = A
    return maps


def _start_point(config: dict, rng, dim_hint) -> np.ndarray:
    start = config.get("start", {})
    if "point" in start:
        return np.asarray(start["point"], dtype=float)
    dim = start.get("random_dim", dim_hint)
    if dim is None:
        raise ConfigError("start", "provide start.point or start.random_dim")
    return float(start.get("random_scale", 1.0)) * rng.standard_normal(int(dim))


def _stopping(config: dict) -> StoppingRule:
    stop = config.get("stopping", {})
    try:
        return StoppingRule(
            residual_tol=float(stop.get("residual_tol", 1e-10)),
            max_iters=int(stop.get("max_iters", 1000)),
            stall_window=stop.get("stall_window"),
            stall_min_decrease=float(stop.get("stall_min_decrease", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError("stopping", str(exc)) from exc


def _build_method(mdef: dict, problem: dict, sets: dict, maps: dict, index: int):
    where = f"method[{index}]"
    name = _get(mdef, "name", str, where)
    schedule = float(mdef.get("schedule", 1.0))
    epsilon = float(mdef.get("epsilon", 0.05))

    def need_two_sets():
        for key in ("a", "b"):
            if key not in sets:
                raise ConfigError(f"problem.set_{key}", "missing (two-set methods need set_a and set_b)")
        return sets["a"], sets["b"]

    try:
        if name == "dr":
            A, B = need_two_sets()
            return name, *preset_dr(A, B)
        if name == "raspc":
            A, B = need_two_sets()
            return name, *preset_raspc(A, B, _get(mdef, "lambda", float, where),
                                       _get(mdef, "mu", float, where), schedule, epsilon)
        if name == "eadc":
            A, B = need_two_sets()
            return name, *preset_eadc(A, B, _get(mdef, "lambda", float, where),
                                      _get(mdef, "mu", float, where), schedule, epsilon)
        if name == "moudafi":
            for key in ("c", "q"):
                if key not in sets:
                    raise ConfigError(f"problem.set_{key}", "missing (split problems need set_c and set_q)")
            if "map" not in maps:
                raise ConfigError("problem.map", "missing (split problems need a linear map)")
            S = projection(sets["q"])
            U = projection(sets["c"])
            return name, *preset_moudafi(S, U, maps["map"],
                                         _get(mdef, "lambda", float, where),
                                         _get(mdef, "mu", float, where), schedule, epsilon)
        if name == "custom":
            V = build_operator(_get(mdef, "operator", dict, where), sets, maps, f"{where}.operator")
            sigma = mdef.get("sigma")
            rule = StepRule(lambda_schedule=schedule, epsilon=epsilon,
                            sigma=None if sigma is None else (lambda x, s=float(sigma): s))
            return name, V, rule
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from exc
    raise ConfigError(f"{where}.name", f"unknown method {name!r}")


def _out_path(template: str | None, method: str, n_methods: int, suffix: str):
    if template is None:
        return None
    if "{method}" in template:
        return template.format(method=method)
    if n_methods == 1:
        return template
    root, ext = os.path.splitext(template)
    return f"{root}_{method}{ext or suffix}"


def cmd_run(args) -> int:
    config = load_config(args.config)
    seed = int(os.environ.get("FP_SEED", config.get("seed", 0)))
    problem = config.get("problem", {})
    sets = _problem_sets(problem)
    maps = _build_maps(problem)
    methods = config.get("method", [])
    if not methods:
        raise ConfigError("method", "at least one [[method]] table is required")
    stop = _stopping(config)
    output = config.get("output", {})
    reference = problem.get("reference")

    rng = np.random.default_rng(seed)
    dim_hint = next(iter(sets.values())).dim if sets else None
    x0 = _start_point(config, rng, dim_hint)

    built = [_build_method(mdef, problem, sets, maps, i) for i, mdef in enumerate(methods)]

    def run_one(entry):
        name, V, rule = entry
        echo = {"config": os.fspath(args.config), "seed": seed, "method": name,
                "x0": [float(v) for v in x0], "experiment": config}
        return iterate(V, rule, stop, x0, reference=reference, config_echo=echo)

    if getattr(args, "parallel", False) and len(built) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=len(built)) as pool:
            traces = list(pool.map(run_one, built))
    else:
        traces = [run_one(entry) for entry in built]

    ok = True
    for (name, _, _), trace in zip(built, traces):
        csv_path = _out_path(output.get("csv"), name, len(methods), ".csv")
        json_path = _out_path(output.get("json"), name, len(methods), ".json")
        if csv_path:
            trace.write_csv(csv_path)
        if json_path:
            trace.write_json(json_path)
        extras = ""
        if reference is not None:
            extras = f", worst Fejer growth {fejer_check(trace, reference):.3e}"
        files = " ".join(p for p in (csv_path, json_path) if p)
        print(f"{name}: {trace.status.value} after {trace.iterations} iterations, "
              f"final residual {trace.final_residual:.3e}{extras}"
              + (f" -> {files}" if files else ""))
        if trace.status is not Status.CONVERGED:
            if not (trace.status is Status.MAX_ITERS and config.get("allow_max_iters", False)):
                ok = False
    return 0 if ok else 1


# --------------------------------------------------------------------------
# params


def cmd_params(args) -> int:
    q = args.query
    values = args.values

    def need(count):
        if len(values) != count:
            raise ConfigError("params", f"query {q!r} takes {count} value(s)")
        return [float(v) for v in values]

    if q == "nu":
        lam, mu = need(2)
        verdict = pa.nu_star(lam, mu)
        if verdict.nu_star is None:
            print(f"no solution: {verdict.notes}")
        else:
            print(f"{verdict.nu_star:g}")
        return 0
    if q == "gamma":
        alpha, beta = need(2)
        print(f"{pa.gamma_star(alpha, beta):g}")
        return 0
    if q == "chain":
        result = pa.chain_gamma([float(v) for v in values])
        if result.value is None:
            print(f"absent: {result.reason}")
        else:
            print(f"{result.value:g}")
        return 0
    if q == "rfne-to-spc":
        print(f"{pa.rfne_to_spc(need(1)[0]):g}")
        return 0
    if q == "spc-to-rfne":
        print(f"{pa.spc_to_rfne(need(1)[0]):g}")
        return 0
    if q == "dc-to-rc":
        print(f"{pa.demicontraction_to_relaxed_cutter(need(1)[0]):g}")
        return 0
    if q == "relax-dc":
        alpha, mu = need(2)
        print(f"{pa.relax_demicontraction(alpha, mu):g}")
        return 0
    if q == "nu-grid":
        lo, hi, step = args.min, args.max, args.step
        grid = np.arange(lo, hi + step / 2, step)
        lines = ["lambda,mu,nu"]
        for lam in grid:
            for mu in grid:
                nu = pa.nu_star_value(lam, mu)
                lines.append(f"{_fmt(lam)},{_fmt(mu)},{'' if np.isnan(nu) else _fmt(nu)}")
        text = "\n".join(lines) + "\n"
        if args.out:
            atomic_write_text(args.out, text)
            print(f"wrote {len(grid) * len(grid)} grid rows -> {args.out}")
        else:
            sys.stdout.write(text)
        return 0
    raise ConfigError("params", f"unknown query {q!r}")


# --------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    config = load_config(args.config)
    seed = int(os.environ.get("FP_SEED", config.get("seed", 0)))
    sets = {name: build_set(table, f"sets.{name}")
            for name, table in config.get("sets", {}).items()}
    maps = _build_maps(config.get("problem", {}))
    if "operator" not in config:
        raise ConfigError("operator", "missing")
    T = build_operator(config["operator"], sets, maps)
    claim_table = config.get("claim")
    if not claim_table:
        raise ConfigError("claim", "missing")
    prop = _get(claim_table, "property", str, "claim")
    try:
        claim = verify_mod.Claim(prop, claim_table.get("parameter"))
    except ValueError as exc:
        raise ConfigError("claim", str(exc)) from exc
    sampling = config.get("sampling", {})
    sampler = None
    if "scales" in sampling:
        if T.dim is None:
            raise ConfigError("sampling.scales", "operator dimension unknown")
        sampler = verify_mod.default_sampler(T.dim, scales=sampling["scales"])
    fix_points = config.get("fix_points")
    report = verify_mod.check_class(
        T, claim, sampler=sampler, fix_points=fix_points,
        n=int(config.get("samples", 10000)), seed=seed,
        tol=float(config.get("tol", 1e-9)),
    )
    text = json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
        print(f"report -> {args.out} ({report.verdict})")
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


# --------------------------------------------------------------------------
# counterexamples


def cmd_counterexample(args) -> int:
    name = args.name
    if name == "sharpness":
        if args.rho is None:
            raise ConfigError("rho", "sharpness needs --rho")
        w = verify_mod.sharpness_witness(args.lam, args.mu, args.rho)
        payload = {"k": w.k, "x": w.x.tolist(), "slack": w.slack,
                   "xi_star": w.xi_star, "limit_value": w.limit_value}
    elif name == "fix-collapse":
        r = verify_mod.fix_collapse_witness(args.lam, args.mu)
        payload = r.to_dict()
    elif name == "not-relaxed-cutter":
        r = verify_mod.not_relaxed_cutter_witness(args.lam, args.mu)
        payload = r.to_dict()
    elif name == "fixv":
        dim = 2
        normal = [0.0, 1.0]
        A = Hyperplane(normal, 0.0)
        if args.angle is not None:
            theta = np.deg2rad(args.angle)
            B = Hyperplane([-np.sin(theta), np.cos(theta)], 0.0)
        else:
            B = Hyperplane(normal, args.gap)
        r = verify_mod.fixv_characterization(A, B, args.lam, args.mu,
                                             max_iters=args.max_iters)
        payload = r.to_dict()
    else:
        raise ConfigError("name", f"unknown counterexample {name!r}")
    sys.stdout.write(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    return 0


# --------------------------------------------------------------------------
# entry point


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fixops",
        description="Fixed-point operator calculus: experiments, parameters, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config (file path or fig2/fig3)")
    p_run.add_argument("config")
    p_run.add_argument("--parallel", action="store_true",
                       help="run the methods concurrently (they are independent)")
    p_run.set_defaults(func=cmd_run)

    p_params = sub.add_parser("params", help="print closed-form parameter values")
    p_params.add_argument("query", choices=["nu", "gamma", "chain", "rfne-to-spc",
                                            "spc-to-rfne", "dc-to-rc", "relax-dc", "nu-grid"])
    p_params.add_argument("values", nargs="*")
    p_params.add_argument("--min", type=float, default=0.1, help="nu-grid lower bound")
    p_params.add_argument("--max", type=float, default=3.9, help="nu-grid upper bound")
    p_params.add_argument("--step", type=float, default=0.1, help="nu-grid spacing")
    p_params.add_argument("--out", help="nu-grid CSV output path")
    p_params.set_defaults(func=cmd_params)

    p_verify = sub.add_parser("verify", help="sample a class inequality, emit JSON report")
    p_verify.add_argument("config")
    p_verify.add_argument("--out", help="write the JSON report here instead of stdout")
    p_verify.set_defaults(func=cmd_verify)

    p_ce = sub.add_parser("counterexample", help="reproduce a sharpness/failure construction")
    p_ce.add_argument("name", choices=["sharpness", "fix-collapse", "not-relaxed-cutter", "fixv"])
    p_ce.add_argument("--lam", type=float, required=True)
    p_ce.add_argument("--mu", type=float, required=True)
    p_ce.add_argument("--rho", type=float, default=None)
    p_ce.add_argument("--gap", type=float, default=1.0, help="fixv: offset between parallel hyperplanes")
    p_ce.add_argument("--angle", type=float, default=None, help="fixv: use intersecting hyperplanes at this angle (degrees)")
    p_ce.add_argument("--max-iters", type=int, default=500)
    p_ce.set_defaults(func=cmd_counterexample)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FixopsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
