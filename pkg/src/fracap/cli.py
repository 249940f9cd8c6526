"""Command-line front end: one JSON config in, CSV/JSON artifacts out.

The command itself lives in the config (``"command"`` field); flags control
only the environment: ``--config PATH`` (required), ``--out DIR`` (default
./out), ``--lenient`` (accept unknown config keys), ``--threads N``
(pair-sum partition count, default 1) and ``--seed N`` (suite only).

Exit codes: 0 success, 1 computation failure (e.g. a solve that did not
converge, or a failed replay), 2 config error. Outputs are written
atomically (temp file + rename); every CSV starts with a comment line
recording the config hash and tool version, so identical configs reproduce
identical files bit for bit (for a fixed partition count).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass

from . import __version__
from .capacity import CapacityProblem, relative_capacity, sobolev_capacity
from .errors import FracapError, ParseError, ValidationError
from .exponents import build_node_exponent, build_pair_exponent
from .grids import grid_from_spec, mask_from_spec, read_grid_function
from .modular import ModularParams, luxemburg_norm, modular_value
from .optimize import OptimizerConfig
from .suite import SuiteConfig, replay_instance, run_suite

__all__ = ["main", "run_cli", "parse_config"]

COMMANDS = ("modular", "norm", "capacity", "relcap", "sweep", "suite", "replay")

_TOP_KEYS = {
    "modular": {"command", "grid", "s", "q", "p", "u_csv"},
    "norm": {"command", "grid", "s", "q", "p", "u_csv", "norm_tol"},
    "capacity": {
        "command", "grid", "s", "q", "p", "target", "radius", "radii",
        "truncate", "optimizer", "write_minimizer",
    },
    "relcap": {
        "command", "grid", "s", "q", "p", "target", "domain",
        "truncate", "optimizer", "write_minimizer",
    },
    "sweep": {
        "command", "grid", "s_values", "q", "p", "target", "radius",
        "truncate", "optimizer",
    },
    "suite": {"command", "suite"},
    "replay": {"command", "instance"},
}

_REQUIRED_KEYS = {
    "modular": {"grid", "s", "q", "p", "u_csv"},
    "norm": {"grid", "s", "q", "p", "u_csv"},
    "capacity": {"grid", "s", "q", "p", "target"},
    "relcap": {"grid", "s", "q", "p", "target", "domain"},
    "sweep": {"grid", "s_values", "q", "p", "target"},
    "suite": set(),
    "replay": {"instance"},
}

_NESTED_KEYS = {
    "grid": {"dim", "shape", "origin", "spacing"},
    "optimizer": {"max_iters", "grad_tol", "step_init", "armijo_c", "armijo_shrink", "f_tol"},
    "suite": {
        "seed", "sizes_1d", "sizes_2d", "dims", "s_values", "families",
        "trials", "partitions", "tolerances",
    },
    "q:constant": {"kind", "value"},
    "q:affine": {"kind", "base", "slope", "clip"},
    "q:ramp": {"kind", "lo", "hi", "axis"},
    "q:table": {"kind", "values", "path"},
    "p:constant": {"kind", "value"},
    "p:diagonal-invariant": {"kind", "base", "slope", "clip"},
    "p:separable": {"kind", "field"},
    "p:tabulated": {"kind", "values", "path"},
    "mask:full": {"kind"},
    "mask:interval": {"kind", "lo", "hi"},
    "mask:box": {"kind", "lo", "hi"},
    "mask:ball": {"kind", "center", "radius"},
    "mask:points": {"kind", "indices"},
    "mask:cantor": {"kind", "level"},
}


@dataclass
class RunConfig:
    command: str
    data: dict
    sha256: str
    base_dir: str


def _check_keys(obj: dict, allowed: set, context: str, lenient: bool) -> None:
    unknown = set(obj) - allowed
    if unknown and not lenient:
        raise ParseError(f"unknown key(s) {sorted(unknown)} in {context}")


def _check_spec_keys(spec, family: str, context: str, lenient: bool) -> None:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParseError(f"{context} must be an object with a 'kind' field")
    schema = _NESTED_KEYS.get(f"{family}:{spec['kind']}")
    if schema is None:
        raise ValidationError(f"{context}: unknown kind '{spec['kind']}'")
    _check_keys(spec, schema, context, lenient)


def _resolve_paths(spec: dict, base_dir: str) -> None:
    if "path" in spec and not os.path.isabs(spec["path"]):
        spec["path"] = os.path.join(base_dir, spec["path"])


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise ValidationError(f"{what} file does not exist: {path}")


def parse_config(path: str, lenient: bool = False) -> RunConfig:
    """Load and validate a config file; raises ParseError/ValidationError."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config file: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON (line {exc.lineno}, col {exc.colno}): {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError("config root must be a JSON object")
    command = data.get("command")
    if command not in COMMANDS:
        raise ValidationError(f"command must be one of {COMMANDS}, got {command!r}")
    _check_keys(data, _TOP_KEYS[command], "top level", lenient)
    missing = _REQUIRED_KEYS[command] - set(data)
    if missing:
        raise ValidationError(f"command '{command}' requires key(s) {sorted(missing)}")

    base_dir = os.path.dirname(os.path.abspath(path))
    if "grid" in data:
        if not isinstance(data["grid"], dict):
            raise ParseError("'grid' must be an object")
        _check_keys(data["grid"], _NESTED_KEYS["grid"], "grid spec", lenient)
    for field, family in (("q", "q"), ("p", "p")):
        if field in data:
            _check_spec_keys(data[field], family, f"'{field}' spec", lenient)
            _resolve_paths(data[field], base_dir)
            if "path" in data[field]:
                _require_file(data[field]["path"], f"'{field}' table")
            if family == "p" and data[field].get("kind") == "separable":
                _check_spec_keys(data[field]["field"], "q", "'p' separable field", lenient)
                _resolve_paths(data[field]["field"], base_dir)
                if "path" in data[field]["field"]:
                    _require_file(data[field]["field"]["path"], "'p' separable field table")
    for field in ("target", "domain"):
        if field in data:
            _check_spec_keys(data[field], "mask", f"'{field}' spec", lenient)
    if "optimizer" in data:
        if not isinstance(data["optimizer"], dict):
            raise ParseError("'optimizer' must be an object")
        _check_keys(data["optimizer"], _NESTED_KEYS["optimizer"], "optimizer overrides", lenient)
    if "suite" in data:
        if not isinstance(data["suite"], dict):
            raise ParseError("'suite' must be an object")
        _check_keys(data["suite"], _NESTED_KEYS["suite"], "suite overrides", lenient)
    if "s" in data and not 0.0 < float(data["s"]) < 1.0:
        raise ValidationError("s must lie in (0,1)")
    if "s_values" in data:
        if not data["s_values"] or any(not 0.0 < float(s) < 1.0 for s in data["s_values"]):
            raise ValidationError("every entry of s_values must lie in (0,1)")
    if "radius" in data and int(data["radius"]) < 0:
        raise ValidationError("radius must be >= 0")
    if "norm_tol" in data and not float(data["norm_tol"]) > 0:
        raise ValidationError("norm_tol must be positive")
    if "u_csv" in data:
        u_path = data["u_csv"]
        if not os.path.isabs(u_path):
            data["u_csv"] = u_path = os.path.join(base_dir, u_path)
        _require_file(u_path, "u_csv")
    if "instance" in data:
        inst = data["instance"]
        if not os.path.isabs(inst):
            data["instance"] = inst = os.path.join(base_dir, inst)
        _require_file(inst, "instance")
    return RunConfig(command, data, hashlib.sha256(raw).hexdigest(), base_dir)


# --------------------------------------------------------------------------
# output helpers


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def _write_csv(path: str, comment: str, header: list, rows: list) -> None:
    import io

    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    _atomic_write(path, buf.getvalue())


def _write_json(path: str, doc: dict) -> None:
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# command execution


def _build_params(data: dict, threads: int) -> ModularParams:
    grid = grid_from_spec(data["grid"])
    q = build_node_exponent(grid, data["q"])
    p = build_pair_exponent(grid, data["p"])
    return ModularParams(grid, q, p, float(data["s"]), partitions=threads)


def _optimizer_cfg(data: dict) -> OptimizerConfig | None:
    if "optimizer" not in data:
        return None
    return OptimizerConfig(**data["optimizer"])


def _exponent_summary(params: ModularParams) -> str:
    return (
        f"q[{params.node_exp.lo:.6g},{params.node_exp.hi:.6g}];"
        f"p[{params.pair_exp.lo:.6g},{params.pair_exp.hi:.6g}]"
    )


def _set_descriptor(spec: dict) -> str:
    return json.dumps(spec, sort_keys=True, separators=(",", ":"))


def _run_modular(cfg: RunConfig, out_dir: str, comment: str, threads: int) -> int:
    params = _build_params(cfg.data, threads)
    u = read_grid_function(cfg.data["u_csv"], params.grid)
    mv = modular_value(u, params)
    _write_csv(
        os.path.join(out_dir, "modular.csv"),
        comment,
        ["s", "exponents", "lebesgue_term", "gagliardo_term", "total"],
        [[params.order, _exponent_summary(params), mv.lebesgue_term, mv.gagliardo_term, mv.total]],
    )
    _write_json(
        os.path.join(out_dir, "modular.json"),
        {
            "config_sha256": cfg.sha256,
            "version": __version__,
            "lebesgue_term": mv.lebesgue_term,
            "gagliardo_term": mv.gagliardo_term,
            "total": mv.total,
        },
    )
    print(f"modular total = {_fmt(mv.total)}")
    return 0


def _run_norm(cfg: RunConfig, out_dir: str, comment: str, threads: int) -> int:
    params = _build_params(cfg.data, threads)
    u = read_grid_function(cfg.data["u_csv"], params.grid)
    tol = float(cfg.data.get("norm_tol", 1e-10))
    norm = luxemburg_norm(u, params, tol=tol)
    mv = modular_value(u, params)
    _write_csv(
        os.path.join(out_dir, "norm.csv"),
        comment,
        ["s", "exponents", "luxemburg_norm", "modular_total"],
        [[params.order, _exponent_summary(params), norm, mv.total]],
    )
    _write_json(
        os.path.join(out_dir, "norm.json"),
        {
            "config_sha256": cfg.sha256,
            "version": __version__,
            "luxemburg_norm": norm,
            "modular_total": mv.total,
            "tol": tol,
        },
    )
    print(f"luxemburg norm = {_fmt(norm)}")
    return 0


_CAP_HEADER = ["variant", "set", "r", "s", "exponents", "value", "iters", "converged"]


def _run_capacity(cfg: RunConfig, out_dir: str, comment: str, threads: int) -> int:
    data = cfg.data
    params = _build_params(data, threads)
    target = mask_from_spec(params.grid, data["target"])
    truncate = bool(data.get("truncate", True))
    opt = _optimizer_cfg(data)
    descriptor = _set_descriptor(data["target"])
    if "radii" in data:
        radii = [int(r) for r in data["radii"]]
        if not radii or radii[-1] != 0 or any(a < b for a, b in zip(radii, radii[1:])):
            raise ValidationError("radii must be sorted descending and end at 0")
    else:
        radii = [int(data.get("radius", 0))]
    rows = []
    results = []
    for r in radii:
        res = sobolev_capacity(CapacityProblem(params, target, radius=r, truncate=truncate), opt)
        results.append((r, res))
    ok = True
    for r, res in results:
        ok &= res.solve.converged
        rows.append(
            [
                "sobolev", descriptor, r, params.order, _exponent_summary(params),
                res.value, res.solve.iters, res.solve.converged,
            ]
        )
    _write_csv(os.path.join(out_dir, "capacity.csv"), comment, _CAP_HEADER, rows)
    doc = {
        "config_sha256": cfg.sha256,
        "version": __version__,
        "results": [
            {
                "radius": r,
                "value": res.value,
                "iters": res.solve.iters,
                "converged": res.solve.converged,
                "projected_grad_norm": res.solve.projected_grad_norm,
            }
            for r, res in results
        ],
    }
    if data.get("write_minimizer"):
        for entry, (_, res) in zip(doc["results"], results):
            entry["minimizer"] = [float(v) for v in res.minimizer.values]
    _write_json(os.path.join(out_dir, "capacity.json"), doc)
    for r, res in results:
        print(f"capacity r={r}: {_fmt(res.value)} ({'converged' if res.solve.converged else 'NOT CONVERGED'})")
    return 0 if ok else 1


def _run_relcap(cfg: RunConfig, out_dir: str, comment: str, threads: int) -> int:
    data = cfg.data
    params = _build_params(data, threads)
    target = mask_from_spec(params.grid, data["target"])
    domain = mask_from_spec(params.grid, data["domain"])
    prob = CapacityProblem(
        params, target, variant="relative", domain=domain,
        truncate=bool(data.get("truncate", True)),
    )
    res = relative_capacity(prob, _optimizer_cfg(data))
    descriptor = _set_descriptor({"target": data["target"], "domain": data["domain"]})
    _write_csv(
        os.path.join(out_dir, "relcap.csv"),
        comment,
        _CAP_HEADER,
        [[
            "relative", descriptor, 0, params.order, _exponent_summary(params),
            res.value, res.solve.iters, res.solve.converged,
        ]],
    )
    doc = {
        "config_sha256": cfg.sha256,
        "version": __version__,
        "value": res.value,
        "iters": res.solve.iters,
        "converged": res.solve.converged,
    }
    if data.get("write_minimizer"):
        doc["minimizer"] = [float(v) for v in res.minimizer.values]
    _write_json(os.path.join(out_dir, "relcap.json"), doc)
    print(f"relative capacity: {_fmt(res.value)}")
    return 0 if res.solve.converged else 1


def _run_sweep(cfg: RunConfig, out_dir: str, comment: str, threads: int) -> int:
    data = cfg.data
    grid = grid_from_spec(data["grid"])
    q = build_node_exponent(grid, data["q"])
    p = build_pair_exponent(grid, data["p"])
    target = mask_from_spec(grid, data["target"])
    truncate = bool(data.get("truncate", True))
    radius = int(data.get("radius", 0))
    opt = _optimizer_cfg(data)
    descriptor = _set_descriptor(data["target"])
    rows = []
    ok = True
    values = []
    for s in data["s_values"]:
        params = ModularParams(grid, q, p, float(s), partitions=threads)
        res = sobolev_capacity(CapacityProblem(params, target, radius=radius, truncate=truncate), opt)
        ok &= res.solve.converged
        values.append({"s": float(s), "value": res.value, "converged": res.solve.converged})
        rows.append(
            [
                "sobolev", descriptor, radius, float(s), _exponent_summary(params),
                res.value, res.solve.iters, res.solve.converged,
            ]
        )
    _write_csv(os.path.join(out_dir, "sweep.csv"), comment, _CAP_HEADER, rows)
    _write_json(
        os.path.join(out_dir, "sweep.json"),
        {"config_sha256": cfg.sha256, "version": __version__, "rows": values},
    )
    print(f"sweep: {len(rows)} rows written")
    return 0 if ok else 1


def _run_suite(cfg: RunConfig, out_dir: str, threads: int, seed: int | None) -> int:
    overrides = dict(cfg.data.get("suite", {}))
    if seed is not None:
        overrides["seed"] = seed
    overrides["partitions"] = threads
    suite_cfg = SuiteConfig(**overrides)
    report = run_suite(suite_cfg)
    _atomic_write(os.path.join(out_dir, "suite_report.json"), report.to_json())
    print(report.summary())
    return 0


def _run_replay(cfg: RunConfig, out_dir: str) -> int:
    with open(cfg.data["instance"]) as fh:
        doc = json.load(fh)
    outcome = replay_instance(doc)
    _write_json(os.path.join(out_dir, "replay.json"), outcome)
    status = "PASS" if outcome["passed"] else ("INFO" if outcome["passed"] is None else "FAIL")
    print(f"replay {outcome['property']}: {status} (margin {outcome['margin']:.6g})")
    if outcome["passed"] is False:
        return 1
    return 0


def run_cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracap",
        description="Variable-exponent fractional modulars, norms and capacities on grids",
    )
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default="./out", help="output directory (default ./out)")
    parser.add_argument("--lenient", action="store_true", help="accept unknown config keys")
    parser.add_argument("--threads", type=int, default=1, help="pair-sum partition count")
    parser.add_argument("--seed", type=int, default=None, help="suite seed override")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config, lenient=args.lenient)
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
    except (ParseError, ValidationError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    comment = f"config_sha256={cfg.sha256} tool_version={__version__}"
    try:
        if cfg.command == "modular":
            return _run_modular(cfg, args.out, comment, args.threads)
        if cfg.command == "norm":
            return _run_norm(cfg, args.out, comment, args.threads)
        if cfg.command == "capacity":
            return _run_capacity(cfg, args.out, comment, args.threads)
        if cfg.command == "relcap":
            return _run_relcap(cfg, args.out, comment, args.threads)
        if cfg.command == "sweep":
            return _run_sweep(cfg, args.out, comment, args.threads)
        if cfg.command == "suite":
            return _run_suite(cfg, args.out, args.threads, args.seed)
        if cfg.command == "replay":
            return _run_replay(cfg, args.out)
        raise ValidationError(f"unhandled command {cfg.command}")
    except (ParseError, ValidationError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except FracapError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
