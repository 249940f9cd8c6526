"""Randomized property campaigns over the whole library, with replayable failures.

Each property draws fresh instances (grids, exponent fields, grid functions,
masks) from a seeded generator, runs its check, and contributes a row to a
machine-readable report (JSON, ``schema: 1``). Failures embed the full
serialized instance; :func:`replay_instance` re-runs exactly one such
payload. Reports are deterministic given the seed and the partition count.

Instance conventions: grid functions are drawn with independent node values
uniform in [-2, 2] (so sign changes exercise the positive/negative-part
paths), and masks are random index windows filling between one node and
half the grid. Properties with intrinsic size limits (the finite-difference
gradient check, the brute-force oracle) draw their own small grids instead
of the configured sizes.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _version
from .capacity import (
    CapacityProblem,
    capacity_of,
    decreasing_compacts_test,
    exterior_capacity,
    increasing_sets_test,
    relative_capacity,
    smoothed_capacity_table,
    sobolev_capacity,
)
from .errors import ValidationError
from .exponents import build_node_exponent, build_pair_exponent
from .grids import Grid, GridFunction, Mask, dilate, grid_from_spec
from .lattice import abs_val, clamp01, neg_part, pointwise_max, pointwise_min, pos_part
from .modular import (
    ModularParams,
    convergence_equivalence_report,
    doubling_ratio,
    luxemburg_norm,
    modular_gradient,
    modular_value,
    uniform_convexity_probe,
)
from .optimize import brute_force_capacity, solve_pinned_box

__all__ = ["SuiteConfig", "SuiteReport", "run_suite", "replay_instance", "DEFAULT_FAMILIES"]

DEFAULT_FAMILIES = [
    {
        "name": "constant-2",
        "q": {"kind": "constant", "value": 2.0},
        "p": {"kind": "constant", "value": 2.0},
    },
    {
        "name": "affine-q-radial-p",
        "q": {"kind": "ramp", "lo": 1.5, "hi": 2.5, "axis": 0},
        "p": {"kind": "diagonal-invariant", "base": 2.0, "slope": 1.0, "clip": 1.0},
    },
]


@dataclass
class SuiteConfig:
    seed: int = 42
    sizes_1d: list = field(default_factory=lambda: [9, 17])
    sizes_2d: list = field(default_factory=lambda: [[9, 9]])
    dims: list = field(default_factory=lambda: [1, 2])
    s_values: list = field(default_factory=lambda: [0.3, 0.7])
    families: list = field(default_factory=lambda: [dict(f) for f in DEFAULT_FAMILIES])
    trials: int = 20
    partitions: int = 1
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not self.s_values or any(not 0.0 < s < 1.0 for s in self.s_values):
            raise ValidationError("all s values must lie in (0,1)")
        if not self.dims or any(d not in (1, 2) for d in self.dims):
            raise ValidationError("dims must be a nonempty subset of {1,2}")
        if 1 in self.dims and not self.sizes_1d:
            raise ValidationError("dims include 1 but sizes_1d is empty")
        if 2 in self.dims and not self.sizes_2d:
            raise ValidationError("dims include 2 but sizes_2d is empty")
        if not self.families:
            raise ValidationError("need at least one exponent family")
        if self.partitions < 1:
            raise ValidationError("partitions must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# --------------------------------------------------------------------------
# payload (de)serialization


def _params_from(payload: dict) -> ModularParams:
    grid = grid_from_spec(payload["grid"])
    q = build_node_exponent(grid, payload["q"])
    p = build_pair_exponent(grid, payload["p"])
    return ModularParams(grid, q, p, payload["s"], payload.get("partitions", 1))


def _gf(payload: dict, key: str, params: ModularParams) -> GridFunction:
    return GridFunction(params.grid, np.asarray(payload[key], dtype=float))


def _mask(payload: dict, key: str, params: ModularParams) -> Mask:
    member = np.zeros(params.grid.size, dtype=bool)
    member[np.asarray(payload[key], dtype=int)] = True
    return Mask(params.grid, member)


def _mask_payload(member: np.ndarray) -> list:
    return [int(i) for i in np.flatnonzero(member)]


# --------------------------------------------------------------------------
# instance draws


def _draw_grid(rng, cfg: SuiteConfig) -> Grid:
    dim = int(cfg.dims[rng.integers(len(cfg.dims))])
    if dim == 1:
        shape = (int(cfg.sizes_1d[rng.integers(len(cfg.sizes_1d))]),)
    else:
        shape = tuple(int(n) for n in cfg.sizes_2d[rng.integers(len(cfg.sizes_2d))])
    spacing = 1.0 / (max(shape) - 1)
    return Grid(dim, shape, (0.0,) * dim, spacing)


def _draw_base(rng, cfg: SuiteConfig, grid: Grid | None = None, family: dict | None = None) -> dict:
    grid = grid or _draw_grid(rng, cfg)
    family = family or cfg.families[rng.integers(len(cfg.families))]
    return {
        "grid": grid.to_spec(),
        "s": float(cfg.s_values[rng.integers(len(cfg.s_values))]),
        "q": dict(family["q"]),
        "p": dict(family["p"]),
        "partitions": cfg.partitions,
    }


def _draw_values(rng, n: int) -> list:
    return [float(v) for v in rng.uniform(-2.0, 2.0, n)]


def _draw_window(rng, shape: tuple) -> np.ndarray:
    """Random index box filling between one node and about half the grid."""
    member = np.zeros(shape, dtype=bool)
    slices = []
    for n in shape:
        width = int(rng.integers(1, max(2, n // 2 + 1)))
        lo = int(rng.integers(0, n - width + 1))
        slices.append(slice(lo, lo + width))
    member[tuple(slices)] = True
    return member.ravel()


def _shrink_window(member: np.ndarray, shape: tuple) -> np.ndarray:
    """Strip one boundary layer per axis; may become empty."""
    arr = member.reshape(shape)
    idx = np.argwhere(arr)
    lo = idx.min(axis=0) + 1
    hi = idx.max(axis=0) - 1
    out = np.zeros(shape, dtype=bool)
    if np.all(lo <= hi):
        out[tuple(slice(a, b + 1) for a, b in zip(lo, hi))] = True
    return out.ravel()


def _constant_family(value: float) -> dict:
    return {
        "name": f"constant-{value:g}",
        "q": {"kind": "constant", "value": float(value)},
        "p": {"kind": "constant", "value": float(value)},
    }


def _separated_values(rng, n: int, gap: float = 1e-3) -> list:
    """Uniform draw re-sampled until nodes are separated from 0 and each other.

    Keeps the finite-difference oracle well conditioned: central differences
    of |t|**e terms lose accuracy only inside O(gap) neighborhoods of the
    kinks, which the draw avoids.
    """
    for _ in range(200):
        u = np.sort(rng.uniform(-2.0, 2.0, n))
        if np.min(np.abs(u)) > gap and (n < 2 or np.min(np.diff(u)) > gap):
            perm = rng.permutation(n)
            return [float(v) for v in u[perm]]
    u = np.linspace(-2.0, 2.0, n + 2)[1:-1]
    u[np.abs(u) < gap] += 3 * gap
    return [float(v) for v in u]


# --------------------------------------------------------------------------
# checks


@dataclass
class Outcome:
    ok: bool | None
    margin: float
    details: dict = field(default_factory=dict)


def _check_zero(payload):
    params = _params_from(payload)
    total = modular_value(GridFunction(params.grid, np.zeros(params.grid.size)), params).total
    return Outcome(total == 0.0, -total, {"total": total})


def _check_even(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    a = modular_value(u, params).total
    b = modular_value(GridFunction(params.grid, -u.values), params).total
    gap = abs(a - b)
    tol = payload["tol"] * max(1.0, a)
    return Outcome(gap <= tol, tol - gap, {"gap": gap})


def _check_convex(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    v = _gf(payload, "v", params)
    t = payload["t"]
    mix = GridFunction(params.grid, t * u.values + (1.0 - t) * v.values)
    lhs = modular_value(mix, params).total
    rhs = t * modular_value(u, params).total + (1.0 - t) * modular_value(v, params).total
    margin = rhs + payload["tol"] - lhs
    return Outcome(margin >= 0.0, margin, {"lhs": lhs, "rhs": rhs, "t": t})


def _check_scaling_monotone(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    lams = np.linspace(0.0, 2.5, 20)
    vals = [modular_value(GridFunction(params.grid, lam * u.values), params).total for lam in lams]
    worst = min(b - a for a, b in zip(vals, vals[1:]))
    slack = payload["tol"] * max(1.0, vals[-1])
    return Outcome(worst >= -slack, worst + slack, {"values_first_last": [vals[0], vals[-1]]})


def _check_power_scaling(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    lam = payload["lam"]
    p0 = payload["p0"]
    base = modular_value(u, params).total
    scaled = modular_value(GridFunction(params.grid, lam * u.values), params).total
    expect = lam**p0 * base
    gap = abs(scaled - expect)
    tol = payload["tol"] * max(1.0, abs(expect))
    return Outcome(gap <= tol, tol - gap, {"scaled": scaled, "expect": expect})


def _check_doubling_bound(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    ratio = doubling_ratio(u, params)
    bound = params.doubling_bound()
    margin = bound * (1.0 + payload["tol"]) - ratio
    return Outcome(margin >= 0.0, margin, {"ratio": ratio, "bound": bound})


def _check_doubling_quadratic(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    gap = abs(doubling_ratio(u, params) - 4.0)
    return Outcome(gap <= payload["tol"], payload["tol"] - gap, {"gap": gap})


def _fd_gradient(u: GridFunction, params: ModularParams) -> np.ndarray:
    out = np.empty(u.values.size)
    for i in range(u.values.size):
        h = 1e-6 * (1.0 + abs(u.values[i]))
        up = u.values.copy()
        up[i] += h
        dn = u.values.copy()
        dn[i] -= h
        fp = modular_value(GridFunction(params.grid, up), params).total
        fm = modular_value(GridFunction(params.grid, dn), params).total
        out[i] = (fp - fm) / (2.0 * h)
    return out


def _check_gradient_fd(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    analytic = modular_gradient(u, params).values
    fd = _fd_gradient(u, params)
    rel = float(np.max(np.abs(analytic - fd)) / max(1.0, np.max(np.abs(analytic))))
    return Outcome(rel < payload["tol"], payload["tol"] - rel, {"rel_err": rel})


def _check_lux_unit(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    lam = luxemburg_norm(u, params)
    val = modular_value(GridFunction(params.grid, u.values / lam), params).total
    ok = 1.0 - payload["tol"] <= val <= 1.0
    margin = min(val - (1.0 - payload["tol"]), 1.0 - val)
    return Outcome(ok, margin, {"modular_at_unit": val, "norm": lam})


def _check_lux_homogeneous(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    alpha = payload["alpha"]
    left = luxemburg_norm(GridFunction(params.grid, alpha * u.values), params)
    right = abs(alpha) * luxemburg_norm(u, params)
    gap = abs(left - right)
    tol = payload["tol"] * max(1.0, right)
    return Outcome(gap <= tol, tol - gap, {"left": left, "right": right})


def _check_lux_triangle(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    v = _gf(payload, "v", params)
    lhs = luxemburg_norm(GridFunction(params.grid, u.values + v.values), params)
    rhs = luxemburg_norm(u, params) + luxemburg_norm(v, params)
    margin = rhs + payload["tol"] * max(1.0, rhs) - lhs
    return Outcome(margin >= 0.0, margin, {"lhs": lhs, "rhs": rhs})


def _check_lux_unit_ball(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    tol = payload["tol"]
    rho = modular_value(u, params).total
    norm = luxemburg_norm(u, params)
    ok = True
    margin = 1.0
    if rho <= 1.0:
        ok &= norm <= 1.0 + tol
        margin = min(margin, 1.0 + tol - norm)
    if norm <= 1.0:
        ok &= rho <= 1.0 + tol
        margin = min(margin, 1.0 + tol - rho)
    return Outcome(bool(ok), margin, {"modular": rho, "norm": norm})


def _check_uniform_convexity(payload):
    params = _params_from(payload)
    pairs = [
        (_gf({"u": f, "tol": 0}, "u", params), _gf({"u": g, "tol": 0}, "u", params))
        for f, g in payload["pairs"]
    ]
    probe = uniform_convexity_probe(pairs, params, payload["eps"])
    margin = 1.0 - probe
    return Outcome(margin > 0.0, margin, {"probe": probe})


def _check_uniform_convexity_quadratic(payload):
    # with both exponents constant 2 the parallelogram law pins the probe:
    # every surviving pair has midpoint ratio 1 - rho((f-g)/2)/mean <= 1 - eps
    params = _params_from(payload)
    pairs = [
        (_gf({"u": f, "tol": 0}, "u", params), _gf({"u": g, "tol": 0}, "u", params))
        for f, g in payload["pairs"]
    ]
    eps = payload["eps"]
    probe = uniform_convexity_probe(pairs, params, eps)
    margin = (1.0 - eps) + payload["tol"] - probe
    return Outcome(margin >= 0.0, margin, {"probe": probe, "eps": eps})


def _check_convergence_equivalence(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    w = np.asarray(payload["w"], dtype=float)
    seq = [GridFunction(params.grid, u.values + w / 4.0**n) for n in range(1, 11)]
    probe = convergence_equivalence_report(seq, u, params, modular_tol=0.0, norm_tol=0.0)
    mods, norms = probe.modulars, probe.norms
    # surrogate thresholds scaled off the sequence head
    mtol = mods[0] * 1e-7
    ntol = norms[0] * 1e-5
    report = convergence_equivalence_report(seq, u, params, modular_tol=mtol, norm_tol=ntol)
    decreasing = all(b < a for a, b in zip(mods, mods[1:])) and all(
        b < a for a, b in zip(norms, norms[1:])
    )
    converged_together = report.modular_converged and report.norm_converged and not report.violation
    # negative control: a constant offset converges in neither sense
    flat = [GridFunction(params.grid, u.values + w) for _ in range(3)]
    flat_report = convergence_equivalence_report(flat, u, params, modular_tol=mtol, norm_tol=ntol)
    control_ok = (
        not flat_report.modular_converged
        and not flat_report.norm_converged
        and not flat_report.violation
    )
    ok = decreasing and converged_together and control_ok
    return Outcome(
        ok,
        1.0 if ok else -1.0,
        {"last_modular": mods[-1], "last_norm": norms[-1]},
    )


def _check_lattice_identities(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    v = _gf(payload, "v", params)
    pos, neg = pos_part(u), neg_part(u)
    exact = (
        np.array_equal(pos.values - neg.values, u.values)
        and np.array_equal(pos.values + neg.values, abs_val(u).values)
        and np.array_equal(
            pointwise_min(u, v).values + pointwise_max(u, v).values, u.values + v.values
        )
    )
    # proof identities max{u,v} = (u-v)^+ + v, min{u,v} = u - (u-v)^+
    # involve a genuine subtraction, so rounding slack applies
    dplus = np.maximum(u.values - v.values, 0.0)
    scale = 1.0 + np.abs(u.values) + np.abs(v.values)
    gap = max(
        float(np.max(np.abs(dplus + v.values - pointwise_max(u, v).values) / scale)),
        float(np.max(np.abs(u.values - dplus - pointwise_min(u, v).values) / scale)),
    )
    ok = exact and gap <= payload["tol"]
    return Outcome(ok, payload["tol"] - gap if exact else -1.0, {"proof_identity_gap": gap})


def _gagliardo(u: GridFunction, params: ModularParams) -> float:
    return modular_value(u, params).gagliardo_term


def _check_abs_gagliardo(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    margin = _gagliardo(u, params) + payload["tol"] - _gagliardo(abs_val(u), params)
    return Outcome(margin >= 0.0, margin, {})


def _check_pos_gagliardo(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    margin = _gagliardo(u, params) + payload["tol"] - _gagliardo(pos_part(u), params)
    return Outcome(margin >= 0.0, margin, {})


def _check_min_one_modular(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    one = GridFunction(params.grid, np.ones(params.grid.size))
    margin = (
        modular_value(u, params).total
        + payload["tol"]
        - modular_value(pointwise_min(one, u), params).total
    )
    return Outcome(margin >= 0.0, margin, {})


def _check_clamp_modular(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    margin = (
        modular_value(u, params).total + payload["tol"] - modular_value(clamp01(u), params).total
    )
    return Outcome(margin >= 0.0, margin, {})


def _check_clamp_pointwise(payload):
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    v = _gf(payload, "v", params)
    cu, cv = clamp01(u), clamp01(v)
    idempotent = np.array_equal(clamp01(cu).values, cu.values)
    in_range = np.all((cu.values >= 0.0) & (cu.values <= 1.0))
    lip_gap = float(
        np.max(np.abs(cu.values - cv.values) - np.abs(u.values - v.values) * (1.0 + 1e-15))
    )
    ok = bool(idempotent and in_range and lip_gap <= 0.0)
    return Outcome(ok, -lip_gap, {"idempotent": bool(idempotent)})


def _check_descent_feasible(payload):
    params = _params_from(payload)
    pinned = _mask(payload, "pinned", params)
    res = solve_pinned_box(params, pinned)
    hist = res.history
    worst_rise = max(
        (b - a for a, b in zip(hist, hist[1:])), default=0.0
    )
    slack = payload["tol"] * max(1.0, hist[0])
    vals = res.minimizer.values
    feasible = bool(
        np.all(vals >= 0.0) and np.all(vals <= 1.0) and np.all(vals[pinned.member] == 1.0)
    )
    upper = res.value <= hist[0] + slack
    ok = feasible and upper and worst_rise <= slack
    return Outcome(ok, slack - worst_rise, {"iters": res.iters, "converged": res.converged})


def _check_oracle(payload):
    params = _params_from(payload)
    pinned = _mask(payload, "pinned", params)
    res = solve_pinned_box(params, pinned)
    brute = brute_force_capacity(params, pinned, payload["resolution"])
    gap = abs(res.value - brute)
    return Outcome(gap <= payload["tol"], payload["tol"] - gap, {"solver": res.value, "oracle": brute})


def _check_pin_scaling(payload):
    params = _params_from(payload)
    pinned = _mask(payload, "pinned", params)
    c = payload["c"]
    p0 = payload["p0"]
    base = solve_pinned_box(params, pinned, box=False).value
    scaled = solve_pinned_box(params, pinned, box=False, pin_value=c).value
    expect = c**p0 * base
    gap = abs(scaled - expect)
    tol = payload["tol"] * max(1.0, abs(expect))
    return Outcome(gap <= tol, tol - gap, {"scaled": scaled, "expect": expect})


def _check_capacity_empty(payload):
    params = _params_from(payload)
    prob = CapacityProblem(params, params.grid.empty_mask())
    value = sobolev_capacity(prob).value
    return Outcome(value == 0.0, -value, {"value": value})


def _check_capacity_monotone(payload):
    params = _params_from(payload)
    small = _mask(payload, "small", params)
    big = _mask(payload, "big", params)
    va = sobolev_capacity(CapacityProblem(params, small, radius=payload["radius"])).value
    vb = sobolev_capacity(CapacityProblem(params, big, radius=payload["radius"])).value
    margin = vb + payload["tol"] - va
    return Outcome(margin >= 0.0, margin, {"small": va, "big": vb})


def _check_capacity_truncation(payload):
    params = _params_from(payload)
    target = _mask(payload, "target", params)
    on = sobolev_capacity(CapacityProblem(params, target, truncate=True)).value
    off = sobolev_capacity(CapacityProblem(params, target, truncate=False)).value
    gap = abs(on - off)
    return Outcome(gap <= payload["tol"], payload["tol"] - gap, {"boxed": on, "free": off})


def _check_capacity_outer(payload):
    params = _params_from(payload)
    target = _mask(payload, "target", params)
    prob = CapacityProblem(params, target)
    table = exterior_capacity(prob, [3, 2, 1, 0])
    tol = payload["tol"]
    nonincreasing = all(b <= a + tol for a, b in zip(table.values, table.values[1:]))
    base = sobolev_capacity(prob).value
    terminal = abs(table.values[-1] - base)
    ok = nonincreasing and terminal <= tol
    return Outcome(ok, tol - terminal, {"values": list(table.values)})


def _check_capacity_upper_bound(payload):
    params = _params_from(payload)
    target = _mask(payload, "target", params)
    radius = payload["radius"]
    res = sobolev_capacity(CapacityProblem(params, target, radius=radius))
    ind = GridFunction(params.grid, dilate(target, radius).member.astype(float))
    bound = modular_value(ind, params).total
    margin = bound + payload["tol"] * max(1.0, bound) - res.value
    return Outcome(margin >= 0.0, margin, {"value": res.value, "indicator_modular": bound})


def _check_relative_full_domain(payload):
    params = _params_from(payload)
    target = _mask(payload, "target", params)
    rel = relative_capacity(
        CapacityProblem(params, target, variant="relative", domain=params.grid.full_mask())
    ).value
    sob = sobolev_capacity(CapacityProblem(params, target)).value
    gap = abs(rel - sob)
    return Outcome(gap <= payload["tol"], payload["tol"] - gap, {"relative": rel, "sobolev": sob})


def _check_increasing_limit(payload):
    params = _params_from(payload)
    targets = [_mask({"m": idx}, "m", params) for idx in payload["targets"]]
    prob = CapacityProblem(params, targets[0])
    report = increasing_sets_test(prob, targets, tol=payload["tol"])
    return Outcome(report.passed, payload["tol"] - abs(report.values[-1] - report.limit_value), report.to_dict())


def _check_decreasing_limit(payload):
    params = _params_from(payload)
    compacts = [_mask({"m": idx}, "m", params) for idx in payload["compacts"]]
    prob = CapacityProblem(params, compacts[0])
    report = decreasing_compacts_test(prob, compacts, tol=payload["tol"])
    return Outcome(report.passed, payload["tol"] - abs(report.values[-1] - report.limit_value), report.to_dict())


def _check_smoothed(payload):
    params = _params_from(payload)
    target = _mask(payload, "target", params)
    prob = CapacityProblem(params, target)
    h = params.grid.spacing
    table = smoothed_capacity_table(prob, [2.0 * h, h, 0.0])
    floor_margin = min(table.values) - (table.reference - payload["floor_tol"])
    terminal = abs(table.values[-1] - table.reference)
    ok = floor_margin >= 0.0 and terminal <= payload["tol"]
    return Outcome(ok, min(floor_margin, payload["tol"] - terminal), table.to_dict())


def _check_subadditivity_info(payload):
    params = _params_from(payload)
    a = _mask(payload, "a", params)
    b = _mask(payload, "b", params)
    va = sobolev_capacity(CapacityProblem(params, a)).value
    vb = sobolev_capacity(CapacityProblem(params, b)).value
    vu = sobolev_capacity(CapacityProblem(params, a.union(b))).value
    ratio = vu / (va + vb)
    return Outcome(None, ratio, {"union": vu, "sum": va + vb})


def _check_relative_domains_info(payload):
    params = _params_from(payload)
    target = _mask(payload, "target", params)
    d1 = _mask(payload, "domain1", params)
    d2 = _mask(payload, "domain2", params)
    v1 = relative_capacity(CapacityProblem(params, target, variant="relative", domain=d1)).value
    v2 = relative_capacity(CapacityProblem(params, target, variant="relative", domain=d2)).value
    return Outcome(None, v2 - v1, {"smaller_domain": v1, "larger_domain": v2})


# --------------------------------------------------------------------------
# draws per property


def _with_u(rng, cfg, extra=None, **base_kw):
    payload = _draw_base(rng, cfg, **base_kw)
    n = int(np.prod(payload["grid"]["shape"]))
    payload["u"] = _draw_values(rng, n)
    if extra:
        payload.update(extra(rng, payload, n))
    return payload


def _draw_even(rng, cfg):
    return _with_u(rng, cfg)


def _draw_convex(rng, cfg):
    return _with_u(
        rng,
        cfg,
        extra=lambda rng, p, n: {"v": _draw_values(rng, n), "t": float(rng.uniform(0.0, 1.0))},
    )


def _draw_power_scaling(rng, cfg):
    p0 = float(rng.uniform(1.4, 3.0))
    payload = _with_u(rng, cfg, family=_constant_family(p0))
    payload["lam"] = float(rng.uniform(0.3, 2.5))
    payload["p0"] = p0
    return payload


def _draw_quadratic(rng, cfg):
    return _with_u(rng, cfg, family=_constant_family(2.0))


def _draw_gradient_fd(rng, cfg):
    if rng.integers(2) == 0:
        shape = (int(rng.integers(4, 17)),)
    else:
        shape = (int(rng.integers(2, 5)), int(rng.integers(2, 5)))
    grid = Grid(len(shape), shape, (0.0,) * len(shape), 1.0 / max(2, max(shape) - 1))
    payload = _draw_base(rng, cfg, grid=grid)
    payload["u"] = _separated_values(rng, grid.size)
    return payload


def _draw_lux_unit_ball(rng, cfg):
    payload = _with_u(rng, cfg)
    params = _params_from(payload)
    u = _gf(payload, "u", params)
    norm = luxemburg_norm(u, params)
    scale = float(rng.uniform(0.6, 1.4)) / norm
    payload["u"] = [float(v * scale) for v in u.values]
    return payload


def _draw_pairs(rng, cfg):
    payload = _draw_base(rng, cfg)
    n = int(np.prod(payload["grid"]["shape"]))
    payload["pairs"] = [[_draw_values(rng, n), _draw_values(rng, n)] for _ in range(8)]
    payload["eps"] = 0.5
    return payload


def _draw_pairs_quadratic(rng, cfg):
    payload = _draw_base(rng, cfg, family=_constant_family(2.0))
    n = int(np.prod(payload["grid"]["shape"]))
    payload["pairs"] = [[_draw_values(rng, n), _draw_values(rng, n)] for _ in range(8)]
    payload["eps"] = 0.5
    return payload


def _draw_convergence(rng, cfg):
    return _with_u(rng, cfg, extra=lambda rng, p, n: {"w": _draw_values(rng, n)})


def _draw_uv(rng, cfg):
    return _with_u(rng, cfg, extra=lambda rng, p, n: {"v": _draw_values(rng, n)})


def _draw_pinned(rng, cfg):
    payload = _draw_base(rng, cfg)
    shape = tuple(payload["grid"]["shape"])
    payload["pinned"] = _mask_payload(_draw_window(rng, shape))
    return payload


def _draw_oracle(rng, cfg):
    family = cfg.families[rng.integers(len(cfg.families))]
    if rng.integers(2) == 0:
        shape = (int(rng.integers(4, 8)),)
    else:
        shape = (2, 3)
    grid = Grid(len(shape), shape, (0.0,) * len(shape), 1.0 / (max(shape) - 1))
    payload = _draw_base(rng, cfg, grid=grid, family=family)
    member = np.zeros(grid.size, dtype=bool)
    pin_count = int(rng.integers(max(1, grid.size - 6), grid.size))
    member[rng.choice(grid.size, size=pin_count, replace=False)] = True
    free = grid.size - pin_count
    payload["pinned"] = _mask_payload(member)
    payload["resolution"] = 10 if free <= 3 else 5
    return payload


def _draw_pin_scaling(rng, cfg):
    p0 = float(rng.uniform(1.4, 3.0))
    payload = _draw_pinned(rng, cfg)
    fam = _constant_family(p0)
    payload["q"], payload["p"] = fam["q"], fam["p"]
    payload["p0"] = p0
    payload["c"] = float(rng.uniform(0.5, 2.0))
    return payload


def _draw_nested(rng, cfg):
    payload = _draw_base(rng, cfg)
    shape = tuple(payload["grid"]["shape"])
    big = _draw_window(rng, shape)
    small = _shrink_window(big, shape)
    if not small.any():
        small = np.zeros(len(big), dtype=bool)
        small[np.flatnonzero(big)[0]] = True
    payload["big"] = _mask_payload(big)
    payload["small"] = _mask_payload(small)
    payload["radius"] = int(rng.integers(0, 2))
    return payload


def _draw_target(rng, cfg):
    payload = _draw_base(rng, cfg)
    shape = tuple(payload["grid"]["shape"])
    payload["target"] = _mask_payload(_draw_window(rng, shape))
    return payload


def _draw_target_radius(rng, cfg):
    payload = _draw_target(rng, cfg)
    payload["radius"] = int(rng.integers(0, 3))
    return payload


def _draw_increasing(rng, cfg):
    payload = _draw_base(rng, cfg)
    grid = grid_from_spec(payload["grid"])
    base = Mask(grid, _draw_window(rng, grid.shape))
    chain = [base]
    for _ in range(2):
        nxt = dilate(chain[-1], 1)
        if nxt.same_set(chain[-1]):
            break
        chain.append(nxt)
    payload["targets"] = [_mask_payload(m.member) for m in chain]
    return payload


def _draw_decreasing(rng, cfg):
    payload = _draw_base(rng, cfg)
    shape = tuple(payload["grid"]["shape"])
    current = _draw_window(rng, shape)
    chain = [current]
    for _ in range(3):
        nxt = _shrink_window(chain[-1], shape)
        if np.array_equal(nxt, chain[-1]):
            break
        chain.append(nxt)
        if not nxt.any():
            break
    payload["compacts"] = [_mask_payload(m) for m in chain]
    return payload


def _draw_smoothed(rng, cfg):
    shift_ok = [
        f for f in cfg.families if f["p"]["kind"] in ("constant", "diagonal-invariant")
    ] or [_constant_family(2.0)]
    payload = _draw_base(rng, cfg, family=shift_ok[rng.integers(len(shift_ok))])
    shape = tuple(payload["grid"]["shape"])
    payload["target"] = _mask_payload(_draw_window(rng, shape))
    payload["floor_tol"] = 1e-6
    return payload


def _draw_subadditive(rng, cfg):
    payload = _draw_base(rng, cfg)
    shape = tuple(payload["grid"]["shape"])
    payload["a"] = _mask_payload(_draw_window(rng, shape))
    payload["b"] = _mask_payload(_draw_window(rng, shape))
    return payload


def _draw_relative_domains(rng, cfg):
    payload = _draw_base(rng, cfg)
    grid = grid_from_spec(payload["grid"])
    d2 = Mask(grid, _draw_window(rng, grid.shape))
    d2 = dilate(d2, 1)
    d1 = Mask(grid, _shrink_window(d2.member, grid.shape))
    if d1.count == 0:
        d1 = Mask(grid, np.zeros(grid.size, dtype=bool))
        d1.member[d2.indices()[0]] = True
    target = Mask(grid, np.zeros(grid.size, dtype=bool))
    target.member[d1.indices()[0]] = True
    payload["target"] = _mask_payload(target.member)
    payload["domain1"] = _mask_payload(d1.member)
    payload["domain2"] = _mask_payload(d2.member)
    return payload


@dataclass(frozen=True)
class PropertySpec:
    name: str
    kind: str  # "assert" or "info"
    tol: float
    draw: object
    check: object


PROPERTIES: tuple[PropertySpec, ...] = (
    PropertySpec("modular.zero_at_zero", "assert", 0.0, lambda rng, cfg: _draw_base(rng, cfg), _check_zero),
    PropertySpec("modular.even", "assert", 1e-15, _draw_even, _check_even),
    PropertySpec("modular.convex", "assert", 1e-12, _draw_convex, _check_convex),
    PropertySpec("modular.scaling_monotone", "assert", 1e-12, _draw_even, _check_scaling_monotone),
    PropertySpec("modular.power_scaling_constant_exponents", "assert", 1e-12, _draw_power_scaling, _check_power_scaling),
    PropertySpec("modular.doubling_bound", "assert", 1e-12, _draw_even, _check_doubling_bound),
    PropertySpec("modular.doubling_quadratic_exact", "assert", 1e-12, _draw_quadratic, _check_doubling_quadratic),
    PropertySpec("modular.gradient_matches_fd", "assert", 1e-5, _draw_gradient_fd, _check_gradient_fd),
    PropertySpec("modular.luxemburg_unit_modular", "assert", 1e-8, _draw_even, _check_lux_unit),
    PropertySpec(
        "modular.luxemburg_homogeneous",
        "assert",
        1e-8,
        lambda rng, cfg: _with_u(rng, cfg, extra=lambda rng, p, n: {"alpha": float(rng.uniform(-3.0, 3.0))}),
        _check_lux_homogeneous,
    ),
    PropertySpec("modular.luxemburg_triangle", "assert", 1e-8, _draw_uv, _check_lux_triangle),
    PropertySpec("modular.luxemburg_unit_ball", "assert", 1e-8, _draw_lux_unit_ball, _check_lux_unit_ball),
    PropertySpec("modular.uniform_convexity", "assert", 0.0, _draw_pairs, _check_uniform_convexity),
    PropertySpec("modular.uniform_convexity_quadratic", "assert", 1e-12, _draw_pairs_quadratic, _check_uniform_convexity_quadratic),
    PropertySpec("modular.convergence_equivalence", "assert", 0.0, _draw_convergence, _check_convergence_equivalence),
    PropertySpec("lattice.identities", "assert", 1e-12, _draw_uv, _check_lattice_identities),
    PropertySpec("lattice.abs_gagliardo", "assert", 1e-12, _draw_even, _check_abs_gagliardo),
    PropertySpec("lattice.pos_gagliardo", "assert", 1e-12, _draw_even, _check_pos_gagliardo),
    PropertySpec("lattice.min_one_modular", "assert", 1e-12, _draw_even, _check_min_one_modular),
    PropertySpec("lattice.clamp_modular", "assert", 1e-12, _draw_even, _check_clamp_modular),
    PropertySpec("lattice.clamp_pointwise", "assert", 0.0, _draw_uv, _check_clamp_pointwise),
    PropertySpec("optimizer.descent_feasible", "assert", 1e-12, _draw_pinned, _check_descent_feasible),
    PropertySpec("optimizer.oracle_agreement", "assert", 1e-5, _draw_oracle, _check_oracle),
    PropertySpec("optimizer.pin_scaling", "assert", 1e-6, _draw_pin_scaling, _check_pin_scaling),
    PropertySpec("capacity.empty_zero", "assert", 0.0, lambda rng, cfg: _draw_base(rng, cfg), _check_capacity_empty),
    PropertySpec("capacity.monotone", "assert", 1e-8, _draw_nested, _check_capacity_monotone),
    PropertySpec("capacity.truncation", "assert", 1e-6, _draw_target, _check_capacity_truncation),
    PropertySpec("capacity.outer_radii", "assert", 1e-8, _draw_target, _check_capacity_outer),
    PropertySpec("capacity.feasible_upper_bound", "assert", 1e-12, _draw_target_radius, _check_capacity_upper_bound),
    PropertySpec("capacity.relative_full_domain", "assert", 1e-8, _draw_target, _check_relative_full_domain),
    PropertySpec("capacity.increasing_limit", "assert", 1e-8, _draw_increasing, _check_increasing_limit),
    PropertySpec("capacity.decreasing_limit", "assert", 1e-8, _draw_decreasing, _check_decreasing_limit),
    PropertySpec("capacity.smoothed_compacts", "assert", 1e-4, _draw_smoothed, _check_smoothed),
    PropertySpec("capacity.subadditivity_ratio", "info", 0.0, _draw_subadditive, _check_subadditivity_info),
    PropertySpec("capacity.relative_domain_growth", "info", 0.0, _draw_relative_domains, _check_relative_domains_info),
)

_PROPERTY_INDEX = {spec.name: spec for spec in PROPERTIES}


@dataclass
class SuiteReport:
    config: dict
    rows: list

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "tool_version": _version,
            "config": self.config,
            "properties": self.rows,
            "all_passed": self.all_passed,
        }

    @property
    def all_passed(self) -> bool:
        return all(row["passed"] is not False for row in self.rows)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        lines = [f"{'property':40s} {'trials':>6s} {'fail':>5s} {'worst margin':>14s}  status"]
        for row in self.rows:
            status = "INFO" if row["passed"] is None else ("PASS" if row["passed"] else "FAIL")
            lines.append(
                f"{row['name']:40s} {row['trials']:6d} {row['failures']:5d} "
                f"{row['margin_min']:14.6g}  {status}"
            )
        lines.append(f"overall: {'PASS' if self.all_passed else 'FAIL'}")
        return "\n".join(lines)


def run_suite(cfg: SuiteConfig) -> SuiteReport:
    """Run every property ``cfg.trials`` times; deterministic given the seed."""
    rows = []
    for index, spec in enumerate(PROPERTIES):
        rng = np.random.default_rng([cfg.seed, index])
        tol = float(cfg.tolerances.get(spec.name, spec.tol))
        failures = 0
        margins = []
        failed_instances = []
        for _ in range(cfg.trials):
            payload = spec.draw(rng, cfg)
            payload["tol"] = tol
            outcome = spec.check(payload)
            margins.append(outcome.margin)
            if outcome.ok is False:
                failures += 1
                if len(failed_instances) < 3:
                    failed_instances.append({"property": spec.name, "payload": payload})
        rows.append(
            {
                "name": spec.name,
                "kind": spec.kind,
                "trials": cfg.trials,
                "failures": failures,
                "margin_min": min(margins),
                "margin_max": max(margins),
                "passed": None if spec.kind == "info" else failures == 0,
                "failed_instances": failed_instances,
            }
        )
    return SuiteReport(config=cfg.to_dict(), rows=rows)


def replay_instance(doc: dict) -> dict:
    """Re-run one serialized instance ({"property": name, "payload": {...}})."""
    name = doc.get("property")
    if name not in _PROPERTY_INDEX:
        raise ValidationError(f"unknown property '{name}'")
    spec = _PROPERTY_INDEX[name]
    outcome = spec.check(doc["payload"])
    return {
        "property": name,
        "passed": outcome.ok,
        "margin": outcome.margin,
        "details": outcome.details,
    }
