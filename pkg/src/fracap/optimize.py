"""Convex minimization of the modular under pin and box constraints.

The capacity problems all reduce to: minimize the modular over grid
functions that equal a pinned value on a constraint set, optionally
restricted to the box [0, pin]. The objective is convex and continuously
differentiable (exponents strictly above 1), but its curvature degenerates
or blows up where node values coincide, so the solver is a projected
gradient method with Armijo backtracking: first-order, monotone, and
robust across the whole exponent range. A brute-force oracle (exhaustive
grid search plus per-coordinate golden-section refinement) covers tiny
instances for independent verification.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleMask, TooManyFreeNodes, ValidationError
from .grids import GridFunction, Mask
from .modular import ModularParams, PairKernel

__all__ = [
    "OptimizerConfig",
    "SolveResult",
    "projected_gradient",
    "estimate_step",
    "solve_pinned_box",
    "brute_force_capacity",
]

_LINESEARCH_MAX = 60
_STALL_LIMIT = 10


@dataclass(frozen=True)
class OptimizerConfig:
    """Tunables for the projected gradient solver.

    ``grad_tol=None`` resolves to 1e-8 * sqrt(n) at solve time and
    ``step_init=None`` to the inverse of a power-iteration estimate of the
    Hessian norm at the start point (fallback 1.0).
    """

    max_iters: int = 5000
    grad_tol: float | None = None
    step_init: float | None = None
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    f_tol: float = 1e-12

    def __post_init__(self):
        if self.max_iters <= 0:
            raise ValidationError("max_iters must be positive")
        if self.grad_tol is not None and self.grad_tol <= 0:
            raise ValidationError("grad_tol must be positive")
        if self.step_init is not None and self.step_init <= 0:
            raise ValidationError("step_init must be positive")
        if not 0.0 < self.armijo_c < 1.0 or not 0.0 < self.armijo_shrink < 1.0:
            raise ValidationError("armijo parameters must lie in (0,1)")
        if self.f_tol <= 0:
            raise ValidationError("f_tol must be positive")


@dataclass(eq=False)
class SolveResult:
    minimizer: GridFunction
    value: float
    iters: int
    converged: bool
    projected_grad_norm: float
    history: list[float] = field(default_factory=list, repr=False)


def estimate_step(grad, x0: np.ndarray, free: np.ndarray, fallback: float = 1.0) -> float:
    """1 / (power-iteration estimate of the Hessian norm at x0).

    Hessian-vector products are taken by central differences of the
    gradient, restricted to the free coordinates. Deterministic.
    """
    n_free = int(free.sum())
    if n_free == 0:
        return fallback
    rng = np.random.default_rng(0)
    v = rng.standard_normal(x0.size)
    v[~free] = 0.0
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return fallback
    v /= nv
    eps = 1e-6 * (1.0 + float(np.abs(x0).max()))
    lam = 0.0
    for _ in range(12):
        hv = (grad(x0 + eps * v) - grad(x0 - eps * v)) / (2.0 * eps)
        hv[~free] = 0.0
        lam = float(np.linalg.norm(hv))
        if not np.isfinite(lam) or lam < 1e-12:
            return fallback
        v = hv / lam
    return 1.0 / lam


def projected_gradient(fun, grad, project, x0: np.ndarray, cfg: OptimizerConfig):
    """Monotone projected gradient descent with Armijo backtracking.

    Returns (x, value, iters, converged, projected_grad_norm, history).
    Convergence: the projected-gradient residual drops below grad_tol, or
    the relative objective decrease stays below f_tol for 10 consecutive
    iterations. Every accepted step satisfies the Armijo condition along
    the projected path, so the history is nonincreasing.
    """
    x = project(np.array(x0, dtype=float, copy=True))
    f = float(fun(x))
    history = [f]
    grad_tol = cfg.grad_tol if cfg.grad_tol is not None else 1e-8 * math.sqrt(x.size)
    step = cfg.step_init if cfg.step_init is not None else 1.0
    stall = 0
    converged = False
    pg_norm = math.inf
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        g = grad(x)
        pg_norm = float(np.linalg.norm(x - project(x - g)))
        if pg_norm <= grad_tol:
            converged = True
            iters -= 1
            break
        t = step
        accepted = False
        for _ in range(_LINESEARCH_MAX):
            cand = project(x - t * g)
            d = cand - x
            fc = float(fun(cand))
            if fc <= f + cfg.armijo_c * float(g @ d):
                accepted = True
                break
            t *= cfg.armijo_shrink
        if accepted and fc < f:
            rel_drop = (f - fc) / max(1.0, abs(f))
            stall = stall + 1 if rel_drop <= cfg.f_tol else 0
            x, f = cand, fc
            history.append(f)
            step = min(t / cfg.armijo_shrink, 1e12)
        else:
            # no measurable decrease left at floating-point resolution
            stall += 1
        if stall >= _STALL_LIMIT:
            converged = True
            break
    return x, f, iters, converged, pg_norm, history


def _box_projector(pinned: np.ndarray, box: bool, pin_value: float):
    hi = max(1.0, pin_value)

    def project(x: np.ndarray) -> np.ndarray:
        if box:
            np.clip(x, 0.0, hi, out=x)
        x[pinned] = pin_value
        return x

    return project


def minimize_kernel(
    kernel: PairKernel,
    pinned: np.ndarray,
    box: bool,
    cfg: OptimizerConfig | None = None,
    partitions: int = 1,
    pin_value: float = 1.0,
):
    """Solver core on a raw kernel; pinned is a boolean vector.

    Returns (x, value, iters, converged, projected_grad_norm, history).
    """
    cfg = cfg or OptimizerConfig()
    pinned = np.asarray(pinned, dtype=bool)
    free = ~pinned
    x0 = np.where(pinned, pin_value, 0.0)
    if not free.any():
        value = kernel.total(x0, partitions)
        return x0, value, 0, True, 0.0, [value]

    def fun(x):
        return kernel.total(x, partitions)

    def grad(x):
        return kernel.gradient(x, partitions)

    if cfg.step_init is None:
        cfg = OptimizerConfig(
            max_iters=cfg.max_iters,
            grad_tol=cfg.grad_tol,
            step_init=estimate_step(grad, x0, free),
            armijo_c=cfg.armijo_c,
            armijo_shrink=cfg.armijo_shrink,
            f_tol=cfg.f_tol,
        )
    project = _box_projector(pinned, box, pin_value)
    return projected_gradient(fun, grad, project, x0, cfg)


def solve_pinned_box(
    params: ModularParams,
    pinned: Mask,
    box: bool = True,
    cfg: OptimizerConfig | None = None,
    pin_value: float = 1.0,
) -> SolveResult:
    """Minimize the modular over the grid with u = pin_value on ``pinned``.

    ``box=True`` additionally restricts to 0 <= u <= max(1, pin_value).
    Starts from the indicator of the pinned set, which is always feasible.
    A non-converged run still returns the best iterate, flagged
    ``converged=False``.
    """
    if pinned.grid != params.grid:
        raise InfeasibleMask("pinned mask lives on a different grid")
    if pinned.count == 0:
        raise InfeasibleMask("pinned mask is empty")
    x, value, iters, converged, pg_norm, history = minimize_kernel(
        params.kernel, pinned.member, box, cfg, params.partitions, pin_value
    )
    # recompute rather than carry the line-search value
    value = params.kernel.total(x, params.partitions)
    return SolveResult(
        minimizer=GridFunction(params.grid, x),
        value=value,
        iters=iters,
        converged=converged,
        projected_grad_norm=pg_norm,
        history=history,
    )


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(fun1d, lo: float, hi: float, tol: float = 1e-9) -> tuple[float, float]:
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = fun1d(c), fun1d(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = fun1d(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = fun1d(d)
    mid = 0.5 * (lo + hi)
    return mid, fun1d(mid)


def brute_force_capacity(
    params: ModularParams,
    pinned: Mask,
    resolution: int,
    max_free: int = 6,
) -> float:
    """Independent oracle for tiny pinned problems on the [0, 1] box.

    Exhaustive search over free values in {0, 1/resolution, ..., 1}
    followed by cyclic per-coordinate golden-section refinement. The
    objective is convex and coordinatewise strictly convex, so the
    refinement converges to the global box minimum; the returned value is
    within about 1e-7 of it. Cost grows like resolution**free_nodes.
    """
    if pinned.grid != params.grid:
        raise InfeasibleMask("pinned mask lives on a different grid")
    if pinned.count == 0:
        raise InfeasibleMask("pinned mask is empty")
    if resolution < 1:
        raise ValidationError("resolution must be >= 1")
    free_idx = np.flatnonzero(~pinned.member)
    k = free_idx.size
    if k > max_free:
        raise TooManyFreeNodes(f"{k} free nodes exceed the oracle limit of {max_free}")
    kernel = params.kernel
    parts = params.partitions
    x = pinned.member.astype(float)
    if k == 0:
        return kernel.total(x, parts)

    levels = np.linspace(0.0, 1.0, resolution + 1)
    best_val = math.inf
    best = None
    for combo in itertools.product(levels, repeat=k):
        x[free_idx] = combo
        val = kernel.total(x, parts)
        if val < best_val:
            best_val = val
            best = np.array(combo)
    x[free_idx] = best

    for _ in range(200):
        before = best_val
        for j, node in enumerate(free_idx):

            def fun1d(t, node=node):
                x[node] = t
                return kernel.total(x, parts)

            t_opt, val = _golden_section(fun1d, 0.0, 1.0)
            x[node] = t_opt
            best_val = val
        if before - best_val < 1e-13 * max(1.0, abs(best_val)):
            break
    return best_val
