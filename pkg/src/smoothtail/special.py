"""Constructive solutions at the second-moment boundary.

When the squared weights satisfy E sum_k T_k^2 = 1, the auxiliary homogeneous
transform W' = sum_k T_k^2 W_k has a mean-one nonnegative fixed point W, and

    R = r + v * sqrt(W) * Z,   Z standard normal independent of W,

solves the original transform whenever the shift is linked (Q = r(1 - sum T))
or identically zero (then r = 0). Its characteristic function is the scale
mixture E exp(i r t - v^2 t^2 W / 2), which this module samples, evaluates,
and verifies against one empirical transform application.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import (
    ConvergenceDiagnostics,
    SamplePool,
    iterate_once,
    run_to_convergence,
)
from .errors import PreconditionFailedError
from .moments import eval_m
from .rng import CH_SPECIAL, stream
from .weight_models import (
    QLinked,
    QPointMass,
    TSquared,
    WeightModel,
)

__all__ = [
    "MixtureSolution",
    "CharfnPoint",
    "FixedPointCheckRow",
    "SecondMomentDiagnostic",
    "squared_model",
    "solve_squared_W",
    "build_alpha2_solution",
    "alpha2_sample",
    "alpha2_charfn",
    "verify_alpha2_fixed_point",
    "second_moment_rule",
]


def squared_model(model: WeightModel) -> WeightModel:
    """The homogeneous auxiliary model driven by the squared weights."""
    return WeightModel(
        n_law=model.n_law,
        t_law=TSquared(base=model.t_law),
        q_law=QPointMass(0.0),
        nonlattice=model.nonlattice,
        use_closed_forms=model.use_closed_forms,
    )


def solve_squared_W(
    model: WeightModel,
    size: int,
    tol: float = 1e-6,
    max_generations: int = 200,
    seed: int = 0,
    convergence_tol: float = 0.005,
    threads: int = 1,
):
    """Fixed point of the squared-weight transform, started at the unit mass.

    Precondition: E sum T_k^2 = 1 within `tol` (within sampling error on the
    Monte Carlo path); otherwise the mean-one pool is not stationary and the
    construction below it is invalid.

    Returns (pool, diagnostics); the pool is nonnegative with mean pinned
    at 1.
    """
    m2 = eval_m(model, 2.0, seed=seed)
    gap = abs(m2.value - 1.0)
    allowed = tol if m2.closed else max(tol, 3.0 * m2.stderr)
    if m2.diverged or gap > allowed:
        raise PreconditionFailedError(
            f"E sum T^2 = {m2.value:.8g} must equal 1 within {allowed:.2g} "
            "for the squared-weight construction"
        )
    sq = squared_model(model)
    pool, diags = run_to_convergence(
        sq,
        size=size,
        tol=convergence_tol,
        max_generations=max_generations,
        seed=seed,
        threads=threads,
        renormalize_mean=True,
    )
    return pool, diags


@dataclass
class MixtureSolution:
    """R = r + scale * sqrt(W) * Z with W sampled from `w_pool`."""

    r: float
    scale: float
    w_pool: SamplePool
    diagnostics: Optional[ConvergenceDiagnostics] = None


def build_alpha2_solution(
    model: WeightModel,
    scale: float,
    size: int,
    tol: float = 1e-6,
    max_generations: int = 200,
    seed: int = 0,
    threads: int = 1,
) -> MixtureSolution:
    """Assemble the variance-mixture solution for an admissible model.

    Admissible shifts: linked (r = target) or identically zero (r = 0); any
    other shift law cannot be solved by this construction.
    """
    if isinstance(model.q_law, QLinked):
        r = model.q_law.target
    elif model.homogeneous:
        r = 0.0
    else:
        raise PreconditionFailedError(
            "the variance-mixture construction needs a linked or zero shift"
        )
    if not (scale > 0.0) or not math.isfinite(scale):
        raise PreconditionFailedError("scale must be positive and finite")
    pool, diags = solve_squared_W(
        model,
        size=size,
        tol=tol,
        max_generations=max_generations,
        seed=seed,
        threads=threads,
    )
    return MixtureSolution(r=r, scale=scale, w_pool=pool, diagnostics=diags)


def alpha2_sample(
    mix: MixtureSolution, count: int, seed: int = 0, stream_id: int = 0
) -> np.ndarray:
    """Draw fixed-point samples from the mixture representation."""
    rng = stream(seed, CH_SPECIAL, stream_id)
    w = mix.w_pool.values[rng.integers(0, mix.w_pool.size, size=count)]
    z = rng.standard_normal(count)
    return mix.r + mix.scale * np.sqrt(w) * z


@dataclass(frozen=True)
class CharfnPoint:
    t: float
    real: float
    imag: float
    real_stderr: float
    imag_stderr: float


def alpha2_charfn(mix: MixtureSolution, t_values) -> list:
    """E exp(i t R) evaluated through the mixture: the normal factor is
    integrated analytically, only the W average is sampled."""
    out = []
    w = mix.w_pool.values
    n = w.size
    for t in np.atleast_1d(np.asarray(t_values, dtype=float)):
        damp = np.exp(-0.5 * mix.scale**2 * t**2 * w)
        re = damp * math.cos(mix.r * t)
        im = damp * math.sin(mix.r * t)
        out.append(
            CharfnPoint(
                t=float(t),
                real=float(re.mean()),
                imag=float(im.mean()),
                real_stderr=float(re.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
                imag_stderr=float(im.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
            )
        )
    return out


@dataclass(frozen=True)
class FixedPointCheckRow:
    t: float
    mixture_real: float
    mixture_imag: float
    transformed_real: float
    transformed_imag: float
    real_gap: float
    imag_gap: float
    real_band: float
    imag_band: float
    passed: bool


def verify_alpha2_fixed_point(
    model: WeightModel,
    mix: MixtureSolution,
    t_values=(0.5, 1.0, 2.0),
    count: int = 1 << 17,
    seed: int = 0,
    sigmas: float = 3.0,
) -> list:
    """Compare the mixture's characteristic function with the empirical one
    after a single transform application, componentwise.

    Passing means both real and imaginary gaps sit inside `sigmas` combined
    standard errors at every requested frequency.
    """
    base = alpha2_sample(mix, count, seed=seed, stream_id=1)
    pool = SamplePool(values=base, generation=0, seed=seed)
    transformed = iterate_once(model, pool, stream_id=2).values
    mixture_side = alpha2_charfn(mix, t_values)
    rows = []
    n = transformed.size
    for point in mixture_side:
        phase = point.t * transformed
        re = np.cos(phase)
        im = np.sin(phase)
        re_mean, im_mean = float(re.mean()), float(im.mean())
        re_se = float(re.std(ddof=1) / math.sqrt(n))
        im_se = float(im.std(ddof=1) / math.sqrt(n))
        real_band = sigmas * math.hypot(re_se, point.real_stderr)
        imag_band = sigmas * math.hypot(im_se, point.imag_stderr)
        real_gap = abs(re_mean - point.real)
        imag_gap = abs(im_mean - point.imag)
        rows.append(
            FixedPointCheckRow(
                t=point.t,
                mixture_real=point.real,
                mixture_imag=point.imag,
                transformed_real=re_mean,
                transformed_imag=im_mean,
                real_gap=real_gap,
                imag_gap=imag_gap,
                real_band=real_band,
                imag_band=imag_band,
                passed=real_gap <= real_band and imag_gap <= imag_band,
            )
        )
    return rows


@dataclass(frozen=True)
class SecondMomentDiagnostic:
    stable: bool
    m2: float
    second_moments: tuple
    warning: Optional[str]


def second_moment_rule(
    model: WeightModel, pools, seed: int = 0
) -> SecondMomentDiagnostic:
    """Consistency rule: a pool family with a stable finite second moment
    should come from a model with E sum T^2 <= 1.

    `pools` are runs of the same model at increasing sizes. Stability means
    consecutive second moments agree within 3 combined standard errors. A
    stable second moment alongside m(2) > 1 is flagged: legitimate only for
    degenerate (constant) fixed points.
    """
    pools = list(pools)
    if len(pools) < 2:
        raise ValueError("need pools at two or more sizes")
    stats = []
    for pool in pools:
        sq = pool.values**2
        n = sq.size
        stats.append((float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0))
    stable = all(
        abs(stats[i + 1][0] - stats[i][0])
        <= 3.0 * math.hypot(stats[i][1], stats[i + 1][1]) + 1e-15
        for i in range(len(stats) - 1)
    )
    m2 = eval_m(model, 2.0, seed=seed)
    warning = None
    if stable and not m2.diverged and m2.value - 3.0 * m2.stderr > 1.0:
        warning = (
            f"second moment looks stable ({stats[-1][0]:.6g}) although "
            f"E sum T^2 = {m2.value:.6g} > 1; only a degenerate constant "
            "fixed point can do this"
        )
    return SecondMomentDiagnostic(
        stable=stable,
        m2=m2.value,
        second_moments=tuple(s for s, _ in stats),
        warning=warning,
    )
