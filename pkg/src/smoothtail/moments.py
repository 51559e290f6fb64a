"""Moment analysis of weight models.

Central objects are the moment functions of a model:

    m(s)      = E sum_k |T_k|^s          (characteristic moment function)
    mu(s)     = E (sum_k |T_k|)^s        (moments of the total mass)
    m_eps(s)  = E (sum_k |T_k|^s)^(1+eps)

m is convex where finite; its roots (m = 1) are the characteristic exponents
(alpha, beta) that drive everything downstream: existence and uniqueness of
fixed points, the tail index, and the moment dichotomy. This module finds
them, estimates the finiteness domains, solves the mean equation, and turns
all of it into a machine-checkable assumption report.

Every evaluator prefers a closed form (exact, zero standard error) and falls
back to Monte Carlo with a divergence heuristic otherwise; models can force
the Monte Carlo path with `use_closed_forms=False`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DomainError,
    MonteCarloInconclusiveError,
    NoGammaError,
    NoRootError,
    SingleRootError,
)
from .rng import CH_MOMENTS, stream
from .weight_models import (
    TFiniteMixture,
    TPointMass,
    TSignedLognormal,
    TSquared,
    TUniform,
    WeightModel,
    draw_weight_block,
)

__all__ = [
    "MCValue",
    "RootPair",
    "GammaResult",
    "MeanSolution",
    "DomainEstimate",
    "MomentProfile",
    "AssumptionCheck",
    "AssumptionReport",
    "EPSILON_GRID",
    "DEFAULT_BUDGET",
    "eval_m",
    "eval_mu",
    "eval_m_epsilon",
    "eval_m_derivative",
    "iid_sum_moment",
    "find_roots",
    "find_gamma",
    "solve_mean_equation",
    "estimate_domain",
    "moment_profile",
    "check_assumptions",
]

# Default Monte Carlo draw budget for a single moment evaluation.
DEFAULT_BUDGET = 1 << 18

# Epsilon ladder probed when locating the m_eps domains.
EPSILON_GRID = (0.5, 0.25, 0.1, 0.05)

# Growth threshold of the divergence heuristic: the estimate must grow by
# more than this factor at each of the four budget doublings to be flagged.
_GROWTH = 1.2

# |m_hat - 1| must exceed this many standard errors before a Monte Carlo
# sign decision is trusted.
_SIGMAS = 3.0

_CLOSED_TOL = 1e-8
_MC_TOL = 1e-3


@dataclass(frozen=True)
class MCValue:
    """A moment value with its uncertainty; closed forms carry stderr 0."""

    value: float
    stderr: float = 0.0
    diverged: bool = False
    closed: bool = False
    history: tuple = ()

    def decided_sign_vs(self, level: float) -> Optional[int]:
        """Sign of (value - level) if statistically decided, else None."""
        if self.diverged:
            return 1 if math.isinf(self.value) else None
        gap = self.value - level
        if self.closed or abs(gap) > _SIGMAS * self.stderr:
            return 1 if gap > 0 else (-1 if gap < 0 else 0)
        return None


# ---------------------------------------------------------------------------
# closed forms


def _phi(model: WeightModel, s: float) -> Optional[float]:
    """Per-weight absolute moment E|T|^s, or None when not available."""
    if not model.use_closed_forms:
        return None
    try:
        return model.t_law.abs_moment(s)
    except OverflowError:
        return math.inf


def _phi_prime(model: WeightModel, s: float) -> Optional[float]:
    if not model.use_closed_forms:
        return None
    try:
        return model.t_law.abs_moment_derivative(s)
    except OverflowError:
        return math.inf


def _t_bounded_by_one(model: WeightModel) -> Optional[bool]:
    """True when |T| <= 1 almost surely (so m never rises again)."""
    law = model.t_law
    if isinstance(law, TPointMass):
        return law.magnitude <= 1.0
    if isinstance(law, TFiniteMixture):
        return bool(np.max(np.abs(law.values)) <= 1.0)
    if isinstance(law, TUniform):
        return max(abs(law.low), abs(law.high)) <= 1.0
    if isinstance(law, TSignedLognormal):
        return False
    if isinstance(law, TSquared):
        inner = _t_bounded_by_one(
            WeightModel(model.n_law, law.base, model.q_law)
        )
        return inner
    return None


def _abs_t_constant_one(model: WeightModel) -> bool:
    """True when |T| == 1 almost surely (every exponent gives moment 1)."""
    law = model.t_law
    if isinstance(law, TPointMass):
        return law.magnitude == 1.0
    if isinstance(law, TFiniteMixture):
        return bool(np.all(np.abs(law.values) == 1.0))
    if isinstance(law, TSquared):
        return _abs_t_constant_one(WeightModel(model.n_law, law.base, model.q_law))
    return False


def iid_sum_moment(pmf: np.ndarray, moment_fn: Callable[[int], float], order: int) -> float:
    """E (Y_1 + ... + Y_N)^order for iid nonnegative Y and pmf of N.

    moment_fn(j) must return E Y^j; order is a nonnegative integer. Uses the
    binomial recursion E S_n^m = sum_j C(m, j) E Y^j E S_{n-1}^(m-j).
    """
    if order < 0 or order != int(order):
        raise ValueError("order must be a nonnegative integer")
    order = int(order)
    n_max = len(pmf) - 1
    moments_y = np.array([moment_fn(j) for j in range(order + 1)])
    # table[m] = E S_n^m, updated in n; S_0 = 0
    table = np.zeros(order + 1)
    table[0] = 1.0
    total = pmf[0] * table[order]
    for n in range(1, n_max + 1):
        new = np.empty(order + 1)
        for m_ord in range(order + 1):
            acc = 0.0
            for j in range(m_ord + 1):
                acc += math.comb(m_ord, j) * moments_y[j] * table[m_ord - j]
            new[m_ord] = acc
        table = new
        total += pmf[n] * table[order]
    return float(total)


def _closed_m(model: WeightModel, s: float) -> Optional[float]:
    p = _phi(model, s)
    return None if p is None else model.n_law.mean() * p


def _closed_m_derivative(model: WeightModel, s: float) -> Optional[float]:
    d = _phi_prime(model, s)
    return None if d is None else model.n_law.mean() * d


def _closed_mu(model: WeightModel, s: float) -> Optional[float]:
    if not model.use_closed_forms:
        return None
    if abs(s - round(s)) > 1e-12 or s < 0:
        return None
    return iid_sum_moment(
        model.n_law.pmf(), lambda j: model.t_law.abs_moment(float(j)), int(round(s))
    )


def _closed_m_epsilon(model: WeightModel, s: float, eps: float) -> Optional[float]:
    if not model.use_closed_forms:
        return None
    order = 1.0 + eps
    if abs(order - round(order)) <= 1e-12:
        return iid_sum_moment(
            model.n_law.pmf(),
            lambda j: model.t_law.abs_moment(float(j) * s),
            int(round(order)),
        )
    # per-slot sum almost surely constant: fixed N with constant |T|
    from .weight_models import NFixed

    if isinstance(model.n_law, NFixed) and isinstance(model.t_law, TPointMass):
        base = model.n_law.count * model.t_law.magnitude**s
        return base**order
    return None


# ---------------------------------------------------------------------------
# Monte Carlo evaluation with the divergence heuristic


def _mc_schedule(
    per_draw: Callable[[np.random.Generator], np.ndarray],
    budget: int,
    seed: int,
    stream_tag: int,
    check_growth: bool = True,
) -> MCValue:
    """Estimate a mean on a 5-stage doubling schedule within `budget` draws.

    per_draw(rng, size) yields one batch of per-draw values. The cumulative
    estimate is recorded at budget/16, /8, /4, /2 and budget; growth above
    20% at every doubling flags the value as divergent (+inf).
    """
    budget = max(int(budget), 32)
    base = budget // 16
    batch_sizes = [base, base, 2 * base, 4 * base, budget - 8 * base]
    total = 0
    acc = 0.0
    acc_sq = 0.0
    history = []
    nonfinite = False
    for i, size in enumerate(batch_sizes):
        rng = stream(seed, CH_MOMENTS, stream_tag, i)
        vals = per_draw(rng, size)
        if not np.all(np.isfinite(vals)):
            nonfinite = True
            finite = vals[np.isfinite(vals)]
            acc += float(finite.sum())
            acc_sq += float((finite**2).sum())
            total += finite.size
        else:
            acc += float(vals.sum())
            acc_sq += float((vals**2).sum())
            total += vals.size
        history.append(acc / max(total, 1))
    mean = acc / max(total, 1)
    var = max(acc_sq / max(total, 1) - mean * mean, 0.0)
    stderr = math.sqrt(var / max(total, 1))
    diverged = nonfinite
    if check_growth and not diverged:
        ratios_ok = all(
            history[i] > 0 and history[i + 1] > _GROWTH * history[i] for i in range(4)
        )
        diverged = ratios_ok
    if diverged:
        return MCValue(math.inf, math.inf, diverged=True, history=tuple(history))
    return MCValue(mean, stderr, history=tuple(history))


def _tag(*parts: float) -> int:
    """Stable small integer tag from evaluation coordinates (stream keying)."""
    h = 0
    for p in parts:
        h = (h * 1000003 + hash(round(float(p), 9))) & 0x7FFFFFFF
    return h


def eval_m(
    model: WeightModel,
    s: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    stream_id: int = 0,
) -> MCValue:
    """E sum_k |T_k|^s, closed form when the family provides one."""
    if s < 0:
        raise DomainError("moment exponents are nonnegative")
    closed = _closed_m(model, s)
    if closed is not None:
        return MCValue(closed, 0.0, diverged=not math.isfinite(closed), closed=True)

    def per_draw(rng, size):
        block = draw_weight_block(model, rng, size)
        return block.sum_abs_pow(s)

    return _mc_schedule(per_draw, budget, seed, _tag(1, s, stream_id))


def eval_mu(
    model: WeightModel,
    s: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    stream_id: int = 0,
) -> MCValue:
    """E (sum_k |T_k|)^s; closed form at integer s via the moment recursion."""
    if s < 0:
        raise DomainError("moment exponents are nonnegative")
    closed = _closed_mu(model, s)
    if closed is not None:
        return MCValue(closed, 0.0, diverged=not math.isfinite(closed), closed=True)

    def per_draw(rng, size):
        block = draw_weight_block(model, rng, size)
        return block.slot_sum(np.abs(block.t)) ** s

    return _mc_schedule(per_draw, budget, seed, _tag(2, s, stream_id))


def eval_m_epsilon(
    model: WeightModel,
    s: float,
    eps: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    stream_id: int = 0,
) -> MCValue:
    """E (sum_k |T_k|^s)^(1+eps)."""
    if s < 0 or eps < 0:
        raise DomainError("moment exponents are nonnegative")
    closed = _closed_m_epsilon(model, s, eps)
    if closed is not None:
        return MCValue(closed, 0.0, diverged=not math.isfinite(closed), closed=True)

    def per_draw(rng, size):
        block = draw_weight_block(model, rng, size)
        return block.sum_abs_pow(s) ** (1.0 + eps)

    return _mc_schedule(per_draw, budget, seed, _tag(3, s, eps, stream_id))


def eval_m_derivative(
    model: WeightModel,
    s: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    stream_id: int = 0,
) -> MCValue:
    """d/ds E sum_k |T_k|^s = E sum_k |T_k|^s ln|T_k|.

    Signed quantity: the divergence heuristic does not apply; Monte Carlo
    reports a plain mean and standard error.
    """
    closed = _closed_m_derivative(model, s)
    if closed is not None:
        return MCValue(closed, 0.0, closed=True)

    def per_draw(rng, size):
        block = draw_weight_block(model, rng, size)
        a = np.abs(block.t)
        return block.slot_sum(a**s * np.log(a))

    return _mc_schedule(per_draw, budget, seed, _tag(4, s, stream_id), check_growth=False)


# ---------------------------------------------------------------------------
# root finding


@dataclass(frozen=True)
class RootPair:
    """Both characteristic exponents, with localization half-widths."""

    alpha: float
    beta: float
    alpha_halfwidth: float = 0.0
    beta_halfwidth: float = 0.0

    def __iter__(self):
        return iter((self.alpha, self.beta))


def _refine_root_closed(
    f: Callable[[float], float],
    fprime: Callable[[float], Optional[float]],
    lo: float,
    hi: float,
    flo: float,
    fhi: float,
    tol: float,
) -> float:
    """Bracketed root refinement: bisection safeguarded by Newton steps."""
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        d = fprime(x)
        step_ok = d is not None and d != 0.0 and math.isfinite(d)
        if step_ok:
            x_new = x - fx / d
            if not (lo < x_new < hi):
                step_ok = False
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if hi - lo < 1e-15 * max(1.0, abs(hi)):
            return 0.5 * (lo + hi)
        x = x_new
    return x


def _numeric_derivative(fn: Callable[[float], float], s: float, h: float = 1e-6) -> float:
    lo = max(s - h, 0.0)
    return (fn(s + h) - fn(lo)) / (s + h - lo)


def _closed_root_scan(model: WeightModel, tol: float) -> object:
    """Find all crossings of m(s) = 1 using exact evaluations."""
    m = lambda s: _closed_m(model, s)
    f = lambda s: m(s) - 1.0
    fprime_raw = lambda s: _closed_m_derivative(model, s)

    def fprime(s: float) -> Optional[float]:
        d = fprime_raw(s)
        if d is None:
            d = _numeric_derivative(m, s)
        return d

    bounded = _t_bounded_by_one(model)
    cap = 8.0
    while True:
        grid = np.concatenate(
            [np.linspace(0.0, 2.0, 257)[:-1], np.geomspace(2.0, cap, 513)]
        )
        fv = np.array([f(s) for s in grid])
        finite = np.isfinite(fv)
        # treat +inf as "above 1"
        fv = np.where(finite, fv, np.inf)

        if _abs_t_constant_one(model) and abs(model.n_law.mean() - 1.0) <= tol:
            # m identically 1: every s solves; report as a degenerate tangency
            raise SingleRootError(0.0, 0.0, tangent=True)

        crossings = []
        for i in range(len(grid) - 1):
            a, b = fv[i], fv[i + 1]
            if a == 0.0:
                crossings.append((grid[i], grid[i]))
            elif (a < 0 < b) or (a > 0 > b):
                crossings.append((grid[i], grid[i + 1]))
        if fv[-1] == 0.0:
            crossings.append((grid[-1], grid[-1]))

        need_extend = False
        if fv[-1] < 0 and not bounded and cap < 65536:
            # still below 1 at the cap but heavy weights exist: the upper
            # root may lie beyond
            need_extend = True
        if not crossings and fv[-1] > 0 and cap < 65536:
            # possibly still descending toward a dip beyond the cap
            tail_slope = fv[-1] - fv[-2]
            if tail_slope < 0:
                need_extend = True
        if need_extend:
            cap *= 4.0
            continue
        break

    if not crossings:
        idx = int(np.argmin(fv))
        min_m = float(fv[idx] + 1.0)
        if abs(fv[idx]) <= tol:
            raise SingleRootError(float(grid[idx]), 0.0, tangent=True)
        raise NoRootError(min_m, float(grid[idx]))

    roots = []
    for lo, hi in crossings:
        if lo == hi:
            roots.append(float(lo))
        else:
            # refine to bracket-width collapse: the K estimate at a root
            # inherits its residual, so closed roots are driven to the
            # rounding floor rather than stopping at the scan tolerance
            roots.append(
                _refine_root_closed(f, fprime, float(lo), float(hi), f(lo), f(hi), 0.0)
            )
    # collapse duplicates from adjacent brackets
    dedup = []
    for r in roots:
        if not dedup or abs(r - dedup[-1]) > 1e-9 * max(1.0, r):
            dedup.append(r)
    roots = dedup

    if len(roots) == 1:
        r = roots[0]
        raise SingleRootError(r, fprime(r) or 0.0)
    alpha, beta = roots[0], roots[-1]
    return RootPair(alpha, beta)


def _mc_root_scan(
    model: WeightModel, tol: float, budget: int, seed: int
) -> RootPair:
    """Monte Carlo analogue of the closed scan with CI-based sign decisions."""

    cache: dict = {}

    def mhat(s: float) -> MCValue:
        key = round(s, 12)
        if key not in cache:
            cache[key] = eval_m(model, s, budget=budget, seed=seed, stream_id=_tag(11, s))
        return cache[key]

    bounded = _t_bounded_by_one(model)
    cap = 8.0
    while True:
        grid = np.concatenate([np.linspace(0.0, 2.0, 17)[:-1], np.geomspace(2.0, cap, 17)])
        vals = [mhat(s) for s in grid]
        signs = [v.decided_sign_vs(1.0) for v in vals]
        decided = [(s, sg, v) for s, sg, v in zip(grid, signs, vals) if sg is not None]

        if bounded is False and decided and decided[-1][1] < 0 and cap < 4096:
            cap *= 4.0
            continue
        break

    changes = [
        (decided[i], decided[i + 1])
        for i in range(len(decided) - 1)
        if decided[i][1] != decided[i + 1][1]
    ]

    if not changes:
        undecided_vals = [v.value for v, sg in zip(vals, signs) if sg is None]
        if decided and all(sg > 0 for _, sg, _ in decided):
            if undecided_vals and min(undecided_vals) < 1.0:
                candidates = [
                    (v.value, s, v) for s, sg, v in zip(grid, signs, vals) if sg is None
                ]
                _, s_worst, worst = min(candidates, key=lambda c: c[0])
                raise MonteCarloInconclusiveError(float(s_worst), worst.value, worst.stderr)
            est = [v.value for v in vals if not v.diverged]
            idx = int(np.argmin([v.value if not v.diverged else np.inf for v in vals]))
            raise NoRootError(float(min(est)), float(grid[idx]))
        raise MonteCarloInconclusiveError(
            float(grid[len(grid) // 2]), vals[len(grid) // 2].value, vals[len(grid) // 2].stderr
        )

    def bisect(lo_pt, hi_pt):
        (lo, sg_lo, _), (hi, sg_hi, _) = lo_pt, hi_pt
        last = None
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            v = mhat(mid)
            last = v
            sg = v.decided_sign_vs(1.0)
            if sg is None or hi - lo < 1e-6:
                break
            if sg == sg_lo:
                lo = mid
            else:
                hi = mid
        mid = 0.5 * (lo + hi)
        dv = eval_m_derivative(model, mid, budget=budget, seed=seed, stream_id=_tag(12, mid))
        slope = abs(dv.value) if dv.value != 0 else 1.0
        noise = _SIGMAS * (last.stderr if last else _MC_TOL) + _MC_TOL
        halfwidth = max(hi - lo, noise / slope)
        return mid, halfwidth

    first = changes[0]
    last = changes[-1]
    a, aw = bisect(*first)
    if len(changes) == 1:
        lo_sign = first[0][1]
        slope_sign = 1.0 if lo_sign < 0 else -1.0
        raise SingleRootError(a, slope_sign * 1e-9)
    b, bw = bisect(*last)
    return RootPair(a, b, aw, bw)


def find_roots(
    model: WeightModel,
    tol: Optional[float] = None,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> RootPair:
    """Locate both solutions of m(s) = 1.

    Returns the pair (alpha, beta), alpha < beta. Raises NoRootError when m
    stays above 1, SingleRootError when the function is monotone through 1
    (or tangent), and MonteCarloInconclusiveError when sampling error bars
    cannot resolve the bracket structure.
    """
    closed_available = _closed_m(model, 1.0) is not None
    if closed_available:
        return _closed_root_scan(model, _CLOSED_TOL if tol is None else tol)
    return _mc_root_scan(model, _MC_TOL if tol is None else tol, budget, seed)


@dataclass(frozen=True)
class GammaResult:
    """Root of the per-weight moment equation above beta."""

    gamma: float
    k: int
    multi_root: bool = False
    below_s_infty: Optional[bool] = None
    note: str = ""


def find_gamma(
    model: WeightModel,
    k: int = 1,
    tol: Optional[float] = None,
    beta: Optional[float] = None,
    s_infty: float = math.inf,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> GammaResult:
    """Solve E|T_k|^gamma = 1 for gamma above the upper root beta.

    The k-th weight is taken in draw order (zero when the node has fewer
    than k children), so E|T_k|^gamma = P(N >= k) * E|T|^gamma for the iid
    families. When |T| == 1 almost surely every exponent solves; the result
    is flagged multi_root and the infimum of the admissible range returned.
    """
    if k < 1:
        raise ValueError("weight index k starts at 1")
    if beta is None:
        pair = find_roots(model, tol=tol, budget=budget, seed=seed)
        beta = pair.beta
    pmf = model.n_law.pmf()
    p_ge_k = float(pmf[k:].sum()) if k <= len(pmf) - 1 else 0.0
    if p_ge_k <= 0.0:
        raise NoGammaError(f"branching law never produces {k} children")

    if _abs_t_constant_one(model):
        if abs(p_ge_k - 1.0) <= 1e-12:
            return GammaResult(
                gamma=beta,
                k=k,
                multi_root=True,
                below_s_infty=(beta < s_infty) or None,
                note="every exponent above beta solves; returning the infimum",
            )
        raise NoGammaError(
            "per-weight moment is constant below 1; the equation has no root"
        )

    use_closed = _phi(model, 1.0) is not None

    if use_closed:
        g = lambda s: p_ge_k * model.t_law.abs_moment(s)
        gprime_raw = lambda s: model.t_law.abs_moment_derivative(s)

        def gprime(s: float) -> Optional[float]:
            d = gprime_raw(s)
            return p_ge_k * d if d is not None else _numeric_derivative(g, s)

        if _t_bounded_by_one(model):
            raise NoGammaError(
                "weights are bounded by 1; per-weight moments never reach 1 above beta"
            )
        lo = beta
        glo = g(lo)
        if glo >= 1.0:
            # boundary case: already at/above 1 at beta
            return GammaResult(beta, k, below_s_infty=beta < s_infty)
        hi = beta + 1.0
        while g(hi) < 1.0:
            hi = beta + (hi - beta) * 2.0
            if hi > 65536:
                raise NoGammaError("no per-weight moment root found below s = 65536")
        root = _refine_root_closed(
            lambda s: g(s) - 1.0, gprime, lo, hi, glo - 1.0, g(hi) - 1.0,
            0.0 if tol is None else tol,
        )
        return GammaResult(root, k, below_s_infty=root < s_infty)

    # Monte Carlo path: estimate the per-weight moment from raw weight draws
    def ghat(s: float) -> MCValue:
        def per_draw(rng, size):
            block = draw_weight_block(model, rng, size)
            counts = np.bincount(
                block.slot_ids[np.abs(block.t) > 0], minlength=size
            )
            kth = np.zeros(size)
            has_k = block.n >= k
            # per-slot k-th weight in draw order
            starts = np.concatenate([[0], np.cumsum(block.n)[:-1]])
            idx = starts[has_k] + (k - 1)
            kth[has_k] = np.abs(block.t[idx]) ** s
            return kth

        return _mc_schedule(per_draw, budget, seed, _tag(13, s, k))

    lo, hi = beta, beta + 1.0
    tries = 0
    while True:
        v_hi = ghat(hi)
        sg = v_hi.decided_sign_vs(1.0)
        if sg == 1:
            break
        tries += 1
        if tries > 16:
            if sg is None:
                raise MonteCarloInconclusiveError(hi, v_hi.value, v_hi.stderr)
            raise NoGammaError("no per-weight moment root found (Monte Carlo scan)")
        hi = beta + (hi - beta) * 2.0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        v = ghat(mid)
        sg = v.decided_sign_vs(1.0)
        if sg is None or hi - lo < 1e-6:
            return GammaResult(mid, k, below_s_infty=mid < s_infty)
        if sg < 0:
            lo = mid
        else:
            hi = mid
    return GammaResult(0.5 * (lo + hi), k, below_s_infty=0.5 * (lo + hi) < s_infty)


# ---------------------------------------------------------------------------
# mean equation


@dataclass(frozen=True)
class MeanSolution:
    """Resolution of r = r * E sum T_k + E Q."""

    status: str  # 'unique' | 'nonunique' | 'none'
    r: Optional[float]
    sum_t_mean: float
    q_mean: float


def solve_mean_equation(model: WeightModel) -> MeanSolution:
    """Solve the mean fixed-point equation in closed form.

    All stock families have closed first moments, so this never samples.
    The linked shift's mean depends on the weights and resolves to its own
    target whenever the equation is determined.
    """
    sum_t_mean = model.n_law.mean() * model.t_law.signed_mean()
    q_mean = model.q_law.mean_given(sum_t_mean)
    denom = 1.0 - sum_t_mean
    if not math.isfinite(q_mean):
        return MeanSolution("none", None, sum_t_mean, q_mean)
    if abs(denom) <= 1e-12:
        if abs(q_mean) <= 1e-12:
            return MeanSolution("nonunique", None, sum_t_mean, q_mean)
        return MeanSolution("none", None, sum_t_mean, q_mean)
    return MeanSolution("unique", q_mean / denom, sum_t_mean, q_mean)


# ---------------------------------------------------------------------------
# domains and the full profile


@dataclass(frozen=True)
class DomainEstimate:
    """Finiteness endpoints, always as intervals (lo certified, hi excluded)."""

    s0: float
    s1: tuple
    s_infty: tuple
    s_eps: dict
    s_hat_infty: float
    closed: bool


def estimate_domain(
    model: WeightModel,
    eps_grid: tuple = EPSILON_GRID,
    budget: int = DEFAULT_BUDGET // 4,
    seed: int = 0,
) -> DomainEstimate:
    """Estimate the finiteness domains of m, mu and the m_eps ladder.

    Closed-form families are finite at every exponent and report infinite
    endpoints. The Monte Carlo path probes a geometric exponent ladder and
    brackets each endpoint between the last draw-stable and the first
    divergence-flagged probe; endpoints are intervals by construction.
    """
    if model.use_closed_forms and _phi(model, 1.0) is not None:
        inf_pair = (math.inf, math.inf)
        return DomainEstimate(
            s0=0.0,
            s1=inf_pair,
            s_infty=inf_pair,
            s_eps={eps: inf_pair for eps in eps_grid},
            s_hat_infty=1.0,
            closed=True,
        )

    probes = np.geomspace(0.5, 64.0, 15)

    def bracket(evaluate) -> tuple:
        last_ok = 0.0
        for s in probes:
            v = evaluate(float(s))
            if v.diverged:
                return (last_ok, float(s))
            last_ok = float(s)
        return (last_ok, math.inf)

    s1 = bracket(lambda s: eval_m(model, s, budget=budget, seed=seed))
    s_infty = bracket(lambda s: eval_mu(model, s, budget=budget, seed=seed))
    s_eps = {
        eps: bracket(
            lambda s, e=eps: eval_m_epsilon(model, s, e, budget=budget, seed=seed)
        )
        for eps in eps_grid
    }
    smallest = min(eps_grid)
    s_hat = min(1.0, s_eps[smallest][0])
    return DomainEstimate(0.0, s1, s_infty, s_eps, s_hat, closed=False)


@dataclass
class MomentProfile:
    """Everything the analysis knows about a model's moment structure."""

    domain: DomainEstimate
    alpha: Optional[float] = None
    beta: Optional[float] = None
    alpha_halfwidth: float = 0.0
    beta_halfwidth: float = 0.0
    m_prime_alpha: Optional[float] = None
    m_prime_beta: Optional[float] = None
    root_diagnostic: Optional[str] = None  # 'no_root'|'single_root'|'inconclusive'
    single_root: Optional[float] = None
    single_root_slope: Optional[float] = None
    tangent: bool = False
    no_root_min: Optional[float] = None
    no_root_argmin: Optional[float] = None
    gamma: Optional[float] = None
    gamma_k: int = 1
    gamma_multi_root: bool = False
    gamma_below_s_infty: Optional[bool] = None
    gamma_note: str = ""
    mean: Optional[MeanSolution] = None

    @property
    def tail_exponent(self) -> Optional[float]:
        """Exponent at which tail functionals are evaluated.

        The upper root when both exist, else the single root of a monotone
        moment function, else None.
        """
        if self.beta is not None:
            return self.beta
        return self.single_root

    @property
    def alpha_like(self) -> Optional[float]:
        """The lower exponent governing existence (alpha, or a decreasing
        single root)."""
        if self.alpha is not None:
            return self.alpha
        if self.single_root is not None and (self.single_root_slope or 0.0) <= 0.0:
            return self.single_root
        return None


def moment_profile(
    model: WeightModel,
    gamma_k: int = 1,
    eps_grid: tuple = EPSILON_GRID,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> MomentProfile:
    """Run the full moment analysis, catching root diagnostics into fields."""
    domain = estimate_domain(model, eps_grid=eps_grid, budget=max(budget // 4, 1024), seed=seed)
    profile = MomentProfile(domain=domain)

    try:
        pair = find_roots(model, budget=budget, seed=seed)
        profile.alpha, profile.beta = pair.alpha, pair.beta
        profile.alpha_halfwidth = pair.alpha_halfwidth
        profile.beta_halfwidth = pair.beta_halfwidth
        profile.m_prime_alpha = eval_m_derivative(model, pair.alpha, budget=budget, seed=seed).value
        profile.m_prime_beta = eval_m_derivative(model, pair.beta, budget=budget, seed=seed).value
    except NoRootError as err:
        profile.root_diagnostic = "no_root"
        profile.no_root_min = err.min_value
        profile.no_root_argmin = err.argmin
    except SingleRootError as err:
        profile.root_diagnostic = "single_root"
        profile.single_root = err.root
        profile.single_root_slope = err.slope
        profile.tangent = err.tangent
    except MonteCarloInconclusiveError:
        profile.root_diagnostic = "inconclusive"

    anchor = profile.tail_exponent
    if anchor is not None:
        try:
            gr = find_gamma(
                model,
                k=gamma_k,
                beta=anchor,
                s_infty=domain.s_infty[0] if not domain.closed else math.inf,
                budget=budget,
                seed=seed,
            )
            profile.gamma = gr.gamma
            profile.gamma_k = gr.k
            profile.gamma_multi_root = gr.multi_root
            profile.gamma_below_s_infty = gr.below_s_infty
            profile.gamma_note = gr.note
        except (NoGammaError, MonteCarloInconclusiveError):
            profile.gamma = None

    profile.mean = solve_mean_equation(model)
    return profile


# ---------------------------------------------------------------------------
# assumption report


@dataclass(frozen=True)
class AssumptionCheck:
    id: str
    name: str
    verdict: str  # 'pass' | 'fail' | 'unknown'
    evidence: str


@dataclass
class AssumptionReport:
    checks: list = field(default_factory=list)

    def verdict(self, check_id: str) -> str:
        for c in self.checks:
            if c.id == check_id:
                return c.verdict
        raise KeyError(check_id)

    @property
    def all_pass(self) -> bool:
        return all(c.verdict == "pass" for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if c.verdict == "fail"]


def check_assumptions(
    model: WeightModel,
    profile: Optional[MomentProfile] = None,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> AssumptionReport:
    """Evaluate the standing assumptions of the tail dichotomy on a model.

    Each check yields pass/fail/unknown plus human-readable evidence;
    'unknown' marks Monte Carlo situations whose error bars cannot decide.
    """
    if profile is None:
        profile = moment_profile(model, budget=budget, seed=seed)
    checks: list = []
    dom = profile.domain
    s1_lo, s1_hi = dom.s1

    # (A) both characteristic exponents interior to the finiteness domain
    if profile.alpha is not None and profile.beta is not None:
        interior = profile.alpha > dom.s0 and profile.beta < s1_lo
        checks.append(
            AssumptionCheck(
                "A",
                "both_roots_interior",
                "pass" if interior else "fail",
                f"alpha = {profile.alpha:.6g}, beta = {profile.beta:.6g}, "
                f"domain ({dom.s0:.6g}, {s1_lo:.6g})",
            )
        )
    elif profile.root_diagnostic == "inconclusive":
        checks.append(
            AssumptionCheck("A", "both_roots_interior", "unknown",
                            "root structure unresolved at this sampling budget")
        )
    else:
        detail = (
            f"single root at {profile.single_root:.6g}"
            if profile.root_diagnostic == "single_root"
            else f"moment function minimum {profile.no_root_min:.6g} stays above 1"
            if profile.root_diagnostic == "no_root"
            else "no roots"
        )
        checks.append(AssumptionCheck("A", "both_roots_interior", "fail", detail))

    # (B) shift moments finite strictly below the domain's upper endpoint
    q_sup = model.q_law.moment_sup()
    if q_sup >= s1_hi:
        verdict, ev = "pass", f"shift moment supremum {q_sup} covers s1 <= {s1_hi}"
    elif q_sup < s1_lo:
        verdict, ev = "fail", f"shift moments end at {q_sup} < s1 >= {s1_lo}"
    else:
        verdict, ev = "unknown", f"shift supremum {q_sup} inside s1 bracket [{s1_lo}, {s1_hi}]"
    checks.append(AssumptionCheck("B", "shift_moments_cover_domain", verdict, ev))

    # (C) upper root below the total-mass moment endpoint
    beta = profile.tail_exponent
    si_lo, si_hi = dom.s_infty
    if beta is None:
        checks.append(AssumptionCheck("C", "beta_below_s_infty", "unknown", "no upper root"))
    elif beta < si_lo:
        checks.append(
            AssumptionCheck("C", "beta_below_s_infty", "pass",
                            f"beta = {beta:.6g} < s_infty >= {si_lo:.6g}")
        )
    elif beta >= si_hi:
        checks.append(
            AssumptionCheck("C", "beta_below_s_infty", "fail",
                            f"beta = {beta:.6g} >= s_infty <= {si_hi:.6g}")
        )
    else:
        checks.append(
            AssumptionCheck("C", "beta_below_s_infty", "unknown",
                            f"beta = {beta:.6g} inside s_infty bracket [{si_lo:.6g}, {si_hi:.6g}]")
        )

    # (D) / (D*) higher-moment domains reach beta (resp. stretch to 1)
    def eps_domain_check(check_id: str, name: str, points: list) -> AssumptionCheck:
        if dom.closed:
            return AssumptionCheck(check_id, name, "pass",
                                   "closed-form family: finite at every exponent")
        for eps in sorted(dom.s_eps):
            ok = all(
                not eval_m_epsilon(model, s, eps, budget=budget // 4, seed=seed).diverged
                for s in points
            )
            if ok:
                return AssumptionCheck(
                    check_id, name, "pass",
                    f"epsilon = {eps} keeps the required exponents finite",
                )
        return AssumptionCheck(
            check_id, name, "unknown",
            "no probed epsilon kept the required exponents draw-stable",
        )

    if beta is not None:
        delta = 0.1
        checks.append(
            eps_domain_check("D", "eps_domain_reaches_beta", [max(beta - delta, 0.0), beta])
        )
        if beta <= 1.0:
            pts = list(np.linspace(max(beta - delta, 0.0), 1.0, 4))
            checks.append(eps_domain_check("Dstar", "eps_domain_covers_to_one", pts))
        else:
            checks.append(
                AssumptionCheck("Dstar", "eps_domain_covers_to_one", "pass",
                                f"not required: beta = {beta:.6g} > 1")
            )
    else:
        checks.append(AssumptionCheck("D", "eps_domain_reaches_beta", "unknown", "no upper root"))
        checks.append(AssumptionCheck("Dstar", "eps_domain_covers_to_one", "unknown", "no upper root"))

    # (E) mean equation
    mean = profile.mean or solve_mean_equation(model)
    if mean.status == "unique":
        checks.append(
            AssumptionCheck("E", "mean_equation_solvable", "pass",
                            f"unique solution r = {mean.r:.6g}")
        )
    elif mean.status == "nonunique":
        checks.append(
            AssumptionCheck("E", "mean_equation_solvable", "pass",
                            "every r solves (unit mean weight sum, centered shift); "
                            "normalization picks r = 1 for homogeneous models")
        )
    else:
        checks.append(
            AssumptionCheck("E", "mean_equation_solvable", "fail",
                            f"mean weight sum {mean.sum_t_mean:.6g} with shift mean "
                            f"{mean.q_mean:.6g} admits no fixed mean")
        )

    # sign mixing: weights take negative values with positive probability
    pneg = model.t_law.neg_probability()
    checks.append(
        AssumptionCheck(
            "sign",
            "weights_mix_signs",
            "pass" if pneg > 0 else "fail",
            f"P(T < 0) = {pneg:.6g}",
        )
    )

    # nonlattice declaration (metadata, not estimated)
    nl = model.nonlattice_resolved
    checks.append(
        AssumptionCheck(
            "nonlattice",
            "log_weight_law_nonlattice",
            "pass" if nl else "fail",
            "declared nonlattice" if nl else "lattice or undeclared: tail limits may oscillate",
        )
    )

    # admissible range of the lower exponent
    alpha = profile.alpha_like
    if alpha is None:
        checks.append(
            AssumptionCheck("alpha_range", "alpha_in_admissible_range", "unknown",
                            "no lower exponent identified")
        )
    elif model.homogeneous:
        ok = 1.0 <= alpha < 2.0
        ev = (
            f"alpha = {alpha:.6g} in [1, 2)"
            if ok
            else f"alpha = {alpha:.6g}: homogeneous equations with exponent below 1 "
            "admit only the zero solution; at or above 2 the construction changes"
        )
        checks.append(
            AssumptionCheck("alpha_range", "alpha_in_admissible_range",
                            "pass" if ok else "fail", ev)
        )
    else:
        ok = 0.0 < alpha < 2.0
        checks.append(
            AssumptionCheck(
                "alpha_range",
                "alpha_in_admissible_range",
                "pass" if ok else "fail",
                f"alpha = {alpha:.6g} {'in' if ok else 'outside'} (0, 2)",
            )
        )

    return AssumptionReport(checks=checks)
