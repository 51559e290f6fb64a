"""Population-dynamics engine for fixed points of the smoothing transform.

The fixed-point law of R' = sum_k T_k R_k + Q is approximated by a pool of P
samples evolved in generations: every slot draws fresh weights and combines
`N` children resampled uniformly (with replacement) from the previous pool.
Children of one slot may therefore coincide, a deliberate O(1/P) bias that
vanishes at the pool sizes used here.

Convergence is monitored by the Kolmogorov distance between consecutive
generations, with the sorted-sample L1 (Wasserstein-1) distance recorded
alongside as a diagnostic. All sampling is chunk-keyed (see rng.py), so runs
are bit-identical for any thread count.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DivergenceError,
    MissingMeanError,
    PoolFormatError,
    TreeBudgetExceededError,
)
from .moments import MomentProfile, moment_profile, solve_mean_equation
from .rng import CH_DEGEN, CH_ENGINE, CH_TREE, map_chunks, stream
from .weight_models import WeightModel, draw_weight_block

__all__ = [
    "SamplePool",
    "ConvergenceDiagnostics",
    "DegeneracyResult",
    "OVERFLOW_LIMIT",
    "POOL_MAGIC",
    "POOL_FORMAT_VERSION",
    "init_pool",
    "resolve_initial_value",
    "iterate_once",
    "run_to_convergence",
    "sample_branching_tree",
    "detect_degeneracy",
    "kolmogorov_distance",
    "wasserstein_distance",
    "write_pool",
    "read_pool",
    "export_pool_csv",
]

# Values beyond this magnitude abort the run before they reach IEEE infinity.
OVERFLOW_LIMIT = 1e300

POOL_MAGIC = b"SFPEPOOL"
POOL_FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQQQ")  # magic, version, size, generation, seed


@dataclass
class SamplePool:
    """A generation of fixed-point samples plus its provenance."""

    values: np.ndarray
    generation: int
    seed: int
    target_mean: Optional[float] = None

    @property
    def size(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(self.values.mean())

    def sd(self) -> float:
        return float(self.values.std())


@dataclass
class ConvergenceDiagnostics:
    """Per-generation summaries of a run."""

    generations: int = 0
    stop_reason: str = ""  # 'tolerance' | 'max_generations'
    ks_history: list = field(default_factory=list)
    wasserstein_history: list = field(default_factory=list)
    mean_history: list = field(default_factory=list)
    # generations where the pinned mean drifted outside its sampling band
    mean_violations: list = field(default_factory=list)

    @property
    def final_ks(self) -> float:
        return self.ks_history[-1] if self.ks_history else float("nan")

    @property
    def final_wasserstein(self) -> float:
        return self.wasserstein_history[-1] if self.wasserstein_history else float("nan")


def init_pool(size: int, r: float, seed: int = 0, target_mean: Optional[float] = None) -> SamplePool:
    """Point-mass starting pool: every slot holds r."""
    if size < 1:
        raise ValueError("pool size must be positive")
    return SamplePool(
        values=np.full(size, float(r), dtype=np.float64),
        generation=0,
        seed=seed,
        target_mean=target_mean,
    )


def resolve_initial_value(model: WeightModel, profile: Optional[MomentProfile] = None):
    """Choose the starting constant and the pinned mean for a model.

    Homogeneous models start at the unit-mean normalization. Nonhomogeneous
    models with lower exponent below 1 start at 0 (no mean to pin there);
    otherwise the mean equation's solution is required and becomes both the
    start value and the pinned mean.

    Returns (start_value, target_mean or None); raises MissingMeanError when
    a pinned mean is required but the mean equation has none.
    """
    if model.homogeneous:
        # the iteration multiplies the mean by E sum T each generation, so
        # pinning at 1 only makes sense when that factor is itself 1
        sum_t_mean = model.n_law.mean() * model.t_law.signed_mean()
        target = 1.0 if abs(sum_t_mean - 1.0) <= 1e-9 else None
        return 1.0, target
    if profile is None:
        profile = moment_profile(model)
    alpha = profile.alpha_like
    if alpha is not None and alpha < 1.0:
        return 0.0, None
    mean = profile.mean or solve_mean_equation(model)
    if mean.status == "unique":
        return mean.r, mean.r
    if mean.status == "nonunique":
        # centered shift with unit mean weight sum: any mean solves; use 0
        return 0.0, 0.0
    raise MissingMeanError(
        "initialization needs the mean equation's solution, but "
        f"status is {mean.status!r} (weight-sum mean {mean.sum_t_mean:.6g})"
    )


def iterate_once(
    model: WeightModel,
    pool: SamplePool,
    stream_id: int = 0,
    threads: int = 1,
) -> SamplePool:
    """Apply the transform once to every slot of the pool.

    Per chunk, the draw order is: weight block (counts, weights, shifts),
    then child indices. Streams are keyed by (seed, generation, chunk), so
    the result does not depend on `threads`.
    """
    prev = pool.values
    size = prev.size

    def one_chunk(c: int, start: int, stop: int) -> np.ndarray:
        rng = stream(pool.seed, CH_ENGINE, stream_id, pool.generation, c)
        block = draw_weight_block(model, rng, stop - start)
        child_idx = rng.integers(0, size, size=block.t.size)
        contrib = block.t * prev[child_idx]
        return block.q + block.slot_sum(contrib)

    parts = map_chunks(one_chunk, size, threads=threads)
    values = np.concatenate(parts) if len(parts) > 1 else parts[0]
    bad = ~np.isfinite(values) | (np.abs(values) > OVERFLOW_LIMIT)
    if np.any(bad):
        raise DivergenceError(
            pool.generation + 1,
            f"{int(bad.sum())} of {size} slots left the representable range",
        )
    return SamplePool(
        values=values,
        generation=pool.generation + 1,
        seed=pool.seed,
        target_mean=pool.target_mean,
    )


def kolmogorov_distance(sorted_a: np.ndarray, sorted_b: np.ndarray) -> float:
    """Two-sample Kolmogorov distance; inputs must be sorted ascending."""
    both = np.concatenate([sorted_a, sorted_b])
    cdf_a = np.searchsorted(sorted_a, both, side="right") / sorted_a.size
    cdf_b = np.searchsorted(sorted_b, both, side="right") / sorted_b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def wasserstein_distance(sorted_a: np.ndarray, sorted_b: np.ndarray) -> float:
    """Sorted-sample L1 distance between equal-size samples."""
    if sorted_a.size != sorted_b.size:
        raise ValueError("pools must have equal size")
    return float(np.mean(np.abs(sorted_a - sorted_b)))


def run_to_convergence(
    model: WeightModel,
    size: int,
    tol: float,
    max_generations: int,
    seed: int,
    profile: Optional[MomentProfile] = None,
    threads: int = 1,
    stream_id: int = 0,
    renormalize_mean: bool = False,
):
    """Iterate until the consecutive-generation Kolmogorov distance sits
    below `tol`, or `max_generations` is exhausted.

    With `renormalize_mean` the pool is rescaled to its pinned mean after
    every generation. The pool mean is a martingale for mean-preserving
    transforms, so without the rescale it slowly diffuses away from the
    target; dividing it out removes that drift at O(1/P) bias.

    Returns (pool, diagnostics). DivergenceError propagates with the
    offending generation attached.
    """
    start, target = resolve_initial_value(model, profile)
    pool = init_pool(size, start, seed=seed, target_mean=target)
    diags = ConvergenceDiagnostics()
    prev_sorted = np.sort(pool.values)
    for _ in range(max_generations):
        pool = iterate_once(model, pool, stream_id=stream_id, threads=threads)
        if renormalize_mean and pool.target_mean is not None:
            mean = pool.mean()
            if mean > 0 and np.isfinite(mean):
                pool.values /= mean / pool.target_mean
        cur_sorted = np.sort(pool.values)
        # diagnostics tolerate pre-divergence magnitudes whose squares
        # overflow; inf statistics are recorded as-is
        with np.errstate(over="ignore"):
            ks = kolmogorov_distance(prev_sorted, cur_sorted)
            w1 = wasserstein_distance(prev_sorted, cur_sorted)
            diags.ks_history.append(ks)
            diags.wasserstein_history.append(w1)
            mean = pool.mean()
            diags.mean_history.append(mean)
            if pool.target_mean is not None:
                band = 4.0 * pool.sd() / np.sqrt(pool.size)
                if abs(mean - pool.target_mean) > band and band > 0:
                    diags.mean_violations.append(pool.generation)
        diags.generations = pool.generation
        prev_sorted = cur_sorted
        if ks < tol:
            diags.stop_reason = "tolerance"
            return pool, diags
    diags.stop_reason = "max_generations"
    return pool, diags


def sample_branching_tree(
    model: WeightModel,
    depth: int,
    terminal_value: float,
    seed: int = 0,
    stream_id: int = 0,
    node_budget: int = 1_000_000,
) -> float:
    """One exact realization of the depth-limited recursive expansion.

    Nodes at the cutoff depth take `terminal_value`; every internal node
    draws fresh weights from a single depth-first stream. The node budget
    caps the expansion (supercritical branching grows exponentially).
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    rng = stream(seed, CH_TREE, stream_id)
    nodes = 0
    # stack entries: (multiplier, remaining_depth)
    stack = [(1.0, depth)]
    total = 0.0
    while stack:
        mult, remaining = stack.pop()
        if remaining == 0:
            total += mult * terminal_value
            continue
        nodes += 1
        if nodes > node_budget:
            raise TreeBudgetExceededError(node_budget, depth)
        block = draw_weight_block(model, rng, 1)
        total += mult * float(block.q[0])
        # children pushed in reverse so expansion visits them in draw order
        for t_k in block.t[::-1]:
            stack.append((mult * float(t_k), remaining - 1))
    return total


@dataclass(frozen=True)
class DegeneracyResult:
    degenerate: bool
    r: Optional[float]
    evidence: str


def detect_degeneracy(
    model: WeightModel,
    r: Optional[float] = None,
    draws: int = 4096,
    tol: float = 1e-9,
    seed: int = 0,
) -> DegeneracyResult:
    """Decide whether the constant r solves the transform almost surely.

    Homogeneous models are degenerate when the weight sum is identically 1
    (then every constant solves; the unit normalization is reported).
    Nonhomogeneous models test r * sum T_k + Q = r across fresh draws; the
    linked shift family satisfies it by construction.
    """
    if model.q_law.coupled:
        return DegeneracyResult(
            True,
            model.q_law.target,
            "shift is linked to the weights, the target constant solves exactly",
        )
    rng = stream(seed, CH_DEGEN, 0)
    block = draw_weight_block(model, rng, draws)
    sums = block.sum_signed()
    if model.homogeneous:
        gap = float(np.max(np.abs(sums - 1.0))) if draws else 0.0
        if gap <= tol:
            return DegeneracyResult(
                True, 1.0, f"weight sums are identically 1 (max gap {gap:.2e})"
            )
        return DegeneracyResult(False, None, f"weight sums vary (max gap {gap:.2e})")
    if r is None:
        mean = solve_mean_equation(model)
        if mean.status != "unique":
            return DegeneracyResult(
                False, None, "no candidate constant (mean equation " + mean.status + ")"
            )
        r = mean.r
    residual = float(np.max(np.abs(r * sums + block.q - r)))
    if residual <= tol:
        return DegeneracyResult(
            True, r, f"r * sum(T) + Q = r across {draws} draws (max residual {residual:.2e})"
        )
    return DegeneracyResult(False, r, f"max residual {residual:.2e} at r = {r:.6g}")


# ---------------------------------------------------------------------------
# persistence


def write_pool(pool: SamplePool, path) -> None:
    """Binary pool file: fixed header then little-endian float64 values."""
    header = _HEADER.pack(
        POOL_MAGIC, POOL_FORMAT_VERSION, pool.size, pool.generation, pool.seed
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pool.values.astype("<f8", copy=False).tobytes())


def read_pool(path) -> SamplePool:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise PoolFormatError("file shorter than the pool header")
    magic, version, size, generation, seed = _HEADER.unpack_from(raw, 0)
    if magic != POOL_MAGIC:
        raise PoolFormatError(f"bad magic {magic!r}")
    if version != POOL_FORMAT_VERSION:
        raise PoolFormatError(f"unsupported pool format version {version}")
    expected = _HEADER.size + 8 * size
    if len(raw) != expected:
        raise PoolFormatError(
            f"payload length {len(raw) - _HEADER.size} does not match size field {size}"
        )
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).copy()
    return SamplePool(values=values, generation=generation, seed=seed)


def export_pool_csv(pool: SamplePool, path) -> None:
    """One value per line with a header row; full round-trip precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value\n")
        for v in pool.values.tolist():
            fh.write(f"{v!r}\n")
