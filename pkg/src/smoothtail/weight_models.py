"""Weight models for the smoothing transform.

A model bundles three laws: how many children a node has (branching law N),
the signed weight attached to each child (weight law T, iid across children),
and the immigration term added on top (shift law Q). A realization of the
model is the random vector (Q, T_1, ..., T_N) that drives one application of
the transform

    R' = sum_k T_k * R_k + Q.

Weight laws are chosen from a closed set of families, each of which knows its
own closed-form absolute moments E|T|^s where they exist; everything else
falls back to Monte Carlo in the moment-analysis module. The shift is
independent of (N, T) for every family except the linked one, where
Q = r * (1 - sum_k T_k) ties the shift to the weights to pin the fixed point
at r exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Union

import numpy as np
from numpy.random import Generator

from .errors import InvalidParameterError
from .rng import CH_WEIGHTS, stream

__all__ = [
    "NFixed",
    "NGeometric",
    "NDiscrete",
    "TSignedLognormal",
    "TPointMass",
    "TUniform",
    "TFiniteMixture",
    "TSquared",
    "QPointMass",
    "QNormal",
    "QUniform",
    "QPareto",
    "QLinked",
    "WeightModel",
    "RealizedWeights",
    "WeightBlock",
    "validate_model",
    "canonicalize",
    "sample_weights",
    "draw_weight_block",
    "model_to_dict",
    "model_from_dict",
]


# ---------------------------------------------------------------------------
# branching laws (number of children)


@dataclass(frozen=True)
class NFixed:
    """Always exactly `count` children. count = 0 is allowed (shift only)."""

    count: int
    kind = "fixed"

    def validate(self):
        if not isinstance(self.count, int) or self.count < 0:
            raise InvalidParameterError("n.count", "must be an integer >= 0")

    def mean(self) -> float:
        return float(self.count)

    def pmf(self) -> np.ndarray:
        p = np.zeros(self.count + 1)
        p[self.count] = 1.0
        return p

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return np.full(size, self.count, dtype=np.int64)


@dataclass(frozen=True)
class NGeometric:
    """Geometric number of children, truncated at `bound` and renormalized.

    N = min(G - 1, bound) with G geometric on {1, 2, ...}; the truncation
    keeps every moment sum a finite closed form.
    """

    p: float
    bound: int = 64
    kind = "geometric"

    def validate(self):
        if not (0.0 < self.p <= 1.0):
            raise InvalidParameterError("n.p", "must lie in (0, 1]")
        if not isinstance(self.bound, int) or self.bound < 1:
            raise InvalidParameterError("n.bound", "must be an integer >= 1")

    def mean(self) -> float:
        q = 1.0 - self.p
        return q * (1.0 - q**self.bound) / self.p if self.p < 1.0 else 0.0

    def pmf(self) -> np.ndarray:
        q = 1.0 - self.p
        probs = self.p * q ** np.arange(self.bound + 1)
        probs[self.bound] = q**self.bound
        return probs

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        raw = rng.geometric(self.p, size=size).astype(np.int64) - 1
        return np.minimum(raw, self.bound)


@dataclass(frozen=True)
class NDiscrete:
    """Explicit finite law on nonnegative child counts."""

    values: tuple
    probs: tuple
    kind = "discrete"

    def validate(self):
        vals = np.asarray(self.values)
        pr = np.asarray(self.probs, dtype=float)
        if vals.size == 0 or vals.size != pr.size:
            raise InvalidParameterError(
                "n.values", "must be nonempty and match probs in length"
            )
        if not np.all(vals == vals.astype(np.int64)) or np.any(vals < 0):
            raise InvalidParameterError("n.values", "must be integers >= 0")
        if np.any(pr <= 0) or abs(pr.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("n.probs", "must be positive and sum to 1")

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def pmf(self) -> np.ndarray:
        vals = np.asarray(self.values, dtype=np.int64)
        p = np.zeros(int(vals.max()) + 1)
        np.add.at(p, vals, np.asarray(self.probs, dtype=float))
        return p

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        vals = np.asarray(self.values, dtype=np.int64)
        idx = rng.choice(vals.size, size=size, p=np.asarray(self.probs, dtype=float))
        return vals[idx]


# ---------------------------------------------------------------------------
# weight laws (iid signed weights given N)


@dataclass(frozen=True)
class TSignedLognormal:
    """|T| lognormal with log-mean/log-variance, independent random sign.

    E|T|^s = exp(log_mean * s + log_var * s^2 / 2) for every s >= 0, so the
    moment function of any model built on this family is finite everywhere.
    """

    log_mean: float
    log_var: float
    neg_prob: float = 0.0
    kind = "lognormal"

    def validate(self):
        if not (self.log_var > 0.0):
            raise InvalidParameterError("t.log_var", "variance must be positive for this family")
        if not (0.0 <= self.neg_prob <= 1.0):
            raise InvalidParameterError("t.neg_prob", "must lie in [0, 1]")

    def abs_moment(self, s: float) -> float:
        return math.exp(self.log_mean * s + 0.5 * self.log_var * s * s)

    def abs_moment_derivative(self, s: float) -> float:
        # d/ds E|T|^s = E|T|^s * (log_mean + log_var * s)
        return self.abs_moment(s) * (self.log_mean + self.log_var * s)

    def signed_mean(self) -> float:
        return (1.0 - 2.0 * self.neg_prob) * math.exp(self.log_mean + 0.5 * self.log_var)

    def neg_probability(self) -> float:
        return self.neg_prob

    def default_nonlattice(self) -> bool:
        return True  # log|T| has a density

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        mags = np.exp(rng.normal(self.log_mean, math.sqrt(self.log_var), size=size))
        signs = np.where(rng.random(size) < self.neg_prob, -1.0, 1.0)
        return mags * signs


@dataclass(frozen=True)
class TPointMass:
    """T = +/- magnitude with a fixed sign-flip probability."""

    magnitude: float
    neg_prob: float = 0.0
    kind = "point"

    def validate(self):
        if not (self.magnitude > 0.0):
            raise InvalidParameterError("t.magnitude", "must be strictly positive")
        if not (0.0 <= self.neg_prob <= 1.0):
            raise InvalidParameterError("t.neg_prob", "must lie in [0, 1]")

    def abs_moment(self, s: float) -> float:
        return self.magnitude**s

    def abs_moment_derivative(self, s: float) -> float:
        return self.magnitude**s * math.log(self.magnitude)

    def signed_mean(self) -> float:
        return (1.0 - 2.0 * self.neg_prob) * self.magnitude

    def neg_probability(self) -> float:
        return self.neg_prob

    def default_nonlattice(self) -> bool:
        return False  # log|T| is a single atom

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        signs = np.where(rng.random(size) < self.neg_prob, -1.0, 1.0)
        return self.magnitude * signs


@dataclass(frozen=True)
class TUniform:
    """T uniform on [low, high]."""

    low: float
    high: float
    kind = "uniform"

    def validate(self):
        if not (self.low < self.high):
            raise InvalidParameterError("t.low", "must satisfy low < high")

    def abs_moment(self, s: float) -> float:
        # integral of |t|^s over [low, high] via the signed antiderivative
        # F(x) = sign(x) |x|^(s+1) / (s+1)
        def antideriv(x: float) -> float:
            return math.copysign(abs(x) ** (s + 1.0), x) / (s + 1.0)

        return (antideriv(self.high) - antideriv(self.low)) / (self.high - self.low)

    def abs_moment_derivative(self, s: float) -> None:
        return None  # no closed form kept; Monte Carlo path handles it

    def signed_mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def neg_probability(self) -> float:
        if self.high <= 0.0:
            return 1.0
        return max(0.0, -self.low) / (self.high - self.low) if self.low < 0.0 else 0.0

    def default_nonlattice(self) -> bool:
        return True

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=size)


@dataclass(frozen=True)
class TFiniteMixture:
    """Explicit finite mixture of nonzero point atoms."""

    values: tuple
    probs: tuple
    kind = "mixture"

    def validate(self):
        vals = np.asarray(self.values, dtype=float)
        pr = np.asarray(self.probs, dtype=float)
        if vals.size == 0 or vals.size != pr.size:
            raise InvalidParameterError(
                "t.values", "must be nonempty and match probs in length"
            )
        if np.any(vals == 0.0):
            raise InvalidParameterError("t.values", "atoms must be nonzero")
        if np.any(pr <= 0) or abs(pr.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("t.probs", "must be positive and sum to 1")

    def abs_moment(self, s: float) -> float:
        vals = np.abs(np.asarray(self.values, dtype=float))
        return float(np.dot(np.asarray(self.probs, dtype=float), vals**s))

    def abs_moment_derivative(self, s: float) -> float:
        vals = np.abs(np.asarray(self.values, dtype=float))
        pr = np.asarray(self.probs, dtype=float)
        return float(np.dot(pr, vals**s * np.log(vals)))

    def signed_mean(self) -> float:
        return float(np.dot(self.probs, self.values))

    def neg_probability(self) -> float:
        vals = np.asarray(self.values, dtype=float)
        pr = np.asarray(self.probs, dtype=float)
        return float(pr[vals < 0].sum())

    def default_nonlattice(self) -> bool:
        return False

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        vals = np.asarray(self.values, dtype=float)
        idx = rng.choice(vals.size, size=size, p=np.asarray(self.probs, dtype=float))
        return vals[idx]


@dataclass(frozen=True)
class TSquared:
    """Internal family: the square of a base weight law (always positive).

    Used to build the auxiliary squared-weight model whose fixed point feeds
    the variance-mixture construction; not exposed through the config schema.
    """

    base: "TLaw"
    kind = "squared"

    def validate(self):
        self.base.validate()

    def abs_moment(self, s: float) -> float:
        return self.base.abs_moment(2.0 * s)

    def abs_moment_derivative(self, s: float) -> Optional[float]:
        d = self.base.abs_moment_derivative(2.0 * s)
        return None if d is None else 2.0 * d

    def signed_mean(self) -> float:
        return self.base.abs_moment(2.0)

    def neg_probability(self) -> float:
        return 0.0

    def default_nonlattice(self) -> bool:
        return self.base.default_nonlattice()

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return self.base.sample(rng, size) ** 2


# ---------------------------------------------------------------------------
# shift laws


@dataclass(frozen=True)
class QPointMass:
    """Deterministic shift; value 0 makes the model homogeneous."""

    value: float
    kind = "point"
    coupled = False

    def validate(self):
        if not math.isfinite(self.value):
            raise InvalidParameterError("q.value", "must be finite")

    def mean_given(self, sum_t_mean: float) -> float:
        return self.value

    def moment_sup(self) -> float:
        return math.inf

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return np.full(size, self.value, dtype=np.float64)


@dataclass(frozen=True)
class QNormal:
    mean: float
    std: float
    kind = "normal"
    coupled = False

    def validate(self):
        if not (self.std > 0.0):
            raise InvalidParameterError("q.std", "must be strictly positive")

    def mean_given(self, sum_t_mean: float) -> float:
        return self.mean

    def moment_sup(self) -> float:
        return math.inf

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=size)


@dataclass(frozen=True)
class QUniform:
    low: float
    high: float
    kind = "uniform"
    coupled = False

    def validate(self):
        if not (self.low < self.high):
            raise InvalidParameterError("q.low", "must satisfy low < high")

    def mean_given(self, sum_t_mean: float) -> float:
        return 0.5 * (self.low + self.high)

    def moment_sup(self) -> float:
        return math.inf

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=size)


@dataclass(frozen=True)
class QPareto:
    """Pareto shift with the given tail index; E|Q|^s is finite only below it."""

    index: float
    scale: float = 1.0
    kind = "pareto"
    coupled = False

    def validate(self):
        if not (self.index > 0.0):
            raise InvalidParameterError("q.index", "must be strictly positive")
        if not (self.scale > 0.0):
            raise InvalidParameterError("q.scale", "must be strictly positive")

    def mean_given(self, sum_t_mean: float) -> float:
        if self.index <= 1.0:
            return math.inf
        return self.scale * self.index / (self.index - 1.0)

    def moment_sup(self) -> float:
        return self.index

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return (rng.pareto(self.index, size=size) + 1.0) * self.scale


@dataclass(frozen=True)
class QLinked:
    """Shift tied to the weights: Q = r * (1 - sum_k T_k).

    The only coupled family. By construction the constant r solves the
    transform exactly, which makes this the canonical degenerate test bed.
    """

    target: float
    kind = "linked"
    coupled = True

    def validate(self):
        if self.target == 0.0 or not math.isfinite(self.target):
            raise InvalidParameterError(
                "q.target", "must be finite and nonzero (use a zero point mass instead)"
            )

    def mean_given(self, sum_t_mean: float) -> float:
        return self.target * (1.0 - sum_t_mean)

    def moment_sup(self) -> float:
        return math.inf

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        raise InvalidParameterError(
            "q", "linked shifts are derived from weight draws, never sampled alone"
        )


NLaw = Union[NFixed, NGeometric, NDiscrete]
TLaw = Union[TSignedLognormal, TPointMass, TUniform, TFiniteMixture, TSquared]
QLaw = Union[QPointMass, QNormal, QUniform, QPareto, QLinked]


# ---------------------------------------------------------------------------
# the model and its realizations


@dataclass(frozen=True)
class WeightModel:
    """A complete specification of the smoothing transform's input law."""

    n_law: NLaw
    t_law: TLaw
    q_law: QLaw
    # None means "derive from the weight family"; an explicit bool is a
    # user declaration recorded as-is.
    nonlattice: Optional[bool] = None
    # When False, every moment goes through Monte Carlo even if a closed
    # form exists; used to exercise the sampling paths.
    use_closed_forms: bool = True

    @property
    def homogeneous(self) -> bool:
        return isinstance(self.q_law, QPointMass) and self.q_law.value == 0.0

    @property
    def nonlattice_resolved(self) -> bool:
        if self.nonlattice is not None:
            return self.nonlattice
        return self.t_law.default_nonlattice()


@dataclass(frozen=True)
class RealizedWeights:
    """One draw (q, t_1 >= ... >= t_n by magnitude) from a model.

    The weight array is canonical: zero weights removed, sorted by absolute
    value descending, ties keeping their original draw order.
    """

    q: float
    t: np.ndarray

    @property
    def count(self) -> int:
        return int(self.t.size)


@dataclass
class WeightBlock:
    """A vectorized batch of realizations, flattened for numpy reduction.

    `t` holds the concatenated weights of all slots; `n[i]` weights belong to
    slot i, in draw order. `slot_ids` maps each weight back to its slot.
    """

    n: np.ndarray          # int64[size]
    t: np.ndarray          # float64[n.sum()]
    q: np.ndarray          # float64[size]
    slot_ids: np.ndarray   # int64[n.sum()]

    @property
    def size(self) -> int:
        return int(self.n.size)

    def slot_sum(self, per_weight: np.ndarray) -> np.ndarray:
        """Sum an array aligned with `t` within each slot (empty slots -> 0)."""
        return np.bincount(self.slot_ids, weights=per_weight, minlength=self.size)

    def sum_signed(self) -> np.ndarray:
        return self.slot_sum(self.t)

    def sum_abs_pow(self, s: float) -> np.ndarray:
        return self.slot_sum(np.abs(self.t) ** s)


def validate_model(model: WeightModel) -> WeightModel:
    """Check every law's parameter constraints; return the model unchanged."""
    model.n_law.validate()
    model.t_law.validate()
    model.q_law.validate()
    return model


def canonicalize(q: float, t_raw) -> RealizedWeights:
    """Normalize a raw draw: drop zero weights, sort by |t| descending.

    Ties keep their original index order, so the operation is deterministic
    and idempotent.
    """
    t = np.asarray(t_raw, dtype=np.float64).ravel()
    t = t[t != 0.0]
    order = np.argsort(-np.abs(t), kind="stable")
    return RealizedWeights(q=float(q), t=t[order])


def draw_weight_block(model: WeightModel, rng: Generator, size: int) -> WeightBlock:
    """Draw `size` realizations in one vectorized pass.

    Draw order is fixed (counts, then weights, then shifts) so a block is a
    pure function of the generator's key. Weights are in raw draw order, not
    canonical order; reductions do not care.
    """
    n = model.n_law.sample(rng, size)
    total = int(n.sum())
    t = model.t_law.sample(rng, total)
    slot_ids = np.repeat(np.arange(size, dtype=np.int64), n)
    if model.q_law.coupled:
        sums = np.bincount(slot_ids, weights=t, minlength=size)
        q = model.q_law.target * (1.0 - sums)
    else:
        q = model.q_law.sample(rng, size)
    return WeightBlock(n=n, t=t, q=q, slot_ids=slot_ids)


def sample_weights(model: WeightModel, seed: int, stream_id: int = 0) -> RealizedWeights:
    """Draw one canonical realization, a pure function of (seed, stream_id)."""
    rng = stream(seed, CH_WEIGHTS, stream_id)
    block = draw_weight_block(model, rng, 1)
    return canonicalize(float(block.q[0]), block.t)


# ---------------------------------------------------------------------------
# plain-dict serialization (reports, configs)

_N_FAMILIES = {"fixed": NFixed, "geometric": NGeometric, "discrete": NDiscrete}
_T_FAMILIES = {
    "lognormal": TSignedLognormal,
    "point": TPointMass,
    "uniform": TUniform,
    "mixture": TFiniteMixture,
}
_Q_FAMILIES = {
    "point": QPointMass,
    "normal": QNormal,
    "uniform": QUniform,
    "pareto": QPareto,
    "linked": QLinked,
}


def _law_to_dict(law) -> dict:
    out = {"family": law.kind}
    for f in fields(law):
        v = getattr(law, f.name)
        if isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def _law_from_dict(d: dict, registry: dict, section: str):
    spec = dict(d)
    family = spec.pop("family", None)
    if family not in registry:
        raise InvalidParameterError(
            f"{section}.family", f"must be one of {sorted(registry)}"
        )
    cls = registry[family]
    known = {f.name for f in fields(cls)}
    for key in spec:
        if key not in known:
            raise InvalidParameterError(f"{section}.{key}", "unknown parameter")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in spec.items()}
    return cls(**kwargs)


def model_to_dict(model: WeightModel) -> dict:
    if isinstance(model.t_law, TSquared):
        raise InvalidParameterError("t.family", "internal family, not serializable")
    return {
        "n": _law_to_dict(model.n_law),
        "t": _law_to_dict(model.t_law),
        "q": _law_to_dict(model.q_law),
        "homogeneous": model.homogeneous,
        "nonlattice": model.nonlattice_resolved,
    }


def model_from_dict(d: dict) -> WeightModel:
    for section in ("n", "t", "q"):
        if section not in d:
            raise InvalidParameterError(section, "missing model section")
    model = WeightModel(
        n_law=_law_from_dict(d["n"], _N_FAMILIES, "n"),
        t_law=_law_from_dict(d["t"], _T_FAMILIES, "t"),
        q_law=_law_from_dict(d["q"], _Q_FAMILIES, "q"),
        nonlattice=d.get("nonlattice"),
    )
    validate_model(model)
    declared = d.get("homogeneous")
    if declared is not None and bool(declared) != model.homogeneous:
        raise InvalidParameterError(
            "homogeneous",
            "declared flag contradicts the shift law (Q must be a zero point mass)",
        )
    return model
