"""Pool iteration, convergence, trees, degeneracy, and persistence."""

import math
import os

import numpy as np
import pytest

import smoothtail as st
from smoothtail.engine import kolmogorov_distance, wasserstein_distance

from conftest import (
    collapse_model,
    const_two_model,
    degenerate_linked_model,
    homogeneous_half_model,
    lognormal_model,
    variance_model,
)


# ---------------------------------------------------------------------------
# initialization


def test_init_pool_rejects_empty():
    with pytest.raises(ValueError):
        st.init_pool(0, 1.0)


def test_init_pool_constant_start():
    pool = st.init_pool(50, 3.0, seed=7, target_mean=3.0)
    assert pool.size == 50 and pool.generation == 0 and pool.seed == 7
    assert np.all(pool.values == 3.0)
    assert pool.mean() == 3.0 and pool.sd() == 0.0


def test_missing_mean_start_raises():
    # weight sums average to 1 while the shift mean is 1: no constant start
    model = st.WeightModel(st.NFixed(2), st.TPointMass(0.5), st.QPointMass(1.0))
    with pytest.raises(st.MissingMeanError):
        st.run_to_convergence(model, size=200, tol=1e-3, max_generations=5, seed=0)


# ---------------------------------------------------------------------------
# fixed points reached exactly


def test_constant_solution_reached_exactly():
    pool, diags = st.run_to_convergence(
        const_two_model(), size=2000, tol=1e-15, max_generations=80, seed=11
    )
    assert pool.values.min() == 2.0 and pool.values.max() == 2.0
    assert diags.stop_reason == "tolerance"
    assert diags.final_ks == 0.0


def test_linked_shift_pool_collapses_to_target():
    pool, diags = st.run_to_convergence(
        degenerate_linked_model(), size=2000, tol=1e-15, max_generations=200, seed=1
    )
    # the iteration settles on an ulp-wide attractor around the target
    assert float(np.abs(pool.values - 3.0).max()) < 1e-14
    assert diags.stop_reason == "tolerance"
    assert pool.sd() < 1e-12


def test_homogeneous_unit_sum_is_frozen():
    # weight sums are identically 1, so the constant-1 start never moves
    pool, diags = st.run_to_convergence(
        homogeneous_half_model(), size=1000, tol=1e-9, max_generations=50, seed=3
    )
    assert np.all(pool.values == 1.0)
    assert diags.generations == 1 and diags.stop_reason == "tolerance"


def test_low_exponent_homogeneous_pool_collapses():
    pool, _ = st.run_to_convergence(
        collapse_model(), size=1000, tol=0.0, max_generations=80, seed=4
    )
    assert float(np.abs(pool.values).max()) < 1e-12


def test_divergence_raises_with_generation():
    model = st.WeightModel(st.NFixed(2), st.TPointMass(2.0), st.QNormal(0.0, 1.0))
    with pytest.raises(st.DivergenceError) as err:
        st.run_to_convergence(model, size=500, tol=0.0, max_generations=2000, seed=0)
    assert err.value.generation > 0


# ---------------------------------------------------------------------------
# iteration mechanics


def test_iterate_once_is_reproducible():
    model = lognormal_model()
    pool = st.init_pool(3000, 0.0, seed=21)
    a = st.iterate_once(model, pool)
    b = st.iterate_once(model, pool)
    assert a.generation == 1
    np.testing.assert_array_equal(a.values, b.values)
    c = st.iterate_once(model, pool, stream_id=1)
    assert not np.array_equal(a.values, c.values)


def test_iterate_once_thread_count_invariant():
    # pool larger than one chunk so the work actually splits
    model = lognormal_model()
    pool = st.init_pool(70_000, 0.0, seed=2)
    serial = st.iterate_once(model, pool, threads=1)
    threaded = st.iterate_once(model, pool, threads=4)
    np.testing.assert_array_equal(serial.values, threaded.values)


def test_run_to_convergence_thread_count_invariant():
    model = lognormal_model()
    a, _ = st.run_to_convergence(model, size=2000, tol=0.0, max_generations=6, seed=9, threads=1)
    b, _ = st.run_to_convergence(model, size=2000, tol=0.0, max_generations=6, seed=9, threads=3)
    np.testing.assert_array_equal(a.values, b.values)


def test_diagnostics_histories_align():
    _, diags = st.run_to_convergence(
        lognormal_model(), size=1500, tol=0.0, max_generations=7, seed=13
    )
    assert diags.generations == 7
    assert diags.stop_reason == "max_generations"
    assert len(diags.ks_history) == 7
    assert len(diags.wasserstein_history) == 7
    assert len(diags.mean_history) == 7
    assert diags.final_ks == diags.ks_history[-1]
    assert diags.final_wasserstein == diags.wasserstein_history[-1]
    assert all(0.0 <= k <= 1.0 for k in diags.ks_history)
    assert diags.mean_violations == []


def test_mean_renormalization_pins_the_mean():
    # homogeneous, random weights, unit mean sum: the pool mean is a
    # martingale and diffuses unless divided back to its target
    model = st.WeightModel(
        st.NFixed(2), st.TFiniteMixture([0.7, 0.3], [0.5, 0.5]), st.QPointMass(0.0)
    )
    pinned, _ = st.run_to_convergence(
        model, size=1000, tol=0.0, max_generations=30, seed=5, renormalize_mean=True
    )
    assert pinned.mean() == pytest.approx(1.0, abs=1e-12)
    free, _ = st.run_to_convergence(
        model, size=1000, tol=0.0, max_generations=30, seed=5
    )
    assert abs(free.mean() - 1.0) > 1e-6  # visibly diffused at this pool size


# ---------------------------------------------------------------------------
# distances


def test_kolmogorov_distance_basics():
    x = np.array([0.0, 1.0, 2.0])
    assert kolmogorov_distance(x, x) == 0.0
    assert kolmogorov_distance(np.array([0.0, 0.0]), np.array([1.0, 1.0])) == 1.0
    # half the mass shifted -> distance 1/2
    assert kolmogorov_distance(np.array([0.0, 1.0]), np.array([0.0, 2.0])) == 0.5


def test_wasserstein_distance_basics():
    a = np.array([0.0, 1.0])
    b = np.array([1.0, 2.0])
    assert wasserstein_distance(a, b) == 1.0
    with pytest.raises(ValueError):
        wasserstein_distance(a, np.array([1.0]))


# ---------------------------------------------------------------------------
# branching tree


def test_tree_exact_values():
    model = const_two_model()
    # depth 0 returns the terminal value untouched
    assert st.sample_branching_tree(model, 0, 7.0) == 7.0
    # three levels of t=1/2, q=1: 1 + 1/2 + 1/4 + terminal/8
    assert st.sample_branching_tree(model, 3, 0.0) == 1.75
    assert st.sample_branching_tree(model, 3, 1.0) == 1.875
    assert st.sample_branching_tree(model, 3, 2.0) == 2.0


def test_tree_is_seed_deterministic():
    model = lognormal_model()
    a = st.sample_branching_tree(model, 4, 0.0, seed=8)
    b = st.sample_branching_tree(model, 4, 0.0, seed=8)
    assert a == b
    c = st.sample_branching_tree(model, 4, 0.0, seed=9)
    assert a != c


def test_tree_budget_guard():
    model = st.WeightModel(st.NFixed(3), st.TPointMass(0.5), st.QPointMass(1.0))
    with pytest.raises(st.TreeBudgetExceededError) as err:
        st.sample_branching_tree(model, 20, 0.0, node_budget=1000)
    assert err.value.budget == 1000
    assert err.value.depth <= 20


# ---------------------------------------------------------------------------
# degeneracy detection


def test_degeneracy_linked_shift():
    res = st.detect_degeneracy(degenerate_linked_model())
    assert res.degenerate and res.r == 3.0


def test_degeneracy_unit_weight_sums():
    res = st.detect_degeneracy(homogeneous_half_model())
    assert res.degenerate and res.r == 1.0


def test_degeneracy_negative_cases():
    assert not st.detect_degeneracy(lognormal_model()).degenerate
    assert not st.detect_degeneracy(variance_model()).degenerate
    assert not st.detect_degeneracy(collapse_model()).degenerate


def test_degeneracy_explicit_candidate():
    # forcing the wrong constant must not detect anything
    res = st.detect_degeneracy(degenerate_linked_model(), r=2.0)
    assert res.degenerate  # linked shifts solve for their own target regardless
    res = st.detect_degeneracy(variance_model(), r=1.0)
    assert not res.degenerate


# ---------------------------------------------------------------------------
# persistence


def test_pool_round_trip(tmp_path):
    pool, _ = st.run_to_convergence(
        lognormal_model(), size=512, tol=0.0, max_generations=3, seed=6
    )
    path = tmp_path / "pool.bin"
    st.write_pool(pool, path)
    back = st.read_pool(path)
    np.testing.assert_array_equal(back.values, pool.values)
    assert back.generation == pool.generation
    assert back.seed == pool.seed
    assert back.size == pool.size


def test_pool_format_guards(tmp_path):
    pool = st.init_pool(16, 1.0, seed=1)
    path = tmp_path / "pool.bin"
    st.write_pool(pool, path)
    raw = path.read_bytes()

    short = tmp_path / "short.bin"
    short.write_bytes(raw[:10])
    with pytest.raises(st.PoolFormatError):
        st.read_pool(short)

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"NOTAPOOL" + raw[8:])
    with pytest.raises(st.PoolFormatError):
        st.read_pool(bad_magic)

    bad_version = tmp_path / "version.bin"
    bad_version.write_bytes(raw[:8] + b"\xff\x00\x00\x00" + raw[12:])
    with pytest.raises(st.PoolFormatError):
        st.read_pool(bad_version)

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(raw[:-8])
    with pytest.raises(st.PoolFormatError):
        st.read_pool(truncated)


def test_pool_csv_export(tmp_path):
    pool = st.init_pool(4, 1.5, seed=0)
    path = tmp_path / "pool.csv"
    st.export_pool_csv(pool, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "value"
    assert [float(x) for x in lines[1:]] == [1.5, 1.5, 1.5, 1.5]
