"""End-to-end command line tests, run in process through cli.main."""

import json
import os

import numpy as np
import pytest

import smoothtail as st
from smoothtail.cli import main
from smoothtail.reports import canonical_payload_bytes, payload_digest, read_report

LOGNORMAL = """
[model.n]
family = "fixed"
count = 2

[model.t]
family = "lognormal"
log_mean = -1.0
log_var = 0.5
neg_prob = 0.5

[model.q]
family = "normal"
mean = 0.0
std = 1.0
"""

LINKED = """
[model.n]
family = "fixed"
count = 2

[model.t]
family = "point"
magnitude = 0.4

[model.q]
family = "linked"
target = 3.0
"""

ALPHA2 = """
[model.n]
family = "fixed"
count = 2

[model.t]
family = "point"
magnitude = 0.7071067811865476
neg_prob = 0.5

[model.q]
family = "linked"
target = 1.0
"""

SMALL_RUN = """
[run]
pool_size = 2000
max_generations = 10
convergence_tol = 1e-4
seed = 7

[analytics]
grid_points = 128
bootstrap = 50
identity_s = [1.5]
"""


def write_config(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def report_payload(out_dir):
    report = read_report(os.path.join(out_dir, "report.json"))
    return report["payload"], report


# ---------------------------------------------------------------------------
# analyze


def test_analyze_writes_report(tmp_path, capsys):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    out = str(tmp_path / "out")
    assert main(["analyze", "--config", cfg, "--out-dir", out]) == 0
    payload, report = report_payload(out)
    assert payload["command"] == "analyze"
    assert payload["profile"]["alpha"] == pytest.approx(0.8921140502018186, abs=1e-9)
    assert payload["profile"]["gamma"] == pytest.approx(4.0, abs=1e-9)
    assert all(c["verdict"] == "pass" for c in payload["assumptions"])
    assert payload["degeneracy"]["degenerate"] is False
    # the archived config is digested into the payload
    assert "config.toml" in payload["artifacts"]
    assert os.path.exists(os.path.join(out, "config.toml"))
    # the printed digest matches a recomputation from the payload
    text = capsys.readouterr().out
    assert report["payload_sha256"] in text
    assert payload_digest(payload["profile"]) != ""  # jsonable all the way down


def test_analyze_csv_table(tmp_path):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    out = str(tmp_path / "out")
    assert main(["analyze", "--config", cfg, "--out-dir", out, "--format", "csv"]) == 0
    lines = (tmp_path / "out" / "assumptions.csv").read_text().splitlines()
    assert lines[0] == "id,name,verdict,evidence"
    assert len(lines) >= 9


# ---------------------------------------------------------------------------
# simulate


def test_simulate_saves_pool(tmp_path):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    out = str(tmp_path / "out")
    assert main(["simulate", "--config", cfg, "--out-dir", out]) == 0
    payload, _ = report_payload(out)
    assert payload["command"] == "simulate"
    assert payload["pool"]["size"] == 2000
    assert payload["convergence"]["generations"] == 10
    pool = st.read_pool(os.path.join(out, "pool.bin"))
    assert pool.size == 2000
    assert pool.generation == 10
    # the hashed payload must not mention threads or output destinations
    assert "threads" not in payload["config"]["run"]
    assert "output" not in payload["config"]


def test_simulate_flag_overrides(tmp_path):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    out = str(tmp_path / "out")
    code = main(
        [
            "simulate",
            "--config",
            cfg,
            "--out-dir",
            out,
            "--seed",
            "0x2A",
            "--pool-size",
            "500",
            "--generations",
            "3",
            "--format",
            "csv",
        ]
    )
    assert code == 0
    payload, _ = report_payload(out)
    assert payload["config"]["run"]["seed"] == 42
    assert payload["config"]["run"]["pool_size"] == 500
    assert payload["config"]["run"]["max_generations"] == 3
    csv_lines = (tmp_path / "out" / "pool.csv").read_text().splitlines()
    assert csv_lines[0] == "value" and len(csv_lines) == 501


def test_simulate_same_seed_same_digest(tmp_path):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["simulate", "--config", cfg, "--out-dir", a]) == 0
    assert main(["simulate", "--config", cfg, "--out-dir", b]) == 0
    pa, ra = report_payload(a)
    pb, rb = report_payload(b)
    assert ra["payload_sha256"] == rb["payload_sha256"]
    assert canonical_payload_bytes(pa) == canonical_payload_bytes(pb)


# ---------------------------------------------------------------------------
# tail


def test_tail_lognormal_pipeline(tmp_path):
    cfg = write_config(
        tmp_path,
        LOGNORMAL
        + """
[run]
pool_size = 6000
max_generations = 15
convergence_tol = 1e-4
seed = 7

[analytics]
grid_points = 128
bootstrap = 50
identity_s = [1.5]
""",
    )
    out = str(tmp_path / "out")
    assert main(["tail", "--config", cfg, "--out-dir", out]) == 0
    payload, _ = report_payload(out)
    assert payload["command"] == "tail"
    assert payload["identity"]["rows"][0]["passed"] is True
    assert payload["hill"]["k"] > 0
    # 6000 samples force the scan window down but keep it usable
    assert payload["tail_scan"] is not None
    assert payload["k_at_tail_exponent"]["s"] == pytest.approx(3.1078859497981814, abs=1e-9)
    assert payload["plateau_crosscheck"]["consistent"] is True
    assert payload["verdict"]["kind"] in ("power_tail", "inconclusive")


def test_tail_degenerate_model(tmp_path):
    cfg = write_config(tmp_path, LINKED + SMALL_RUN)
    out = str(tmp_path / "out")
    assert main(["tail", "--config", cfg, "--out-dir", out, "--format", "csv"]) == 0
    payload, _ = report_payload(out)
    assert payload["verdict"]["kind"] == "degenerate"
    assert payload["verdict"]["detail"]["r"] == 3.0
    assert payload["degeneracy"]["degenerate"] is True
    # constant pool: the scan reports nothing beyond the atom
    assert payload["tail_scan"]["atom_only"] is True
    assert payload["tail_scan"]["plateau"] == 0.0
    assert abs(payload["k_at_tail_exponent"]["value"]) < 1e-9
    assert os.path.exists(os.path.join(out, "identity.csv"))
    assert os.path.exists(os.path.join(out, "hill_curve.csv"))


# ---------------------------------------------------------------------------
# special


def test_special_alpha2(tmp_path):
    cfg = write_config(
        tmp_path,
        ALPHA2
        + """
[run]
pool_size = 4000
max_generations = 50
seed = 7

[special]
scale = 1.0
t_values = [0.5, 1.0, 2.0]
count = 20000
""",
    )
    out = str(tmp_path / "out")
    assert main(["special", "--config", cfg, "--out-dir", out, "--format", "csv"]) == 0
    payload, _ = report_payload(out)
    assert payload["command"] == "special"
    assert payload["mixture"]["r"] == 1.0
    assert payload["all_pass"] is True
    assert all(row["passed"] for row in payload["fixed_point_rows"])
    w_pool = st.read_pool(os.path.join(out, "w_pool.bin"))
    assert np.all(w_pool.values == 1.0)
    assert os.path.exists(os.path.join(out, "charfn.csv"))


def test_special_refuses_off_boundary_model(tmp_path):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    assert main(["special", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 2


# ---------------------------------------------------------------------------
# verify


def test_verify_passes_on_clean_model(tmp_path):
    cfg = write_config(
        tmp_path,
        """
[model.n]
family = "fixed"
count = 1

[model.t]
family = "point"
magnitude = 0.5
neg_prob = 0.5

[model.q]
family = "point"
value = 1.0

[run]
pool_size = 20000
max_generations = 40
convergence_tol = 1e-6
seed = 7

[analytics]
identity_s = [0.5, 1.0]
grid_points = 128
bootstrap = 50
""",
    )
    out = str(tmp_path / "out")
    assert main(["verify", "--config", cfg, "--out-dir", out]) == 0
    payload, _ = report_payload(out)
    names = [c["name"] for c in payload["checks"]]
    assert "mean_preservation" in names
    assert "tail_identity" in names
    assert "variance_identity" in names
    assert payload["all_pass"] is True


def test_verify_flags_unconverged_pool(tmp_path):
    # one generation from a constant start is nowhere near the fixed
    # point, so the transform-consistency residual must blow past its band
    cfg = write_config(
        tmp_path,
        LOGNORMAL
        + """
[run]
pool_size = 20000
max_generations = 1
convergence_tol = 1e-9
seed = 7

[analytics]
identity_s = [2.0]
grid_points = 128
bootstrap = 50
""",
    )
    out = str(tmp_path / "out")
    assert main(["verify", "--config", cfg, "--out-dir", out]) == 1
    payload, _ = report_payload(out)
    failed = {c["name"]: c["passed"] for c in payload["checks"]}
    assert failed["tail_identity"] is False
    assert payload["all_pass"] is False


def test_verify_degenerate_model_collapses(tmp_path):
    cfg = write_config(tmp_path, LINKED + SMALL_RUN)
    out = str(tmp_path / "out")
    assert main(["verify", "--config", cfg, "--out-dir", out]) == 0
    payload, _ = report_payload(out)
    checks = {c["name"]: c for c in payload["checks"]}
    assert checks["degenerate_pool_collapses"]["passed"] is True
    assert checks["degenerate_pool_collapses"]["detail"]["r"] == 3.0


# ---------------------------------------------------------------------------
# report rendering


def test_report_renders_previous_run(tmp_path, capsys):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    out = str(tmp_path / "out")
    assert main(["simulate", "--config", cfg, "--out-dir", out]) == 0
    capsys.readouterr()
    assert main(["report", "--out-dir", out]) == 0
    text = capsys.readouterr().out
    assert "command: simulate" in text
    assert "pool: n=2000" in text


def test_report_missing_directory(tmp_path):
    assert main(["report", "--out-dir", str(tmp_path / "nope")]) == 2


# ---------------------------------------------------------------------------
# error paths


def test_missing_config_file(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "gone.toml")]) == 2


def test_broken_toml(tmp_path):
    cfg = write_config(tmp_path, "[model\n")
    assert main(["analyze", "--config", cfg]) == 2


def test_unknown_config_key(tmp_path):
    cfg = write_config(tmp_path, LOGNORMAL + "\n[run]\npool_sze = 100\n")
    assert main(["analyze", "--config", cfg]) == 2


def test_undersized_pool_flag(tmp_path):
    cfg = write_config(tmp_path, LOGNORMAL + SMALL_RUN)
    assert main(["simulate", "--config", cfg, "--pool-size", "50"]) == 2


def test_unstartable_model_is_config_error(tmp_path):
    # mean-one weight sums plus a unit shift admit no constant start
    cfg = write_config(
        tmp_path,
        """
[model.n]
family = "fixed"
count = 2

[model.t]
family = "point"
magnitude = 0.5

[model.q]
family = "point"
value = 1.0

[run]
pool_size = 500
max_generations = 5
""",
    )
    assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 2


def test_divergent_model_exits_three(tmp_path):
    cfg = write_config(
        tmp_path,
        """
[model.n]
family = "fixed"
count = 2

[model.t]
family = "point"
magnitude = 2.0

[model.q]
family = "normal"
mean = 0.0
std = 1.0

[run]
pool_size = 500
max_generations = 2000
convergence_tol = 1e-12
""",
    )
    assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 3


def test_usage_error_exits_via_argparse():
    with pytest.raises(SystemExit):
        main([])
    with pytest.raises(SystemExit):
        main(["frobnicate", "--config", "x"])
