"""Command line front end.

Subcommands:

    analyze    moment roots, assumption checks, mean equation, degeneracy
    simulate   run the population iteration to convergence, save the pool
    tail       simulate plus tail analytics (Hill, K, identity, verdict)
    special    second-moment-boundary mixture solution and its verification
    verify     property suite on a model; nonzero exit when a check fails
    report     render a previous run directory as text

Exit codes: 0 success, 1 property-suite failure, 2 configuration error,
3 numeric divergence.
"""

from __future__ import annotations

import argparse
import csv
import os
import platform
import sys
import time
from typing import Optional

import numpy as np

from .config import (
    RunConfig,
    config_to_dict,
    dumps_toml,
    load_config,
    resolve_seed,
    resolve_threads,
)
from .engine import (
    SamplePool,
    detect_degeneracy,
    export_pool_csv,
    run_to_convergence,
    write_pool,
)
from .errors import (
    ConfigError,
    DivergenceError,
    InapplicableError,
    InvalidParameterError,
    MissingMeanError,
    ParseError,
    PreconditionFailedError,
    SmoothtailError,
    ValidationError,
)
from .moments import (
    check_assumptions,
    eval_m_derivative,
    moment_profile,
    solve_mean_equation,
)
from .reports import build_report, file_digest, read_report, write_report
from .special import (
    build_alpha2_solution,
    verify_alpha2_fixed_point,
)
from .tails import (
    KGridSpec,
    check_identity,
    draw_transform_sample,
    estimate_K,
    hill_curve,
    hill_estimate,
    positivity_verdict,
    subadditive_bound_check,
    tail_limit_scan,
    variance_identity_check,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothtail",
        description="analysis and simulation of smoothing-transform fixed points",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pool_flags=True):
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=lambda v: int(v, 0), default=None,
                       help="overrides SMOOTHTAIL_SEED and the config seed")
        p.add_argument("--out-dir", default=None, help="output directory")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       dest="out_format", help="also write csv tables")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (0 = one per cpu); results do not depend on it")
        if pool_flags:
            p.add_argument("--pool-size", type=int, default=None)
            p.add_argument("--generations", type=int, default=None,
                           help="generation cap for the iteration")

    p = sub.add_parser("analyze", help="moment analysis without simulation")
    common(p, pool_flags=False)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="iterate the transform on a sample pool")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tail", help="simulate and run the tail analytics")
    common(p)
    p.set_defaults(func=_cmd_tail)

    p = sub.add_parser("special", help="variance-mixture solution at the m(2)=1 boundary")
    common(p)
    p.set_defaults(func=_cmd_special)

    p = sub.add_parser("verify", help="property suite; exit 1 on any failure")
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("report", help="render a run directory as text")
    p.add_argument("--out-dir", required=True, help="directory holding report.json")
    p.set_defaults(func=_cmd_report)

    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    seed, source = resolve_seed(args.seed, cfg)
    cfg.seed = seed
    cfg.seed_source = source
    if getattr(args, "pool_size", None) is not None:
        if args.pool_size < 100:
            raise ValidationError("--pool-size must be >= 100")
        cfg.pool_size = args.pool_size
    if getattr(args, "generations", None) is not None:
        if args.generations < 1:
            raise ValidationError("--generations must be >= 1")
        cfg.max_generations = args.generations
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    if args.out_format is not None:
        cfg.out_format = args.out_format
    if args.threads is not None:
        if args.threads < 0:
            raise ValidationError("--threads must be >= 0")
        cfg.threads = args.threads
    return cfg


def _payload_config(cfg: RunConfig) -> dict:
    # threads change scheduling and the output section changes file
    # destinations; neither affects any computed number, so both stay out
    # of the hashed payload and reruns compare equal across them
    out = config_to_dict(cfg)
    out["run"].pop("threads", None)
    out.pop("output", None)
    return out


def _meta(cfg: RunConfig, started: float) -> dict:
    return {
        "seed_source": cfg.seed_source,
        "threads": cfg.threads,
        "duration_s": round(time.monotonic() - started, 3),
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def _pool_summary(pool: SamplePool) -> dict:
    v = pool.values
    q = np.quantile(v, [0.01, 0.5, 0.99])
    return {
        "size": pool.size,
        "generation": pool.generation,
        "mean": float(v.mean()),
        "sd": pool.sd(),
        "min": float(v.min()),
        "max": float(v.max()),
        "q01": float(q[0]),
        "median": float(q[1]),
        "q99": float(q[2]),
    }


def _grid_spec(cfg: RunConfig) -> KGridSpec:
    return KGridSpec(
        points=cfg.grid_points,
        lower_quantile=cfg.lower_quantile,
        bootstrap=cfg.bootstrap,
        extrapolate=cfg.extrapolate,
    )


def _identity_points(cfg: RunConfig, profile) -> list:
    if cfg.identity_s:
        return [float(s) for s in cfg.identity_s]
    n = cfg.identity_points
    a, b = profile.alpha, profile.beta
    if a is not None and b is not None and b > a:
        pad = 0.1 * (b - a)
        # stay below ~2b/3: the moment estimator at s needs its own second
        # moment, which degrades as 2s approaches the tail index b
        top = min(b - pad, max(a + 2 * pad, 2.0 * b / 3.0))
        return [float(s) for s in np.linspace(a + pad, top, n)]
    return [float(s) for s in np.linspace(0.5, 1.5, n)]


def _gate_assumptions(cfg: RunConfig, profile) -> None:
    if not cfg.require_assumptions:
        return
    report = check_assumptions(cfg.model, profile=profile, seed=cfg.seed)
    bad = report.failures()
    if bad:
        lines = "; ".join(f"({c.id}) {c.name}: {c.evidence}" for c in bad)
        raise ConfigError(f"assumption checks failed: {lines}")


def _simulate_pool(cfg: RunConfig, profile):
    return run_to_convergence(
        cfg.model,
        size=cfg.pool_size,
        tol=cfg.convergence_tol,
        max_generations=cfg.max_generations,
        seed=cfg.seed,
        profile=profile,
        threads=resolve_threads(cfg.threads),
    )


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _finish(cfg: RunConfig, payload: dict, started: float, artifacts: dict) -> None:
    os.makedirs(cfg.out_dir, exist_ok=True)
    if artifacts:
        payload["artifacts"] = {
            name: file_digest(os.path.join(cfg.out_dir, name)) for name in sorted(artifacts)
        }
    report = build_report(payload, meta=_meta(cfg, started))
    write_report(os.path.join(cfg.out_dir, "report.json"), report)
    print(f"wrote {os.path.join(cfg.out_dir, 'report.json')}")
    print(f"payload sha256 {report['payload_sha256']}")


def _archive_config(cfg: RunConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "config.toml")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_toml(_payload_config(cfg)))
    return {"config.toml": path}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_analyze(args) -> int:
    started = time.monotonic()
    cfg = _load(args)
    profile = moment_profile(cfg.model, gamma_k=cfg.gamma_k, seed=cfg.seed)
    assumptions = check_assumptions(cfg.model, profile=profile, seed=cfg.seed)
    mean = solve_mean_equation(cfg.model)
    degeneracy = detect_degeneracy(
        cfg.model,
        tol=cfg.degeneracy_tol,
        seed=cfg.seed,
    )
    payload = {
        "command": "analyze",
        "config": _payload_config(cfg),
        "profile": profile,
        "assumptions": assumptions.checks,
        "mean_solution": mean,
        "degeneracy": degeneracy,
    }
    artifacts = _archive_config(cfg)
    if cfg.out_format == "csv":
        path = os.path.join(cfg.out_dir, "assumptions.csv")
        _write_csv(
            path,
            ["id", "name", "verdict", "evidence"],
            [(c.id, c.name, c.verdict, c.evidence) for c in assumptions.checks],
        )
        artifacts["assumptions.csv"] = path
    _finish(cfg, payload, started, artifacts)
    for check in assumptions.checks:
        print(f"  ({check.id}) {check.name}: {check.verdict}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    started = time.monotonic()
    cfg = _load(args)
    profile = moment_profile(cfg.model, gamma_k=cfg.gamma_k, seed=cfg.seed)
    _gate_assumptions(cfg, profile)
    pool, diags = _simulate_pool(cfg, profile)
    artifacts = _archive_config(cfg)
    pool_path = os.path.join(cfg.out_dir, "pool.bin")
    write_pool(pool, pool_path)
    artifacts["pool.bin"] = pool_path
    if cfg.out_format == "csv":
        csv_path = os.path.join(cfg.out_dir, "pool.csv")
        export_pool_csv(pool, csv_path)
        artifacts["pool.csv"] = csv_path
    payload = {
        "command": "simulate",
        "config": _payload_config(cfg),
        "pool": _pool_summary(pool),
        "convergence": diags,
    }
    _finish(cfg, payload, started, artifacts)
    print(
        f"  pool of {pool.size} after {diags.generations} generations "
        f"({diags.stop_reason}), mean {pool.mean():.6g}, sd {pool.sd():.6g}"
    )
    return EXIT_OK


def _cmd_tail(args) -> int:
    started = time.monotonic()
    cfg = _load(args)
    model = cfg.model
    profile = moment_profile(model, gamma_k=cfg.gamma_k, seed=cfg.seed)
    _gate_assumptions(cfg, profile)
    pool, diags = _simulate_pool(cfg, profile)
    threads = resolve_threads(cfg.threads)
    degeneracy = detect_degeneracy(model, tol=cfg.degeneracy_tol, seed=cfg.seed)

    sample = draw_transform_sample(model, pool, seed=cfg.seed, threads=threads)
    grid = _grid_spec(cfg)
    points = _identity_points(cfg, profile)
    identity = check_identity(
        model, pool, points, grid_spec=grid, seed=cfg.seed, threads=threads
    )

    hill = None
    curve = None
    try:
        hill = hill_estimate(pool, k=cfg.hill_k)
        curve = hill_curve(pool)
    except SmoothtailError as exc:
        hill_note = str(exc)
    else:
        hill_note = None

    beta = profile.tail_exponent
    scan = None
    k_at_beta = None
    crosscheck = None
    if beta is not None and hill is not None:
        try:
            scan = tail_limit_scan(pool, beta, window=cfg.scan_window)
        except SmoothtailError as exc:
            scan = None
            hill_note = (hill_note + "; " if hill_note else "") + str(exc)
        k_at_beta = estimate_K(
            model, pool, beta, grid_spec=grid, sample=sample, seed=cfg.seed, threads=threads
        )
        if scan is not None:
            mprime = eval_m_derivative(model, beta, seed=cfg.seed)
            predicted = scan.plateau * mprime.value
            gap = abs(predicted - k_at_beta.value)
            band = 3.0 * float(
                np.hypot(
                    np.hypot(
                        mprime.value * (scan.ci_hi - scan.ci_lo) / 2.0,
                        scan.plateau * mprime.stderr,
                    ),
                    (k_at_beta.ci_hi - k_at_beta.ci_lo) / 2.0,
                )
            )
            crosscheck = {
                "plateau_times_mprime": predicted,
                "k_at_beta": k_at_beta.value,
                "gap": gap,
                "band": band,
                "consistent": gap <= band,
            }

    verdict = positivity_verdict(
        model, profile, degeneracy, k_estimate=k_at_beta, scan=scan
    )

    artifacts = _archive_config(cfg)
    pool_path = os.path.join(cfg.out_dir, "pool.bin")
    write_pool(pool, pool_path)
    artifacts["pool.bin"] = pool_path
    if cfg.out_format == "csv":
        path = os.path.join(cfg.out_dir, "identity.csv")
        _write_csv(
            path,
            ["s", "k_hat", "k_stderr", "m_value", "g_hat", "residual", "band", "passed"],
            [
                (r.s, r.k_hat, r.k_stderr, r.m_value, r.g_hat, r.residual, r.band, r.passed)
                for r in identity.rows
            ],
        )
        artifacts["identity.csv"] = path
        if curve is not None:
            path = os.path.join(cfg.out_dir, "hill_curve.csv")
            _write_csv(
                path,
                ["k", "beta", "stderr"],
                [(h.k, h.beta, h.stderr) for h in curve],
            )
            artifacts["hill_curve.csv"] = path

    payload = {
        "command": "tail",
        "config": _payload_config(cfg),
        "pool": _pool_summary(pool),
        "convergence": diags,
        "degeneracy": degeneracy,
        "profile": profile,
        "identity": identity,
        "hill": hill,
        "hill_note": hill_note,
        "tail_scan": scan,
        "k_at_tail_exponent": k_at_beta,
        "plateau_crosscheck": crosscheck,
        "verdict": verdict,
    }
    _finish(cfg, payload, started, artifacts)
    print(f"  verdict: {verdict.kind}")
    if hill is not None:
        print(f"  hill beta {hill.beta:.4f} +- {hill.stderr:.4f} at k={hill.k}")
    ok = identity.all_pass and (crosscheck is None or crosscheck["consistent"])
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_special(args) -> int:
    started = time.monotonic()
    cfg = _load(args)
    profile = moment_profile(cfg.model, gamma_k=cfg.gamma_k, seed=cfg.seed)
    _gate_assumptions(cfg, profile)
    mix = build_alpha2_solution(
        cfg.model,
        scale=cfg.special_scale,
        size=cfg.pool_size,
        max_generations=cfg.max_generations,
        seed=cfg.seed,
        threads=resolve_threads(cfg.threads),
    )
    rows = verify_alpha2_fixed_point(
        cfg.model,
        mix,
        t_values=cfg.special_t,
        count=cfg.special_count,
        seed=cfg.seed,
    )
    all_pass = all(row.passed for row in rows)
    artifacts = _archive_config(cfg)
    w_path = os.path.join(cfg.out_dir, "w_pool.bin")
    write_pool(mix.w_pool, w_path)
    artifacts["w_pool.bin"] = w_path
    if cfg.out_format == "csv":
        path = os.path.join(cfg.out_dir, "charfn.csv")
        _write_csv(
            path,
            [
                "t",
                "mixture_real",
                "mixture_imag",
                "transformed_real",
                "transformed_imag",
                "real_gap",
                "imag_gap",
                "passed",
            ],
            [
                (
                    r.t,
                    r.mixture_real,
                    r.mixture_imag,
                    r.transformed_real,
                    r.transformed_imag,
                    r.real_gap,
                    r.imag_gap,
                    r.passed,
                )
                for r in rows
            ],
        )
        artifacts["charfn.csv"] = path
    payload = {
        "command": "special",
        "config": _payload_config(cfg),
        "mixture": {"r": mix.r, "scale": mix.scale},
        "w_pool": _pool_summary(mix.w_pool),
        "fixed_point_rows": rows,
        "all_pass": all_pass,
    }
    _finish(cfg, payload, started, artifacts)
    for row in rows:
        mark = "ok" if row.passed else "FAIL"
        print(
            f"  t={row.t:g}: mixture {row.mixture_real:+.5f}{row.mixture_imag:+.5f}i "
            f"vs transformed {row.transformed_real:+.5f}{row.transformed_imag:+.5f}i [{mark}]"
        )
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def _cmd_verify(args) -> int:
    started = time.monotonic()
    cfg = _load(args)
    model = cfg.model
    profile = moment_profile(model, gamma_k=cfg.gamma_k, seed=cfg.seed)
    _gate_assumptions(cfg, profile)
    threads = resolve_threads(cfg.threads)
    checks = []

    try:
        pool, diags = _simulate_pool(cfg, profile)
    except MissingMeanError as exc:
        raise ConfigError(str(exc)) from exc

    degeneracy = detect_degeneracy(model, tol=cfg.degeneracy_tol, seed=cfg.seed)
    if degeneracy.degenerate:
        sd_ok = pool.sd() <= 1e-9 * max(1.0, abs(degeneracy.r or 0.0))
        checks.append(
            {
                "name": "degenerate_pool_collapses",
                "passed": bool(sd_ok),
                "detail": {"pool_sd": pool.sd(), "r": degeneracy.r},
            }
        )

    checks.append(
        {
            "name": "mean_preservation",
            "passed": len(diags.mean_violations) == 0,
            "detail": {
                "violations": diags.mean_violations,
                "generations": diags.generations,
            },
        }
    )

    points = _identity_points(cfg, profile)
    identity = check_identity(
        model, pool, points, grid_spec=_grid_spec(cfg), seed=cfg.seed, threads=threads
    )
    checks.append(
        {
            "name": "tail_identity",
            "passed": identity.all_pass,
            "detail": identity,
        }
    )

    try:
        variance = variance_identity_check(model, pool, seed=cfg.seed)
        checks.append(
            {
                "name": "variance_identity",
                "passed": variance.passed,
                "detail": variance,
            }
        )
    except (InapplicableError, MissingMeanError) as exc:
        checks.append(
            {
                "name": "variance_identity",
                "passed": True,
                "detail": {"skipped": str(exc)},
            }
        )

    sub_points = []
    if profile.alpha is not None and profile.alpha + 0.05 <= 1.0:
        sub_points.append(profile.alpha + 0.05)
    beta = profile.tail_exponent
    sub_points.append(0.9 * min(1.0, beta) if beta is not None else 0.5)
    # a zero tail exponent (root pinned at the origin) leaves no legal
    # exponent in (0, 1]; the bound is vacuous there
    for s in sorted(set(round(s, 12) for s in sub_points if s > 0.0)):
        bound = subadditive_bound_check(
            model, pool, s, seed=cfg.seed, threads=threads
        )
        checks.append(
            {
                "name": f"subadditive_bound_s_{s:g}",
                "passed": bound.satisfied,
                "detail": bound,
            }
        )

    all_pass = all(c["passed"] for c in checks)
    artifacts = _archive_config(cfg)
    if cfg.out_format == "csv":
        path = os.path.join(cfg.out_dir, "checks.csv")
        _write_csv(
            path,
            ["name", "passed"],
            [(c["name"], c["passed"]) for c in checks],
        )
        artifacts["checks.csv"] = path
    payload = {
        "command": "verify",
        "config": _payload_config(cfg),
        "checks": checks,
        "all_pass": all_pass,
    }
    _finish(cfg, payload, started, artifacts)
    for check in checks:
        print(f"  {check['name']}: {'pass' if check['passed'] else 'FAIL'}")
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def _cmd_report(args) -> int:
    path = os.path.join(args.out_dir, "report.json")
    if not os.path.exists(path):
        raise ConfigError(f"no report.json under {args.out_dir!r}")
    report = read_report(path)
    payload = report.get("payload", {})
    print(f"smoothtail report (schema {report.get('schema')}, version {report.get('version')})")
    print(f"command: {payload.get('command')}")
    run = payload.get("config", {}).get("run", {})
    if run:
        print(f"seed: {run.get('seed')}  pool size: {run.get('pool_size')}")
    pool = payload.get("pool")
    if pool:
        print(
            f"pool: n={pool['size']} gen={pool['generation']} "
            f"mean={pool['mean']:.6g} sd={pool['sd']:.6g}"
        )
    profile = payload.get("profile")
    if profile:
        print(f"roots: alpha={profile.get('alpha')} beta={profile.get('beta')}")
        print(f"gamma: {profile.get('gamma')}")
    for check in payload.get("assumptions", []) or []:
        print(f"  ({check['id']}) {check['name']}: {check['verdict']}")
    for check in payload.get("checks", []) or []:
        print(f"  {check['name']}: {'pass' if check['passed'] else 'FAIL'}")
    verdict = payload.get("verdict")
    if verdict:
        print(f"verdict: {verdict.get('kind')}")
    hill = payload.get("hill")
    if hill:
        print(f"hill beta: {hill['beta']:.6g} +- {hill['stderr']:.3g} (k={hill['k']})")
    print(f"payload sha256: {report.get('payload_sha256')}")
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        ParseError,
        ValidationError,
        ConfigError,
        InvalidParameterError,
        PreconditionFailedError,
        MissingMeanError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: iteration diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
