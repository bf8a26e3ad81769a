"""Command-line surface: solvers, oracle, sweep, learner, check batteries.

All machine output is versioned JSON (or CSV for bulk data) written to
--out or stdout; human summaries go to stderr.  Exit codes: 0 success, 1
check-battery failure, 2 bad input, 3 constraint infeasibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .adversary_oracle import (AdversaryInfeasible, NoFeasiblePoint, OracleError,
                               best_response, brute_force_best_response,
                               property_abc_transfer_check)
from .continuous_scc import (GridSpec, SccConfig, SccError, SccModel,
                             SoftClassifier, reject_many, train_scc)
from .core_model import GameSpec, ModelError, RejectionFunction, make_pmf
from .discrete_game import pair_root, partition_level_sets, solve_dual, \
    solve_hard_ldrs, solve_soft
from .divergence import DivergenceError, DivergenceKind, evaluate, \
    point_mass_divergence
from .experiments import SweepConfig, raw_csv, run_sweep, summary_csv

SPEC_FORMAT = "advscc.spec/1"
RESULT_FORMAT = "advscc.result/1"
REJECTOR_FORMAT = "advscc.rejector/1"
MODEL_FORMAT = "advscc.model/1"
EVAL_FORMAT = "advscc.eval/1"
CHECK_FORMAT = "advscc.check/1"
ORACLE_FORMAT = "advscc.oracle/1"


class CliError(Exception):
    """Bad invocation or unreadable input; carries the exit code."""

    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str, expected_format: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise CliError(f"{path}: expected a JSON object")
    got = data.get("format")
    if got != expected_format:
        raise CliError(f"{path}: format {got!r}, expected {expected_format!r}")
    return data


def _read_spec(path: str):
    data = _load_json(path, SPEC_FORMAT)
    try:
        p = make_pmf(data["p"])
        kind = DivergenceKind.parse(data["divergence"])
        spec = GameSpec(p=p, delta=float(data["delta"]),
                        lam=float(data["lambda"]), divergence=kind)
    except KeyError as exc:
        raise CliError(f"{path}: missing field {exc}")
    except (ModelError, DivergenceError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}")
    delta_q = data.get("delta_q")
    return spec, (None if delta_q is None else float(delta_q))


def _read_rejector(path: str, n: int) -> RejectionFunction:
    data = _load_json(path, REJECTOR_FORMAT)
    try:
        rates = [float(v) for v in data["rates"]]
        kind = data.get("kind", "soft")
        return RejectionFunction(tuple(rates), kind=kind)
    except KeyError as exc:
        raise CliError(f"{path}: missing field {exc}")
    except (ModelError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}")


def _load_points(path: str) -> np.ndarray:
    """Numeric CSV (comma or whitespace), # comments, optional header row."""
    rows: list[list[float]] = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                parts = [t for t in text.replace(",", " ").split() if t]
                try:
                    rows.append([float(t) for t in parts])
                except ValueError:
                    if not rows and lineno <= 1:
                        continue  # header row
                    raise CliError(f"{path}:{lineno}: not numeric: {text!r}")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")
    if not rows:
        raise CliError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise CliError(f"{path}: ragged rows (expected {width} columns)")
    return np.asarray(rows, dtype=float)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ADVSCC_SEED")
    if env is None:
        raise CliError("--seed is required (or set ADVSCC_SEED)")
    try:
        return int(env)
    except ValueError:
        raise CliError(f"ADVSCC_SEED must be an integer, got {env!r}")


def _witness_pairs(q):
    if q is None:
        return None
    return [[i, v] for i, v in enumerate(q) if v != 0.0]


def _status_exit(status: str) -> int:
    return 3 if status == "adversary_infeasible" else 0


# -- solver subcommands ------------------------------------------------------

def _cmd_solve(args) -> int:
    spec, _ = _read_spec(args.spec)
    t0 = time.perf_counter()
    out = solve_soft(spec)
    dt = time.perf_counter() - t0
    payload = {
        "format": RESULT_FORMAT,
        "command": "solve",
        "status": out.status,
        "z": out.z,
        "type2": out.type2,
        "r_levels": list(out.r_levels),
        "r_events": list(out.r_events.rates),
        "witness": _witness_pairs(out.witness_q),
        "vulnerable": out.vulnerable,
        "version": __version__,
        "seed": None,
        "runtime_s": dt,
    }
    _emit(payload, args.out)
    _say(f"solve: status={out.status} z={out.z} "
         f"vulnerable={out.vulnerable} ({dt:.3f}s)")
    return _status_exit(out.status)


def _cmd_hard(args) -> int:
    spec, _ = _read_spec(args.spec)
    t0 = time.perf_counter()
    out = solve_hard_ldrs(spec)
    dt = time.perf_counter() - t0
    payload = {
        "format": RESULT_FORMAT,
        "command": "hard",
        "status": out.status,
        "value": out.value,
        "type2": None if out.value is None else 1.0 - out.value,
        "rejected_mass": out.rejected_mass,
        "r_events": list(out.r_events.rates),
        "witness": _witness_pairs(out.witness_q),
        "version": __version__,
        "seed": None,
        "runtime_s": dt,
    }
    _emit(payload, args.out)
    _say(f"hard: status={out.status} value={out.value} "
         f"rejected_mass={out.rejected_mass} ({dt:.3f}s)")
    return _status_exit(out.status)


def _cmd_dual(args) -> int:
    spec, file_dq = _read_spec(args.spec)
    delta_q = args.delta_q if args.delta_q is not None else file_dq
    if delta_q is None:
        raise CliError("dual needs delta_q (spec field or --delta-q)")
    t0 = time.perf_counter()
    try:
        out = solve_dual(spec.p, spec.lam, spec.divergence, delta_q)
    except ValueError as exc:
        raise CliError(str(exc))
    dt = time.perf_counter() - t0
    payload = {
        "format": RESULT_FORMAT,
        "command": "dual",
        "status": out.status,
        "z_i": out.z_i,
        "delta_q": delta_q,
        "r_levels": list(out.r_levels),
        "r_events": list(out.r_events.rates),
        "witness": _witness_pairs(out.witness_q),
        "vulnerable": out.vulnerable,
        "version": __version__,
        "seed": None,
        "runtime_s": dt,
    }
    _emit(payload, args.out)
    _say(f"dual: status={out.status} z_i={out.z_i} ({dt:.3f}s)")
    return _status_exit(out.status)


def _cmd_oracle(args) -> int:
    spec, _ = _read_spec(args.spec)
    r = _read_rejector(args.r, spec.p.n)
    t0 = time.perf_counter()
    try:
        if args.mode == "structured":
            resp = best_response(r, spec)
        else:
            resp = brute_force_best_response(r, spec, args.resolution)
    except (AdversaryInfeasible, NoFeasiblePoint) as exc:
        status = ("adversary_infeasible"
                  if isinstance(exc, AdversaryInfeasible)
                  else "no_feasible_point")
        _emit({"format": ORACLE_FORMAT, "command": "oracle",
               "mode": args.mode, "status": status, "value": None,
               "q": None, "version": __version__}, args.out)
        _say(f"oracle: status={status}")
        return 3
    except OracleError as exc:
        raise CliError(str(exc))
    except (ModelError, ValueError) as exc:
        raise CliError(str(exc))
    dt = time.perf_counter() - t0
    payload = {
        "format": ORACLE_FORMAT,
        "command": "oracle",
        "mode": resp.mode,
        "status": "ok",
        "value": resp.value,
        "q": _witness_pairs(resp.q),
        "version": __version__,
        "runtime_s": dt,
    }
    _emit(payload, args.out)
    _say(f"oracle: mode={resp.mode} value={resp.value} ({dt:.3f}s)")
    return 0


# -- sweep -------------------------------------------------------------------

def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise CliError(f"bad --lambda-grid: {text!r}")


def _cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    kwargs = dict(family=args.family, n_events=args.n_events,
                  delta=args.delta, reps=args.reps, seed=seed)
    if args.lambda_grid is not None:
        kwargs["lambda_grid"] = _parse_grid(args.lambda_grid)
    try:
        config = SweepConfig(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc))
    t0 = time.perf_counter()
    report = run_sweep(config, jobs=args.jobs)
    dt = time.perf_counter() - t0
    if args.out_raw:
        _write_text(raw_csv(report), args.out_raw)
    _write_text(summary_csv(report), args.out)
    _say(f"sweep: {len(report.rows)} instances over "
         f"{len(config.lambda_grid)} bound values, "
         f"{len(report.failures)} failures, seed={seed} ({dt:.1f}s)")
    for f in report.failures[:5]:
        _say(f"  failed lam={f.lam} rep={f.rep}: {f.message}")
    return 0


# -- continuous learner ------------------------------------------------------

def _model_payload(model: SccModel, seed: int) -> dict:
    clf = model.classifier
    return {
        "format": MODEL_FORMAT,
        "grid": {"origin": list(model.grid.origin),
                 "pitch": model.grid.pitch, "d": model.grid.d},
        "covered": sorted([int(v) for v in key] for key in model.covered),
        "classifier": {
            "centers": clf.centers.tolist(),
            "weights": clf.weights.tolist(),
            "intercept": clf.intercept,
            "bandwidth": clf.bandwidth,
            "loss_name": clf.loss_name,
            "iterations": clf.iterations,
            "final_loss": clf.final_loss,
        },
        "t_minus": model.t_minus,
        "t_plus": model.t_plus,
        "m": model.m,
        "sigma": model.sigma,
        "delta": model.delta,
        "delta_minus": model.delta_minus,
        "delta_plus": model.delta_plus,
        "theta": model.theta,
        "inclusive": model.inclusive,
        "notes": list(model.notes),
        "version": __version__,
        "seed": seed,
    }


def _model_from_payload(data: dict, path: str) -> SccModel:
    try:
        g = data["grid"]
        grid = GridSpec(origin=tuple(float(v) for v in g["origin"]),
                        pitch=float(g["pitch"]), d=int(g["d"]))
        covered = frozenset(tuple(int(v) for v in key)
                            for key in data["covered"])
        c = data["classifier"]
        clf = SoftClassifier(
            centers=np.asarray(c["centers"], dtype=float),
            weights=np.asarray(c["weights"], dtype=float),
            intercept=float(c["intercept"]),
            bandwidth=float(c["bandwidth"]),
            loss_name=str(c["loss_name"]),
            iterations=int(c["iterations"]),
            final_loss=float(c["final_loss"]),
        )
        return SccModel(
            grid=grid, covered=covered, classifier=clf,
            t_minus=float(data["t_minus"]), t_plus=float(data["t_plus"]),
            m=float(data["m"]), sigma=float(data["sigma"]),
            delta=float(data["delta"]),
            delta_minus=float(data["delta_minus"]),
            delta_plus=float(data["delta_plus"]),
            theta=float(data["theta"]), inclusive=bool(data["inclusive"]),
            notes=tuple(str(s) for s in data.get("notes", ())),
        )
    except KeyError as exc:
        raise CliError(f"{path}: missing field {exc}")
    except (TypeError, ValueError, SccError) as exc:
        raise CliError(f"{path}: {exc}")


def _cmd_scc_train(args) -> int:
    seed = _resolve_seed(args)
    sample = _load_points(args.data)
    overrides = {}
    if args.pitch is not None:
        overrides["pitch"] = args.pitch
    if args.min_count is not None:
        overrides["min_count"] = args.min_count
    if args.theta_scale is not None:
        overrides["theta_scale"] = args.theta_scale
    if args.negbinom:
        overrides["negbinom"] = True
    if args.val_split:
        overrides["use_validation_split"] = True
    if args.n_centers is not None:
        overrides["n_centers"] = args.n_centers or None
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    if args.bandwidth is not None:
        overrides["bandwidth"] = args.bandwidth
    try:
        config = SccConfig(**overrides)
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc))
    t0 = time.perf_counter()
    try:
        model = train_scc(sample, args.delta, config=config, rng=seed)
    except SccError as exc:
        raise CliError(str(exc))
    dt = time.perf_counter() - t0
    _emit(_model_payload(model, seed), args.out)
    _say(f"scc-train: n={sample.shape[0]} d={sample.shape[1]} "
         f"cells={len(model.covered)} t_minus={model.t_minus:.6g} "
         f"seed={seed} ({dt:.1f}s)")
    return 0


def _cmd_scc_eval(args) -> int:
    model = _model_from_payload(_load_json(args.model, MODEL_FORMAT),
                                args.model)
    points = _load_points(args.data)
    try:
        decisions = reject_many(model, points)
    except SccError as exc:
        raise CliError(str(exc))
    n = int(points.shape[0])
    rejected = int(np.count_nonzero(decisions))
    payload = {
        "format": EVAL_FORMAT,
        "n": n,
        "n_rejected": rejected,
        "reject_fraction": rejected / n,
        "version": __version__,
    }
    if args.decisions:
        lines = ["# advscc.decisions/1"]
        lines += ["1" if d else "0" for d in decisions]
        _write_text("\n".join(lines) + "\n", args.decisions)
    _emit(payload, args.out)
    _say(f"scc-eval: rejected {rejected}/{n} "
         f"({100.0 * rejected / n:.2f}%)")
    return 0


# -- check batteries ---------------------------------------------------------

def _battery_transfers(rng: np.random.Generator, trials: int) -> dict:
    checked = passed = 0
    details = []
    for name in ("kl2", "sqeuclid"):
        kind = DivergenceKind.parse(name)
        for _ in range(2):
            p = make_pmf(rng.dirichlet(np.ones(6)))
            cap = max(point_mass_divergence(kind, j, p) for j in range(p.n))
            spec = GameSpec(p=p, delta=0.1, lam=0.3 * cap, divergence=kind)
            rep = property_abc_transfer_check(
                p, spec, trials=trials, seed=int(rng.integers(2 ** 32)))
            n_checked = rep.a_checked + rep.b_checked + rep.c_checked
            n_passed = rep.a_passed + rep.b_passed + rep.c_passed
            checked += n_checked
            passed += n_passed
            details.extend(rep.failures[:3])
    return {"name": "transfer_properties", "checked": checked,
            "passed": passed, "ok": checked == passed and checked > 0,
            "failures": details[:10]}


def _battery_pair_roots(rng: np.random.Generator, trials: int) -> dict:
    checked = passed = 0
    failures = []
    for _ in range(trials):
        name = "kl2" if rng.random() < 0.5 else "sqeuclid"
        kind = DivergenceKind.parse(name)
        n = int(rng.integers(3, 7))
        p = make_pmf(rng.dirichlet(np.ones(n) * 3.0))
        part = partition_level_sets(p)
        if part.K < 2:
            continue
        div_lo = point_mass_divergence(kind, part.sets[-1].members[0], p)
        div_hi = point_mass_divergence(kind, part.sets[0].members[0], p)
        if div_hi <= div_lo + 1e-9:
            continue
        lam = div_lo + (0.2 + 0.6 * rng.random()) * (div_hi - div_lo)
        checked += 1
        try:
            q = pair_root(0, part.K - 1, kind, lam, p, part)
        except Exception as exc:
            if len(failures) < 10:
                failures.append(f"root search failed: {exc}")
            continue
        l_rep = part.sets[0].members[0]
        h_rep = part.sets[-1].members[0]
        mix = [0.0] * p.n
        mix[l_rep] = q
        mix[h_rep] = 1.0 - q
        if abs(evaluate(kind, mix, p) - lam) <= 1e-10:
            passed += 1
        elif len(failures) < 10:
            failures.append(f"root off bound: q={q!r} lam={lam!r}")
    return {"name": "pair_roots", "checked": checked, "passed": passed,
            "ok": checked == passed and checked > 0, "failures": failures}


def _battery_point_mass(rng: np.random.Generator, trials: int) -> dict:
    checked = passed = 0
    failures = []
    for _ in range(trials):
        name = "kl2" if rng.random() < 0.5 else "sqeuclid"
        kind = DivergenceKind.parse(name)
        n = int(rng.integers(2, 8))
        p = make_pmf(rng.dirichlet(np.ones(n)))
        j = int(rng.integers(n))
        onehot = [0.0] * n
        onehot[j] = 1.0
        checked += 1
        closed = point_mass_divergence(kind, j, p)
        direct = evaluate(kind, onehot, p)
        if abs(closed - direct) <= 1e-12 * max(1.0, abs(closed)):
            passed += 1
        elif len(failures) < 10:
            failures.append(f"point mass mismatch: {closed!r} vs {direct!r}")
    return {"name": "point_mass_forms", "checked": checked, "passed": passed,
            "ok": checked == passed and checked > 0, "failures": failures}


def _cmd_check(args) -> int:
    seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    batteries = [
        _battery_transfers(rng, args.trials),
        _battery_pair_roots(rng, args.trials),
        _battery_point_mass(rng, args.trials),
    ]
    dt = time.perf_counter() - t0
    ok = all(b["ok"] for b in batteries)
    payload = {"format": CHECK_FORMAT, "passed": ok, "seed": seed,
               "batteries": batteries, "version": __version__,
               "runtime_s": dt}
    _emit(payload, args.out)
    for b in batteries:
        _say(f"check[{b['name']}]: {b['passed']}/{b['checked']} "
             f"{'ok' if b['ok'] else 'FAILED'}")
    return 0 if ok else 1


# -- parser ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advscc",
        description="Rejection strategies against divergence-bounded "
                    "adversaries, and the continuous one-class learner.")
    parser.add_argument("--version", action="version",
                        version=f"advscc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("solve", help="randomized-strategy game")
    p.add_argument("--spec", required=True)
    add_out(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("hard", help="deterministic low-density prefix")
    p.add_argument("--spec", required=True)
    add_out(p)
    p.set_defaults(func=_cmd_hard)

    p = sub.add_parser("dual", help="reverse game: cap type II")
    p.add_argument("--spec", required=True)
    p.add_argument("--delta-q", type=float, default=None)
    add_out(p)
    p.set_defaults(func=_cmd_dual)

    p = sub.add_parser("oracle", help="adversary best response")
    p.add_argument("--spec", required=True)
    p.add_argument("--r", required=True, help="rejector JSON")
    p.add_argument("--mode", choices=("structured", "brute"),
                   default="structured")
    p.add_argument("--resolution", type=int, default=1000)
    add_out(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("sweep", help="error curves over the bound grid")
    p.add_argument("--family", choices=("arbitrary", "gaussian"),
                   default="arbitrary")
    p.add_argument("--n-events", type=int, default=50)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--lambda-grid", default=None,
                   help="comma-separated bound values")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-raw", default=None,
                   help="also write per-instance CSV here")
    p.add_argument("--out", default=None, help="summary CSV (else stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("scc-train", help="fit the continuous rejector")
    p.add_argument("--data", required=True, help="points CSV")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pitch", type=float, default=None)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--theta-scale", type=float, default=None)
    p.add_argument("--negbinom", action="store_true")
    p.add_argument("--val-split", action="store_true")
    p.add_argument("--n-centers", type=int, default=None,
                   help="0 means use every training point")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    add_out(p)
    p.set_defaults(func=_cmd_scc_train)

    p = sub.add_parser("scc-eval", help="apply a trained rejector")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--decisions", default=None,
                   help="write per-point 0/1 decisions here")
    add_out(p)
    p.set_defaults(func=_cmd_scc_eval)

    p = sub.add_parser("check", help="randomized property batteries")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=300)
    add_out(p)
    p.set_defaults(func=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help/--version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        _say(f"error: {exc}")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
