"""Command-line driver.

    mdm active-set --beta B --eps E [--s 1000 --t 0.5 --alpha-grid 100] [--out PATH] [--dump PATH]
    mdm run --method M --beta B --eps E [--shifts R --seed S --threads N] [--out PATH] [--csv PATH]
    mdm reference --beta B --m M --dims D --shifts R [--seed S]

Exit codes: 0 success, 2 invalid input, 3 numeric or capacity failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from mdm.active_set import ActiveSet, CapacityError, build_active_set
from mdm.coeff_tables import build_combination_tables, build_qmc_tables, build_smolyak_tables
from mdm.engines import (
    prepare_naive,
    prepare_qmc,
    prepare_smolyak,
    rqmc_std_error,
    run_naive,
    run_qmc,
    run_rqmc,
    run_smolyak_combination,
    run_smolyak_direct,
)
from mdm.integrands import NormModel, TestIntegrand, point_budget, qmc_levels, smolyak_levels
from mdm.lattice import LatticeSequence, apply_shift, random_shifts, tent_translate
from mdm.quad1d import TrapezoidalFamily
from mdm.tolerance import ToleranceParams, ToleranceResult, compute_tolerance

SCHEMA = 1
REFERENCE_BETA3 = 1.1011984577041
METHODS = ("qmc", "rqmc", "smolyak-direct", "smolyak-ct",
           "naive-qmc", "naive-smolyak-direct", "naive-smolyak-ct")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3

CSV_FIELDS = ("schema", "method", "beta", "epsilon", "T", "estimate", "reference", "total_error",
              "std_error", "eval_count", "t_act", "t_ext", "t_run", "shifts", "seed")


class ValidationError(ValueError):
    """Invalid user input (exit code 2)."""


@dataclass(frozen=True)
class RunSpec:
    beta: float
    epsilon: float
    method: str = "smolyak-direct"
    shifts: int = 16
    seed: int = 0
    s: int = 1000
    t: float = 0.5
    alpha_grid: int = 100
    threads: int = 1
    reference: Optional[float] = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if not (math.isfinite(self.beta) and self.beta > 1):
            raise ValidationError("beta must be > 1")
        if not (math.isfinite(self.epsilon) and 0 < self.epsilon < 1):
            raise ValidationError("eps must lie in (0, 1)")
        if self.method == "rqmc" and self.shifts < 2:
            raise ValidationError("rqmc needs at least 2 shifts")
        if self.shifts < 1 or self.threads < 1 or self.seed < 0:
            raise ValidationError("shifts and threads must be >= 1, seed >= 0")
        try:
            ToleranceParams(self.epsilon, self.s, self.t, self.alpha_grid)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        try:
            NormModel(self.beta)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None

    def tolerance_params(self) -> ToleranceParams:
        return ToleranceParams(self.epsilon, self.s, self.t, self.alpha_grid)


# -- pipeline -------------------------------------------------------------------


def build_active(beta: float, tp: ToleranceParams) -> tuple[ToleranceResult, ActiveSet]:
    pod = NormModel(beta).pod_weights()
    tol = compute_tolerance(pod, tp)
    return tol, build_active_set(pod, tol.T)


def active_set_row(beta: float, tol: ToleranceResult, active: ActiveSet, t_act: float) -> Dict:
    return {
        "schema": SCHEMA,
        "beta": beta,
        "epsilon": tol.epsilon,
        "T": tol.T,
        "alpha_star": tol.alpha_star,
        "d_sup": active.d_sup,
        "tau_star": active.tau_star,
        "counts": active.counts,
        "total": len(active) - 1,
        "t_act": t_act,
    }


def cmd_active_set(beta: float, tp: ToleranceParams, dump: Optional[Path] = None) -> Dict:
    t0 = time.perf_counter()
    tol, active = build_active(beta, tp)
    row = active_set_row(beta, tol, active, time.perf_counter() - t0)
    if dump is not None:
        with open(dump, "w") as fh:
            active.write_jsonl(fh)
    return row


def cmd_run(spec: RunSpec) -> Dict:
    """Tolerance, active set, levels, tables, engine. Returns the JSON report."""
    t0 = time.perf_counter()
    tol, active = build_active(spec.beta, spec.tolerance_params())
    t_act = time.perf_counter() - t0

    nm = NormModel(spec.beta)
    f = TestIntegrand(spec.beta)
    budget = point_budget(nm, active, spec.epsilon)
    fam = TrapezoidalFamily()
    seq = LatticeSequence()
    shift = None
    if spec.method in ("qmc", "naive-qmc"):
        shift = random_shifts(1, max(active.tau_star, 1), spec.seed)[0]

    t0 = time.perf_counter()
    if spec.method.endswith("qmc"):
        levels = qmc_levels(active, budget, seq.m_cap)
    else:
        levels = smolyak_levels(active, budget, fam)
    tables = None
    if spec.method in ("qmc", "rqmc"):
        tables = build_qmc_tables(levels)
        prepare_qmc(tables)
    elif spec.method == "smolyak-direct":
        tables = build_smolyak_tables(levels)
        prepare_smolyak(tables, fam)
    elif spec.method == "smolyak-ct":
        tables = build_combination_tables(levels)
        prepare_smolyak(tables, fam, combination=True)
    else:
        prepare_naive(spec.method[len("naive-"):], levels, fam)
    t_ext = time.perf_counter() - t0

    if spec.method == "qmc":
        rep = run_qmc(tables, seq, f, shift=shift, threads=spec.threads)
        rep.method = "qmc"
    elif spec.method == "rqmc":
        rep = run_rqmc(tables, seq, f, spec.shifts, spec.seed, threads=spec.threads)
    elif spec.method == "smolyak-direct":
        rep = run_smolyak_direct(tables, fam, f, threads=spec.threads)
    elif spec.method == "smolyak-ct":
        rep = run_smolyak_combination(tables, fam, f, threads=spec.threads)
    else:
        variant = spec.method[len("naive-"):]
        rep = run_naive(variant, levels, f, fam=fam, seq=seq, shift=shift, threads=spec.threads)

    ref = spec.reference
    if ref is None:
        ref = REFERENCE_BETA3 if spec.beta == 3.0 else cmd_reference(spec.beta, 14, 600, 8, spec.seed)["estimate"]
    out = {
        "schema": SCHEMA,
        "method": spec.method,
        "beta": spec.beta,
        "epsilon": spec.epsilon,
        "T": tol.T,
        "d_sup": active.d_sup,
        "tau_star": active.tau_star,
        "m_max": levels.m_max,
        "estimate": rep.estimate,
        "reference": ref,
        "total_error": abs(rep.estimate - ref),
        "std_error": rep.std_error,
        "per_shift": rep.per_shift,
        "eval_count": rep.eval_count,
        "n_terms": rep.n_terms,
        "t_act": t_act,
        "t_ext": t_ext,
        "t_run": rep.wall_time,
        "shifts": spec.shifts if spec.method == "rqmc" else (1 if shift is not None else 0),
        "seed": spec.seed,
        "config": asdict(spec),
    }
    return out


def _reference_lattice(beta: float, m: int, dims: int, shifts: np.ndarray) -> List[float]:
    seq = LatticeSequence()
    scale = np.arange(1, dims + 1, dtype=float) ** -beta
    n = 1 << m
    step = max(1, (1 << 22) // dims)
    out = []
    for delta in shifts:
        acc = []
        for a in range(0, n, step):
            x = tent_translate(apply_shift(seq.points(np.arange(a, min(n, a + step)), dims), delta))
            acc.append(math.fsum((1.0 / (1.0 + x @ scale)).tolist()))
        out.append(math.fsum(acc) / n)
    return out


def _reference_sobol(beta: float, m: int, dims: int, shifts: int, seed: int) -> List[float]:
    from scipy.stats import qmc

    scale = np.arange(1, dims + 1, dtype=float) ** -beta
    n = 1 << m
    step = min(n, 1 << max(0, ((1 << 22) // dims).bit_length() - 1))
    out = []
    for q in range(shifts):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(q,))))
        eng = qmc.Sobol(dims, scramble=True, seed=rng)
        acc = []
        done = 0
        while done < n:
            k = min(step, n - done)
            x = eng.random(k) - 0.5
            acc.append(math.fsum((1.0 / (1.0 + x @ scale)).tolist()))
            done += k
        out.append(math.fsum(acc) / n)
    return out


def cmd_reference(beta: float, m: int, dims: int, shifts: int, seed: int = 0) -> Dict:
    """RQMC estimate of the integral of f restricted to its first ``dims`` variables.

    Up to 20 variables the tent-transformed lattice is used with random
    shifts; beyond that, scrambled Sobol' points with independent scramblings.
    """
    if not 0 <= m <= 25:
        raise ValidationError("m must lie in 0..25")
    if dims < 0 or shifts < 1:
        raise ValidationError("dims must be >= 0 and shifts >= 1")
    if not beta > 1:
        raise ValidationError("beta must be > 1")
    if dims == 0:
        return {"schema": SCHEMA, "beta": beta, "m": m, "dims": 0, "shifts": shifts,
                "estimate": 1.0, "std_error": 0.0, "per_shift": [1.0] * shifts, "points": "anchor"}
    if dims <= len(LatticeSequence().z):
        per = _reference_lattice(beta, m, dims, random_shifts(shifts, dims, seed))
        kind = "lattice"
    else:
        per = _reference_sobol(beta, m, dims, shifts, seed)
        kind = "sobol"
    return {"schema": SCHEMA, "beta": beta, "m": m, "dims": dims, "shifts": shifts,
            "estimate": math.fsum(per) / shifts, "std_error": rqmc_std_error(per),
            "per_shift": per, "points": kind}


# -- output ---------------------------------------------------------------------


def append_csv(path: Path, row: Dict) -> None:
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        if new:
            w.writeheader()
        w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in CSV_FIELDS})


def _emit(obj: Dict, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mdm", description="Multivariate decomposition method for infinite-variate integrals")
    sub = ap.add_subparsers(dest="cmd", required=True)

    a = sub.add_parser("active-set", help="build the active set and print its census")
    a.add_argument("--beta", type=float, required=True)
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--s", type=int, default=1000)
    a.add_argument("--t", type=float, default=0.5)
    a.add_argument("--alpha-grid", type=int, default=100)
    a.add_argument("--out")
    a.add_argument("--dump", help="write the active set as JSON lines")

    r = sub.add_parser("run", help="run one MDM engine end to end")
    r.add_argument("--method", required=True, choices=METHODS)
    r.add_argument("--beta", type=float, required=True)
    r.add_argument("--eps", type=float, required=True)
    r.add_argument("--shifts", type=int, default=16)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--s", type=int, default=1000)
    r.add_argument("--t", type=float, default=0.5)
    r.add_argument("--alpha-grid", type=int, default=100)
    r.add_argument("--reference", type=float)
    r.add_argument("--out")
    r.add_argument("--csv", help="append a summary row to this CSV file")

    f = sub.add_parser("reference", help="high-accuracy RQMC reference value")
    f.add_argument("--beta", type=float, required=True)
    f.add_argument("--m", type=int, required=True)
    f.add_argument("--dims", type=int, required=True)
    f.add_argument("--shifts", type=int, default=16)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "active-set":
            try:
                tp = ToleranceParams(args.eps, args.s, args.t, args.alpha_grid)
                NormModel(args.beta)
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
            _emit(cmd_active_set(args.beta, tp, Path(args.dump) if args.dump else None), args.out)
        elif args.cmd == "run":
            spec = RunSpec(beta=args.beta, epsilon=args.eps, method=args.method, shifts=args.shifts,
                           seed=args.seed, s=args.s, t=args.t, alpha_grid=args.alpha_grid,
                           threads=args.threads, reference=args.reference)
            rep = cmd_run(spec)
            _emit(rep, args.out)
            if args.csv:
                append_csv(Path(args.csv), rep)
        else:
            _emit(cmd_reference(args.beta, args.m, args.dims, args.shifts, args.seed), args.out)
    except ValidationError as exc:
        print(f"mdm: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CapacityError, ValueError, OverflowError, FloatingPointError, MemoryError) as exc:
        print(f"mdm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
