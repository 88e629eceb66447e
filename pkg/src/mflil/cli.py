"""Command-line entry point.

Every subcommand reads a model file, runs one module, and writes plain-text
artifacts into --out: CSV tables with 17-significant-digit scientific floats,
a JSON summary mirroring the CSV aggregates, and a manifest recording the
tool version, the full option set, the model-file digest, the master seed,
and the SHA-256 of every output. Re-running the same command over the same
model reproduces the output files byte for byte, for any --threads value;
only the manifest's timestamp differs.

Exit codes: 0 success; 2 validation (bad flags, malformed model files, domain
violations); 3 numerical failure (a cross-check disagreed); 4 budget
exceeded. Budgets can be widened via MFLIL_ENUM_BUDGET and MFLIL_PATH_BUDGET.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import os
import sys
from dataclasses import is_dataclass, asdict
from typing import Optional

import numpy as np

from .errors import BudgetError, MFLilError, NumericalError, ValidationError
from .gauges import GaugeSpec, gauge_test, lil_sigma, theta_correction
from .lil import run_ensemble
from .models import MeasureModel, SelfSimilarMeasure, parse_model_file
from .qb import dichotomy_classify, qb_constant
from .report import build_oracles, verify_records, write_oracle_cache
from .spectrum import ChiProfile, LogBase, dimension, spectrum_table
from .zoo import ZOO_NAMES, zoo_text

try:
    from importlib.metadata import version as _pkg_version

    __version__ = _pkg_version("mflil")
except Exception:  # pragma: no cover - metadata missing in odd environments
    __version__ = "0.0.0"


def _fmt(x: float) -> str:
    return f"{float(x):.16e}"


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _write_json(path: str, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for cell in row:
                if isinstance(cell, (int, np.integer)) and not isinstance(cell, bool):
                    cells.append(str(int(cell)))
                else:
                    cells.append(_fmt(cell))
            fh.write(",".join(cells) + "\n")


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(outdir, command, options: dict, model_path: Optional[str], seed, outputs) -> str:
    doc = {
        "tool": "mflil",
        "version": __version__,
        "command": command,
        "options": _jsonable(options),
        "model_digest": _digest(model_path) if model_path else None,
        "master_seed": seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": {os.path.basename(p): _digest(p) for p in outputs},
    }
    path = os.path.join(outdir, "manifest.json")
    _write_json(path, doc)
    return path


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _parse_checkpoints(text: str) -> list[int]:
    if text.startswith("pow2:"):
        try:
            _, lo, hi = text.split(":")
            lo_i, hi_i = int(lo), int(hi)
        except ValueError as exc:
            raise ValidationError(
                f"bad checkpoint range {text!r}; expected pow2:LO:HI"
            ) from exc
        if not 0 <= lo_i <= hi_i:
            raise ValidationError(f"bad checkpoint range {text!r}")
        return [2 ** k for k in range(lo_i, hi_i + 1)]
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ValidationError(
            f"bad checkpoint list {text!r}; expected comma-separated levels or pow2:LO:HI"
        ) from exc


def _model(args) -> MeasureModel:
    if not args.model:
        raise ValidationError("--model FILE is required")
    return parse_model_file(args.model)


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args) -> None:
    model = _model(args)
    outdir = _outdir(args)
    base = None if args.base == "auto" else LogBase.parse(args.base)
    table = spectrum_table(
        model,
        q_min=args.q_min,
        q_max=args.q_max,
        q_step=args.q_step,
        base=base,
        method=args.method,
        empirical_n=args.empirical_n,
    )
    csv_path = os.path.join(outdir, "spectrum.csv")
    _write_csv(csv_path, ["q", "tau"], list(zip(table.q, table.tau)))
    summary = {
        "base": table.base.value,
        "method": table.method,
        "d": table.d,
        "sigma2": table.sigma2,
        "sigma2_err": table.sigma2_err,
        "sigma2_flagged": table.sigma2_flagged,
        "delta": table.delta,
        "flat": table.flat,
        "q_min": args.q_min,
        "q_max": args.q_max,
        "q_step": args.q_step,
        "rows": len(table.q),
    }
    json_path = os.path.join(outdir, "summary.json")
    _write_json(json_path, summary)
    _write_manifest(
        outdir, "spectrum", vars(args) | {"func": None}, args.model, args.seed,
        [csv_path, json_path],
    )


def cmd_lil_sim(args) -> None:
    model = _model(args)
    outdir = _outdir(args)
    checkpoints = _parse_checkpoints(args.checkpoints)
    window = None
    if args.window:
        try:
            lo, hi = args.window.split(":")
            window = (int(lo), int(hi))
        except ValueError as exc:
            raise ValidationError(f"bad window {args.window!r}; expected LO:HI") from exc
    summary = run_ensemble(
        model,
        N=args.N,
        checkpoints=checkpoints,
        seed=args.seed,
        convention=args.convention,
        window=window,
        threads=args.threads,
    )
    csv_path = os.path.join(outdir, "lilsim.csv")
    rows = list(
        zip(
            summary.checkpoints,
            summary.ratio_mean,
            summary.ratio_min,
            summary.ratio_max,
            summary.ks_distance,
            summary.runsup_median,
        )
    )
    _write_csv(
        csv_path,
        ["n", "mean_ratio", "min_ratio", "max_ratio", "ks_distance", "runsup_median"],
        rows,
    )
    doc = {
        "convention": summary.convention,
        "N": summary.N,
        "seed": summary.seed,
        "d": summary.d,
        "sigma": summary.sigma,
        "window": list(summary.window),
        "checkpoints": list(summary.checkpoints),
        "ratio_mean": list(summary.ratio_mean),
        "ratio_var": list(summary.ratio_var),
        "ratio_min": list(summary.ratio_min),
        "ratio_max": list(summary.ratio_max),
        "ks_distance": list(summary.ks_distance),
        "mean_gap": list(summary.mean_gap),
        "runsup_median": list(summary.runsup_median),
        "ks_final": summary.ks_distance[-1],
        "window_sup_max": float(np.max(summary.path_window_sup)),
        "window_inf_min": float(np.min(summary.path_window_inf)),
    }
    json_path = os.path.join(outdir, "summary.json")
    _write_json(json_path, doc)
    _write_manifest(
        outdir, "lil-sim", vars(args) | {"func": None}, args.model, args.seed,
        [csv_path, json_path],
    )


def _build_gauge_spec(model: MeasureModel, args) -> GaugeSpec:
    d = dimension(model)
    conv = args.theta_convention
    if conv == "auto":
        if isinstance(model, SelfSimilarMeasure):
            conv = "natural"
        else:
            conv = "base-2" if model.alphabet.ell == 2 else "base-ell"
    if args.family in ("lil_hausdorff", "lil_packing"):
        ell = 2 if isinstance(model, SelfSimilarMeasure) else model.alphabet.ell
        return GaugeSpec(
            family=args.family,
            d=d,
            sigma=lil_sigma(model, conv),
            epsilon=args.epsilon,
            epsilon_sign=args.epsilon_sign,
            theta=theta_correction(conv, ell),
        )
    if isinstance(model, SelfSimilarMeasure):
        raise ValidationError(
            f"the {args.family} gauge family needs a grid scale; "
            "self-similar models support the lil families and power only"
        )
    if args.family == "power":
        return GaugeSpec(family="power", d=d)
    if args.family == "sqrt":
        return GaugeSpec(family="sqrt", d=d, a=args.a, ell=model.alphabet.ell)
    return GaugeSpec(
        family="theta",
        d=d,
        a=args.a,
        ell=model.alphabet.ell,
        chi_profile=ChiProfile(model, side=1, q_max=args.q_max),
    )


def cmd_gauge_test(args) -> None:
    model = _model(args)
    outdir = _outdir(args)
    spec = _build_gauge_spec(model, args)
    checkpoints = _parse_checkpoints(args.checkpoints)
    result = gauge_test(
        model, spec, checkpoints, N=args.N, seed=args.seed, threads=args.threads
    )
    csv_path = os.path.join(outdir, "gauge.csv")
    rows = list(zip(result.checkpoints, result.fractions, result.hit_by))
    _write_csv(csv_path, ["n", "fraction", "hit_ever_fraction"], rows)
    doc = {
        "spec": spec.describe(),
        "N": result.N,
        "seed": result.seed,
        "checkpoints": list(result.checkpoints),
        "fractions": list(result.fractions),
        "hit_by": list(result.hit_by),
        "hit_ever": result.hit_ever,
    }
    json_path = os.path.join(outdir, "summary.json")
    _write_json(json_path, doc)
    _write_manifest(
        outdir, "gauge-test", vars(args) | {"func": None}, args.model, args.seed,
        [csv_path, json_path],
    )


def cmd_qb_check(args) -> None:
    model = _model(args)
    outdir = _outdir(args)
    report = qb_constant(model, max_level=args.max_level, seed=args.seed)
    verdict = dichotomy_classify(model)
    doc = {
        "C_hat": report.C_hat,
        "exact": report.exact,
        "closed_form": report.closed_form,
        "max_level": report.max_level,
        "pairs_tested": report.pairs_tested,
        "case": verdict.case,
        "d": verdict.d,
        "delta": verdict.delta,
        "tol_eq": verdict.tol_eq,
        "evidence": verdict.evidence,
    }
    json_path = os.path.join(outdir, "qb.json")
    _write_json(json_path, doc)
    _write_manifest(
        outdir, "qb-check", vars(args) | {"func": None}, args.model, args.seed,
        [json_path],
    )


def cmd_oracles(args) -> None:
    outdir = _outdir(args)
    records = build_oracles()
    cache_path = os.path.join(outdir, "oracles.json")
    write_oracle_cache(records, cache_path)
    checks = verify_records(records)
    rows = []
    for c in checks:
        rows.append(
            {
                "quantity": c.quantity,
                "oracle_value": c.oracle_value,
                "main_value": c.main_value,
                "ok": c.ok,
                "tolerance": c.tolerance,
            }
        )
    check_path = os.path.join(outdir, "oracle_checks.json")
    _write_json(check_path, rows)
    bad = [c.quantity for c in checks if not c.ok]
    _write_manifest(outdir, "oracles", vars(args) | {"func": None}, None, 0,
                    [cache_path, check_path])
    if bad:
        raise NumericalError("oracle cross-checks failed: " + ", ".join(bad))


def cmd_zoo(args) -> None:
    outdir = _outdir(args)
    names = [args.name] if args.name else list(ZOO_NAMES)
    written = []
    for name in names:
        path = os.path.join(outdir, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(zoo_text(name))
        written.append(path)
    _write_manifest(outdir, "zoo", vars(args) | {"func": None}, None, 0, written)
    for p in written:
        print(p)


# ---------------------------------------------------------------------------
# parser


def _add_common(sp, model_required=True):
    sp.add_argument("--model", default=None, metavar="FILE",
                    help="model file (JSON)" + ("" if model_required else " (unused)"))
    sp.add_argument("--out", required=True, metavar="DIR", help="output directory")
    sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sp.add_argument("--threads", type=int, default=1,
                    help="worker threads for path ensembles; results are "
                         "identical for every value (default 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mflil",
        description="Multifractal measure laboratory: spectra, log-mass "
                    "fluctuation ensembles, corrected gauges, and "
                    "quasi-Bernoulli diagnostics.",
        epilog="Budgets: MFLIL_ENUM_BUDGET caps exact enumerations (default 2^24); "
               "MFLIL_PATH_BUDGET caps N*n_max in ensembles (default 2^33).",
    )
    ap.add_argument("--version", action="version", version=f"mflil {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="tabulate tau(q) and the derived constants")
    _add_common(sp)
    sp.add_argument("--q-min", type=float, default=-2.0)
    sp.add_argument("--q-max", type=float, default=3.0)
    sp.add_argument("--q-step", type=float, default=0.05)
    sp.add_argument("--base", default="auto",
                    choices=["auto", "natural", "base-ell", "base-2"])
    sp.add_argument("--method", default="auto",
                    choices=["auto", "closed", "implicit", "perron"])
    sp.add_argument("--empirical-n", type=int, default=None,
                    help="tabulate the finite-level exponent at this level instead")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("lil-sim", help="Monte Carlo ensemble of normalized log-mass ratios")
    _add_common(sp)
    sp.add_argument("--N", type=int, required=True, help="number of paths")
    sp.add_argument("--checkpoints", required=True,
                    help="comma-separated levels, or pow2:LO:HI")
    sp.add_argument("--convention", default="auto",
                    choices=["auto", "base-2", "base-ell", "natural"])
    sp.add_argument("--window", default=None, help="ratio window LO:HI (levels)")
    sp.set_defaults(func=cmd_lil_sim)

    sp = sub.add_parser("gauge-test", help="mass-vs-gauge fractions over sampled paths")
    _add_common(sp)
    sp.add_argument("--family", required=True,
                    choices=["power", "lil_hausdorff", "lil_packing", "sqrt", "theta"])
    sp.add_argument("--epsilon", type=float, default=0.3)
    sp.add_argument("--epsilon-sign", type=int, default=1, choices=[1, -1])
    sp.add_argument("--a", type=float, default=0.5)
    sp.add_argument("--q-max", type=float, default=1.0,
                    help="chi-profile range for the theta family")
    sp.add_argument("--theta-convention", default="auto",
                    choices=["auto", "base-2", "natural", "base-ell"])
    sp.add_argument("--checkpoints", required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.set_defaults(func=cmd_gauge_test)

    sp = sub.add_parser("qb-check", help="concatenation constant and dichotomy verdict")
    _add_common(sp)
    sp.add_argument("--max-level", type=int, default=8)
    sp.set_defaults(func=cmd_qb_check)

    sp = sub.add_parser("oracles", help=argparse.SUPPRESS)
    _add_common(sp, model_required=False)
    sp.set_defaults(func=cmd_oracles)

    sp = sub.add_parser("zoo", help="export the bundled model files")
    sp.add_argument("--out", required=True, metavar="DIR")
    sp.add_argument("--name", default=None, choices=list(ZOO_NAMES),
                    help="export one model instead of all five")
    sp.set_defaults(func=cmd_zoo)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 4
    except MFLilError as exc:  # pragma: no cover - catch-all for subclasses
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
