"""Command-line front end.

Subcommands: ``classify``, ``hurwitz``, ``construct``, ``verify`` and ``sweep``.
JSON goes to stdout (and to ``--out`` when given, written atomically); sweep
tables and sampled grids are CSV.  Diagnostics are single lines on stderr of
the form ``hcmu: <kind>: <message>``.

Exit codes: 0 success, 1 failed checks, 2 usage error, 3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .classify import AngleSpec, ExtremalProfile, InvalidAngleError, NoMetricError, Role, classify
from .curvature import CurvatureParams, MetricModel, build_metric, sample_grid
from .hurwitz import (BranchData, DegreeCapError, DegreeMismatchError, InvalidBranchShapeError, Partition,
                      boccara_realizable, oracle_realizable, song_xu_realizable, source_genus, total_branching)
from .oneform import (DegenerateSolutionError, GaugeSpec, NoConvergenceError, OneFormModel, build_form,
                      sigma_from_bounds, verify_form)
from .validate import (LITERAL_ENERGY_CONSTANT, QuadratureBudgetError, Thresholds, smooth_point_angle,
                       verify_model)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    alpha: List[float] = field(default_factory=list)
    beta: List[Optional[float]] = field(default_factory=lambda: [None])
    i1: Optional[int] = None
    i2: Optional[int] = None
    role1: Optional[Role] = None
    role2: Optional[Role] = None
    degree: Optional[int] = None
    partitions: Optional[str] = None
    gauge: GaugeSpec = field(default_factory=GaugeSpec)
    seed: int = 0
    grid: Optional[int] = None
    tol: float = 1e-4
    out: Optional[str] = None
    paper_constants: bool = False
    max_degree: int = 7
    input: Optional[str] = None


# ---------------------------------------------------------------- parsing


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}")


def _gauge(text: str) -> GaugeSpec:
    parts = _floats(text)
    if len(parts) != 2:
        raise UsageError("--gauge expects 'pin,product', e.g. '-1,2'")
    pin, prod = parts
    if prod == 0:
        raise UsageError("gauge product must be nonzero")
    return GaugeSpec(complex(pin), complex(prod))


def _role(text: Optional[str]) -> Optional[Role]:
    if text is None:
        return None
    for r in Role:
        if r.value.lower() == text.lower():
            return r
    raise UsageError(f"unknown role {text!r}; choose from {', '.join(r.value for r in Role)}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hcmu", description="Extremal metrics with prescribed cone angles on the sphere.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def angles(sp, many=False):
        h = "cone angle(s) in units of 2*pi" + (", comma separated" if many else "")
        sp.add_argument("--alpha", required=True, help=h)
        sp.add_argument("--beta", default=None, help="second cone angle" + (" list" if many else ""))

    def common(sp):
        sp.add_argument("--out", default=None, help="output path (written atomically)")

    sp = sub.add_parser("classify", help="list the admissible extremal profiles")
    angles(sp)
    common(sp)

    sp = sub.add_parser("hurwitz", help="realizability of branch data")
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--partitions", required=True, help='e.g. "2,2,2|3,3|4,1,1"')
    sp.add_argument("--max-degree", type=int, default=7, help="oracle degree cap")
    common(sp)

    sp = sub.add_parser("construct", help="build the character form and metric of one profile")
    angles(sp)
    sp.add_argument("--i1", type=int, default=None, help="number of smooth maxima")
    sp.add_argument("--i2", type=int, default=None, help="number of smooth minima")
    sp.add_argument("--role1", default=None, help="role of the alpha point (Saddle, Max, Min, Cusp)")
    sp.add_argument("--role2", default=None, help="role of the beta point")
    sp.add_argument("--gauge", default="-1,2", help="'pin,product' normalization of the solver")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--grid", type=int, default=None, help="also write an n x n CSV sample of K and rho")
    sp.add_argument("--paper-constants", action="store_true",
                    help="also report sigma without the factor 3 and the angles it implies")
    common(sp)

    sp = sub.add_parser("verify", help="numerical checks of a constructed model")
    sp.add_argument("input", help="JSON written by construct (or a bare form/metric JSON); '-' for stdin")
    sp.add_argument("--grid", type=int, default=256, help="curvature check grid size (0 disables)")
    sp.add_argument("--tol", type=float, default=1e-4, help="quadrature tolerance")
    sp.add_argument("--paper-constants", action="store_true",
                    help="also report the energy constant against the literal value 6")
    common(sp)

    sp = sub.add_parser("sweep", help="construct and verify every profile for a list of angles (CSV)")
    angles(sp, many=True)
    sp.add_argument("--gauge", default="-1,2")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--grid", type=int, default=0, help="curvature check grid size (0 disables)")
    sp.add_argument("--tol", type=float, default=1e-4)
    common(sp)
    return p


def parse_config(argv: Sequence[str]) -> RunConfig:
    a = build_parser().parse_args(list(argv))
    cfg = RunConfig(command=a.command, out=a.out)
    if a.command in ("classify", "construct", "sweep"):
        cfg.alpha = _floats(a.alpha)
        cfg.beta = [None] if a.beta is None else _floats(a.beta)
        if not cfg.alpha or not cfg.beta:
            raise UsageError("--alpha/--beta must not be empty")
        if a.command != "sweep" and (len(cfg.alpha) != 1 or len(cfg.beta) != 1):
            raise UsageError("--alpha and --beta take a single value here; use sweep for lists")
        for v in cfg.alpha + [b for b in cfg.beta if b is not None]:
            if not math.isfinite(v) or v < 0:
                raise UsageError(f"angle {v} must be finite and >= 0")
    if a.command == "construct":
        cfg.i1, cfg.i2 = a.i1, a.i2
        cfg.role1, cfg.role2 = _role(a.role1), _role(a.role2)
        for name in ("i1", "i2"):
            v = getattr(cfg, name)
            if v is not None and v < 0:
                raise UsageError(f"--{name} must be >= 0")
    if a.command in ("construct", "sweep"):
        cfg.gauge, cfg.seed = _gauge(a.gauge), a.seed
    if a.command in ("construct", "verify", "sweep"):
        cfg.grid = a.grid
        if cfg.grid is not None and (cfg.grid < 0 or 0 < cfg.grid < 8):
            raise UsageError("--grid must be 0 or at least 8")
    if a.command in ("verify", "sweep"):
        cfg.tol = a.tol
        if not 1e-6 <= cfg.tol < 1:
            raise UsageError("--tol must lie in [1e-6, 1)")
    if a.command in ("construct", "verify"):
        cfg.paper_constants = a.paper_constants
    if a.command == "hurwitz":
        cfg.degree, cfg.partitions, cfg.max_degree = a.degree, a.partitions, a.max_degree
        if cfg.degree < 1:
            raise UsageError("--degree must be >= 1")
    if a.command == "verify":
        cfg.input = a.input
    return cfg


# ---------------------------------------------------------------- output


def _plain(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_plain, allow_nan=False) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    if cfg.out:
        write_atomic(cfg.out, text)
    stdout.write(text)


def _stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def _spec(alpha: float, beta: Optional[float]) -> AngleSpec:
    return AngleSpec(alpha, beta)


def cmd_classify(cfg: RunConfig, stdout) -> int:
    profiles = classify(_spec(cfg.alpha[0], cfg.beta[0]))
    _emit(cfg, dumps([p.to_json() for p in profiles]), stdout)
    return EXIT_OK


def _hooks(parts: Sequence[Partition]):
    return [i for i, p in enumerate(parts) if p.parts[0] >= 2 and all(x == 1 for x in p.parts[1:])]


def hurwitz_report(data: BranchData, max_degree: int = 7) -> dict:
    """Closed-form criteria that apply to ``data`` next to the brute-force oracle."""
    parts = list(data.partitions)
    crit = []
    hooks = _hooks(parts)
    if len(parts) == 3 and hooks:
        k = hooks[-1]
        a, b = [p for i, p in enumerate(parts) if i != k]
        m = parts[k].parts[0] - 1
        crit.append({"name": "boccara", "a": str(a), "b": str(b), "m": m,
                     "verdict": boccara_realizable(a, b, m), "compared_with": "any_genus"})
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            rest = [k for k in range(len(parts)) if k not in (i, j)]
            if not rest or any(k not in hooks for k in rest):
                continue
            ms = [parts[k].parts[0] - 1 for k in rest]
            a, b = parts[i], parts[j]
            if sum(ms) != len(a) + len(b) - 2:
                continue
            try:
                v = song_xu_realizable(a, b, ms)
            except InvalidBranchShapeError:
                continue
            crit.append({"name": "song_xu", "a": str(a), "b": str(b), "ms": ms,
                         "verdict": v, "compared_with": "genus0"})
            break
        else:
            continue
        break
    report = {"degree": data.d, "partitions": str(data), "total_branching": total_branching(data),
              "source_genus": source_genus(data), "criteria": crit, "oracle": None}
    try:
        report["oracle"] = {"genus0": oracle_realizable(data, 0, max_degree),
                            "any_genus": oracle_realizable(data, None, max_degree)}
    except DegreeCapError as e:
        report["oracle_skipped"] = str(e)
    oracle = report["oracle"]
    if oracle is not None:
        for c in crit:
            c["agrees"] = c["verdict"] == oracle[c["compared_with"]]
        report["realizable"] = oracle["any_genus"]
    elif crit:
        report["realizable"] = crit[0]["verdict"]
    else:
        report["realizable"] = None
    report["agree"] = all(c.get("agrees", True) for c in crit)
    return report


def cmd_hurwitz(cfg: RunConfig, stdout) -> int:
    try:
        data = BranchData.parse(cfg.degree, cfg.partitions)
    except (DegreeMismatchError, ValueError) as e:
        raise UsageError(str(e))
    rep = hurwitz_report(data, cfg.max_degree)
    _emit(cfg, dumps(rep), stdout)
    return EXIT_OK if rep["agree"] else EXIT_FAILED


def select_profile(cfg: RunConfig) -> ExtremalProfile:
    cands = classify(_spec(cfg.alpha[0], cfg.beta[0]))
    for attr in ("i1", "i2", "role1", "role2"):
        want = getattr(cfg, attr)
        if want is not None:
            cands = [p for p in cands if getattr(p, attr) == want]
    if len(cands) == 1:
        return cands[0]
    listing = "; ".join(f"i1={p.i1} i2={p.i2} role1={p.role1.value} role2={p.role2.value}" for p in cands)
    if not cands:
        raise UsageError("no admissible profile matches the given filters")
    raise UsageError(f"{len(cands)} profiles match, narrow with --i1/--i2/--role1/--role2: {listing}")


def normalization_block(params: CurvatureParams, factor_one: bool) -> dict:
    if params.is_cusp:
        return {"convention": "cusp", "sigma": params.sigma}
    out = {"convention": "factor_three", "sigma": sigma_from_bounds(params.k1, params.k2),
           "smooth_point_angle": 1.0}
    if factor_one:
        out["factor_one"] = {"sigma": sigma_from_bounds(params.k1, params.k2, True),
                             "smooth_point_angle": smooth_point_angle(params, True)}
    return out


def construct_document(cfg: RunConfig, profile: ExtremalProfile) -> dict:
    form = build_form(profile, cfg.gauge, cfg.seed)
    model = build_metric(form)
    rep = verify_form(model.form)
    return {
        "kind": "hcmu.metric",
        "version": __version__,
        "created": _stamp(),
        "profile": profile.to_json(),
        "gauge": cfg.gauge.to_json(),
        "seed": cfg.seed,
        "form": model.form.to_json(),
        "metric": model.to_json(),
        "form_report": rep.to_json(),
        "normalization": normalization_block(model.params, cfg.paper_constants),
    }


def grid_csv(model: MetricModel, n: int) -> str:
    X, Y, K, rho = sample_grid(model, n)
    rows = [(f"{x:.12g}", f"{y:.12g}", f"{k:.15g}", f"{r:.15g}")
            for x, y, k, r in zip(X.ravel(), Y.ravel(), K.ravel(), rho.ravel())]
    return _csv(("x", "y", "K", "rho"), rows)


def cmd_construct(cfg: RunConfig, stdout) -> int:
    profile = select_profile(cfg)
    doc = construct_document(cfg, profile)
    _emit(cfg, dumps(doc), stdout)
    if cfg.grid:
        if not cfg.out:
            raise UsageError("--grid needs --out (the grid goes next to it as <out>.grid.csv)")
        write_atomic(cfg.out + ".grid.csv", grid_csv(MetricModel.from_json(doc["metric"]), cfg.grid))
    return EXIT_OK if doc["form_report"]["passed"] else EXIT_FAILED


def load_model(doc: dict) -> MetricModel:
    """Accept a construct document, a bare metric JSON or a bare form JSON."""
    if "metric" in doc:
        return MetricModel.from_json(doc["metric"])
    if "params" in doc and "form" in doc:
        return MetricModel.from_json(doc)
    if "groups" in doc:
        return build_metric(OneFormModel.from_json(doc))
    raise UsageError("input is neither a construct document nor a form/metric JSON")


def cmd_verify(cfg: RunConfig, stdout, stderr) -> int:
    try:
        text = sys.stdin.read() if cfg.input == "-" else open(cfg.input).read()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read {cfg.input}: {e}")
    model = load_model(doc)
    th = Thresholds(quad_tol=cfg.tol)
    rep = verify_model(model, thresholds=th, curvature_grid=cfg.grid)
    out = {"kind": "hcmu.report", "version": __version__, "created": _stamp(),
           "profile": model.form.profile.to_json(), "report": rep.to_json(),
           "normalization": normalization_block(model.params, cfg.paper_constants)}
    if cfg.paper_constants and rep.calibration_constant is not None:
        out["energy_constant"] = {"measured": rep.calibration_constant, "literal": LITERAL_ENERGY_CONSTANT,
                                  "ratio": rep.calibration_constant / LITERAL_ENERGY_CONSTANT}
    if cfg.out:
        write_atomic(cfg.out, dumps(out))
    stdout.write(rep.table() + "\n")
    return EXIT_OK if rep.all_passed else EXIT_FAILED


SWEEP_HEADER = ("alpha", "beta", "i1", "i2", "role1", "role2", "lambda", "status", "residual",
                "max_residue_error", "gauss_bonnet_lhs", "gauss_bonnet_rhs", "ratio1", "ratio2",
                "curvature_max_rel_err", "passed")


def sweep_rows(cfg: RunConfig):
    th = Thresholds(quad_tol=cfg.tol)
    for a in cfg.alpha:
        for b in cfg.beta:
            try:
                profiles = classify(_spec(a, b))
            except (InvalidAngleError, NoMetricError) as e:
                yield (a, b, "", "", "", "", "", f"invalid: {e}") + ("",) * 8
                continue
            for p in profiles:
                head = (a, "" if b is None else b, p.i1, p.i2, p.role1.value, p.role2.value,
                        "" if math.isinf(p.lam) else f"{p.lam:.12g}")
                try:
                    form = build_form(p, cfg.gauge, cfg.seed)
                except DegenerateSolutionError:
                    yield head + ("obstructed",) + ("",) * 8
                    continue
                except NoConvergenceError as e:
                    yield head + ("no-convergence", f"{e.best_residual:.3e}") + ("",) * 7
                    continue
                fr = verify_form(form)
                model = build_metric(form)
                try:
                    rep = verify_model(model, thresholds=th, curvature_grid=cfg.grid or 0)
                except QuadratureBudgetError:
                    yield head + ("quadrature-budget", f"{form.residual:.3e}", f"{fr.max_residue_error:.3e}") \
                        + ("",) * 6 + (False,)
                    continue
                r = {n: v for n, v, _ in rep.energy_ratios}
                cerr = "" if rep.curvature_max_rel_err is None else f"{rep.curvature_max_rel_err:.3e}"
                yield head + ("ok", f"{form.residual:.3e}", f"{fr.max_residue_error:.3e}",
                              f"{rep.gauss_bonnet_lhs:.10g}", f"{rep.gauss_bonnet_rhs:.10g}",
                              f"{r[1]:.10g}", f"{r[2]:.10g}", cerr, bool(rep.all_passed and fr.passed))


def cmd_sweep(cfg: RunConfig, stdout) -> int:
    rows = list(sweep_rows(cfg))
    _emit(cfg, _csv(SWEEP_HEADER, rows), stdout)
    status = [r[7] for r in rows]
    if any(s == "no-convergence" for s in status):
        return EXIT_NOCONV
    if any(r[-1] is False for r in rows):
        return EXIT_FAILED
    return EXIT_OK


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if cfg.command == "classify":
        return cmd_classify(cfg, stdout)
    if cfg.command == "hurwitz":
        return cmd_hurwitz(cfg, stdout)
    if cfg.command == "construct":
        return cmd_construct(cfg, stdout)
    if cfg.command == "verify":
        return cmd_verify(cfg, stdout, stderr)
    if cfg.command == "sweep":
        return cmd_sweep(cfg, stdout)
    raise UsageError(f"unknown command {cfg.command}")


def _diag(stderr, kind: str, msg) -> None:
    stderr.write(f"hcmu: {kind}: {' '.join(str(msg).split())}\n")


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg, stdout, stderr)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except (UsageError, InvalidAngleError, NoMetricError) as e:
        _diag(stderr, "usage", e)
        return EXIT_USAGE
    except (NoConvergenceError, DegenerateSolutionError) as e:
        _diag(stderr, "no-convergence", e)
        return EXIT_NOCONV
    except QuadratureBudgetError as e:
        _diag(stderr, "quadrature", e)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
