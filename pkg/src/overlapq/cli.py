"""Command-line front end.

Exit codes: 0 consistent, 2 a ledgered discrepancy was reproduced,
3 unexpected inconsistency (|z| > 4 with no ledger entry), 64 bad usage,
74 report could not be written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from typing import Any, Sequence

from overlapq import analytic, oracle, simulator
from overlapq.analytic import Variant
from overlapq.errors import DiscrepancyWarning, IOFailure, OverlapError, UnsupportedVariant
from overlapq.model import PairGeometry, Threshold, classify_case, validate_params
from overlapq.tables import Z_LIMIT, describe_flags, run_tables

EXIT_OK = 0
EXIT_LEDGERED = 2
EXIT_UNEXPECTED = 3
EXIT_USAGE = 64
EXIT_IO = 74

CSV_COLUMNS = (
    "case", "lambda", "mu", "j", "k", "delta", "x", "y", "analytic", "variant",
    "p_hat", "stderr", "z", "paper_theoretical", "paper_simulated", "flags",
)

DEFAULTS: dict[str, Any] = {
    "lambda": None, "mu": None, "j": None, "k": None, "delta": 0,
    "x": 0.0, "y": 0.0, "ell": None, "xs": None,
    "n_samples": 1_000_000, "seed": None, "workers": 1,
    "variant": "consistent", "format": "json", "out": None, "table": "all",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="json file with the same field names; flags win")
    common.add_argument("--lambda", dest="lambda", type=float, help="arrival rate")
    common.add_argument("--mu", type=float, help="service rate at each station")
    common.add_argument("--j", type=int, help="station-1 gap, pair (n, n+j)")
    common.add_argument("--k", type=int, help="station-2 gap, pair (m, m+k)")
    common.add_argument("--delta", type=int, help="offset m - n (default 0)")
    common.add_argument("--x", type=float, help="station-1 threshold")
    common.add_argument("--y", type=float, help="station-2 threshold")
    common.add_argument("--ell", type=float, help="threshold for the sum of both overlaps")
    common.add_argument("--n-samples", dest="n_samples", type=int)
    common.add_argument("--seed", type=int, help="default: $OVERLAPQ_SEED, else 0")
    common.add_argument("--workers", type=int)
    common.add_argument("--variant", choices=("printed", "consistent"))
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="write the report here instead of stdout")

    parser = _Parser(prog="overlapq", description="Overlap times in a two-station infinite-server tandem queue.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analytic", parents=[common], help="evaluate closed forms")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates")
    sub.add_parser("compare", parents=[common], help="closed form vs simulator vs event oracle")
    p_tab = sub.add_parser("tables", parents=[common], help="recompute the published tables")
    p_tab.add_argument("--table", choices=("T1", "T2", "T3", "all"))
    p_conj = sub.add_parser("conjecture", parents=[common], help="N-station same-pair joint tail")
    p_conj.add_argument("--xs", type=_float_list, help="comma-separated thresholds, one per station")
    return parser


def resolve_config(ns: argparse.Namespace, environ=os.environ) -> dict[str, Any]:
    """Merge defaults, config file, environment and flags (flags win)."""
    cfg = dict(DEFAULTS)
    path = getattr(ns, "config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        if not isinstance(loaded, dict):
            raise UsageError("config must be a json object")
        loaded = {key.replace("-", "_"): v for key, v in loaded.items()}
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update({key: v for key, v in vars(ns).items() if key in DEFAULTS})
    if cfg["seed"] is None:
        env = environ.get("OVERLAPQ_SEED")
        try:
            cfg["seed"] = int(env) if env not in (None, "") else 0
        except ValueError:
            raise UsageError(f"OVERLAPQ_SEED must be an integer, got {env!r}")
    cfg["command"] = ns.command
    _check_config(cfg)
    return cfg


def _check_config(cfg: dict[str, Any]) -> None:
    cmd = cfg["command"]
    if cmd != "tables":
        for name in ("lambda", "mu", "k"):
            if cfg[name] is None:
                raise UsageError(f"--{name} is required for '{cmd}'")
    if cfg["j"] is None:
        cfg["j"] = cfg["k"]
    if cmd == "conjecture":
        if not cfg["xs"]:
            raise UsageError("--xs is required for 'conjecture'")
        if len(cfg["xs"]) < 3:
            raise UsageError("conjecture needs at least 3 stations; two stations are covered by the closed form")
    if cfg["n_samples"] is None or int(cfg["n_samples"]) < 1:
        raise UsageError("--n-samples must be >= 1")
    if int(cfg["workers"]) < 1:
        raise UsageError("--workers must be >= 1")
    if cfg["variant"] not in ("printed", "consistent"):
        raise UsageError(f"bad variant {cfg['variant']!r}")
    if cfg["format"] not in ("json", "csv"):
        raise UsageError(f"bad format {cfg['format']!r}")
    if cfg["table"] not in ("T1", "T2", "T3", "all"):
        raise UsageError(f"bad table {cfg['table']!r}")


# -- commands -------------------------------------------------------------

def _csv_row(**kw) -> dict[str, Any]:
    row = {c: "" for c in CSV_COLUMNS}
    row.update({c: v for c, v in kw.items() if v is not None})
    return row


def _z(p_hat: float, stderr: float, ref: float) -> float:
    diff = p_hat - ref
    if stderr > 0:
        return diff / stderr
    return 0.0 if diff == 0 else math.copysign(1e300, diff)


def _status(zs: Sequence[float], flags: Sequence[str]) -> int:
    if all(abs(z) <= Z_LIMIT for z in zs):
        return EXIT_OK
    return EXIT_LEDGERED if flags else EXIT_UNEXPECTED


def _setup(cfg):
    p = validate_params(cfg["lambda"], cfg["mu"])
    g = PairGeometry(int(cfg["j"]), int(cfg["k"]), int(cfg["delta"]))
    th = Threshold(float(cfg["x"]), float(cfg["y"]), float(cfg["ell"] or 0.0))
    return p, g, th


def _cross(p, g, th, variant):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiscrepancyWarning)
        return analytic.cross_pair_tail(p, g, th.x, th.y, variant=Variant(variant))


def cmd_analytic(cfg) -> tuple[dict, list[dict], int]:
    p, g, th = _setup(cfg)
    res = _cross(p, g, th, cfg["variant"])
    report: dict[str, Any] = {
        "params": {"lambda": p.lam, "mu": p.mu, "alpha": p.alpha},
        "geometry": {"j": g.j, "k": g.k, "delta": g.delta},
        "thresholds": {"x": th.x, "y": th.y},
        "case": str(res.case),
        "cross_pair_tail": res.probability,
        "variant": res.variant.value,
        "flags": describe_flags(res.flags),
    }
    if g.delta == 0 and g.j == g.k:
        k = g.k
        rect = analytic.rectangle_probabilities(p, k, th.x, th.y)
        report["same_pair"] = {
            "joint_tail": analytic.joint_same_pair_tail(p, k, th.x, th.y),
            "marginal_station1": analytic.marginal_station1_tail(p, k, th.x),
            "marginal_station2": analytic.marginal_station2_tail(p, k, th.y),
            "rectangle": rect.__dict__,
            "moments": analytic.moments(p, k).__dict__,
        }
        if cfg["ell"] is not None:
            report["same_pair"]["sum_tail"] = _sum_variants(p, k, th.ell)
    row = _csv_row(case=str(res.case), **_geom_cols(p, g, th), analytic=res.probability,
                   variant=res.variant.value, flags=";".join(res.flags))
    return report, [row], EXIT_OK


def _sum_variants(p, k, ell) -> dict[str, Any]:
    cons = analytic.sum_tail(p, k, ell, Variant.CONSISTENT)
    printed = analytic.sum_tail(p, k, ell, Variant.AS_PRINTED)
    out = {"consistent": cons, "printed": printed}
    if printed != cons:
        out["flags"] = describe_flags(["sum-tail-printed"])
    return out


def _geom_cols(p, g, th) -> dict[str, Any]:
    return {"lambda": p.lam, "mu": p.mu, "j": g.j, "k": g.k, "delta": g.delta, "x": th.x, "y": th.y}


def cmd_simulate(cfg) -> tuple[dict, list[dict], int]:
    p, g, th = _setup(cfg)
    case = classify_case(g, p)
    n, seed, workers = int(cfg["n_samples"]), int(cfg["seed"]), int(cfg["workers"])
    est = simulator.estimate_cross_pair_tail(p, g, th.x, th.y, n, seed, workers)
    report: dict[str, Any] = {
        "case": str(case),
        "params": {"lambda": p.lam, "mu": p.mu},
        "geometry": {"j": g.j, "k": g.k, "delta": g.delta},
        "thresholds": {"x": th.x, "y": th.y},
        "cross_pair_tail": est.__dict__,
    }
    if cfg["ell"] is not None:
        s = simulator.estimate_sum_tail(p, g.k, th.ell, n, seed, workers)
        report["sum_tail"] = {**s.__dict__, "ell": th.ell, "closed_form": _sum_variants(p, g.k, th.ell)}
    row = _csv_row(case=str(case), **_geom_cols(p, g, th), p_hat=est.p_hat, stderr=est.stderr)
    return report, [row], EXIT_OK


def cmd_compare(cfg) -> tuple[dict, list[dict], int]:
    p, g, th = _setup(cfg)
    n, seed, workers = int(cfg["n_samples"]), int(cfg["seed"]), int(cfg["workers"])
    try:
        res = _cross(p, g, th, cfg["variant"])
    except UnsupportedVariant as exc:
        raise UsageError(str(exc))
    sim = simulator.estimate_cross_pair_tail(p, g, th.x, th.y, n, seed, workers)
    event = oracle.EventSpec(res.case, oracle.Side.BOTH, th)
    orc = oracle.mc_event_probability(event, p, g, n, seed, workers)
    combined = math.hypot(sim.stderr, orc.stderr)
    zs = {
        "simulator_vs_analytic": _z(sim.p_hat, sim.stderr, res.probability),
        "oracle_vs_analytic": _z(orc.p_hat, orc.stderr, res.probability),
        "simulator_vs_oracle": _z(sim.p_hat, combined, orc.p_hat),
    }
    status = _status(list(zs.values()), res.flags)
    report = {
        "case": str(res.case),
        "params": {"lambda": p.lam, "mu": p.mu},
        "geometry": {"j": g.j, "k": g.k, "delta": g.delta},
        "thresholds": {"x": th.x, "y": th.y},
        "analytic": res.probability,
        "variant": res.variant.value,
        "simulator": sim.__dict__,
        "oracle": orc.__dict__,
        "z": zs,
        "flags": describe_flags(res.flags),
        "status": status,
    }
    row = _csv_row(case=str(res.case), **_geom_cols(p, g, th), analytic=res.probability,
                   variant=res.variant.value, p_hat=sim.p_hat, stderr=sim.stderr,
                   z=zs["simulator_vs_analytic"], flags=";".join(res.flags))
    return report, [row], status


def cmd_tables(cfg) -> tuple[dict, list[dict], int]:
    results = run_tables(cfg["table"], int(cfg["n_samples"]), int(cfg["seed"]),
                         int(cfg["workers"]), Variant(cfg["variant"]))
    rows, entries = [], []
    for r in results:
        entry = dict(r.__dict__)
        entry["flags"] = describe_flags(r.flags)
        entry["status"] = r.status
        entries.append(entry)
        rows.append(_csv_row(
            case=r.case, **{"lambda": r.lam}, mu=r.mu, j=r.j, k=r.k, delta=r.delta, x=r.x, y=r.y,
            analytic=r.analytic, variant=r.variant, p_hat=r.p_hat, stderr=r.stderr, z=r.z,
            paper_theoretical=r.paper_theoretical, paper_simulated=r.paper_simulated,
            flags=";".join(r.flags),
        ))
    status = max((r.status for r in results), default=EXIT_OK)
    report = {"n_samples": int(cfg["n_samples"]), "seed": int(cfg["seed"]), "rows": entries, "status": status}
    return report, rows, status


def cmd_conjecture(cfg) -> tuple[dict, list[dict], int]:
    p = validate_params(cfg["lambda"], cfg["mu"])
    k, xs = int(cfg["k"]), [float(v) for v in cfg["xs"]]
    rep = simulator.conjecture_check(p, k, xs, int(cfg["n_samples"]), int(cfg["seed"]), int(cfg["workers"]))
    report = {
        "params": {"lambda": p.lam, "mu": p.mu},
        "k": k,
        "xs": xs,
        "stations": len(xs),
        "conjectured": rep.conjectured,
        "estimate": rep.estimate.__dict__,
        "z": rep.z_score,
    }
    row = _csv_row(case=f"{len(xs)}-station same pair", **{"lambda": p.lam}, mu=p.mu, j=k, k=k, delta=0,
                   analytic=rep.conjectured, variant="conjecture", p_hat=rep.estimate.p_hat,
                   stderr=rep.estimate.stderr, z=rep.z_score)
    # the conjecture is the subject of the experiment, so |z| never fails the run
    return report, [row], EXIT_OK


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "tables": cmd_tables,
    "conjecture": cmd_conjecture,
}


# -- output ---------------------------------------------------------------

def render(report: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_report(text: str, path: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def summary(command: str, rows: list[dict]) -> str:
    lines = []
    for r in rows:
        parts = [str(r["case"])]
        for key in ("analytic", "p_hat", "stderr", "z", "paper_theoretical", "paper_simulated"):
            v = r[key]
            if v != "":
                parts.append(f"{key}={v:.6g}" if isinstance(v, float) else f"{key}={v}")
        if r["flags"]:
            parts.append(f"flags={r['flags']}")
        lines.append("  ".join(parts))
    return f"{command}:\n" + "\n".join(lines) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        report, rows, status = COMMANDS[cfg["command"]](cfg)
    except (UsageError, OverlapError, ValueError) as exc:
        print(f"overlapq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(report, rows, cfg["format"])
    if cfg["out"]:
        try:
            write_report(text, cfg["out"])
        except IOFailure as exc:
            print(f"overlapq: error: {exc}", file=sys.stderr)
            return EXIT_IO
        sys.stdout.write(summary(cfg["command"], rows))
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
