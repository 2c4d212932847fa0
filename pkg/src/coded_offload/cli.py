"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 infeasible parameters,
4 unrecoverable decode during ``verify-coding``.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from pathlib import Path

from . import coding, latency, simulator
from .config import RunConfig, apply_overrides, canonical_json, fraction_json, load_config, to_fraction
from .dof import downlink_dof, uplink_dof
from .errors import InfeasibleError, Unrecoverable, ValidationError
from .scheme import check_sizing, design_scheme, feasible_pairs, q_range

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_UNRECOVERABLE = 0, 2, 3, 4

TRIPLET_COLUMNS = ["r", "q", "rho1", "rho2", "tau_u", "tau_c", "tau_d", "tau_total", "tau_d_num", "tau_d_den"]


# --- output helpers ---------------------------------------------------------------

def _cell(v):
    if isinstance(v, Fraction):
        return repr(float(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, Fraction):
        return fraction_json(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return v.item()
    return v


def to_json(command: str, run: RunConfig, rows) -> str:
    """Rationals become num/den objects; each also gets a ``<name>_float`` twin."""
    out_rows = []
    for row in rows:
        d = {}
        for k, v in row.items():
            if k.endswith(("_num", "_den")):
                continue
            d[k] = _jsonable(v)
            if isinstance(v, Fraction):
                d[k + "_float"] = float(v)
        out_rows.append(d)
    return canonical_json({"command": command, "config": run.to_dict(), "rows": out_rows})


def triplet_row(r, q, t: latency.LatencyTriplet, scheme=None) -> dict:
    row = {"r": r, "q": q, "tau_u": t.tau_u, "tau_c": t.tau_c, "tau_d": t.tau_d, "tau_total": t.tau_total,
           "tau_d_num": t.tau_d.numerator, "tau_d_den": t.tau_d.denominator}
    if scheme is not None:
        row["rho1"], row["rho2"] = scheme.rho1, scheme.rho2
    return row


def frange(start: Fraction, stop: Fraction, step: Fraction) -> list[Fraction]:
    """Inclusive exact range; empty when stop < start."""
    if step <= 0:
        raise ValidationError("--step must be > 0")
    out, v = [], start
    while v <= stop:
        out.append(v)
        v += step
    return out


# --- subcommands --------------------------------------------------------------------

def _need(args, name):
    v = getattr(args, name)
    if v is None:
        raise ValidationError(f"--{name} is required for {args.command}")
    return v


def cmd_triplet(args, run):
    cfg = run.network
    r, q = _need(args, "r"), _need(args, "q")
    scheme = design_scheme(cfg, r, q)
    return TRIPLET_COLUMNS, [triplet_row(r, q, latency.end_to_end(cfg, r, q), scheme)]


def cmd_region(args, run):
    cfg = run.network
    r = _need(args, "r")
    curve = latency.region(cfg, r, args.kind)
    if not curve.points:
        raise InfeasibleError(f"no feasible q at r = {r}: need (r-K+q)*mu >= 1")
    hull = set(curve.hull)
    rows = [{"r": r, "q": q, "kind": args.kind, "tau_u": latency.nult_achievable(cfg, r), "tau_c": c, "tau_d": d,
             "tau_d_num": d.numerator, "tau_d_den": d.denominator, "on_hull": (c, d) in hull}
            for q, c, d in curve.points]
    return ["r", "q", "kind", "tau_u", "tau_c", "tau_d", "tau_d_num", "tau_d_den", "on_hull"], rows


def cmd_optimize(args, run):
    cfg = run.network
    rows = []
    for name in ("proposed",) + latency.BASELINES:
        try:
            r, q, t = latency.optimize_baseline(cfg, name)
        except InfeasibleError:
            if name == "proposed":
                raise
            continue
        rows.append({"scheme": name, **triplet_row(r, q, t)})
    cols = ["scheme"] + [c for c in TRIPLET_COLUMNS if not c.startswith("rho")]
    return cols, rows


def sweep_columns(schemes):
    cols = ["axis", "value", "value_num", "value_den"]
    for s in schemes:
        cols += [f"{s}_r", f"{s}_q", f"{s}_tau"]
    return cols


def emit_sweep(cfg, axis: str, values, schemes=("proposed",) + latency.BASELINES) -> tuple[list, list]:
    """Optimal total time per scheme at each sample; empty range gives header only."""
    rows = []
    for point in latency.sweep(cfg, axis, values, schemes):
        v = point["value"]
        row = {"axis": axis, "value": v, "value_num": v.numerator, "value_den": v.denominator}
        for s in schemes:
            best = point[s]
            if best is not None:
                row[f"{s}_r"], row[f"{s}_q"], row[f"{s}_tau"] = best[0], best[1], best[2].tau_total
        rows.append(row)
    return sweep_columns(schemes), rows


def cmd_sweep(args, run):
    values = frange(to_fraction(args.start), to_fraction(args.stop), to_fraction(args.step))
    return emit_sweep(run.network, args.axis, values)


def cmd_dof(args, run):
    cfg = run.network
    if args.link == "uplink":
        r = _need(args, "r")
        d = uplink_dof(cfg.M, cfg.K, r)
        return ["link", "M", "K", "r", "dof", "dof_num", "dof_den"], [
            {"link": "uplink", "M": cfg.M, "K": cfg.K, "r": r, "dof": d, "dof_num": d.numerator, "dof_den": d.denominator}]
    p1, p2 = _need(args, "p1"), _need(args, "p2")
    d = downlink_dof(p1, cfg.M, p2)
    return ["link", "M", "p1", "p2", "dof", "dof_num", "dof_den"], [
        {"link": "downlink", "M": cfg.M, "p1": p1, "p2": p2, "dof": d, "dof_num": d.numerator, "dof_den": d.denominator}]


def _pairs(args, cfg):
    if args.r is not None and args.q is not None:
        return [(args.r, args.q)]
    if args.r is not None:
        return [(args.r, q) for q in q_range(cfg, args.r)]
    return sorted(feasible_pairs(cfg))


def cmd_simulate(args, run):
    cfg, sim = run.network, run.sim
    pairs = _pairs(args, cfg)
    if not pairs:
        raise InfeasibleError("no feasible (r, q) to simulate")
    rows = simulator.run_campaign(cfg, pairs, sim)
    if args.dump_trials:
        for row, (r, q) in zip(rows, pairs):
            scheme = design_scheme(cfg, r, q)
            row["trials"] = [
                {"omega": rec.omega.tolist(), "survivors": list(rec.survivors), "T_u": rec.T_u,
                 "T_c": rec.T_c, "T_d": rec.T_d, "T_total": rec.T_total}
                for rec in (simulator.draw_trial(cfg, scheme, sim, t) for t in range(sim.trials))
            ]
    return list(simulator.CAMPAIGN_COLUMNS), rows


def cmd_verify_coding(args, run):
    cfg = run.network
    r, q = _need(args, "r"), _need(args, "q")
    A, w = None, args.w
    if args.matrix:
        w, A = coding.read_fixture(args.matrix)
        cfg = cfg.replace(m=A.shape[0], n=A.shape[1])
    rep = coding.verify_coding(cfg, r, q, w=w, seed=run.sim.seed, A=A, max_patterns=args.patterns)
    return ["r", "q", "rho1", "rho2", "w", "patterns", "decoded"], [
        {"r": r, "q": q, "rho1": rep.rho1, "rho2": rep.rho2, "w": w, "patterns": rep.patterns, "decoded": rep.decoded}]


def cmd_sizing(args, run):
    cfg = run.network
    r = _need(args, "r")
    need = check_sizing(cfg, r, args.q)
    row = {"r": r, "q": args.q if args.q is not None else "", "N": cfg.N, "m": cfg.m,
           "min_N": need["N"], "min_m": need.get("m", "")}
    return ["r", "q", "N", "m", "min_N", "min_m"], [row]


COMMANDS = {
    "triplet": cmd_triplet,
    "region": cmd_region,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "dof": cmd_dof,
    "simulate": cmd_simulate,
    "verify-coding": cmd_verify_coding,
    "sizing": cmd_sizing,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field (sim.<field> for simulator knobs)")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--r", type=int)
    common.add_argument("--q", type=int)

    p = argparse.ArgumentParser(prog="coded-offload", description="Coded edge-offloading latency toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("triplet", parents=[common], help="achievable (NULT, NCT, NDLT) at (r, q)")
    sp = sub.add_parser("region", parents=[common], help="compute-download points and hull at fixed r")
    sp.add_argument("--kind", choices=("inner", "outer"), default="inner")
    sub.add_parser("optimize", parents=[common], help="best (r, q) for the proposed scheme and baselines")
    sp = sub.add_parser("sweep", parents=[common], help="optimal total time while one weight varies")
    sp.add_argument("--axis", choices=("delta_c", "delta_d"), required=True)
    sp.add_argument("--start", default="0")
    sp.add_argument("--stop", default="10")
    sp.add_argument("--step", default="1")
    sp = sub.add_parser("dof", parents=[common], help="per-receiver DoF")
    sp.add_argument("--link", choices=("uplink", "downlink"), default="downlink")
    sp.add_argument("--p1", type=int)
    sp.add_argument("--p2", type=int)
    sp = sub.add_parser("simulate", parents=[common], help="Monte Carlo phase times")
    sp.add_argument("--dump-trials", action="store_true", help="JSON only: include every trial")
    sp = sub.add_parser("verify-coding", parents=[common], help="encode/decode under every straggler pattern")
    sp.add_argument("--w", type=int, choices=(8, 16), default=16)
    sp.add_argument("--matrix", help="CMM1 fixture holding A")
    sp.add_argument("--patterns", type=int, help="stop after this many survivor sets")
    sub.add_parser("sizing", parents=[common], help="check N and m divisibility")
    return p


def load_run(args) -> RunConfig:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"sim.seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"sim.trials={args.trials}")
    if args.config:
        return load_config(args.config, overrides)
    return RunConfig.from_dict(apply_overrides({}, overrides))


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        run_cfg = load_run(args)
        columns, rows = COMMANDS[args.command](args, run_cfg)
        if args.format == "json":
            text = to_json(args.command, run_cfg, rows)
        else:
            text = to_csv(columns, rows)
    except Unrecoverable as exc:
        print(f"error: unrecoverable: {exc}", file=sys.stderr)
        return EXIT_UNRECOVERABLE
    except InfeasibleError as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        Path(args.out).write_text(text, newline="\n")
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
