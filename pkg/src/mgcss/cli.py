"""Command-line front end: sweeps and validations emitted as CSV or JSON.

Exit codes: 0 success, 2 bad arguments or out-of-domain input, 3 numerical
non-convergence, 4 a Monte-Carlo z-score beyond 4.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import channel as ch
from ._settings import ConvergenceError, DomainError
from .cooperative import (
    FusionConfig,
    NodeConfig,
    fusion_metrics,
    node_probabilities,
    optimal_k_closed,
    optimal_k_exhaustive,
    optimal_m,
    report_chain,
    sls_detect,
    sls_false_alarm,
    ter_at,
    ter_sweep,
)
from .detector import DetectorConfig, prob_detect_mg_quadrature, roc_sweep
from .montecarlo import MODES, McConfig, score_z, simulate_css, simulate_node

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_MC = 0, 2, 3, 4
Z_FAIL = 4.0
MC_QUANTITIES = ("p_f", "p_d", "q_f", "q_d")


class UsageError(ValueError):
    pass


# --- argument helpers --------------------------------------------------------

def parse_grid(text):
    """``start:stop:count`` -> evenly spaced floats (count >= 1, stop >= start)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None
    if count < 1 or not stop >= start or not (math.isfinite(start) and math.isfinite(stop)):
        raise argparse.ArgumentTypeError(f"grid needs count >= 1 and stop >= start, got {text!r}")
    if count == 1:
        return [start]
    return [float(x) for x in np.linspace(start, stop, count)]


def _add_channel(p):
    g = p.add_argument_group("channel")
    g.add_argument("--channel", default="rayleigh", help=f"preset family: {', '.join(ch.FAMILIES)}")
    g.add_argument("--m", type=float, help="fading severity (Nakagami, Weibull, NL)")
    g.add_argument("--zeta", type=float, help="shadowing spread (lognormal families)")
    g.add_argument("--gamma0-db", type=float, default=0.0, help="average SNR in dB")


def _add_detector(p, grid=True):
    g = p.add_argument_group("detector")
    g.add_argument("--u", type=float, required=True, help="time-bandwidth product")
    if grid:
        x = g.add_mutually_exclusive_group(required=True)
        x.add_argument("--lambda-n", type=float, help="single normalized threshold")
        x.add_argument("--lambda-grid", type=parse_grid, help="threshold grid start:stop:count")
    else:
        g.add_argument("--lambda-n", type=float, required=True, help="normalized threshold")


def _add_node(p):
    g = p.add_argument_group("node")
    g.add_argument("--antennas", type=int, default=1, help="antennas per node (M)")
    g.add_argument("--q", type=float, default=0.0, help="report-channel crossover probability")


def _add_fusion(p, rule=False):
    g = p.add_argument_group("fusion")
    g.add_argument("--nodes", type=int, default=10, help="number of nodes (N)")
    g.add_argument("--k", type=int, help="fusion threshold")
    if rule:
        g.add_argument("--rule", choices=("or", "and", "optimal"), help="named fusion rule")
    g.add_argument("--wm", type=float, default=1.0, help="miss cost W_m")
    g.add_argument("--wf", type=float, default=1.0, help="false-alarm cost W_f")


def _add_output(p):
    g = p.add_argument_group("output")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--out", help="output file (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mgcss",
        description="Energy-detection cooperative sensing over mixture-gamma fading.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("channels", help="list channel presets and their coefficients")
    p.add_argument("--channel", help="only presets of this family")
    _add_output(p)

    p = sub.add_parser("roc", help="false alarm, detection and miss along a threshold grid")
    _add_channel(p)
    _add_detector(p)
    p.add_argument("--oracle", action="store_true", help="add a quadrature detection column")
    _add_output(p)

    p = sub.add_parser("ter", help="total error rate under OR, AND and optimal fusion")
    _add_channel(p)
    _add_detector(p)
    _add_node(p)
    _add_fusion(p)
    _add_output(p)

    p = sub.add_parser("optimal-k", help="exhaustive and closed-form fusion thresholds")
    _add_channel(p)
    _add_detector(p)
    _add_node(p)
    _add_fusion(p)
    _add_output(p)

    p = sub.add_parser("optimal-m", help="TER against antennas, or optimal antennas against SNR")
    _add_channel(p)
    _add_detector(p, grid=False)
    p.add_argument("--q", type=float, default=0.0, help="report-channel crossover probability")
    _add_fusion(p, rule=True)
    p.add_argument("--m-max", type=int, default=30, help="largest antenna count searched")
    x = p.add_mutually_exclusive_group(required=True)
    x.add_argument("--sweep-m", action="store_true", help="TER for M = 1..m-max at --gamma0-db")
    x.add_argument("--sweep-snr", type=parse_grid, metavar="START:STOP:COUNT", help="dB grid for M*")
    _add_output(p)

    p = sub.add_parser("mc", help="Monte-Carlo check of the analytic chain")
    _add_channel(p)
    _add_detector(p, grid=False)
    _add_node(p)
    _add_fusion(p, rule=True)
    g = p.add_argument_group("simulation")
    g.add_argument("--trials", type=int, default=1_000_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mode", choices=MODES, default="semi_analytic")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--quantities", default=",".join(MC_QUANTITIES), help="comma list of p_f,p_d,q_f,q_d")
    _add_output(p)
    return parser


# --- request builders --------------------------------------------------------

def _channel(args, gamma0_db=None):
    g = args.gamma0_db if gamma0_db is None else gamma0_db
    return ch.preset(args.channel, m=args.m, zeta=args.zeta, gamma0=ch.db_to_linear(g))


def _grid(args):
    return [args.lambda_n] if args.lambda_grid is None else args.lambda_grid


def _fusion(args, default_k=1):
    k = args.k
    rule = getattr(args, "rule", None)
    if rule is not None and k is not None:
        raise UsageError("give either --k or --rule, not both")
    if rule == "or":
        k = 1
    elif rule == "and":
        k = args.nodes
    elif rule == "optimal":
        raise UsageError("--rule optimal is not available for this command; give --k")
    return FusionConfig(args.nodes, default_k if k is None else k, args.wm, args.wf)


# --- commands ----------------------------------------------------------------

def _join(values):
    return ";".join(repr(float(v)) for v in values)


def cmd_channels(args):
    rows = []
    if args.channel is not None and args.channel not in ch.FAMILIES:
        raise ch.UnknownPresetError(f"unknown channel {args.channel!r}; choose from {', '.join(ch.FAMILIES)}")
    for name, kw in ch.TABLE_ROWS:
        if args.channel is not None and name != args.channel:
            continue
        c = ch.preset(name, **kw)
        m, zeta = kw.get("m"), kw.get("zeta")
        entry = ch.FITTED_PRESETS.get((name, m, zeta))
        if entry is None:
            # exact single-component law, not a fitted row
            comps, mse = list(zip(c.alphas, c.betas, c.zetas)), None
        else:
            comps, mse = entry
        rows.append({
            "preset": c.label,
            "family": name,
            "m": m,
            "zeta": zeta,
            "alpha": _join(a for a, _, _ in comps),
            "beta": _join(b for _, b, _ in comps),
            "zeta_coef": _join(z for _, _, z in comps),
            "mse": mse,
        })
    return ["preset", "family", "m", "zeta", "alpha", "beta", "zeta_coef", "mse"], rows


def cmd_roc(args):
    c = _channel(args)
    cols = ["lambda_n", "p_f", "p_d", "p_m"]
    if args.oracle:
        cols.append("p_d_oracle")
    rows = []
    for pt in roc_sweep(c, args.u, _grid(args)):
        row = pt._asdict()
        if args.oracle:
            row["p_d_oracle"] = prob_detect_mg_quadrature(c, DetectorConfig(args.u, pt.lambda_n))
        rows.append(row)
    return cols, rows


def cmd_ter(args):
    c = _channel(args)
    node = NodeConfig(args.antennas, args.q)
    fusion = _fusion(args)
    grid = _grid(args)
    sweeps = {r: ter_sweep(c, args.u, grid, node, fusion, rule=r) for r in ("or", "and", "optimal")}
    rows = [
        {"lambda_n": o.lambda_n, "ter_or": a.ter, "ter_and": b.ter, "ter_opt": o.ter, "k_opt": o.k_used}
        for a, b, o in zip(sweeps["or"], sweeps["and"], sweeps["optimal"])
    ]
    return ["lambda_n", "ter_or", "ter_and", "ter_opt", "k_opt"], rows


def cmd_optimal_k(args):
    c = _channel(args)
    node = NodeConfig(args.antennas, args.q)
    fusion = _fusion(args)
    rows = []
    for lam in _grid(args):
        pf, pd = report_chain(c, DetectorConfig(args.u, lam), node)
        k_ex, risk = optimal_k_exhaustive(args.nodes, pf, pd, args.wm, args.wf)
        try:
            k_cf = optimal_k_closed(args.nodes, pf, pd, args.wm, args.wf)
        except DomainError:
            k_cf = None  # closed form undefined for an uninformative detector
        rows.append({
            "lambda_n": lam, "p_f_rep": pf, "p_d_rep": pd,
            "k_exhaustive": k_ex, "k_closed": k_cf, "ter": risk,
        })
    return ["lambda_n", "p_f_rep", "p_d_rep", "k_exhaustive", "k_closed", "ter"], rows


def cmd_optimal_m(args):
    fusion = _fusion(args, default_k=1)
    cfg = DetectorConfig(args.u, args.lambda_n)
    if args.sweep_m:
        c = _channel(args)
        pf, pd = node_probabilities(c, cfg)
        rows = [{"M": m, "ter": ter_at(pf, pd, m, args.q, fusion)} for m in range(1, args.m_max + 1)]
        return ["M", "ter"], rows
    rows = []
    for g_db in args.sweep_snr:
        res = optimal_m(_channel(args, g_db), cfg, args.q, fusion, m_max=args.m_max)
        rows.append({"gamma0_db": g_db, "m_star": res.m_star, "ter_at_m_star": res.ter})
    return ["gamma0_db", "m_star", "ter_at_m_star"], rows


def cmd_mc(args):
    wanted = [q.strip() for q in args.quantities.split(",") if q.strip()]
    bad = sorted(set(wanted) - set(MC_QUANTITIES))
    if bad or not wanted:
        raise UsageError(f"unknown quantities {bad}; choose from {', '.join(MC_QUANTITIES)}")
    c = _channel(args)
    cfg = DetectorConfig(args.u, args.lambda_n)
    node = NodeConfig(args.antennas, args.q)
    fusion = _fusion(args)
    mc = McConfig(args.trials, args.seed, args.mode, workers=args.workers)
    pf, pd = node_probabilities(c, cfg)
    met = fusion_metrics(*report_chain(c, cfg, node), fusion)
    jobs = {
        "p_f": (sls_false_alarm(pf, node.antennas_m), lambda: simulate_node(c, cfg, node, "H0", mc)),
        "p_d": (sls_detect(pd, node.antennas_m), lambda: simulate_node(c, cfg, node, "H1", mc)),
        "q_f": (met.q_f, lambda: simulate_css(c, cfg, node, fusion, "H0", mc)),
        "q_d": (met.q_d, lambda: simulate_css(c, cfg, node, fusion, "H1", mc)),
    }
    rows = []
    for name in wanted:
        analytic, run = jobs[name]
        est = run()
        rows.append({
            "quantity": name,
            "analytic": analytic,
            "empirical": est.estimate,
            "std_error": est.std_error,
            "z_score": score_z(est, analytic),
        })
    return ["quantity", "analytic", "empirical", "std_error", "z_score"], rows


COMMANDS = {
    "channels": cmd_channels,
    "roc": cmd_roc,
    "ter": cmd_ter,
    "optimal-k": cmd_optimal_k,
    "optimal-m": cmd_optimal_m,
    "mc": cmd_mc,
}


# --- output ------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest string that round-trips
    return str(v)


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render(cols, rows, fmt):
    if fmt == "json":
        data = [{c: _json_value(r.get(c)) for c in cols} for r in rows]
        return json.dumps(data, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cols, rows = COMMANDS[args.command](args)
        _emit(render(cols, rows, args.format), args.out)
    except ConvergenceError as exc:
        print(f"mgcss: no convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        # DomainError, unknown presets and usage errors are all ValueErrors
        print(f"mgcss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "mc" and any(abs(r["z_score"]) > Z_FAIL for r in rows):
        print(f"mgcss: Monte-Carlo deviation beyond {Z_FAIL:g} standard errors", file=sys.stderr)
        return EXIT_MC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
