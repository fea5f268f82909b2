"""Command-line front end.

Every command writes CSV (the default) or JSON to stdout or ``--out``.
Exit status is 0 on success, 1 for bad usage or parameters, and 2 when a
verification suite finds a violation.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import cmt, crypto, games, jordan, qla, stress
from .errors import CmtError, UnknownFigure
from .report import Table, dumps, reports_to_csv

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2
FIGURES = ("fig1", "fig4", "fig6", "fig7")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for violations here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    seed: int = 42
    samples: int = 10000
    dims: list = field(default_factory=lambda: [2, 3, 4, 5, 6, 7, 8])
    tol: float = 1e-9
    out: str | None = None
    format: str = "csv"


def _dims(text: str) -> list[int]:
    """Parse ``2-8`` or ``2,3,5``."""
    try:
        if "-" in text:
            lo, hi = (int(t) for t in text.split("-", 1))
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}")


def _grid(text: str) -> np.ndarray:
    """Parse ``start:stop:num`` into an inclusive linspace."""
    try:
        a, b, k = text.split(":")
        return np.linspace(float(a), float(b), int(k))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:num, got {text!r}")


def _kv_table(name: str, d: dict) -> Table:
    rows = tuple((k, v) for k, v in d.items() if not isinstance(v, (list, dict)))
    return Table(name, ("key", "value"), rows)


# --------------------------------------------------------------------------
# commands; each returns (payload for JSON, Table for CSV, exit code)


def cmd_verify(cfg: RunConfig, args):
    theorems = stress.THEOREMS if args.theorem == "all" else (args.theorem,)
    if args.theorem == "all":
        suites = stress.acceptance_suites(cfg.samples, cfg.seed, cfg.dims)
        suites.append(stress.StressConfig("qubit_td", dims=tuple(cfg.dims), samples=cfg.samples, seed=cfg.seed))
        suites = [
            stress.StressConfig(s.theorem, s.n, s.S, s.dims, s.samples, s.seed, cfg.tol) for s in suites
        ]
    else:
        suites = [
            stress.StressConfig(t, args.n, args.S, tuple(cfg.dims), cfg.samples, cfg.seed, cfg.tol)
            for t in theorems
        ]
    reports = [stress.stress_verify(s) for s in suites]
    code = EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION
    payload = {"seed": cfg.seed, "reports": [r.to_json() for r in reports]}
    return payload, reports_to_csv(reports, cfg.seed), code


def cmd_table2(cfg: RunConfig, args):
    t = games.prior_bounds_table()
    return t.to_json(), t, EXIT_OK


def figure_table(which: str) -> Table:
    if which == "fig1":
        V = np.linspace(0.5, 1.0, 1001)
        rows = tuple(
            (v, float(cmt.tight_cmt_bound(2, v)), float(cmt.shi_bound(v)), float(cmt.unruh_bound(2, v)),
             float(cmt.chailloux_leverrier_bound(2, v)))
            for v in V
        )
        return Table("fig1", ("V", "ours", "shi", "unruh", "chailloux"), rows, {"n": 2})
    if which == "fig4":
        t = crypto.nogo_surface("qot", np.linspace(0, 0.5, 51), np.linspace(0, 0.5, 51))
        return Table("fig4", t.columns, t.rows, t.params, t.notes)
    if which == "fig6":
        t = crypto.qpq_diagonal(2, np.linspace(0, 0.04, 201))
        return Table("fig6", t.columns, t.rows, t.params, ("delta = eps_a = eps",))
    if which == "fig7":
        slope_909 = math.log(0.75) / 3.0
        slope_853 = math.log(math.cos(math.pi / 8) ** 2)
        rows = tuple(
            (m, games.log_chsh_upper_m(2, 2, m), games.log_chsh_upper_asymptotic(2, 2, m), m * slope_909, m * slope_853)
            for m in range(1, 121)
        )
        return Table(
            "fig7",
            ("m", "ln_analytical", "ln_asymptotic", "ln_0909m", "ln_0853m"),
            rows,
            {"p": 2, "q": 2},
            ("0909m uses (3/4)^(1/3) per round; 0853m uses cos^2(pi/8) per round",),
        )
    raise UnknownFigure(f"unknown figure {which!r}; choose from {', '.join(FIGURES)}")


def cmd_figdata(cfg: RunConfig, args):
    t = figure_table(args.which)
    return t.to_json(), t, EXIT_OK


def cmd_extremal(cfg: RunConfig, args):
    if args.v is None:
        raise UsageError("--v is required")
    if args.f is not None:
        w = cmt.construct_fidelity_extremal(args.v, args.f)
    else:
        w = cmt.construct_tight_extremal(args.n, args.v)
    d = w.to_json()
    return d, _kv_table("extremal", d), EXIT_OK


def cmd_jordan(cfg: RunConfig, args):
    try:
        with open(args.file) as fh:
            data = json.load(fh)
        P0 = qla.matrix_from_json(data["P0"])
        P1 = qla.matrix_from_json(data["P1"])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read projector pair from {args.file}: {exc}")
    blocks = jordan.jordan_decompose(P0, P1)
    out = {
        "dim": int(P0.shape[0]),
        "residual": jordan.reconstruction_residual(blocks, P0, P1),
        "blocks": [b.to_json() for b in blocks],
    }
    rows = [(j, b.kind, b.principal_angle, b.p0_rank, b.p1_rank, None) for j, b in enumerate(blocks)]
    if "sigma0" in data and "sigma1" in data:
        tr = jordan.reduce_pair(P0, P1, qla.matrix_from_json(data["sigma0"]), qla.matrix_from_json(data["sigma1"]))
        weights = [s.p for s in tr.per_block]
        out["blocks"] = [b.to_json(w) for b, w in zip(blocks, weights)]
        out["stages"] = {
            k: {"V": s.V, "E": s.E, "delta": s.delta}
            for k, s in [("original", tr.original), ("pinched", tr.pinched), ("extended", tr.extended),
                         ("symmetrized", tr.symmetrized)]
        }
        rows = [r[:5] + (w,) for r, w in zip(rows, weights)]
    t = Table("jordan", ("block", "kind", "principal_angle", "p0_rank", "p1_rank", "weight"), tuple(rows),
              {"dim": out["dim"]}, (f"residual {out['residual']!r}",))
    return out, t, EXIT_OK


def cmd_rbcplan(cfg: RunConfig, args):
    plan = crypto.rbc_plan(args.p, args.m, args.target)
    d = plan.to_json()
    return d, _kv_table("rbcplan", d), EXIT_OK


def cmd_nogo(cfg: RunConfig, args):
    if args.delta_grid is not None or args.eps_grid is not None:
        deltas = args.delta_grid if args.delta_grid is not None else np.array([args.delta])
        epss = args.eps_grid if args.eps_grid is not None else np.array([args.eps])
        t = crypto.nogo_surface(args.primitive, deltas, epss, args.n)
        return t.to_json(), t, EXIT_OK
    pt = crypto.nogo_point(args.primitive, args.delta, args.eps, args.n)
    d = {**pt.inputs, "ours_raw": pt.ours, "ours_clamped": pt.ours_clamped, "prior": pt.prior, "winner": pt.winner}
    t = Table(f"nogo_{args.primitive}", tuple(d), (tuple(d.values()),))
    return d, t, EXIT_OK


def cmd_game(cfg: RunConfig, args):
    p, q, m = args.p, args.q, args.m
    d = {
        "p": p,
        "q": q,
        "m": m,
        "coupled_cap": games.coupled_value_chsh(p, q, m),
        "ln_upper": games.log_chsh_upper_m(p, q, m),
        "upper": games.chsh_upper_m(p, q, m),
        "ln_upper_asymptotic": games.log_chsh_upper_asymptotic(p, q, m),
    }
    if args.optimal:
        G = games.chsh_game(2, 2)
        S = games.optimal_chsh_strategy()
        w = games.evaluate_strategy(G, S)
        c = games.evaluate_coupled(G, games.induce_coupled(S))
        d.update(optimal_chsh_value=w, optimal_coupled_value=c, coupled_margin=c - cmt.tight_cmt_bound(2, w))
    return d, _kv_table("game", d), EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "table2": cmd_table2,
    "figdata": cmd_figdata,
    "extremal": cmd_extremal,
    "jordan": cmd_jordan,
    "rbcplan": cmd_rbcplan,
    "nogo": cmd_nogo,
    "game": cmd_game,
}


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    def dflt(v):
        return argparse.SUPPRESS if suppress else v

    p.add_argument("--seed", type=int, default=dflt(42), help="base RNG seed (default 42)")
    p.add_argument("--samples", type=int, default=dflt(10000), help="trials per suite (default 10000)")
    p.add_argument("--dims", type=_dims, default=dflt([2, 3, 4, 5, 6, 7, 8]), help="e.g. 2-8 or 2,4,8")
    p.add_argument("--tol", type=float, default=dflt(1e-9), help="violation slack (default 1e-9)")
    p.add_argument("--out", default=dflt(None), help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=dflt("csv"))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cmtkit", description="Consecutive-measurement bounds and derived security parameters.")
    _add_globals(ap, suppress=False)
    common = _Parser(add_help=False)
    _add_globals(common, suppress=True)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", parents=[common], help="run randomized bound checks")
    v.add_argument("--theorem", default="all", choices=("all",) + stress.THEOREMS)
    v.add_argument("--n", type=int, default=2)
    v.add_argument("--S", type=int, default=1)

    sub.add_parser("table2", parents=[common], help="CHSH_{2^l}(2) upper bounds by method")

    f = sub.add_parser("figdata", parents=[common], help="series behind the comparison figures")
    f.add_argument("which", help="one of " + ", ".join(FIGURES))

    e = sub.add_parser("extremal", parents=[common], help="equality-case construction")
    e.add_argument("--n", type=int, default=2)
    e.add_argument("--v", type=float)
    e.add_argument("--f", type=float, help="fidelity target; selects the two-state construction")

    j = sub.add_parser("jordan", parents=[common], help="Jordan blocks of a projector pair from a JSON file")
    j.add_argument("file")

    r = sub.add_parser("rbcplan", parents=[common], help="smallest q = 2^l meeting a sum-binding target")
    r.add_argument("--p", type=int, default=2)
    r.add_argument("--m", type=int, default=1)
    r.add_argument("--target", type=float, required=True)

    n = sub.add_parser("nogo", parents=[common], help="QOT/QHE/QPQ lower bounds at a point or on a grid")
    n.add_argument("primitive", choices=("qot", "qhe", "qpq"))
    n.add_argument("--delta", type=float, default=0.0)
    n.add_argument("--eps", "--epsa", "--epsd", dest="eps", type=float, default=0.0)
    n.add_argument("--n", type=int, default=2)
    n.add_argument("--delta-grid", type=_grid, help="start:stop:num")
    n.add_argument("--eps-grid", type=_grid, help="start:stop:num")

    g = sub.add_parser("game", parents=[common], help="CHSH_q(p)^m bounds")
    g.add_argument("--p", type=int, default=2)
    g.add_argument("--q", type=int, default=2)
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--optimal", action="store_true", help="also evaluate the optimal CHSH_2(2) strategy")
    return ap


def _render(payload, table, fmt: str) -> str:
    if fmt == "json":
        return dumps(payload)
    return table if isinstance(table, str) else table.to_csv()


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        cfg = RunConfig(args.command, args.seed, args.samples, args.dims, args.tol, args.out, args.format)
        payload, table, code = COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"cmtkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CmtError as exc:
        print(f"cmtkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = _render(payload, table, cfg.format)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
