"""Command-line experiment runner.

Every subcommand is a pure function of its flags (including ``--seed``) and
writes CSV or JSON stamped with the config and a digest of the code.

Exit codes: 0 all checks passed, 1 a scientific check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import _output
from .protocol import DEFAULT_FAMILY, IDENTITY_FAMILY, ProtocolParams, run_protocol

FAMILIES = {"default": DEFAULT_FAMILY, "identity": IDENTITY_FAMILY}


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def read_config(path: str) -> list[str]:
    """Turn a flat ``key=value`` file into command-line tokens.

    ``key=true`` becomes a bare flag; blank lines and ``#`` comments are
    skipped. Underscores in keys map to dashes.
    """
    tokens = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() == "true":
            tokens.append(flag)
        elif value.lower() != "false":
            tokens += [flag, value]
    return tokens


def _expand_config(argv: list[str]) -> list[str]:
    """Insert config-file tokens right after the subcommand; later flags win."""
    if "--config" not in argv:
        return argv
    k = argv.index("--config")
    if k + 1 >= len(argv):
        raise UsageError("--config needs a path")
    rest = argv[:k] + argv[k + 2:]
    return rest[:1] + read_config(argv[k + 1]) + rest[1:]


def _write(args, command: str, rows: list[dict], fields: list[str], summary: dict) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    meta = _output.metadata(command, config)
    if args.format == "json":
        text = _output.render_json(meta, {"rows": rows, "summary": summary})
    else:
        text = _output.render_csv(meta, rows, fields)
    _output.emit(text, args.out)


def _report(ok: bool, lines: list[str]) -> int:
    for line in lines:
        print(line, file=sys.stderr)
    return 0 if ok else 1


def cmd_teleport_check(args) -> int:
    from .teleport import BELL_ORDER, MISORDERED, OUTCOMES, identity_suite, teleport
    from .protocol import pair_state
    from .quantum import random_state

    rng = np.random.default_rng(args.seed)
    fam = DEFAULT_FAMILY
    order = MISORDERED if args.misordered_bell_basis else BELL_ORDER
    rows = identity_suite(fam.unitaries, fam.names, args.samples, rng, order)
    for r in rows:
        r["pass"] = r["min_fidelity"] >= 1 - 1e-10 and r["max_born_error"] <= 1e-12
    bad = [f"U={r['U']} i={r['i']} fidelity={r['min_fidelity']:.3e}" for r in rows if not r["pass"]]
    summary = {"failures": len(bad)}
    if args.trials:
        counts = np.zeros(4, dtype=int)
        for _ in range(args.trials):
            k = fam.sample(rng)
            rec = teleport(pair_state(fam.unitaries[k], 1), random_state(("1.3",), rng), rng, order=order)
            counts[OUTCOMES.index(rec.outcome)] += 1
        sigma = np.sqrt(args.trials * 0.25 * 0.75)
        z = np.abs(counts - args.trials / 4) / sigma
        summary.update(outcome_counts=counts.tolist(), max_z=float(z.max()))
        if z.max() > 4:
            bad.append(f"outcome frequencies off by {z.max():.2f} sigma")
    _write(args, "teleport-check", rows, ["U", "i", "min_fidelity", "max_born_error", "pass"], summary)
    return _report(not bad, bad or [f"teleport identity holds for {len(rows)} (U, i) pairs"])


def cmd_run_protocol(args) -> int:
    from .protocol import CHEATS

    if args.bit not in (0, 1):
        raise UsageError("--bit must be 0 or 1")
    if args.n < 1 or args.N < 1:
        raise UsageError("--n and --N must be positive")
    if args.cheat not in CHEATS:
        raise UsageError(f"--cheat must be one of {CHEATS}")
    params = ProtocolParams(args.n, args.N, DEFAULT_FAMILY, args.seed)
    tr = run_protocol(params, args.bit, cheat=args.cheat)
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    tr.messages[0]["metadata"] = _output.metadata("run-protocol", config)
    _output.emit(tr.to_jsonl(), args.out)
    v = tr.verdict
    expected = args.cheat == "none"
    ok = v.accepted == expected
    return _report(ok, [f"verdict: {'accept' if v.accepted else 'reject'} "
                        f"(acceptance probability {v.acceptance_probability:.6g}){'' if ok else ' UNEXPECTED'}"
                        + (f" [{v.reason}]" if v.reason else "")])


def cmd_adam_opt(args) -> int:
    from .adam import OptOptions, deferred_channel_bound, p_A, simulate_cheat

    fam = FAMILIES[args.family]
    opts = OptOptions(args.grid_axes, args.grid_angles, 10, args.restarts, args.phi_points, args.seed)
    rng = np.random.default_rng(args.seed)
    rep = p_A(fam, opts, rng)
    body = rep.to_json()
    msgs, ok = [f"p_A = {rep.value:.9f} ({rep.strategy})"], True
    agreement = {}
    for name, sv in rep.strategies.items():
        for r in sv.results:
            md = r.metadata
            if "restart_value" in md:
                gap = abs(md["grid_refined_value"] - md["restart_value"])
                agreement[f"{name} i={r.objective.i} b={r.objective.b}"] = gap
                if gap > 1e-3:
                    ok = False
                    msgs.append(f"{name}: search methods disagree by {gap:.2e}")
    body["method_gaps"] = agreement
    if args.family == "default" and not rep.value < 1 - 1e-3:
        ok = False
        msgs.append("p_A is not below 1 - 1e-3")
    if args.family == "identity" and abs(rep.value - 1) > 1e-6:
        ok = False
        msgs.append("single-member family should give p_A = 1")
    if args.double_grid:
        rep2 = p_A(fam, opts.doubled(), np.random.default_rng(args.seed))
        body["doubled_grid_p_A"] = rep2.value
        if abs(rep2.value - rep.value) >= 1e-3:
            ok = False
            msgs.append(f"doubled grid moved p_A by {abs(rep2.value - rep.value):.2e}")
    if args.sdp:
        bounds = [deferred_channel_bound(fam, 1, b) for b in (0, 1)]
        body["channel_bound"] = max(bounds)
        msgs.append(f"bound over all announce-first channels: {max(bounds):.6f}")
    rows = []
    for name, sv in rep.strategies.items():
        row = {"strategy": name, "value": sv.value}
        if args.mc_trials:
            rate, se = simulate_cheat(sv, fam, args.mc_trials, rng)
            row.update(empirical=rate, band=4 * se)
            if abs(rate - sv.value) > 4 * max(se, 1 / args.mc_trials):
                ok = False
                msgs.append(f"{name}: simulated {rate:.4f} vs formula {sv.value:.4f}")
        rows.append(row)
    body["strategy_rows"] = rows
    if args.format == "json":
        meta = _output.metadata("adam-opt", {k: v for k, v in vars(args).items() if k not in ("func", "out")})
        _output.emit(_output.render_json(meta, body), args.out)
    else:
        _write(args, "adam-opt", rows, ["strategy", "value", "empirical", "band"], {})
    return _report(ok, msgs)


def cmd_babe_conceal(args) -> int:
    from .babe import concealment_table

    rng = np.random.default_rng(args.seed)
    strategies = [s for s in args.strategies.split(",") if s]
    for s in strategies:
        if s not in ("none", "single", "joint"):
            raise UsageError(f"unknown strategy {s!r}")
    rows = concealment_table(_ints(args.n), args.trials, rng, DEFAULT_FAMILY, strategies)
    bad = [f"n={r['n']} {r['strategy']}: rate {r['rate']:.4f} > bound {r['bound']:.4f} + {r['band']:.4f}"
           for r in rows if r["rate"] > r["bound"] + r["band"]]
    _write(args, "babe-conceal", rows, ["n", "strategy", "rate", "band", "bound", "exact", "trials"],
           {"violations": len(bad)})
    return _report(not bad, bad or [f"{len(rows)} rows within bound"])


def cmd_ensemble(args) -> int:
    from .ensemble import ensemble_grid, ensemble_row

    rng = np.random.default_rng(args.seed)
    grid = ensemble_grid(_ints(args.N), _floats(args.alpha), _floats(args.m_alpha), _floats(args.delta))
    rows, bad = [], []
    for p in grid:
        row = ensemble_row(p, args.trials, rng)
        row["exact_le_bound"] = row["exact"] <= row["bound"]
        if not row["exact_le_bound"]:
            bad.append(f"N={p.N} n={p.n} m={p.m} delta={p.delta}: exact {row['exact']:.4g} > bound {row['bound']:.4g}")
        if args.trials and abs(row["empirical"] - row["exact"]) > max(row["band"], 4 / args.trials):
            bad.append(f"N={p.N} n={p.n} m={p.m} delta={p.delta}: simulation off the exact sum")
        rows.append(row)
    fields = ["N", "n", "m", "delta", "alpha", "exact", "bound", "mean_field", "empirical", "band", "exact_le_bound"]
    _write(args, "ensemble", rows, fields, {"failures": len(bad)})
    return _report(not bad, bad or [f"{len(rows)} grid points pass"])


def cmd_game(args) -> int:
    from .game import GameParams, game_rows, history, markov_oracle

    rng = np.random.default_rng(args.seed)
    models = ["paper", "partitioned"] if args.model == "both" else [args.model]
    rows, bad, skipped = [], [], []
    for model in models:
        for a in _floats(args.p_a):
            for c in _floats(args.p_c):
                for d in _floats(args.p_d):
                    for n in _ints(args.n):
                        p = GameParams(a, c, d, n, args.n_c)
                        try:
                            block = game_rows(p, model, args.trials, rng)
                        except ValueError as e:
                            skipped.append(f"{model} p_a={a} p_c={c} p_d={d}: {e}")
                            continue
                        h = history(p, model)
                        drift = float(np.abs(h.sum(axis=1) - 1).max())
                        if drift > 1e-12:
                            bad.append(f"{model} {p}: masses drift {drift:.1e}")
                        by = {r["source"]: r for r in block}
                        if model == "paper" and c == 1 and args.n_c == 0:
                            gap = max(abs(by["closed"][k] - by["oracle"][k]) for k in ("P_C", "P_A", "P_D"))
                            if gap > 1e-12:
                                bad.append(f"{p}: closed form vs oracle {gap:.1e} at p_c = 1")
                        if "sim" in by:
                            o = markov_oracle(p, model)
                            for k in ("P_C", "P_A", "P_D"):
                                x = getattr(o, k)
                                band = 4 * max(np.sqrt(x * (1 - x) / args.trials), 1 / args.trials)
                                if abs(by["sim"][k] - x) > band:
                                    bad.append(f"{model} {p}: simulated {k} off the oracle")
                        rows += block
    fields = ["model", "p_a", "p_c", "p_d", "n", "P_C", "P_A", "P_D", "source"]
    _write(args, "game", rows, fields, {"failures": len(bad), "skipped": skipped})
    return _report(not bad, bad + skipped or [f"{len(rows)} rows consistent"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbc5", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help, trials=0):
        # Fresh flag objects per subcommand so defaults stay independent.
        p = sub.add_parser(name, help=help)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--trials", type=int, default=trials)
        p.set_defaults(func=func)
        return p

    p = command("teleport-check", cmd_teleport_check, "teleportation identity suite")
    p.add_argument("--samples", type=int, default=100, help="random inputs per (U, i)")
    p.add_argument("--misordered-bell-basis", action="store_true", help=argparse.SUPPRESS)

    p = command("run-protocol", cmd_run_protocol, "one protocol run, transcript as JSONL")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--bit", type=int, default=0)
    p.add_argument("--cheat", default="none", help="none | flip (claim the other bit)")

    p = command("adam-opt", cmd_adam_opt, "Adam's best cheating probability p_A")
    p.add_argument("--family", choices=sorted(FAMILIES), default="default")
    p.add_argument("--grid-axes", type=int, default=400)
    p.add_argument("--grid-angles", type=int, default=64)
    p.add_argument("--phi-points", type=int, default=200)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--double-grid", action="store_true", help="rerun at doubled resolution")
    p.add_argument("--sdp", action="store_true", help="also solve the channel bound (needs cvxpy)")
    p.add_argument("--mc-trials", type=int, default=0, help="protocol-level Monte Carlo per strategy")

    p = command("babe-conceal", cmd_babe_conceal, "entangling-Babe guess rates vs bound", 100_000)
    p.add_argument("--n", default="1,2,4,8", help="comma list")
    p.add_argument("--strategies", default="none,single", help="comma list of none, single, joint")

    p = command("ensemble", cmd_ensemble, "sample-and-test detection failure")
    p.add_argument("--N", default="100,1000")
    p.add_argument("--alpha", default="0.05,0.1,0.2")
    p.add_argument("--m-alpha", default="1,2,4")
    p.add_argument("--delta", default="0.1,0.5,0.9")

    p = command("game", cmd_game, "repeated checking game")
    p.add_argument("--p-a", default="0.1,0.5")
    p.add_argument("--p-c", default="0.01,0.2,1")
    p.add_argument("--p-d", default="0.1,0.5")
    p.add_argument("--n", default="1,10,100")
    p.add_argument("--n-c", type=int, default=0)
    p.add_argument("--model", choices=("paper", "partitioned", "both"), default="both")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
        return args.func(args)
    except UsageError as e:
        print(f"qbc5: error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:  # argparse exits with 2 on bad usage
        return int(e.code or 0)
    except ValueError as e:
        print(f"qbc5: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
