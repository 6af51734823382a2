"""Command-line entry point.

Exit status: 0 when every check passed, 1 when a check failed, 2 on usage
errors and exhausted budgets.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import embedding, fourier, games, harness, partition
from .errors import BudgetExceeded, ExactSearchInfeasible, GhzRepError, VerificationFailed
from .f2linalg import AffinePowerCoset, Subspace

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CONFIG_KEYS = {"seed": int, "budget": int, "threads": int, "format": str}


class CheckFailed(Exception):
    """A command ran to completion but one of its checks did not hold."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _jsonable(x):
    return harness._jsonable(x)


def load_game(spec: str) -> games.Game:
    if spec == "ghz":
        return games.ghz_game()
    if spec == "win":
        return games.trivial_game(True)
    if spec == "lose":
        return games.trivial_game(False)
    with open(spec) as fh:
        return games.loads(fh.read())


def random_coset(rng, n, codim=None):
    """Random ``w + V^3`` meeting the GHZ support, with ``V`` cut out by random constraints."""
    if codim is None:
        codim = int(rng.integers(0, n))
    rows = [int(v) for v in rng.integers(1, 1 << n, codim)] if n else []
    V = Subspace.full(n).kernel_of(rows)
    w1, w2 = (int(v) for v in rng.integers(0, 1 << n, 2))
    return AffinePowerCoset((w1, w2, w1 ^ w2), V)


def random_event(rng, n, density=0.75, min_prob=None, tries=1000):
    """Random product event; each factor keeps an element with probability ``density``."""
    for _ in range(tries):
        sets = tuple(set(np.nonzero(rng.random(1 << n) < density)[0].tolist()) for _ in range(3))
        E = partition.ProductEvent(n, sets)
        p = E.ghz_prob()
        if p > 0 and (min_prob is None or p >= min_prob):
            return E
    raise CheckFailed("no random event met the probability floor")


# --------------------------------------------------------------------------
# subcommands; each returns (payload, ok)


def cmd_value(args):
    G = load_game(args.game)
    if args.heuristic:
        v, f = games.heuristic_value_lower_bound(G, budget=args.evals, seed=args.seed)
        kind = "heuristic lower bound"
    else:
        v, f = games.exact_value(G, budget=args.budget, threads=args.threads)
        kind = "exact"
    return {"game": args.game, "kind": kind, "value": v, "witness": f.to_lists()}, True


def cmd_repvalue(args):
    G = load_game(args.game)
    Gn = G.repeat(args.n)
    v, f = games.exact_value(Gn, budget=args.budget, threads=args.threads)
    out = {"game": args.game, "n": args.n, "value": v, "witness": f.to_lists()}
    js = [args.j] if args.j else list(range(1, args.n + 1))
    out["coordinate_values"] = {j: games.coordinate_value(Gn, j, budget=args.budget, threads=args.threads) for j in js}
    ok = all(v <= cv for cv in out["coordinate_values"].values())
    if args.oracle:
        ov, _ = games.brute_force_value(Gn, budget=args.budget)
        out["oracle_value"] = ov
        ok = ok and ov == v
    return out, ok


def cmd_fourier_check(args):
    rng = np.random.default_rng(args.seed)
    fails, diffs = 0, 0
    for _ in range(args.trials):
        d = int(rng.integers(1, args.n + 1))
        masks = [rng.random(1 << d) < rng.random() for _ in range(3)]
        if not fourier.ghz_product_event_prob(d, *masks).agree:
            fails += 1
        if not fourier.prob_diff_bound_check(d, *masks)[2]:
            diffs += 1
    return {"trials": args.trials, "formula_mismatches": fails, "prob_diff_violations": diffs}, fails == 0 and diffs == 0


def cmd_embed_check(args):
    rng = np.random.default_rng(args.seed)
    certs, bad = [], 0
    for _ in range(args.trials):
        n = int(rng.integers(1, args.n + 1))
        W = random_coset(rng, n)
        coords = embedding.embeddable_coordinates(W)
        if len(coords) < n - W.space.codim:
            bad += 1
        for j in coords:
            c = embedding.verify_embedding(embedding.build_embedding(W, j), W)
            certs.append(c.to_dict())
    return {"trials": args.trials, "coverage_failures": bad, "certificates": len(certs), "sample": certs[:3]}, bad == 0


def cmd_partition(args):
    rng = np.random.default_rng(args.seed)
    E = random_event(rng, args.n, args.density)
    Pi, trace = partition.pseudorandom_partition(E, args.delta, args.m, budget=args.budget)
    out = trace.to_dict()
    out.update(n=args.n, event_prob=E.ghz_prob(), codim=Pi.codim)
    return out, trace.steps_ok and trace.codim_ok and trace.decrease_ok


def cmd_strategy_refine(args):
    rng = np.random.default_rng(args.seed)
    runs = []
    for _ in range(args.trials):
        W = random_coset(rng, args.n, codim=int(rng.integers(0, args.n)))
        f1 = rng.integers(0, 2, 1 << args.n)
        j = args.j if args.j else int(rng.integers(1, args.n + 1))
        r = partition.strategy_refinement(W, f1, args.delta, j, budget=args.budget)
        runs.append(r.to_dict())
    ok = all(r["checks"]["z_decrease"] and r["checks"]["z1"] and r["biases"][-1] <= args.delta for r in runs if r["biases"])
    return {"trials": args.trials, "runs": runs}, ok


def cmd_pseudo_hardness(args):
    rng = np.random.default_rng(args.seed)
    W = AffinePowerCoset.full(args.n)
    E = random_event(rng, args.n, args.density, min_prob=Fraction(1, 2))
    rep = harness.pseudo_hardness_check(W, E, args.j, args.delta, args.epsilon, budget=args.budget, threads=args.threads)
    return rep.to_dict(), not rep.violation


def cmd_criterion_sim(args):
    G = load_game(args.game)
    _, f = games.exact_value(G.repeat(args.n), budget=args.budget, threads=args.threads)
    tr = harness.criterion_simulate(G, args.n, f, args.rho, args.epsilon, J1=args.J1, budget=args.budget)
    return tr, True


def cmd_demo(args):
    rng = np.random.default_rng(args.seed)
    E = random_event(rng, args.n, args.density)
    rep = harness.main_theorem_demo(args.n, E, args.delta, args.m, args.epsilon, budget=args.budget)
    return rep.to_dict(), True


def cmd_selftest(args):
    res = harness.selftest(args.seed, args.trials)
    return {"checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in res]}, all(ok for _, ok, _ in res)


# --------------------------------------------------------------------------
# output


def _flatten(prefix, x, rows):
    if isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(x, list) and x and isinstance(x[0], (dict, list)):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append([prefix, json.dumps(x) if isinstance(x, list) else x])


def render(payload, fmt: str) -> str:
    buf = io.StringIO()
    if isinstance(payload, harness.CriterionTrace):
        if fmt == "csv":
            csv.writer(buf, lineterminator="\n").writerows(payload.csv_rows())
            return buf.getvalue()
        payload = payload.to_dict()
    payload = _jsonable(payload)
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    rows = [["key", "value"]]
    _flatten("", payload, rows)
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for randomized trials (default 0)")
    common.add_argument("--budget", type=int, default=None, help="enumeration budget (default 2^30)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=None, help="worker threads; THREADS in the environment is used when absent")
    common.add_argument("--config", default=None, help="INI file with a [ghzrep] section")

    p = argparse.ArgumentParser(prog="ghzrep", description="Exact checks for GHZ parallel repetition.", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help, parents=[common])
        sp.set_defaults(func=fn)
        return sp

    sp = add("value", cmd_value, "value of a game")
    sp.add_argument("--game", default="ghz", help="ghz, win, lose or a game JSON file")
    sp.add_argument("--heuristic", action="store_true")
    sp.add_argument("--evals", type=int, default=20000, help="evaluation budget of the heuristic search")

    sp = add("repvalue", cmd_repvalue, "value and coordinate values of the n-fold repetition")
    sp.add_argument("--game", default="ghz")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--j", type=int, default=None)
    sp.add_argument("--oracle", action="store_true", help="also run the unpruned brute-force search")

    sp = add("fourier-check", cmd_fourier_check, "GHZ product-event formula on random events")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--trials", type=int, default=100)

    sp = add("embed-check", cmd_embed_check, "local embeddings on random cosets")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--trials", type=int, default=20)

    sp = add("partition", cmd_partition, "pseudorandom partition of a random product event")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--density", type=float, default=0.75)

    sp = add("strategy-refine", cmd_strategy_refine, "strategy-dependent refinement on random instances")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--j", type=int, default=None)
    sp.add_argument("--trials", type=int, default=5)

    sp = add("pseudo-hardness", cmd_pseudo_hardness, "coordinate values under a random conditioned distribution")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--delta", type=float, default=0.5)
    sp.add_argument("--epsilon", type=float, default=0.5)
    sp.add_argument("--density", type=float, default=0.8)

    sp = add("criterion-sim", cmd_criterion_sim, "exact adaptive win process for the optimal strategy")
    sp.add_argument("--game", default="ghz")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--rho", type=_fraction, default=Fraction(1, 1 << 14))
    sp.add_argument("--epsilon", type=float, default=1 / 48)
    sp.add_argument("--J1", type=int, default=1)

    sp = add("demo", cmd_demo, "full pipeline on a random product event")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--epsilon", type=float, default=1 / 32)
    sp.add_argument("--density", type=float, default=0.8)

    sp = add("selftest", cmd_selftest, "seeded spot checks across all modules")
    sp.add_argument("--trials", type=int, default=20)
    return p


def _resolve(args, parser):
    conf = {}
    if args.config:
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            parser.error(f"cannot read config file {args.config}")
        if cp.has_section("ghzrep"):
            for key, typ in CONFIG_KEYS.items():
                if cp.has_option("ghzrep", key):
                    conf[key] = typ(cp.get("ghzrep", key))
    defaults = {"seed": 0, "budget": games.DEFAULT_STRATEGY_BUDGET, "threads": 1}
    defaults["format"] = "csv" if args.command == "criterion-sim" else "json"
    for key in ("seed", "budget", "format"):
        if getattr(args, key) is None:
            setattr(args, key, conf.get(key, defaults[key]))
    if args.threads is None:
        env = os.environ.get("THREADS")
        args.threads = int(env) if env else conf.get("threads", defaults["threads"])
    if args.threads < 1:
        parser.error("--threads must be at least 1")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _resolve(args, parser)
    try:
        payload, ok = args.func(args)
        code = EXIT_OK if ok else EXIT_FAIL
    except (BudgetExceeded, ExactSearchInfeasible) as exc:
        print(f"ghzrep: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VerificationFailed, CheckFailed) as exc:
        print(f"ghzrep: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (GhzRepError, ValueError, OSError) as exc:
        print(f"ghzrep: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(payload, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
