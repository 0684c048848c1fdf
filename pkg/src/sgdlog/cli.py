"""Command-line front end.

Exit status: 0 on success, 1 when the algorithm proves there is no answer
(NotAPower, NoSolution, NotMember; a JSON error object goes to stdout),
2 on malformed input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .dlog import find_rho, semigroup_dlog
from .errors import MalformedSpec, ModeUnavailable, NoSolution, NotAPower, NotMember
from .experiments import CSV_COLUMNS, SCHEMA_VERSION, ExperimentConfig, run_experiment
from .membership import constructive_membership
from .oracles import SimMode
from .semigroup import load_spec, make_handle, parse_word
from .shifted import ACCOUNTING, shifted_dlog

EPILOG = f"""\
element words: products of generator powers such as "g^2" or "g1^2*g2".
experiment CSV columns: {",".join(CSV_COLUMNS)}.
every JSON document carries "schema_version": {SCHEMA_VERSION}.
seed: --seed, else $SGDLOG_SEED, else 0.
"""


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SGDLOG_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise MalformedSpec(f"SGDLOG_SEED must be an integer, got {env!r}") from None


def _default_generator(h) -> str:
    return "g" if "g" in h.generators else "g1"


def _emit(doc: dict, out: str | None) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    text = json.dumps(doc, sort_keys=True)
    print(text)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _setup(args):
    h = make_handle(load_spec(args.spec))
    rng = np.random.default_rng(_seed(args))
    return h, rng, SimMode.parse(args.mode)


def cmd_rho(args) -> dict:
    h, rng, mode = _setup(args)
    g = parse_word(h, args.g or _default_generator(h))
    h.reset_meter()
    rho = find_rho(h, g, mode, rng)
    return {"t": rho.t, "r": rho.r, "order_bound": rho.N, "queries": h.meter.as_dict()}


def cmd_dlog(args) -> dict:
    h, rng, mode = _setup(args)
    g = parse_word(h, args.g or _default_generator(h))
    x = parse_word(h, args.x)
    h.reset_meter()
    a = semigroup_dlog(h, g, x, mode, rng)
    return {"a": a, "queries": h.meter.as_dict()}


def cmd_shifted(args) -> dict:
    h, rng, mode = _setup(args)
    g = parse_word(h, args.g or _default_generator(h))
    x = parse_word(h, args.x)
    y = parse_word(h, args.y)
    h.reset_meter()
    a = shifted_dlog(h, x, y, g, mode, rng, accounting=args.accounting)
    return {"a": a, "queries": h.meter.as_dict()}


def cmd_membership(args) -> dict:
    h, rng, mode = _setup(args)
    if args.generators:
        names = [n.strip() for n in args.generators.split(",")]
    else:
        names = sorted((n for n in h.generators if n != "g"), key=lambda s: int(s[1:]))
    gens = [h.generator(n.strip()) for n in names]
    x = parse_word(h, args.x)
    h.reset_meter()
    w = constructive_membership(h, x, gens, mode, rng, accounting=args.accounting, size=args.size)
    return {"generators": names, "a": list(w.a), "queries": h.meter.as_dict()}


def cmd_experiment(args) -> dict:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None or os.environ.get("SGDLOG_SEED") is not None:
        cfg = dataclasses.replace(cfg, seed=_seed(args))
    res = run_experiment(cfg, jobs=args.jobs)
    out_dir = args.out_dir or "."
    csv_path, json_path = res.write(out_dir)
    return {"csv": str(csv_path), "summary": str(json_path), **{k: v for k, v in res.summary.items()
                                                              if k.endswith("slope") or k == "success_rate"}}


def cmd_selftest(args) -> dict:
    from .acceptance import fast_subset

    results = fast_subset()
    for r in results:
        print(r.line(), file=sys.stderr)
    return {"passed": all(r.passed for r in results),
            "criteria": {str(r.number): r.passed for r in results}}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sgdlog",
        description="Simulated quantum algorithms for black-box semigroups.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", default="sampling", choices=[m.value for m in SimMode])
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="also write the JSON result here")
    common.add_argument("-v", "--verbose", action="count", default=0)

    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, fn, helptext, spec=True):
        sp = sub.add_parser(name, parents=[common], help=helptext, epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        if spec:
            sp.add_argument("--spec", required=True, help="semigroup spec JSON")
        sp.set_defaults(fn=fn)
        return sp

    sp = verb("rho", cmd_rho, "index and period of an element")
    sp.add_argument("--g", default=None, help="element word (default: the generator)")

    sp = verb("dlog", cmd_dlog, "least a >= 1 with g^a = x")
    sp.add_argument("--x", required=True)
    sp.add_argument("--g", default=None)

    sp = verb("shifted-dlog", cmd_shifted, "least a >= 1 with x = y g^a")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--g", default=None)
    sp.add_argument("--accounting", default="measured", choices=ACCOUNTING)

    sp = verb("membership", cmd_membership, "write x as g1^a1 ... gk^ak")
    sp.add_argument("--x", required=True)
    sp.add_argument("--generators", default=None, help="comma-separated names (default: g1..gk)")
    sp.add_argument("--accounting", default="measured", choices=ACCOUNTING)
    sp.add_argument("--size", type=int, default=None, help="|S| or a bound (default: order bound)")

    sp = verb("experiment", cmd_experiment, "run an experiment config", spec=False)
    sp.add_argument("--config", required=True)
    sp.add_argument("--out-dir", default=None)
    sp.add_argument("--jobs", type=int, default=1)

    verb("selftest", cmd_selftest, "fast subset of the acceptance checks", spec=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        doc = args.fn(args)
    except (NotAPower, NoSolution, NotMember) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)}, args.out)
        return 1
    except (MalformedSpec, ModeUnavailable, OSError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)}, None)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(doc, args.out)
    if args.verb == "selftest" and not doc["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
