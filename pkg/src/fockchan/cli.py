"""``fockchan`` command line: Kraus export, coherent information, sweeps, verification.

Every option can also come from a flat JSON file (``--config``) or from an
environment variable ``FOCKCHAN_<OPTION>`` (e.g. ``FOCKCHAN_N_ADD=2``).
Precedence: command line, then environment, then config file.
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
from datetime import datetime, timezone

import numpy as np

from .channel import thermal_cutoff
from .errors import DomainError, ToleranceError, TruncationWarning
from .fock_core import DiagonalState, pats_state, state_from_json, thermal_state
from .info import SWEEP_KINDS, TruncationPolicy, coherent_information, sweep
from .kraus import DEFAULT_TOL, build_channel, check_kappa, completeness_defect, normalize_family

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2, 3
ENV_PREFIX = "FOCKCHAN_"

# Conjugator/amplifier pairs with kappa' = 1.5; inputs per row.
REFERENCE_ROWS = [
    (1, (0.6, 0.4)),
    (2, (0.4, 0.3, 0.3)),
    (3, (0.35, 0.35, 0.3)),
    (4, (0.35, 0.35, 0.3)),
    (5, (0.3, 0.3, 0.2, 0.2)),
]
REFERENCE_KAPPA = math.sqrt(1.5**2 - 1)


class UsageError(Exception):
    pass


# -- parsing helpers -----------------------------------------------------------

def parse_state(text: str):
    """``diag:p0,p1,..`` | ``fock:j`` | ``thermal:nbar`` | ``pats:nbar,k`` | JSON path."""
    kind, _, body = text.partition(":")
    try:
        if kind == "diag" and body:
            return DiagonalState(np.array([float(x) for x in body.split(",")]))
        if kind == "fock" and body:
            j = int(body)
            probs = np.zeros(j + 1)
            probs[j] = 1.0
            return DiagonalState(probs)
        if kind == "thermal" and body:
            nbar = float(body)
            return thermal_state(nbar, thermal_cutoff(nbar, 1e-12) + 1)
        if kind == "pats" and body:
            nbar, k = body.split(",")
            return _pats(float(nbar), int(k))
    except ValueError as exc:
        raise UsageError(f"bad input spec {text!r}: {exc}") from exc
    if os.path.exists(text):
        with open(text) as fh:
            return state_from_json(json.load(fh))
    raise UsageError(f"cannot parse input state {text!r}")


def _pats(nbar, k):
    dim = k + thermal_cutoff(nbar, 1e-12) + 2
    while True:
        with warnings.catch_warnings():
            warnings.simplefilter("error", TruncationWarning)
            try:
                return pats_state(nbar, k, dim, 1e-10)
            except TruncationWarning:
                dim *= 2


def parse_grid(text: str, integer: bool):
    """``a:b`` or ``a:b:step`` (inclusive) or a comma list."""
    conv = int if integer else float
    try:
        if ":" in text:
            parts = [conv(x) for x in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else conv(1)
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(count)]
        return [conv(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from exc


def _kappa(args) -> float:
    if args.kappa is not None and args.kappa_sq_minus_one is not None:
        raise UsageError("give either --kappa or --kappa-sq-minus-one, not both")
    if args.kappa_sq_minus_one is not None:
        if args.kappa_sq_minus_one < 0:
            raise DomainError("--kappa-sq-minus-one must be >= 0")
        return math.sqrt(args.kappa_sq_minus_one)
    if args.kappa is None:
        raise UsageError("--kappa or --kappa-sq-minus-one is required")
    return args.kappa


def _dims(text) -> tuple:
    return tuple(parse_grid(str(text), True))


def _bool(text) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# -- commands ------------------------------------------------------------------

def _emit(args, text: str):
    if args.output and args.output != "-":
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_kraus(args) -> int:
    family = normalize_family(args.family)
    kappa = _kappa(args)
    check_kappa(family, kappa)
    ch = build_channel(family, kappa, args.n_add, args.dim, args.dim_out, args.tol)
    doc = {"generated_at": _stamp(), **ch.to_json()}
    code = EXIT_OK
    if args.check:
        defect = completeness_defect(ch)
        limit = 1e-12 if family == "attenuator" else args.tol
        ok = defect <= limit
        doc["check"] = {"completeness_defect": defect, "limit": limit, "passed": ok}
        if not ok:
            code = EXIT_TOLERANCE
    _emit(args, _dump(doc))
    return code


def _cohinfo_row(family, kappa, n, state, policy, base):
    res = coherent_information((family, kappa, n), state, policy, base)
    row = {"family": family, "kappa": kappa, "n_add": n,
           "input": [float(p) for p in np.real(np.diagonal(np.atleast_2d(
               np.diag(state.probs) if isinstance(state, DiagonalState) else state.entries)))],
           **res.as_dict()}
    return row, res.flagged


def cmd_cohinfo(args) -> int:
    policy = TruncationPolicy(_dims(args.trunc), args.leakage_threshold)
    base = math.e if args.base_e else 2.0
    rows = []
    if args.table2:
        for n, probs in REFERENCE_ROWS:
            rows.append(_cohinfo_row("conjugator", REFERENCE_KAPPA, n,
                                     DiagonalState(np.array(probs)), policy, base))
    else:
        family = normalize_family(args.family)
        kappa = _kappa(args)
        check_kappa(family, kappa)
        if not args.input:
            raise UsageError("--input is required unless --table2 is given")
        rows.append(_cohinfo_row(family, kappa, args.n_add, parse_state(args.input),
                                 policy, base))
    flagged = [r for r, f in rows if f]
    if args.format == "csv":
        buf = io.StringIO()
        keys = ["family", "kappa", "n_add", "s_channel", "s_complement",
                "coherent_information", "leakage_channel", "leakage_complement",
                "dim_out", "flagged"]
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(keys)
        for r, _ in rows:
            w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
        _emit(args, buf.getvalue())
    else:
        _emit(args, _dump({"generated_at": _stamp(), "log_base": "e" if args.base_e else 2,
                           "truncation": list(policy.dims),
                           "leakage_threshold": policy.leakage_threshold,
                           "rows": [r for r, _ in rows]}))
    if flagged:
        for r in flagged:
            print(f"leakage above {policy.leakage_threshold:g}: {r['family']} "
                  f"kappa={r['kappa']:.6g} n={r['n_add']} "
                  f"channel={r['leakage_channel']:.3e} complement={r['leakage_complement']:.3e}",
                  file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_sweep(args) -> int:
    family = normalize_family(args.family)
    kappa = _kappa(args) if args.kind != "kappa" else 1.0
    if args.kind != "kappa":
        check_kappa(family, kappa)
    grid = parse_grid(args.grid, integer=args.kind != "kappa")
    if args.input:
        state = parse_state(args.input)
    else:
        state = DiagonalState(np.array([0.6, 0.4]))
    policy = TruncationPolicy(_dims(args.trunc), args.leakage_threshold)
    res = sweep(args.kind, grid, family=family, kappa=kappa, n_add=args.n_add, rho=state,
                policy=policy, base=math.e if args.base_e else 2.0, jobs=args.jobs)
    if args.format == "json":
        _emit(args, _dump({"generated_at": _stamp(), **res.to_json()}))
    else:
        _emit(args, res.to_csv())
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_verify

    suites = args.suite or list(SUITES)
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise UsageError(f"unknown suite(s) {bad}; choose from {list(SUITES)}")
    report = run_verify(suites, perturb=args.perturb_kraus, jobs=args.jobs)
    _emit(args, _dump({"generated_at": _stamp(), **report}))
    for name in report["failing_suites"]:
        print(f"FAILED suite: {name}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


# -- parser --------------------------------------------------------------------

def _channel_opts(p):
    p.add_argument("--family", default="conjugator",
                   help="attenuator|amplifier|conjugator (att, amp, conj)")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--kappa-sq-minus-one", type=float, default=None,
                   help="set kappa = sqrt(value); the conjugator paired with an "
                        "amplifier of gain k' uses value k'^2 - 1")
    p.add_argument("--n-add", type=int, default=0)


def _output_opts(p, formats=None):
    p.add_argument("-o", "--output", default=None, help="output path (default stdout)")
    if formats:
        p.add_argument("--format", choices=formats, default=formats[0])


def _info_opts(p):
    p.add_argument("--trunc", default="110",
                   help="output cutoff, or a schedule like 110,160 tried in order")
    p.add_argument("--leakage-threshold", type=float, default=1e-6)
    p.add_argument("--base-e", action="store_true", help="natural log instead of log2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockchan", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="flat JSON file of option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kraus", help="export a Kraus set as JSON")
    _channel_opts(p)
    p.add_argument("--dim", type=int, default=20, help="input truncation")
    p.add_argument("--dim-out", type=int, default=None)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--check", action="store_true", help="recompute the completeness defect")
    _output_opts(p)
    p.set_defaults(func=cmd_kraus)

    p = sub.add_parser("cohinfo", help="output entropies and coherent information")
    _channel_opts(p)
    p.add_argument("--input", default=None, help="diag:..|fock:j|thermal:nbar|pats:nbar,k|file")
    p.add_argument("--table2", action="store_true",
                   help="conjugator rows n=1..5 at kappa'=1.5")
    _info_opts(p)
    _output_opts(p, ["json", "csv"])
    p.set_defaults(func=cmd_cohinfo)

    p = sub.add_parser("sweep", help="coherent information along one parameter")
    _channel_opts(p)
    p.add_argument("--kind", choices=SWEEP_KINDS, required=False, default="n_add")
    p.add_argument("--grid", default="1:10", help="a:b[:step] inclusive, or a comma list")
    p.add_argument("--input", default=None)
    p.add_argument("--jobs", type=int, default=1)
    _info_opts(p)
    _output_opts(p, ["csv", "json"])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--suite", action="append", default=None,
                   help="run only this suite (repeatable)")
    p.add_argument("--perturb-kraus", type=float, default=0.0,
                   help="scale Kraus entries by 1+eps to inject a fault")
    p.add_argument("--jobs", type=int, default=1)
    _output_opts(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _coerce(action, value):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        return value if isinstance(value, bool) else _bool(value)
    if isinstance(action, argparse._AppendAction):
        if isinstance(value, list):
            return value
        return [v for v in str(value).split(",") if v]
    if action.type is not None and isinstance(value, str):
        return action.type(value)
    return value


def _apply_defaults(parser, argv, environ):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=environ.get(ENV_PREFIX + "CONFIG"))
    known, _ = pre.parse_known_args(argv)
    config = {}
    if known.config:
        try:
            with open(known.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {known.config!r}: {exc}") from exc
        if not isinstance(config, dict):
            raise UsageError("config file must hold a flat JSON object")
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in sub_action.choices.values():
        defaults = {}
        for action in sp._actions:
            dest = action.dest
            if dest in ("help", "func"):
                continue
            value = None
            for key in (dest, dest.replace("_", "-")):
                if key in config:
                    value = config[key]
            env = environ.get(ENV_PREFIX + dest.upper())
            if env is not None:
                value = env
            if value is not None:
                try:
                    defaults[dest] = _coerce(action, value)
                except (TypeError, ValueError) as exc:
                    raise UsageError(f"bad value for {dest}: {value!r}") from exc
                action.required = False
        sp.set_defaults(**defaults)


def main(argv=None, environ=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    environ = os.environ if environ is None else environ
    parser = build_parser()
    try:
        _apply_defaults(parser, argv, environ)
    except UsageError as exc:
        print(f"fockchan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (DomainError, UsageError) as exc:
        print(f"fockchan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ToleranceError as exc:
        print(f"fockchan: tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
