"""Command-line front end: ``qcfsim <subcommand> ...``.

Every subcommand builds a plain dict and renders it as JSON (default), CSV
(curves) or a short text listing.  Exit codes: 0 success, 1 validation
failure, 2 usage error, 3 attack precondition failure, 4 attack unavailable.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import attacks, escrow, serialization
from .catalog import BlackBoxFlip, CatalogEntry, get_entry, helstrom_basis, protocol_ids
from .errors import (
    AdversaryError,
    AttackPreconditionError,
    AttackUnavailableError,
    ParameterError,
    ProtocolInvalidError,
    StrategyError,
)
from .gates import H
from .protocol import BiasStrategy, Party, run_honest, run_with_bias

DEFAULT_SEED = 0xC01F11B
EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_PRECONDITION, EXIT_UNAVAILABLE = 0, 1, 2, 3, 4
SEARCHED_PAIR = "searched-pair"

STEAL_BASES = {
    "helstrom": helstrom_basis,
    "computational": lambda: np.eye(2, dtype=complex),
    "hadamard": lambda: H.copy(),
}


class UsageError(Exception):
    pass


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Party):
        return v.value
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _render(data: dict, fmt: str) -> str:
    data = _jsonable(data)
    if fmt == "json":
        return serialization.dumps(data)
    lines = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}{k}.", v[k])
        else:
            lines.append(f"{prefix[:-1]}: {v}")

    walk("", data)
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    sys.stdout.write(text)


def _entry(args) -> CatalogEntry:
    if getattr(args, "protocol_file", None):
        return CatalogEntry(serialization.protocol_from_dict(serialization.load(args.protocol_file)))
    try:
        return get_entry(args.protocol)
    except StrategyError as exc:
        raise UsageError(str(exc)) from exc


def _witness_path(args, pid):
    return getattr(args, "witness", None) or f"witness-{pid}.json"


# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    entry = _entry(args)
    try:
        run = run_honest(entry.protocol)
    except ProtocolInvalidError as exc:
        data = {"protocol": entry.protocol.name, "valid": False, "violated": exc.clause, "detail": exc.detail}
        _emit(_render(data, args.format), args.output)
        sys.stderr.write(f"invalid protocol: {exc.clause}\n")
        return EXIT_INVALID
    data = {"valid": True, **run.to_dict()}
    _emit(_render(data, args.format), args.output)
    return EXIT_OK


def _strategy_pair(args, entry):
    ids = list(args.strategies)
    party = Party(args.party) if args.party else None
    if ids == [SEARCHED_PAIR]:
        path = _witness_path(args, entry.protocol.name)
        if not Path(path).exists():
            raise UsageError(f"no persisted witness at {path}; run delta-a --mode search first")
        name, low, high = serialization.witness_from_dict(serialization.load(path))
        if name != entry.protocol.name:
            raise UsageError(f"witness {path} belongs to {name}, not {entry.protocol.name}")
        return low, high
    if len(ids) != 2:
        raise UsageError("attack needs two strategy ids (or the single id 'searched-pair')")
    named = [entry.strategies[i] for i in ids if i in entry.strategies]
    default = party or (named[0].party if named else Party.ALICE)
    return tuple(entry.strategy(i, default) for i in ids)


def cmd_attack(args) -> int:
    entry = _entry(args)
    s1, s2 = _strategy_pair(args, entry)
    if s1.party is not s2.party:
        raise UsageError("both strategies must belong to the same party")
    p = entry.protocol
    honest = run_honest(p)
    if run_with_bias(p, s1, honest).epsilon > run_with_bias(p, s2, honest).epsilon:
        s1, s2 = s2, s1
    kw = {"lose_outcome": args.lose_outcome}
    if s1.party is Party.BOB and not args.no_povm:
        report = attacks.bob_side_attack(p, s1, s2, args.a, **kw).report
    else:
        report = attacks.SuperposedAttack(p, s1, s2, args.a, **kw).report()
    _emit(_render(report.to_dict(), args.format), args.output)
    return EXIT_OK


def _grid(lo, hi, step):
    n = int(round((hi - lo) / step))
    if n < 0 or abs(lo + n * step - hi) > 1e-9 * max(1.0, abs(step)):
        raise UsageError("the range must be a whole number of steps")
    return [lo + k * step for k in range(n + 1)]


def cmd_curves(args) -> int:
    if args.step <= 0 or not -0.5 <= args.eps_min <= args.eps_max <= 0.5:
        raise UsageError("need -1/2 <= eps-min <= eps-max <= 1/2 and step > 0")
    rows = attacks.bound_curves(_grid(args.eps_min, args.eps_max, args.step))
    if args.format == "json":
        data = {"format_version": serialization.FORMAT_VERSION, "columns": ["epsilon", "F_I", "F_II"], "rows": rows}
        _emit(_render(data, "json"), args.output)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "F_I", "F_II"])
    fmt = lambda v: "" if v is None else f"{v:.12g}"
    for e, f1, f2 in rows:
        w.writerow([fmt(e), fmt(f1), fmt(f2)])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_delta_a(args) -> int:
    party = Party(args.party)
    if args.protocol == "blackbox":
        res = attacks.delta_a(BlackBoxFlip())
    else:
        entry = _entry(args)
        if args.mode == "catalog":
            res = attacks.delta_a(entry.protocol, attacks.catalog_pairs(entry, party))
        else:
            family = attacks.SEARCH_FAMILIES.get(entry.protocol.name)
            if family is None:
                raise UsageError(f"no search family declared for {entry.protocol.name}")
            fam = family(entry.protocol)
            if fam.party is not party:
                raise UsageError(f"the search family for {entry.protocol.name} is {fam.party.value}'s")
            res = attacks.delta_a_search(entry.protocol, fam, seed=args.seed, restarts=args.restarts)
            if res.witness is not None:
                path = _witness_path(args, entry.protocol.name)
                serialization.save(serialization.witness_to_dict(
                    entry.protocol.name, res.delta_a, res.witness.s_low, res.witness.s_high, res.details), path)
                res.details["witness_file"] = str(path)
    data = {"protocol": args.protocol, "party": party.value, **res.to_dict()}
    _emit(_render(data, args.format), args.output)
    return EXIT_OK


def cmd_blackbox_bound(args) -> int:
    try:
        rep = attacks.blackbox_bound_check(args.a, args.eps_min, args.eps_max, args.samples, args.seed)
    except (ParameterError, AdversaryError) as exc:
        raise UsageError(str(exc)) from exc
    _emit(_render(rep.to_dict(), args.format), args.output)
    return EXIT_OK


def cmd_escrow(args) -> int:
    if args.protocol == "blackbox":
        flip = BlackBoxFlip(-0.25, 0.25)
    else:
        flip = _entry(args)
    kw = {"a_prime": args.a_prime}
    if args.scenario == "bob-steal":
        kw["steal_basis"] = STEAL_BASES[args.steal_basis]()
    report = escrow.SCENARIOS[args.scenario](flip, **kw)
    _emit(_render(report.to_dict(), args.format), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="also write the output to this file")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    report = argparse.ArgumentParser(add_help=False, parents=[common])
    report.add_argument("--format", choices=["json", "text"], default="json")

    ap = argparse.ArgumentParser(prog="qcfsim", description="Biased quantum coin-flip simulator and attack analyzer.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[report], help="honest-run validation")
    p.add_argument("protocol", nargs="?", choices=protocol_ids(), default=None)
    p.add_argument("--protocol-file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("attack", parents=[report], help="superposed-biasing attack report")
    p.add_argument("protocol")
    p.add_argument("strategies", nargs="+")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--party", choices=[q.value for q in Party], help="party for 'honest' ids")
    p.add_argument("--lose-outcome", type=int, choices=[0, 1], default=None,
                   help="override which outcome the cheater loses on")
    p.add_argument("--no-povm", action="store_true", help="Bob controls on |Phi(a)> directly")
    p.add_argument("--witness", help="witness file for 'searched-pair'")
    p.add_argument("--protocol-file")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("curves", parents=[common], help="fidelity bound curves (CSV)")
    p.add_argument("--eps-min", type=float, default=-0.5)
    p.add_argument("--eps-max", type=float, default=0.5)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("delta-a", parents=[report], help="largest zero-detection imbalance")
    p.add_argument("protocol")
    p.add_argument("--mode", choices=["catalog", "search"], default="catalog")
    p.add_argument("--party", choices=[q.value for q in Party], default="bob")
    p.add_argument("--restarts", type=int, default=6)
    p.add_argument("--witness", help="where search mode stores the witness pair")
    p.add_argument("--protocol-file")
    p.set_defaults(func=cmd_delta_a)

    p = sub.add_parser("blackbox-bound", parents=[report], help="Monte-Carlo check of the black-box bound")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--eps-min", type=float, required=True)
    p.add_argument("--eps-max", type=float, required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_blackbox_bound)

    p = sub.add_parser("escrow", parents=[report], help="bit-escrow attacks")
    p.add_argument("scenario", choices=sorted(escrow.SCENARIOS))
    p.add_argument("--protocol", default="protocol2", help="coin flip: a catalog id or 'blackbox'")
    p.add_argument("--a-prime", type=float, default=None)
    p.add_argument("--steal-basis", choices=sorted(STEAL_BASES), default="helstrom")
    p.set_defaults(func=cmd_escrow)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "validate" and not (args.protocol or args.protocol_file):
        ap.error("validate needs a protocol id or --protocol-file")
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (StrategyError, ParameterError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except ProtocolInvalidError as exc:
        sys.stderr.write(f"invalid protocol: {exc.clause}\n")
        return EXIT_INVALID
    except AttackPreconditionError as exc:
        sys.stderr.write(f"attack precondition failed: {exc}\n")
        return EXIT_PRECONDITION
    except AttackUnavailableError as exc:
        sys.stderr.write(f"attack unavailable: {exc}\n")
        return EXIT_UNAVAILABLE


if __name__ == "__main__":
    sys.exit(main())
