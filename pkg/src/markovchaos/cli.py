"""Batch front-end: ``markovchaos <command> --scenario file.json [--out dir]``.

Exit codes: 0 when every check passes, 1 when a mathematical assertion fails
(the report then carries the counterexample), 2 for invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Dict, Optional

from . import __version__
from .exactpoly import PolyParseError, parse_poly, rational
from .fourthmoment import (
    BoundViolation,
    central_moments,
    fourth_moment_bound,
    moment_statistic,
    printed_statistic_comparison,
    target_from_dict,
)
from .montecarlo import (
    Experiment,
    HomogeneousSumSpec,
    law_for,
    law_from_dict,
    run_experiment,
)
from .spectral import chaos_check, eigenvalue_of
from .structures import ProductStructure, moment
from .verify import run_all

SCHEMA_VERSION = 1
COMMANDS = ("verify", "chaos-check", "bounds", "criterion", "simulate")

# command -> (required fields, optional fields); "schema_version" and "command" are common
FIELDS: Dict[str, tuple] = {
    "verify": (set(), {"seed", "count"}),
    "chaos-check": ({"structure", "polynomial"}, set()),
    "bounds": ({"structure", "polynomial", "target"}, set()),
    "criterion": ({"target"}, {"moments", "structure", "polynomial"}),
    "simulate": ({"family", "n_grid", "sample_count", "seed", "target"},
                 {"structure", "laws", "chunk_size", "workers"}),
}
FAMILY_FIELDS = {"kind", "degree", "table", "polynomial"}


class InputError(Exception):
    pass


class MathFailure(Exception):
    def __init__(self, report: dict):
        super().__init__("mathematical assertion failed")
        self.report = report


# ---------------------------------------------------------------------------
# Scenario validation
# ---------------------------------------------------------------------------

def load_scenario(path: str, command: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return validate_scenario(data, command)


def validate_scenario(data, command: str) -> dict:
    if not isinstance(data, dict):
        raise InputError("scenario must be a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {data.get('schema_version')!r}; expected {SCHEMA_VERSION}")
    if data.get("command", command) != command:
        raise InputError(f"scenario is for {data['command']!r}, not {command!r}")
    required, optional = FIELDS[command]
    body = {k: v for k, v in data.items() if k not in ("schema_version", "command")}
    unknown = set(body) - required - optional
    if unknown:
        raise InputError(f"unknown fields: {sorted(unknown)}")
    missing = required - set(body)
    if missing:
        raise InputError(f"missing fields: {sorted(missing)}")
    return body


def _int(value, name: str, lo: int = 0, hi: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < lo or (hi is not None and value >= hi):
        raise InputError(f"{name} must be an integer in [{lo}, {hi if hi is not None else 'inf'})")
    return value


def _structure(body: dict) -> ProductStructure:
    try:
        return ProductStructure.from_spec(body["structure"])
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"structure: {exc}") from exc


def _poly(text, dim: int):
    if not isinstance(text, str):
        raise InputError("polynomial must be a string")
    try:
        return parse_poly(text, dim)
    except PolyParseError as exc:
        raise InputError(f"polynomial: {exc}") from exc
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"polynomial: {exc}") from exc


def _target(body: dict):
    try:
        return target_from_dict(body["target"])
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"target: {exc}") from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_verify(body: dict, seed: Optional[int]) -> dict:
    s = _int(body.get("seed", 0), "seed", 0, 2 ** 64) if seed is None else seed
    count = _int(body.get("count", 100), "count", 1)
    report = run_all(s, count)
    if not report["passed"]:
        raise MathFailure(report)
    return report


def cmd_chaos_check(body: dict, seed) -> dict:
    S = _structure(body)
    X = _poly(body["polynomial"], S.dim)
    if X.is_zero() or eigenvalue_of(S, X) is None:
        raise InputError("polynomial is not an eigenfunction of the structure")
    rep = chaos_check(S, X)
    out = {"structure": S.to_spec(), "polynomial": X.to_text(), **rep.to_dict()}
    if not rep.is_chaotic:
        raise MathFailure(out)
    return out


def cmd_bounds(body: dict, seed) -> dict:
    S = _structure(body)
    X = _poly(body["polynomial"], S.dim)
    t = _target(body)
    try:
        result = fourth_moment_bound(S, X, t)
    except BoundViolation as exc:
        raise MathFailure({"structure": S.to_spec(), "polynomial": X.to_text(), **exc.result.to_dict()})
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return {"structure": S.to_spec(), "polynomial": X.to_text(), **result.to_dict()}


def cmd_criterion(body: dict, seed) -> dict:
    t = _target(body)
    has_moments = "moments" in body
    has_poly = "polynomial" in body or "structure" in body
    if has_moments == has_poly:
        raise InputError("give either moments or structure + polynomial")
    out = {"target": t.to_dict()}
    if has_moments:
        raw = body["moments"]
        if not isinstance(raw, dict):
            raise InputError("moments must be an object like {\"2\": \"1\", \"4\": \"3\"}")
        try:
            m = {int(k): rational(v) for k, v in raw.items()}
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(f"moments: {exc}") from exc
        if not set(m) <= {1, 2, 3, 4}:
            raise InputError("moments keys must be among 1..4")
        m.setdefault(1, rational(0))
    else:
        if "polynomial" not in body or "structure" not in body:
            raise InputError("structure and polynomial must be given together")
        S = _structure(body)
        X = _poly(body["polynomial"], S.dim)
        m = {k: moment(S, X, k) for k in range(1, 5)}
        out.update(structure=S.to_spec(), polynomial=X.to_text())
    try:
        stat = moment_statistic(t, moments=m)
        cmp = printed_statistic_comparison(t, m)
    except (KeyError, ValueError) as exc:
        raise InputError(f"moments: {exc}") from exc
    exact = central_moments(t)
    out.update(
        moments={f"m{k}": str(v) for k, v in sorted(m.items())},
        statistic=str(stat),
        printed_statistic=str(cmp.printed),
        printed_scale=str(cmp.scale),
        printed_agrees=cmp.agree,
        target_moments={f"m{k}": str(v) for k, v in sorted(exact.items())},
        matches_target=all(m.get(k, 0) == v for k, v in exact.items()),
    )
    return out


def _family(entry) -> HomogeneousSumSpec:
    if not isinstance(entry, dict):
        raise InputError("family must be an object")
    unknown = set(entry) - FAMILY_FIELDS
    if unknown:
        raise InputError(f"unknown family fields: {sorted(unknown)}")
    try:
        kind = entry.get("kind")
        degree = _int(entry.get("degree", 2), "degree", 1)
        table = entry.get("table")
        if table is not None:
            table = tuple((tuple(row["index"]), float(row["coefficient"])) for row in table)
        poly = entry.get("polynomial")
        if poly is not None:
            poly = _poly(poly, None)
        return HomogeneousSumSpec(kind, degree, table, poly)
    except (KeyError, TypeError) as exc:
        raise InputError(f"family: malformed entry ({exc})") from exc
    except ValueError as exc:
        raise InputError(f"family: {exc}") from exc


def build_experiment(body: dict, seed: Optional[int]) -> Experiment:
    if ("structure" in body) == ("laws" in body):
        raise InputError("give exactly one of structure or laws")
    if "structure" in body:
        laws = tuple(law_for(c) for c in _structure(body).coords)
    else:
        if not isinstance(body["laws"], list) or not body["laws"]:
            raise InputError("laws must be a non-empty list")
        try:
            laws = tuple(law_from_dict(e) for e in body["laws"])
        except (ValueError, TypeError) as exc:
            raise InputError(f"laws: {exc}") from exc
    grid = body["n_grid"]
    if not isinstance(grid, list) or not grid:
        raise InputError("n_grid must be a non-empty list")
    grid = tuple(_int(n, "n_grid entry", 1) for n in grid)
    return Experiment(
        family=_family(body["family"]),
        laws=laws,
        n_grid=grid,
        sample_count=_int(body["sample_count"], "sample_count", 1),
        seed=_int(body["seed"], "seed", 0, 2 ** 64) if seed is None else seed,
        target=_target(body),
        chunk_size=_int(body.get("chunk_size", 2048), "chunk_size", 1),
        workers=_int(body.get("workers", 1), "workers", 1),
    )


def cmd_simulate(body: dict, seed: Optional[int]):
    exp = build_experiment(body, seed)
    report = run_experiment(exp)
    out = {
        "seed": exp.seed,
        "sample_count": exp.sample_count,
        "n_grid": list(exp.n_grid),
        "laws": [law.to_dict() for law in exp.laws],
        **report.to_dict(),
    }
    return out, report.to_csv()


HANDLERS = {
    "verify": cmd_verify,
    "chaos-check": cmd_chaos_check,
    "bounds": cmd_bounds,
    "criterion": cmd_criterion,
    "simulate": cmd_simulate,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="markovchaos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", help="scenario JSON file (verify may omit it)")
    parser.add_argument("--out", help="output directory; JSON goes to stdout when omitted")
    parser.add_argument("--seed", type=_u64, help="override the scenario seed")
    parser.add_argument("--format", choices=("json", "csv", "both"), default="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0

    try:
        if args.format != "json" and args.command != "simulate":
            raise InputError("csv output is only available for simulate")
        if args.scenario is None:
            if args.command != "verify":
                raise InputError("--scenario is required")
            body = {}
        else:
            body = load_scenario(args.scenario, args.command)
        if args.out is not None and not os.path.isdir(args.out):
            os.makedirs(args.out, exist_ok=True)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    status = 0
    csv_text = None
    try:
        result = HANDLERS[args.command](body, args.seed)
        if isinstance(result, tuple):
            result, csv_text = result
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MathFailure as exc:
        result, status = exc.report, 1

    report = {"schema_version": SCHEMA_VERSION, "command": args.command, "status": "fail" if status else "ok",
              **result}
    json_text = json.dumps(report, indent=2) + "\n"
    stem = args.command.replace("-", "_")
    if args.out is None:
        sys.stdout.write(csv_text if args.format == "csv" else json_text)
    else:
        if args.format in ("json", "both"):
            atomic_write(os.path.join(args.out, f"{stem}.json"), json_text)
        if args.format in ("csv", "both"):
            atomic_write(os.path.join(args.out, f"{stem}.csv"), csv_text)
    if status:
        print("error: a mathematical check failed; see the report for the counterexample", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
