"""Command line front end.

    frobkit <verify|conjugate|invert|pencil|oracle> <structure-file>
            [--json OUT] [--samples N] [--seed S] [--check a,b,...]

Structure files are JSON with rationals written as strings; the bundled
examples can be named directly (e.g. `frobkit verify charge_minus_one`).
Reports are byte-deterministic for fixed input and seed: timing never enters
the serialized output.  Exit codes: 0 all checks pass, 1 a check failed,
2 the command does not apply to the structure, 3 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import data as bundled
from .conjugate import (
    InapplicableError,
    conjugate_pencil,
    conjugate_potential,
    inversion_symmetry,
    involution_check,
    potential_equality_check,
)
from .expr import ParseError, equals_mod_quadratic, format_expr
from .frobenius import (
    CheckResult,
    FrobeniusSpec,
    SpecError,
    assemble_qfpm,
    degree_duality,
    make_spec,
    quasihomogeneity_check,
    regularity,
)
from .oracle import check_zeros, collect_residuals

__version__ = "0.1.0"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INAPPLICABLE = 2
EXIT_INPUT_ERROR = 3

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_SPEC_KEYS = {"name", "rank", "charge", "degrees", "euler_constant_parts",
              "metric", "potential", "variables"}


class SpecFileError(ValueError):
    """The structure file does not validate."""


def _fraction_field(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise SpecFileError(f"{where}: rationals must be strings like \"2/3\" (or integers)")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as err:
        raise SpecFileError(f"{where}: {err}") from err


def load_spec(path_or_name: str | Path) -> FrobeniusSpec:
    """Load and fully validate a structure file (or a bundled name)."""
    path = Path(path_or_name)
    if path.is_file():
        text = path.read_text("utf-8")
    elif _IDENT_RE.match(str(path_or_name)) and str(path_or_name) in bundled.bundled_names():
        text = bundled.bundled_text(str(path_or_name))
    else:
        raise SpecFileError(f"no such file or bundled structure: {path_or_name}")
    return parse_spec_text(text, source=str(path_or_name))


def parse_spec_text(text: str, source: str = "<string>") -> FrobeniusSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecFileError(f"{source}: not valid JSON ({err})") from err
    if not isinstance(raw, dict):
        raise SpecFileError(f"{source}: expected a JSON object")
    unknown = set(raw) - _SPEC_KEYS
    if unknown:
        raise SpecFileError(f"{source}: unknown keys {sorted(unknown)}")
    for key in ("rank", "charge", "degrees", "potential", "variables"):
        if key not in raw:
            raise SpecFileError(f"{source}: missing key {key!r}")
    rank = raw["rank"]
    if not isinstance(rank, int) or isinstance(rank, bool):
        raise SpecFileError(f"{source}: rank must be an integer")
    if rank < 2:
        raise SpecFileError(f"{source}: rank must be at least 2")
    variables = raw["variables"]
    if (not isinstance(variables, list) or len(variables) != rank
            or len(set(variables)) != rank):
        raise SpecFileError(f"{source}: variables must be {rank} distinct names")
    for v in variables:
        if not isinstance(v, str) or not _IDENT_RE.match(v) or v == "log":
            raise SpecFileError(f"{source}: bad variable name {v!r}")
    degrees = raw["degrees"]
    if not isinstance(degrees, list) or len(degrees) != rank:
        raise SpecFileError(f"{source}: degrees must be a list of {rank} rationals")
    charge = _fraction_field(raw["charge"], f"{source}: charge")
    degrees = [_fraction_field(x, f"{source}: degrees") for x in degrees]
    consts = raw.get("euler_constant_parts", [])
    if consts:
        if not isinstance(consts, list) or len(consts) != rank:
            raise SpecFileError(f"{source}: euler_constant_parts must have {rank} entries")
        consts = [_fraction_field(x, f"{source}: euler_constant_parts") for x in consts]
    metric = raw.get("metric")
    if metric is not None:
        if (not isinstance(metric, list) or len(metric) != rank
                or any(not isinstance(r, list) or len(r) != rank for r in metric)):
            raise SpecFileError(f"{source}: metric must be a {rank}x{rank} matrix")
        metric = [[_fraction_field(x, f"{source}: metric") for x in row] for row in metric]
    if not isinstance(raw["potential"], str):
        raise SpecFileError(f"{source}: potential must be an expression string")
    try:
        return make_spec(
            rank=rank,
            charge=charge,
            degrees=degrees,
            potential=raw["potential"],
            variables=variables,
            euler_consts=consts,
            metric=metric,
            name=raw.get("name", Path(source).stem),
        )
    except ParseError as err:
        raise SpecFileError(f"{source}: potential does not parse: {err}") from err
    except SpecError as err:
        raise SpecFileError(f"{source}: {err}") from err


# -- reports --------------------------------------------------------------------


@dataclass
class Report:
    command: str
    spec_name: str
    digest: str
    seed: int
    checks: list[CheckResult] = field(default_factory=list)
    inapplicable_reason: str = ""
    elapsed: float = 0.0  # informational only; never serialized

    @property
    def status(self) -> str:
        if self.inapplicable_reason:
            return "inapplicable"
        if any(c.ok is False for c in self.checks):
            return "fail"
        return "pass"

    @property
    def exit_code(self) -> int:
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL,
                "inapplicable": EXIT_INAPPLICABLE}[self.status]

    def add(self, check: CheckResult):
        self.checks.append(check)

    def extend(self, checks: dict[str, CheckResult]):
        for c in checks.values():
            self.checks.append(c)


def emit_report(report: Report, fmt: str = "text") -> bytes:
    if fmt == "json":
        payload = {
            "status": report.status,
            "command": report.command,
            "checks": [
                {"name": c.name, "status": c.status}
                | ({"witness": c.witness} if c.witness else {})
                for c in report.checks
            ],
            "meta": {
                "version": __version__,
                "input": report.spec_name,
                "digest": report.digest,
                "seed": report.seed,
            },
        }
        if report.inapplicable_reason:
            payload["reason"] = report.inapplicable_reason
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()
    lines = [f"frobkit {report.command} {report.spec_name}"]
    if report.inapplicable_reason:
        lines.append(f"inapplicable: {report.inapplicable_reason}")
    for c in report.checks:
        dots = "." * max(2, 34 - len(c.name))
        suffix = f"  [{c.witness}]" if c.witness else ""
        lines.append(f"check {c.name} {dots} {c.status}{suffix}")
    lines.append(f"status: {report.status}")
    return ("\n".join(lines) + "\n").encode()


# -- pipelines -------------------------------------------------------------------


def _verify_checks(spec: FrobeniusSpec) -> dict[str, CheckResult]:
    bundle = assemble_qfpm(spec)
    checks = dict(bundle.checks)
    reg = regularity(bundle)
    witness = "regular" if reg.regular else "singular"
    if reg.diagonal is not None:
        witness += " R = diag(" + ", ".join(str(x) for x in reg.diagonal) + ")"
    if reg.note:
        witness += "; " + reg.note
    checks["regularity"] = CheckResult("regularity", True, witness)
    dd = degree_duality(spec)
    checks["degree_duality"] = CheckResult(
        "degree_duality", dd.ok,
        "" if dd.ok else "violations " + "; ".join(
            f"d{i}+d{j} = {v}" for i, j, v in dd.violations))
    return checks


def run(command: str, spec: FrobeniusSpec, *, samples: int = 20, seed: int = 0,
        checks: list[str] | None = None) -> Report:
    """Run one pipeline and assemble its report."""
    digest = hashlib.sha256(
        json.dumps(_spec_payload(spec), sort_keys=True).encode()
    ).hexdigest()
    report = Report(command=command, spec_name=spec.name or "structure",
                    digest=digest, seed=seed)
    start = time.monotonic()
    try:
        if command == "verify":
            report.extend(_verify_checks(spec))
        elif command == "pencil":
            bundle = assemble_qfpm(spec)
            for name in ("flat_metric", "wdvv", "pencil"):
                if name in bundle.checks:
                    report.add(bundle.checks[name])
        elif command == "conjugate":
            _run_conjugate(spec, report)
        elif command == "invert":
            _run_invert(spec, report)
        elif command == "oracle":
            _run_oracle(spec, report, samples, seed)
        else:
            raise ValueError(f"unknown command {command!r}")
    except InapplicableError as err:
        report.inapplicable_reason = str(err)
    report.elapsed = time.monotonic() - start
    if checks:
        wanted = set(checks)
        report.checks = [c for c in report.checks if c.name in wanted]
    return report


def _run_conjugate(spec: FrobeniusSpec, report: Report):
    if spec.charge == 1:
        raise InapplicableError("charge = 1")
    bundle = assemble_qfpm(spec, run_pencil=False)
    cd = conjugate_pencil(bundle)
    report.extend(cd.checks)
    qh = quasihomogeneity_check(spec.potential, spec.euler_field(), spec.charge)
    if not qh.strict:
        report.add(CheckResult(
            "conjugate_potential", None,
            "requires strict scaling; inversion is still available"))
        inv = inversion_symmetry(spec)
        eq = potential_equality_check(spec, inv=inv)
        report.add(CheckResult("equals_inversion_potential", None, eq.detail))
        return
    result = conjugate_potential(spec, bundle=bundle)
    report.extend(result.checks)
    report.add(CheckResult(
        "conjugate_potential", True,
        format_expr(result.potential, result.variables)))
    inv = inversion_symmetry(spec)
    eq = potential_equality_check(spec, conj=result, inv=inv)
    report.add(CheckResult(
        "equals_inversion_potential", eq.equal, eq.detail,
        [eq.residual, (result.potential, inv.potential)] if eq.equal else []))
    inv_rep = involution_check(spec, bundle=bundle)
    report.extend(inv_rep.checks)


def _run_invert(spec: FrobeniusSpec, report: Report):
    result = inversion_symmetry(spec)
    report.extend(result.checks)
    report.add(CheckResult(
        "inversion_potential", True,
        format_expr(result.potential, result.variables)))
    report.add(CheckResult(
        "inversion_degrees", True,
        "(" + ", ".join(str(d) for d in result.degrees) + f") charge {result.charge}"))
    inv2 = inversion_symmetry(result.spec(name=spec.name + "^"))
    ok, residual = equals_mod_quadratic(inv2.potential, spec.potential)
    report.add(CheckResult(
        "inversion_involution", ok,
        ("exact" if residual.is_zero else "up to a quadratic residual") if ok
        else "double inversion leaves a non-quadratic residual",
        [residual] if ok and residual.is_zero else []))


def _run_oracle(spec: FrobeniusSpec, report: Report, samples: int, seed: int):
    checks = _verify_checks(spec)
    qh = quasihomogeneity_check(spec.potential, spec.euler_field(), spec.charge)
    if spec.charge != 1:
        bundle = assemble_qfpm(spec, run_pencil=False)
        try:
            checks.update(
                {"conj_" + k: v for k, v in conjugate_pencil(bundle).checks.items()})
            if qh.strict:
                result = conjugate_potential(spec, bundle=bundle)
                checks.update({"conjpot_" + k: v for k, v in result.checks.items()})
        except InapplicableError:
            pass  # the verify-level zeros still get validated
    inv = inversion_symmetry(spec)
    checks.update({"inv_" + k: v for k, v in inv.checks.items()})
    residuals = collect_residuals(checks)
    outcome = check_zeros(residuals, samples=samples, seed=seed)
    ok = outcome.ok
    report.add(CheckResult(
        "oracle", ok,
        f"{outcome.identities} identities x {samples} exact points"
        + ("" if ok else f"; first failure at identity {outcome.failures[0][0]}")))


def _spec_payload(spec: FrobeniusSpec) -> dict:
    payload = {
        "name": spec.name,
        "rank": spec.rank,
        "charge": str(spec.charge),
        "degrees": [str(d) for d in spec.degrees],
        "variables": list(spec.variables),
        "potential": format_expr(spec.potential, spec.variables),
    }
    if any(spec.euler_consts):
        payload["euler_constant_parts"] = [str(x) for x in spec.euler_consts]
    if spec.metric is not None:
        payload["metric"] = [[str(x) for x in r] for r in spec.metric]
    return payload


def emit_spec(spec: FrobeniusSpec) -> bytes:
    """Canonical re-serialization of a validated structure (echo form)."""
    return (json.dumps(_spec_payload(spec), indent=2, sort_keys=True) + "\n").encode()


# -- entry point -------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="frobkit",
        description="Exact verification of WDVV potential structures and "
                    "their conjugate/inverted forms.",
    )
    parser.add_argument("command",
                        choices=["verify", "conjugate", "invert", "pencil", "oracle"])
    parser.add_argument("spec", help="structure file (JSON) or bundled name: "
                        + ", ".join(bundled.bundled_names()))
    parser.add_argument("--json", dest="json_out", metavar="OUT",
                        help="write the JSON report to OUT ('-' for stdout)")
    parser.add_argument("--samples", type=int, default=20,
                        help="oracle sample points per identity (default 20)")
    parser.add_argument("--seed", type=int, default=0,
                        help="oracle sampling seed (default 0)")
    parser.add_argument("--check", dest="checks", metavar="NAMES",
                        help="comma-separated subset of checks to report")
    parser.add_argument("--timing", action="store_true",
                        help="print elapsed time to stderr")
    parser.add_argument("--version", action="version", version=__version__)
    args = parser.parse_args(argv)

    try:
        spec = load_spec(args.spec)
    except SpecFileError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    wanted = args.checks.split(",") if args.checks else None
    report = run(args.command, spec, samples=args.samples, seed=args.seed,
                 checks=wanted)

    if args.json_out:
        payload = emit_report(report, "json")
        if args.json_out == "-":
            sys.stdout.buffer.write(payload)
        else:
            Path(args.json_out).write_bytes(payload)
            sys.stdout.buffer.write(emit_report(report, "text"))
    else:
        sys.stdout.buffer.write(emit_report(report, "text"))
    if args.timing:
        print(f"elapsed: {report.elapsed:.3f}s", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
