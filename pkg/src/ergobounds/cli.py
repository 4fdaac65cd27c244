"""Scenario-driven command line: validation, certificates, bound checks, reports.

A scenario is a single JSON document; numbers may be written as decimal
strings to avoid precision surprises.  Reports are deterministic for a fixed
scenario, seed, and package version: exit 0 when every requested check
passes, 1 when a bound or envelope is violated beyond tolerance, 2 on
invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    BOUND_KINDS,
    CERTIFICATE_REQUIREMENT,
    CSV_HEADER,
    verify_bound,
)
from .dobrushin import (
    UNIFORM_ASYMPTOTIC,
    delta_of_semigroup,
    mean_ergodicity_certificate,
    stability_certificate,
)
from .errors import (
    HypothesisNotMetError,
    InputError,
    PreconditionError,
    UnsupportedShapeError,
)
from .semigroup import Semigroup, evolve, make_semigroup, stationary_points
from .spaces import (
    Classical,
    DirectSum,
    LinearMap,
    Quantum,
    Role,
    StateSpace,
    hermitian_to_coords,
    operator_norm_estimate,
    rank_one_limit,
    validate_generator,
)
from .weights import (
    ClassWVerdict,
    is_in_class_w,
    verify_weighted_convergence,
    weight_from_spec,
)


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate; message carries a diagnostic."""


def _as_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ScenarioError(f"{field}: expected a number or decimal string, got {value!r}")
    try:
        return float(value)
    except ValueError as exc:
        raise ScenarioError(f"{field}: cannot parse {value!r} as a number") from exc


def _as_matrix(value, field: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{field}: expected a nested array of numbers")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ScenarioError(f"{field}[{i}]: expected an array row")
        rows.append([_as_float(v, f"{field}[{i}][{j}]") for j, v in enumerate(row)])
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ScenarioError(f"{field}: ragged rows {sorted(widths)}")
    return np.array(rows, dtype=float)


def _space_from_spec(spec, field: str = "space") -> StateSpace:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ScenarioError(f"{field}: expected a mapping with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "classical":
            return Classical(int(spec["n"]))
        if kind == "quantum":
            return Quantum(int(spec["d"]))
        if kind == "direct_sum":
            return DirectSum(int(spec["inner_dim"]), str(spec.get("inner_norm", "l2")))
    except (KeyError, TypeError, ValueError, InputError) as exc:
        raise ScenarioError(f"{field}: {exc}") from exc
    raise ScenarioError(f"{field}: unknown kind {kind!r}")


def default_start_point(space: StateSpace) -> np.ndarray:
    if isinstance(space, Classical):
        out = np.zeros(space.n)
        out[0] = 1.0
        return out
    if isinstance(space, DirectSum):
        out = np.zeros(space.ambient_dim)
        out[0] = 1.0
        return out
    projector = np.zeros((space.d, space.d), dtype=complex)
    projector[0, 0] = 1.0
    return hermitian_to_coords(projector, space.d)


DEFAULT_TOLERANCES = {
    "validation": 1e-9,
    "verification": 1e-9,
    "margin": 1e-6,
}


@dataclass(frozen=True)
class Scenario:
    space: StateSpace
    generator: np.ndarray
    perturbed_generator: np.ndarray | None
    start_points: tuple[np.ndarray, ...]
    t_grid: tuple[float, ...]
    certificate_grid: tuple[float, ...]
    weight_specs: tuple[dict, ...]
    bounds: tuple[str, ...]
    tolerances: dict
    seed: int


def parse_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    known = {
        "space",
        "generator",
        "perturbed_generator",
        "start_points",
        "t_grid",
        "certificate_grid",
        "weights",
        "bounds",
        "tolerances",
        "seed",
    }
    for key in doc:
        if key not in known:
            raise ScenarioError(f"unknown scenario field {key!r}")
    if "space" not in doc or "generator" not in doc:
        raise ScenarioError("scenario needs 'space' and 'generator' fields")

    space = _space_from_spec(doc["space"])
    m = space.ambient_dim
    generator = _as_matrix(doc["generator"], "generator")
    if generator.shape != (m, m):
        raise ScenarioError(
            f"generator: shape {generator.shape} does not match ambient dimension {m}"
        )
    perturbed = None
    if doc.get("perturbed_generator") is not None:
        perturbed = _as_matrix(doc["perturbed_generator"], "perturbed_generator")
        if perturbed.shape != (m, m):
            raise ScenarioError(
                f"perturbed_generator: shape {perturbed.shape} does not match "
                f"ambient dimension {m}"
            )

    points = []
    for i, raw in enumerate(doc.get("start_points", [])):
        if not isinstance(raw, list) or len(raw) != m:
            raise ScenarioError(f"start_points[{i}]: expected a vector of length {m}")
        points.append(np.array([_as_float(v, f"start_points[{i}]") for v in raw]))
    if not points:
        points = [default_start_point(space)]

    t_grid = tuple(_as_float(v, "t_grid") for v in doc.get("t_grid", [1.0]))
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ScenarioError("t_grid must be sorted ascending")
    certificate_grid = tuple(
        _as_float(v, "certificate_grid") for v in doc.get("certificate_grid", t_grid)
    )

    bounds = tuple(doc.get("bounds", []))
    for kind in bounds:
        if kind not in BOUND_KINDS:
            raise ScenarioError(f"bounds: unknown identifier {kind!r}; catalog: {BOUND_KINDS}")

    weight_specs = tuple(doc.get("weights", []))
    for i, spec in enumerate(weight_specs):
        try:
            weight_from_spec(spec)
        except InputError as exc:
            raise ScenarioError(f"weights[{i}]: {exc}") from exc

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in doc.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ScenarioError(f"tolerances: unknown key {key!r}")
        tolerances[key] = _as_float(value, f"tolerances.{key}")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("seed must be an integer")

    return Scenario(
        space=space,
        generator=generator,
        perturbed_generator=perturbed,
        start_points=tuple(points),
        t_grid=t_grid,
        certificate_grid=certificate_grid,
        weight_specs=weight_specs,
        bounds=bounds,
        tolerances=tolerances,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Report assembly


def _space_echo(space: StateSpace) -> dict:
    if isinstance(space, Classical):
        return {"kind": "classical", "n": space.n}
    if isinstance(space, DirectSum):
        return {"kind": "direct_sum", "inner_dim": space.inner_dim, "inner_norm": space.inner_norm}
    return {"kind": "quantum", "d": space.d}


def _certificate_echo(cert) -> dict:
    if cert is None:
        return {"found": False}
    out = {
        "found": True,
        "t0": cert.t0,
        "rho": cert.rho,
        "kind": cert.kind,
    }
    if cert.kind == UNIFORM_ASYMPTOTIC:
        out["envelope_scale"] = cert.envelope_scale
        out["envelope_rate"] = cert.envelope_rate
    return out


def emit_decay_table(sg: Semigroup, certificate, t_grid, out) -> tuple[list[dict], float]:
    """Write per-time coefficient, envelope, and distance-to-limit rows as CSV.

    Returns the rows and the worst envelope slack over times at or past the
    certificate time (earlier rows are outside the envelope's validity and
    carry no slack).
    """
    if certificate is None:
        raise PreconditionError("decay table needs a certificate")
    rows = []
    min_slack = float("inf")
    fixed = stationary_points(sg)
    for t in t_grid:
        t = float(t)
        result = delta_of_semigroup(sg, t, certificate=certificate)
        distance = None
        if fixed.is_unique:
            gap_matrix = evolve(sg, t).matrix - rank_one_limit(sg.space, fixed.x0).matrix
            try:
                distance = operator_norm_estimate(sg.space, gap_matrix).value
            except UnsupportedShapeError:
                distance = None
        envelope = certificate.envelope(t)
        slack = None
        if distance is not None and t >= certificate.t0 - 1e-12:
            slack = envelope - distance
            min_slack = min(min_slack, slack)
        rows.append(
            {
                "t": t,
                "delta": result.value,
                "envelope": envelope,
                "distance": distance,
                "slack": slack,
            }
        )
    lines = ["t,delta,envelope,distance,slack"]
    for row in rows:
        distance = "" if row["distance"] is None else repr(row["distance"])
        slack = "" if row["slack"] is None else repr(row["slack"])
        lines.append(f"{row['t']!r},{row['delta']!r},{row['envelope']!r},{distance},{slack}")
    text = "\n".join(lines) + "\n"
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text)
    return rows, min_slack


def _bound_section(kind, sg_t, sg_s, scenario, certificates, tol):
    required = CERTIFICATE_REQUIREMENT[kind]
    certificate = certificates.get(required)
    if certificate is None:
        return {
            "kind": kind,
            "status": "skipped",
            "reason": f"no {required} certificate on the certificate grid",
        }
    x = scenario.start_points[0]
    z = scenario.start_points[1] if len(scenario.start_points) > 1 else x
    try:
        report = verify_bound(
            kind,
            sg_t,
            sg_s,
            x,
            z,
            scenario.t_grid,
            tol=tol,
            certificate=certificate,
            seed=scenario.seed,
        )
    except HypothesisNotMetError as exc:
        return {"kind": kind, "status": "hypothesis_not_met", "reason": str(exc)}
    except PreconditionError as exc:
        return {"kind": kind, "status": "skipped", "reason": str(exc)}
    return {
        "kind": kind,
        "status": "ok",
        "passed": report.passed,
        "min_slack": report.min_slack,
        "notes": list(report.notes),
        "rows": [
            {"t": r.t, "actual": r.actual, "bound": r.bound, "slack": r.slack}
            for r in report.rows
        ],
    }


def _weight_section(spec, sg_t, scenario):
    weight = weight_from_spec(spec)
    class_report = is_in_class_w(weight)
    section = {
        "spec": spec,
        "verdict": class_report.verdict.value,
        "analytic": class_report.analytic,
        "reason": class_report.reason,
        "limit_estimates": [
            {"s": s, "limit": value} for s, value in class_report.limit_estimates
        ],
        "evidence": [
            {"s": s, "ratios": [{"t": t, "r": r} for t, r in ratios]}
            for s, ratios in class_report.evidence
        ],
    }
    if class_report.verdict is not ClassWVerdict.IN_W:
        section["convergence"] = None
        section["convergence_skipped_reason"] = "weight is not a certified class member"
        return section
    try:
        convergence = verify_weighted_convergence(
            sg_t,
            weight,
            scenario.start_points[0],
            scenario.t_grid,
            class_report=class_report,
        )
    except PreconditionError as exc:
        section["convergence"] = None
        section["convergence_skipped_reason"] = str(exc)
        return section
    section["convergence"] = {
        "rows": [{"t": t, "deviation": d} for t, d in convergence.rows],
        "final_deviation": convergence.final_deviation,
        "passed": convergence.passed,
        "threshold": convergence.threshold,
    }
    return section


def run_scenario(path, out_dir, fmt: str = "both", tol: float | None = None, seed: int | None = None) -> int:
    """Execute a scenario file and write its report; returns the exit code."""
    if fmt not in ("json", "csv", "both"):
        print(f"scenario error: unknown format {fmt!r}", file=sys.stderr)
        return 2
    try:
        scenario = parse_scenario(path)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    if seed is not None:
        scenario = Scenario(
            **{**scenario.__dict__, "seed": seed}
        )
    if tol is not None:
        tolerances = dict(scenario.tolerances)
        tolerances["verification"] = float(tol)
        scenario = Scenario(**{**scenario.__dict__, "tolerances": tolerances})

    validation_tol = scenario.tolerances["validation"]
    verification_tol = scenario.tolerances["verification"]
    margin = scenario.tolerances["margin"]

    gen_report = validate_generator(
        LinearMap(scenario.space, scenario.generator, Role.GENERATOR), tol=validation_tol
    )
    validation = {"generator": _validation_echo(gen_report)}
    if not gen_report.passed:
        print(
            f"scenario error: generator fails validation ({', '.join(gen_report.failures)}; "
            f"worst violation {gen_report.worst_violation:.3e})",
            file=sys.stderr,
        )
        return 2
    sg_t = make_semigroup(scenario.space, scenario.generator, tol=validation_tol)

    if scenario.perturbed_generator is not None:
        pert_report = validate_generator(
            LinearMap(scenario.space, scenario.perturbed_generator, Role.GENERATOR),
            tol=validation_tol,
        )
        validation["perturbed_generator"] = _validation_echo(pert_report)
        if not pert_report.passed:
            print(
                "scenario error: perturbed generator fails validation "
                f"({', '.join(pert_report.failures)})",
                file=sys.stderr,
            )
            return 2
        sg_s = make_semigroup(scenario.space, scenario.perturbed_generator, tol=validation_tol)
    else:
        validation["perturbed_generator"] = None
        sg_s = sg_t

    stability = stability_certificate(
        sg_t, scenario.certificate_grid, margin=margin, seed=scenario.seed
    )
    mean = mean_ergodicity_certificate(
        sg_t, scenario.certificate_grid, margin=margin, seed=scenario.seed
    )
    certificates = {UNIFORM_ASYMPTOTIC: stability, "uniform_mean_ergodic": mean}

    delta_rows = []
    for t in scenario.t_grid:
        result = delta_of_semigroup(sg_t, float(t), certificate=stability, seed=scenario.seed)
        delta_rows.append(
            {
                "t": float(t),
                "delta": result.value,
                "exact": result.exact,
                "ceiling": result.ceiling,
            }
        )

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)

    decay_rows = None
    decay_min_slack = None
    if stability is not None:
        target = out_path / "decay.csv" if fmt in ("csv", "both") else _NullSink()
        decay_rows, decay_min_slack = emit_decay_table(
            sg_t, stability, scenario.t_grid, target
        )

    bound_sections = [
        _bound_section(kind, sg_t, sg_s, scenario, certificates, verification_tol)
        for kind in scenario.bounds
    ]
    weight_sections = [
        _weight_section(spec, sg_t, scenario) for spec in scenario.weight_specs
    ]

    bounds_failed = any(
        section["status"] == "ok" and not section["passed"] for section in bound_sections
    )
    envelope_failed = (
        decay_min_slack is not None
        and decay_min_slack != float("inf")
        and decay_min_slack < -verification_tol
    )
    exit_code = 1 if (bounds_failed or envelope_failed) else 0

    report = {
        "version": __version__,
        "scenario": {
            "space": _space_echo(scenario.space),
            "generator": scenario.generator.tolist(),
            "perturbed_generator": (
                None
                if scenario.perturbed_generator is None
                else scenario.perturbed_generator.tolist()
            ),
            "start_points": [p.tolist() for p in scenario.start_points],
            "t_grid": list(scenario.t_grid),
            "certificate_grid": list(scenario.certificate_grid),
            "weights": list(scenario.weight_specs),
            "bounds": list(scenario.bounds),
            "tolerances": {k: scenario.tolerances[k] for k in sorted(scenario.tolerances)},
            "seed": scenario.seed,
        },
        "validation": validation,
        "certificates": {
            "stability": _certificate_echo(stability),
            "mean_ergodic": _certificate_echo(mean),
        },
        "delta_table": delta_rows,
        "decay_table": {
            "available": decay_rows is not None,
            "rows": decay_rows,
            "min_enforced_slack": (
                None
                if decay_min_slack is None or decay_min_slack == float("inf")
                else decay_min_slack
            ),
        },
        "bounds": bound_sections,
        "weights": weight_sections,
        "verdicts": {
            "bounds_pass": not bounds_failed,
            "envelope_pass": not envelope_failed,
            "exit_code": exit_code,
        },
    }

    if fmt in ("json", "both"):
        (out_path / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    if fmt in ("csv", "both"):
        lines = [CSV_HEADER]
        for section in bound_sections:
            if section["status"] != "ok":
                continue
            for row in section["rows"]:
                ok = "true" if row["slack"] >= -verification_tol else "false"
                lines.append(
                    f"{section['kind']},{row['t']!r},{row['actual']!r},"
                    f"{row['bound']!r},{row['slack']!r},{ok}"
                )
        (out_path / "bounds.csv").write_text("\n".join(lines) + "\n")
    return exit_code


class _NullSink:
    def write(self, _text: str) -> None:
        return None


def _validation_echo(report) -> dict:
    return {
        "passed": report.passed,
        "worst_violation": report.worst_violation,
        "failures": list(report.failures),
        "certified_at": list(report.certified_at),
    }


def _cmd_validate(path) -> int:
    try:
        scenario = parse_scenario(path)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    ok = True
    for name, matrix in (
        ("generator", scenario.generator),
        ("perturbed_generator", scenario.perturbed_generator),
    ):
        if matrix is None:
            continue
        report = validate_generator(
            LinearMap(scenario.space, matrix, Role.GENERATOR),
            tol=scenario.tolerances["validation"],
        )
        status = "ok" if report.passed else f"FAIL ({', '.join(report.failures)})"
        print(f"{name}: {status}; worst violation {report.worst_violation!r}")
        ok = ok and report.passed
    return 0 if ok else 2


def _cmd_weights(spec_text: str) -> int:
    try:
        spec = json.loads(spec_text)
    except json.JSONDecodeError as exc:
        print(f"weight spec error: {exc.msg}", file=sys.stderr)
        return 2
    try:
        weight = weight_from_spec(spec)
        report = is_in_class_w(weight)
    except InputError as exc:
        print(f"weight spec error: {exc}", file=sys.stderr)
        return 2
    print(f"verdict: {report.verdict.value}")
    print(f"analytic: {report.analytic}")
    if report.reason:
        print(f"reason: {report.reason}")
    for s, limit in report.limit_estimates:
        print(f"shift {s!r}: limit estimate {limit!r}")
    for s, ratios in report.evidence:
        table = ", ".join(f"r({t!r})={r!r}" for t, r in ratios)
        print(f"shift {s!r}: {table}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ergobounds",
        description="Ergodicity coefficients and perturbation-bound verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run a scenario and write reports")
    analyze.add_argument("--scenario", required=True)
    analyze.add_argument("--out", required=True)
    analyze.add_argument("--format", default="both", choices=("json", "csv", "both"))
    analyze.add_argument("--tol", type=float, default=None)
    analyze.add_argument("--seed", type=int, default=None)

    validate = sub.add_parser("validate", help="validate the generators in a scenario")
    validate.add_argument("--scenario", required=True)

    weights = sub.add_parser("weights", help="classify a weight specification")
    weights.add_argument("--check", required=True, metavar="SPEC_JSON")

    args = parser.parse_args(argv)
    if args.command == "analyze":
        return run_scenario(args.scenario, args.out, args.format, args.tol, args.seed)
    if args.command == "validate":
        return _cmd_validate(args.scenario)
    return _cmd_weights(args.check)


if __name__ == "__main__":
    sys.exit(main())
