"""Command-line front end.

Exit codes: 0 all checks passed, 1 a verification failed, 2 invalid input,
3 refused by a size guardrail.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import modarith as ma
from . import resources as rs
from . import schemes as sc
from .modarith import SchemeParams
from .schemes import SchemeKind
from .sim import SimulationError

DEFAULT_SEED = 20190312
SIM_MAX_N = 63
COUNT_MAX_N = 1 << 12

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_GUARDRAIL = 0, 1, 2, 3


class InvalidInput(Exception):
    pass


class Guardrail(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    moduli: list[int]
    multiplier: str
    x: int | None = None
    scheme: str = "all"
    outcome: str = "all"
    seed: int = DEFAULT_SEED
    output_format: str = "table"
    out: str | None = None

    def echo(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "N": self.moduli,
            "a": self.multiplier,
            "x": self.x,
            "scheme": self.scheme,
            "outcome": self.outcome,
            "seed": self.seed,
        }

    def kinds(self) -> list[SchemeKind]:
        return list(SchemeKind) if self.scheme == "all" else [SchemeKind(self.scheme)]


@dataclass
class Report:
    config: dict
    cases: list[dict] = field(default_factory=list)
    resources: list[dict] = field(default_factory=list)
    summaries: list[dict] = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)
    error: str | None = None
    overall_pass: bool = False
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        cases = sorted(self.cases, key=lambda c: (c["N"], c["a"], c["scheme"], c["x"], c["outcome"] or ""))
        return {
            "tool": "cmodmul",
            "version": __version__,
            "config": self.config,
            "overall_pass": self.overall_pass,
            "error": self.error,
            "n_cases": len(cases),
            "n_failed": sum(not c["passed"] for c in cases),
            "cases": cases,
            "checks": self.checks,
            "resources": self.resources,
            "summaries": self.summaries,
            "timing": {"wall_clock_s": round(self.wall_clock_s, 3)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# validation


def _params(cfg: RunConfig, N: int, max_n: int) -> SchemeParams:
    if N > max_n:
        raise Guardrail(f"N = {N} exceeds the limit {max_n} for '{cfg.subcommand}'")
    if N < 3 or N % 2 == 0:
        raise InvalidInput(f"N must be odd and >= 3, got {N}")
    if cfg.multiplier == "auto":
        a = ma.smallest_multiplier(N)
    else:
        try:
            a = int(cfg.multiplier)
        except ValueError:
            raise InvalidInput(f"--a must be an integer or 'auto', got {cfg.multiplier!r}")
    try:
        params = SchemeParams(N, a)
    except ValueError as e:
        raise InvalidInput(str(e))
    if cfg.x is not None and not 0 <= cfg.x < N:
        raise InvalidInput(f"x = {cfg.x} outside [0, {N})")
    return params


def _outcome_mode(cfg: RunConfig, n: int) -> str:
    o = cfg.outcome
    if o in ("all", "sampled"):
        return o
    if len(o) != n or set(o) - {"0", "1"}:
        raise InvalidInput(f"--outcome must be 'all', 'sampled' or a {n}-bit string, got {o!r}")
    return "forced"


def _xs(cfg: RunConfig, params: SchemeParams) -> list[int]:
    return list(range(params.N)) if cfg.x is None else [cfg.x]


def _case_dict(params: SchemeParams, case: sc.CaseResult) -> dict:
    return {"N": params.N, "a": params.a, **case.to_dict()}


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(cfg: RunConfig, report: Report) -> None:
    rng = np.random.default_rng(cfg.seed)
    for N in cfg.moduli:
        params = _params(cfg, N, SIM_MAX_N)
        mode = _outcome_mode(cfg, params.n)
        for kind in cfg.kinds():
            for x in _xs(cfg, params):
                seed = int(rng.integers(2**63))
                rep = sc.verify_scheme(
                    kind, params, x, mode=mode, seed=seed,
                    forced=cfg.outcome if mode == "forced" else None,
                )
                for case in rep.cases:
                    report.cases.append(_case_dict(params, case))
                if kind is SchemeKind.C and mode != "all":
                    s = rep.cases[0].outcome
                    layout = sc.layout_for(kind, params)
                    fix = sc.correction_circuit(s, 0, layout)
                    report.messages.append(
                        f"N={N} a={params.a} x={x}: measured s={s}, correction "
                        f"[{'; '.join(map(str, fix.gates)) or 'none'}], "
                        f"final state {'matches' if rep.passed else 'DOES NOT match'} target"
                    )


def cmd_verify(cfg: RunConfig, report: Report) -> None:
    for N in cfg.moduli:
        params = _params(cfg, N, SIM_MAX_N)
        for kind in cfg.kinds():
            for x in _xs(cfg, params):
                rep = sc.verify_scheme(kind, params, x, mode="all", seed=cfg.seed, check_phase_law=True)
                report.cases.extend(_case_dict(params, c) for c in rep.cases)
        oracle = sc.check_all_parity_oracles(params.n)
        report.checks[f"N={N},a={params.a}"] = {
            "scheme_equivalence": all(c["passed"] for c in report.cases if c["N"] == N),
            "uniform_outcomes": all(
                abs(c["probability"] - 2.0**-params.n) < sc.VERIFY_TOL
                for c in report.cases
                if c["N"] == N and c["scheme"] == "C"
            ),
            "phase_law": all(c["phase_law"] for c in report.cases if c["N"] == N and c["scheme"] == "C"),
            "oracle_phase": oracle["phase"],
            "oracle_selectivity": oracle["selective"],
            "oracle_self_inverse": oracle["self_inverse"],
            "hygiene": all(c["clean"] for c in report.cases if c["N"] == N),
        }


def cmd_count(cfg: RunConfig, report: Report) -> None:
    for N in cfg.moduli:
        params = _params(cfg, N, COUNT_MAX_N)
        for kind in cfg.kinds():
            row = rs.count_program(sc.build_scheme(kind, params), params, kind.value)
            report.resources.append({"N": N, "a": params.a, "n": params.n, **row.to_dict()})


def cmd_compare(cfg: RunConfig, report: Report) -> None:
    summaries = []
    for N in cfg.moduli:
        params = _params(cfg, N, COUNT_MAX_N)
        rows, summary = rs.compare_schemes(params)
        summaries.append(summary)
        for row in rows:
            report.resources.append({"N": N, "a": params.a, "n": params.n, **row.to_dict()})
        report.summaries.append(summary.to_dict())
    report.checks["identity_i"] = all(s.identity_i for s in summaries)
    report.checks["identity_ii"] = all(s.identity_ii for s in summaries)
    report.checks["delta_iii_positive"] = all(s.delta_iii_positive for s in summaries)
    if len(summaries) > 1:
        report.checks["delta_iii_monotone"] = rs.trend_is_monotone(summaries)


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "count": cmd_count, "compare": cmd_compare}


def _overall(report: Report) -> bool:
    cases_ok = all(c["passed"] for c in report.cases)
    checks_ok = all(
        all(v.values()) if isinstance(v, dict) else bool(v) for v in report.checks.values()
    )
    return report.error is None and cases_ok and checks_ok


def execute(cfg: RunConfig) -> tuple[Report, int]:
    report = Report(config=cfg.echo())
    start = time.perf_counter()
    code = EXIT_OK
    try:
        COMMANDS[cfg.subcommand](cfg, report)
    except InvalidInput as e:
        report.error, code = f"invalid input: {e}", EXIT_INVALID
    except Guardrail as e:
        report.error, code = f"guardrail: {e}", EXIT_GUARDRAIL
    except SimulationError as e:
        report.error, code = f"simulation error: {e}", EXIT_FAIL
    report.wall_clock_s = time.perf_counter() - start
    report.overall_pass = _overall(report)
    if code == EXIT_OK and not report.overall_pass:
        code = EXIT_FAIL
    return report, code


# ---------------------------------------------------------------------------
# human-readable output


def format_table(report: Report) -> str:
    lines = []
    if report.error:
        lines.append(f"error: {report.error}")
    if report.cases:
        lines.append(f"{'N':>4} {'a':>4} {'scheme':>6} {'x':>4} {'outcome':>10} {'prob':>9} {'max dev':>10}  result")
        for c in sorted(report.cases, key=lambda c: (c["N"], c["a"], c["scheme"], c["x"], c["outcome"] or "")):
            prob = "" if c["probability"] is None else f"{c['probability']:.6f}"
            lines.append(
                f"{c['N']:>4} {c['a']:>4} {c['scheme']:>6} {c['x']:>4} {c['outcome'] or '-':>10} "
                f"{prob:>9} {c['max_deviation']:>10.2e}  {'pass' if c['passed'] else 'FAIL'}"
            )
    for msg in report.messages:
        lines.append(msg)
    if report.resources:
        lines.append("")
        lines.append(f"{'N':>5} {'a':>4} {'n':>3} {'scheme':>6} {'Toffoli':>8} {'CNOT':>7} {'1q':>6} {'meas':>5} {'cond':>5}")
        for r in report.resources:
            k = r["counts"]
            lines.append(
                f"{r['N']:>5} {r['a']:>4} {r['n']:>3} {r['scheme']:>6} {k['toffoli']:>8} {k['cnot']:>7} "
                f"{k['single_qubit']:>6} {k['measurements']:>5} {k['classically_conditioned']:>5}"
            )
            if r["worst_case_stage2"]:
                w = r["worst_case_stage2"]
                lines.append(
                    f"{'':>21}stage 2 worst case (s={r['worst_case_outcome']}): "
                    f"Toffoli {w['toffoli']}, CNOT {w['cnot']}, conditioned X {w['classically_conditioned']}"
                )
    for s in report.summaries:
        lines.append(
            f"N={s['N']} n={s['n']}: B-C = {s['delta_b_c']} (n-1 = {s['n'] - 1}, "
            f"{'holds' if s['identity_i'] else 'FAILS'}); A-C = {s['delta_a_c']} "
            f"(2[C-MAC - MAC] - C-copy - 1 = {s['identity_ii_rhs']}, "
            f"{'holds' if s['identity_ii'] else 'FAILS'})"
        )
    for name, val in report.checks.items():
        lines.append(f"check {name}: {val}")
    n_fail = sum(not c["passed"] for c in report.cases)
    lines.append(
        f"{len(report.cases)} cases, {n_fail} failed; overall {'PASS' if report.overall_pass else 'FAIL'}"
    )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing


def _moduli(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cmodmul",
        description="Build, simulate and count controlled modular multiplication circuits.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, help_ in [
        ("run", "simulate schemes and check the final state"),
        ("verify", "exhaustive sweep over x and every measurement outcome"),
        ("count", "gate counts per scheme"),
        ("compare", "three-scheme Toffoli comparison and savings identities"),
    ]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--N", dest="moduli", type=_moduli, required=True,
                       help="modulus, or comma-separated list of moduli")
        s.add_argument("--a", dest="multiplier", default="auto",
                       help="multiplier coprime to N, or 'auto' (smallest >= 2)")
        s.add_argument("--x", type=int, default=None, help="input value (default: all x < N)")
        s.add_argument("--scheme", choices=["A", "B", "C", "all"], default="all")
        s.add_argument("--outcome", default="all",
                       help="scheme C measurement: 'all', 'sampled', or a forced bit string "
                            "(character i = work qubit i)")
        s.add_argument("--seed", type=int, default=DEFAULT_SEED)
        s.add_argument("--format", dest="output_format", choices=["table", "json"], default="table")
        s.add_argument("--out", default=None, help="write the structured report here")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    cfg = RunConfig(**vars(args))
    report, code = execute(cfg)
    if cfg.output_format == "json":
        print(report.to_json())
    else:
        print(format_table(report))
    if cfg.out:
        with open(cfg.out, "w") as f:
            f.write(report.to_json() + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
