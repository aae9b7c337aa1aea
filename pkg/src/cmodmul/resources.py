"""Gate tallies by circuit traversal, and the scheme-to-scheme cost comparison."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from . import modarith as ma
from . import schemes as sc
from .modarith import SchemeParams
from .schemes import SchemeKind
from .sim import (
    Circuit,
    DynamicProgram,
    GateKind,
    MeasureMode,
    MeasurementRecord,
    MeasurementStage,
    UnitaryStage,
    all_bitstrings,
)

MAX_ENUMERATION_BITS = 12


class EnumerationLimit(ValueError):
    """Too many measurement outcomes to enumerate."""


@dataclass(frozen=True)
class ResourceCount:
    toffoli: int = 0
    cnot: int = 0
    single_qubit: int = 0
    cz: int = 0
    cswap_native: int = 0
    measurements: int = 0
    classically_conditioned: int = 0

    @property
    def total_gates(self) -> int:
        return self.toffoli + self.cnot + self.single_qubit + self.cz + self.cswap_native

    def __add__(self, other: ResourceCount) -> ResourceCount:
        return ResourceCount(
            **{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)}
        )

    def __mul__(self, k: int) -> ResourceCount:
        return ResourceCount(**{f.name: getattr(self, f.name) * k for f in fields(self)})

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {**asdict(self), "total_gates": self.total_gates}


_FIELD = {
    GateKind.TOFFOLI: "toffoli",
    GateKind.CNOT: "cnot",
    GateKind.X: "single_qubit",
    GateKind.H: "single_qubit",
    GateKind.Z: "single_qubit",
    GateKind.CZ: "cz",
    GateKind.CSWAP: "cswap_native",
}


def count_circuit(circuit: Circuit) -> ResourceCount:
    tally = dict.fromkeys(_FIELD.values(), 0)
    conditioned = 0
    for g in circuit.gates:
        tally[_FIELD[g.kind]] += 1
        conditioned += g.condition is not None
    return ResourceCount(**tally, classically_conditioned=conditioned)


@dataclass
class ComparisonRow:
    """Counts for one scheme.

    ``counts`` covers the whole program with each synthesis stage at its worst
    case (most Toffolis, then most gates) over all measurement outcomes.
    """

    scheme: str
    counts: ResourceCount
    worst_case_stage2: ResourceCount | None = None
    mean_stage2: dict | None = None
    worst_case_outcome: str | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "counts": self.counts.to_dict(),
            "worst_case_stage2": None
            if self.worst_case_stage2 is None
            else self.worst_case_stage2.to_dict(),
            "mean_stage2": self.mean_stage2,
            "worst_case_outcome": self.worst_case_outcome,
            "notes": self.notes,
        }


def _worst_key(rc: ResourceCount):
    return (rc.toffoli, rc.total_gates, rc.classically_conditioned)


def count_program(program: DynamicProgram, params: SchemeParams | None = None, scheme: str = "") -> ComparisonRow:
    """Count unitary stages exactly; enumerate every outcome for synthesis stages.

    Outcomes are enumerated as if each measurement could return any bit
    string; the synthesized circuit only depends on the bits.
    """
    total = ResourceCount()
    stage2 = None
    mean = None
    worst_outcome = None
    records: list[MeasurementRecord] = []
    pending: MeasurementStage | None = None
    for stage in program.stages:
        if isinstance(stage, UnitaryStage):
            total += count_circuit(stage.circuit)
        elif isinstance(stage, MeasurementStage):
            total += ResourceCount(measurements=len(stage.qubits))
            pending = stage
        else:
            if pending is None:
                total += count_circuit(stage.synthesize(tuple(records)))
                continue
            k = len(pending.qubits)
            if k > MAX_ENUMERATION_BITS:
                raise EnumerationLimit(
                    f"refusing to enumerate 2^{k} outcomes (limit 2^{MAX_ENUMERATION_BITS})"
                )
            per_outcome = {}
            for bits in all_bitstrings(k):
                rec = MeasurementRecord(pending.qubits, bits, 2.0**-k, MeasureMode.FORCED)
                per_outcome[bits] = count_circuit(stage.synthesize(tuple(records) + (rec,)))
            worst_outcome = max(per_outcome, key=lambda b: _worst_key(per_outcome[b]))
            stage2 = per_outcome[worst_outcome]
            mean = {
                name: sum(getattr(rc, name) for rc in per_outcome.values()) / len(per_outcome)
                for name in ("toffoli", "cnot", "single_qubit", "classically_conditioned")
            }
            total += stage2
            # later stages see the worst-case outcome
            records.append(
                MeasurementRecord(pending.qubits, worst_outcome, 2.0**-k, MeasureMode.FORCED)
            )
            pending = None
    return ComparisonRow(scheme, total, stage2, mean, worst_outcome)


@dataclass
class SavingsSummary:
    """Relative Toffoli identities between the three schemes.

    (i)   T(B) - T(C) = T(C-Swap) - T(oracle) = n - 1
    (ii)  T(A) - T(C) = 2 [T(C-MAC) - T(MAC)] - T(C-copy) - 1
    (iii) T(A) - T(C) > 0
    """

    N: int
    a: int
    n: int
    toffoli: dict[str, int]
    delta_b_c: int
    identity_i: bool
    delta_a_c: int
    identity_ii_rhs: int
    identity_ii: bool
    delta_iii_positive: bool
    component_toffoli: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def component_counts(params: SchemeParams) -> dict[str, ResourceCount]:
    lay_a = sc.layout_for(SchemeKind.A, params)
    lay_b = sc.layout_for(SchemeKind.B, params)
    d, tot = lay_b.data, lay_b.total
    return {
        "cmac": count_circuit(ma.build_cmac(params.a, lay_a.data, lay_a.xreg, lay_a.work, params, lay_a)),
        "mac": count_circuit(ma.build_mac(params.a - 1, lay_b.work, lay_b.xreg, params, lay_b)),
        "ccopy": count_circuit(ma.build_ccopy(d, lay_b.xreg, lay_b.work, tot)),
        "cswap": count_circuit(ma.build_cswap_registers(d, lay_b.xreg, lay_b.work, tot)),
        "cmodadd": count_circuit(ma.build_cmodadd_const(params.a, lay_b.xreg[0], lay_b.work, params, lay_b)),
    }


def compare_schemes(params: SchemeParams) -> tuple[list[ComparisonRow], SavingsSummary]:
    rows = []
    for kind in SchemeKind:
        row = count_program(sc.build_scheme(kind, params), params, kind.value)
        if kind is SchemeKind.C:
            row.notes = (
                "stage 2 chosen classically from the measured string; "
                "classical processing is not counted as gates"
            )
        rows.append(row)
    t = {r.scheme: r.counts.toffoli for r in rows}
    comp = component_counts(params)
    ct = {k: v.toffoli for k, v in comp.items()}
    n = params.n
    worst_oracle = rows[2].worst_case_stage2.toffoli if rows[2].worst_case_stage2 else 0
    d_bc = t["B"] - t["C"]
    d_ac = t["A"] - t["C"]
    rhs = 2 * (ct["cmac"] - ct["mac"]) - ct["ccopy"] - worst_oracle
    summary = SavingsSummary(
        N=params.N,
        a=params.a,
        n=n,
        toffoli=t,
        delta_b_c=d_bc,
        identity_i=d_bc == ct["cswap"] - worst_oracle == n - 1,
        delta_a_c=d_ac,
        identity_ii_rhs=rhs,
        identity_ii=d_ac == rhs,
        delta_iii_positive=d_ac > 0,
        component_toffoli=ct,
    )
    return rows, summary


def savings_trend(moduli, multiplier=None) -> list[SavingsSummary]:
    """Summaries for several moduli; ``multiplier=None`` picks the smallest valid one."""
    out = []
    for N in moduli:
        a = multiplier if multiplier is not None else ma.smallest_multiplier(N)
        out.append(compare_schemes(SchemeParams(N, a))[1])
    return out


def trend_is_monotone(summaries: list[SavingsSummary]) -> bool:
    """A - C savings positive, non-decreasing in n, and strictly larger at larger n."""
    by_n = sorted(summaries, key=lambda s: s.n)
    if not all(s.delta_a_c > 0 for s in by_n):
        return False
    for lo, hi in zip(by_n, by_n[1:]):
        if hi.delta_a_c < lo.delta_a_c or (hi.n > lo.n and hi.delta_a_c <= lo.delta_a_c):
            return False
    return True
