import pytest

from cmodmul import modarith as ma
from cmodmul import resources as rs
from cmodmul import schemes as sc
from cmodmul.modarith import SchemeParams
from cmodmul.resources import ResourceCount, count_circuit, count_program
from cmodmul.schemes import ParityMask
from cmodmul.sim import CSWAP, Circuit, DynamicProgram, H, MeasurementStage, SynthesisStage, X


def test_empty_circuit():
    rc = count_circuit(Circuit(3))
    assert rc == ResourceCount() and rc.total_gates == 0


def test_ccopy_and_oracle_counts():
    p = SchemeParams(15, 7)
    lay = ma.make_layout(p)
    assert count_circuit(ma.build_ccopy(lay.data, lay.xreg, lay.work, lay.total)).toffoli == 4
    rc = count_circuit(sc.build_parity_oracle(ParityMask("10111"), 0, [1, 2, 3, 4, 5], 6))
    assert (rc.toffoli, rc.cnot, rc.total_gates) == (1, 6, 7)


def test_native_cswap_and_conditions_counted():
    rc = count_circuit(Circuit(3, [CSWAP(0, 1, 2), X(1, condition=0), H(2)]))
    assert rc.cswap_native == 1 and rc.classically_conditioned == 1 and rc.single_qubit == 2
    assert rc.total_gates == 3


def test_counting_is_structural():
    p = SchemeParams(21, 5)
    prog = sc.build_scheme("C", p)
    assert count_program(prog, p) == count_program(prog, p)


def test_scheme_a_structure():
    p = SchemeParams(15, 7)
    lay = sc.layout_for("A", p)
    d, xr, w, tot = lay.data, lay.xreg, lay.work, lay.total
    expected = (
        count_circuit(ma.build_cmac(p.a, d, xr, w, p, lay))
        + count_circuit(ma.build_cswap_registers(d, xr, w, tot))
        + count_circuit(ma.build_cmac(-p.a_inv, d, xr, w, p, lay))
        + ResourceCount(single_qubit=1)
    )
    assert count_program(sc.build_scheme("A", p, lay), p).counts == expected


def test_scheme_c_stage2_worst_case():
    p = SchemeParams(15, 7)
    row = count_program(sc.build_scheme("C", p), p)
    assert row.worst_case_outcome == "1111"
    w = row.worst_case_stage2
    assert (w.toffoli, w.cnot, w.classically_conditioned) == (1, 6, 4)
    assert row.counts.measurements == 4
    lay = sc.layout_for("C", p)
    assert count_circuit(sc.correction_circuit("0000", 0, lay)) == ResourceCount()
    assert row.mean_stage2["toffoli"] == pytest.approx(15 / 16)


def test_enumeration_guardrail():
    prog = DynamicProgram(
        13, [MeasurementStage(tuple(range(13))), SynthesisStage(lambda r: Circuit(13))]
    )
    with pytest.raises(rs.EnumerationLimit):
        count_program(prog)


def test_compare_15_7():
    rows, s = rs.compare_schemes(SchemeParams(15, 7))
    assert [r.scheme for r in rows] == ["A", "B", "C"]
    assert s.delta_b_c == 3 and s.identity_i
    assert s.identity_ii and s.delta_iii_positive


def test_compare_21_5_identity_ii():
    _, s = rs.compare_schemes(SchemeParams(21, 5))
    t = s.component_toffoli
    assert s.delta_a_c == 2 * (t["cmac"] - t["mac"]) - t["ccopy"] - 1


def test_compare_degenerate_multiplier():
    rows, s = rs.compare_schemes(SchemeParams(15, 1))
    assert s.identity_i and s.identity_ii
    assert all(r.counts.toffoli > 0 for r in rows)


def test_component_costs_linear_in_n():
    for N in (9, 21, 33, 65, 129):
        p = SchemeParams(N, 2)
        n = p.n
        comp = rs.component_counts(p)
        assert (comp["cswap"].toffoli, comp["cswap"].cnot) == (n, 2 * n)
        assert comp["ccopy"].toffoli == n


def test_trend():
    sums = rs.savings_trend([9, 15, 21, 33, 57])
    assert rs.trend_is_monotone(sums)
    assert [s.a for s in sums] == [2, 2, 2, 2, 2]
