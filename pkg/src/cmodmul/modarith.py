"""Reversible modular arithmetic out of X, CNOT and Toffoli gates.

Registers are sequences of qubit indices, least-significant bit first.

The modular adder adds a classical constant ``c`` to an n-bit register ``y``
holding a value below ``N``, conditioned on one control qubit:

1. ``flag ^= ctrl and (y >= N - c)``   comparator on ``y + (2**n - N + c)``
2. ``y += c``                           if ctrl, mod 2**n
3. ``y -= N``                           if flag, mod 2**n
4. ``flag ^= ctrl and (y < c)``         comparator on ``y + (2**n - c)``

The constant operand of every ripple step is loaded into a scratch register
with CNOTs from the conditioning qubit and unloaded afterwards, so the Toffoli
count of an addition does not depend on the constant. The ripple steps are
Cuccaro MAJ/UMA chains with a single carry-in qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .sim import CNOT, TOFFOLI, Circuit, Gate

Register = Sequence[int]


class NoInverseError(ValueError):
    """The multiplier shares a factor with the modulus."""


class LayoutError(ValueError):
    """Registers or control qubits overlap."""


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b)``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return a, s0, t0


def modinv(a: int, N: int) -> int:
    if not 0 < a < N:
        raise ValueError(f"multiplier {a} not in (0, {N})")
    g, s, _ = egcd(a, N)
    if g != 1:
        raise NoInverseError(f"{a} has no inverse modulo {N} (gcd {g})")
    return s % N


def norm_const(c: int, N: int) -> int:
    return c % N


def classical_mac(c: int, x: int, y: int, N: int) -> int:
    return (y + c * x) % N


def constant_schedule(c: int, n: int, N: int) -> list[int]:
    """Addition constants for a multiply-accumulate: entry i is ``c * 2**i mod N``."""
    return [(c << i) % N for i in range(n)]


@dataclass(frozen=True)
class SchemeParams:
    N: int
    a: int

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"modulus must be odd and >= 3, got {self.N}")
        if not 1 <= self.a < self.N:
            raise ValueError(f"multiplier must lie in [1, {self.N}), got {self.a}")
        modinv(self.a, self.N)

    @property
    def n(self) -> int:
        return (self.N - 1).bit_length()

    @property
    def a_inv(self) -> int:
        return modinv(self.a, self.N)

    def multiply(self, x: int) -> int:
        return self.a * x % self.N


def smallest_multiplier(N: int) -> int:
    """Smallest multiplier >= 2 coprime to ``N``."""
    a = 2
    while math.gcd(a, N) != 1:
        a += 1
    return a


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit assignment for one scheme.

    ``oracle`` aliases ``work[0]``; it is used only once the work register has
    been measured and reset. ``and_ancilla`` exists only for layouts that need
    a controlled multiply-accumulate.
    """

    data: int
    xreg: tuple[int, ...]
    work: tuple[int, ...]
    const_reg: tuple[int, ...]
    carry: int
    flag: int
    and_ancilla: int | None
    total: int

    @property
    def oracle(self) -> int:
        return self.work[0]

    @property
    def adder_ancilla(self) -> tuple[int, ...]:
        extra = () if self.and_ancilla is None else (self.and_ancilla,)
        return self.const_reg + (self.carry, self.flag) + extra

    @property
    def n(self) -> int:
        return len(self.xreg)

    def encode(self, data: int = 0, x: int = 0, work: int = 0) -> int:
        """Basis index with the given register values and every ancilla at 0."""
        idx = data << self.data
        for i, q in enumerate(self.xreg):
            idx |= (x >> i & 1) << q
        for i, q in enumerate(self.work):
            idx |= (work >> i & 1) << q
        return idx

    def decode(self, index: int) -> dict[str, int]:
        def val(reg):
            return sum((index >> q & 1) << i for i, q in enumerate(reg))

        return {
            "data": index >> self.data & 1,
            "x": val(self.xreg),
            "work": val(self.work),
            "ancilla": val(self.adder_ancilla),
        }


def make_layout(params: SchemeParams, controlled_mac: bool = True) -> RegisterLayout:
    n = params.n
    xreg = tuple(range(1, 1 + n))
    work = tuple(range(1 + n, 1 + 2 * n))
    const_reg = tuple(range(1 + 2 * n, 1 + 3 * n))
    carry, flag = 1 + 3 * n, 2 + 3 * n
    and_ancilla = 3 + 3 * n if controlled_mac else None
    total = 3 * n + (4 if controlled_mac else 3)
    layout = RegisterLayout(0, xreg, work, const_reg, carry, flag, and_ancilla, total)
    _disjoint((layout.data,), layout.xreg, layout.work, layout.adder_ancilla)
    return layout


def _disjoint(*regs: Register) -> None:
    seen: set[int] = set()
    for reg in regs:
        for q in reg:
            if q in seen:
                raise LayoutError(f"qubit {q} used twice")
            seen.add(q)


# ---------------------------------------------------------------------------
# ripple-carry primitives (gate lists)


def _maj(c: int, b: int, a: int) -> list[Gate]:
    return [CNOT(a, b), CNOT(a, c), TOFFOLI(c, b, a)]


def _maj_inv(c: int, b: int, a: int) -> list[Gate]:
    return [TOFFOLI(c, b, a), CNOT(a, c), CNOT(a, b)]


def _uma(c: int, b: int, a: int) -> list[Gate]:
    return [TOFFOLI(c, b, a), CNOT(a, c), CNOT(c, b)]


def ripple_add(a: Register, b: Register, carry: int) -> list[Gate]:
    """``b += a mod 2**m``; ``a`` and ``carry`` (initially 0) are restored."""
    m = len(a)
    if m == 1:
        return [CNOT(a[0], b[0])]
    gates: list[Gate] = []
    prev = carry
    for i in range(m - 1):
        gates += _maj(prev, b[i], a[i])
        prev = a[i]
    gates += [CNOT(a[m - 1], b[m - 1]), CNOT(a[m - 2], b[m - 1])]
    for i in reversed(range(m - 1)):
        gates += _uma(carry if i == 0 else a[i - 1], b[i], a[i])
    return gates


def ripple_carry_out(a: Register, b: Register, carry: int, target: int) -> list[Gate]:
    """``target ^= (a + b >= 2**m)``; ``a``, ``b`` and ``carry`` are restored."""
    m = len(a)
    forward: list[Gate] = []
    prev = carry
    for i in range(m):
        forward += _maj(prev, b[i], a[i])
        prev = a[i]
    backward: list[Gate] = []
    for i in reversed(range(m)):
        backward += _maj_inv(carry if i == 0 else a[i - 1], b[i], a[i])
    return forward + [CNOT(a[m - 1], target)] + backward


def _load(control: int, value: int, reg: Register) -> list[Gate]:
    return [CNOT(control, q) for i, q in enumerate(reg) if value >> i & 1]


def _check_modadd_args(control, target, layout):
    if len(target) != layout.n:
        raise LayoutError(f"target register has {len(target)} qubits, expected {layout.n}")
    _disjoint((control,), target, layout.const_reg, (layout.carry, layout.flag))


def cmodadd_gates(
    c: int, control: int, target: Register, params: SchemeParams, layout: RegisterLayout
) -> list[Gate]:
    if not 0 <= c < params.N:
        raise ValueError(f"constant {c} not reduced modulo {params.N}; use norm_const")
    _check_modadd_args(control, target, layout)
    n, N = layout.n, params.N
    k, cin, flag = layout.const_reg, layout.carry, layout.flag
    full = 1 << n

    def loaded(ctrl, value, body):
        load = _load(ctrl, value, k)
        return load + body + load

    gates = loaded(control, full - N + c, ripple_carry_out(k, target, cin, flag))
    gates += loaded(control, c, ripple_add(k, target, cin))
    gates += loaded(flag, full - N, ripple_add(k, target, cin))
    # with c = 0 the constant would be 2**n; loading nothing makes the carry 0
    gates += loaded(control, (full - c) % full, ripple_carry_out(k, target, cin, flag))
    if c:
        gates.append(CNOT(control, flag))
    return gates


def build_cmodadd_const(
    c: int, control: int, target: Register, params: SchemeParams, layout: RegisterLayout
) -> Circuit:
    """``|b>|y> -> |b>|(y + b*c) mod N>`` for ``y < N``; scratch qubits end at 0."""
    return Circuit(layout.total, cmodadd_gates(c, control, target, params, layout))


def build_mac(
    c: int, src: Register, dst: Register, params: SchemeParams, layout: RegisterLayout
) -> Circuit:
    """Multiply-accumulate ``|x>|y> -> |x>|(y + c*x) mod N>``.

    One controlled constant addition per bit of ``src``, constant ``c * 2**i``.
    Zero constants still emit the full adder so the cost depends only on ``n``.
    """
    _disjoint(src, dst)
    gates: list[Gate] = []
    for q, ci in zip(src, constant_schedule(c, len(src), params.N)):
        gates += cmodadd_gates(ci, q, dst, params, layout)
    return Circuit(layout.total, gates)


def build_cmac(
    c: int,
    extra_control: int,
    src: Register,
    dst: Register,
    params: SchemeParams,
    layout: RegisterLayout,
) -> Circuit:
    """``build_mac`` applied only when ``extra_control`` is 1.

    Each addition is conditioned on ``extra_control AND src[i]``, computed into
    the layout's AND ancilla by a Toffoli and uncomputed right after.
    """
    if layout.and_ancilla is None:
        raise LayoutError("layout has no AND ancilla for a controlled multiply-accumulate")
    _disjoint((extra_control,), src, dst, (layout.and_ancilla,))
    anc = layout.and_ancilla
    gates: list[Gate] = []
    for q, ci in zip(src, constant_schedule(c, len(src), params.N)):
        gates.append(TOFFOLI(extra_control, q, anc))
        gates += cmodadd_gates(ci, anc, dst, params, layout)
        gates.append(TOFFOLI(extra_control, q, anc))
    return Circuit(layout.total, gates)


def build_ccopy(control: int, src: Register, dst: Register, num_qubits: int) -> Circuit:
    """``|b>|x>|0> -> |b>|x>|b*x>`` with one Toffoli per bit."""
    if len(src) != len(dst):
        raise LayoutError("copy registers differ in width")
    _disjoint((control,), src, dst)
    return Circuit(num_qubits, [TOFFOLI(control, s, d) for s, d in zip(src, dst)])


def build_cswap_registers(control: int, reg_a: Register, reg_b: Register, num_qubits: int) -> Circuit:
    """Swap two registers bitwise when ``control`` is 1 (Fredkin as CNOT-Toffoli-CNOT)."""
    if len(reg_a) != len(reg_b):
        raise LayoutError("swap registers differ in width")
    _disjoint((control,), reg_a, reg_b)
    gates: list[Gate] = []
    for a, b in zip(reg_a, reg_b):
        gates += [CNOT(b, a), TOFFOLI(control, a, b), CNOT(b, a)]
    return Circuit(num_qubits, gates)
