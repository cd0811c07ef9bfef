"""The quantum information distributor (QID) network for qudits.

A fixed four-gate circuit of conditional adders acts on an input register
plus a two-register program state.  The program alone decides how much of
the input's quantum information flows to each output: it interpolates
between "leave the input alone" and "swap it into register 2", with the
symmetric point acting as a universal cloner.  In the x-basis the whole
circuit is a permutation of basis triples, so states are propagated by
index remapping instead of by an N^3 x N^3 matrix; the dense gate-by-gate
product is retained as a test oracle for small N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qudit_core import (
    ATOL_CHAIN,
    ATOL_EXACT,
    MAX_TRIPARTITE_DIM,
    DensityOperator,
    Operator,
    PureState,
    entangled_state,
    fourier_operator,
    negativity,
    partial_trace,
    shift_p,
    shift_x,
    validate_dim,
)

__all__ = [
    "PermutationGate",
    "ProgramState",
    "DistributorOutput",
    "conditional_add",
    "conditional_sub",
    "build_qid_unitary",
    "apply_two_register_gate",
    "qid_by_gate_sequence",
    "solve_beta",
    "program_state",
    "cloner_program",
    "distribute",
    "predicted_outputs",
    "scaling_factor",
    "clone_fidelity",
    "covariance_check",
    "output_negativity",
    "classical_distributor_fidelity",
]


def conditional_add(dim: int) -> Operator:
    """Conditional adder |k>|m> -> |k>|(k+m) mod N> (generalised C-NOT)."""
    d = validate_dim(dim)
    mat = np.zeros((d * d, d * d), dtype=complex)
    k, m = np.divmod(np.arange(d * d), d)
    mat[k * d + (k + m) % d, k * d + m] = 1.0
    return Operator((d, d), mat, check_unitary=True)


def conditional_sub(dim: int) -> Operator:
    """Inverse conditional adder |k>|m> -> |k>|(m-k) mod N>.

    Coincides with :func:`conditional_add` only for N = 2.
    """
    d = validate_dim(dim)
    mat = np.zeros((d * d, d * d), dtype=complex)
    k, m = np.divmod(np.arange(d * d), d)
    mat[k * d + (m - k) % d, k * d + m] = 1.0
    return Operator((d, d), mat, check_unitary=True)


class PermutationGate:
    """Phase-free unitary relabelling x-basis triples of a 3-register space."""

    __slots__ = ("dim", "perm")

    def __init__(self, dim: int, perm: np.ndarray):
        self.dim = validate_dim(dim)
        perm = np.asarray(perm, dtype=np.intp)
        size = self.dim**3
        if perm.shape != (size,):
            raise ValueError(f"permutation has shape {perm.shape}, expected ({size},)")
        if np.bincount(perm, minlength=size).max() != 1:
            raise ValueError("index map is not a bijection")
        self.perm = perm

    def apply(self, state: PureState) -> PureState:
        if state.dims != (self.dim,) * 3:
            raise ValueError(f"state dims {state.dims} do not match gate dimension {self.dim}")
        out = np.empty_like(state.amplitudes)
        out[self.perm] = state.amplitudes
        return PureState(state.dims, out)

    def map_triple(self, n: int, m: int, k: int) -> tuple[int, int, int]:
        """Image of the basis triple (n, m, k)."""
        d = self.dim
        dest = int(self.perm[(n * d + m) * d + k])
        return (dest // (d * d), (dest // d) % d, dest % d)


def build_qid_unitary(dim: int) -> PermutationGate:
    """Distributor unitary as a basis permutation.

    Sends (n, m, k) to ((n - m + k) mod N, (m + n) mod N, (k + n) mod N),
    which is what the four conditional shifts D31 D21^dag D13 D12 do on
    basis triples (registers ordered 1, 2, 3).
    """
    d = validate_dim(dim)
    idx = np.arange(d**3)
    n, rem = np.divmod(idx, d * d)
    m, k = np.divmod(rem, d)
    dest = ((n - m + k) % d) * d * d + ((m + n) % d) * d + (k + n) % d
    return PermutationGate(d, dest)


def apply_two_register_gate(gate: Operator, state: PureState, control: int, target: int) -> PureState:
    """Apply a two-register gate to registers (control, target) of ``state``."""
    if control == target:
        raise ValueError("control and target must differ")
    dc, dt = state.dims[control], state.dims[target]
    if gate.dims != (dc, dt):
        raise ValueError(f"gate dims {gate.dims} do not fit registers ({dc}, {dt})")
    tensor = np.moveaxis(state.as_tensor(), (control, target), (0, 1))
    shape = tensor.shape
    out = gate.matrix @ tensor.reshape(dc * dt, -1)
    out = np.moveaxis(out.reshape(shape), (0, 1), (control, target))
    return PureState(state.dims, out.ravel())


def qid_by_gate_sequence(state: PureState) -> PureState:
    """Distributor applied as the explicit gate sequence D12, D13, D21^dag, D31.

    Slow dense oracle for :func:`build_qid_unitary`; registers are 0-based
    (0, 1, 2) = (1, 2, 3).
    """
    if state.num_registers != 3 or len(set(state.dims)) != 1:
        raise ValueError("expected three registers of equal dimension")
    d = state.dims[0]
    add, sub = conditional_add(d), conditional_sub(d)
    state = apply_two_register_gate(add, state, control=0, target=1)
    state = apply_two_register_gate(add, state, control=0, target=2)
    state = apply_two_register_gate(sub, state, control=1, target=0)
    state = apply_two_register_gate(add, state, control=2, target=0)
    return state


def solve_beta(dim: int, alpha: float) -> float:
    """Nonnegative root of beta^2 + (2*alpha/N)*beta + alpha^2 - 1 = 0."""
    d = validate_dim(dim)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    beta = -alpha / d + math.sqrt(1.0 - alpha * alpha * (1.0 - 1.0 / d**2))
    residual = alpha * alpha + beta * beta + 2 * alpha * beta / d - 1.0
    assert beta >= -ATOL_EXACT and abs(residual) <= ATOL_EXACT
    return max(beta, 0.0)


@dataclass(frozen=True)
class ProgramState:
    """Two-register program ket alpha*|Xi_00> + beta*|x_0>|p_0>."""

    dim: int
    alpha: float
    beta: float
    ket: PureState


@dataclass
class DistributorOutput:
    """Joint output state (None for closed-form results) and the three
    single-register reductions."""

    joint: PureState | None
    rho1: DensityOperator
    rho2: DensityOperator
    rho3: DensityOperator


def program_state(dim: int, alpha: float, beta: float) -> ProgramState:
    """Build the two-parameter program state.

    (alpha, beta) must satisfy alpha^2 + beta^2 + 2*alpha*beta/N = 1; the
    cross term comes from the 1/N overlap of the two branches.
    """
    d = validate_dim(dim)
    residual = alpha * alpha + beta * beta + 2 * alpha * beta / d - 1.0
    if abs(residual) > ATOL_CHAIN:
        raise ValueError(f"(alpha, beta) violate the normalisation condition by {residual:.3e}")
    amps = alpha * entangled_state(d, 0, 0).amplitudes
    x0p0 = np.kron(
        np.eye(d, dtype=complex)[0], fourier_operator(d).matrix[:, 0]
    )
    amps = amps + beta * x0p0
    amps /= np.linalg.norm(amps)
    return ProgramState(d, float(alpha), float(beta), PureState((d, d), amps))


def cloner_program(dim: int) -> ProgramState:
    """Symmetric (alpha = beta) program: the universal cloner setting."""
    d = validate_dim(dim)
    alpha = math.sqrt(d / (2.0 * (d + 1)))
    return program_state(d, alpha, alpha)


def _program_ket(program: ProgramState | PureState) -> PureState:
    ket = program.ket if isinstance(program, ProgramState) else program
    if ket.num_registers != 2 or ket.dims[0] != ket.dims[1]:
        raise ValueError("program must span two registers of equal dimension")
    return ket


def distribute(psi: PureState, program: ProgramState | PureState) -> DistributorOutput:
    """Run the distributor on input ``psi`` and a two-register program.

    Accepts arbitrary program kets, not only the two-parameter family.
    """
    ket = _program_ket(program)
    if psi.num_registers != 1:
        raise ValueError("input must be a single register")
    d = psi.dim
    if ket.dims[0] != d:
        raise ValueError(f"dimension mismatch: input {d}, program {ket.dims[0]}")
    if d > MAX_TRIPARTITE_DIM:
        raise ValueError(f"dimension {d} exceeds the tripartite cap {MAX_TRIPARTITE_DIM}")
    joint = build_qid_unitary(d).apply(psi.tensor(ket))
    return DistributorOutput(
        joint,
        partial_trace(joint, (0,)),
        partial_trace(joint, (1,)),
        partial_trace(joint, (2,)),
    )


def predicted_outputs(dim: int, alpha: float, beta: float, psi: PureState) -> DistributorOutput:
    """Closed-form reduced outputs for the two-parameter program family.

    rho1 = (a^2 + 2ab/N) rho_in + (b^2/N) 1
    rho2 = (b^2 + 2ab/N) rho_in + (a^2/N) 1
    rho3 = (2ab/N) rho_in^T + ((N - 2ab)/N^2) 1
    """
    d = validate_dim(dim)
    if psi.dims != (d,):
        raise ValueError("psi must be a single register of the given dimension")
    residual = alpha * alpha + beta * beta + 2 * alpha * beta / d - 1.0
    if abs(residual) > ATOL_CHAIN:
        raise ValueError(f"(alpha, beta) violate the normalisation condition by {residual:.3e}")
    rho_in = np.outer(psi.amplitudes, psi.amplitudes.conj())
    eye = np.eye(d)
    ab = alpha * beta
    rho1 = (alpha**2 + 2 * ab / d) * rho_in + (beta**2 / d) * eye
    rho2 = (beta**2 + 2 * ab / d) * rho_in + (alpha**2 / d) * eye
    rho3 = (2 * ab / d) * rho_in.T + ((d - 2 * ab) / d**2) * eye
    return DistributorOutput(
        None,
        DensityOperator((d,), rho1),
        DensityOperator((d,), rho2),
        DensityOperator((d,), rho3),
    )


def scaling_factor(dim: int) -> float:
    """Input-projector weight of each clone output: (N+2)/(2(N+1))."""
    d = validate_dim(dim)
    return (d + 2) / (2.0 * (d + 1))


def clone_fidelity(dim: int) -> float:
    """Universal-cloner fidelity s + (1-s)/N = (N+3)/(2(N+1))."""
    d = validate_dim(dim)
    return (d + 3) / (2.0 * (d + 1))


def covariance_check(
    psi: PureState, program: ProgramState | PureState, n: int, m: int
) -> float:
    """Max deviation between shifting the input and shifting the outputs.

    Displacing the input by shift_x(n)*shift_p(m) must displace the reduced
    outputs 1 and 2 by the same operator and output 3 by
    shift_x(n)*shift_p(-m).  Returns the largest elementwise deviation.
    """
    d = psi.dim
    base = distribute(psi, program)
    s12 = (shift_x(d, n) @ shift_p(d, m)).matrix
    s3 = (shift_x(d, n) @ shift_p(d, -m)).matrix
    shifted_in = PureState((d,), s12 @ psi.amplitudes)
    moved = distribute(shifted_in, program)
    dev = 0.0
    for rho_moved, rho_base, s in (
        (moved.rho1, base.rho1, s12),
        (moved.rho2, base.rho2, s12),
        (moved.rho3, base.rho3, s3),
    ):
        dev = max(dev, float(np.abs(rho_moved.matrix - s @ rho_base.matrix @ s.conj().T).max()))
    return dev


def output_negativity(joint: PureState, pair: tuple[int, int] = (0, 1)) -> float:
    """Negativity between two output registers of a joint distributor state.

    Exposed for exploring finite-N entanglement of the clones; no
    monotonicity in N is claimed.
    """
    rho = partial_trace(joint, pair)
    return negativity(rho, sys=1)


def classical_distributor_fidelity(m_in: int, m_out: int, overlap: float) -> float:
    """Coin-flip routing distributor: m_in inputs scattered over m_out outputs.

    Each output receives an input with probability m_in/m_out and otherwise
    a random state of mean fidelity ``overlap``.
    """
    if m_in < 1 or int(m_in) != m_in or int(m_out) != m_out:
        raise ValueError("m_in and m_out must be positive integers")
    if m_out < m_in:
        raise ValueError(f"m_out = {m_out} must be >= m_in = {m_in}")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    ratio = m_in / m_out
    return ratio + (1.0 - ratio) * overlap
