"""Dense linear algebra for registers of N-level systems (qudits).

The computational basis throughout is the position-like ``x``-basis.
Multi-register amplitude vectors are stored register-major: the basis
label ``(k1, k2, ..., kr)`` sits at flat index
``k1*(N2*...*Nr) + k2*(N3*...*Nr) + ... + kr``, i.e. C-order of a
reshape to ``dims``.  Global phases are never stripped; state equality
is tested up to a single global phase via
:meth:`PureState.distance_up_to_phase`.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

__all__ = [
    "ATOL_EXACT",
    "ATOL_CHAIN",
    "MAX_TRIPARTITE_DIM",
    "PureState",
    "DensityOperator",
    "Operator",
    "validate_dim",
    "fourier_operator",
    "shift_x",
    "shift_p",
    "x_operator",
    "p_operator",
    "entangled_state",
    "partial_trace",
    "fidelity",
    "transpose_op",
    "negativity",
    "haar_random_state",
]

# Exact algebraic identities (unitarity, norms, permutations).
ATOL_EXACT = 1e-12
# Chained floating-point pipelines (partial traces, eigenvalues).
ATOL_CHAIN = 1e-10
# Tripartite pure-state simulation stores N^3 amplitudes; keep it sane.
MAX_TRIPARTITE_DIM = 64


def validate_dim(dim: int) -> int:
    """Check that ``dim`` is an integer Hilbert-space dimension >= 2."""
    if int(dim) != dim or dim < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


class PureState:
    """Normalised pure state over one or more qudit registers.

    Args:
        dims: per-register dimensions, e.g. ``(3, 3)`` for two qutrits.
        amplitudes: complex vector of length ``prod(dims)``, register-major.
    """

    __slots__ = ("dims", "amplitudes")

    def __init__(self, dims: Sequence[int], amplitudes: np.ndarray):
        self.dims = tuple(validate_dim(d) for d in dims)
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        expected = int(np.prod(self.dims))
        if amps.size != expected:
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {expected}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL_EXACT:
            raise ValueError(f"state is not normalised: |norm - 1| = {abs(norm - 1):.3e}")
        self.amplitudes = amps

    @property
    def num_registers(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        """Dimension of a single-register state."""
        if len(self.dims) != 1:
            raise ValueError("state spans more than one register")
        return self.dims[0]

    def as_tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per register."""
        return self.amplitudes.reshape(self.dims)

    def tensor(self, other: "PureState") -> "PureState":
        """Tensor product, ``self`` registers first."""
        return PureState(self.dims + other.dims, np.kron(self.amplitudes, other.amplitudes))

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other>."""
        if self.dims != other.dims:
            raise ValueError(f"register mismatch: {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def distance_up_to_phase(self, other: "PureState") -> float:
        """Euclidean distance after aligning the optimal global phase."""
        ov = self.overlap(other)
        phase = ov / abs(ov) if abs(ov) > 0 else 1.0
        return float(np.linalg.norm(self.amplitudes - other.amplitudes / phase))

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()))

    @classmethod
    def basis(cls, dims: Sequence[int], labels: Sequence[int]) -> "PureState":
        """Computational basis state |labels[0], labels[1], ...>."""
        dims = tuple(dims)
        if len(labels) != len(dims):
            raise ValueError("one label per register required")
        for lab, d in zip(labels, dims):
            if not 0 <= lab < d:
                raise ValueError(f"label {lab} out of range for dimension {d}")
        amps = np.zeros(int(np.prod(dims)), dtype=complex)
        amps[int(np.ravel_multi_index(tuple(labels), dims))] = 1.0
        return cls(dims, amps)

    def __repr__(self) -> str:  # pragma: no cover
        return f"PureState(dims={self.dims})"


def haar_random_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    """Haar-random pure state: normalised standard complex normal vector."""
    n = int(np.prod(tuple(dims)))
    vec = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(dims, vec / np.linalg.norm(vec))


class DensityOperator:
    """Hermitian, positive, unit-trace operator over qudit registers."""

    __slots__ = ("dims", "matrix")

    def __init__(self, dims: Sequence[int], matrix: np.ndarray):
        self.dims = tuple(validate_dim(d) for d in dims)
        mat = np.asarray(matrix, dtype=complex)
        d = int(np.prod(self.dims))
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dimension {d}")
        if np.abs(mat - mat.conj().T).max() > ATOL_CHAIN:
            raise ValueError("matrix is not Hermitian")
        tr = np.trace(mat)
        if abs(tr - 1.0) > ATOL_CHAIN:
            raise ValueError(f"trace is {tr}, expected 1")
        min_eig = float(np.linalg.eigvalsh(mat).min())
        if min_eig < -ATOL_CHAIN:
            raise ValueError(f"matrix has negative eigenvalue {min_eig:.3e}")
        self.matrix = mat

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityOperator(dims={self.dims})"


class Operator:
    """Dense operator on one or more qudit registers."""

    __slots__ = ("dims", "matrix")

    def __init__(self, dims: Sequence[int], matrix: np.ndarray, *, check_unitary: bool = False):
        self.dims = tuple(validate_dim(d) for d in dims)
        mat = np.asarray(matrix, dtype=complex)
        d = int(np.prod(self.dims))
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dimension {d}")
        if check_unitary:
            err = np.abs(mat.conj().T @ mat - np.eye(d)).max()
            if err > ATOL_EXACT:
                raise ValueError(f"operator is not unitary: |U^dag U - 1| = {err:.3e}")
        self.matrix = mat

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def dagger(self) -> "Operator":
        return Operator(self.dims, self.matrix.conj().T)

    def apply(self, state: PureState) -> PureState:
        """Apply to a state spanning exactly the operator's registers."""
        if state.dims != self.dims:
            raise ValueError(f"register mismatch: {state.dims} vs {self.dims}")
        return PureState(state.dims, self.matrix @ state.amplitudes)

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dims != other.dims:
            raise ValueError("register mismatch in operator product")
        return Operator(self.dims, self.matrix @ other.matrix)


def fourier_operator(dim: int) -> Operator:
    """Discrete Fourier operator F[k, l] = exp(2*pi*i*k*l/N)/sqrt(N).

    Columns are the momentum-like basis states written in the x-basis, so
    F maps p-basis coordinates to x-basis coordinates and F X F^dag is the
    momentum label operator.
    """
    n = validate_dim(dim)
    k = np.arange(n)
    mat = np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    return Operator((n,), mat, check_unitary=True)


def shift_x(dim: int, n: int) -> Operator:
    """Cyclic position shift: |x_k> -> |x_(k+n) mod N>."""
    d = validate_dim(dim)
    mat = np.roll(np.eye(d, dtype=complex), int(n) % d, axis=0)
    return Operator((d,), mat, check_unitary=True)


def shift_p(dim: int, m: int) -> Operator:
    """Momentum shift, diagonal in the x-basis: exp(2*pi*i*m*l/N) on |x_l>.

    Together with :func:`shift_x` these satisfy the Weyl commutation
    relation ``shift_p(m) @ shift_x(n) = exp(2*pi*i*m*n/N) * shift_x(n) @
    shift_p(m)``.
    """
    d = validate_dim(dim)
    mat = np.diag(np.exp(2j * np.pi * int(m) * np.arange(d) / d))
    return Operator((d,), mat, check_unitary=True)


def x_operator(dim: int) -> Operator:
    """Position label operator, diag(0, 1, ..., N-1)."""
    d = validate_dim(dim)
    return Operator((d,), np.diag(np.arange(d).astype(complex)))


def p_operator(dim: int) -> Operator:
    """Momentum label operator F X F^dag."""
    f = fourier_operator(dim).matrix
    xop = x_operator(dim).matrix
    return Operator((dim,), f @ xop @ f.conj().T)


def entangled_state(dim: int, m: int, n: int) -> PureState:
    """Maximally entangled two-register state with phase index m, shift index n.

    Amplitude exp(2*pi*i*m*k/N)/sqrt(N) on the basis pair (k, (k-n) mod N),
    zero elsewhere.  The N^2 states for 0 <= m, n < N form an orthonormal
    basis of the two-register space.
    """
    d = validate_dim(dim)
    if not (0 <= m < d and 0 <= n < d):
        raise ValueError(f"indices (m={m}, n={n}) out of range for N={d}")
    amps = np.zeros(d * d, dtype=complex)
    k = np.arange(d)
    amps[k * d + (k - n) % d] = np.exp(2j * np.pi * m * k / d) / np.sqrt(d)
    return PureState((d, d), amps)


def _keep_indices(keep: Iterable[int], num_registers: int) -> tuple[int, ...]:
    kept = tuple(sorted(set(int(i) for i in keep)))
    if not kept:
        raise ValueError("keep set is empty")
    if any(i < 0 or i >= num_registers for i in kept):
        raise ValueError(f"register index out of range in {kept}")
    if len(kept) == num_registers:
        raise ValueError("keep set must be a proper subset of the registers")
    return kept


def partial_trace(state: PureState | DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Reduced density operator over the registers in ``keep`` (0-based).

    ``keep`` is treated as a set; kept registers stay in ascending order.
    """
    if isinstance(state, PureState):
        kept = _keep_indices(keep, state.num_registers)
        tensor = np.moveaxis(state.as_tensor(), kept, range(len(kept)))
        d_keep = int(np.prod([state.dims[i] for i in kept]))
        flat = tensor.reshape(d_keep, -1)
        mat = flat @ flat.conj().T
        return DensityOperator(tuple(state.dims[i] for i in kept), mat)
    if isinstance(state, DensityOperator):
        kept = _keep_indices(keep, len(state.dims))
        r = len(state.dims)
        tensor = state.matrix.reshape(state.dims + state.dims)
        traced = [i for i in range(r) if i not in kept]
        # contract bra/ket axis pairs of the traced registers, highest first
        for i in sorted(traced, reverse=True):
            tensor = np.trace(tensor, axis1=i, axis2=i + (tensor.ndim // 2))
        d_keep = int(np.prod([state.dims[i] for i in kept]))
        return DensityOperator(
            tuple(state.dims[i] for i in kept), tensor.reshape(d_keep, d_keep)
        )
    raise TypeError(f"unsupported state type {type(state)!r}")


def fidelity(rho: DensityOperator, psi: PureState) -> float:
    """Pure-state fidelity <psi|rho|psi>, clipped to [0, 1]."""
    if rho.dims != psi.dims:
        raise ValueError(f"dimension mismatch: {rho.dims} vs {psi.dims}")
    val = np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)
    if abs(val.imag) > ATOL_EXACT:
        raise ValueError(f"fidelity has imaginary part {val.imag:.3e}")
    return float(np.clip(val.real, 0.0, 1.0))


def transpose_op(rho: DensityOperator) -> DensityOperator:
    """Matrix transpose in the x-basis (equals complex conjugation)."""
    return DensityOperator(rho.dims, rho.matrix.T.copy())


def negativity(rho: DensityOperator, sys: int = 1) -> float:
    """Entanglement negativity of a two-register density operator.

    Sum of |negative eigenvalues| of the partial transpose on register
    ``sys``; zero for separable states.
    """
    if len(rho.dims) != 2:
        raise ValueError("negativity requires a two-register density operator")
    if sys not in (0, 1):
        raise ValueError("sys must be 0 or 1")
    da, db = rho.dims
    tensor = rho.matrix.reshape(da, db, da, db)
    if sys == 0:
        tensor = tensor.transpose(2, 1, 0, 3)
    else:
        tensor = tensor.transpose(0, 3, 2, 1)
    eigs = np.linalg.eigvalsh(tensor.reshape(da * db, da * db))
    return float(-eigs[eigs < 0].sum())
