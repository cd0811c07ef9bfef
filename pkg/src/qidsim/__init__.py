"""qidsim: simulator for the universal quantum information distributor.

Discrete N-level registers (bases, shift operators, the four-gate
distributor circuit, cloning fidelities) plus the continuous-variable
Gaussian limit (regularised program states, reduction kernels, Wigner-grid
numerics, the coherent-state cloner).
"""

from .qudit_core import (
    DensityOperator,
    Operator,
    PureState,
    entangled_state,
    fidelity,
    fourier_operator,
    haar_random_state,
    negativity,
    partial_trace,
    p_operator,
    shift_p,
    shift_x,
    transpose_op,
    x_operator,
)
from .qid_network import (
    DistributorOutput,
    PermutationGate,
    ProgramState,
    build_qid_unitary,
    classical_distributor_fidelity,
    clone_fidelity,
    cloner_program,
    conditional_add,
    conditional_sub,
    covariance_check,
    distribute,
    predicted_outputs,
    program_state,
    scaling_factor,
    solve_beta,
)
from .cv_gaussian import (
    GaussianState,
    GridResolutionError,
    KernelTriple,
    SqueezingParam,
    WignerGrid,
    coherent_cloner,
    cv_fidelity,
    cv_norm_constraint,
    gaussian_fidelity,
    kernel_eval,
    kernel_wigner,
    output_wigner,
    qid_symplectic,
    regularized_epr,
    regularized_p0,
    regularized_x0,
    solve_cv_beta,
    thermal_reduction,
)

__version__ = "0.1.0"
