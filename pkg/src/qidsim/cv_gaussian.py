"""Continuous-variable limit of the distributor: Gaussian states, reduction
kernels, Wigner-function numerics and the coherent-state cloner.

Conventions (fixed throughout, they differ from the common delta
normalisation):

* hbar = 1, vacuum quadrature variance 1/2;
* position kets obey <x|y> = sqrt(2*pi) * delta(x - y), so a single-mode
  wavefunction satisfies  integral |phi(x)|^2 dx = sqrt(2*pi);
* phase-space integrals carry the invariant measure dx dp / (2*pi), and a
  Wigner function is normalised as (1/2pi) * iint W dx dp = 1;
* a Gaussian state with covariance S and mean mu has
  W(r) = exp(-(r-mu)^T S^-1 (r-mu) / 2) / sqrt(det S).

Gaussian states are covariance matrices with quadratures interleaved as
(x1, p1, x2, p2, ...).  The non-Gaussian squeezed-program analysis is done
on sampled Wigner grids through closed-form reduction kernels; grids are
only trusted up to ``XI_GRID_MAX`` squeezing, beyond which asymptotic
expressions take over.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len

__all__ = [
    "XI_GRID_MAX",
    "SqueezingParam",
    "GridResolutionError",
    "WignerGrid",
    "GaussianState",
    "symplectic_form",
    "tensor_gaussian",
    "apply_symplectic",
    "transpose_gaussian",
    "gaussian_fidelity",
    "regularized_x0",
    "regularized_p0",
    "regularized_epr",
    "thermal_reduction",
    "x0_wavefunction",
    "p0_wavefunction",
    "epr_wavefunction",
    "cv_norm_constraint",
    "solve_cv_beta",
    "k3_total_weight",
    "KernelTriple",
    "kernel_eval",
    "kernel_norm_expected",
    "kernel_wigner_value",
    "kernel_wigner_k3_asymptotic",
    "kernel_characteristic",
    "kernel_wigner",
    "convolve_with_kernel",
    "output_wigner",
    "cv_fidelity",
    "cv_fidelity_asymptotic",
    "suggested_half_width",
    "qid_position_matrix",
    "qid_symplectic",
    "cloner_program_gaussian",
    "coherent_cloner",
]

# Grid-based pipelines are only used up to this squeezing; the narrow and
# wide kernel widths then span a factor e^{4*xi} ~ 1.6e5 which a single
# lattice cannot resolve.
XI_GRID_MAX = 3.0


class GridResolutionError(ValueError):
    """A sampled grid cannot resolve or contain the requested feature."""


@dataclass(frozen=True)
class SqueezingParam:
    """Squeezing strength xi >= 0 of the regularised program states."""

    xi: float

    def __post_init__(self):
        if self.xi < 0:
            raise ValueError(f"squeezing must be nonnegative, got {self.xi}")

    @property
    def nbar(self) -> float:
        """Mean excitation number sinh(xi)^2."""
        return math.sinh(self.xi) ** 2

    @property
    def grid_safe(self) -> bool:
        return self.xi <= XI_GRID_MAX


def _as_xi(value: float | SqueezingParam) -> float:
    xi = value.xi if isinstance(value, SqueezingParam) else float(value)
    if xi < 0:
        raise ValueError(f"squeezing must be nonnegative, got {xi}")
    return xi


def _ab(xi: float) -> tuple[float, float]:
    return math.exp(2 * xi), math.exp(-2 * xi)


# ---------------------------------------------------------------------------
# Wigner grids
# ---------------------------------------------------------------------------


@dataclass
class WignerGrid:
    """Real-valued quasi-probability sampled on a rectangular (x, p) lattice.

    ``values[i, j]`` is W(x[i], p[j]) with both axes inclusive of their
    endpoints.  Integrals are plain Riemann sums with the dx dp / 2pi
    measure; ranges are meant to be generous enough (several sigma) that
    tail truncation is negligible.
    """

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    n_x: int
    n_p: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_x < 2 or self.n_p < 2:
            raise ValueError("grids need at least two points per axis")
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise ValueError("empty grid range")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.n_x, self.n_p):
            raise ValueError(f"values shape {vals.shape} != ({self.n_x}, {self.n_p})")
        self.values = vals

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.p, indexing="ij")

    def total_mass(self) -> float:
        """(1/2pi) * iint W dx dp by Riemann sum."""
        return float(self.values.sum() * self.dx * self.dp / (2 * np.pi))

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """(mean, covariance) of the grid treated as a distribution."""
        xg, pg = self.meshgrid()
        w = self.values / self.values.sum()
        mean = np.array([(xg * w).sum(), (pg * w).sum()])
        dxg, dpg = xg - mean[0], pg - mean[1]
        cov = np.array(
            [
                [(dxg * dxg * w).sum(), (dxg * dpg * w).sum()],
                [(dxg * dpg * w).sum(), (dpg * dpg * w).sum()],
            ]
        )
        return mean, cov

    def same_lattice(self, other: "WignerGrid", tol: float = 1e-9) -> bool:
        return (
            self.n_x == other.n_x
            and self.n_p == other.n_p
            and abs(self.x_min - other.x_min) < tol
            and abs(self.x_max - other.x_max) < tol
            and abs(self.p_min - other.p_min) < tol
            and abs(self.p_max - other.p_max) < tol
        )

    def like(self, values: np.ndarray) -> "WignerGrid":
        return WignerGrid(
            self.x_min, self.x_max, self.p_min, self.p_max, self.n_x, self.n_p, values
        )

    @classmethod
    def centered(cls, half_width: float, n: int = 512) -> "WignerGrid":
        """Square lattice over [-half_width, half_width]^2, all zeros."""
        return cls(
            -half_width, half_width, -half_width, half_width, n, n, np.zeros((n, n))
        )

    def to_csv(self, stream) -> None:
        """(x, p, value) triples, comma separated, 17 significant digits."""
        stream.write("x,p,value\n")
        xs, ps = self.x, self.p
        for i in range(self.n_x):
            for j in range(self.n_p):
                stream.write(f"{xs[i]:.17g},{ps[j]:.17g},{self.values[i, j]:.17g}\n")

    def to_json(self, stream) -> None:
        """Metadata plus row-major values."""
        doc = {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "nx": self.n_x,
            "np": self.n_p,
            "values": [float(f"{v:.17g}") for v in self.values.ravel()],
        }
        json.dump(doc, stream)


def suggested_half_width(xi: float | SqueezingParam, input_sigma: float = math.sqrt(0.5)) -> float:
    """Half-width covering 8 standard deviations of the broadest state present
    in an output-distribution pipeline (input convolved with the thermal-like
    kernel)."""
    xi = _as_xi(xi)
    return 8.0 * max(input_sigma, math.sqrt(input_sigma**2 + math.cosh(2 * xi)))


# ---------------------------------------------------------------------------
# Gaussian states
# ---------------------------------------------------------------------------


def symplectic_form(modes: int) -> np.ndarray:
    """Canonical form J for interleaved (x1, p1, x2, p2, ...) ordering."""
    j2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * modes, 2 * modes))
    for i in range(modes):
        out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = j2
    return out


@dataclass
class GaussianState:
    """Gaussian state: mean vector and covariance over interleaved quadratures."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        if mean.size % 2 != 0 or cov.shape != (mean.size, mean.size):
            raise ValueError("mean must have even length matching the covariance")
        if np.abs(cov - cov.T).max() > 1e-12:
            raise ValueError("covariance must be symmetric")
        j = symplectic_form(mean.size // 2)
        min_eig = float(np.linalg.eigvalsh(cov + 0.5j * j).min())
        if min_eig < -1e-9:
            raise ValueError(f"covariance violates the uncertainty relation by {min_eig:.3e}")
        self.mean, self.cov = mean, cov

    @property
    def modes(self) -> int:
        return self.mean.size // 2

    @classmethod
    def vacuum(cls, modes: int = 1) -> "GaussianState":
        return cls(np.zeros(2 * modes), 0.5 * np.eye(2 * modes))

    @classmethod
    def coherent(cls, z: complex) -> "GaussianState":
        """Coherent state of amplitude z; mean quadratures sqrt(2)*(Re z, Im z)."""
        return cls(np.sqrt(2.0) * np.array([z.real, z.imag]), 0.5 * np.eye(2))

    @classmethod
    def thermal(cls, nbar: float) -> "GaussianState":
        if nbar < 0:
            raise ValueError("mean excitation must be nonnegative")
        return cls(np.zeros(2), ((1 + 2 * nbar) / 2.0) * np.eye(2))

    @classmethod
    def from_position_quadratic_form(cls, m: np.ndarray) -> "GaussianState":
        """Pure state with real wavefunction phi(x) ~ exp(-x^T M x / 2).

        Position covariance (1/2) M^-1, momentum covariance (1/2) M, no
        cross terms.
        """
        m = np.asarray(m, dtype=float)
        n = m.shape[0]
        cov = np.zeros((2 * n, 2 * n))
        cov[0::2, 0::2] = 0.5 * np.linalg.inv(m)
        cov[1::2, 1::2] = 0.5 * m
        return cls(np.zeros(2 * n), cov)

    def reduce(self, mode: int) -> "GaussianState":
        """Single-mode reduction (discard the other modes)."""
        if not 0 <= mode < self.modes:
            raise ValueError(f"mode {mode} out of range")
        s = slice(2 * mode, 2 * mode + 2)
        return GaussianState(self.mean[s].copy(), self.cov[s, s].copy())

    def wigner_at(self, point: np.ndarray) -> float:
        """W(r) = exp(-(r-mu)^T S^-1 (r-mu)/2) / sqrt(det S)."""
        d = np.asarray(point, dtype=float).ravel() - self.mean
        return float(
            np.exp(-0.5 * d @ np.linalg.solve(self.cov, d))
            / np.sqrt(np.linalg.det(self.cov))
        )

    def wigner_grid(self, grid: WignerGrid) -> WignerGrid:
        """Sample a single-mode state's Wigner function on ``grid``'s lattice."""
        if self.modes != 1:
            raise ValueError("grid sampling is for single-mode states")
        xg, pg = grid.meshgrid()
        inv = np.linalg.inv(self.cov)
        dxg, dpg = xg - self.mean[0], pg - self.mean[1]
        q = inv[0, 0] * dxg**2 + 2 * inv[0, 1] * dxg * dpg + inv[1, 1] * dpg**2
        return grid.like(np.exp(-0.5 * q) / np.sqrt(np.linalg.det(self.cov)))


def tensor_gaussian(*states: GaussianState) -> GaussianState:
    """Product state: stack means, direct-sum covariances."""
    mean = np.concatenate([s.mean for s in states])
    cov = np.zeros((mean.size, mean.size))
    at = 0
    for s in states:
        n = s.mean.size
        cov[at : at + n, at : at + n] = s.cov
        at += n
    return GaussianState(mean, cov)


def apply_symplectic(s: np.ndarray, state: GaussianState) -> GaussianState:
    """Transport mean and covariance through a symplectic map."""
    s = np.asarray(s, dtype=float)
    if s.shape != (state.mean.size, state.mean.size):
        raise ValueError("symplectic matrix does not match the state size")
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def transpose_gaussian(state: GaussianState) -> GaussianState:
    """Transpose in the x-basis = momentum reflection p -> -p."""
    r = np.eye(state.mean.size)
    r[1::2, 1::2] *= -1
    # r is diagonal +-1, conjugation is r @ cov @ r
    return GaussianState(r @ state.mean, r @ state.cov @ r)


def gaussian_fidelity(a: GaussianState, b: GaussianState) -> float:
    """Uhlmann fidelity of two single-mode Gaussian states.

    Reduces to the trace overlap <psi|rho|psi> when either state is pure;
    symmetric and equal to 1 iff the states coincide.
    """
    if a.modes != 1 or b.modes != 1:
        raise ValueError("only single-mode states are supported")
    s = a.cov + b.cov
    delta = b.mean - a.mean
    det_s = float(np.linalg.det(s))
    t = (4 * np.linalg.det(a.cov) - 1) * (4 * np.linalg.det(b.cov) - 1)
    t = max(float(t), 0.0)
    denom = math.sqrt(4 * det_s + t) - math.sqrt(t)
    val = 2.0 * math.exp(-0.5 * delta @ np.linalg.solve(s, delta)) / denom
    return float(np.clip(val, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Regularised program states
# ---------------------------------------------------------------------------


def regularized_x0(xi: float | SqueezingParam) -> GaussianState:
    """Squeezed surrogate of the zero-position eigenstate.

    Variances: Var(x) = e^{-2 xi}/2, Var(p) = e^{2 xi}/2.
    """
    a, b = _ab(_as_xi(xi))
    return GaussianState(np.zeros(2), np.diag([b / 2, a / 2]))


def regularized_p0(xi: float | SqueezingParam) -> GaussianState:
    """Squeezed surrogate of the zero-momentum eigenstate."""
    a, b = _ab(_as_xi(xi))
    return GaussianState(np.zeros(2), np.diag([a / 2, b / 2]))


def regularized_epr(xi: float | SqueezingParam) -> GaussianState:
    """Two-mode squeezed vacuum: Var(x1 - x2) = Var(p1 + p2) = e^{-2 xi}."""
    xi = _as_xi(xi)
    c, s = math.cosh(2 * xi), math.sinh(2 * xi)
    cov = 0.5 * np.array(
        [
            [c, 0, s, 0],
            [0, c, 0, -s],
            [s, 0, c, 0],
            [0, -s, 0, c],
        ]
    )
    return GaussianState(np.zeros(4), cov)


def thermal_reduction(xi: float | SqueezingParam) -> GaussianState:
    """One mode of the two-mode squeezed vacuum: thermal with nbar = sinh^2 xi."""
    return regularized_epr(xi).reduce(0)


def x0_wavefunction(xi: float | SqueezingParam, x: np.ndarray) -> np.ndarray:
    """Wavefunction of :func:`regularized_x0` (integral |phi|^2 dx = sqrt(2 pi))."""
    xi = _as_xi(xi)
    return 2**0.25 * np.exp(xi / 2) * np.exp(-math.exp(2 * xi) * np.asarray(x) ** 2 / 2)


def p0_wavefunction(xi: float | SqueezingParam, x: np.ndarray) -> np.ndarray:
    """Wavefunction of :func:`regularized_p0`."""
    xi = _as_xi(xi)
    return 2**0.25 * np.exp(-xi / 2) * np.exp(-math.exp(-2 * xi) * np.asarray(x) ** 2 / 2)


def epr_wavefunction(xi: float | SqueezingParam, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Two-mode wavefunction of :func:`regularized_epr`."""
    a, b = _ab(_as_xi(xi))
    x1, x2 = np.asarray(x1), np.asarray(x2)
    return math.sqrt(2) * np.exp(-(a / 4) * (x1 - x2) ** 2 - (b / 4) * (x1 + x2) ** 2)


def cv_norm_constraint(alpha: float, beta: float, xi: float | SqueezingParam) -> float:
    """Residual alpha^2 + beta^2 + 4 alpha beta / sqrt(4 + 2 sinh^2 2 xi) - 1.

    Zero when (alpha, beta) normalise the superposed program state; the
    cross term is twice the overlap of its two branches.
    """
    return alpha**2 + beta**2 + alpha * beta * k3_total_weight(xi) - 1.0


def solve_cv_beta(alpha: float, xi: float | SqueezingParam) -> float:
    """Nonnegative beta completing ``alpha`` under the normalisation constraint."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    g = k3_total_weight(xi)
    beta = (-g * alpha + math.sqrt(g * g * alpha * alpha + 4 * (1 - alpha * alpha))) / 2.0
    return max(beta, 0.0)


def k3_total_weight(xi: float | SqueezingParam) -> float:
    """4 / sqrt(4 + 2 sinh^2 2 xi): the cross-kernel weight, equal to twice
    the overlap of the entangled and product program branches."""
    xi = _as_xi(xi)
    return 4.0 / math.sqrt(4.0 + 2.0 * math.sinh(2 * xi) ** 2)


@dataclass(frozen=True)
class KernelTriple:
    """Validated (xi, alpha, beta) parameter set of the kernel decomposition.

    Construction enforces the continuous normalisation constraint; use the
    raw alpha/beta arguments of :func:`output_wigner` for deliberately
    unconstrained scans.
    """

    xi: float
    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "xi", _as_xi(self.xi))
        residual = cv_norm_constraint(self.alpha, self.beta, self.xi)
        if abs(residual) > 1e-10:
            raise ValueError(
                f"(alpha, beta) violate the normalisation constraint by {residual:.3e}"
            )

    @classmethod
    def from_alpha(cls, alpha: float, xi: float | SqueezingParam) -> "KernelTriple":
        return cls(_as_xi(xi), alpha, solve_cv_beta(alpha, xi))

    @property
    def weights(self) -> tuple[float, float, float]:
        """Kernel weights (alpha^2, beta^2, alpha*beta)."""
        return (self.alpha**2, self.beta**2, self.alpha * self.beta)


# ---------------------------------------------------------------------------
# Reduction kernels
#
# Tracing two modes of the distributed three-mode state leaves a density
# operator of the form
#     rho(y, y') = (1/sqrt(2 pi)) * integral K(y - y'; eta) psi(y - eta)
#                  psi*(y' - eta) d eta
# with K = alpha^2 K1 + beta^2 K2 + alpha beta K3.  The same structure holds
# for the second output with a different kernel triple (``output=2``); slot
# conventions below are always (xbar, eta) = (matrix-element difference,
# displacement).
# ---------------------------------------------------------------------------


def _check_which(which: int) -> int:
    if which not in (1, 2, 3):
        raise ValueError(f"kernel selector must be 1, 2 or 3, got {which!r}")
    return which


def kernel_eval(
    which: int,
    xi: float | SqueezingParam,
    xbar: np.ndarray,
    eta: np.ndarray,
    output: int = 1,
) -> np.ndarray:
    """Closed-form reduction kernels K1, K2, K3 (and the output-2 triple).

    The cross kernel K3 has even/odd structure exp(+c*xbar*eta) +
    exp(-c*xbar*eta); the product xbar*eta in the exponent is what direct
    quadrature of the defining integral yields.
    """
    which = _check_which(which)
    xi = _as_xi(xi)
    a, b = _ab(xi)
    xbar, eta = np.asarray(xbar, dtype=float), np.asarray(eta, dtype=float)
    if output == 1:
        if which == 1:
            return math.exp(xi) * np.exp(-b * xbar**2 / 2 - a * eta**2 / 2)
        if which == 2:
            c = math.cosh(2 * xi)
            return np.exp(-c * xbar**2 / 2 - eta**2 / (2 * c)) / math.sqrt(c)
        d = a + 3 * b
        return (
            (2 / math.sqrt(d))
            * np.exp(-(1 + b * b) * xbar**2 / d - (a * a + b * b + 6) * eta**2 / (4 * d))
            * 2 * np.cosh(b * (a - b) * xbar * eta / d)
        )
    if output == 2:
        if which == 1:
            return (2 / math.sqrt(a + b)) * np.exp(
                -2 * eta**2 / (a + b) - (a + b) * xbar**2 / 8
            )
        if which == 2:
            return math.sqrt(2) * math.exp(xi) * np.exp(-a * eta**2 - b * xbar**2 / 4)
        d = a + 3 * b
        return (
            (2 * math.sqrt(2) / math.sqrt(d))
            * np.exp(
                -(a * a + b * b + 6) * eta**2 / (2 * d) - (1 + b * b) * xbar**2 / (2 * d)
            )
            * 2 * np.cosh(b * (a - b) * xbar * eta / d)
        )
    raise ValueError(f"output must be 1 or 2, got {output!r}")


def kernel_norm_expected(which: int, xi: float | SqueezingParam) -> float:
    """Expected value of (1/sqrt(2 pi)) * integral K(0; eta) d eta."""
    which = _check_which(which)
    return 1.0 if which in (1, 2) else k3_total_weight(xi)


def kernel_wigner_value(
    which: int, xi: float | SqueezingParam, x: np.ndarray, p: np.ndarray, output: int = 1
) -> np.ndarray:
    """Closed-form Wigner functions of the reduction kernels.

    The Gaussian kernels give isotropic Gaussians; the cross kernel gives an
    isotropic Gaussian times cos(c * x * p), which may dip negative.
    """
    which = _check_which(which)
    xi = _as_xi(xi)
    a, b = _ab(xi)
    x, p = np.asarray(x, dtype=float), np.asarray(p, dtype=float)
    if output == 1:
        if which == 1:
            return a * np.exp(-a * (x**2 + p**2) / 2)
        if which == 2:
            c = math.cosh(2 * xi)
            return np.exp(-(x**2 + p**2) / (2 * c)) / c
        d = a + 3 * b
        one_b2 = 1 + b * b
        return (
            (4 / math.sqrt(2 * one_b2))
            * np.exp(-d * (x**2 + p**2) / (4 * one_b2))
            * np.cos(b * (a - b) * x * p / (2 * one_b2))
        )
    if output == 2:
        if which == 1:
            return (4 / (a + b)) * np.exp(-2 * (x**2 + p**2) / (a + b))
        if which == 2:
            return 2 * a * np.exp(-a * (x**2 + p**2))
        return 2.0 * kernel_wigner_value(3, xi, math.sqrt(2) * x, math.sqrt(2) * p)
    raise ValueError(f"output must be 1 or 2, got {output!r}")


def kernel_wigner_k3_asymptotic(
    xi: float | SqueezingParam, x: np.ndarray, p: np.ndarray
) -> np.ndarray:
    """Large-squeezing form of the cross-kernel Wigner function,
    2*sqrt(2) * exp(-e^{2 xi} (x^2 + p^2) / 4)."""
    a = math.exp(2 * _as_xi(xi))
    return 2 * math.sqrt(2) * np.exp(-a * (np.asarray(x) ** 2 + np.asarray(p) ** 2) / 4)


def kernel_characteristic(
    which: int, xi: float | SqueezingParam, kx: np.ndarray, kp: np.ndarray, output: int = 1
) -> np.ndarray:
    """Fourier transform iint W(x, p) exp(-i(kx x + kp p)) dx dp of the
    kernel Wigner functions, in closed form (used by the convolution path so
    narrow kernels never need real-space sampling)."""
    which = _check_which(which)
    xi = _as_xi(xi)
    a, b = _ab(xi)
    kx, kp = np.asarray(kx, dtype=float), np.asarray(kp, dtype=float)
    two_pi = 2 * np.pi
    if output == 1:
        if which == 1:
            return two_pi * np.exp(-b * (kx**2 + kp**2) / 2)
        if which == 2:
            return two_pi * np.exp(-math.cosh(2 * xi) * (kx**2 + kp**2) / 2)
        d = a + 3 * b
        c = (a * a + b * b + 6) / (4 * d)
        g = b * (a - b) * kp / d
        return (
            math.sqrt(two_pi)
            * (4 / math.sqrt(d))
            * np.exp(-(1 + b * b) * kp**2 / d)
            * math.sqrt(np.pi / c)
            * np.exp((g * g - kx**2) / (4 * c))
            * np.cos(g * kx / (2 * c))
        )
    if output == 2:
        if which == 1:
            return two_pi * np.exp(-math.cosh(2 * xi) * (kx**2 + kp**2) / 4)
        if which == 2:
            return two_pi * np.exp(-b * (kx**2 + kp**2) / 4)
        return kernel_characteristic(3, xi, kx / math.sqrt(2), kp / math.sqrt(2))
    raise ValueError(f"output must be 1 or 2, got {output!r}")


def _kernel_sigma(which: int, xi: float, output: int) -> float:
    """Per-quadrature standard deviation of a kernel Wigner function
    (Gaussian part for the cross kernel)."""
    a, b = _ab(xi)
    if output == 1:
        return {
            1: math.sqrt(b),
            2: math.sqrt(math.cosh(2 * xi)),
            3: math.sqrt(2 * (1 + b * b) / (a + 3 * b)),
        }[which]
    return {
        1: math.sqrt(math.cosh(2 * xi) / 2),
        2: math.sqrt(b / 2),
        3: math.sqrt((1 + b * b) / (a + 3 * b)),
    }[which]


def kernel_wigner(
    which: int, xi: float | SqueezingParam, grid: WignerGrid, output: int = 1
) -> WignerGrid:
    """Sample a kernel Wigner function on ``grid``'s lattice.

    The Gaussian kernels are sampled from their closed forms; the cross
    kernel is computed by a numerical cosine transform of
    :func:`kernel_eval` over the difference slot.  Raises
    :class:`GridResolutionError` when the lattice cannot resolve the
    e^{-xi}-narrow widths or contain the e^{xi}-wide ones.
    """
    which = _check_which(which)
    xi = _as_xi(xi)
    if xi > XI_GRID_MAX:
        raise GridResolutionError(
            f"xi = {xi} exceeds the grid-safe maximum {XI_GRID_MAX}; "
            "use the asymptotic closed forms instead"
        )
    sigma = _kernel_sigma(which, xi, output)
    step = max(grid.dx, grid.dp)
    if sigma < 2.5 * step:
        raise GridResolutionError(
            f"kernel width {sigma:.3g} is unresolvable at grid step {step:.3g}"
        )
    half = min(grid.x_max - grid.x_min, grid.p_max - grid.p_min) / 2
    if half < 4 * sigma:
        raise GridResolutionError(
            f"kernel width {sigma:.3g} does not fit in grid half-range {half:.3g}"
        )
    if which in (1, 2):
        xg, pg = grid.meshgrid()
        return grid.like(kernel_wigner_value(which, xi, xg, pg, output=output))
    # cross kernel: W(x, p) = (1/sqrt(2 pi)) * integral K3(z; x) cos(p z) dz
    a, b = _ab(xi)
    d = a + 3 * b
    sig_z = math.sqrt(d / (2 * (1 + b * b)))
    p_max = max(abs(grid.p_min), abs(grid.p_max))
    dz = min(sig_z / 6, np.pi / (4 * p_max + 1e-12))
    z = np.arange(0.0, 8 * sig_z, dz)
    # even integrand: integral = 2 * sum over z >= 0 (half-weight at z = 0)
    weights = np.full(z.size, 2.0 * dz)
    weights[0] = dz
    kmat = kernel_eval(3, xi, z[None, :], grid.x[:, None], output=output)
    cosmat = np.cos(np.outer(z, grid.p))
    vals = (kmat * weights[None, :]) @ cosmat / math.sqrt(2 * np.pi)
    return grid.like(vals)


# ---------------------------------------------------------------------------
# Output Wigner functions
# ---------------------------------------------------------------------------


def convolve_with_kernel(
    grid: WignerGrid, which: int, xi: float | SqueezingParam, output: int = 1
) -> WignerGrid:
    """(1/2pi) * (W conv W^kernel) on the input lattice.

    Runs in Fourier space against the closed-form kernel characteristic
    function, with zero padding sized to the kernel's spread, so narrow
    kernels cost nothing and wide ones only require the lattice to be large
    enough to hold the broadened output.
    """
    which = _check_which(which)
    xi = _as_xi(xi)
    sigma = _kernel_sigma(which, xi, output)
    half = min(grid.x_max - grid.x_min, grid.p_max - grid.p_min) / 2
    if half < 4 * sigma:
        raise GridResolutionError(
            f"kernel spread {sigma:.3g} needs a grid half-range of at least "
            f"{4 * sigma:.3g}, have {half:.3g}"
        )
    mx = int(np.ceil(6 * sigma / grid.dx)) + 1
    mp = int(np.ceil(6 * sigma / grid.dp)) + 1
    nx2 = next_fast_len(grid.n_x + 2 * mx)
    np2 = next_fast_len(grid.n_p + 2 * mp)
    buf = np.zeros((nx2, np2))
    buf[mx : mx + grid.n_x, mp : mp + grid.n_p] = grid.values
    kx = 2 * np.pi * np.fft.fftfreq(nx2, d=grid.dx)
    kp = 2 * np.pi * np.fft.fftfreq(np2, d=grid.dp)
    hat = np.fft.fft2(buf) * kernel_characteristic(
        which, xi, kx[:, None], kp[None, :], output=output
    )
    out = np.fft.ifft2(hat).real[mx : mx + grid.n_x, mp : mp + grid.n_p]
    return grid.like(out / (2 * np.pi))


def output_wigner(
    input_grid: WignerGrid,
    xi: float | SqueezingParam,
    alpha: float,
    beta: float,
    output: int = 1,
) -> WignerGrid:
    """Wigner function of a distributor output for a sampled input.

    For grid-safe squeezing the exact kernel decomposition is used:
    W_out = alpha^2 (W conv W1)/2pi + beta^2 (W conv W2)/2pi
            + alpha beta (W conv W3)/2pi.
    Beyond ``XI_GRID_MAX`` the narrow kernels collapse onto the identity and
    the cross term onto a 4*sqrt(2)*e^{-2 xi} passthrough, leaving only the
    thermal-like convolution.  Normalisation is preserved whenever
    (alpha, beta) satisfy the continuous normalisation constraint.
    """
    xi = _as_xi(xi)
    if output not in (1, 2):
        raise ValueError(f"output must be 1 or 2, got {output!r}")
    # kernel 1 always carries the alpha^2 weight, kernel 2 the beta^2 weight;
    # the output-2 triple already encodes the role reversal of the two modes
    if xi <= XI_GRID_MAX:
        out = np.zeros_like(input_grid.values)
        for which, weight in ((1, alpha * alpha), (2, beta * beta), (3, alpha * beta)):
            if weight != 0.0:
                out += weight * convolve_with_kernel(input_grid, which, xi, output=output).values
        return input_grid.like(out)
    # asymptotic regime: the narrow kernel acts as the identity and the cross
    # kernel as a 4*sqrt(2)*e^{-2 xi} passthrough
    stay = alpha * alpha if output == 1 else beta * beta
    smear = beta * beta if output == 1 else alpha * alpha
    wide_kernel = 2 if output == 1 else 1
    out = stay * input_grid.values
    out = out + 4 * math.sqrt(2) * math.exp(-2 * xi) * alpha * beta * input_grid.values
    if smear != 0.0:
        out = out + smear * convolve_with_kernel(input_grid, wide_kernel, xi, output=output).values
    return input_grid.like(out)


def cv_fidelity(w_in: WignerGrid, w_out: WignerGrid) -> float:
    """(1/2pi) * iint W_in W_out dx dp by grid quadrature.

    Equals <psi|rho_out|psi> when the input grid samples a pure state."""
    if not w_in.same_lattice(w_out):
        raise ValueError("grids are not sampled on the same lattice")
    return float((w_in.values * w_out.values).sum() * w_in.dx * w_in.dp / (2 * np.pi))


def cv_fidelity_asymptotic(
    xi: float | SqueezingParam, alpha: float, beta: float, output: int = 1
) -> float:
    """Closed-form output fidelity for a vacuum (or any coherent) input.

    Gaussian overlaps are exact; the cross term uses its large-squeezing
    passthrough weight, accurate to O(e^{-4 xi}).
    """
    xi = _as_xi(xi)
    b = math.exp(-2 * xi)
    if output == 1:
        stay = 1.0 / (1.0 + b)
        smear = 1.0 / (1.0 + math.cosh(2 * xi))
        return alpha**2 * stay + beta**2 * smear + alpha * beta * k3_total_weight(xi)
    if output == 2:
        stay = 1.0 / (1.0 + b / 2)
        smear = 2.0 / (2.0 + math.cosh(2 * xi))
        return beta**2 * stay + alpha**2 * smear + alpha * beta * k3_total_weight(xi)
    raise ValueError(f"output must be 1 or 2, got {output!r}")


# ---------------------------------------------------------------------------
# Coherent-state cloner
# ---------------------------------------------------------------------------


def qid_position_matrix() -> np.ndarray:
    """Position action of the distributor: (x1, x2, x3) -> A (x1, x2, x3)."""
    return np.array([[1.0, -1.0, 1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0]])


def qid_symplectic() -> np.ndarray:
    """6x6 symplectic matrix of the distributor in interleaved ordering.

    Positions transform with A, momenta with A^-T, so S J S^T = J exactly
    and a momentum kick on the input moves outputs 1 and 2 along and
    output 3 against.
    """
    a = qid_position_matrix()
    a_inv_t = np.linalg.inv(a).T
    s = np.zeros((6, 6))
    s[0::2, 0::2] = a
    s[1::2, 1::2] = np.round(a_inv_t)  # integer entries, no roundoff
    return s


def cloner_program_gaussian() -> GaussianState:
    """Two-mode program state optimising the cloner for coherent inputs.

    Pure Gaussian with wavefunction proportional to
    exp(-(x2^2 + (x3 - x2)^2)/2) over the program registers.
    """
    return GaussianState.from_position_quadratic_form(
        np.array([[2.0, -1.0], [-1.0, 1.0]])
    )


def coherent_cloner(
    input_state: GaussianState,
) -> tuple[GaussianState, GaussianState, GaussianState]:
    """Clone a coherent state through the Gaussian distributor pipeline.

    Outputs 1 and 2 are identical clones (covariance grows by one vacuum
    unit); output 3 concentrates on the phase conjugate of the input.
    """
    if input_state.modes != 1:
        raise ValueError("input must be a single mode")
    if np.abs(input_state.cov - 0.5 * np.eye(2)).max() > 1e-9:
        raise ValueError("input must be coherent (covariance = identity/2)")
    joint = tensor_gaussian(input_state, cloner_program_gaussian())
    out = apply_symplectic(qid_symplectic(), joint)
    return out.reduce(0), out.reduce(1), out.reduce(2)
