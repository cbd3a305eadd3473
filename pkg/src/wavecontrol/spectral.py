"""Dirichlet eigenpairs of the elliptic operator and modal calculus.

The operator -d/dx^i a^{ij}(x) d/dx^j + q(x) with zero boundary conditions is
discretized by symmetric second-order finite differences with harmonic
averaging of the coefficients at half-nodes.  Constant coefficients admit an
analytic backend (exact sine modes); 2D constant-isotropic grids reuse the 1D
finite-difference factors through the Kronecker-sum structure of the assembled
matrix, which yields the same eigenpairs as a dense solve of the 2D matrix.

Eigenvectors are normalized against the trapezoid mass weights, so the stored
Gram matrix is the identity to machine precision.  Conormal boundary traces
are taken with second-order one-sided differences; their accuracy bounds the
accuracy of the observation operator built on top of them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .geometry import DomainSpec, trapezoid_weights

__all__ = [
    "SpectralBasis",
    "ModalCoefficients",
    "eigensolve",
    "project",
    "reconstruct",
    "ds_inner",
    "ds_norm",
    "rescaled_mode",
    "write_spectrum_csv",
]


@dataclass(frozen=True)
class SpectralBasis:
    """Leading Dirichlet eigenpairs on a grid domain.

    lambdas          : (N,) eigenvalues, nondecreasing
    modes            : (N,) + grid shape, eigenfunctions, zero on the boundary
    conormal_traces  : (N, n_boundary) outward conormal derivatives at the
                       boundary nodes, ordered like domain.boundary_nodes()
    mass_weights     : trapezoid quadrature weights of the H = L2 inner product
    boundary_weights : quadrature weights of the boundary measure
    """

    domain: DomainSpec
    lambdas: np.ndarray
    modes: np.ndarray
    conormal_traces: np.ndarray
    mass_weights: np.ndarray
    boundary_weights: np.ndarray
    backend: str

    @property
    def n_modes(self) -> int:
        return len(self.lambdas)

    def h_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.mass_weights * u * v))

    def h_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.mass_weights * u * u)))

    def gram(self) -> np.ndarray:
        flat = self.modes.reshape(self.n_modes, -1)
        w = self.mass_weights.ravel()
        return (flat * w) @ flat.T


@dataclass
class ModalCoefficients:
    """Coefficients against the stored eigenbasis."""

    alphas: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.alphas)):
            raise ValueError("non-finite modal coefficients")


def eigensolve(domain: DomainSpec, n_modes: int, backend: str = "auto") -> SpectralBasis:
    """Compute the leading n_modes Dirichlet eigenpairs.

    backend = "fd"        assembled finite-difference matrix
              "analytic"  closed-form sine modes, constant coefficients only
              "auto"      analytic when the coefficients allow it, else fd
    """
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    n_interior = int(np.prod([n - 2 for n in domain.shape]))
    if n_modes > n_interior:
        raise ValueError(f"n_modes={n_modes} exceeds interior dimension {n_interior}")
    constant = _is_constant_isotropic(domain)
    if backend == "auto":
        backend = "analytic" if constant else "fd"
    if backend == "analytic":
        if not constant:
            raise ValueError("analytic backend needs constant isotropic coefficients")
        lambdas, modes = _analytic_modes(domain, n_modes)
    elif backend == "fd":
        lambdas, modes = _fd_modes(domain, n_modes)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    # eigensolvers return arbitrary global signs; orient each mode so its
    # first interior sample is positive, matching the analytic sine modes
    first_interior = (1,) * domain.dimension
    flip = np.sign(modes[(slice(None),) + first_interior])
    flip[flip == 0] = 1.0
    modes = modes * flip.reshape((-1,) + (1,) * domain.dimension)

    weights = trapezoid_weights(domain)
    traces = _conormal_traces(domain, modes)
    return SpectralBasis(
        domain=domain,
        lambdas=lambdas,
        modes=modes,
        conormal_traces=traces,
        mass_weights=weights,
        boundary_weights=domain.boundary_weights(),
        backend=backend,
    )


def _is_constant_isotropic(domain: DomainSpec) -> bool:
    c = domain.coeff
    if domain.dimension == 1:
        const = np.ptp(c[..., 0, 0]) == 0
    else:
        const = (
            np.ptp(c[..., 0, 0]) == 0
            and np.ptp(c[..., 1, 1]) == 0
            and np.all(c[..., 0, 1] == 0)
            and c[..., 0, 0].flat[0] == c[..., 1, 1].flat[0]
        )
    if domain.potential is not None and np.ptp(domain.potential) != 0:
        return False
    return bool(const)


def _mode_order(lams_1d: list) -> list:
    """Sorted mode index tuples; ties broken lexicographically."""
    if len(lams_1d) == 1:
        keys = [(lam, (k,)) for k, lam in enumerate(lams_1d[0])]
    else:
        keys = [
            (lx + ly, (kx, ky))
            for kx, lx in enumerate(lams_1d[0])
            for ky, ly in enumerate(lams_1d[1])
        ]
    keys.sort(key=lambda item: (item[0], item[1]))
    return keys


def _analytic_modes(domain: DomainSpec, n_modes: int):
    a = float(domain.coeff[..., 0, 0].flat[0])
    q = 0.0 if domain.potential is None else float(domain.potential.flat[0])
    axes = domain.axes
    lams_1d, funcs_1d = [], []
    for (lo, hi), x in zip(domain.extents, axes):
        L = hi - lo
        kmax = len(x) - 2
        ks = np.arange(1, kmax + 1)
        lams_1d.append(a * (ks * np.pi / L) ** 2)
        funcs_1d.append(np.sqrt(2.0 / L) * np.sin(np.outer(ks, (x - lo)) * np.pi / L))
    order = _mode_order(lams_1d)[:n_modes]
    lambdas = np.array([lam + q for lam, _ in order])
    if domain.dimension == 1:
        modes = np.stack([funcs_1d[0][k] for _, (k,) in order])
    else:
        modes = np.stack(
            [np.outer(funcs_1d[0][kx], funcs_1d[1][ky]) for _, (kx, ky) in order]
        )
    return lambdas, modes


def _harmonic_half(a: np.ndarray) -> np.ndarray:
    """Harmonic mean of consecutive node values."""
    return 2.0 * a[:-1] * a[1:] / (a[:-1] + a[1:])


def _fd_matrix_1d(a: np.ndarray, q: np.ndarray | None, h: float):
    """Symmetric tridiagonal interior matrix (diag, offdiag)."""
    ah = _harmonic_half(a)  # length n-1, value at i+1/2
    n = len(a)
    diag = (ah[:-1] + ah[1:]) / h**2
    if q is not None:
        diag = diag + q[1:-1]
    off = -ah[1:-1] / h**2
    return diag, off


def _fd_modes(domain: DomainSpec, n_modes: int):
    if domain.dimension == 1:
        return _fd_modes_1d(domain, n_modes)
    a12 = domain.coeff[..., 0, 1]
    if np.any(a12 != 0):
        raise NotImplementedError(
            "finite-difference eigensolve supports axis-aligned coefficients only"
        )
    if _is_constant_isotropic(domain):
        return _fd_modes_2d_separable(domain, n_modes)
    return _fd_modes_2d_general(domain, n_modes)


def _fd_modes_1d(domain: DomainSpec, n_modes: int):
    (n,) = domain.shape
    (h,) = domain.spacings
    a = domain.coeff[:, 0, 0]
    diag, off = _fd_matrix_1d(a, domain.potential, h)
    lambdas, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_modes - 1))
    modes = np.zeros((n_modes, n))
    # eigh returns Euclid-orthonormal columns; mass weight h on the interior
    modes[:, 1:-1] = vecs.T / np.sqrt(h)
    return lambdas, modes


def _fd_modes_2d_separable(domain: DomainSpec, n_modes: int):
    """Constant isotropic 2D: eigenpairs of the assembled matrix by its
    Kronecker-sum factorization into the 1D interior matrices."""
    a = float(domain.coeff[..., 0, 0].flat[0])
    q = 0.0 if domain.potential is None else float(domain.potential.flat[0])
    lams_1d, vecs_1d = [], []
    for ax, ((lo, hi), n) in enumerate(zip(domain.extents, domain.shape)):
        h = (hi - lo) / (n - 1)
        diag, off = _fd_matrix_1d(np.full(n, a), None, h)
        lam, vec = eigh_tridiagonal(diag, off)
        lams_1d.append(lam)
        vecs_1d.append(vec / np.sqrt(h))
    order = _mode_order(lams_1d)[:n_modes]
    nx, ny = domain.shape
    lambdas = np.array([lam + q for lam, _ in order])
    modes = np.zeros((n_modes, nx, ny))
    for m, (_, (kx, ky)) in enumerate(order):
        modes[m, 1:-1, 1:-1] = np.outer(vecs_1d[0][:, kx], vecs_1d[1][:, ky])
    return lambdas, modes


def _fd_matrix_2d(domain: DomainSpec) -> np.ndarray:
    """Dense symmetric interior matrix for axis-aligned 2D coefficients."""
    nx, ny = domain.shape
    hx, hy = domain.spacings
    a11 = domain.coeff[..., 0, 0]
    a22 = domain.coeff[..., 1, 1]
    q = domain.potential
    mx, my = nx - 2, ny - 2
    n = mx * my

    def flat(i, j):
        return (i - 1) * my + (j - 1)

    A = np.zeros((n, n))
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            r = flat(i, j)
            axp = 2 * a11[i, j] * a11[i + 1, j] / (a11[i, j] + a11[i + 1, j])
            axm = 2 * a11[i, j] * a11[i - 1, j] / (a11[i, j] + a11[i - 1, j])
            ayp = 2 * a22[i, j] * a22[i, j + 1] / (a22[i, j] + a22[i, j + 1])
            aym = 2 * a22[i, j] * a22[i, j - 1] / (a22[i, j] + a22[i, j - 1])
            A[r, r] = (axp + axm) / hx**2 + (ayp + aym) / hy**2
            if q is not None:
                A[r, r] += q[i, j]
            if i + 1 < nx - 1:
                A[r, flat(i + 1, j)] = -axp / hx**2
            if i - 1 > 0:
                A[r, flat(i - 1, j)] = -axm / hx**2
            if j + 1 < ny - 1:
                A[r, flat(i, j + 1)] = -ayp / hy**2
            if j - 1 > 0:
                A[r, flat(i, j - 1)] = -aym / hy**2
    return A


def _fd_modes_2d_general(domain: DomainSpec, n_modes: int):
    nx, ny = domain.shape
    interior = (nx - 2) * (ny - 2)
    if interior > 5000:
        raise ValueError(
            f"dense 2D eigensolve limited to 5000 interior unknowns, got {interior}; "
            "use a coarser grid for variable 2D coefficients"
        )
    A = _fd_matrix_2d(domain)
    asym = np.max(np.abs(A - A.T))
    if asym != 0:
        raise RuntimeError(f"assembled matrix not symmetric, max deviation {asym:g}")
    hx, hy = domain.spacings
    lambdas, vecs = eigh(A, subset_by_index=(0, n_modes - 1))
    modes = np.zeros((n_modes, nx, ny))
    modes[:, 1:-1, 1:-1] = vecs.T.reshape(n_modes, nx - 2, ny - 2) / np.sqrt(hx * hy)
    return lambdas, modes


def _conormal_traces(domain: DomainSpec, modes: np.ndarray) -> np.ndarray:
    """Outward conormal derivative of each mode at each boundary node.

    Second-order one-sided differencing along the inward axis; the tangential
    derivative vanishes on the boundary.  Corner values in 2D are set to zero
    (they carry no limit direction; rectangle eigenmodes vanish there anyway).
    """
    nodes = domain.boundary_nodes()
    N = modes.shape[0]
    traces = np.zeros((N, len(nodes)))
    if domain.dimension == 1:
        (h,) = domain.spacings
        a = domain.coeff[:, 0, 0]
        for m, (idx,) in enumerate(nodes):
            if idx == 0:
                d = (-3 * modes[:, 0] + 4 * modes[:, 1] - modes[:, 2]) / (2 * h)
                traces[:, m] = -a[0] * d
            else:
                d = (3 * modes[:, -1] - 4 * modes[:, -2] + modes[:, -3]) / (2 * h)
                traces[:, m] = a[-1] * d
        return traces
    nx, ny = domain.shape
    hx, hy = domain.spacings
    a11 = domain.coeff[..., 0, 0]
    a22 = domain.coeff[..., 1, 1]
    for m, (i, j) in enumerate(nodes):
        on_x = i == 0 or i == nx - 1
        on_y = j == 0 or j == ny - 1
        if on_x and on_y:
            continue  # corner
        if on_x:
            if i == 0:
                d = (-3 * modes[:, 0, j] + 4 * modes[:, 1, j] - modes[:, 2, j]) / (2 * hx)
                traces[:, m] = -a11[0, j] * d
            else:
                d = (3 * modes[:, -1, j] - 4 * modes[:, -2, j] + modes[:, -3, j]) / (2 * hx)
                traces[:, m] = a11[-1, j] * d
        else:
            if j == 0:
                d = (-3 * modes[:, i, 0] + 4 * modes[:, i, 1] - modes[:, i, 2]) / (2 * hy)
                traces[:, m] = -a22[i, 0] * d
            else:
                d = (3 * modes[:, i, -1] - 4 * modes[:, i, -2] + modes[:, i, -3]) / (2 * hy)
                traces[:, m] = a22[i, -1] * d
    return traces


def project(values: np.ndarray, basis: SpectralBasis, s: float = 0.0) -> ModalCoefficients:
    """Mass-weighted modal coefficients of a grid function."""
    if values.shape != tuple(basis.domain.shape):
        raise ValueError(
            f"grid mismatch: values {values.shape}, domain {tuple(basis.domain.shape)}"
        )
    flat = basis.modes.reshape(basis.n_modes, -1)
    alphas = flat @ (basis.mass_weights.ravel() * values.ravel())
    return ModalCoefficients(alphas=alphas, s=s)


def reconstruct(coeffs: ModalCoefficients | np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """Grid function of a modal coefficient vector."""
    alphas = coeffs.alphas if isinstance(coeffs, ModalCoefficients) else np.asarray(coeffs)
    if len(alphas) != basis.n_modes:
        raise ValueError("coefficient count does not match basis")
    flat = basis.modes.reshape(basis.n_modes, -1)
    return (alphas @ flat).reshape(basis.domain.shape)


def ds_inner(y, w, s: float, basis: SpectralBasis) -> float:
    """Smoothness-weighted inner product sum_k lambda_k^s alpha_k beta_k.

    Accepts ModalCoefficients or plain coefficient arrays.
    """
    if s < 0:
        raise ValueError(f"weight order s must be nonnegative, got {s}")
    ya = y.alphas if isinstance(y, ModalCoefficients) else np.asarray(y, dtype=float)
    wa = w.alphas if isinstance(w, ModalCoefficients) else np.asarray(w, dtype=float)
    if len(ya) != basis.n_modes or len(wa) != basis.n_modes:
        raise ValueError("coefficient length does not match the basis truncation")
    return float(np.sum(basis.lambdas**s * ya * wa))


def ds_norm(y: ModalCoefficients, s: float, basis: SpectralBasis) -> float:
    return float(np.sqrt(max(ds_inner(y, y, s, basis), 0.0)))


def rescaled_mode(basis: SpectralBasis, k: int, s: float) -> np.ndarray:
    """Mode k scaled to unit s-weighted norm: lambda_k^(-s/2) e_k."""
    if s < 0:
        raise ValueError(f"weight order s must be nonnegative, got {s}")
    return basis.modes[k] * basis.lambdas[k] ** (-s / 2.0)


def write_spectrum_csv(path, basis: SpectralBasis) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "lambda"])
        for k, lam in enumerate(basis.lambdas, start=1):
            writer.writerow([k, f"{lam:.17g}"])
