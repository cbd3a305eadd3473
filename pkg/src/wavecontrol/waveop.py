"""Boundary control and observation operators for the wave equation.

The forward system drives zero initial data with Dirichlet boundary data f on
[0, T] and reads off the final snapshot u^f(., T).  The dual system runs a
velocity perturbation y backwards from t = T with zero boundary data; its
outward conormal trace on the boundary cylinder is the observation.

Both operators are realized over the same truncated eigenbasis and the same
trapezoid quadratures, the control operator by transposition against the
observation of each mode.  The two discrete operators are therefore exact
adjoints: (forward f, y)_H equals (f, observe y)_F up to float roundoff,
independent of grid resolution.  An explicit leapfrog time stepper provides
an independent oracle for the forward map.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .geometry import DomainSpec, FilledRegion, trapezoid_weights
from .spectral import SpectralBasis, project, reconstruct

__all__ = [
    "BoundaryControl",
    "BoundaryTrace",
    "StateField",
    "DEFAULT_TIME_STEPS",
    "time_grid",
    "time_weights",
    "f_inner",
    "f_norm",
    "solve_dual",
    "observe",
    "control_to_modal",
    "control_to_state",
    "verify_duality",
    "fd_oracle_forward",
    "support_violation",
    "truncate_control",
    "control_time_derivative",
    "random_control",
    "random_state",
    "write_state_csv",
    "write_trace_csv",
]

DEFAULT_TIME_STEPS = 1024  # trapezoid grid has DEFAULT_TIME_STEPS + 1 samples


@dataclass
class BoundaryControl:
    """Dirichlet data on the boundary cylinder, sampled on a uniform time grid.

    samples : (n_boundary, n_t) values; column i is time i*T/(n_t-1)
    Class flags are bookkeeping set by the constructions that certify them;
    solvers accept any finite samples.
    """

    samples: np.ndarray
    T: float
    vanishes_near_zero: bool = False
    zero_band: float = 0.0
    vanishes_at_T_even_derivatives: bool = False

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.T <= 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.samples.shape[1] < 2:
            raise ValueError("need at least two time samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite control samples")
        if self.vanishes_near_zero and self.zero_band > 0:
            t = self.times
            if np.any(self.samples[:, t < self.zero_band] != 0):
                raise ValueError("control flagged as vanishing near t=0 but is not")

    @property
    def n_t(self) -> int:
        return self.samples.shape[1]

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_t)


@dataclass
class BoundaryTrace:
    """Conormal derivative samples on the boundary cylinder."""

    samples: np.ndarray
    T: float

    @property
    def n_t(self) -> int:
        return self.samples.shape[1]

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_t)


@dataclass
class StateField:
    """Grid function over the domain with a role tag."""

    values: np.ndarray
    role: str = "target"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite state values")


def time_grid(T: float, n_steps: int = DEFAULT_TIME_STEPS) -> np.ndarray:
    return np.linspace(0.0, T, n_steps + 1)


def time_weights(n_t: int, dt: float) -> np.ndarray:
    w = np.full(n_t, dt)
    w[0] = w[-1] = dt / 2
    return w


def f_inner(f: np.ndarray, g: np.ndarray, bweights: np.ndarray, dt: float) -> float:
    """Inner product on the boundary cylinder: boundary measure x trapezoid."""
    wt = time_weights(f.shape[1], dt)
    return float(np.einsum("gt,gt,g,t->", f, g, bweights, wt))


def f_norm(f: np.ndarray, bweights: np.ndarray, dt: float) -> float:
    return float(np.sqrt(max(f_inner(f, f, bweights, dt), 0.0)))


def _sin_factors(lambdas: np.ndarray, times: np.ndarray, T: float) -> np.ndarray:
    """Matrix S[k, i] = sin(sqrt(lambda_k)(t_i - T)) / sqrt(lambda_k)."""
    roots = np.sqrt(lambdas)
    return np.sin(np.outer(roots, times - T)) / roots[:, None]


def solve_dual(
    y: StateField,
    T: float,
    basis: SpectralBasis,
    times: np.ndarray | None = None,
    n_steps: int = DEFAULT_TIME_STEPS,
) -> np.ndarray:
    """History of the dual wave driven by terminal velocity y.

    Returns an array of snapshots, one per requested time.  The modal form is
    valid for all t, so times beyond T evaluate the odd extension about t = T.
    """
    if T <= 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if times is None:
        times = time_grid(T, n_steps)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    alphas = project(y.values, basis).alphas
    S = _sin_factors(basis.lambdas, times, T)
    flat = basis.modes.reshape(basis.n_modes, -1)
    hist = (alphas[:, None] * S).T @ flat
    return hist.reshape((len(times),) + tuple(basis.domain.shape))


def observe(
    y: StateField,
    T: float,
    basis: SpectralBasis,
    n_steps: int = DEFAULT_TIME_STEPS,
) -> BoundaryTrace:
    """Conormal trace of the dual wave on the boundary cylinder."""
    if T <= 0:
        raise ValueError(f"horizon must be positive, got {T}")
    alphas = project(y.values, basis).alphas
    return _observe_modal(alphas, T, basis, n_steps)


def _observe_modal(
    alphas: np.ndarray, T: float, basis: SpectralBasis, n_steps: int
) -> BoundaryTrace:
    times = time_grid(T, n_steps)
    S = _sin_factors(basis.lambdas, times, T)
    g = np.einsum("k,kg,kt->gt", alphas, basis.conormal_traces, S)
    return BoundaryTrace(samples=g, T=T)


def control_to_modal(f: BoundaryControl, basis: SpectralBasis) -> np.ndarray:
    """Modal coefficients of the final snapshot, by transposition.

    Coefficient k is the boundary-cylinder pairing of f with the observation
    of mode k, the same quantity the adjoint identity equates with
    (u^f(., T), e_k)_H.
    """
    if f.samples.shape[0] != len(basis.boundary_weights):
        raise ValueError(
            f"control has {f.samples.shape[0]} boundary rows, "
            f"domain has {len(basis.boundary_weights)} boundary nodes"
        )
    S = _sin_factors(basis.lambdas, f.times, f.T)
    wt = time_weights(f.n_t, f.dt)
    return np.einsum(
        "gt,kg,kt,g,t->k", f.samples, basis.conormal_traces, S, basis.boundary_weights, wt
    )


def control_to_state(f: BoundaryControl, basis: SpectralBasis) -> StateField:
    """Final snapshot u^f(., T) of the boundary-driven wave."""
    coeffs = control_to_modal(f, basis)
    return StateField(values=reconstruct(coeffs, basis), role="wave_snapshot")


def verify_duality(
    f: BoundaryControl,
    y: StateField,
    basis: SpectralBasis,
    _break_weights: bool = False,
) -> float:
    """Relative discrepancy of the adjoint identity for one (f, y) pair.

    |(u^f(., T), y)_H - (f, observe y)_F| / (|f|_F |y|_H).  The private flag
    perturbs the time weights on the observation side only; it exists so a
    deliberately broken quadrature is detectable as a negative control.
    """
    u = control_to_state(f, basis)
    lhs = basis.h_inner(u.values, y.values)
    g = observe(y, f.T, basis, n_steps=f.n_t - 1)
    wt = time_weights(f.n_t, f.dt)
    if _break_weights:
        wt = wt.copy()
        wt[0] = wt[-1] = f.dt  # flat weights at the ends: wrong trapezoid rule
    rhs = float(
        np.einsum("gt,gt,g,t->", f.samples, g.samples, basis.boundary_weights, wt)
    )
    denom = f_norm(f.samples, basis.boundary_weights, f.dt) * basis.h_norm(y.values)
    if denom == 0:
        return 0.0
    return abs(lhs - rhs) / denom


# ---------------------------------------------------------------------------
# independent finite-difference oracle


def _apply_operator(domain: DomainSpec, u: np.ndarray) -> np.ndarray:
    """Interior action of the elliptic operator, boundary values read as data."""
    if domain.dimension == 1:
        (h,) = domain.spacings
        a = domain.coeff[:, 0, 0]
        ah = 2 * a[:-1] * a[1:] / (a[:-1] + a[1:])
        out = np.zeros_like(u)
        out[1:-1] = -(ah[1:] * (u[2:] - u[1:-1]) - ah[:-1] * (u[1:-1] - u[:-2])) / h**2
        if domain.potential is not None:
            out[1:-1] += domain.potential[1:-1] * u[1:-1]
        return out
    hx, hy = domain.spacings
    a11 = domain.coeff[..., 0, 0]
    a22 = domain.coeff[..., 1, 1]
    hmx = 2 * a11[:-1, :] * a11[1:, :] / (a11[:-1, :] + a11[1:, :])
    hmy = 2 * a22[:, :-1] * a22[:, 1:] / (a22[:, :-1] + a22[:, 1:])
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = (
        -(
            hmx[1:, 1:-1] * (u[2:, 1:-1] - u[1:-1, 1:-1])
            - hmx[:-1, 1:-1] * (u[1:-1, 1:-1] - u[:-2, 1:-1])
        )
        / hx**2
        - (
            hmy[1:-1, 1:] * (u[1:-1, 2:] - u[1:-1, 1:-1])
            - hmy[1:-1, :-1] * (u[1:-1, 1:-1] - u[1:-1, :-2])
        )
        / hy**2
    )
    if domain.potential is not None:
        out[1:-1, 1:-1] += domain.potential[1:-1, 1:-1] * u[1:-1, 1:-1]
    return out


def fd_oracle_forward(f: BoundaryControl, domain: DomainSpec) -> StateField:
    """Leapfrog time stepping of the boundary-driven wave, u^f(., T).

    Independent of the spectral pipeline: explicit second-order stepping with
    Dirichlet injection of f.  Refuses time steps outside the stability bound
    dt <= h_min / sqrt(d * max coefficient eigenvalue).
    """
    if f.samples.shape[0] != len(domain.boundary_nodes()):
        raise ValueError("control rows do not match domain boundary nodes")
    dt = f.dt
    d = domain.dimension
    eig_max = float(np.max(domain._node_eigenvalues() + 0))
    # max eigenvalue of the coefficient matrix over nodes
    if d == 2:
        a11 = domain.coeff[..., 0, 0]
        a12 = domain.coeff[..., 0, 1]
        a22 = domain.coeff[..., 1, 1]
        tr = a11 + a22
        disc = np.sqrt(np.maximum((a11 - a22) ** 2 + 4 * a12**2, 0.0))
        eig_max = float(np.max(0.5 * (tr + disc)))
    else:
        eig_max = float(np.max(domain.coeff[:, 0, 0]))
    h_min = min(domain.spacings)
    limit = h_min / np.sqrt(d * eig_max)
    if dt > limit:
        raise ValueError(
            f"time step {dt:g} violates the stability bound {limit:g} "
            f"(grid spacing {h_min:g}, max coefficient eigenvalue {eig_max:g})"
        )
    bnodes = [tuple(n) for n in domain.boundary_nodes()]
    shape = tuple(domain.shape)
    prev = np.zeros(shape)
    curr = np.zeros(shape)
    for m, node in enumerate(bnodes):
        prev[node] = f.samples[m, 0]
        curr[node] = f.samples[m, 1]
    for step in range(1, f.n_t - 1):
        nxt = 2 * curr - prev - dt**2 * _apply_operator(domain, curr)
        for m, node in enumerate(bnodes):
            nxt[node] = f.samples[m, step + 1]
        prev, curr = curr, nxt
    return StateField(values=curr, role="wave_snapshot")


def support_violation(
    u: StateField, region: FilledRegion, band: float, mass_weights: np.ndarray | None = None
) -> float:
    """Fraction of squared mass outside the region dilated by ``band``."""
    if mass_weights is None:
        shape = region.indicator.shape
        ws = []
        for n, h in zip(shape, region.spacings):
            w = np.full(n, h)
            w[0] = w[-1] = h / 2
            ws.append(w)
        mass_weights = ws[0] if len(ws) == 1 else np.outer(ws[0], ws[1])
    total = float(np.sum(mass_weights * u.values**2))
    if total == 0:
        return 0.0
    outside = ~region.dilated(band)
    return float(np.sum(mass_weights[outside] * u.values[outside] ** 2) / total)


# ---------------------------------------------------------------------------
# control utilities


def truncate_control(f: BoundaryControl, n_t: int) -> BoundaryControl:
    """Restriction of f to the first n_t samples, horizon shortened to match."""
    if not 2 <= n_t <= f.n_t:
        raise ValueError(f"cannot truncate to {n_t} of {f.n_t} samples")
    return BoundaryControl(
        samples=f.samples[:, :n_t].copy(),
        T=f.dt * (n_t - 1),
        vanishes_near_zero=f.vanishes_near_zero,
        zero_band=min(f.zero_band, f.dt * (n_t - 1)),
    )


def control_time_derivative(f: BoundaryControl) -> BoundaryControl:
    """Second-order discrete time derivative on the same grid."""
    g = np.gradient(f.samples, f.dt, axis=1, edge_order=2)
    return BoundaryControl(samples=g, T=f.T)


def random_control(
    basis: SpectralBasis,
    T: float,
    rng: np.random.Generator,
    n_steps: int = DEFAULT_TIME_STEPS,
    support: tuple | None = None,
) -> BoundaryControl:
    """Seeded random control; optional time-support window (t0, t1)."""
    n_bnd = len(basis.boundary_weights)
    samples = rng.standard_normal((n_bnd, n_steps + 1))
    if support is not None:
        t = np.linspace(0.0, T, n_steps + 1)
        mask = (t >= support[0]) & (t <= support[1])
        samples = samples * mask
    return BoundaryControl(samples=samples, T=T)


def random_state(basis: SpectralBasis, rng: np.random.Generator) -> StateField:
    """Seeded random velocity perturbation over the grid, zero on the boundary."""
    values = rng.standard_normal(tuple(basis.domain.shape))
    values[basis.domain.boundary_mask] = 0.0
    return StateField(values=values, role="velocity_perturbation")


def random_smooth_control(
    basis: SpectralBasis,
    T: float,
    rng: np.random.Generator,
    n_steps: int = DEFAULT_TIME_STEPS,
    support: tuple | None = None,
    n_harmonics: int = 16,
) -> BoundaryControl:
    """Seeded random control that is smooth and compactly supported in time.

    Random harmonics on the support window, shaped by a bump so every time
    derivative vanishes at the window ends.  Sample-pointwise rough controls
    defeat trapezoid quadrature; identities stated at tight tolerances are
    exercised with these instead.
    """
    a, b = support if support is not None else (0.0, T)
    if not 0.0 <= a < b <= T:
        raise ValueError(f"support must satisfy 0 <= a < b <= {T}, got ({a}, {b})")
    n_bnd = len(basis.boundary_weights)
    t = np.linspace(0.0, T, n_steps + 1)
    s = (2.0 * (t - a) / (b - a)) - 1.0
    window = np.zeros_like(t)
    inside = np.abs(s) < 1.0
    window[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2)) * np.e
    coeffs = rng.standard_normal((n_bnd, n_harmonics)) / np.arange(1, n_harmonics + 1)
    phase = np.pi * (s[None, :] + 1.0) / 2.0
    harmonics = np.sin(np.arange(1, n_harmonics + 1)[:, None] * phase)
    samples = window * (coeffs @ harmonics)
    zero_band = a if a > 0 else 0.0
    return BoundaryControl(
        samples=samples, T=T, vanishes_near_zero=a > 0, zero_band=zero_band
    )


# ---------------------------------------------------------------------------
# CSV artifacts


def write_state_csv(path, domain: DomainSpec, state: StateField) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if domain.dimension == 1:
            writer.writerow(["x", "u"])
            for x, v in zip(domain.axes[0], state.values):
                writer.writerow([f"{x:.17g}", f"{v:.17g}"])
        else:
            writer.writerow(["i", "j", "x", "y", "u"])
            xs, ys = domain.axes
            for i in range(domain.shape[0]):
                for j in range(domain.shape[1]):
                    writer.writerow(
                        [i, j, f"{xs[i]:.17g}", f"{ys[j]:.17g}", f"{state.values[i, j]:.17g}"]
                    )


def write_trace_csv(path, trace: BoundaryTrace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma_id", "t", "g"])
        times = trace.times
        for g_id in range(trace.samples.shape[0]):
            for i, t in enumerate(times):
                writer.writerow([g_id, f"{t:.17g}", f"{trace.samples[g_id, i]:.17g}"])
