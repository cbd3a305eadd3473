"""Mollifier regularization in the eigenbasis and in time.

The kernel is the standard even bump phi(t) = c exp(-1/(1-t^2)) on (-1, 1),
normalized to unit integral by quadrature.  Scaling phi_eps(t) = phi(t/eps)/eps
induces diagonal spectral multipliers

    beta_k(eps) = integral phi(t) cos(eps sqrt(lambda_k) t) dt,

which damp a velocity perturbation mode by mode.  Smoothing a boundary
control combines phi_eps with its reflection about t = T so the result and
all its even time derivatives vanish at the horizon.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .spectral import SpectralBasis, project, reconstruct
from .waveop import BoundaryControl, StateField, time_weights

__all__ = [
    "MollifierKernel",
    "bump_profile",
    "bump_normalization",
    "second_moment",
    "beta",
    "beta_table",
    "regularize_state",
    "smooth_control",
    "write_beta_csv",
]

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=200)


def _raw_bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out if out.ndim else float(out)


@lru_cache(maxsize=1)
def bump_normalization() -> float:
    """Constant c with integral of c exp(-1/(1-t^2)) over (-1, 1) equal to 1."""
    val, _ = quad(lambda t: float(np.exp(-1.0 / (1.0 - t * t))), -1.0, 1.0, **_QUAD_OPTS)
    return 1.0 / val


def bump_profile(t):
    """Normalized even bump supported on (-1, 1), exact zero outside."""
    return bump_normalization() * _raw_bump(t)


@lru_cache(maxsize=1)
def second_moment() -> float:
    """integral t^2 phi(t) dt, the constant of the small-eps expansion."""
    val, _ = quad(lambda t: t * t * float(bump_profile(t)), -1.0, 1.0, **_QUAD_OPTS)
    return val


@dataclass(frozen=True)
class MollifierKernel:
    """Scaled mollifier phi_eps(t) = phi(t/eps)/eps."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"mollifier width must be positive, got {self.epsilon}")

    def profile(self, t):
        """The unscaled normalized bump."""
        return bump_profile(t)

    def __call__(self, t):
        return bump_profile(np.asarray(t) / self.epsilon) / self.epsilon

    @property
    def normalization(self) -> float:
        return bump_normalization()


@lru_cache(maxsize=100_000)
def _beta_cached(phase: float) -> float:
    if phase == 0.0:
        return 1.0
    # QAWO handles the oscillatory cosine factor exactly; plain QAGS starts
    # emitting roundoff warnings once the phase exceeds a few periods.
    val, _ = quad(
        lambda t: float(bump_profile(t)),
        -1.0,
        1.0,
        weight="cos",
        wvar=phase,
        **_QUAD_OPTS,
    )
    return val


def beta(epsilon: float, lam: float) -> float:
    """Spectral multiplier of the mollifier at eigenvalue lam.

    Adaptive quadrature of the defining cosine integral, absolute tolerance
    1e-12, cached by the phase eps*sqrt(lam).
    """
    if epsilon <= 0:
        raise ValueError(f"mollifier width must be positive, got {epsilon}")
    if lam < 0:
        raise ValueError(f"eigenvalue must be nonnegative, got {lam}")
    return _beta_cached(float(epsilon) * float(np.sqrt(lam)))


def beta_table(epsilon: float, lambdas: np.ndarray) -> np.ndarray:
    return np.array([beta(epsilon, lam) for lam in np.asarray(lambdas)])


def regularize_state(y: StateField, epsilon: float, basis: SpectralBasis) -> StateField:
    """Diagonal action in the eigenbasis: coefficient k scaled by beta_k."""
    alphas = project(y.values, basis).alphas
    betas = beta_table(epsilon, basis.lambdas)
    return StateField(values=reconstruct(alphas * betas, basis), role=y.role)


def smooth_control(f: BoundaryControl, epsilon: float, delta: float) -> BoundaryControl:
    """Time smoothing of a control supported in [delta, T].

    Convolves with phi_eps antisymmetrized about the horizon:
        out(t) = integral (phi_eps(t - s) - phi_eps(2T - t - s)) f(s) ds,
    discretized with the control's own trapezoid weights.  The output vanishes
    identically on [0, delta - eps], vanishes exactly at t = T, and its even
    time derivatives vanish at the horizon by the antisymmetry of the kernel.
    Requires 0 < eps < delta and f zero before t = delta.
    """
    if not 0 < epsilon < delta:
        raise ValueError(
            f"need 0 < eps < delta, got eps={epsilon}, delta={delta}"
        )
    if delta >= f.T:
        raise ValueError(f"support onset delta={delta} must lie inside (0, T={f.T})")
    t = f.times
    early = t < delta - 1e-12 * f.T
    if np.any(f.samples[:, early] != 0):
        bad = np.argwhere(f.samples[:, early] != 0)[0]
        raise ValueError(
            f"control must vanish before t=delta={delta}; "
            f"nonzero sample at boundary row {bad[0]}, t={t[early][bad[1]]:g}"
        )
    kern = MollifierKernel(epsilon)
    diff = t[:, None] - t[None, :]  # t_i - s_j
    refl = (2 * f.T - t)[:, None] - t[None, :]  # 2T - t_i - s_j
    K = kern(diff) - kern(refl)
    wt = time_weights(f.n_t, f.dt)
    out = f.samples @ (K * wt[None, :]).T
    return BoundaryControl(
        samples=out,
        T=f.T,
        vanishes_near_zero=True,
        zero_band=max(delta - epsilon, 0.0),
        vanishes_at_T_even_derivatives=True,
    )


def write_beta_csv(path, basis: SpectralBasis, epsilon: float) -> None:
    betas = beta_table(epsilon, basis.lambdas)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "lambda", "beta"])
        for k, (lam, b) in enumerate(zip(basis.lambdas, betas), start=1):
            writer.writerow([k, f"{lam:.17g}", f"{b:.17g}"])
