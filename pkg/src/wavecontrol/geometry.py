"""Grid domains, metric distance to the boundary, and filled subdomains.

The symmetric coefficient field a^{ij}(x) of the elliptic operator induces the
travel-time metric a_{ij} = (a^{ij})^{-1}.  ``eikonal_distance`` computes the
metric distance tau(x) from every node to the boundary; the region filled by
boundary-launched waves within time T is {tau < T}, and the filling time of
the whole domain is max tau.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "DomainSpec",
    "DistanceField",
    "FilledRegion",
    "interval",
    "rectangle",
    "radial_bump_coefficient",
    "domain_from_coefficient_csv",
    "eikonal_distance",
    "filled_subdomain",
    "filling_time",
    "trapezoid_weights",
    "write_distance_csv",
    "write_region_csv",
]


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned box domain with node-sampled operator coefficients.

    extents   : ((x0, x1),) in 1D or ((x0, x1), (y0, y1)) in 2D
    shape     : node counts per axis, including boundary nodes
    coeff     : a^{ij} sampled at nodes, shape = shape + (d, d), symmetric,
                uniformly positive definite
    potential : optional q(x) >= 0 sampled at nodes
    """

    extents: tuple
    shape: tuple
    coeff: np.ndarray
    potential: np.ndarray | None = None

    def __post_init__(self):
        d = len(self.shape)
        if d not in (1, 2):
            raise ValueError(f"only 1D and 2D domains supported, got {d} axes")
        if len(self.extents) != d:
            raise ValueError("extents and shape disagree on dimension")
        for n in self.shape:
            if n < 3:
                raise ValueError("need at least 3 nodes per axis")
        for lo, hi in self.extents:
            if not hi > lo:
                raise ValueError(f"degenerate extent ({lo}, {hi})")
        expected = tuple(self.shape) + (d, d)
        if self.coeff.shape != expected:
            raise ValueError(f"coeff shape {self.coeff.shape}, expected {expected}")
        asym = np.max(np.abs(self.coeff - np.swapaxes(self.coeff, -1, -2)))
        if asym > 0:
            raise ValueError(f"coefficient matrix not symmetric (max dev {asym:g})")
        if self.potential is not None:
            if self.potential.shape != tuple(self.shape):
                raise ValueError("potential shape does not match grid")
            if np.min(self.potential) < 0:
                raise ValueError("potential must be nonnegative")
        mu = self.ellipticity()
        if not (mu > 0) or not np.isfinite(mu):
            loc = self._worst_node()
            raise ValueError(
                f"coefficient matrix not positive definite at node {loc} "
                f"(smallest eigenvalue {mu:g})"
            )

    def _worst_node(self):
        eigs = self._node_eigenvalues()
        flat = int(np.argmin(eigs))
        return np.unravel_index(flat, self.shape)

    def _node_eigenvalues(self) -> np.ndarray:
        if self.dimension == 1:
            return self.coeff[..., 0, 0]
        a11 = self.coeff[..., 0, 0]
        a12 = self.coeff[..., 0, 1]
        a22 = self.coeff[..., 1, 1]
        tr = a11 + a22
        disc = np.sqrt(np.maximum((a11 - a22) ** 2 + 4 * a12**2, 0.0))
        return 0.5 * (tr - disc)

    def ellipticity(self) -> float:
        """Smallest coefficient eigenvalue over all nodes."""
        return float(np.min(self._node_eigenvalues()))

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def spacings(self) -> tuple:
        return tuple(
            (hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.shape)
        )

    @property
    def axes(self) -> tuple:
        return tuple(
            np.linspace(lo, hi, n) for (lo, hi), n in zip(self.extents, self.shape)
        )

    def grids(self) -> tuple:
        """Coordinate arrays broadcast over the full node grid."""
        if self.dimension == 1:
            return (self.axes[0],)
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        if self.dimension == 1:
            mask[0] = mask[-1] = True
        else:
            mask[0, :] = mask[-1, :] = True
            mask[:, 0] = mask[:, -1] = True
        return mask

    def boundary_nodes(self) -> np.ndarray:
        """Boundary node multi-indices, lexicographic, each node once."""
        idx = np.argwhere(self.boundary_mask)
        return idx

    def boundary_weights(self) -> np.ndarray:
        """Quadrature weights of the boundary measure, aligned with boundary_nodes.

        1D boundary measure is the counting measure on the two endpoints.
        2D uses the trapezoid rule along each edge; corner nodes carry the
        half-weights of both incident edges.
        """
        nodes = self.boundary_nodes()
        if self.dimension == 1:
            return np.ones(len(nodes))
        hx, hy = self.spacings
        nx, ny = self.shape
        w = np.zeros(len(nodes))
        for m, (i, j) in enumerate(nodes):
            wi = 0.0
            if i == 0 or i == nx - 1:  # runs along y
                wi += hy / 2 if (j == 0 or j == ny - 1) else hy
            if j == 0 or j == ny - 1:  # runs along x
                wi += hx / 2 if (i == 0 or i == nx - 1) else hx
            w[m] = wi
        return w


def trapezoid_weights(domain: DomainSpec) -> np.ndarray:
    """Tensor trapezoid quadrature weights over all nodes."""
    ws = []
    for (lo, hi), n in zip(domain.extents, domain.shape):
        h = (hi - lo) / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = h / 2
        ws.append(w)
    if domain.dimension == 1:
        return ws[0]
    return np.outer(ws[0], ws[1])


@dataclass(frozen=True)
class DistanceField:
    """Metric distance tau to the boundary, sampled at nodes."""

    tau: np.ndarray
    spacings: tuple

    @property
    def h(self) -> float:
        """Largest grid spacing, used as the resolution scale."""
        return max(self.spacings)


@dataclass(frozen=True)
class FilledRegion:
    """Sublevel set {tau < T} with its frontier band."""

    T: float
    indicator: np.ndarray  # bool per node
    frontier: np.ndarray  # bool per node, |tau - T| <= h
    tau: np.ndarray
    spacings: tuple

    def dilated(self, band: float) -> np.ndarray:
        """Indicator of the region thickened by a metric margin."""
        return self.tau < self.T + band


# ---------------------------------------------------------------------------
# constructors


def _coeff_from_scalars(shape, a11, a12=0.0, a22=None):
    d = len(shape)
    c = np.zeros(tuple(shape) + (d, d))
    if d == 1:
        c[..., 0, 0] = a11
    else:
        c[..., 0, 0] = a11
        c[..., 0, 1] = c[..., 1, 0] = a12
        c[..., 1, 1] = a11 if a22 is None else a22
    return c


def interval(
    n: int = 513,
    x0: float = 0.0,
    x1: float = 1.0,
    a: float | np.ndarray | Callable = 1.0,
    q: float | np.ndarray | None = 0.0,
) -> DomainSpec:
    """1D domain on [x0, x1] with n nodes.

    ``a`` may be a constant, a length-n array, or a callable of x.  The
    default grid has 2**9 cells so the midpoint is a node.
    """
    x = np.linspace(x0, x1, n)
    if callable(a):
        a = a(x)
    a = np.broadcast_to(np.asarray(a, dtype=float), (n,)).copy()
    coeff = np.zeros((n, 1, 1))
    coeff[:, 0, 0] = a
    pot = None
    if q is not None:
        if callable(q):
            q = q(x)
        pot = np.broadcast_to(np.asarray(q, dtype=float), (n,)).copy()
        if not pot.any():
            pot = None
    return DomainSpec(extents=((x0, x1),), shape=(n,), coeff=coeff, potential=pot)


def rectangle(
    shape: tuple = (129, 129),
    extents: tuple = ((0.0, 1.0), (0.0, 1.0)),
    a11: float | np.ndarray | Callable = 1.0,
    a12: float | np.ndarray = 0.0,
    a22: float | np.ndarray | Callable | None = None,
    q: float | np.ndarray | None = 0.0,
) -> DomainSpec:
    """2D box domain.  Scalar coefficients broadcast over the grid."""
    nx, ny = shape
    X, Y = np.meshgrid(
        np.linspace(*extents[0], nx), np.linspace(*extents[1], ny), indexing="ij"
    )
    if callable(a11):
        a11 = a11(X, Y)
    if callable(a22):
        a22 = a22(X, Y)
    if callable(a12):
        a12 = a12(X, Y)
    a11 = np.broadcast_to(np.asarray(a11, dtype=float), (nx, ny))
    a12 = np.broadcast_to(np.asarray(a12, dtype=float), (nx, ny))
    a22v = a11 if a22 is None else np.broadcast_to(np.asarray(a22, dtype=float), (nx, ny))
    coeff = np.zeros((nx, ny, 2, 2))
    coeff[..., 0, 0] = a11
    coeff[..., 0, 1] = coeff[..., 1, 0] = a12
    coeff[..., 1, 1] = a22v
    pot = None
    if q is not None:
        if callable(q):
            q = q(X, Y)
        pot = np.broadcast_to(np.asarray(q, dtype=float), (nx, ny)).copy()
        if not pot.any():
            pot = None
    return DomainSpec(extents=extents, shape=(nx, ny), coeff=coeff, potential=pot)


def radial_bump_coefficient(
    base: float = 1.0, amplitude: float = 0.5, center=(0.5, 0.5), width: float = 0.25
) -> Callable:
    """Smooth isotropic coefficient preset: base + bump around ``center``."""

    def profile(*coords):
        if len(coords) == 1:
            r2 = (coords[0] - center[0]) ** 2
        else:
            r2 = (coords[0] - center[0]) ** 2 + (coords[1] - center[1]) ** 2
        return base + amplitude * np.exp(-r2 / width**2)

    return profile


def domain_from_coefficient_csv(
    path, shape: tuple, extents: tuple = None
) -> DomainSpec:
    """Build a domain from a node table ``i,j,a11,a12,a22[,q]``.

    1D tables use j = 0 and only the a11 (and q) columns.  Extents default
    to the unit box.
    """
    d = len(shape)
    if extents is None:
        extents = ((0.0, 1.0),) * d
    coeff = np.zeros(tuple(shape) + (d, d))
    pot = np.zeros(tuple(shape))
    seen = np.zeros(tuple(shape), dtype=bool)
    has_q = False
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "a11" not in reader.fieldnames:
            raise ValueError(f"{path}: missing a11 column")
        has_q = "q" in reader.fieldnames
        for row in reader:
            i, j = int(row["i"]), int(row["j"])
            node = (i,) if d == 1 else (i, j)
            if d == 1 and j != 0:
                raise ValueError(f"{path}: 1D table must have j=0, got j={j}")
            coeff[node + (0, 0)] = float(row["a11"])
            if d == 2:
                a12 = float(row.get("a12", 0.0) or 0.0)
                coeff[node + (0, 1)] = coeff[node + (1, 0)] = a12
                coeff[node + (1, 1)] = float(row.get("a22", row["a11"]) or row["a11"])
            if has_q:
                pot[node] = float(row["q"])
            seen[node] = True
    if not seen.all():
        missing = np.argwhere(~seen)[0]
        raise ValueError(f"{path}: no row for node {tuple(missing)}")
    return DomainSpec(
        extents=extents,
        shape=tuple(shape),
        coeff=coeff,
        potential=pot if has_q else None,
    )


# ---------------------------------------------------------------------------
# eikonal solvers


def eikonal_distance(domain: DomainSpec) -> DistanceField:
    """Metric distance from every node to the boundary.

    1D integrates 1/sqrt(a) exactly on the grid (closed form for constant
    coefficients).  2D with axis-aligned coefficients runs first-order fast
    marching with the upwind two-term update; coefficients with a mixed term
    fall back to a shortest-path sweep over the 8-neighbor graph with metric
    edge lengths.  All variants are first-order accurate and monotone.
    """
    mu = domain.ellipticity()
    if not (mu > 0):
        loc = domain._worst_node()
        raise ValueError(f"coefficients not positive definite at node {loc}")
    if domain.dimension == 1:
        tau = _eikonal_1d(domain)
    else:
        a12 = domain.coeff[..., 0, 1]
        if np.all(a12 == 0):
            tau = _fast_march_2d(domain)
        else:
            tau = _dijkstra_2d(domain)
    return DistanceField(tau=tau, spacings=domain.spacings)


def _eikonal_1d(domain: DomainSpec) -> np.ndarray:
    (h,) = domain.spacings
    c = np.sqrt(domain.coeff[:, 0, 0])
    inv = 1.0 / c
    left = np.zeros_like(inv)
    left[1:] = np.cumsum(0.5 * (inv[1:] + inv[:-1]) * h)
    right = left[-1] - left
    return np.minimum(left, right)


def _fast_march_2d(domain: DomainSpec) -> np.ndarray:
    """Upwind fast marching for a11(x) tau_x^2 + a22(x) tau_y^2 = 1."""
    nx, ny = domain.shape
    hx, hy = domain.spacings
    a11 = domain.coeff[..., 0, 0]
    a22 = domain.coeff[..., 1, 1]
    tau = np.full((nx, ny), np.inf)
    accepted = np.zeros((nx, ny), dtype=bool)
    heap = []
    for i, j in domain.boundary_nodes():
        tau[i, j] = 0.0
        heapq.heappush(heap, (0.0, i * ny + j))

    def update(i, j):
        # smallest accepted neighbor per axis, if any
        ux = np.inf
        if i > 0 and accepted[i - 1, j]:
            ux = tau[i - 1, j]
        if i < nx - 1 and accepted[i + 1, j]:
            ux = min(ux, tau[i + 1, j])
        uy = np.inf
        if j > 0 and accepted[i, j - 1]:
            uy = tau[i, j - 1]
        if j < ny - 1 and accepted[i, j + 1]:
            uy = min(uy, tau[i, j + 1])
        p = a11[i, j] / hx**2
        q = a22[i, j] / hy**2
        best = np.inf
        if np.isfinite(ux) and np.isfinite(uy):
            # two-term quadratic: p (u-ux)^2 + q (u-uy)^2 = 1
            s, t = p + q, p * ux + q * uy
            disc = t**2 - s * (p * ux**2 + q * uy**2 - 1.0)
            if disc >= 0:
                cand = (t + np.sqrt(disc)) / s
                if cand >= max(ux, uy):
                    best = cand
        if not np.isfinite(best):
            cand_x = ux + hx / np.sqrt(a11[i, j]) if np.isfinite(ux) else np.inf
            cand_y = uy + hy / np.sqrt(a22[i, j]) if np.isfinite(uy) else np.inf
            best = min(cand_x, cand_y)
        return best

    while heap:
        val, flat = heapq.heappop(heap)
        i, j = divmod(flat, ny)
        if accepted[i, j]:
            continue
        accepted[i, j] = True
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ii, jj = i + di, j + dj
            if 0 <= ii < nx and 0 <= jj < ny and not accepted[ii, jj]:
                cand = update(ii, jj)
                if cand < tau[ii, jj]:
                    tau[ii, jj] = cand
                    heapq.heappush(heap, (cand, ii * ny + jj))
    return tau


def _dijkstra_2d(domain: DomainSpec) -> np.ndarray:
    """Shortest paths to the boundary over the 8-neighbor graph.

    Edge length is sqrt(dx^T m dx) with m the inverse coefficient matrix
    averaged over the edge endpoints.
    """
    nx, ny = domain.shape
    hx, hy = domain.spacings
    inv = np.linalg.inv(domain.coeff)
    tau = np.full((nx, ny), np.inf)
    done = np.zeros((nx, ny), dtype=bool)
    heap = []
    for i, j in domain.boundary_nodes():
        tau[i, j] = 0.0
        heapq.heappush(heap, (0.0, i * ny + j))
    steps = [
        (di, dj)
        for di in (-1, 0, 1)
        for dj in (-1, 0, 1)
        if not (di == 0 and dj == 0)
    ]
    while heap:
        val, flat = heapq.heappop(heap)
        i, j = divmod(flat, ny)
        if done[i, j]:
            continue
        done[i, j] = True
        for di, dj in steps:
            ii, jj = i + di, j + dj
            if not (0 <= ii < nx and 0 <= jj < ny) or done[ii, jj]:
                continue
            dx = np.array([di * hx, dj * hy])
            m = 0.5 * (inv[i, j] + inv[ii, jj])
            cand = val + np.sqrt(dx @ m @ dx)
            if cand < tau[ii, jj]:
                tau[ii, jj] = cand
                heapq.heappush(heap, (cand, ii * ny + jj))
    return tau


def filled_subdomain(dist: DistanceField, T: float) -> FilledRegion:
    """Region reachable from the boundary within time T, with frontier band."""
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    h = dist.h
    return FilledRegion(
        T=T,
        indicator=dist.tau < T,
        frontier=np.abs(dist.tau - T) <= h,
        tau=dist.tau,
        spacings=dist.spacings,
    )


def filling_time(dist: DistanceField) -> float:
    """Smallest horizon at which the filled region covers every node."""
    return float(np.max(dist.tau))


# ---------------------------------------------------------------------------
# CSV artifacts


def _node_rows(shape, axes):
    if len(shape) == 1:
        for i in range(shape[0]):
            yield (i, 0, axes[0][i], 0.0)
    else:
        for i in range(shape[0]):
            for j in range(shape[1]):
                yield (i, j, axes[0][i], axes[1][j])


def write_distance_csv(path, domain: DomainSpec, dist: DistanceField) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "x", "y", "tau"])
        flat = dist.tau.ravel()
        for row, v in zip(_node_rows(domain.shape, domain.axes), flat):
            writer.writerow([row[0], row[1], f"{row[2]:.17g}", f"{row[3]:.17g}", f"{v:.17g}"])


def write_region_csv(path, domain: DomainSpec, region: FilledRegion) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "x", "y", "inside"])
        flat = region.indicator.ravel()
        for row, v in zip(_node_rows(domain.shape, domain.axes), flat):
            writer.writerow([row[0], row[1], f"{row[2]:.17g}", f"{row[3]:.17g}", int(v)])
