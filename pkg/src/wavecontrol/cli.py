"""Command-line front end: configs, experiment runs, verification suite.

Config files are flat ``key=value`` text, one pair per line, ``#`` comments
allowed.  Unknown keys are rejected so a typo cannot silently fall back to a
default.  Every run writes its artifacts plus a ``manifest.json`` recording
the exact config, package version, seed, and wall-clock timings.  Timings
make the manifest non-reproducible by design; all other artifacts are
byte-identical across reruns with the same config and seed.

Exit codes: 0 success, 1 verification failure, 2 config or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry, presets
from .control_lab import (
    DEFAULT_ALPHA_SCHEDULE,
    SynthesisProblem,
    h1_star_experiment,
    observability_test,
    residual_curve,
    synthesize_control,
    unreachability_bound,
)
from .regularizer import (
    beta,
    beta_table,
    regularize_state,
    second_moment,
    smooth_control,
    write_beta_csv,
)
from .spectral import eigensolve, project, reconstruct, write_spectrum_csv
from .waveop import (
    DEFAULT_TIME_STEPS,
    BoundaryControl,
    f_norm,
    observe,
    random_control,
    random_smooth_control,
    random_state,
    solve_dual,
    support_violation,
    time_weights,
    verify_duality,
    write_state_csv,
    write_trace_csv,
)

__all__ = ["ExperimentConfig", "ConfigError", "main", "run", "verify_suite"]

SUBCOMMANDS = (
    "eikonal",
    "eigen",
    "forward",
    "dual",
    "observe",
    "beta",
    "control",
    "h1star",
    "verify",
)


class ConfigError(Exception):
    """Bad key, bad value, or out-of-range parameter."""


_PRESETS = ("interval", "interval_bump", "square", "square_bump")


@dataclass
class ExperimentConfig:
    """Flat experiment parameters with validated ranges."""

    preset: str = "interval"
    coefficient_csv: str = ""
    nx: int = 0  # 0 means preset default (513 in 1D, 129 in 2D)
    ny: int = 0
    n_modes: int = 0  # 0 means 64 in 1D, 100 in 2D
    T: float = 0.75
    delta: float = -1.0  # negative means T/10
    epsilon: float = -1.0  # negative means delta/2
    s: float = 0.0
    alphas: tuple = DEFAULT_ALPHA_SCHEDULE
    budget: int = 500
    n_steps: int = DEFAULT_TIME_STEPS
    target: str = "center_bump"
    control_class: str = "all_of_F"
    seed: int = 0
    out_dir: str = "out"
    debug_break_quadrature: bool = False

    def __post_init__(self):
        if self.preset not in _PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}, expected one of {_PRESETS}")
        if self.T <= 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.delta < 0:
            self.delta = self.T / 10.0
        if self.epsilon < 0:
            self.epsilon = self.delta / 2.0
        if not 0 < self.epsilon < self.delta < self.T:
            raise ConfigError(
                f"need 0 < epsilon < delta < T, got epsilon={self.epsilon}, "
                f"delta={self.delta}, T={self.T}"
            )
        if self.s < 0:
            raise ConfigError(f"s must be nonnegative, got {self.s}")
        if self.budget < 1:
            raise ConfigError(f"budget must be at least 1, got {self.budget}")
        if self.n_steps < 2:
            raise ConfigError(f"n_steps must be at least 2, got {self.n_steps}")
        if any(a <= 0 for a in self.alphas):
            raise ConfigError(f"alphas must be positive, got {self.alphas}")
        if list(self.alphas) != sorted(self.alphas, reverse=True) or len(
            set(self.alphas)
        ) != len(self.alphas):
            raise ConfigError(f"alphas must be strictly decreasing, got {self.alphas}")
        if self.target not in presets.TARGET_PRESETS:
            raise ConfigError(
                f"unknown target {self.target!r}, expected one of "
                f"{tuple(presets.TARGET_PRESETS)}"
            )
        if self.control_class not in ("all_of_F", "smooth", "smooth_vanishing_at_T"):
            raise ConfigError(f"unknown control_class {self.control_class!r}")
        if self.nx < 0 or self.ny < 0 or self.n_modes < 0:
            raise ConfigError("grid sizes and n_modes must be nonnegative")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")

    @property
    def dimension(self) -> int:
        return 2 if self.preset.startswith("square") else 1

    def as_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d


_BOOL_KEYS = {"debug_break_quadrature"}
_INT_KEYS = {"nx", "ny", "n_modes", "budget", "n_steps", "seed"}
_FLOAT_KEYS = {"T", "delta", "epsilon", "s"}
_STR_KEYS = {"preset", "coefficient_csv", "target", "control_class", "out_dir"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat key=value lines; unknown keys and bad values raise."""
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in kwargs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _BOOL_KEYS:
                if value not in ("0", "1", "true", "false"):
                    raise ValueError(value)
                kwargs[key] = value in ("1", "true")
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key == "alphas":
                kwargs[key] = tuple(float(tok) for tok in value.split(",") if tok.strip())
            elif key in _STR_KEYS:
                kwargs[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {value!r}")
    return ExperimentConfig(**kwargs)


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(p.read_text())


def build_domain(cfg: ExperimentConfig) -> geometry.DomainSpec:
    if cfg.coefficient_csv:
        nx = cfg.nx or (513 if cfg.dimension == 1 else 129)
        shape = (nx,) if cfg.dimension == 1 else (nx, cfg.ny or 129)
        return geometry.domain_from_coefficient_csv(cfg.coefficient_csv, shape)
    if cfg.preset == "interval":
        return geometry.interval(n=cfg.nx or 513)
    if cfg.preset == "interval_bump":
        n = cfg.nx or 513
        coeff = geometry.radial_bump_coefficient(1.0, 0.5, (0.5,), 0.25)
        return geometry.interval(n=n, a=coeff)
    nx = cfg.nx or 129
    ny = cfg.ny or 129
    if cfg.preset == "square":
        return geometry.rectangle(shape=(nx, ny))
    coeff = geometry.radial_bump_coefficient(1.0, 0.5, (0.5, 0.5), 0.25)
    return geometry.rectangle(shape=(nx, ny), a11=coeff, a22=coeff)


def build_basis(cfg: ExperimentConfig, domain=None):
    domain = domain if domain is not None else build_domain(cfg)
    n_modes = cfg.n_modes or (64 if domain.dimension == 1 else 100)
    return eigensolve(domain, n_modes)


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _target_state(cfg: ExperimentConfig, domain, basis):
    maker = presets.TARGET_PRESETS[cfg.target]
    return maker(domain, basis, cfg.T)


# ---------------------------------------------------------------------------
# subcommands


def _run_eikonal(cfg, out, domain, timings):
    t0 = time.perf_counter()
    dist = geometry.eikonal_distance(domain)
    region = geometry.filled_subdomain(dist, cfg.T)
    timings["eikonal"] = time.perf_counter() - t0
    geometry.write_distance_csv(out / "tau.csv", domain, dist)
    geometry.write_region_csv(out / "region.csv", domain, region)
    _write_json(
        out / "summary.json",
        {
            "T": cfg.T,
            "T_fill": geometry.filling_time(dist),
            "h": dist.h,
            "covered_fraction": float(np.mean(region.indicator)),
        },
    )
    return 0


def _run_eigen(cfg, out, domain, timings):
    t0 = time.perf_counter()
    basis = build_basis(cfg, domain)
    timings["eigensolve"] = time.perf_counter() - t0
    write_spectrum_csv(out / "spectrum.csv", basis)
    gram = basis.gram()
    off = float(np.abs(gram - np.eye(basis.n_modes)).max())
    _write_json(
        out / "summary.json",
        {
            "n_modes": basis.n_modes,
            "backend": basis.backend,
            "lambda_1": float(basis.lambdas[0]),
            "lambda_max": float(basis.lambdas[-1]),
            "gram_max_deviation": off,
        },
    )
    return 0


def _run_forward(cfg, out, domain, timings):
    basis = build_basis(cfg, domain)
    n_bnd = len(basis.boundary_weights)
    f = presets.stored_reference_control(cfg.T, n_bnd, n_steps=cfg.n_steps)
    t0 = time.perf_counter()
    from .waveop import control_to_state

    u = control_to_state(f, basis)
    timings["forward"] = time.perf_counter() - t0
    dist = geometry.eikonal_distance(domain)
    region = geometry.filled_subdomain(dist, cfg.T)
    band = 2 * dist.h + 2 * cfg.T / cfg.n_steps
    write_state_csv(out / "state.csv", domain, u)
    _write_json(
        out / "summary.json",
        {
            "T": cfg.T,
            "state_norm_H": basis.h_norm(u.values),
            "support_violation": support_violation(u, region, band, basis.mass_weights),
            "dilation_band": band,
        },
    )
    return 0


def _run_dual(cfg, out, domain, timings):
    basis = build_basis(cfg, domain)
    y = _target_state(cfg, domain, basis)
    t0 = time.perf_counter()
    snaps = solve_dual(y, cfg.T, basis, times=np.array([0.0, cfg.T / 2, cfg.T]))
    timings["dual"] = time.perf_counter() - t0
    from .waveop import StateField

    write_state_csv(out / "dual_t0.csv", domain, StateField(snaps[0], role="dual_snapshot"))
    _write_json(
        out / "summary.json",
        {
            "T": cfg.T,
            "target": cfg.target,
            "dual_t0_norm_H": basis.h_norm(snaps[0]),
            "dual_T_norm_H": basis.h_norm(snaps[-1]),
        },
    )
    return 0


def _run_observe(cfg, out, domain, timings):
    basis = build_basis(cfg, domain)
    y = _target_state(cfg, domain, basis)
    t0 = time.perf_counter()
    g = observe(y, cfg.T, basis, n_steps=cfg.n_steps)
    timings["observe"] = time.perf_counter() - t0
    write_trace_csv(out / "trace.csv", g)
    tr = f_norm(g.samples, basis.boundary_weights, g.dt)
    yn = basis.h_norm(y.values)
    _write_json(
        out / "summary.json",
        {
            "T": cfg.T,
            "target": cfg.target,
            "trace_norm_F": tr,
            "target_norm_H": yn,
            "trace_ratio": tr / yn if yn > 0 else 0.0,
        },
    )
    return 0


def _run_beta(cfg, out, domain, timings):
    basis = build_basis(cfg, domain)
    t0 = time.perf_counter()
    values = beta_table(cfg.epsilon, basis.lambdas)
    timings["beta"] = time.perf_counter() - t0
    write_beta_csv(out / "beta.csv", basis, cfg.epsilon)
    _write_json(
        out / "summary.json",
        {
            "epsilon": cfg.epsilon,
            "max_abs_beta": float(np.abs(values).max()),
            "min_beta": float(values.min()),
            "first_beta": float(values[0]),
        },
    )
    return 0


def _write_residuals_csv(path: Path, history):
    with open(path, "w") as fh:
        fh.write("iter,residual\n")
        for i, r in enumerate(history):
            fh.write(f"{i},{r:.17g}\n")


def _run_control(cfg, out, domain, timings):
    basis = build_basis(cfg, domain)
    y = _target_state(cfg, domain, basis)
    problem = SynthesisProblem(
        target=y,
        T=cfg.T,
        s=cfg.s,
        control_class=cfg.control_class,
        budget=cfg.budget,
        delta=cfg.delta,
        epsilon=cfg.epsilon,
        n_steps=cfg.n_steps,
    )
    t0 = time.perf_counter()
    rows = residual_curve(problem, cfg.alphas, basis=basis)
    problem.alpha = cfg.alphas[-1]
    res = synthesize_control(problem, basis)
    timings["synthesis"] = time.perf_counter() - t0
    dist = geometry.eikonal_distance(domain)
    region = geometry.filled_subdomain(dist, cfg.T)
    bound = unreachability_bound(y, region, band=2 * dist.h)
    _write_residuals_csv(out / "residuals.csv", res.residual_history)
    with open(out / "curve.csv", "w") as fh:
        fh.write("alpha,final_residual,relative_residual,iterations,converged\n")
        for r in rows:
            fh.write(
                f"{r['alpha']:.17g},{r['final_residual']:.17g},"
                f"{r['relative_residual']:.17g},{r['iterations']},"
                f"{int(r['converged'])}\n"
            )
    write_trace_csv(out / "control.csv", res.control)
    _write_json(
        out / "summary.json",
        {
            "T": cfg.T,
            "s": cfg.s,
            "target": cfg.target,
            "control_class": cfg.control_class,
            "alpha": cfg.alphas[-1],
            "final_residual": res.final_residual,
            "target_norm": res.target_norm,
            "target_norm_H": basis.h_norm(y.values),
            "relative_residual": res.relative_residual,
            "iterations": res.iterations,
            "converged": res.converged,
            "unreachability_bound": bound.value,
            "unreachability_bound_dilated": bound.dilated_value,
        },
    )
    return 0


def _run_h1star(cfg, out, domain, timings):
    basis = build_basis(cfg, domain)
    y = _target_state(cfg, domain, basis)
    t0 = time.perf_counter()
    res = h1_star_experiment(
        y,
        cfg.T,
        basis,
        budget=cfg.budget,
        delta=cfg.delta,
        epsilon=cfg.epsilon,
        n_steps=cfg.n_steps,
    )
    timings["h1star"] = time.perf_counter() - t0
    _write_residuals_csv(out / "residuals.csv", res.residual_history)
    write_trace_csv(out / "control.csv", res.control)
    _write_json(
        out / "summary.json",
        {
            "T": cfg.T,
            "target": cfg.target,
            "final_residual": res.final_residual,
            "target_norm": res.target_norm,
            "relative_residual": res.relative_residual,
            "iterations": res.iterations,
            "converged": res.converged,
        },
    )
    return 0


# ---------------------------------------------------------------------------
# verification suite


def _suite_adjointness(cfg, basis, rng):
    items = []
    worst = 0.0
    for trial in range(20):
        f = random_control(basis, cfg.T, rng, n_steps=cfg.n_steps)
        y = random_state(basis, rng)
        d = verify_duality(f, y, basis, _break_weights=cfg.debug_break_quadrature)
        worst = max(worst, d)
    items.append(
        {
            "item": "duality_relative_discrepancy_max_20_trials",
            "measured": worst,
            "bound": 1e-12,
            "passed": bool(worst <= 1e-12),
        }
    )
    return items


def _suite_spectral(cfg, domain, basis):
    items = []
    gram = basis.gram()
    off = float(np.abs(gram - np.eye(basis.n_modes)).max())
    items.append(
        {"item": "gram_identity_deviation", "measured": off, "bound": 1e-10, "passed": bool(off <= 1e-10)}
    )
    lam = basis.lambdas
    items.append(
        {
            "item": "eigenvalues_sorted_positive",
            "measured": float(lam[0]),
            "bound": 0.0,
            "passed": bool(lam[0] > 0 and np.all(np.diff(lam) >= -1e-12 * lam[-1])),
        }
    )
    if cfg.preset == "interval" and not cfg.coefficient_csv:
        exact = np.pi**2
        rel = abs(lam[0] - exact) / exact
        items.append(
            {"item": "lambda1_vs_analytic", "measured": rel, "bound": 1e-3, "passed": bool(rel <= 1e-3)}
        )
    if cfg.preset == "square" and not cfg.coefficient_csv:
        exact = 2 * np.pi**2
        rel = abs(lam[0] - exact) / exact
        items.append(
            {"item": "lambda1_vs_analytic", "measured": rel, "bound": 1e-2, "passed": bool(rel <= 1e-2)}
        )
    return items


def _suite_regularizer(cfg, basis, rng):
    items = []
    m2 = second_moment()
    lam = basis.lambdas
    eps_sweep = np.logspace(0, -4, 20)
    max_abs = 0.0
    taylor_worst = 0.0
    for eps in eps_sweep:
        b = beta_table(eps, lam)
        max_abs = max(max_abs, float(np.abs(b).max()))
        om2 = eps**2 * lam
        mask = np.sqrt(om2) <= 0.3
        if np.any(mask):
            ratio = np.abs(1 - b[mask]) / (1.1 * om2[mask] / 2 * m2)
            taylor_worst = max(taylor_worst, float(ratio.max()))
    items.append(
        {"item": "beta_bounded_by_one", "measured": max_abs, "bound": 1.0, "passed": bool(max_abs <= 1.0)}
    )
    items.append(
        {
            "item": "beta_taylor_bound_small_phase",
            "measured": taylor_worst,
            "bound": 1.0,
            "passed": bool(taylor_worst <= 1.0),
        }
    )
    k = int(rng.integers(0, basis.n_modes))
    from .waveop import StateField

    ek = StateField(basis.modes[k].copy())
    smoothed = regularize_state(ek, cfg.epsilon, basis)
    coeffs = project(smoothed.values, basis).alphas
    expect = np.zeros(basis.n_modes)
    expect[k] = beta(cfg.epsilon, lam[k])
    dev = float(np.abs(coeffs - expect).max())
    items.append(
        {
            "item": "regularizer_diagonal_in_modes",
            "measured": dev,
            "bound": 1e-10,
            "passed": bool(dev <= 1e-10),
        }
    )
    return items


def _suite_finite_speed(cfg, domain, basis):
    from .waveop import control_to_state

    n_bnd = len(basis.boundary_weights)
    T = min(cfg.T, 0.3)
    f = presets.pulse_control(T, n_bnd, support=(0.1 * T, 0.6 * T), n_steps=cfg.n_steps)
    u = control_to_state(f, basis)
    dist = geometry.eikonal_distance(domain)
    region = geometry.filled_subdomain(dist, T)
    band = 2 * dist.h + 2 * T / cfg.n_steps
    viol = support_violation(u, region, band, basis.mass_weights)
    return [
        {
            "item": "pulse_mass_outside_filled_region",
            "measured": viol,
            "bound": 1e-3,
            "passed": bool(viol <= 1e-3),
        }
    ]


def _suite_smoothing_identity(cfg, basis, rng):
    # pairing with the raw control equals pairing of the regularized state
    # with the smoothed control, per the kernel antisymmetrization
    from .waveop import control_to_modal

    worst = 0.0
    dt = cfg.T / cfg.n_steps
    bvals = beta_table(cfg.epsilon, basis.lambdas)
    for trial in range(10):
        f = random_smooth_control(
            basis, cfg.T, rng, n_steps=cfg.n_steps, support=(cfg.delta, cfg.T)
        )
        y = random_state(basis, rng)
        alphas = project(y.values, basis).alphas
        f_eps = smooth_control(f, cfg.epsilon, cfg.delta)
        lhs = float(control_to_modal(f_eps, basis) @ alphas)
        rhs = float(control_to_modal(f, basis) @ (bvals * alphas))
        g = observe(y, cfg.T, basis, n_steps=cfg.n_steps)
        scale = f_norm(f.samples, basis.boundary_weights, dt) * f_norm(
            g.samples, basis.boundary_weights, dt
        )
        worst = max(worst, abs(lhs - rhs) / scale if scale > 0 else 0.0)
    return [
        {
            "item": "mollified_control_vs_regularized_state_pairing",
            "measured": worst,
            "bound": 1e-8,
            "passed": bool(worst <= 1e-8),
        }
    ]


def _suite_observability(cfg, domain, basis):
    items = []
    dist = geometry.eikonal_distance(domain)
    T = 0.3
    y = presets.center_bump_target(domain)
    verdict = observability_test(
        y, T, 0.05, 1e-3, basis, dist.tau, band=2 * dist.h, n_steps=cfg.n_steps
    )
    items.append(
        {
            "item": "center_bump_trace_and_support",
            "measured": verdict.trace_ratio,
            "bound": 1e-3,
            "passed": bool(verdict.passed and not verdict.observable),
        }
    )
    y1 = presets.mode_target(basis, 0)
    v2 = observability_test(y1, cfg.T, 0.05, 1e-3, basis, dist.tau, n_steps=cfg.n_steps)
    items.append(
        {
            "item": "first_mode_trace_visible",
            "measured": v2.trace_ratio,
            "bound": 0.1,
            "passed": bool(v2.observable and v2.trace_ratio >= 0.1),
        }
    )
    return items


def _suite_synthesis(cfg, domain, basis):
    items = []
    y_in = presets.in_range_target(basis, cfg.T)
    prob = SynthesisProblem(target=y_in, T=cfg.T, budget=cfg.budget, n_steps=cfg.n_steps)
    res = synthesize_control(prob, basis)
    items.append(
        {
            "item": "in_range_target_relative_residual",
            "measured": res.relative_residual,
            "bound": 1e-6,
            "passed": bool(res.relative_residual <= 1e-6),
        }
    )
    hist = res.residual_history
    mono = bool(np.all(np.diff(hist) <= 1e-12 * hist[0]))
    items.append(
        {
            "item": "cg_residual_history_nonincreasing",
            "measured": float(np.max(np.diff(hist))) if len(hist) > 1 else 0.0,
            "bound": 0.0,
            "passed": mono,
        }
    )
    y_bump = presets.center_bump_target(domain)
    prob2 = SynthesisProblem(
        target=y_bump, T=0.3, alpha=cfg.alphas[-1], budget=cfg.budget, n_steps=cfg.n_steps
    )
    res2 = synthesize_control(prob2, basis)
    ratio = res2.final_residual / basis.h_norm(y_bump.values)
    items.append(
        {
            "item": "unreachable_bump_residual_ratio",
            "measured": ratio,
            "bound": 0.99,
            "passed": bool(ratio >= 0.99),
        }
    )
    return items


def verify_suite(cfg: ExperimentConfig) -> dict:
    """Run every invariant suite; returns the machine-readable report."""
    rng = np.random.default_rng(cfg.seed)
    domain = build_domain(cfg)
    basis = build_basis(cfg, domain)
    suites = {}
    timings = {}
    for name, fn in (
        ("adjointness", lambda: _suite_adjointness(cfg, basis, rng)),
        ("spectral", lambda: _suite_spectral(cfg, domain, basis)),
        ("regularizer", lambda: _suite_regularizer(cfg, basis, rng)),
        ("finite_speed", lambda: _suite_finite_speed(cfg, domain, basis)),
        ("smoothing_identity", lambda: _suite_smoothing_identity(cfg, basis, rng)),
        ("observability", lambda: _suite_observability(cfg, domain, basis)),
        ("synthesis", lambda: _suite_synthesis(cfg, domain, basis)),
    ):
        t0 = time.perf_counter()
        suites[name] = fn()
        timings[name] = time.perf_counter() - t0
    all_passed = all(item["passed"] for items in suites.values() for item in items)
    return {
        "version": __version__,
        "seed": cfg.seed,
        "preset": cfg.preset,
        "all_passed": all_passed,
        "suites": suites,
        "timings": timings,
    }


def _run_verify(cfg, out, domain, timings):
    report = verify_suite(cfg)
    timings.update(report.pop("timings"))
    _write_json(out / "report.json", report)
    for name, items in report["suites"].items():
        for item in items:
            status = "pass" if item["passed"] else "FAIL"
            print(f"[{status}] {name}: {item['item']} = {item['measured']:.6g}")
    return 0 if report["all_passed"] else 1


_RUNNERS = {
    "eikonal": _run_eikonal,
    "eigen": _run_eigen,
    "forward": _run_forward,
    "dual": _run_dual,
    "observe": _run_observe,
    "beta": _run_beta,
    "control": _run_control,
    "h1star": _run_h1star,
    "verify": _run_verify,
}


def run(cfg: ExperimentConfig, subcommand: str, out_dir: str | None = None) -> int:
    """Execute one subcommand; writes artifacts and the manifest."""
    if subcommand not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()
    domain = build_domain(cfg)
    status = _RUNNERS[subcommand](cfg, out, domain, timings)
    timings["total"] = time.perf_counter() - t0
    _write_json(
        out / "manifest.json",
        {
            "subcommand": subcommand,
            "version": __version__,
            "seed": cfg.seed,
            "config": cfg.as_dict(),
            "timings": timings,
        },
    )
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavecontrol",
        description="Boundary-control experiments for the wave equation.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", default=None, help="flat key=value config file")
    parser.add_argument("--out-dir", default=None, help="artifact directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"seed must be nonnegative, got {args.seed}")
            cfg.seed = args.seed
        return run(cfg, args.subcommand, out_dir=args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
