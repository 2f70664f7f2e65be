"""Exact piecewise closed-form simulation of the quantized sampled-data network."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from sys import modules as sys_modules

import numpy as np

from . import kernels
from .graph import SpectrumError, build_laplacian, is_strongly_connected, read_graph
from .propagation import (
    Certificate,
    CertificateError,
    EpsNormFrame,
    SystemMatrices,
    assemble_flow,
    build_eps_frame,
    certificate,
    check_consensus_amplitude,
    flow_coefficients,
    system_matrices,
)
from .quantizer import UniformQuantizer, ZoomSchedule
from .scenario import ScenarioConfig, emit_scenario, parse_scenario
from .stability import feasible_windows

__all__ = [
    "OscillatorState",
    "ReferenceOrbit",
    "SimulationTrace",
    "reference_orbit",
    "step_exact",
    "run_closed_loop",
    "free_flow",
    "sync_error",
    "reduced_coordinates",
    "long_run_error",
    "InfeasibleSamplingError",
    "seeded_initial_state",
    "prepare",
    "simulate",
    "sweep",
]


class InfeasibleSamplingError(ValueError):
    """Sampling period lies outside every feasibility window (and the study flag is off)."""



@dataclass(frozen=True)
class OscillatorState:
    t: float
    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.r.shape != self.v.shape or not (np.isfinite(self.r).all() and np.isfinite(self.v).all()):
            raise ValueError("positions and velocities must be finite vectors of equal length")

    @property
    def X(self) -> np.ndarray:
        return np.concatenate([self.r, self.v])


@dataclass(frozen=True)
class ReferenceOrbit:
    """Uncoupled harmonic orbit followed by the xi-weighted network average."""

    omega: float
    gamma0: float
    nu0: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        gamma = c * self.gamma0 + s * self.nu0 / self.omega
        nu = -self.omega * s * self.gamma0 + c * self.nu0
        return gamma, nu

    @property
    def energy(self) -> float:
        return self.gamma0**2 + self.nu0**2 / self.omega**2


def reference_orbit(xi: np.ndarray, X0: np.ndarray, omega: float) -> ReferenceOrbit:
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[0]
    X0 = np.asarray(X0, dtype=float)
    return ReferenceOrbit(omega=float(omega), gamma0=float(xi @ X0[:n]), nu0=float(xi @ X0[n:]))


def step_exact(sys: SystemMatrices, X: np.ndarray, C: np.ndarray, dt: float) -> np.ndarray:
    """``X(t_k + dt) = E(dt) X(t_k) + F(dt) C(t_k)`` for ``0 < dt <= tau``."""
    X = np.asarray(X, dtype=float)
    C = np.asarray(C, dtype=float)
    if X.shape != (2 * sys.n,) or C.shape != X.shape:
        raise ValueError(f"state and forcing must have shape ({2 * sys.n},)")
    E, F = assemble_flow(sys.omega, dt, sys.L)
    return E @ X + F @ C


@dataclass
class SimulationTrace:
    """Sampled (and optionally dense) closed-loop history.

    ``mu[k]`` and ``coupling[k]`` are the zoom level and coupling state
    held on ``[t_k, t_{k+1})``; ``residual[k] = q_mu(v(t_k)) - v(t_k)``.
    """

    omega: float
    tau: float
    xi: np.ndarray
    mode: str
    t: np.ndarray
    X: np.ndarray
    mu: np.ndarray
    coupling: np.ndarray
    residual: np.ndarray
    saturated: np.ndarray
    k0: int | None = None
    T_steps: int | None = None
    theta: float | None = None
    backend: str = ""
    feasible: bool | None = None
    certificate: "Certificate | None" = field(default=None, repr=False)
    frame: "EpsNormFrame | None" = field(default=None, repr=False)
    t_dense: np.ndarray | None = field(default=None, repr=False)
    X_dense: np.ndarray | None = field(default=None, repr=False)
    mu_dense: np.ndarray | None = field(default=None, repr=False)
    coupling_dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    @property
    def orbit(self) -> ReferenceOrbit:
        return reference_orbit(self.xi, self.X[0], self.omega)

    @property
    def stage(self) -> list[str]:
        if self.mode == ZoomSchedule.FIXED:
            return ["fixed"] * len(self.t)
        return [ZoomSchedule.ZOOM_IN if c else ZoomSchedule.ZOOM_OUT for c in self.coupling]

    @property
    def dwell_samples(self) -> list[int]:
        """Sample indices where a new zoom-in dwell begins (``k0``, ``k0 + T``, ...)."""
        if self.k0 is None or self.T_steps is None:
            return []
        return list(range(self.k0, len(self.t), self.T_steps))

    def timeline(self):
        """``(t, X, mu, coupling)`` over the dense grid when present, else the samples."""
        if self.t_dense is not None:
            return self.t_dense, self.X_dense, self.mu_dense, self.coupling_dense
        return self.t, self.X, self.mu, self.coupling


def sync_error(trace: SimulationTrace, orbit: ReferenceOrbit | None = None, dense: bool = False, raw: bool = False):
    """``|X(t) - [gamma(t), nu(t)] (x) 1|_inf`` per timestamp (and the raw error if ``raw``)."""
    orbit = orbit or trace.orbit
    t, X = (trace.timeline()[:2] if dense else (trace.t, trace.X))
    n = trace.n
    if len(t) == 0:
        return (np.zeros(0), np.zeros((0, 2 * n))) if raw else np.zeros(0)
    gamma, nu = orbit(t)
    err = X.copy()
    err[:, :n] -= gamma[:, None]
    err[:, n:] -= nu[:, None]
    inf = np.abs(err).max(axis=1)
    return (inf, err) if raw else inf


def reduced_coordinates(trace: SimulationTrace, sys: SystemMatrices) -> np.ndarray:
    """Reduced disagreement states ``P_dag2 (X(t_k) - [gamma, nu] (x) 1)`` at the samples."""
    _, err = sync_error(trace, raw=True)
    return err @ sys.P_dag2.T


def free_flow(omega: float, X0: np.ndarray, tau: float, n_steps: int, backend=None) -> np.ndarray:
    """Uncoupled propagation (``u = 0``) over ``n_steps`` exact sampling periods."""
    X0 = np.asarray(X0, dtype=float)
    n = X0.shape[0] // 2
    expA2, _ = flow_coefficients(omega, tau)
    Phi = np.kron(expA2, np.eye(n))
    prop = backend or kernels.propagate
    X, _, _ = prop(Phi, np.zeros((2 * n, n)), Phi, X0, np.ones(n_steps), np.zeros(n_steps, dtype=np.uint8),
                   1.0, 1, 2.0, n_steps)
    return X


def run_closed_loop(sys: SystemMatrices, quantizer: UniformQuantizer, schedule: ZoomSchedule,
                    X0: np.ndarray, n_steps: int, xi: np.ndarray | None = None,
                    dense: int = 0, backend=None) -> SimulationTrace:
    """Drive the network for ``n_steps`` sampling periods under ``schedule``.

    Zoom-out samples (coupling off) are propagated by the free flow; the
    remaining samples go through the compiled or pure-Python kernel.
    """
    if backend is None:
        prop, backend_name = kernels.propagate, kernels.BACKEND
    else:
        module = sys_modules.get(getattr(backend, "__module__", ""))
        prop, backend_name = backend, getattr(module, "BACKEND", "custom")
    n = sys.n
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (2 * n,):
        raise ValueError(f"initial state must have shape ({2 * n},)")
    if xi is None:
        if sys.spectrum is not None:
            xi = sys.spectrum.xi
        elif n == 1:
            xi = np.ones(1)
        else:
            raise ValueError("averaging weights xi are required when the system has no spectral basis")
    G = sys.F[:, n:] @ (-sys.L)
    Phi = sys.expA

    X = np.empty((n_steps + 1, 2 * n))
    X[0] = X0
    mu = np.zeros(n_steps + 1)
    coupling = np.zeros(n_steps + 1, dtype=bool)
    residual = np.zeros((n_steps, n))
    saturated = np.zeros(n_steps, dtype=bool)

    k = 0
    while k <= n_steps and schedule.stage == ZoomSchedule.ZOOM_OUT:
        mu[k], coupling[k] = schedule.observe(k, X[k, n:])
        if coupling[k] or k == n_steps:
            break
        X[k + 1] = Phi @ X[k]
        k += 1

    if schedule.stage == ZoomSchedule.ZOOM_IN and k < n_steps:
        count = n_steps - k
        mus = schedule.zoom_in_mus(k, count + 1)
        Xs, R, sat = prop(sys.E, G, Phi, X[k], mus[:count], np.ones(count, dtype=np.uint8),
                          quantizer.Delta, quantizer.K, quantizer.M, count)
        X[k:] = Xs
        residual[k:] = R
        saturated[k:] = sat.astype(bool)
        mu[k:] = mus
        coupling[k:] = True
    elif schedule.stage == ZoomSchedule.ZOOM_IN:
        mu[k] = schedule.mu_at_sample(k)
        coupling[k] = True

    t = np.arange(n_steps + 1) * sys.tau
    trace = SimulationTrace(
        omega=sys.omega, tau=sys.tau, xi=np.asarray(xi, dtype=float), mode=schedule.mode,
        t=t, X=X, mu=mu, coupling=coupling, residual=residual, saturated=saturated,
        k0=schedule.k0 if schedule.mode == ZoomSchedule.ADJUSTABLE else None,
        T_steps=schedule.T_steps, theta=schedule.theta, backend=backend_name,
    )
    if dense and dense > 1 and n_steps > 0:
        _fill_dense(trace, sys, int(dense))
    return trace


def _fill_dense(trace: SimulationTrace, sys: SystemMatrices, m: int) -> None:
    n = sys.n
    N = len(trace.t) - 1
    Xk = trace.X[:-1]
    on = trace.coupling[:-1]
    forcing = trace.residual @ (-sys.L).T  # -L (q - v) per sample
    out = np.empty((N, m, 2 * n))
    out[:, 0] = Xk
    for j in range(1, m):
        h = j * sys.tau / m
        Ej, Fj = assemble_flow(sys.omega, h, sys.L)
        expA2, _ = flow_coefficients(sys.omega, h)
        Phij = np.kron(expA2, np.eye(n))
        coupled = Xk @ Ej.T + forcing @ Fj[:, n:].T
        free = Xk @ Phij.T
        out[:, j] = np.where(on[:, None], coupled, free)
    k = np.repeat(np.arange(N), m)
    j = np.tile(np.arange(m), N)
    trace.t_dense = np.concatenate([k * sys.tau + j * (sys.tau / m), trace.t[-1:]])
    trace.X_dense = np.concatenate([out.reshape(N * m, 2 * n), trace.X[-1:]])
    trace.mu_dense = np.concatenate([np.repeat(trace.mu[:-1], m), trace.mu[-1:]])
    trace.coupling_dense = np.concatenate([np.repeat(trace.coupling[:-1], m), trace.coupling[-1:]])


def long_run_error(trace: SimulationTrace, tail: float = 0.25) -> float:
    err = sync_error(trace)
    if len(err) == 0:
        return math.nan
    start = int(len(err) * (1.0 - tail))
    return float(err[start:].max())


def seeded_initial_state(sys: SystemMatrices, frame: EpsNormFrame, cert: Certificate, mu: float,
                         fraction: float, seed: int, consensus: float = 0.5) -> np.ndarray:
    """Reproducible pseudo-random state with reduced eps-norm ``fraction * S1_radius * mu``.

    The network average has amplitude ``consensus * xi_bar * mu * M``.
    Because the coupling quantizes absolute velocities, a nonzero average
    eventually saturates a shrinking quantizer range.
    """
    rng = np.random.default_rng(seed)
    n = sys.n
    amp = consensus * cert.xi_bar * mu * cert.M
    phase = rng.uniform(0.0, 2.0 * math.pi)
    gamma0, nu0 = amp * math.cos(phase) / sys.omega, amp * math.sin(phase)
    w = rng.standard_normal(2 * n)
    hat = sys.P_dag2 @ w
    hat *= fraction * cert.S1_radius * mu / frame.vector_norm(hat)
    X0 = (sys.P_hat2 @ hat).real
    X0[:n] += gamma0
    X0[n:] += nu0
    radius = frame.vector_norm(sys.disagreement(X0, gamma0, nu0))
    if radius > cert.S1_radius * mu * (1 + 1e-9):
        raise AssertionError(f"seeded state has eps-norm {radius} outside S1 (radius {cert.S1_radius * mu})")
    return X0


@dataclass(frozen=True)
class Prepared:
    """Everything a run needs that does not depend on the trajectory."""

    config: ScenarioConfig
    sys: SystemMatrices
    xi: np.ndarray
    feasible: bool | None
    frame: EpsNormFrame | None
    certificate: Certificate | None
    X0: np.ndarray


def prepare(config: ScenarioConfig, graph=None) -> Prepared:
    g = graph if graph is not None else read_graph(config.graph)
    L = build_laplacian(g)
    n = g.n
    if n >= 2 and not is_strongly_connected(g):
        raise SpectrumError("communication graph is not strongly connected")
    sys = system_matrices(config.omega, config.tau, L, analyze=n >= 2)
    feasible = frame = cert = None
    xi = np.ones(1)
    if sys.spectrum is not None:
        xi = sys.spectrum.xi
        feasible = feasible_windows(sys.spectrum, config.omega).is_feasible(config.tau)
        if not feasible and not config.allow_infeasible:
            raise InfeasibleSamplingError(
                f"tau={config.tau} lies outside every feasibility window; set allow_infeasible to study it"
            )
        if feasible:
            frame = build_eps_frame(sys, config.eps_norm, config.frame)
            cert = certificate(sys, frame, config.Delta, config.M, config.eps_slack, strict=False)

    if config.initial_mode == "explicit":
        if len(config.r0) != n:
            raise ValueError(f"initial.r has {len(config.r0)} entries but the graph has {n} nodes")
        X0 = np.concatenate([config.r0, config.v0]).astype(float)
    elif config.initial_mode == "gaussian" or n == 1:
        X0 = np.random.default_rng(config.seed).normal(scale=config.initial_scale, size=2 * n)
    else:
        if cert is None:
            raise CertificateError("initial.mode = s1 needs a feasible sampling period; use explicit or gaussian")
        X0 = seeded_initial_state(sys, frame, cert, config.mu, config.initial_fraction, config.seed,
                                  config.initial_consensus)
    if cert is not None:
        check_consensus_amplitude(config.omega, float(xi @ X0[:n]), float(xi @ X0[n:]),
                                  cert.xi_bar, config.mu, config.M)
    return Prepared(config, sys, xi, feasible, frame, cert, X0)


def make_schedule(prep: Prepared) -> tuple[UniformQuantizer, ZoomSchedule]:
    c = prep.config
    q = UniformQuantizer(c.Delta, c.M)
    if c.zoom_mode == ZoomSchedule.FIXED:
        return q, ZoomSchedule(q, ZoomSchedule.FIXED, mu=c.mu, tau=c.tau)
    cert = prep.certificate
    certified = cert is not None and cert.valid
    theta = c.theta if c.theta is not None else (cert.theta if certified else None)
    dwell = c.dwell if c.dwell is not None else (cert.T_steps if certified else None)
    if theta is None or dwell is None:
        why = "; ".join(cert.issues) if cert is not None else "no certificate for an infeasible sampling period"
        raise CertificateError(f"no certified zoom-in schedule ({why}); set zoom.theta and zoom.dwell to override")
    return q, ZoomSchedule(q, ZoomSchedule.ADJUSTABLE, theta=theta, T_steps=dwell, tau=c.tau)


def simulate(config: ScenarioConfig, backend=None, graph=None) -> SimulationTrace:
    """Run a validated scenario; deterministic for a fixed config."""
    prep = prepare(config, graph)
    q, schedule = make_schedule(prep)
    trace = run_closed_loop(prep.sys, q, schedule, prep.X0, config.n_steps, xi=prep.xi,
                            dense=config.dense, backend=backend)
    trace.feasible = prep.feasible
    trace.certificate = prep.certificate
    trace.frame = prep.frame
    return trace


def _sweep_point(args):
    config, tau, mu, Delta = args
    row = {"tau": tau, "mu": mu, "Delta": Delta}
    try:
        # horizon is rounded to the nearest whole number of samples at this tau
        c = replace(config, tau=tau, mu=mu, Delta=Delta, horizon=round(config.horizon / tau) * tau)
        c = parse_scenario(emit_scenario(c))
        trace = simulate(c)
    except (ValueError, ArithmeticError) as exc:
        row.update(status="error", message=str(exc))
        return row
    cert = trace.certificate
    row.update(
        status="ok",
        feasible=trace.feasible,
        rho=cert.rho if cert else math.nan,
        certified=bool(cert and cert.valid),
        M_threshold=cert.M_threshold if cert else math.nan,
        saturated=bool(trace.saturated.any()),
        long_run_error=long_run_error(trace),
        message="",
    )
    return row


def sweep(config: ScenarioConfig, taus, mus, deltas, jobs: int = 1) -> list[dict]:
    """Grid of runs over ``tau x mu x Delta``; each run is independent."""
    points = [(config, float(t), float(m), float(d)) for t in taus for m in mus for d in deltas]
    if jobs <= 1:
        return [_sweep_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, points))
