"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also printed through ``capsys.disabled()`` under plain ``pytest``.
"""
import math
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg as sla

from harmosync.graph import DirectedGraph, build_laplacian, spectral_decomposition
from harmosync.propagation import (
    CertificateError,
    assemble_flow,
    flow_coefficients,
    reduced_map_from_modes,
)
from harmosync.quantizer import UniformQuantizer, quantize
from harmosync.scenario import ScenarioConfig
from harmosync.simulator import (
    free_flow,
    long_run_error,
    prepare,
    reduced_coordinates,
    simulate,
    sync_error,
)
from harmosync.stability import (
    ComplexQuadratic,
    bilinear_stability_check,
    complex_quadratic_is_hurwitz,
    feasible_windows,
    phi_bound,
    spectral_radius_reduced,
)
from harmosync.verify import REFERENCE_ARCCOT, REFERENCE_EIGENVALUES, REFERENCE_PHI, REFERENCE_RHO
from oracles import flow_by_augmentation, random_strong_digraph, roots_inside_unit_disk

OMEGA = math.sqrt(math.pi / 2)
BAND = 1e-9


def report(capsys, number, title, ok, detail, t0):
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail} ({time.perf_counter() - t0:.2f} s)"
    with capsys.disabled():
        print("\n" + line)


def test_criterion_01_mode_bounds(capsys):
    t0 = time.perf_counter()
    worst_phi = worst_acot = 0.0
    for lam, phi, acot in zip(REFERENCE_EIGENVALUES, REFERENCE_PHI, REFERENCE_ARCCOT):
        mb = phi_bound(lam, OMEGA)
        worst_phi = max(worst_phi, abs(mb.phi - phi))
        worst_acot = max(worst_acot, abs(mb.arccot_phi - acot))
    ok = worst_phi <= 1e-3 and worst_acot <= 1e-3
    report(capsys, 1, "per-mode bound table", ok,
           f"max |dphi| = {worst_phi:.2e}, max |darccot| = {worst_acot:.2e} (tol 1e-3)", t0)
    assert ok


def test_criterion_02_spectral_radius(capsys):
    t0 = time.perf_counter()
    rho = spectral_radius_reduced(REFERENCE_EIGENVALUES, OMEGA, 0.1)
    dense = np.abs(np.linalg.eigvals(reduced_map_from_modes(REFERENCE_EIGENVALUES, OMEGA, 0.1))).max()
    ok = abs(rho - REFERENCE_RHO) <= 5e-4 and abs(dense - rho) <= 1e-8
    report(capsys, 2, "spectral radius of the reduced map", ok,
           f"rho = {rho:.6f} vs 0.9747 (tol 5e-4); dense eigensolve differs by {abs(dense - rho):.1e} (tol 1e-8)", t0)
    assert ok


def test_criterion_03_flow_vs_series(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240603)
    worst = 0.0
    for _ in range(100):
        w = rng.uniform(0.2, 5.0)
        tau = rng.uniform(0.0, 2.0)
        while tau == 0.0:
            tau = rng.uniform(0.0, 2.0)
        n = int(rng.integers(2, 7))
        L = build_laplacian(DirectedGraph.from_adjacency(random_strong_digraph(rng, n, 3)))
        expA2, _ = flow_coefficients(w, tau)
        E, F = assemble_flow(w, tau, L)
        eA, F_ref, E_ref = flow_by_augmentation(w, tau, L)
        worst = max(worst, np.abs(np.kron(expA2, np.eye(n)) - eA).max(), np.abs(F - F_ref).max(),
                    np.abs(E - E_ref).max())

    # block of the reduced map vs the matrix whose determinant is the mode quadratic:
    # det [[x - c, -(s/w - lam (1-c)/w^2)], [w s, x - c + lam s/w]]
    block_err = 0.0
    for lam in REFERENCE_EIGENVALUES:
        for w, tau in [(OMEGA, 0.1), (2.3, 0.37), (0.7, 1.9)]:
            c, s = math.cos(w * tau), math.sin(w * tau)
            printed = np.array([[c, s / w - lam * (1 - c) / w**2], [-w * s, c - lam * s / w]])
            block_err = max(block_err, np.abs(reduced_map_from_modes([lam], w, tau) - printed).max())
    ok = worst <= 1e-10 and block_err <= 1e-12
    report(capsys, 3, "closed-form flow vs series oracle", ok,
           f"max flow error {worst:.1e} over 100 draws (tol 1e-10); mode block error {block_err:.1e} (tol 1e-12)", t0)
    assert ok


def test_criterion_04_quantizer_axioms(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    groups, per = 1000, 1000
    bad_inside = bad_outside = 0
    n_inside = n_outside = 0
    for _ in range(groups):
        Delta = 10 ** rng.uniform(-3, 1)
        M = Delta * rng.uniform(1.0 + 1e-6, 200.0)
        mu = 10 ** rng.uniform(-4, 4)
        q = UniformQuantizer(Delta, M)
        # mix of in-range and out-of-range arguments, both signs
        y = mu * M * rng.uniform(-3.0, 3.0, per)
        out = quantize(q, mu, y)
        inside = np.abs(y) <= M * mu
        # slack covers the roundoff of y/mu followed by mu*q
        slack = 4 * np.finfo(float).eps * np.maximum(np.abs(y), Delta * mu)
        bad_inside += int(np.sum(np.abs(out[inside] - y[inside]) > Delta * mu + slack[inside]))
        bad_outside += int(np.sum(np.abs(out[~inside]) <= (M - Delta) * mu))
        n_inside += int(inside.sum())
        n_outside += int((~inside).sum())
    ok = bad_inside == 0 and bad_outside == 0 and n_inside + n_outside == groups * per
    report(capsys, 4, "quantizer axioms", ok,
           f"{n_inside} in-range / {n_outside} out-of-range evaluations, "
           f"violations: error bound {bad_inside}, saturation {bad_outside}", t0)
    assert ok


def test_criterion_05_average_projection(capsys):
    t0 = time.perf_counter()
    tr = simulate(ScenarioConfig(horizon=1000.0))
    n = tr.n
    g, v = tr.orbit(tr.t)
    drift = np.abs(tr.X[:, :n] @ tr.xi - g) + np.abs(tr.X[:, n:] @ tr.xi - v)
    ok = len(tr.t) == 10_001 and n == 10 and drift.max() < 1e-6
    report(capsys, 5, "weighted-average projection follows the reference orbit", ok,
           f"max drift {drift.max():.1e} over {len(tr.t) - 1} samples (tol 1e-6)", t0)
    assert ok


def _fixed_zoom_checks(seed, prep):
    c = replace(prep.config, seed=seed)
    tr = simulate(c)
    sysm, fr, cert = prep.sys, prep.frame, prep.certificate
    norms = fr.vector_norms(reduced_coordinates(tr, sysm))
    S1, S2 = cert.S1_radius, cert.S2_radius
    inside = np.flatnonzero(norms <= S2)
    entry = int(inside[0]) if len(inside) else None
    decreasing = entry is not None and bool(np.all(np.diff(norms[: entry + 1]) < 0))
    k = np.arange(len(norms))
    bound = fr.norm_Ehat**k * norms[0] + fr.c_in * c.Delta * c.mu / (1 - fr.norm_Ehat)
    return dict(
        started_in_S1=norms[0] <= S1 * (1 + 1e-12),
        entry=entry,
        decreasing=decreasing,
        entry_by_T=entry is not None and entry <= cert.T_steps,
        geometric=bool(np.all(norms <= bound * (1 + 1e-9))),
        no_sync=long_run_error(tr) > 1e-6,
        saturated=bool(tr.saturated.any()),
    )


def test_criterion_06_bounded_error_sets(capsys):
    t0 = time.perf_counter()
    config = ScenarioConfig(horizon=200.0, M=10.0, Delta=0.5, tau=0.1, mu=1.0, zoom_mode="fixed",
                            initial_mode="s1", initial_fraction=0.9)
    prep = prepare(config)
    cert = prep.certificate
    runs = [_fixed_zoom_checks(seed, prep) for seed in range(20)]
    traj_ok = all(r["started_in_S1"] and r["decreasing"] and r["entry_by_T"] and r["geometric"] and r["no_sync"]
                  for r in runs)
    entries = sorted({r["entry"] for r in runs})
    ok = cert.valid and traj_ok
    detail = (f"certificate at M=10 is {'valid' if cert.valid else 'INVALID'} "
              f"(threshold {cert.M_threshold:.1f}, theta {cert.theta:.1f}, target/capture radius ratio "
              f"{cert.S2_radius / cert.S1_radius:.1f}); trajectory checks over 20 seeds "
              f"{'hold' if traj_ok else 'fail'} (entry samples {entries}, geometric bound and "
              f"long-run error > 1e-6 in every run), but with the target set containing the capture set "
              f"they are vacuous")
    report(capsys, 6, "bounded-error set behaviour, fixed zoom", ok, detail, t0)
    assert traj_ok
    assert cert.valid, "range M=10 is below the certificate threshold; see the decisions ledger"


def _time_to_sync(tr, tol=1e-6):
    err = sync_error(tr)
    below = np.flatnonzero(err < tol)
    return (int(below[0]) if len(below) else None), err


def test_criterion_07_zooming_convergence(capsys):
    t0 = time.perf_counter()
    config = ScenarioConfig(horizon=400.0, M=10.0, Delta=0.5, tau=0.1, zoom_mode="adjustable",
                            initial_mode="s1", initial_fraction=0.9)
    failure = None
    try:
        simulate(config)
    except CertificateError as exc:
        failure = str(exc)

    # informational: the same network with an uncertified contraction schedule
    info = []
    for cons in (0.5, 0.0):
        c = replace(config, theta=0.5, dwell=100, initial_consensus=cons)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            tr = simulate(c)
        k_sync, err = _time_to_sync(tr)
        mu_ratio = tr.mu[tr.k0::tr.T_steps]
        exact = bool(np.allclose(mu_ratio[1:] / mu_ratio[:-1], 0.5, rtol=1e-12))
        info.append(f"override theta=0.5 dwell=100 consensus={cons}: k0={tr.k0}, "
                    f"mu ratio exact={exact}, final err {err[-1]:.1e}, "
                    f"{'synchronized at k=' + str(k_sync) if k_sync is not None else 'no synchronization'}")
    ok = failure is None
    detail = "no certified contraction at M=10 (" + (failure or "certified") + "); " + "; ".join(info)
    report(capsys, 7, "zooming convergence, adjustable zoom", ok, detail, t0)
    assert ok, "no valid contraction factor at M=10; see the decisions ledger"


def test_criterion_08_hurwitz_and_bilinear(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    coef = rng.uniform(-5, 5, (10_000, 4))
    b = coef[:, 0] + 1j * coef[:, 1]
    c = coef[:, 2] + 1j * coef[:, 3]
    disc = np.sqrt(b * b - 4 * c)
    r1, r2 = (-b + disc) / 2, (-b - disc) / 2
    keep = np.minimum(np.abs(r1.real), np.abs(r2.real)) > BAND
    truth = (r1.real < 0) & (r2.real < 0)
    mism_h = sum(complex_quadratic_is_hurwitz(ComplexQuadratic(*row)) != t
                 for row, t, k in zip(coef, truth, keep) if k)

    lam = rng.uniform(0.05, 10, 10_000) + 1j * rng.uniform(-10, 10, 10_000)
    w = rng.uniform(0.1, 5, 10_000)
    tau = rng.uniform(0.001, 10, 10_000)
    mism_b = checked_b = 0
    for l, ww, tt in zip(lam, w, tau):
        s, co = math.sin(ww * tt), math.cos(ww * tt)
        if abs(s) < 1e-6:
            continue
        g = s * l / ww
        coeffs = [1, g - 2 * co, 1 - g]
        if abs(np.abs(np.roots(coeffs)).max() - 1) <= BAND:
            continue
        checked_b += 1
        mism_b += bilinear_stability_check(complex(l), float(ww), float(tt)) != roots_inside_unit_disk(coeffs)
    ok = mism_h == 0 and mism_b == 0
    report(capsys, 8, "Hurwitz test and bilinear check vs root oracles", ok,
           f"{int(keep.sum())} quadratics, {mism_h} disagreements; {checked_b} mode triples, "
           f"{mism_b} disagreements (band {BAND:g})", t0)
    assert ok


def _undirected(n, pairs):
    edges = []
    for i, j in pairs:
        edges += [(i, j, 1.0), (j, i, 1.0)]
    return DirectedGraph(n, tuple(edges))


UNDIRECTED = {
    "P3": _undirected(3, [(0, 1), (1, 2)]),
    "C4": _undirected(4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
    "K4": _undirected(4, [(i, j) for i in range(4) for j in range(i + 1, 4)]),
}


def test_criterion_09_undirected_windows(capsys):
    t0 = time.perf_counter()
    period = 2 * math.pi / OMEGA
    taus = np.linspace(0.0, 2 * period, 1002)[1:-1]
    parts, ok = [], True
    for name, g in UNDIRECTED.items():
        lams = spectral_decomposition(build_laplacian(g)).lambdas
        assert np.abs(np.imag(lams)).max() < 1e-12
        rep = feasible_windows(lams, OMEGA, k_max=1)
        lam_max = float(np.max(np.real(lams)))
        edge = 2 * math.atan2(OMEGA, lam_max) / OMEGA
        edge_err = max(abs(hi - lo - edge) for lo, hi in rep.windows)
        mism = checked = 0
        for tau in taus:
            cot = 1 / math.tan(OMEGA * tau / 2)
            margin = min(abs(cot - l.real / OMEGA) for l in lams)
            if margin <= BAND:
                continue
            checked += 1
            direct = all(cot > l.real / OMEGA for l in lams)
            by_windows = rep.window_index(tau) is not None
            mism += direct != by_windows
        ok &= edge_err <= 1e-9 and mism == 0
        parts.append(f"{name}: edge error {edge_err:.1e}, {mism}/{checked} mismatches")
    report(capsys, 9, "undirected windows vs cot(omega tau/2) > lambda/omega", ok, "; ".join(parts), t0)
    assert ok


def test_criterion_10_energy(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    X0 = rng.standard_normal(20)
    X = free_flow(OMEGA, X0, 0.1, 10_000)
    V = X[:, :10] ** 2 + X[:, 10:] ** 2 / OMEGA**2
    drift = (np.abs(V - V[0]) / V[0]).max()
    ok = X.shape == (10_001, 20) and drift < 1e-10
    report(capsys, 10, "energy invariant without input", ok, f"max relative drift {drift:.1e} (tol 1e-10)", t0)
    assert ok
