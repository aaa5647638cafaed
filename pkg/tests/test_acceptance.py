"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
Expected numbers come from tests/oracles.py, never from the code under test.
"""

import math
import time

import numpy as np

import oracles
from pilotbounds import cli
from pilotbounds.bounds import (
    BoundKind,
    ChannelConfig,
    joint_lower,
    joint_lower_rect,
    joint_penalty,
    max_pilot_spacing,
    optimal_pilot_spacing,
    pilot_error_variance,
)
from pilotbounds.montecarlo import McConfig, run_pilot_estimation
from pilotbounds.psd import FadingPsd
from pilotbounds.quadrature import coherent_capacity

RESULTS = []


def report(n, title, ok, detail, elapsed, budget):
    within = budget is None or elapsed < budget
    line = f"criterion {n:>2} {'PASS' if ok and within else 'FAIL'}  {title}: {detail}"
    if budget is not None:
        line += f" [{elapsed:.2f} s of {budget:g} s]"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert within, line


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def default_fd_grid():
    return np.geomspace(1e-3, 0.25, 40)


def test_c01_coherent_capacity_oracle():
    with Timer() as t:
        rho = np.geomspace(1e-3, 1e3, 64)
        errs = [abs(coherent_capacity(r) / oracles.coherent_bits(r) - 1) for r in rho]
    worst = max(errs)
    report(1, "coherent capacity vs e^(1/rho) E1(1/rho)", worst <= 1e-9,
           f"max rel err {worst:.2e} (tol 1e-9, 64 points)", t.elapsed, 1.0)


def test_c02_closed_form_vs_quadrature():
    with Timer() as t:
        worst_var = 0.0
        for rho in (0.5, 10 ** 0.6, 20.0):
            for f_d in (0.01, 0.05, 0.12):
                for L in (1, 2, 4):
                    cfg = ChannelConfig.from_snr(rho, FadingPsd.rectangular(f_d), L)
                    ref = oracles.rect_pilot_error_variance(rho, f_d, L)
                    worst_var = max(worst_var, abs(pilot_error_variance(cfg) / ref - 1))
        rng = np.random.default_rng(20)
        worst_joint = 0.0
        for _ in range(20):
            rho = 10 ** rng.uniform(-1, 2)
            f_d = 10 ** rng.uniform(-3, math.log10(0.45))
            L = int(rng.integers(2, max_pilot_spacing(f_d) + 1)) if max_pilot_spacing(f_d) > 1 else 1
            a = joint_lower_rect(rho, f_d, L).value
            b = joint_lower(ChannelConfig.from_snr(rho, FadingPsd.rectangular(f_d), L)).value
            worst_joint = max(worst_joint, abs(b / a - 1))
    ok = worst_var <= 1e-9 and worst_joint <= 1e-9
    report(2, "closed form vs quadrature", ok,
           f"error variance max rel {worst_var:.2e}, joint bound max rel {worst_joint:.2e} (tol 1e-9)",
           t.elapsed, 5.0)


def test_c03_optimal_spacing():
    with Timer() as t:
        mismatches, factors = [], []
        for db in (0, 6, 12):
            rho = 10 ** (db / 10)
            c = oracles.exp_log_moment(rho)
            factors.append(c * rho / (rho - c))
            for f_d in (0.005, 0.01, 0.02, 0.05):
                Lmax = math.floor(1 / (2 * f_d) + 1e-9)
                vals = [joint_lower_rect(rho, f_d, L).value for L in range(1, Lmax + 1)]
                best = int(np.argmax(vals)) + 1
                if best != Lmax or optimal_pilot_spacing(rho, f_d)[0] != Lmax:
                    mismatches.append((db, f_d, best))
    ok = not mismatches and min(factors) > 1
    report(3, "brute-force optimal pilot spacing", ok,
           f"{12 - len(mismatches)}/12 argmax = floor(1/(2 f_d)); min stationary factor {min(factors):.4f}",
           t.elapsed, 5.0)


def test_c04_monte_carlo_spectrum():
    rho = 10 ** 0.6
    target = oracles.rect_pilot_error_variance(rho, 0.05, 8)
    with Timer() as t:
        cfg = ChannelConfig.from_snr(rho, FadingPsd.rectangular(0.05), 8)
        rep = run_pilot_estimation(McConfig(cfg, N=2048, trials=200, seed=1))
    var_err = abs(rep.empirical_error_variance / target - 1)
    psd_err = abs(rep.empirical_inband_psd / rep.analytic_inband_psd - 1)
    ok = var_err <= 0.03 and psd_err <= 0.05
    report(4, "Monte Carlo error statistics", ok,
           f"variance {rep.empirical_error_variance:.5f} vs {target:.5f} (rel {var_err:.3f}, tol 0.03); "
           f"in-band PSD rel {psd_err:.3f} (tol 0.05)", t.elapsed, 60.0)


def test_c05_szego_convergence():
    model = FadingPsd.raised_cosine(0.1, 0.5)
    rho = 10 ** 0.6
    with Timer() as t:
        target = joint_penalty(ChannelConfig.from_snr(rho, model, 4))
        gaps = cli.szego_gaps(model, rho, 4, (128, 256, 512, 1024))
    rel = [abs(g / target - 1) for g in gaps]
    mono = cli.monotone_margin(gaps, target, 0.005)
    ok = rel[-1] <= 0.05 and mono >= 0
    report(5, "Szego convergence of the log-det gap", ok,
           "rel err " + ", ".join(f"{r:.4f}" for r in rel) + f" at N=128..1024; monotone margin {mono:.2e}",
           t.elapsed, 120.0)


def test_c06_concavity_and_cm():
    with Timer() as t:
        res = cli.suite_concavity(seed=1)
    checks = {c.name: c for c in res.checks}
    ok = checks["concavity_probes"].passed and checks["cm_minimality_batches"].passed
    report(6, "concavity probes and CM minimality", ok,
           "; ".join(f"{c.name} {'pass' if c.passed else 'fail'} ({c.margin:.3g})" for c in res.checks),
           t.elapsed, 60.0)


def _sweep(mode, metrics, snrs=(0.0, 6.0, 12.0)):
    spec = cli.SweepSpec(snr_db_list=snrs, metrics=tuple(BoundKind(m) for m in metrics), pilot_mode=mode)
    return cli.sweep_rows(spec)


def _table(rows):
    return {(m, snr, fd): v for fd, snr, L, m, v in rows}


def test_c07_bound_ordering():
    with Timer() as t:
        sep_tab = _table(_sweep("SepOptimal", ["SepLower", "SepUpper", "JointLower", "Coherent"]))
        joint_tab = _table(_sweep("JointOptimal", ["JointLower", "IidPgLower", "IidPgUpper", "Coherent"]))
    bad = []
    for tab in (sep_tab, joint_tab):
        for (m, snr, fd), v in tab.items():
            if not math.isfinite(v) or v > tab[("Coherent", snr, fd)] + 1e-9:
                bad.append((m, snr, fd))
    for (m, snr, fd), v in sep_tab.items():
        if m == "SepUpper" and v < sep_tab[("SepLower", snr, fd)]:
            bad.append((m, snr, fd))
    for (m, snr, fd), v in joint_tab.items():
        if m == "IidPgUpper" and v < joint_tab[("IidPgLower", snr, fd)]:
            bad.append((m, snr, fd))
    n = len(sep_tab) + len(joint_tab)
    report(7, "bound ordering on the default sweep grids", not bad,
           f"{n} values, {len(bad)} violations", t.elapsed, 10.0)


def test_c08_joint_separate_crossover():
    with Timer() as t:
        tab = _table(_sweep("SepOptimal", ["SepLower", "SepUpper", "JointLower"], snrs=(6.0,)))
    fds = default_fd_grid()
    diff = np.array([tab[("JointLower", 6.0, fd)] - tab[("SepLower", 6.0, fd)] for fd in fds])
    small = tab[("JointLower", 6.0, fds[0])] > tab[("SepUpper", 6.0, fds[0])]
    large = diff[-1] < 0
    changes = int(np.sum(np.sign(diff[1:]) != np.sign(diff[:-1])))
    ok = small and large and changes >= 1
    cross = fds[int(np.argmax(diff < 0))]
    report(8, "joint vs separate crossover at 6 dB", ok,
           f"JointLower > SepUpper at f_d=1e-3: {small}; below SepLower at 0.25: {large}; "
           f"{changes} sign change(s), first near f_d={cross:.3g}", t.elapsed, 10.0)


def test_c09_spacing_comparison():
    with Timer() as t:
        opt = _table(_sweep("JointOptimal", ["JointLower"]))
        sep = _table(_sweep("SepOptimal", ["JointLower"]))
    worst = min(opt[k] - sep[k] for k in opt)
    report(9, "joint bound: joint-optimal vs sep-optimal spacing", worst >= 0,
           f"min difference {worst:.3g} bits over {len(opt)} points", t.elapsed, 10.0)


def test_c10_determinism(tmp_path):
    with Timer() as t:
        outs = []
        for i in range(2):
            csv_path = tmp_path / f"s{i}.csv"
            rep_path = tmp_path / f"r{i}.txt"
            assert cli.main(["sweep", "--pilot-mode", "SepOptimal", "--psd", "raised-cosine",
                             "--fd-points", "12", "--out", str(csv_path)]) == 0
            assert cli.main(["verify", "--suite", "all", "--seed", "7", "--trials", "20",
                             "--out", str(rep_path)]) in (0, 1)
            outs.append((csv_path.read_bytes(), rep_path.read_bytes(),
                         cli.summary_path(rep_path).read_bytes()))
    same = outs[0] == outs[1]
    report(10, "byte-identical sweep and verify outputs", same,
           "CSV, report and summary identical across two runs" if same else "outputs differ",
           t.elapsed, None)
