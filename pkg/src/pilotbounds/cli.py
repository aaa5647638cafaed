"""Command-line front end: bound sweeps to CSV and verification suites.

    pilotbounds sweep --pilot-mode SepOptimal --snr-db 0,6,12 --out bounds.csv
    pilotbounds verify --suite all --seed 1 --out report.txt

Exit codes: 0 success, 1 failed verification check, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, estimator, montecarlo
from .bounds import BoundKind, ChannelConfig
from .psd import FadingPsd, PsdKind, circulant_equivalent, toeplitz_correlation, weak_norm_gap

CSV_HEADER = ["fd", "snr_db", "L", "metric", "value_bits_per_use"]
PILOT_MODES = ("FixedL", "SepOptimal", "JointOptimal")
SUITES = ("spectra", "szego", "concavity", "all")


class UsageError(Exception):
    pass


def fmt(x):
    return f"{x:.9g}"


# configuration ---------------------------------------------------------------

@dataclass
class SweepSpec:
    psd_kind: PsdKind = PsdKind.RECTANGULAR
    rolloff: float = 0.5
    fd_min: float = 1e-3
    fd_max: float = 0.25
    fd_points: int = 40
    fd_spacing: str = "log"
    fd_values: tuple | None = None
    snr_db_list: tuple = (0.0, 6.0, 12.0)
    metrics: tuple = (BoundKind.SEP_LOWER, BoundKind.SEP_UPPER, BoundKind.JOINT_LOWER)
    pilot_mode: str = "SepOptimal"
    L: int | None = None
    out_path: str = "-"
    seed: int = 0

    def fd_grid(self):
        if self.fd_values is not None:
            return np.asarray(self.fd_values, dtype=float)
        if self.fd_spacing == "log":
            return np.geomspace(self.fd_min, self.fd_max, self.fd_points)
        return np.linspace(self.fd_min, self.fd_max, self.fd_points)


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _metrics(text):
    out = []
    for name in text.split(","):
        name = name.strip()
        if name:
            out.append(BoundKind(name))
    return tuple(out)


# key -> (SweepSpec field, converter)
_KEYS = {
    "psd": ("psd_kind", PsdKind),
    "rolloff": ("rolloff", float),
    "fd": ("fd_values", _floats),
    "fd_min": ("fd_min", float),
    "fd_max": ("fd_max", float),
    "fd_points": ("fd_points", int),
    "fd_spacing": ("fd_spacing", str),
    "snr_db": ("snr_db_list", _floats),
    "metrics": ("metrics", _metrics),
    "pilot_mode": ("pilot_mode", str),
    "L": ("L", int),
    "out": ("out_path", str),
    "seed": ("seed", int),
}


class ConfigError(UsageError):
    def __init__(self, msg, lineno=None):
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)
        self.lineno = lineno


def read_config(path):
    """Parse ``key = value`` lines into {key: (raw_value, lineno)}."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"malformed line {raw!r} (expected key = value)", lineno)
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first set on line {entries[key][1]})", lineno)
        entries[key] = (value, lineno)
    return entries


def build_spec(entries):
    """Turn {key: (raw, lineno)} into a validated SweepSpec."""
    spec = SweepSpec()
    where = {}
    for key, (raw, lineno) in entries.items():
        attr, conv = _KEYS[key]
        try:
            setattr(spec, attr, conv(raw) if isinstance(raw, str) else raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        where[attr] = lineno

    def bad(attr, msg):
        raise ConfigError(msg, where.get(attr))

    if spec.fd_values is not None:
        if not spec.fd_values:
            bad("fd_values", "fd list is empty")
        for v in spec.fd_values:
            if not 0 < v < 0.5:
                bad("fd_values", f"fd = {v} outside (0, 0.5)")
    for attr in ("fd_min", "fd_max"):
        if not 0 < getattr(spec, attr) < 0.5:
            bad(attr, f"{attr} = {getattr(spec, attr)} outside (0, 0.5)")
    if spec.fd_min >= spec.fd_max and spec.fd_values is None:
        bad("fd_max", "fd_max must exceed fd_min")
    if spec.fd_points < 2:
        bad("fd_points", "fd_points must be >= 2")
    if spec.fd_spacing not in ("log", "linear"):
        bad("fd_spacing", f"fd_spacing must be log or linear, got {spec.fd_spacing!r}")
    if not spec.snr_db_list:
        bad("snr_db_list", "no SNR values given")
    if not spec.metrics:
        bad("metrics", "metrics must be nonempty")
    if spec.pilot_mode not in PILOT_MODES:
        bad("pilot_mode", f"pilot_mode must be one of {', '.join(PILOT_MODES)}")
    if spec.pilot_mode == "FixedL" and (spec.L is None or spec.L < 1):
        bad("L", "FixedL pilot mode needs a positive L")
    iid = {BoundKind.IID_PG_LOWER, BoundKind.IID_PG_UPPER}
    if spec.psd_kind is not PsdKind.RECTANGULAR and iid & set(spec.metrics):
        bad("metrics", "i.i.d. Gaussian-input bounds are defined for the rectangular spectrum only")
    if spec.psd_kind is PsdKind.RAISED_COSINE and not 0 < spec.rolloff <= 1:
        bad("rolloff", "rolloff must lie in (0, 1]")
    return spec


def parse_config(path, overrides=None):
    entries = read_config(path) if path else {}
    for key, value in (overrides or {}).items():
        entries[key] = (value, None)
    return build_spec(entries)


# sweep -----------------------------------------------------------------------

def _psd(spec, fd):
    if spec.psd_kind is PsdKind.RECTANGULAR:
        return FadingPsd.rectangular(fd)
    return FadingPsd.raised_cosine(fd, spec.rolloff)


def _spacing(spec, psd, rho):
    if spec.pilot_mode == "JointOptimal":
        return bounds.max_pilot_spacing(psd.f_d)
    if spec.pilot_mode == "SepOptimal":
        return bounds.sep_optimal_spacing(psd, rho)
    return spec.L


def _metric_value(kind, cfg):
    if kind is BoundKind.SEP_LOWER:
        return bounds.sep_lower(cfg).value
    if kind is BoundKind.SEP_UPPER:
        return bounds.sep_upper(cfg).value
    if kind is BoundKind.JOINT_LOWER:
        return bounds.joint_lower(cfg).value
    if kind is BoundKind.IID_PG_LOWER:
        return bounds.iid_pg_lower(cfg.rho, cfg.psd.f_d).value
    if kind is BoundKind.IID_PG_UPPER:
        return bounds.iid_pg_upper(cfg.rho, cfg.psd.f_d).value
    return bounds.coherent(cfg).value


def sweep_rows(spec, warn=None):
    """Evaluate the sweep; returns rows sorted by (metric, snr_db, fd)."""
    warn = warn or (lambda msg: print(msg, file=sys.stderr))
    rows = []
    for fd in spec.fd_grid():
        fd = float(fd)
        psd = _psd(spec, fd)
        for snr_db in spec.snr_db_list:
            rho = 10.0 ** (snr_db / 10.0)
            L = _spacing(spec, psd, rho)
            if L > bounds.max_pilot_spacing(fd):
                warn(f"warning: L={L} violates Nyquist at fd={fmt(fd)}, snr_db={fmt(snr_db)}; rows omitted")
                continue
            cfg = ChannelConfig.from_snr(rho, psd, L)
            for kind in spec.metrics:
                value = _metric_value(kind, cfg)
                if not math.isfinite(value):
                    raise ArithmeticError(f"non-finite {kind.value} at fd={fd}, snr_db={snr_db}")
                rows.append((kind.value, float(snr_db), fd, L, value))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return [(fd, snr, L, metric, value) for metric, snr, fd, L, value in rows]


def render_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for fd, snr, L, metric, value in rows:
        w.writerow([fmt(fd), fmt(snr), L, metric, fmt(value)])
    return buf.getvalue()


def _check_writable(path):
    if path == "-":
        return
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK) or (p.exists() and not os.access(p, os.W_OK)):
        raise UsageError(f"cannot write {path}")


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def cmd_sweep(spec):
    _check_writable(spec.out_path)
    rows = sweep_rows(spec)
    _write(spec.out_path, render_csv(rows))
    print(f"wrote {len(rows)} rows to {spec.out_path}", file=sys.stderr)
    return 0


# verification suites ---------------------------------------------------------

Check = montecarlo.Check


@dataclass
class SuiteResult:
    name: str
    lines: list = field(default_factory=list)
    checks: list = field(default_factory=list)


def _tol_check(name, err, tol):
    return Check(name, err <= tol, tol - err)


def suite_spectra(seed, trials=200, tol_scale=1.0):
    res = SuiteResult("spectra")
    rho = 10 ** 0.6
    cfg = ChannelConfig.from_snr(rho, FadingPsd.rectangular(0.05), 8)
    mc = montecarlo.McConfig(cfg, N=2048, trials=trials, seed=seed,
                             var_rel_tol=0.03 * tol_scale, psd_rel_tol=0.05 * tol_scale,
                             szego_rel_tol=0.05 * tol_scale)
    rep = montecarlo.run_pilot_estimation(mc)
    res.lines += [
        "pilot-only LMMSE, rectangular f_d=0.05, L=8, 6 dB, N=2048, "
        f"trials={trials}, seed={seed}",
        f"  interior error variance: empirical {fmt(rep.empirical_error_variance)}, "
        f"analytic {fmt(rep.analytic_error_variance)}",
        f"  full-block error variance: {fmt(rep.full_block_error_variance)}",
        f"  in-band error PSD: empirical {fmt(rep.empirical_inband_psd)}, analytic {fmt(rep.analytic_inband_psd)}",
        f"  logdet gap (N=2048) {fmt(rep.logdet_gap_finite)} nats/symbol vs Szego target {fmt(rep.szego_target)}",
    ]
    res.lines += [f"  event: {e}" for e in rep.events]
    res.checks += rep.checks

    # synthesized fading: per-block variances over independent blocks
    model = cfg.psd
    blocks = np.array([np.mean(np.abs(montecarlo.generate_fading(model, 4096, seed + 10_000 + b)) ** 2)
                       for b in range(25)])
    se = blocks.std(ddof=1) / np.sqrt(len(blocks))
    err = abs(blocks.mean() - model.sigma_h_sq)
    res.lines.append(f"  synthesized fading variance {fmt(blocks.mean())} (se {fmt(se)})")
    res.checks.append(_tol_check("fading_variance", err, 3 * se * tol_scale))
    return res


def szego_gaps(model, rho, L, sizes):
    out = []
    for n in sizes:
        R = toeplitz_correlation(model, n).matrix
        sx = rho / model.sigma_h_sq
        rp = estimator.error_correlation(R, estimator.PowerProfile.pilots(n, L, sx), 1.0)
        rj = estimator.error_correlation(R, estimator.PowerProfile.uniform(n, sx), 1.0)
        out.append(estimator.logdet_rate_gap(rp, rj))
    return out


def monotone_margin(gaps, target, slack):
    """Margin for 'distance to target shrinks with N, one inversion of at most ``slack`` allowed'."""
    dist = [abs(g - target) for g in gaps]
    ups = [dist[i + 1] - dist[i] for i in range(len(dist) - 1)]
    bad = [u for u in ups if u > 0]
    if len(bad) > 1:
        return -sum(bad)
    return slack * abs(target) - (bad[0] if bad else 0.0)


def suite_szego(seed=0, tol_scale=1.0):
    res = SuiteResult("szego")
    model = FadingPsd.raised_cosine(0.1, 0.5)
    rho, L = 10 ** 0.6, 4
    sizes = (128, 256, 512, 1024)
    cfg = ChannelConfig.from_snr(rho, model, L)
    target = bounds.joint_penalty(cfg)
    gaps = szego_gaps(model, rho, L, sizes)
    res.lines.append(f"raised-cosine f_d=0.1, rolloff=0.5, 6 dB, L=4; Szego target {fmt(target)} nats/symbol")
    for n, g in zip(sizes, gaps):
        res.lines.append(f"  N={n}: logdet gap {fmt(g)} (rel. error {fmt(abs(g - target) / target)})")
    res.checks.append(_tol_check("szego_gap_N1024", abs(gaps[-1] - target) / target, 0.05 * tol_scale))
    m = monotone_margin(gaps, target, 0.005 * tol_scale)
    res.checks.append(Check("szego_monotone", m >= 0, m))

    wn = [weak_norm_gap(toeplitz_correlation(model, n).matrix, circulant_equivalent(model, n).matrix)
          for n in (64, 128, 256, 512)]
    res.lines.append("  weak-norm |R_h - C_h| for N=64..512: " + ", ".join(fmt(v) for v in wn))
    steps = [wn[i] - wn[i + 1] for i in range(len(wn) - 1)]
    res.checks.append(Check("weak_norm_decreasing", min(steps) > 0, min(steps)))
    return res


def suite_concavity(seed, probes=1000, batches=500, batch_size=50, tol_scale=1.0):
    res = SuiteResult("concavity")
    model = FadingPsd.raised_cosine(0.1, 0.5)
    sx = 10 ** 0.6
    R64 = toeplitz_correlation(model, 64).matrix
    worst, violations = math.inf, 0
    for i in range(probes):
        rng = montecarlo.trial_rng(seed, i)
        z1 = rng.uniform(0, 2 * sx, 64)
        z2 = rng.uniform(0, 2 * sx, 64)
        theta = rng.uniform()
        rep = estimator.concavity_probe(R64, z1, z2, [theta], 1.0, tol=1e-9 * tol_scale)
        violations += rep.violations
        worst = min(worst, float(rep.margins.min()))
    res.lines.append(f"concavity of log det(R_h Z + I) at N=64: {probes} probes, {violations} violations, "
                     f"smallest margin {fmt(worst)}")
    res.checks.append(Check("concavity_probes", violations == 0, worst + 1e-9 * tol_scale))

    R32 = toeplitz_correlation(model, 32).matrix
    ok, jensen_ok, margins = 0, True, []
    for b in range(batches):
        rng = montecarlo.trial_rng(seed + 1_000_000, b)
        Z = 2 * sx * (rng.uniform(size=(batch_size, 32)) < 0.5)
        rep = estimator.cm_minimality_check(R32, Z, 1.0, sx, expected_z=np.full(32, sx))
        margins.append(rep.cm_margin)
        ok += rep.passed(1e-9 * tol_scale) and rep.cm_margin > 0
        jensen_ok &= rep.jensen_margin >= -1e-9
    frac = ok / batches
    res.lines.append(f"constant-modulus minimality at N=32, two-point powers {{0, 2 sigma_x^2}}, {batch_size} draws per batch: "
                     f"{ok}/{batches} batches with positive margin, median margin {fmt(float(np.median(margins)))}")
    res.checks.append(Check("cm_minimality_batches", frac >= 0.99, frac - 0.99))
    res.checks.append(Check("jensen_all_batches", bool(jensen_ok), 0.0 if jensen_ok else -1.0))
    return res


def run_suite(suite, seed, trials=200, tol_scale=1.0):
    names = ("spectra", "szego", "concavity") if suite == "all" else (suite,)
    out = []
    for name in names:
        if name == "spectra":
            out.append(suite_spectra(seed, trials, tol_scale))
        elif name == "szego":
            out.append(suite_szego(seed, tol_scale))
        else:
            out.append(suite_concavity(seed, tol_scale=tol_scale))
    return out


def render_report(suite, seed, results):
    lines = ["pilotbounds verification report", f"suite: {suite}", f"seed: {seed}", ""]
    for r in results:
        lines.append(f"[{r.name}]")
        lines += r.lines
        for c in r.checks:
            lines.append(f"  {'PASS' if c.passed else 'FAIL'} {c.name} (margin {fmt(c.margin)})")
        lines.append("")
    return "\n".join(lines)


def render_summary(results):
    return "".join(c.line() + "\n" for r in results for c in r.checks)


def summary_path(out_path):
    p = Path(out_path)
    return p.with_name(p.stem + ".summary.csv")


def cmd_verify(suite, seed, out_path, trials=200, tol_scale=1.0):
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}")
    _check_writable(out_path)
    _check_writable(str(summary_path(out_path)))
    results = run_suite(suite, seed, trials, tol_scale)
    summary = render_summary(results)
    _write(out_path, render_report(suite, seed, results))
    _write(str(summary_path(out_path)), summary)
    sys.stdout.write(summary)
    return 0 if all(c.passed for r in results for c in r.checks) else 1


# entry point -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def make_parser():
    p = _Parser(prog="pilotbounds", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="sweep f_d and SNR, write bounds as CSV")
    s.add_argument("--config", help="key = value file; flags override its entries")
    s.add_argument("--psd", choices=[k.value for k in PsdKind])
    s.add_argument("--rolloff", type=float)
    s.add_argument("--fd", help="explicit comma-separated f_d values (replaces the grid)")
    s.add_argument("--fd-min", type=float)
    s.add_argument("--fd-max", type=float)
    s.add_argument("--fd-points", type=int)
    s.add_argument("--fd-log", dest="fd_spacing", action="store_const", const="log")
    s.add_argument("--fd-linear", dest="fd_spacing", action="store_const", const="linear")
    s.add_argument("--snr-db", help="comma-separated SNR values in dB")
    s.add_argument("--metrics", help="comma-separated subset of " + ",".join(k.value for k in BoundKind))
    s.add_argument("--pilot-mode", choices=PILOT_MODES)
    s.add_argument("--L", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="CSV path, '-' for stdout")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--trials", type=int, default=200, help="Monte Carlo trials for the spectra suite")
    v.add_argument("--tol-scale", type=float, default=1.0, help="multiply every check tolerance")
    v.add_argument("--out", default="verify_report.txt")
    return p


_FLAG_KEYS = {
    "psd": "psd", "rolloff": "rolloff", "fd": "fd", "fd_min": "fd_min", "fd_max": "fd_max",
    "fd_points": "fd_points", "fd_spacing": "fd_spacing", "snr_db": "snr_db", "metrics": "metrics",
    "pilot_mode": "pilot_mode", "L": "L", "seed": "seed", "out": "out",
}


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            overrides = {key: getattr(args, attr) for attr, key in _FLAG_KEYS.items()
                         if getattr(args, attr) is not None}
            overrides = {k: (str(v) if not isinstance(v, str) else v) for k, v in overrides.items()}
            return cmd_sweep(parse_config(args.config, overrides))
        return cmd_verify(args.suite, args.seed, args.out, args.trials, args.tol_scale)
    except UsageError as exc:
        print(f"pilotbounds: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
