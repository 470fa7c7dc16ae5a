"""Reproducible experiment runner.

One subcommand per experiment family; every run is a pure function of its
flags (seeds included), emits one CSV/JSON table plus a manifest, and can
gate on its own verdict column with --check.

Exit codes: 0 success, 2 configuration error, 3 precondition violation,
4 check failure (only with --check).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import barrier, chaos, numbermodels, partitions, report, series
from .errors import PreconditionError
from .rng import GaussianStream, Seed, split

MOMENT_COLUMNS = ["N", "q", "samples", "mean", "std_error", "compensated", "seed"]
DEFAULT_BAND = (0.2, 5.0)


def _parse_grid(text, cast=float):
    return [cast(part) for part in text.split(",") if part]


def _seed(args) -> Seed:
    return Seed(args.seed)


def _require(args, *names):
    # required values may come from flags or a config file, so they are
    # validated here rather than by argparse
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ValueError("missing required option(s): "
                         + ", ".join(f"--{n}" for n in missing))


def cmd_sample(args):
    _require(args, "N")
    stream = GaussianStream(_seed(args))
    draw = chaos.sample_A(args.N, args.K if args.K else float(args.N), stream,
                          engine=args.engine)
    rows = [(n, float(draw.coeffs.coeffs[n].real), float(draw.coeffs.coeffs[n].imag))
            for n in range(args.N + 1)]
    return ["n", "re", "im"], rows, []


def cmd_moment(args):
    _require(args, "N")
    est = chaos.estimate_moment(args.N, args.q, args.samples, _seed(args),
                                workers=args.workers, engine=args.engine)
    comp = est.mean * chaos.theorem_band_factor(args.N, args.q)
    rows = [(args.N, args.q, est.samples, est.mean, est.std_error, comp, str(est.seed))]
    # reference constant for lower-bound comparisons: E|Z|^{2q} of a unit
    # complex Gaussian; lands in the manifest next to the run config
    args._derived = {"gaussian_abs_moment_cq": chaos.gaussian_abs_moment(args.q)}
    checks = []
    if args.q == 1.0:
        checks.append(("second_moment_within_4se",
                       abs(est.mean - 1.0) <= 4.0 * est.std_error))
    return MOMENT_COLUMNS, rows, checks


def cmd_decay(args):
    grid = _parse_grid(args.n_grid, int)
    counts = _parse_grid(args.samples_per, int)
    rows_data, _ = chaos.fit_decay_band(grid, counts, _seed(args),
                                        workers=args.workers, engine=args.engine)
    rows = [(row.N, 0.5, row.samples, row.mean, row.std_error, row.compensated,
             str(row.seed)) for row in rows_data]
    checks = []
    for prev, cur in zip(rows_data, rows_data[1:]):
        slack = 2.0 * math.hypot(prev.std_error, cur.std_error)
        checks.append((f"monotone_{prev.N}_to_{cur.N}", cur.mean <= prev.mean + slack))
    comps = [row.compensated for row in rows_data if row.N >= args.band_from]
    if comps:
        checks.append(("compensated_band", max(comps) / min(comps) <= args.band_max))
    return MOMENT_COLUMNS, rows, checks


def cmd_mass(args):
    rows, checks = [], []
    for n in range(1, args.N_max + 1):
        mass = partitions.exact_total_mass(n)
        rows.append((n, partitions.partition_count(n), mass))
        checks.append((f"mass_{n}", mass == 1))
    return ["N", "partitions", "total_mass"], rows, checks


def cmd_ballot(args):
    a_grid = _parse_grid(args.a_grid)
    n_grid = _parse_grid(args.n_grid, int)
    rows, checks = [], []
    root = _seed(args)
    for j, n in enumerate(n_grid):
        per_n = []
        for i, a in enumerate(a_grid):
            spec = barrier.BarrierSpec(height=a, n_max=n)
            est = barrier.ballot_probability_mc(
                spec, [args.variance] * n, args.samples,
                split(root, j * len(a_grid) + i), workers=args.workers)
            ratio = est.mean / barrier.ballot_scale(a, n)
            in_band = args.band_lo <= ratio <= args.band_hi
            rows.append((a, n, est.samples, est.mean, est.std_error, ratio,
                         args.band_lo, args.band_hi, in_band))
            checks.append((f"band_a{a}_n{n}", in_band))
            per_n.append(est.mean)
        monotone = all(x <= y for x, y in zip(per_n, per_n[1:]))
        checks.append((f"monotone_in_a_n{n}", monotone))
    return ["a", "n", "samples", "p_hat", "std_error", "ratio", "band_lo",
            "band_hi", "in_band"], rows, checks


def cmd_event(args):
    _require(args, "K", "r")
    heights = _parse_grid(args.A)
    rows = []
    if args.all_angles:
        if args.kind != "G":
            raise PreconditionError("--all-angles is defined for the upper event only")
        for i, a in enumerate(heights):
            est = barrier.event_G_all_angles_mc(args.K, args.r, a, args.samples,
                                                split(_seed(args), i),
                                                workers=args.workers)
            rows.append((args.kind + "-grid", args.K, args.r, args.theta, a,
                         est.samples, est.mean, est.std_error))
    else:
        ests = barrier.event_probability_mc(args.kind, args.K, args.r, heights,
                                            args.theta, args.samples, _seed(args),
                                            workers=args.workers)
        for a, est in zip(heights, ests):
            rows.append((args.kind, args.K, args.r, args.theta, a, est.samples,
                         est.mean, est.std_error))
    return ["kind", "K", "r", "theta", "A", "samples", "p_hat", "std_error"], rows, []


def cmd_com_check(args):
    left, right = barrier.change_of_measure_check(
        args.K, args.r, args.A, args.samples_left, args.samples_right,
        _seed(args), workers=args.workers)
    combined = math.hypot(left.std_error, right.std_error)
    ok = abs(left.mean - right.mean) <= 5.0 * combined
    rows = [(args.K, args.r, args.A, left.samples, right.samples, left.mean,
             left.std_error, right.mean, right.std_error, combined, ok)]
    return ["K", "r", "A", "samples_left", "samples_right", "left_mean", "left_se",
            "right_mean", "right_se", "combined_se", "agree_5se"], rows, \
        [("change_of_measure_5se", ok)]


def cmd_blocks(args):
    _require(args, "r", "theta")
    blocks = barrier.block_stats(args.r, args.theta, args.K, m_max=args.m_max)
    rows, checks = [], []
    tol = 1e-12
    for m in range(1, blocks.m_max + 1):
        sigma2 = float(blocks.sigma2[m - 1])
        rho = float(blocks.rho[m - 1])
        cov = blocks.covariance(m)
        bound = blocks.covariance_bound(m)
        lo, hi = blocks.variance_bounds(m)
        in_horizon = math.e**m <= blocks.K_r
        sigma_ok = (not in_horizon) or (lo - tol <= sigma2 <= hi + tol)
        cov_ok = abs(cov) <= bound + tol
        rows.append((m, int(blocks.lo[m - 1]), int(blocks.hi[m - 1]), sigma2, rho,
                     cov, bound, in_horizon, sigma_ok, cov_ok))
        if in_horizon:
            checks.append((f"variance_range_m{m}", sigma_ok))
        checks.append((f"covariance_bound_m{m}", cov_ok))
    return ["m", "k_lo", "k_hi", "sigma2", "rho", "cov", "cov_bound", "in_horizon",
            "sigma2_ok", "cov_ok"], rows, checks


def cmd_bivariate(args):
    rng = np.random.Generator(np.random.Philox(key=np.array([args.seed, 0],
                                                            dtype=np.uint64)))
    rows, checks = [], []
    for rho in _parse_grid(args.rho_grid):
        params = barrier.BivariateParams(args.mu1, args.mu2, args.sigma1**2,
                                         args.sigma2**2, rho)
        side = int(math.isqrt(args.grid_points))
        x1 = args.mu1 + args.span * args.sigma1 * (2.0 * rng.random(side * side) - 1.0)
        x2 = args.mu2 + args.span * args.sigma2 * (2.0 * rng.random(side * side) - 1.0)
        gap = float(np.max(barrier.bivariate_density(params, x1, x2)
                           - barrier.dominating_density(params, x1, x2)))
        grid = np.linspace(-8.0, 8.0, 400)
        xv = args.mu1 + grid * args.sigma1
        yv = args.mu2 + grid * args.sigma2
        xx, yy = np.meshgrid(xv, yv)
        cell = (xv[1] - xv[0]) * (yv[1] - yv[0])
        total = float(np.sum(barrier.bivariate_density(params, xx, yy)) * cell)
        dominated = gap <= 1e-12
        normalized = abs(total - 1.0) <= 1e-6
        rows.append((rho, side * side, gap, total, dominated, normalized))
        checks.append((f"dominated_rho{rho}", dominated))
        checks.append((f"normalized_rho{rho}", normalized))
    return ["rho", "grid_points", "max_density_gap", "integral", "dominated",
            "normalized"], rows, checks


def cmd_steinhaus(args):
    est = numbermodels.steinhaus_abs_moment(args.x, args.power, args.samples,
                                            _seed(args), workers=args.workers)
    target = float(math.floor(args.x)) if args.power == 2.0 else float("nan")
    comp = (est.mean * math.log(math.log(args.x)) ** 0.25 / math.sqrt(args.x)
            if args.power == 1.0 and args.x > math.e else float("nan"))
    rows = [(args.x, args.power, est.samples, est.mean, est.std_error, target,
             comp, str(est.seed))]
    checks = []
    if args.power == 2.0:
        checks.append(("variance_within_4se",
                       abs(est.mean - target) <= 4.0 * est.std_error))
    return ["x", "power", "samples", "mean", "std_error", "target", "compensated",
            "seed"], rows, checks


def cmd_ff(args):
    _require(args, "q")
    rows, checks = [], []
    if args.mode == "counts":
        columns = ["q", "n", "count_mobius", "count_brute", "equal"]
        for n in range(1, args.n_max + 1):
            mobius = numbermodels.count_irreducibles(args.q, n)
            brute = numbermodels.brute_force_irreducible_count(args.q, n)
            rows.append((args.q, n, mobius, brute, mobius == brute))
            checks.append((f"counts_n{n}", mobius == brute))
    elif args.mode == "moment":
        columns = ["q", "N", "samples", "mean", "std_error", "seed"]
        est = numbermodels.ff_second_moment(args.q, args.N, args.samples,
                                            _seed(args), workers=args.workers)
        rows.append((args.q, args.N, est.samples, est.mean, est.std_error,
                     str(est.seed)))
        checks.append(("second_moment_within_4se",
                       abs(est.mean - 1.0) <= 4.0 * est.std_error))
    elif args.mode == "series":
        columns = ["q", "N", "max_err_euler", "max_err_exp", "tol", "ok"]
        model = numbermodels.FFModel(args.q, args.N, _seed(args))
        direct = np.array([model.A(n) for n in range(args.N + 1)])
        err_euler = float(np.max(np.abs(model.euler_product_series(args.N) - direct)))
        err_exp = float(np.max(np.abs(model.gaussian_exp_series(args.N) - direct)))
        ok = max(err_euler, err_exp) <= 1e-9
        rows.append((args.q, args.N, err_euler, err_exp, 1e-9, ok))
        checks.append(("series_identity", ok))
    else:
        raise PreconditionError(f"unknown ff mode {args.mode!r}")
    return columns, rows, checks


def cmd_series_selftest(args):
    rows, checks = [], []
    stream = GaussianStream(_seed(args))
    s = chaos._input_series(stream, args.degree, float(args.degree))
    slow = series.exp_array(s, args.degree, engine="recurrence")
    fast = series.exp_array(s, args.degree, engine="newton")
    err = float(np.max(np.abs(slow - fast)))
    ok = err <= 1e-9
    rows.append(("exp_engines_agree", args.degree, err, 1e-9, ok))
    checks.append(("exp_engines_agree", ok))

    poly = series.ComplexSeries(stream.draw(17))
    r = 0.9
    direct = series.parseval_power_sum(poly, r)
    angles = 2.0 * math.pi * np.arange(4096) / 4096
    values = np.polyval(poly.coeffs[::-1], r * np.exp(1j * angles))
    quad = float(np.mean(np.abs(values) ** 2))
    err = abs(direct - quad) / quad
    ok = err <= 1e-9
    rows.append(("parseval_vs_quadrature", 4096, err, 1e-9, ok))
    checks.append(("parseval_vs_quadrature", ok))
    return ["check", "size", "max_err", "tol", "ok"], rows, checks


def _add_common(parser, samples_default=None):
    parser.add_argument("--seed", type=int, default=42, help="root seed (u64)")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--config", default=None,
                        help="JSON file of option defaults; explicit flags win")
    parser.add_argument("--plot", default=None,
                        help="also write a plain two-column plot file here")
    parser.add_argument("--check", action="store_true",
                        help="exit 4 unless every verdict passes")
    if samples_default is not None:
        parser.add_argument("--samples", type=int, default=samples_default)


class _SubParsers:
    """Records subcommand parsers so config-file defaults can be re-applied."""

    def __init__(self, action):
        self._action = action
        self.by_name = {}

    def add_parser(self, name, **kwargs):
        parser = self._action.add_parser(name, **kwargs)
        self.by_name[name] = parser
        return parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hmchaos",
        description="Experiments on the random power series exp(sum_k X(k) z^k/sqrt(k)) "
                    "and its number-theoretic relatives")
    sub = _SubParsers(parser.add_subparsers(dest="command", required=True))

    p = sub.add_parser("sample", help="emit one draw of the coefficients A(0..N)")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--engine", default="auto")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("moment", help="Monte Carlo estimate of E|A(N)|^{2q}")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--engine", default="auto")
    _add_common(p, samples_default=1000)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("decay", help="first-moment decay table over a grid of N")
    p.add_argument("--n-grid", default="16,32,64,128,256,512,1024,2048,4096,8192")
    p.add_argument("--samples-per",
                   default="20000,16000,12000,8000,5000,3500,2200,1400,800,500")
    p.add_argument("--band-from", type=int, default=64)
    p.add_argument("--band-max", type=float, default=3.0)
    p.add_argument("--engine", default="auto")
    _add_common(p)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("mass", help="exact second-moment mass table (rational)")
    p.add_argument("--N-max", type=int, default=25)
    _add_common(p)
    p.set_defaults(func=cmd_mass)

    p = sub.add_parser("ballot", help="barrier survival probabilities for Gaussian walks")
    p.add_argument("--a-grid", default="1,2,4")
    p.add_argument("--n-grid", default="16,64,256")
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--band-lo", type=float, default=DEFAULT_BAND[0])
    p.add_argument("--band-hi", type=float, default=DEFAULT_BAND[1])
    _add_common(p, samples_default=100000)
    p.set_defaults(func=cmd_ballot)

    p = sub.add_parser("event", help="empirical barrier-event probabilities")
    p.add_argument("--kind", choices=["G", "L"], default="G")
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--A", default="1,2,4", help="comma-separated heights")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--all-angles", action="store_true",
                   help="grid event over ceil(n e^n) angles per checkpoint")
    _add_common(p, samples_default=100000)
    p.set_defaults(func=cmd_event)

    p = sub.add_parser("com-check", help="two-route check of the tilting identity")
    p.add_argument("--K", type=float, default=20.0)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--A", type=float, default=2.0)
    p.add_argument("--samples-left", type=int, default=100000)
    p.add_argument("--samples-right", type=int, default=1000000)
    _add_common(p)
    p.set_defaults(func=cmd_com_check)

    p = sub.add_parser("blocks", help="per-block variance/covariance with bounds")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--K", type=float, default=1e6)
    p.add_argument("--m-max", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser("bivariate", help="correlated-pair density domination checks")
    p.add_argument("--rho-grid", default="0.05,-0.05,0.3,-0.3")
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--grid-points", type=int, default=10000)
    p.add_argument("--span", type=float, default=6.0)
    _add_common(p)
    p.set_defaults(func=cmd_bivariate)

    p = sub.add_parser("steinhaus", help="moments of Steinhaus partial sums")
    p.add_argument("--x", type=float, default=100.0)
    p.add_argument("--power", type=float, default=2.0,
                   help="moment power on |sum| (2 = variance check)")
    _add_common(p, samples_default=10000)
    p.set_defaults(func=cmd_steinhaus)

    p = sub.add_parser("ff", help="function-field model: counts, moments, series")
    p.add_argument("--mode", choices=["counts", "moment", "series"], default="counts")
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--n-max", type=int, default=8)
    _add_common(p, samples_default=2000)
    p.set_defaults(func=cmd_ff)

    p = sub.add_parser("series-selftest", help="exp engine and Parseval cross-checks")
    p.add_argument("--degree", type=int, default=512)
    _add_common(p)
    p.set_defaults(func=cmd_series_selftest)

    return parser, sub.by_name


def _apply_config_file(parser, subparsers, args, argv):
    """Config-file values become defaults; explicit flags keep precedence."""
    import json
    from pathlib import Path

    overrides = json.loads(Path(args.config).read_text())
    known = set(vars(args)) - {"func"}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    subparsers[args.command].set_defaults(**overrides)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config_file(parser, subparsers, args, argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    except (OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        columns, rows, checks = args.func(args)
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    config = {k: v for k, v in vars(args).items() if k not in ("func", "_derived")}
    manifest = report.build_manifest(config)
    manifest["checks"] = {name: bool(ok) for name, ok in checks}
    derived = getattr(args, "_derived", None)
    if derived:
        manifest["derived"] = derived
    report.write_table(args.out, args.format, columns, rows, manifest)
    if args.plot:
        report.write_plot(args.plot, columns, rows)
    if args.check and not all(ok for _, ok in checks):
        failed = [name for name, ok in checks if not ok]
        print(f"checks failed: {', '.join(failed)}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
