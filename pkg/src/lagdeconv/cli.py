"""Command-line interface.

Commands: simulate, deconvolve, bench-table1, norms, smooth.  Everything is
flag-driven and deterministic given --seed.  Exit codes: 0 success, 1 usage
or validation, 2 I/O, 3 numeric failure (singular kernel, non-convergence).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .estimator import Cube, EstimatorConfig, deconvolve
from .io import FileFormatError, read_cube, read_series, write_cube, write_series
from .laguerre import LagCoeffs, TimeGrid, fit_coeffs, smooth_series, tabulate_basis
from .simulate import (
    SimConfig,
    TEST_FUNCTION_IDS,
    add_noise,
    default_kernel,
    eval_test_function,
    forward_convolve,
    run_table1,
    zero_time_slice,
)
from .toeplitz import PowerIterationError, SingularOperatorError, inverse_norms
from .wavelet2d import WaveletSpec, restrict, symmetrize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad flags, per the CLI contract
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    p = _Parser(prog="lagdeconv", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="generate clean q, noisy Y and truth f cubes")
    ps.add_argument("--function", required=True, help="one of f1..f4")
    ps.add_argument("--snr", type=float, required=True)
    ps.add_argument("--seed", type=int, default=1234)
    ps.add_argument("--n", type=int, default=32)
    ps.add_argument("--n1", type=int, default=32)
    ps.add_argument("--n2", type=int, default=32)
    ps.add_argument("--T", type=float, default=5.0)
    ps.add_argument("--out", required=True, help="output path prefix")

    pd = sub.add_parser("deconvolve", help="recover f from an observation cube")
    pd.add_argument("--input", required=True, help="cube stem (JSON+bin)")
    pd.add_argument("--kernel", help="kernel SeriesFile sampled on the cube grid")
    pd.add_argument("--kernel-coeffs",
                    help="CSV of kernel Laguerre coefficients (index, value)")
    pd.add_argument("--out", required=True, help="output stem for the estimate")
    pd.add_argument("--M", default="auto", help="Laguerre order or 'auto'")
    pd.add_argument("--nu", type=float, default=EstimatorConfig().nu)
    pd.add_argument("--eps", default="auto", help="noise intensity or 'auto'")
    pd.add_argument("--no-threshold", action="store_true")
    pd.add_argument("--symmetrize", action="store_true",
                    help="reflect to a periodic dyadic image, crop back after")
    pd.add_argument("--smooth-kernel", action="store_true",
                    help="Laguerre-smooth the kernel samples before use")
    pd.add_argument("--sigma-est", choices=["mad", "std"], default="mad")
    pd.add_argument("--rcond", type=float, default=EstimatorConfig().rcond)
    pd.add_argument("--diagnostics", help="path for the diagnostics JSON")

    pb = sub.add_parser("bench-table1", help="replicate the benchmark table")
    pb.add_argument("--runs", type=int, default=100)
    pb.add_argument("--seed", type=int, default=1234)
    pb.add_argument("--nu", type=float, default=EstimatorConfig().nu)
    pb.add_argument("--out",
                    help="write the CSV here and print an aligned table; "
                         "without it the CSV goes to stdout")

    pn = sub.add_parser("norms", help="tabulate inverse-operator norm growth")
    pn.add_argument("--kernel", required=True, help="kernel SeriesFile")
    pn.add_argument("--max-m", type=int, default=64)
    pn.add_argument("--out", help="CSV path (default: stdout)")

    pm = sub.add_parser("smooth", help="Laguerre-smooth a sampled series")
    pm.add_argument("--input", required=True, help="SeriesFile to smooth")
    pm.add_argument("--M", type=int, default=8)
    pm.add_argument("--out", required=True, help="output SeriesFile")
    return p


def _series_to_grid(t: np.ndarray, values: np.ndarray):
    """Interpret a series as samples on t_k = T k/n, peeling a t=0 row."""
    zero_value = None
    if t[0] == 0.0:
        zero_value = float(values[0])
        t, values = t[1:], values[1:]
    if t.size < 2:
        raise UsageError("series needs at least two positive-time samples")
    # uniform spacing equal to t[0] means t_k = T k/n exactly
    if not np.allclose(np.diff(t), t[0], rtol=1e-8, atol=1e-12):
        raise UsageError("series must be sampled uniformly at t_k = T k/n")
    grid = TimeGrid(n=t.size, T=float(t[-1]))
    return grid, values, zero_value


def _kernel_on_grid(args, grid: TimeGrid):
    """Kernel samples + zero value from --kernel, matched to the cube grid."""
    t, values = read_series(args.kernel)
    zero_value = None
    if t[0] == 0.0:
        zero_value = float(values[0])
        t, values = t[1:], values[1:]
    if t.size != grid.n or not np.allclose(t, grid.points, rtol=1e-9, atol=1e-12):
        raise UsageError("kernel series is not sampled on the cube's time grid")
    return values, zero_value


def _pad_reflect_to(image: np.ndarray, target1: int, target2: int) -> np.ndarray:
    pad1 = target1 - image.shape[0]
    pad2 = target2 - image.shape[1]
    if pad1 < 0 or pad2 < 0:
        raise UsageError("cannot pad to a smaller size")
    if pad2 > 0:
        image = np.concatenate([image, image[:, ::-1][:, :pad2]], axis=1)
    if pad1 > 0:
        image = np.concatenate([image, image[::-1, :][:pad1, :]], axis=0)
    return image


def _next_pow2(n: int) -> int:
    return 1 << max(1, (n - 1).bit_length())


def cmd_simulate(args) -> int:
    if args.function not in TEST_FUNCTION_IDS:
        print(f"error: unknown test function {args.function!r}; "
              f"choose one of {', '.join(TEST_FUNCTION_IDS)}", file=sys.stderr)
        return EXIT_USAGE
    if args.snr <= 0 or args.n < 2 or args.n1 < 1 or args.n2 < 1 or args.T <= 0:
        print("error: sizes, T and snr must be positive (n >= 2)", file=sys.stderr)
        return EXIT_USAGE
    cfg = SimConfig(n=args.n, T=args.T, n1=args.n1, n2=args.n2,
                    snr=args.snr, seed=args.seed)
    f = eval_test_function(args.function, cfg)
    g = default_kernel(cfg.grid.points)
    q = forward_convolve(f, g, g_zero=1.0,
                         f_zero=zero_time_slice(args.function, cfg))
    Y, sigma = add_noise(q, args.snr, args.seed)
    out = Path(args.out)
    write_cube(str(out) + "_f", f)
    write_cube(str(out) + "_q", q)
    write_cube(str(out) + "_Y", Y)
    manifest = {
        "function": args.function, "snr": args.snr, "seed": args.seed,
        "n": args.n, "n1": args.n1, "n2": args.n2, "T": args.T,
        "sigma_used": sigma, "kernel": "exp(-t/2)",
        "outputs": {k: f"{out}_{k}" for k in ("f", "q", "Y")},
    }
    Path(str(out) + "_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    print(f"wrote {out}_f, {out}_q, {out}_Y (sigma = {sigma:.6g})")
    return EXIT_OK


def cmd_deconvolve(args) -> int:
    if (args.kernel is None) == (args.kernel_coeffs is None):
        raise UsageError("provide exactly one of --kernel / --kernel-coeffs")
    Y = read_cube(args.input)

    g_series = g_zero = g_coeffs = None
    if args.kernel_coeffs is not None:
        _, coeff_values = read_series(args.kernel_coeffs)
        g_coeffs = LagCoeffs(coeff_values)
    else:
        g_series, g_zero = _kernel_on_grid(args, Y.grid)

    if args.M != "auto":
        try:
            M = int(args.M)
        except ValueError:
            raise UsageError(f"--M must be an integer or 'auto', got {args.M!r}")
        if M < 1:
            raise UsageError("--M must be positive")
    else:
        M = "auto"
    if args.eps != "auto":
        try:
            eps = float(args.eps)
        except ValueError:
            raise UsageError(f"--eps must be a number or 'auto', got {args.eps!r}")
        if eps <= 0:
            raise UsageError("--eps must be positive")
    else:
        eps = "auto"

    cfg = EstimatorConfig(
        M=M, nu=args.nu, eps=eps,
        threshold_mode=not args.no_threshold,
        rcond=args.rcond,
        sigma_robust=(args.sigma_est == "mad"),
    )
    spec = WaveletSpec()

    if args.smooth_kernel and g_series is not None:
        order = M if isinstance(M, int) else 8
        basis = tabulate_basis(min(order, Y.grid.n), Y.grid)
        g_series = smooth_series(g_series, basis, cfg.rcond, g_zero)

    n1, n2 = Y.n1, Y.n2
    dyadic = (n1 & (n1 - 1) == 0) and (n2 & (n2 - 1) == 0)
    data = Y.data
    if args.symmetrize:
        if dyadic:
            data = np.stack([symmetrize(s) for s in data])
        else:
            t1, t2 = _next_pow2(n1), _next_pow2(n2)
            if t1 - n1 > n1 or t2 - n2 > n2:
                raise UsageError("cannot reflect-pad: padding exceeds image size")
            data = np.stack([_pad_reflect_to(s, t1, t2) for s in data])
    elif not dyadic:
        raise UsageError("spatial sides are not powers of two; pass --symmetrize")
    work = Cube(grid=Y.grid, data=data)

    f_hat, diag = deconvolve(work, g_series, spec, cfg,
                             g_zero=g_zero, g_coeffs=g_coeffs)

    out_data = f_hat.data
    if args.symmetrize:
        if dyadic:
            out_data = np.stack([restrict(s) for s in out_data])
        else:
            out_data = out_data[:, :n1, :n2]
    write_cube(args.out, Cube(grid=Y.grid, data=out_data))
    diag_json = json.dumps(diag.to_dict(), sort_keys=True, indent=2)
    if args.diagnostics:
        Path(args.diagnostics).write_text(diag_json + "\n")
    print(diag_json)
    return EXIT_OK


def cmd_bench_table1(args) -> int:
    if args.runs < 2:
        raise UsageError("--runs must be at least 2")
    cfg = SimConfig(runs=args.runs, seed=args.seed)
    est_cfg = EstimatorConfig(M=8, nu=args.nu)
    rows = run_table1(cfg, est_cfg)
    lines = ["function,snr,mean_delta,stderr,runs,seed,reference_delta,ratio"]
    for r in rows:
        lines.append(
            f"{r.function},{r.snr:g},{r.mean_delta:.17g},{r.stderr:.17g},"
            f"{r.runs},{r.seed},{r.reference_delta:.4f},{r.ratio:.17g}"
        )
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"{'function':>8} {'snr':>4} {'mean':>8} {'stderr':>8} "
              f"{'reference':>9} {'ratio':>6}")
        for r in rows:
            print(f"{r.function:>8} {r.snr:>4g} {r.mean_delta:>8.4f} "
                  f"{r.stderr:>8.4f} {r.reference_delta:>9.4f} {r.ratio:>6.2f}")
    else:
        print(csv_text, end="")
    return EXIT_OK


def cmd_norms(args) -> int:
    if args.max_m < 1:
        raise UsageError("--max-m must be positive")
    t, values = read_series(args.kernel)
    grid, series, zero_value = _series_to_grid(t, values)
    basis = tabulate_basis(min(args.max_m, grid.n), grid)
    g_hat = fit_coeffs(series, basis, zero_value=zero_value)
    if g_hat.values[0] == 0.0:
        raise SingularOperatorError("kernel has g_0 = 0")
    max_m = min(args.max_m, g_hat.m)
    table = inverse_norms(g_hat, max_m)
    ms = np.arange(1, max_m + 1)
    slope = float("nan")
    # asymptotic growth: fit the upper part of the range, from m = 8 when
    # the table reaches that far
    fit_from = ms >= min(8, max(2, max_m // 2))
    if fit_from.sum() >= 2:
        slope = float(np.polyfit(np.log(ms[fit_from]),
                                 np.log(table.frobenius[fit_from] ** 2), 1)[0])
    lines = [f"# frobenius_sq_loglog_slope: {slope:.6g}", "m,spectral,frobenius"]
    for m in ms:
        lines.append(
            f"{m},{table.spectral_at(m):.17g},{table.frobenius_at(m):.17g}"
        )
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(csv_text)
    print(csv_text, end="")
    return EXIT_OK


def cmd_smooth(args) -> int:
    if args.M < 1:
        raise UsageError("--M must be positive")
    t, values = read_series(args.input)
    grid, series, zero_value = _series_to_grid(t, values)
    basis = tabulate_basis(min(args.M, grid.n), grid)
    smoothed = smooth_series(series, basis, zero_value=zero_value)
    write_series(args.out, grid.points, smoothed)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "deconvolve": cmd_deconvolve,
    "bench-table1": cmd_bench_table1,
    "norms": cmd_norms,
    "smooth": cmd_smooth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileFormatError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SingularOperatorError, PowerIterationError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
