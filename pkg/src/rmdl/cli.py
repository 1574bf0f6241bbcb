"""Command-line entry point: one subcommand per library operation.

Every run writes its data file(s) plus ``<out>.manifest.json`` recording the
parameters, seed, version, wall-clock time and 64-bit output digests.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .arithmetic import build_mangoldt_table, write_dump
from .config import BudgetError, PrecisionError, RmdlError, default_budgets
from .convolution import composition_count, goldbach_coefficients
from .dirichlet import (
    estimate_abscissa,
    geometric_checkpoints,
    partial_sum_trace,
    variance_series,
)
from .ensemble import EXACT, SeedSpec, exact_distribution, normalize_mode, sample_path
from .goldbach import (
    divergence_profile,
    pair_counts,
    singular_series_array,
    w2_prime_parts,
)

EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2
SUBCOMMANDS = ("sieve", "conv", "sample", "distribution", "trace", "variance", "abscissa", "goldbach", "diverge-sigma1")
# excluded from the run key: they must not change any output byte
_NON_SEMANTIC = {"threads", "out", "csv", "func", "command"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_int(text: str) -> int:
    """Accept 100000, 1e5 and 10^5."""
    t = text.strip().replace("_", "")
    try:
        if "^" in t:
            base, exp = t.split("^")
            return int(base) ** int(exp)
        if "e" in t.lower():
            v = float(t)
            if v != int(v):
                raise ValueError
            return int(v)
        return int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def parse_u64(text: str) -> int:
    v = parse_int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"not an unsigned 64-bit integer: {text!r}")
    return v


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def digest(path: Path) -> str:
    return hashlib.blake2b(path.read_bytes(), digest_size=8).hexdigest()


def run_key(command: str, params: dict) -> str:
    semantic = {k: v for k, v in params.items() if k not in _NON_SEMANTIC}
    blob = json.dumps({"command": command, "params": semantic, "version": __version__}, sort_keys=True)
    return hashlib.blake2b(blob.encode(), digest_size=8).hexdigest()


class Run:
    """Collects outputs for one invocation and writes the manifest."""

    def __init__(self, command: str, params: dict):
        self.command = command
        self.params = params
        self.key = run_key(command, params)
        self.outputs: list[Path] = []
        self.start = time.perf_counter()

    def table(self, path: Path, columns: Sequence[str], rows, fmt_name: str = "csv") -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt_name == "json":
            data = {"columns": list(columns), "manifest": self.key, "rows": [[_jsonable(v) for v in row] for row in rows]}
            path.write_text(json.dumps(data) + "\n")
        else:
            with open(path, "w", newline="\n") as fh:
                fh.write(f"# columns={','.join(columns)} manifest={self.key}\n")
                fh.write(",".join(columns) + "\n")
                for row in rows:
                    fh.write(",".join(fmt(v) for v in row) + "\n")
        self.outputs.append(path)

    def json(self, path: Path, obj: dict) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        obj = {"manifest": self.key, **obj}
        path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
        self.outputs.append(path)

    def binary(self, path: Path) -> None:
        self.outputs.append(path)

    def finish(self, manifest_path: Path) -> None:
        manifest = {
            "subcommand": self.command,
            "params": _jsonable(self.params),
            "master_seed": self.params.get("seed"),
            "version": __version__,
            "run_key": self.key,
            "duration_s": time.perf_counter() - self.start,
            "outputs": {str(p): digest(p) for p in self.outputs},
        }
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, Path):
        return str(v)
    return v


def _sidecar(out: Path) -> Path:
    return out.with_name(out.name + ".meta.json")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sieve(a, run: Run) -> None:
    table = build_mangoldt_table(a.n_max)
    a.out.parent.mkdir(parents=True, exist_ok=True)
    write_dump(table, a.out)
    run.binary(a.out)
    if a.csv:
        n = np.arange(1, a.n_max + 1)
        rows = zip(n.tolist(), table.lam[1:].tolist(), table.prime_flag[1:].astype(int).tolist())
        run.table(a.csv, ("n", "lambda", "prime_flag"), rows)


def cmd_conv(a, run: Run) -> None:
    table = build_mangoldt_table(a.n_max)
    c = goldbach_coefficients(table, a.r, a.n_max, a.method)
    n = np.arange(1, a.n_max + 1)
    run.table(a.out, ("n", "g", "w"), zip(n.tolist(), c.g[1:].tolist(), c.w[1:].tolist()), a.format)
    run.json(_sidecar(a.out), {
        "r": a.r, "n_max": a.n_max, "method": a.method,
        "max_abs_error_bound": c.max_abs_error_bound,
        "g_error_bound": c.g_error_bound, "w_error_bound": c.w_error_bound,
    })


def _precheck_exact(r: int, n_max: int) -> None:
    budgets = default_budgets()
    L = composition_count(n_max, r) if n_max >= r else 0
    if L > budgets.terms_per_coefficient:
        raise BudgetError(
            f"L({n_max}) = {L} compositions for r={r} exceeds the per-coefficient budget "
            f"{budgets.terms_per_coefficient} (set RMDL_BUDGET_TERMS or use --mode surrogate)"
        )


def _path(a):
    mode = normalize_mode(a.mode)
    if mode == EXACT:
        _precheck_exact(a.r, a.n_max)
    table = build_mangoldt_table(a.n_max)
    coeffs = None if mode == EXACT else goldbach_coefficients(table, a.r, a.n_max, "fft")
    seed = SeedSpec(a.seed, a.replicate)
    return sample_path(table, a.r, a.n_max, seed, mode, coeffs, threads=a.threads)


def cmd_sample(a, run: Run) -> None:
    path = _path(a)
    n = np.arange(1, a.n_max + 1)
    run.table(a.out, ("n", "y"), zip(n.tolist(), path.y[1:].tolist()), a.format)
    b = default_budgets()
    run.json(_sidecar(a.out), {
        "r": a.r, "n_max": a.n_max, "mode": path.mode,
        "approximation": path.mode != EXACT,
        "seed": a.seed, "replicate": a.replicate,
        "budgets": {"terms_per_coefficient": b.terms_per_coefficient, "path_terms": b.path_terms},
    })


def cmd_distribution(a, run: Run) -> None:
    table = build_mangoldt_table(max(a.n, 2))
    d = exact_distribution(table, a.r, a.n)
    rows = [(v, int(c), d.denominator_log2) for v, c in zip(d.support.tolist(), d.counts.tolist())]
    run.table(a.out, ("value", "count", "denominator_log2"), rows, a.format)


def _checkpoints_to(n_max: int) -> np.ndarray:
    cps = geometric_checkpoints(n_max, n0=min(64, n_max))
    return cps if cps.size and cps[-1] == n_max else np.append(cps, n_max)


def cmd_trace(a, run: Run) -> None:
    path = _path(a)
    tr = partial_sum_trace(path, complex(a.sigma, a.t), _checkpoints_to(a.n_max))
    rows = ((int(N), v.real, v.imag, abs(v)) for N, v in zip(tr.checkpoints, tr.values))
    run.table(a.out, ("N", "re_A", "im_A", "abs_A"), rows, a.format)


def cmd_variance(a, run: Run) -> None:
    table = build_mangoldt_table(a.n_max)
    c = goldbach_coefficients(table, a.r, a.n_max, "fft")
    cps = _checkpoints_to(a.n_max)
    S = variance_series(c, a.sigma, cps)
    run.table(a.out, ("N", "partial_sum"), zip(cps.tolist(), S.tolist()), a.format)


def cmd_abscissa(a, run: Run) -> None:
    mode = normalize_mode(a.mode)
    if mode == EXACT:
        _precheck_exact(a.r, a.n_max)
    table = build_mangoldt_table(a.n_max)
    est = estimate_abscissa(table, a.r, a.n_max, a.ensemble, SeedSpec(a.seed), mode,
                            method=a.method, threads=a.threads)
    run.json(a.out, {
        "r": est.r, "sigma_hat": est.sigma_hat, "stderr": est.stderr,
        "ensemble": est.ensemble_size, "n_max": est.n_max, "mode": est.mode,
        "method": est.method, "approximation": est.mode != EXACT,
    })


def cmd_goldbach(a, run: Run) -> None:
    table = build_mangoldt_table(a.n_max)
    c = goldbach_coefficients(table, 2, a.n_max, "fft")
    pairs = pair_counts(table, a.n_max)
    w2p, _ = w2_prime_parts(table, a.n_max)
    S = singular_series_array(a.n_max)
    n = np.arange(4, a.n_max + 1)
    hl = S[n] * n / np.log(n) ** 2
    rows = zip(n.tolist(), pairs[n].tolist(), w2p[n].tolist(), S[n].tolist(), hl.tolist(), c.g[n].tolist())
    run.table(a.out, ("n", "pair_count", "w2_prime_part", "singular_series", "hl_prediction", "g2"), rows, a.format)


def cmd_diverge(a, run: Run) -> None:
    table = build_mangoldt_table(a.n_max)
    c = goldbach_coefficients(table, 2, a.n_max, "fft")
    prof = divergence_profile(c, sigma=a.sigma)
    run.json(a.out, {
        "n_max": a.n_max, "sigma": prof.sigma, "slope": prof.slope,
        "upper_slope": prof.upper_slope, "relative_deviation": prof.relative_deviation,
        "checkpoints": prof.checkpoints, "partial_sums": prof.partial_sums,
    })


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=parse_u64, default=0, help="master seed (u64)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; never changes output")
    common.add_argument("--out", type=Path, default=None, help="output path")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = _Parser(prog="rmdl", description="Random multiple Dirichlet series laboratory.")
    p.add_argument("--version", action="version", version=f"rmdl {__version__}")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}", parser_class=_Parser)

    def add(name, func, default_out, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func, default_out=default_out)
        return sp

    sp = add("sieve", cmd_sieve, "mangoldt.bin", "von Mangoldt table dump")
    sp.add_argument("--n-max", type=parse_int, required=True)
    sp.add_argument("--csv", type=Path, default=None, help="also write n,lambda,prime_flag")

    sp = add("conv", cmd_conv, "conv.csv", "G_r and W_r coefficients")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n-max", type=parse_int, required=True)
    sp.add_argument("--method", choices=("direct", "fft"), default="fft")

    for name, func, out, help_ in (("sample", cmd_sample, "sample.csv", "one signed coefficient path"),
                                   ("trace", cmd_trace, "trace.csv", "partial sums A(N; s) along a path")):
        sp = add(name, func, out, help_)
        sp.add_argument("--r", type=int, required=True)
        sp.add_argument("--n-max", "--n", dest="n_max", type=parse_int, required=True)
        sp.add_argument("--replicate", type=parse_u64, default=0)
        sp.add_argument("--mode", choices=("exact", "surrogate"), default="exact")
        if name == "trace":
            sp.add_argument("--sigma", type=float, required=True)
            sp.add_argument("--t", type=float, default=0.0, help="imaginary part of s")

    sp = add("distribution", cmd_distribution, "distribution.csv", "exact pmf of Y_r(n, .)")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n", type=parse_int, required=True)

    sp = add("variance", cmd_variance, "variance.csv", "partial sums of W_r(n)/n^(2 sigma)")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n-max", type=parse_int, required=True)
    sp.add_argument("--sigma", type=float, required=True)

    sp = add("abscissa", cmd_abscissa, "abscissa.json", "ensemble abscissa estimate")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n-max", type=parse_int, required=True)
    sp.add_argument("--ensemble", type=int, default=100)
    sp.add_argument("--mode", choices=("exact", "surrogate"), default="exact")
    sp.add_argument("--method", choices=("coefficient_growth", "sigma_grid"), default="coefficient_growth")

    sp = add("goldbach", cmd_goldbach, "goldbach.csv", "prime pairs, singular series, G_2")
    sp.add_argument("--n-max", type=parse_int, required=True)

    sp = add("diverge-sigma1", cmd_diverge, "diverge_sigma1.json", "sigma = 1 divergence diagnostic")
    sp.add_argument("--n-max", type=parse_int, required=True)
    sp.add_argument("--sigma", type=float, default=1.0)
    return p


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if a.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if a.out is None:
        a.out = Path(a.default_out)
    params = {k: v for k, v in vars(a).items() if k not in {"func", "default_out"}}
    run = Run(a.command, params)
    try:
        a.func(a, run)
    except (BudgetError, PrecisionError) as exc:
        print(f"rmdl {a.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, IndexError, RmdlError) as exc:
        print(f"rmdl {a.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run.finish(a.out.with_name(a.out.name + ".manifest.json"))
    return EXIT_OK


def main() -> None:
    raise SystemExit(dispatch())


if __name__ == "__main__":
    main()
