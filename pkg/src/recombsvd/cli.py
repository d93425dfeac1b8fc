"""Command-line entry point: ``recombsvd {detect,simulate,evaluate,dump-vectors}``."""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .detector import METHODS, DetectorConfig, detect
from .distmat import build_matrix
from .errors import ComputationError, ConfigError, ContractError, InputError, RecombSVDError
from .harness import ExperimentGrid, run_grid, write_outputs, write_table
from .seqio import format_fasta, read_fasta
from .simgen import SimulationConfig, simulate
from .svdcore import truncated_svd

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_FILE = 4
EXIT_INPUT = 5
EXIT_COMPUTE = 6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _float_list(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _add_detector_flags(p, *, seed_default=0):
    p.add_argument("-w", "--window", type=_positive_int, default=50,
                   help="window half-width; windows span 2w+1 positions (default 50)")
    p.add_argument("-M", "--permutations", type=_positive_int, default=100,
                   help="permuted replicates for the null threshold (default 100)")
    p.add_argument("--alpha", type=float, default=0.05,
                   help="lower quantile of the null used as threshold (default 0.05)")
    p.add_argument("-K", "--max-hotspots", type=_positive_int, default=2)
    p.add_argument("--null-method", choices=("gram", "direct"), default="gram",
                   help="replicate computation: Gram shortcut or full rebuild + SVD")
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--threads", type=_positive_int, default=1, help="concurrency cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recombsvd", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="count and locate hot spots in an aligned FASTA")
    p.add_argument("fasta", help="aligned FASTA file, or - for stdin")
    _add_detector_flags(p)
    p.add_argument("--method", choices=("diff", "ols", "both"), default="both")
    p.add_argument("--no-fold-case", action="store_true", help="keep lower-case characters distinct")
    p.add_argument("-o", "--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("simulate", help="generate a synthetic population")
    p.add_argument("--r-c", type=float, default=0.05, help="common mutation rate")
    p.add_argument("--r-i", type=float, default=0.05, help="individual mutation rate")
    p.add_argument("--recombs", type=int, choices=(0, 1, 2), default=1)
    p.add_argument("--locations", type=_int_list, help="fixed breakpoints, e.g. 300,700")
    p.add_argument("--min-spacing", type=int, default=150)
    p.add_argument("-n", "--n", type=_positive_int, default=100, dest="n")
    p.add_argument("-L", "--length", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", help="FASTA output path (default stdout)")
    p.add_argument("--truth", help="truth JSON path (default <out>.truth.json when --out is set)")

    p = sub.add_parser("evaluate", help="run the synthetic evaluation grid")
    _add_detector_flags(p, seed_default=1)
    p.add_argument("--trials", type=_positive_int, default=20)
    p.add_argument("-n", "--n", type=_positive_int, default=100, dest="n")
    p.add_argument("-L", "--length", type=_positive_int, default=1000)
    p.add_argument("--r-c-values", type=_float_list, default=(0.05, 0.25))
    p.add_argument("--r-i-values", type=_float_list, default=(0.05, 0.25))
    p.add_argument("--recomb-counts", type=_int_list, default=(0, 1, 2))
    p.add_argument("--fixed-locations", type=_int_list,
                   help="fix breakpoints: one value for 1-rec cells, two more for 2-rec cells")
    p.add_argument("--outdir", default="evaluation")

    p = sub.add_parser("dump-vectors", help="right singular vectors of the smoothed matrix as CSV")
    p.add_argument("fasta")
    p.add_argument("-w", "--window", type=_positive_int, default=50)
    p.add_argument("-k", type=_positive_int, default=3, help="number of vectors (default 3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-fold-case", action="store_true")
    p.add_argument("-o", "--out")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _detector_config(args) -> DetectorConfig:
    return DetectorConfig(
        window=args.window, permutations=args.permutations, alpha=args.alpha, seed=args.seed,
        max_hotspots=args.max_hotspots, null_method=args.null_method, threads=args.threads,
    )


def cmd_detect(args) -> None:
    config = _detector_config(args)
    pop = read_fasta(args.fasta, fold_case=not args.no_fold_case)
    report = detect(pop, config)
    methods = METHODS if args.method == "both" else (args.method,)
    report.parameters["method"] = args.method
    report.parameters["fold_case"] = not args.no_fold_case
    _emit(report.to_json(methods), args.out)


def cmd_simulate(args) -> None:
    config = SimulationConfig(
        n=args.n, length=args.length, r_c=args.r_c, r_i=args.r_i, num_recomb=args.recombs,
        recomb_locations=args.locations, min_spacing=args.min_spacing, seed=args.seed,
    )
    sim = simulate(config)
    truth_path = args.truth
    if truth_path is None and args.out:
        truth_path = str(Path(args.out).with_suffix("")) + ".truth.json"
    _emit(format_fasta(sim.population), args.out)
    if truth_path:
        Path(truth_path).write_text(sim.truth_json())


def _fixed_locations(values):
    if not values:
        return None
    if len(values) not in (1, 3):
        raise ConfigError("--fixed-locations takes 1 value, or 1 + 2 values (for 2-rec cells)")
    fixed = {1: values[:1]}
    if len(values) == 3:
        fixed[2] = values[1:]
    return fixed


def cmd_evaluate(args) -> None:
    grid = ExperimentGrid(
        common_rates=args.r_c_values, individual_rates=args.r_i_values,
        recomb_counts=args.recomb_counts, trials=args.trials, n=args.n, length=args.length,
        detector=replace(_detector_config(args), threads=1), master_seed=args.seed,
        fixed_locations=_fixed_locations(args.fixed_locations),
    )
    if grid.fixed_locations and 2 in grid.recomb_counts and 2 not in grid.fixed_locations:
        raise ConfigError("fixed breakpoints for 2-rec cells missing; pass three values")
    total = len(grid.cells()) * grid.trials
    done = 0

    def progress(res):
        nonlocal done
        done += 1
        status = "failed" if res.error else f"called {res.called}"
        print(f"[{done}/{total}] cell {res.cell} trial {res.trial}: {status}", file=sys.stderr)

    cells = run_grid(grid, workers=args.threads, progress=progress)
    write_outputs(grid, cells, args.outdir)
    buf = io.StringIO()
    write_table(cells, buf)
    sys.stdout.write(buf.getvalue())


def cmd_dump_vectors(args) -> None:
    pop = read_fasta(args.fasta, fold_case=not args.no_fold_case)
    factors = truncated_svd(build_matrix(pop, args.window), args.k, seed=args.seed)
    buf = io.StringIO()
    factors.write_csv(buf)
    _emit(buf.getvalue(), args.out)


COMMANDS = {
    "detect": cmd_detect,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "dump-vectors": cmd_dump_vectors,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    print(f"seed={args.seed}", file=sys.stderr)

    def fail(code, exc):
        msg = " ".join(str(exc).split())
        print(f"recombsvd {args.command}: error: {msg}", file=sys.stderr)
        return code

    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        return fail(EXIT_CONFIG, exc)
    except InputError as exc:
        return fail(EXIT_INPUT, exc)
    except (ComputationError, ContractError) as exc:
        return fail(EXIT_COMPUTE, exc)
    except OSError as exc:
        return fail(EXIT_FILE, exc)
    except RecombSVDError as exc:
        return fail(EXIT_UNEXPECTED, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
