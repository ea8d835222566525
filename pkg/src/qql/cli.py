"""Command-line entry point: every experiment behind one binary.

Each subcommand prints a JSON run report (inputs echoed, outputs, wall
time, version, seed) to standard output and exits 0.  Validation problems
exit 2 with a diagnostic on standard error; an unknown subcommand prints
the usage text and exits 64.  Matrix-producing subcommands accept
``--format csv`` to emit the bare matrix instead of the report.  Exact
rationals appear as "numerator/denominator" strings so nothing is lost to
float truncation.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .bounds import m_sum, max_distinguishable, sorting_lower_bound
from .errors import ParameterError, QqlError
from .functions import BooleanFunction, load_family
from .polynomials import (
    MultilinearPolynomial,
    evaluate_on_all,
    evaluate_poly,
    lemma_audit,
    lemma_floor,
    minimizer,
    poly_from_json,
    poly_to_json,
    subset_basis,
)
from .reference import (
    build_character_distinguisher,
    build_uniform_subset_algorithm,
)
from .simulator import (
    Measurement,
    load_algorithm,
    load_measurement,
    success_matrix,
    worst_case_success,
)

USAGE = """usage: qql <subcommand> [options]

subcommands:
  bounds           largest family size D allowed by the counting bound
  sort-bound       minimal query count for sorting by comparisons
  run-example1     one-query character distinguisher, success matrix
  run-vandam       uniform-subset k-query algorithm, success matrix
  simulate         run an algorithm file against a family file
  analyze-poly     extract amplitude polynomials and certify their degree
  lemma-audit      spot-check the normalized-sum floor on random polynomials
  optimize         numerical search for the best worst-case success
  example3-search  optimize over all 7-function subsets at N=3, k=2

run `qql <subcommand> --help` for the flags of one subcommand.
"""


@dataclass(frozen=True)
class RunReport:
    subcommand: str
    inputs: dict
    outputs: dict
    wall_time_s: float
    version: str
    seed: int | None

    def to_json(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_time_s": self.wall_time_s,
            "version": self.version,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunReport":
        return cls(
            subcommand=data["subcommand"],
            inputs=data["inputs"],
            outputs=data["outputs"],
            wall_time_s=data["wall_time_s"],
            version=data["version"],
            seed=data["seed"],
        )


def _matrix(values: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in np.atleast_2d(values)]


def _apply_threads(explicit: int | None) -> int | None:
    threads = explicit
    if threads is None:
        env = os.environ.get("QQL_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ParameterError(f"QQL_THREADS must be an integer: {env}") from exc
    if threads is not None:
        if threads < 1:
            raise ParameterError(f"thread count must be >= 1, got {threads}")
        import torch

        torch.set_num_threads(threads)
    return threads


def _parse_probability(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f'probability must be a rational like "7/8": {text}') from exc


def _cmd_bounds(args) -> tuple[dict, dict, np.ndarray | None]:
    p = _parse_probability(args.p)
    best = max_distinguishable(args.N, args.k, p)
    inputs = {"N": args.N, "k": args.k, "p": str(p)}
    outputs = {
        "m_sum": str(m_sum(args.N, args.k)),
        "max_D": str(best),
    }
    return inputs, outputs, None


def _cmd_sort_bound(args) -> tuple[dict, dict, np.ndarray | None]:
    k_min = sorting_lower_bound(args.n)
    pairs = args.n * (args.n - 1) // 2
    inputs = {"n": args.n}
    outputs = {"k_min": k_min, "pairs": pairs}
    return inputs, outputs, None


def _bundle_report(bundle, predicted: Fraction) -> tuple[dict, np.ndarray]:
    matrix = bundle.success_matrix()
    diag = np.diagonal(matrix)
    outputs = {
        "D": bundle.family.size,
        "predicted_success": str(predicted),
        "worst_case_success": float(diag.min()),
        "max_deviation_from_predicted": float(np.abs(diag - float(predicted)).max()),
        "per_function_success": [float(x) for x in diag],
        "success_matrix": _matrix(matrix),
    }
    return outputs, matrix


def _cmd_run_example1(args) -> tuple[dict, dict, np.ndarray | None]:
    bundle = build_character_distinguisher(args.n)
    outputs, matrix = _bundle_report(bundle, bundle.predicted_success)
    outputs["max_deviation_from_identity"] = float(
        np.abs(matrix - np.eye(matrix.shape[0])).max()
    )
    inputs = {"n": args.n, "N": bundle.family.domain_size}
    return inputs, outputs, matrix


def _cmd_run_vandam(args) -> tuple[dict, dict, np.ndarray | None]:
    bundle = build_uniform_subset_algorithm(args.N, args.k)
    outputs, matrix = _bundle_report(bundle, bundle.predicted_success)
    inputs = {"N": args.N, "k": args.k}
    return inputs, outputs, matrix


def _cmd_simulate(args) -> tuple[dict, dict, np.ndarray | None]:
    algorithm = load_algorithm(args.algorithm)
    measurement = load_measurement(args.measurement)
    family = load_family(args.family)
    matrix = success_matrix(algorithm, measurement, family)
    inputs = {
        "algorithm": args.algorithm,
        "measurement": args.measurement,
        "family": args.family,
    }
    outputs = {
        "k": algorithm.query_count,
        "picture": algorithm.picture.value,
        "worst_case_success": worst_case_success(matrix),
        "success_matrix": _matrix(matrix),
    }
    return inputs, outputs, matrix


def _cmd_analyze_poly(args) -> tuple[dict, dict, np.ndarray | None]:
    from .polynomials import extract_polynomials

    algorithm = load_algorithm(args.algorithm)
    if args.measurement:
        measurement = load_measurement(args.measurement)
    else:
        # Default: every basis coordinate is its own outcome.
        measurement = Measurement.from_partition(np.arange(algorithm.initial.dim))
    polys = extract_polynomials(algorithm, measurement)
    inputs = {
        "algorithm": args.algorithm,
        "measurement": args.measurement or "(coordinate basis)",
    }
    outputs = {
        "k": algorithm.query_count,
        "degree_certificate": "no coefficient with |S| > k above 1e-10",
        "outcomes": [[poly_to_json(q) for q in group] for group in polys],
    }
    return inputs, outputs, None


def _random_unit_reference_poly(
    rng: np.random.Generator, domain_size: int, cap: int, reference: BooleanFunction
) -> MultilinearPolynomial:
    size = len(subset_basis(domain_size, cap))
    while True:
        coeffs = rng.normal(size=size) + 1j * rng.normal(size=size)
        q = MultilinearPolynomial(domain_size, cap, coeffs)
        value = evaluate_poly(q, reference)
        if abs(value) > 1e-6:
            return MultilinearPolynomial(domain_size, cap, coeffs / abs(value))


def _cmd_lemma_audit(args) -> tuple[dict, dict, np.ndarray | None]:
    if args.poly:
        with open(args.poly) as fh:
            q = poly_from_json(json.load(fh))
        reference = BooleanFunction(q.domain_size, args.f0)
        report = lemma_audit(q, reference)
        inputs = {"poly": args.poly, "f0": args.f0}
        return inputs, {"audit": report.to_json()}, None

    if args.N is None or args.k is None:
        raise ParameterError("lemma-audit needs either --poly or both --N and --k")
    rng = np.random.default_rng(args.seed)
    floor = lemma_floor(args.N, args.k)
    min_margin = np.inf
    failures = 0
    for _ in range(args.count):
        reference = BooleanFunction(args.N, int(rng.integers(0, 1 << args.N)))
        q = _random_unit_reference_poly(rng, args.N, args.k, reference)
        report = lemma_audit(q, reference)
        min_margin = min(min_margin, report.sum_of_squares - float(floor))
        if not report.passes:
            failures += 1
    reference = BooleanFunction(args.N, int(rng.integers(0, 1 << args.N)))
    q_min = minimizer(args.N, args.k, reference)
    achieved = float(np.sum(np.abs(evaluate_on_all(q_min)) ** 2))
    inputs = {"N": args.N, "k": args.k, "count": args.count}
    outputs = {
        "floor": str(floor),
        "failures": failures,
        "all_pass": failures == 0,
        "min_margin": float(min_margin),
        "minimizer_sum": achieved,
        "minimizer_deviation": abs(achieved - float(floor)),
    }
    return inputs, outputs, None


def _optimizer_config(args):
    from .optimizer import OptimizerConfig

    overrides = {}
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if args.iterations is not None:
        overrides["max_iterations"] = args.iterations
    if getattr(args, "workspace", None) is not None:
        overrides["workspace"] = args.workspace
    overrides["seed"] = args.seed
    return OptimizerConfig(**overrides)


def _cmd_optimize(args) -> tuple[dict, dict, np.ndarray | None]:
    from .optimizer import optimize

    _apply_threads(args.threads)
    family = load_family(args.family)
    cfg = _optimizer_config(args)
    result = optimize(family, args.k, cfg)
    inputs = {
        "family": args.family,
        "D": family.size,
        "k": args.k,
        "restarts": cfg.restarts,
        "iterations": cfg.max_iterations,
        "workspace": result.parameters.workspace,
    }
    outputs = {
        "p_hat": result.p_hat,
        "per_function_success": [float(x) for x in result.per_function_success],
        "bound_ceiling": str(result.bound_ceiling),
        "certified_gap": result.certified_gap,
        "converged": result.converged,
    }
    return inputs, outputs, None


def _cmd_example3_search(args) -> tuple[dict, dict, np.ndarray | None]:
    from .optimizer import OptimizerConfig, search_seven_function_sets

    _apply_threads(args.threads)
    overrides = {"seed": args.seed}
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if args.iterations is not None:
        overrides["max_iterations"] = args.iterations
    result = search_seven_function_sets(OptimizerConfig(**overrides))
    inputs = {
        "N": 3,
        "k": 2,
        "restarts": overrides.get("restarts", "default"),
    }
    outputs = {
        "rows": [
            {
                "excluded_function": BooleanFunction(3, row.excluded_mask).values_string(),
                "p_hat": row.p_hat,
                "bound_ceiling": str(row.bound_ceiling),
                "per_function_success": list(row.per_function_success),
            }
            for row in result.rows
        ],
        "best_p_hat": result.best_p_hat,
        "all_below_one": result.all_below_one,
    }
    return inputs, outputs, None


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("json", "csv"), default="json")


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)


def _build_parser(name: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=f"qql {name}")
    _add_format(parser)
    if name == "bounds":
        parser.add_argument("--N", type=int, required=True)
        parser.add_argument("--k", type=int, required=True)
        parser.add_argument("--p", default="1", help='success probability, e.g. "7/8"')
    elif name == "sort-bound":
        parser.add_argument("--n", type=int, required=True)
    elif name == "run-example1":
        parser.add_argument("--n", type=int, required=True)
    elif name == "run-vandam":
        parser.add_argument("--N", type=int, required=True)
        parser.add_argument("--k", type=int, required=True)
    elif name == "simulate":
        parser.add_argument("--algorithm", required=True)
        parser.add_argument("--measurement", required=True)
        parser.add_argument("--family", required=True)
    elif name == "analyze-poly":
        parser.add_argument("--algorithm", required=True)
        parser.add_argument("--measurement", default=None)
    elif name == "lemma-audit":
        parser.add_argument("--N", type=int, default=None)
        parser.add_argument("--k", type=int, default=None)
        parser.add_argument("--count", type=int, default=100)
        parser.add_argument("--poly", default=None)
        parser.add_argument("--f0", type=int, default=0, help="reference oracle mask")
        _add_seed(parser)
    elif name == "optimize":
        parser.add_argument("--family", required=True)
        parser.add_argument("--k", type=int, required=True)
        parser.add_argument("--restarts", type=int, default=None)
        parser.add_argument("--iterations", type=int, default=None)
        parser.add_argument("--workspace", type=int, default=None)
        parser.add_argument("--threads", type=int, default=None)
        _add_seed(parser)
    elif name == "example3-search":
        parser.add_argument("--restarts", type=int, default=None)
        parser.add_argument("--iterations", type=int, default=None)
        parser.add_argument("--threads", type=int, default=None)
        _add_seed(parser)
    return parser


_HANDLERS = {
    "bounds": _cmd_bounds,
    "sort-bound": _cmd_sort_bound,
    "run-example1": _cmd_run_example1,
    "run-vandam": _cmd_run_vandam,
    "simulate": _cmd_simulate,
    "analyze-poly": _cmd_analyze_poly,
    "lemma-audit": _cmd_lemma_audit,
    "optimize": _cmd_optimize,
    "example3-search": _cmd_example3_search,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    if argv and argv[0] in ("-h", "--help"):
        print(USAGE)
        return 0
    if not argv or argv[0] not in _HANDLERS:
        sys.stderr.write(USAGE)
        return 64
    name = argv[0]
    parser = _build_parser(name)
    try:
        args = parser.parse_args(argv[1:])
    except SystemExit as exc:
        return int(exc.code or 0)

    start = time.perf_counter()
    try:
        inputs, outputs, matrix = _HANDLERS[name](args)
    except QqlError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    elapsed = time.perf_counter() - start

    if args.format == "csv":
        if matrix is None:
            sys.stderr.write(f"error: {name} has no matrix output for csv\n")
            return 2
        writer = csv.writer(sys.stdout)
        for row in _matrix(matrix):
            writer.writerow(row)
        return 0

    report = RunReport(
        subcommand=name,
        inputs=inputs,
        outputs=outputs,
        wall_time_s=elapsed,
        version=__version__,
        seed=getattr(args, "seed", None),
    )
    print(json.dumps(report.to_json(), indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
