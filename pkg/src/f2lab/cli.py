"""Command-line surface: parse inputs, run experiments, enforce caps, emit reports.

Every subcommand prints a short human-readable summary to stdout and, with
``--out``, writes a structured report that embeds the resolved configuration.
Exit codes: 0 success, 1 a checked property or bound was violated (witness
emitted), 2 input error, 3 a resource cap was exceeded.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import random
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from .barrier import CliqueSet, affine_mixture_distance_bound, evasiveness_scan, sidon_check
from .config import CapExceeded, Caps, DEFAULT_CAPS, UnsatisfiableSystemError
from .experiments import (
    FamilySpec,
    code_min_distance,
    correlation_survey,
    disperser_census_via_hitting,
    extractor_census,
    extractor_search,
    hamming_bound_holds,
    random_bias_survey,
    rm_code,
    rm_list_size,
)
from .f2poly import (
    MultilinearPoly,
    PolySyntaxError,
    TruthTable,
    bias,
    correlation,
    directional_derivative,
    evaluate,
    parse_poly,
    poly_to_text,
    substitute,
)
from .polysys import (
    PolySystem,
    clp_rank_check,
    common_solutions,
    low_weight_cw_check,
    min_weight_nontrivial_solution,
)
from .reduction import (
    debias_nobf,
    local_to_biased_nobf,
    local_to_nobf,
    tree_to_json,
    verify_decomposition,
)
from .serialize import load_source, source_to_json
from .sources import AffineSubspace, LocalSource, NobfSource
from .subspace import exhaustive_best_dimension, grow_local_subspace, verify_d_local, verify_monochromatic
from .util import bitstring_to_int, frac_str, int_to_bitstring, parse_frac

__all__ = ["RunConfig", "dispatch", "load_config", "main"]

_CONFIG_KEYS = ("seed", "cap_table", "cap_dist", "cap_family", "cap_weight", "workers", "format")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters; the caps and seed are echoed into reports."""

    seed: int = 0
    caps: Caps = DEFAULT_CAPS
    workers: int = 1
    out: str | None = None
    format: str = "json"
    verbosity: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 1 << 64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        for name in ("table", "dist", "family", "weight"):
            if getattr(self.caps, name) < 1:
                raise ValueError(f"cap {name!r} must be positive")
        if self.format not in ("json", "csv"):
            raise ValueError(f"format must be json or csv, got {self.format!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be positive, got {self.workers}")

    def as_report_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "caps": {
                "table": self.caps.table,
                "dist": self.caps.dist,
                "family": self.caps.family,
                "weight": self.caps.weight,
            },
            "format": self.format,
        }


def load_config(path: str | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Resolve defaults, then an optional JSON config file, then explicit flags."""
    values: dict[str, Any] = {
        "seed": 0,
        "cap_table": None,
        "cap_dist": None,
        "cap_family": None,
        "cap_weight": None,
        "workers": os.cpu_count() or 1,
        "format": "json",
    }
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            loaded = json.load(handle)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        for key, value in loaded.items():
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    caps = DEFAULT_CAPS.with_overrides(
        table=values["cap_table"],
        dist=values["cap_dist"],
        family=values["cap_family"],
        weight=values["cap_weight"],
    )
    return RunConfig(
        seed=values["seed"],
        caps=caps,
        workers=values["workers"],
        out=(overrides or {}).get("out"),
        format=values["format"],
        verbosity=(overrides or {}).get("verbosity") or 0,
    )


# ---------------------------------------------------------------------------
# Input helpers.


def _bool(b: bool) -> str:
    return "true" if b else "false"


def _infer_n(texts: Sequence[str]) -> int:
    indices = [int(m) for text in texts for m in re.findall(r"x(\d+)", text)]
    return max(indices, default=0)


def _poly_texts(args: argparse.Namespace) -> list[str]:
    if getattr(args, "expr", None) is not None:
        return [args.expr]
    lines = Path(args.file).read_text(encoding="utf-8").splitlines()
    texts = [line for line in (line.strip() for line in lines) if line]
    if not texts:
        raise ValueError(f"no polynomials found in {args.file}")
    return texts


def _single_poly(args: argparse.Namespace) -> tuple[MultilinearPoly, int]:
    texts = _poly_texts(args)
    if len(texts) != 1:
        raise ValueError(f"expected exactly one polynomial, got {len(texts)}")
    n = args.n if args.n is not None else _infer_n(texts)
    return parse_poly(texts[0], n), n


def _poly_system(args: argparse.Namespace) -> PolySystem:
    texts = _poly_texts(args)
    n = args.n if args.n is not None else _infer_n(texts)
    return PolySystem(n, tuple(parse_poly(text, n) for text in texts))


def _parse_points(spec: str, width: int) -> list[int]:
    return [bitstring_to_int(token.strip(), width) for token in spec.split(",") if token.strip()]


def _require_type(source: Any, wanted: type, what: str) -> Any:
    if not isinstance(source, wanted):
        raise ValueError(f"{what} must be a {wanted.__name__} description, got {type(source).__name__}")
    return source


# ---------------------------------------------------------------------------
# Report emission.


def _flatten(prefix: str, value: Any, rows: list[tuple[str, str]]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], rows)
    elif isinstance(value, (list, tuple)):
        rows.append((prefix, json.dumps(value, sort_keys=True)))
    else:
        rows.append((prefix, json.dumps(value)))


def _write_report(report: dict[str, Any], config: RunConfig) -> None:
    if config.out is None:
        return
    path = Path(config.out)
    if config.format == "json":
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        rows: list[tuple[str, str]] = []
        _flatten("", report, rows)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["key", "value"])
            writer.writerows(rows)


def _write_survey_artifacts(
    report: dict[str, Any], values: Sequence[Fraction], config: RunConfig, no_figure: bool
) -> list[str]:
    """Write the JSON summary plus a per-trial CSV and a histogram next to it."""
    if config.out is None:
        return []
    base = Path(config.out)
    if base.suffix in (".json", ".csv", ".png"):
        base = base.with_suffix("")
    json_path = base.with_suffix(".json")
    csv_path = base.with_suffix(".csv")
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["trial", "value", "value_float_approximate"])
        for i, v in enumerate(values):
            writer.writerow([i, frac_str(v), repr(float(v))])
    written = [str(json_path), str(csv_path)]
    if not no_figure:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist([float(v) for v in values], bins=20, range=(0.0, 1.0), edgecolor="black")
        params = report["result"]["parameters"]
        ax.set_title(f"{params['kind']} survey: n={params['n']}, r={params['r']}, trials={params['trials']}")
        ax.set_xlabel("absolute value (approximate axis)")
        ax.set_ylabel("trial count")
        fig.tight_layout()
        png_path = base.with_suffix(".png")
        fig.savefig(png_path, dpi=120)
        plt.close(fig)
        written.append(str(png_path))
    return written


# ---------------------------------------------------------------------------
# poly subcommands.


def _cmd_poly_parse(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    texts = _poly_texts(args)
    n = args.n if args.n is not None else _infer_n(texts)
    entries = []
    lines = []
    for text in texts:
        f = parse_poly(text, n)
        canonical = poly_to_text(f)
        entries.append({"input": text, "canonical": canonical, "degree": f.degree()})
        lines.append(canonical)
    return 0, lines, {"n": n, "polynomials": entries}


def _cmd_poly_eval(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    point = bitstring_to_int(args.point, n)
    value = evaluate(f, point)
    return 0, [str(value)], {"n": n, "point": args.point, "value": value}


def _cmd_poly_bias(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    b = bias(f, config.caps)
    return 0, [frac_str(b)], {"n": n, "bias": frac_str(b)}


def _cmd_poly_corr(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    texts = [args.expr, args.other]
    n = args.n if args.n is not None else _infer_n(texts)
    f = parse_poly(args.expr, n)
    g = parse_poly(args.other, n)
    c = correlation(f, g, config.caps)
    return 0, [frac_str(c)], {"n": n, "correlation": frac_str(c)}


def _cmd_poly_derive(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    directions = _parse_points(args.dirs, n)
    result = directional_derivative(f, directions)
    text = poly_to_text(result)
    return 0, [text], {
        "n": n,
        "directions": [int_to_bitstring(v, n) for v in directions],
        "derivative": text,
        "degree": result.degree(),
    }


def _cmd_poly_compose(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    entry_texts = [
        line for line in (raw.strip() for raw in Path(args.entries).read_text(encoding="utf-8").splitlines()) if line
    ]
    k = args.k if args.k is not None else _infer_n(entry_texts)
    entries = [parse_poly(text, k) for text in entry_texts]
    if len(entries) != n:
        raise ValueError(f"need {n} replacement polynomials, got {len(entries)}")
    composed = substitute(f, entries)
    text = poly_to_text(composed)
    return 0, [text], {"n": n, "k": k, "composition": text, "degree": composed.degree()}


# ---------------------------------------------------------------------------
# cw subcommands.


def _cmd_cw_solve(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    try:
        system = _poly_system(args)
    except UnsatisfiableSystemError:
        return 0, ["unsatisfiable"], {"satisfiable": False, "count": 0, "solutions": []}
    solutions = common_solutions(system, config.caps)
    strings = [int_to_bitstring(x, system.n_vars) for x in solutions]
    return 0, [f"solutions: {len(strings)}", *strings], {
        "satisfiable": bool(strings),
        "count": len(strings),
        "solutions": strings,
    }


def _cmd_cw_minweight(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    try:
        system = _poly_system(args)
    except UnsatisfiableSystemError:
        return 0, ["unsatisfiable"], {"satisfiable": False, "min_weight": None, "witness": None}
    payload: dict[str, Any] = {"n": system.n_vars}
    try:
        check = low_weight_cw_check(system, config.caps)
        witness = int_to_bitstring(check.witness, system.n_vars)
        payload.update(
            min_weight=check.min_weight,
            witness=witness,
            bound_approx_float=check.bound,
            holds=check.holds,
        )
        code = 0 if check.holds else 1
        return code, [f"{witness} {check.min_weight}", f"holds: {_bool(check.holds)}"], payload
    except ValueError:
        found = min_weight_nontrivial_solution(system, max_weight=args.max_weight, caps=config.caps)
        if found is None:
            payload.update(min_weight=None, witness=None, bound_approx_float=None, holds=None)
            return 0, ["none"], payload
        x, w = found
        witness = int_to_bitstring(x, system.n_vars)
        payload.update(min_weight=w, witness=witness, bound_approx_float=None, holds=None)
        return 0, [f"{witness} {w}"], payload


def _cmd_cw_clprank(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    check = clp_rank_check(f, args.r, config.caps)
    lines = [f"rank: {check.rank}", f"bound: {check.bound}", f"holds: {_bool(check.holds)}"]
    return (0 if check.holds else 1), lines, {
        "n": n,
        "r": args.r,
        "rank": check.rank,
        "bound": check.bound,
        "holds": check.holds,
    }


# ---------------------------------------------------------------------------
# subspace subcommands.


def _cmd_subspace_grow(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    result = grow_local_subspace(f, args.d, args.r, config.caps)
    mono = verify_monochromatic(f, 0, result.basis, config.caps)
    local = verify_d_local(result.basis, args.d)
    basis_strings = [int_to_bitstring(v, n) for v in result.basis]
    lines = [
        f"dimension: {result.dimension}",
        f"constant_value: {result.constant_value}",
        f"truncated: {_bool(result.truncated)}",
        *basis_strings,
        f"monochromatic: {_bool(mono)}",
        f"d_local: {_bool(local)}",
    ]
    trace = [
        {
            "iteration": entry.iteration,
            "vector": int_to_bitstring(entry.vector, n),
            "weight": entry.weight,
            "alpha": entry.alpha,
            "column_weights": list(entry.column_weights),
            "linear_degree": entry.linear_degree,
            "nonlinear_degree": entry.nonlinear_degree,
            "linear_degree_bound": entry.linear_degree_bound,
            "nonlinear_degree_bound": entry.nonlinear_degree_bound,
        }
        for entry in result.state.trace
    ]
    payload = {
        "n": n,
        "d": args.d,
        "r": args.r,
        "dimension": result.dimension,
        "constant_value": result.constant_value,
        "truncated": result.truncated,
        "basis": basis_strings,
        "trace": trace,
        "verification": {"monochromatic": mono, "d_local": local},
    }
    return (0 if mono and local else 1), lines, payload


def _cmd_subspace_verify(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    basis = _parse_points(args.basis, n)
    shift = bitstring_to_int(args.shift, n) if args.shift is not None else 0
    mono = verify_monochromatic(f, shift, basis, config.caps)
    local = verify_d_local(basis, args.d)
    lines = [f"monochromatic: {_bool(mono)}", f"d_local: {_bool(local)}"]
    payload = {
        "n": n,
        "d": args.d,
        "shift": int_to_bitstring(shift, n),
        "basis": [int_to_bitstring(v, n) for v in basis],
        "monochromatic": mono,
        "d_local": local,
    }
    return (0 if mono and local else 1), lines, payload


def _cmd_subspace_oracle(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    f, n = _single_poly(args)
    best = exhaustive_best_dimension(f, args.d, max_dim=args.max_dim, caps=config.caps)
    return 0, [f"best_dimension: {best}"], {"n": n, "d": args.d, "max_dim": args.max_dim, "best_dimension": best}


# ---------------------------------------------------------------------------
# reduce subcommands.


def _cmd_reduce_to_nobf(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    source = _require_type(load_source(args.source), LocalSource, "input source")
    result = local_to_nobf(source, args.t, truncate=args.truncate, caps=config.caps)
    lines = [
        f"components: {len(result.mixture.components)}",
        f"k_prime: {frac_str(result.k_prime)}",
        f"epsilon: {frac_str(result.epsilon)}",
        f"truncated: {_bool(result.truncated)}",
        f"dropped_weight: {frac_str(result.dropped_weight)}",
    ]
    payload = {
        "t": args.t,
        "components": len(result.mixture.components),
        "k_prime": frac_str(result.k_prime),
        "epsilon": frac_str(result.epsilon),
        "truncated": result.truncated,
        "dropped_weight": frac_str(result.dropped_weight),
        "tree": tree_to_json(result.tree),
    }
    return 0, lines, payload


def _cmd_reduce_debias(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    source = _require_type(load_source(args.source), NobfSource, "input source")
    combo, guarantee = debias_nobf(source)
    lines = [
        f"components: {len(combo.components)}",
        f"mu: {frac_str(guarantee.mu)}",
        f"k_prime: {frac_str(guarantee.k_prime)}",
        f"epsilon_log2: {frac_str(guarantee.epsilon_log2)}",
    ]
    payload = {
        "components": [
            {"weight": frac_str(w), "source": source_to_json(comp)} for w, comp in combo.components
        ],
        "mu": frac_str(guarantee.mu),
        "k_prime": frac_str(guarantee.k_prime),
        "epsilon_log2": frac_str(guarantee.epsilon_log2),
    }
    return 0, lines, payload


def _cmd_reduce_verify(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    source = _require_type(load_source(args.source), LocalSource, "input source")
    tree = local_to_biased_nobf(source, args.t, config.caps)
    distance = verify_decomposition(tree, source, config.caps)
    holds = distance == 0
    lines = [f"distance: {frac_str(distance)}", f"exact: {_bool(holds)}"]
    return (0 if holds else 1), lines, {"t": args.t, "distance": frac_str(distance), "exact": holds}


# ---------------------------------------------------------------------------
# lab subcommands.


def _family_spec(args: argparse.Namespace) -> FamilySpec:
    return FamilySpec(args.n, args.k, args.d, r=getattr(args, "r", None))


def _cmd_lab_census(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    spec = _family_spec(args)
    f = parse_poly(args.expr, args.n)
    res = extractor_census(f, spec, config.caps)
    lines = [
        f"max_bias: {frac_str(res.max_bias)}",
        f"worst_index: {res.worst_index}",
        f"scanned: {res.scanned}",
    ]
    payload = {
        "family": {"n": spec.n, "k": spec.k, "d": spec.d},
        "max_bias": frac_str(res.max_bias),
        "worst_index": res.worst_index,
        "scanned": res.scanned,
        "worst_source": source_to_json(res.worst_source),
    }
    return 0, lines, payload


def _cmd_lab_search(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    spec = _family_spec(args)
    epsilon = parse_frac(args.epsilon)
    res = extractor_search(
        spec, args.r, trials=args.trials, seed=config.seed, epsilon_target=epsilon, caps=config.caps
    )
    best_text = poly_to_text(res.best_poly) if res.best_poly is not None else "none"
    lines = [
        f"success_fraction: {frac_str(res.success_fraction)}",
        f"successes: {res.successes}",
        f"best_bias: {frac_str(res.best_bias)}",
        f"best: {best_text}",
    ]
    payload = {
        "family": {"n": spec.n, "k": spec.k, "d": spec.d, "r": args.r},
        "trials": res.trials,
        "seed": res.seed,
        "epsilon_target": frac_str(epsilon),
        "success_fraction": frac_str(res.success_fraction),
        "successes": res.successes,
        "best_bias": frac_str(res.best_bias),
        "best": best_text,
    }
    return 0, lines, payload


def _cmd_lab_disperse(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    spec = _family_spec(args)
    f = parse_poly(args.expr, args.n)
    res = disperser_census_via_hitting(f, spec, config.caps)
    lines = [f"all_hit: {_bool(res.all_hit)}", f"scanned: {res.scanned}"]
    failing = None
    if not res.all_hit:
        failing = [poly_to_text(g) for g in res.failing_tuple]
        lines.extend(f"failing: {text}" for text in failing)
    payload = {
        "family": {"n": spec.n, "k": spec.k, "d": spec.d, "r": spec.r},
        "all_hit": res.all_hit,
        "scanned": res.scanned,
        "failing_tuple": failing,
    }
    return (0 if res.all_hit else 1), lines, payload


def _cmd_lab_survey(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    if args.kind == "bias":
        report = random_bias_survey(args.n, args.r, trials=args.trials, seed=config.seed, caps=config.caps)
    else:
        if args.g is None:
            raise ValueError("a correlation survey needs --g for the reference polynomial")
        g = parse_poly(args.g, args.n)
        report = correlation_survey(g, args.n, args.r, trials=args.trials, seed=config.seed, caps=config.caps)
    lines = [f"trials: {args.trials}"]
    lines.extend(f"{name}: {frac_str(q)}" for name, q in sorted(report.quantiles.items()))
    payload = {
        "result_kind": "survey",
        "parameters": report.parameters,
        "seed": report.seed,
        "quantiles": {name: frac_str(q) for name, q in report.quantiles.items()},
        "values": [frac_str(v) for v in report.values],
    }
    return 0, lines, payload


def _cmd_lab_rm(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    code = rm_code(args.m, args.r, config.caps)
    block = 1 << args.m
    distance = code_min_distance(code)
    lines = [f"size: {len(code)}", f"block: {block}", f"distance: {distance}"]
    payload: dict[str, Any] = {
        "m": args.m,
        "r": args.r,
        "size": len(code),
        "block": block,
        "distance": distance,
    }
    exit_code = 0
    if args.radius is not None:
        rng = random.Random(config.seed)
        counts = [rm_list_size(code, code[rng.randrange(len(code))], args.radius)]
        for _ in range(args.centers):
            counts.append(rm_list_size(code, TruthTable(args.m, rng.getrandbits(block)), args.radius))
        worst = max(counts)
        holds = hamming_bound_holds(len(code), block, args.radius, worst)
        lines.extend([f"max_list: {worst}", f"hamming_bound: {_bool(holds)}"])
        payload.update(radius=args.radius, centers=args.centers, max_list=worst, hamming_bound=holds)
        exit_code = 0 if holds else 1
    return exit_code, lines, payload


# ---------------------------------------------------------------------------
# barrier subcommands.


def _cmd_barrier_sidon(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    res = sidon_check(CliqueSet(args.k))
    lines = [f"sidon: {_bool(res.is_sidon)}", f"pairs_scanned: {res.pairs_scanned}"]
    if res.violating_sum is not None:
        lines.append(f"violating_sum: {int_to_bitstring(res.violating_sum, CliqueSet(args.k).n)}")
    payload = {
        "k": args.k,
        "sidon": res.is_sidon,
        "pairs_scanned": res.pairs_scanned,
        "max_ordered_pairs": res.max_ordered_pairs,
        "violating_sum": res.violating_sum,
    }
    return (0 if res.is_sidon else 1), lines, payload


def _cmd_barrier_evade(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    scan = evasiveness_scan(
        args.k,
        args.t,
        mode=args.mode,
        trials=args.trials,
        seed=config.seed,
        affine_shifts=args.affine_shifts,
        workers=config.workers,
        caps=config.caps,
    )
    lines = [
        f"max_fraction: {frac_str(scan.max_fraction)}",
        f"bound_log2: {frac_str(scan.bound_log2)}",
        f"holds: {_bool(scan.holds)}",
        f"sidon_everywhere: {_bool(scan.sidon_everywhere)}",
    ]
    payload = {
        "k": scan.k,
        "t": scan.t,
        "mode": scan.mode,
        "scanned": scan.scanned,
        "max_fraction": frac_str(scan.max_fraction),
        "bound_log2": frac_str(scan.bound_log2),
        "holds": scan.holds,
        "sidon_everywhere": scan.sidon_everywhere,
        "pair_bound_everywhere": scan.pair_bound_everywhere,
        "worst_subspace": source_to_json(scan.worst_subspace),
    }
    return (0 if scan.holds else 1), lines, payload


def _cmd_barrier_mixture(args: argparse.Namespace, config: RunConfig) -> tuple[int, list[str], dict]:
    data = json.loads(Path(args.components).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError("components file must hold a JSON list of affine descriptors")
    from .serialize import source_from_json

    comps = [
        _require_type(source_from_json(entry), AffineSubspace, "mixture component") for entry in data
    ]
    bound = affine_mixture_distance_bound(args.k, comps, verify=args.verify, caps=config.caps)
    payload = {
        "k": args.k,
        "components": len(comps),
        "verified": args.verify,
        "bound": frac_str(bound),
    }
    return 0, [f"bound: {frac_str(bound)}"], payload


# ---------------------------------------------------------------------------
# Parser assembly and dispatch.


def _add_poly_input(parser: argparse.ArgumentParser, file_flag: str = "--file") -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--expr", help="polynomial text, e.g. 'x1*x2 + x3'")
    group.add_argument(file_flag, dest="file", help="file with one polynomial per line")
    parser.add_argument("--n", type=int, help="variable count (default: highest index used)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="PRNG seed echoed into reports (default 0)")
    common.add_argument("--cap-table", type=int, help="max variables for truth tables")
    common.add_argument("--cap-dist", type=int, help="max variables for exact distributions")
    common.add_argument("--cap-family", type=int, help="max enumerated descriptors")
    common.add_argument("--cap-weight", type=int, help="max search candidates")
    common.add_argument("--workers", type=int, help="parallel workers (results are independent of this)")
    common.add_argument("--out", help="write the structured report to this path")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("-v", "--verbose", action="count", default=0, help="echo the resolved config")

    parser = argparse.ArgumentParser(prog="f2lab", description=__doc__)
    top = parser.add_subparsers(dest="command")

    poly = top.add_parser("poly", help="multilinear polynomial utilities").add_subparsers(dest="sub")
    p = poly.add_parser("parse", parents=[common], help="canonicalize polynomials")
    _add_poly_input(p)
    p.set_defaults(handler=_cmd_poly_parse)
    p = poly.add_parser("eval", parents=[common], help="evaluate at a point")
    _add_poly_input(p)
    p.add_argument("--point", required=True, help="little-endian bitstring, first char = x1")
    p.set_defaults(handler=_cmd_poly_eval)
    p = poly.add_parser("bias", parents=[common], help="exact |1 - 2 Pr[f=1]| under uniform input")
    _add_poly_input(p)
    p.set_defaults(handler=_cmd_poly_bias)
    p = poly.add_parser("corr", parents=[common], help="exact correlation of two polynomials")
    p.add_argument("--expr", required=True)
    p.add_argument("--other", required=True)
    p.add_argument("--n", type=int)
    p.set_defaults(handler=_cmd_poly_corr)
    p = poly.add_parser("derive", parents=[common], help="iterated directional derivative")
    _add_poly_input(p)
    p.add_argument("--dirs", required=True, help="comma-separated direction bitstrings")
    p.set_defaults(handler=_cmd_poly_derive)
    p = poly.add_parser("compose", parents=[common], help="substitute polynomials for variables")
    _add_poly_input(p)
    p.add_argument("--entries", required=True, help="file with one replacement polynomial per line")
    p.add_argument("--k", type=int, help="variable count of the replacements")
    p.set_defaults(handler=_cmd_poly_compose)

    cw = top.add_parser("cw", help="common solutions of polynomial systems").add_subparsers(dest="sub")
    p = cw.add_parser("solve", parents=[common], help="list all common solutions")
    _add_poly_input(p)
    p.set_defaults(handler=_cmd_cw_solve)
    p = cw.add_parser("minweight", parents=[common], help="lightest nontrivial common solution")
    _add_poly_input(p)
    p.add_argument("--max-weight", type=int, help="stop the fallback search above this weight")
    p.set_defaults(handler=_cmd_cw_minweight)
    p = cw.add_parser("clprank", parents=[common], help="rank of the symmetric composition matrix")
    _add_poly_input(p)
    p.add_argument("--r", type=int, required=True, help="claimed degree bound")
    p.set_defaults(handler=_cmd_cw_clprank)

    sub = top.add_parser("subspace", help="monochromatic local subspaces").add_subparsers(dest="sub")
    p = sub.add_parser("grow", parents=[common], help="grow a low-column-weight monochromatic subspace")
    _add_poly_input(p)
    p.add_argument("--d", type=int, required=True, help="column-weight budget per coordinate")
    p.add_argument("--r", type=int, required=True, help="degree bound of the polynomial")
    p.set_defaults(handler=_cmd_subspace_grow)
    p = sub.add_parser("verify", parents=[common], help="check a claimed subspace")
    _add_poly_input(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--basis", required=True, help="comma-separated basis bitstrings")
    p.add_argument("--shift", help="shift bitstring (default all zeros)")
    p.set_defaults(handler=_cmd_subspace_verify)
    p = sub.add_parser("oracle", parents=[common], help="exhaustive best dimension (tiny n only)")
    _add_poly_input(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--max-dim", type=int, default=4)
    p.set_defaults(handler=_cmd_subspace_oracle)

    red = top.add_parser("reduce", help="local-source decompositions").add_subparsers(dest="sub")
    p = red.add_parser("to-nobf", parents=[common], help="decompose into fair bit-fixing-style sources")
    p.add_argument("--source", required=True, help="local-source JSON file")
    p.add_argument("--t", type=int, required=True, help="target count of fair bits per branch")
    p.add_argument("--truncate", action="store_true", help="drop branches below the fair-bit target")
    p.set_defaults(handler=_cmd_reduce_to_nobf)
    p = red.add_parser("debias", parents=[common], help="split a biased source into fair components")
    p.add_argument("--source", required=True, help="bit-fixing source JSON file")
    p.set_defaults(handler=_cmd_reduce_debias)
    p = red.add_parser("verify", parents=[common], help="exact distance of the decomposition mixture")
    p.add_argument("--source", required=True, help="local-source JSON file")
    p.add_argument("--t", type=int, required=True)
    p.set_defaults(handler=_cmd_reduce_verify)

    lab = top.add_parser("lab", help="censuses, searches, surveys, and codes").add_subparsers(dest="sub")
    p = lab.add_parser("census", parents=[common], help="exact worst-case bias over a source family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--expr", required=True)
    p.set_defaults(handler=_cmd_lab_census)
    p = lab.add_parser("search", parents=[common], help="random search for low-bias polynomials")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--epsilon", required=True, help="target error as num/den")
    p.set_defaults(handler=_cmd_lab_search)
    p = lab.add_parser("disperse", parents=[common], help="degree-hitting census over generating tuples")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--expr", required=True)
    p.set_defaults(handler=_cmd_lab_disperse)
    p = lab.add_parser("survey", parents=[common], help="bias/correlation distribution of random polynomials")
    p.add_argument("--kind", choices=("bias", "corr"), default="bias")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--g", help="reference polynomial for --kind corr")
    p.add_argument("--no-figure", action="store_true", help="skip the histogram image")
    p.set_defaults(handler=_cmd_lab_survey, _survey=True)
    p = lab.add_parser("rm", parents=[common], help="evaluation-code experiments")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--radius", type=int, help="also measure list sizes at this radius")
    p.add_argument("--centers", type=int, default=10, help="random centers for list sizes")
    p.set_defaults(handler=_cmd_lab_rm)

    bar = top.add_parser("barrier", help="clique-set structure checks").add_subparsers(dest="sub")
    p = bar.add_parser("sidon", parents=[common], help="pair-sum uniqueness of the clique set")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(handler=_cmd_barrier_sidon)
    p = bar.add_parser("evade", parents=[common], help="worst subspace overlap fraction")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--mode", choices=("exhaustive", "random"), default="random")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--affine-shifts", action="store_true")
    p.set_defaults(handler=_cmd_barrier_evade)
    p = bar.add_parser("mixture", parents=[common], help="distance lower bound for affine mixtures")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--components", required=True, help="JSON list of affine descriptors")
    p.add_argument("--verify", action="store_true", help="check against the exact equal-weight mixture")
    p.set_defaults(handler=_cmd_barrier_mixture)

    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "cap_table": getattr(args, "cap_table", None),
        "cap_dist": getattr(args, "cap_dist", None),
        "cap_family": getattr(args, "cap_family", None),
        "cap_weight": getattr(args, "cap_weight", None),
        "workers": getattr(args, "workers", None),
        "format": getattr(args, "format", None),
        "out": getattr(args, "out", None),
        "verbosity": getattr(args, "verbose", 0),
    }
    return load_config(getattr(args, "config", None), overrides)


def dispatch(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; report-emitting variant of ``main`` that returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler: Callable | None = getattr(args, "handler", None)
    if handler is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        config = _resolve(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    if config.verbosity:
        print(f"config: {config.as_report_dict()}", file=sys.stderr)
    try:
        code, lines, payload = handler(args, config)
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return 3
    except (PolySyntaxError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    for line in lines:
        print(line)
    report = {
        "command": f"{args.command} {getattr(args, 'sub', '')}".strip(),
        "config": config.as_report_dict(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "result": payload,
    }
    try:
        if getattr(args, "_survey", False):
            values = [parse_frac(v) for v in payload["values"]]
            written = _write_survey_artifacts(report, values, config, args.no_figure)
            for path in written:
                print(f"wrote: {path}")
        else:
            _write_report(report, config)
            if config.out is not None:
                print(f"wrote: {config.out}")
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
