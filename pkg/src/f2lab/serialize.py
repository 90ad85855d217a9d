"""Lossless JSON round-tripping for source descriptions.

Schema: one object per source with a "type" discriminator.
  local:  {"type": "local", "m": int, "outputs": [{"support": [seed indices], "table": bitstring}]}
  nobf:   {"type": "nobf", "n": int, "good": [positions], "biases": [["num/den", favored]],
           "outputs": [{"support": [good ordinals], "table": bitstring}]}  (one per non-good
           position, ascending)
  affine: {"type": "affine", "n": int, "shift": bitstring, "basis": [bitstring]}
  clique: {"type": "clique", "k": int}  (expands to its local source on load)
All indices are 0-based; bitstrings are little-endian over the support assignment.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .sources import AffineSubspace, LocalSource, NobfSource, SourceLike, clique_source
from .util import bitstring_to_int, frac_str, int_to_bitstring, parse_frac

__all__ = ["source_from_json", "source_to_json", "load_source", "dump_source"]


def _table_str(table: int, support_size: int) -> str:
    return int_to_bitstring(table, 1 << support_size)


def source_to_json(source: LocalSource | NobfSource | AffineSubspace) -> dict[str, Any]:
    if isinstance(source, LocalSource):
        return {
            "type": "local",
            "m": source.m,
            "outputs": [
                {"support": list(support), "table": _table_str(table, len(support))}
                for support, table in source.outputs
            ],
        }
    if isinstance(source, NobfSource):
        return {
            "type": "nobf",
            "n": source.n,
            "good": list(source.good_positions),
            "biases": [[frac_str(p), fav] for p, fav in source.biases],
            "outputs": [
                {"support": list(support), "table": _table_str(table, len(support))}
                for _, support, table in source.bad_functions
            ],
        }
    if isinstance(source, AffineSubspace):
        return {
            "type": "affine",
            "n": source.ambient,
            "shift": int_to_bitstring(source.shift, source.ambient),
            "basis": [int_to_bitstring(v, source.ambient) for v in source.basis],
        }
    raise TypeError(f"cannot serialize {type(source).__name__}")


def source_from_json(data: dict[str, Any]) -> LocalSource | NobfSource | AffineSubspace:
    kind = data.get("type")
    if kind == "local":
        outputs = tuple(
            (tuple(entry["support"]), bitstring_to_int(entry["table"], 1 << len(entry["support"])))
            for entry in data["outputs"]
        )
        return LocalSource(data["m"], outputs)
    if kind == "nobf":
        n = data["n"]
        good = tuple(data["good"])
        biases = tuple((parse_frac(p), int(fav)) for p, fav in data["biases"])
        bad_positions = [j for j in range(n) if j not in set(good)]
        entries = data["outputs"]
        if len(entries) != len(bad_positions):
            raise ValueError(
                f"expected {len(bad_positions)} bad-bit outputs, got {len(entries)}"
            )
        bad = tuple(
            (j, tuple(e["support"]), bitstring_to_int(e["table"], 1 << len(e["support"])))
            for j, e in zip(bad_positions, entries)
        )
        return NobfSource(n, good, biases, bad)
    if kind == "affine":
        n = data["n"]
        return AffineSubspace(
            n,
            bitstring_to_int(data["shift"], n),
            tuple(bitstring_to_int(v, n) for v in data["basis"]),
        )
    if kind == "clique":
        return clique_source(data["k"])
    raise ValueError(f"unknown source type {kind!r}")


def dump_source(source: LocalSource | NobfSource | AffineSubspace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(source_to_json(source), fh, indent=2)
        fh.write("\n")


def load_source(path: str) -> LocalSource | NobfSource | AffineSubspace:
    with open(path, "r", encoding="utf-8") as fh:
        return source_from_json(json.load(fh))
