"""Productivity metrics: source-line counting under configurable comment
rules, normalized pairwise code distance, code divergence over a version
set, and relative development-time productivity."""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations

__all__ = [
    "CommentRules",
    "VersionRecord",
    "count_sloc",
    "pairwise_distance",
    "divergence",
    "rdtp",
]


@dataclass(frozen=True)
class CommentRules:
    """Line and block comment markers; markers inside string literals are
    not recognized (lines whose only non-comment text is a string literal
    containing a marker may be miscounted, which is acceptable for a
    source-size metric)."""

    line_markers: tuple[str, ...] = ("//",)
    block_pairs: tuple[tuple[str, str], ...] = (("/*", "*/"),)

    @classmethod
    def parse(cls, spec: str) -> "CommentRules":
        """Parse 'line=//,block=/*:*/' style descriptors; multiple markers
        separated by ';'."""
        line_markers: list[str] = []
        block_pairs: list[tuple[str, str]] = []
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ValueError(f"bad comment rule {part!r}")
            key, value = part.split("=", 1)
            if key == "line":
                line_markers += [m for m in value.split(";") if m]
            elif key == "block":
                for pair in value.split(";"):
                    if not pair:
                        continue
                    if ":" not in pair:
                        raise ValueError(f"block rule needs start:end, got {pair!r}")
                    start, end = pair.split(":", 1)
                    if not start or not end:
                        raise ValueError(f"block rule needs start:end, got {pair!r}")
                    block_pairs.append((start, end))
            else:
                raise ValueError(f"unknown comment rule kind {key!r}")
        return cls(tuple(line_markers), tuple(block_pairs))


@dataclass(frozen=True)
class VersionRecord:
    """One code version: either a measured SLOC total or a changed-line
    count relative to a shared base (sloc = base + diff)."""

    label: str
    sloc: int

    def __post_init__(self):
        if self.sloc < 0:
            raise ValueError("sloc must be non-negative")


def _count_line(text: str, rules: CommentRules, in_block: str | None):
    """Scan one line; returns (has_code, in_block_end_marker)."""
    i = 0
    has_code = False
    n = len(text)
    while i < n:
        if in_block is not None:
            end = text.find(in_block, i)
            if end < 0:
                return has_code, in_block
            i = end + len(in_block)
            in_block = None
            continue
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        rest = text[i:]
        if any(rest.startswith(m) for m in rules.line_markers):
            return has_code, None
        opened = False
        for start, end in rules.block_pairs:
            if rest.startswith(start):
                in_block = end
                i += len(start)
                opened = True
                break
        if opened:
            continue
        has_code = True
        i += 1
    return has_code, in_block


def count_sloc(paths, rules: CommentRules | None = None) -> int:
    """Count lines that are neither blank nor pure comment across files
    and directories (recursed in sorted order)."""
    if rules is None:
        rules = CommentRules()
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    total = 0
    for path in paths:
        if os.path.isdir(path):
            for root, dirs, files in os.walk(path):
                dirs.sort()
                for name in sorted(files):
                    total += _count_file(os.path.join(root, name), rules)
        else:
            total += _count_file(path, rules)
    return total


def _count_file(path, rules: CommentRules) -> int:
    with open(path, encoding="utf-8", errors="replace") as fh:
        lines = fh.read().splitlines()
    count = 0
    in_block: str | None = None
    for line in lines:
        has_code, in_block = _count_line(line, rules, in_block)
        if has_code:
            count += 1
    return count


def pairwise_distance(a: VersionRecord, b: VersionRecord) -> float:
    """|SLOC(a) - SLOC(b)| / min(SLOC(a), SLOC(b))."""
    m = min(a.sloc, b.sloc)
    if m <= 0:
        raise ValueError("pairwise distance needs positive line counts")
    return abs(a.sloc - b.sloc) / m


def divergence(versions) -> float:
    """Mean pairwise distance over all unordered version pairs."""
    versions = list(versions)
    if len(versions) < 2:
        raise ValueError("divergence needs at least two versions")
    pairs = list(combinations(versions, 2))
    return sum(pairwise_distance(a, b) for a, b in pairs) / len(pairs)


def rdtp(speedup: float, relative_effort: float) -> float:
    """Relative development-time productivity: speedup / relative effort."""
    if relative_effort <= 0:
        raise ValueError("relative effort must be positive")
    return speedup / relative_effort
