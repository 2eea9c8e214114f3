"""Stochastic secure encoding: random-bit insertion, systematic encoding and
puncturing of exactly the secret-message positions.

The puncture pattern decides which graph variable nodes carry the k secret
bits; per-degree quotas come from the puncturing distribution, so the
pattern realises pi(x) while the encoder's column permutation keeps those
positions systematic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codegraph import SystematicEncoder, TannerGraph, build_systematic_encoder
from .ensembles import PuncturingDistribution


class PatternError(ValueError):
    """Puncture quotas incompatible with the graph."""


@dataclass(frozen=True)
class PuncturePattern:
    """Sorted variable-node indices punctured before transmission."""

    indices: np.ndarray
    degree_counts: dict[int, int]

    @property
    def k(self) -> int:
        return len(self.indices)

    def mask(self, n_vars: int) -> np.ndarray:
        m = np.zeros(n_vars, dtype=bool)
        m[self.indices] = True
        return m

    def unpunctured(self, n_vars: int) -> np.ndarray:
        return np.flatnonzero(~self.mask(n_vars))


def select_pattern(
    pi: PuncturingDistribution,
    graph: TannerGraph,
    k: int,
    seed: int,
    encoder: SystematicEncoder | None = None,
) -> PuncturePattern:
    """Choose k variable nodes honouring the per-degree quotas of pi.

    Quotas are pi_i * (number of degree-i nodes), apportioned by largest
    remainder to sum exactly k; nodes within a degree are drawn uniformly
    with the given seed.  If an encoder is supplied its secret block must
    already match the drawn pattern.
    """
    if k == 0:
        return PuncturePattern(np.array([], dtype=np.int64), {})
    degrees = graph.var_degrees
    avail = {int(d): np.flatnonzero(degrees == d) for d in np.unique(degrees)}
    raw = {d: pi.fraction(d) * len(avail.get(d, ())) for d in pi.degrees}
    total_raw = sum(raw.values())
    if total_raw <= 0:
        raise PatternError("puncturing distribution has no mass on graph degrees")
    if abs(total_raw - k) > max(8, len(raw)):
        raise PatternError(
            f"quota sum {total_raw:.1f} far from requested k={k}; "
            "puncturing distribution inconsistent with this graph"
        )
    counts = {d: int(np.floor(q)) for d, q in raw.items()}
    short = k - sum(counts.values())
    if short < 0:
        order = sorted(raw, key=lambda d: (raw[d] - counts[d], d))
        for d in order:
            if short == 0:
                break
            if counts[d] > 0:
                counts[d] -= 1
                short += 1
    else:
        order = sorted(raw, key=lambda d: (raw[d] - counts[d], -d), reverse=True)
        i = 0
        while short > 0:
            d = order[i % len(order)]
            if counts[d] < len(avail.get(d, ())):
                counts[d] += 1
                short -= 1
            i += 1
            if i > 10 * len(order) + k:
                raise PatternError("cannot apportion puncture quotas")
    for d, c in counts.items():
        have = len(avail.get(d, ()))
        if c > have:
            raise PatternError(f"quota {c} exceeds the {have} degree-{d} nodes present")
    rng = np.random.default_rng(np.random.SeedSequence((0x9A7, seed)))
    chosen = [rng.choice(avail[d], size=c, replace=False) for d, c in sorted(counts.items()) if c]
    indices = np.sort(np.concatenate(chosen)) if chosen else np.array([], dtype=np.int64)
    pattern = PuncturePattern(indices.astype(np.int64), {d: c for d, c in counts.items() if c})
    if encoder is not None and not np.array_equal(np.sort(encoder.secret_cols), pattern.indices):
        raise PatternError("encoder's secret block does not cover the drawn pattern")
    return pattern


def encoder_for_pattern(graph: TannerGraph, pattern: PuncturePattern) -> SystematicEncoder:
    """Systematic encoder whose trailing message block is the pattern."""
    if pattern.k == 0:
        return build_systematic_encoder(graph, secret_cols=None, k=0)
    return build_systematic_encoder(graph, secret_cols=pattern.indices)


@dataclass(frozen=True)
class SecureCodeword:
    full: np.ndarray          # length n' mother codeword
    transmitted: np.ndarray   # unpunctured bits, length n
    secret: np.ndarray
    random_part: np.ndarray


def secure_encode(
    secret: np.ndarray,
    enc: SystematicEncoder,
    pattern: PuncturePattern,
    rng: np.random.Generator,
) -> SecureCodeword:
    """Draw the random message, encode [random | secret], drop punctured bits."""
    secret = np.asarray(secret, dtype=np.uint8)
    if secret.shape[-1] != pattern.k:
        raise ValueError(f"secret length {secret.shape[-1]} != pattern size {pattern.k}")
    if enc.k != pattern.k:
        raise ValueError("encoder secret block does not match pattern size")
    n_random = enc.l - enc.k
    random_part = rng.integers(0, 2, size=secret.shape[:-1] + (n_random,), dtype=np.uint8)
    msg = np.concatenate([random_part, secret], axis=-1)
    full = enc.encode(msg)
    keep = pattern.unpunctured(enc.n)
    return SecureCodeword(
        full=full,
        transmitted=full[..., keep],
        secret=secret,
        random_part=random_part,
    )


def export_pattern(pattern: PuncturePattern, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for idx in pattern.indices:
            fh.write(f"{int(idx)}\n")


def load_pattern(path) -> PuncturePattern:
    with open(path, "r", encoding="utf-8") as fh:
        idx = np.array([int(line) for line in fh if line.strip()], dtype=np.int64)
    return PuncturePattern(np.sort(idx), {})
