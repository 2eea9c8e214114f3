"""Degree-distribution algebra, rate algebra and puncturing distributions.

An LDPC ensemble is described by sparse edge-perspective polynomials
lambda(x) = sum_i lambda_i x^(i-1) and rho(x) = sum_i rho_i x^(i-1),
stored here as degree -> coefficient maps.  A puncturing distribution
assigns to each variable-node degree the fraction pi_i of nodes of that
degree that are punctured before transmission.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

COEFF_TOL = 1e-9
RENORM_WARN = 1e-3


class EnsembleError(ValueError):
    """Invalid degree distribution or puncturing distribution."""


class RateError(ValueError):
    """Inconsistent or infeasible rate combination."""


def _validate_dist(dist: dict[int, float], name: str) -> None:
    if not dist:
        raise EnsembleError(f"{name}: empty distribution")
    for deg, coeff in dist.items():
        if deg < 2:
            raise EnsembleError(f"{name}: degree {deg} < 2")
        if not (-COEFF_TOL <= coeff <= 1.0 + COEFF_TOL):
            raise EnsembleError(f"{name}: coefficient {coeff} for degree {deg} outside [0,1]")
    total = math.fsum(dist.values())
    if abs(total - 1.0) > COEFF_TOL:
        raise EnsembleError(f"{name}: coefficients sum to {total}, expected 1")


def _normalise(dist: dict[int, float], name: str) -> dict[int, float]:
    """Drop zero entries and renormalise; warn if the adjustment is large."""
    negative = [d for d, c in dist.items() if c < -COEFF_TOL]
    if negative:
        raise EnsembleError(f"{name}: negative coefficients at degrees {sorted(negative)}")
    cleaned = {int(d): float(c) for d, c in dist.items() if c > 0.0}
    if not cleaned:
        raise EnsembleError(f"{name}: no positive coefficients")
    total = math.fsum(cleaned.values())
    if abs(total - 1.0) > RENORM_WARN:
        warnings.warn(
            f"{name}: coefficients sum to {total:.6f}; renormalising "
            f"(adjustment exceeds {RENORM_WARN})",
            stacklevel=3,
        )
    return {d: c / total for d, c in sorted(cleaned.items())}


@dataclass(frozen=True)
class Ensemble:
    """Edge-perspective variable/check degree distributions of an LDPC ensemble."""

    var_edge: dict[int, float]
    chk_edge: dict[int, float]

    def __post_init__(self):
        object.__setattr__(self, "var_edge", _normalise(self.var_edge, "lambda"))
        object.__setattr__(self, "chk_edge", _normalise(self.chk_edge, "rho"))
        _validate_dist(self.var_edge, "lambda")
        _validate_dist(self.chk_edge, "rho")

    @property
    def max_var_degree(self) -> int:
        return max(self.var_edge)

    @property
    def max_chk_degree(self) -> int:
        return max(self.chk_edge)

    @property
    def var_degrees(self) -> tuple[int, ...]:
        return tuple(sorted(self.var_edge))

    def inv_avg_var_degree(self) -> float:
        """sum_i lambda_i / i, the reciprocal of the average variable degree."""
        return math.fsum(c / d for d, c in self.var_edge.items())

    def inv_avg_chk_degree(self) -> float:
        return math.fsum(c / d for d, c in self.chk_edge.items())

    @classmethod
    def from_node_perspective(cls, var_node: dict[int, float], chk_node: dict[int, float]) -> "Ensemble":
        """Build from node-perspective fractions L_i, R_i."""
        ve = {d: d * c for d, c in var_node.items()}
        ce = {d: d * c for d, c in chk_node.items()}
        return cls(ve, ce)


def code_rate(ens: Ensemble) -> float:
    """Design rate 1 - (sum rho_i/i) / (sum lambda_i/i)."""
    return 1.0 - ens.inv_avg_chk_degree() / ens.inv_avg_var_degree()


def node_perspective(ens: Ensemble) -> dict[int, float]:
    """Variable-node fractions L_i = (lambda_i/i) / sum_j (lambda_j/j)."""
    denom = ens.inv_avg_var_degree()
    return {d: (c / d) / denom for d, c in ens.var_edge.items()}


def check_node_perspective(ens: Ensemble) -> dict[int, float]:
    denom = ens.inv_avg_chk_degree()
    return {d: (c / d) / denom for d, c in ens.chk_edge.items()}


@dataclass(frozen=True)
class PuncturingDistribution:
    """Per-degree puncture fractions pi_i for variable nodes."""

    pi: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for deg, frac in self.pi.items():
            if not (-COEFF_TOL <= frac <= 1.0 + COEFF_TOL):
                raise EnsembleError(f"pi: fraction {frac} for degree {deg} outside [0,1]")
            frac = min(max(float(frac), 0.0), 1.0)
            if frac > 0.0:
                cleaned[int(deg)] = frac
        object.__setattr__(self, "pi", dict(sorted(cleaned.items())))

    def fraction(self, degree: int) -> float:
        return self.pi.get(degree, 0.0)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(sorted(self.pi))

    def validate_for(self, ens: Ensemble) -> None:
        extra = [d for d in self.pi if d not in ens.var_edge]
        if extra:
            raise EnsembleError(f"pi has mass on degrees absent from the ensemble: {extra}")

    def max_delta(self, other: "PuncturingDistribution") -> float:
        degs = set(self.pi) | set(other.pi)
        if not degs:
            return 0.0
        return max(abs(self.fraction(d) - other.fraction(d)) for d in degs)


def random_puncturing(r_p: float, ens: Ensemble) -> PuncturingDistribution:
    """Uniform puncturing: pi_i = R_p on every active variable degree."""
    if not 0.0 <= r_p < 1.0:
        raise EnsembleError(f"puncture rate {r_p} outside [0,1)")
    return PuncturingDistribution({d: r_p for d in ens.var_edge})


def puncturing_rate(pi: PuncturingDistribution, ens: Ensemble) -> float:
    """Overall puncture rate R_p = sum_i L_i pi_i."""
    pi.validate_for(ens)
    lnode = node_perspective(ens)
    return math.fsum(lnode[d] * pi.fraction(d) for d in lnode)


@dataclass(frozen=True)
class RateSet:
    """Mutually consistent rate/length tuple for one user's secure code.

    r_m: mother code rate l/n'.      r_p: puncture rate k/n'.
    r_s: secure rate k/n.            r_d: design rate l/n.
    k secret bits, l message bits, n transmitted bits, n' mother length.
    """

    r_m: float
    r_p: float
    r_s: float
    r_d: float
    k: int
    l: int
    n: int
    n_prime: int


def derive_rates(r_s: float, r_m: float, n: int) -> RateSet:
    """Rate algebra: from the secure rate, mother rate and transmitted length.

    k = round(n * r_s), n' = n + k, l = round(n' * r_m); the returned rates
    are recomputed from the rounded integers so the eight fields agree.
    """
    if r_s < 0.0:
        raise RateError(f"secure rate {r_s} < 0")
    if not 0.0 < r_m <= 1.0:
        raise RateError(f"mother rate {r_m} outside (0,1]")
    if n <= 0:
        raise RateError(f"transmitted length {n} <= 0")
    k = round(n * r_s)
    n_prime = n + k
    l = round(n_prime * r_m)
    if l < k:
        raise RateError(
            f"message length l={l} smaller than secret length k={k}: "
            f"mother rate {r_m} cannot cover puncture rate {k / n_prime:.4f}"
        )
    if l > n_prime:
        raise RateError(f"message length l={l} exceeds mother length n'={n_prime}")
    return RateSet(
        r_m=l / n_prime,
        r_p=k / n_prime,
        r_s=k / n,
        r_d=l / n,
        k=k,
        l=l,
        n=n,
        n_prime=n_prime,
    )


# ---------------------------------------------------------------------------
# Structured text files:  [meta] kind/perspective, then degree = coefficient
# lines in [variable]/[check] for ensembles or [pi] for puncturing patterns.
# ---------------------------------------------------------------------------

def _parse_sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current = "meta"
    sections[current] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise EnsembleError(f"unparseable line in distribution file: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        sections[current][key.lower()] = value
    return sections


def _section_dist(section: dict[str, str], name: str) -> dict[int, float]:
    dist = {}
    for key, value in section.items():
        try:
            deg = int(key)
            coeff = float(value)
        except ValueError as exc:
            raise EnsembleError(f"{name}: bad entry {key!r} = {value!r}") from exc
        dist[deg] = coeff
    if not dist:
        raise EnsembleError(f"{name}: no degree entries")
    return dist


def loads_ensemble(text: str) -> Ensemble:
    sections = _parse_sections(text)
    meta = sections.get("meta", {})
    kind = meta.get("kind", "ensemble").lower()
    if kind != "ensemble":
        raise EnsembleError(f"expected an ensemble file, got kind={kind!r}")
    perspective = meta.get("perspective", "edge").lower()
    if perspective not in ("edge", "node"):
        raise EnsembleError(f"unknown perspective {perspective!r}")
    if "variable" not in sections or "check" not in sections:
        raise EnsembleError("ensemble file needs [variable] and [check] sections")
    var = _section_dist(sections["variable"], "variable")
    chk = _section_dist(sections["check"], "check")
    if perspective == "node":
        return Ensemble.from_node_perspective(var, chk)
    return Ensemble(var, chk)


def load_ensemble(path) -> Ensemble:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_ensemble(fh.read())


def dumps_ensemble(ens: Ensemble, comment: str = "") -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines += ["[meta]", "kind = ensemble", "perspective = edge", "", "[variable]"]
    lines += [f"{d} = {c:.10g}" for d, c in ens.var_edge.items()]
    lines += ["", "[check]"]
    lines += [f"{d} = {c:.10g}" for d, c in ens.chk_edge.items()]
    return "\n".join(lines) + "\n"


def loads_pi(text: str) -> PuncturingDistribution:
    sections = _parse_sections(text)
    meta = sections.get("meta", {})
    kind = meta.get("kind", "puncturing").lower()
    if kind != "puncturing":
        raise EnsembleError(f"expected a puncturing file, got kind={kind!r}")
    if "pi" not in sections:
        raise EnsembleError("puncturing file needs a [pi] section")
    dist = _section_dist(sections["pi"], "pi")
    return PuncturingDistribution(dist)


def load_pi(path) -> PuncturingDistribution:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_pi(fh.read())


def dumps_pi(pi: PuncturingDistribution, comment: str = "", meta: dict | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines += ["[meta]", "kind = puncturing"]
    for key, value in (meta or {}).items():
        lines.append(f"{key} = {value}")
    lines += ["", "[pi]"]
    lines += [f"{d} = {c:.10g}" for d, c in pi.pi.items()]
    return "\n".join(lines) + "\n"


def save_pi(pi: PuncturingDistribution, path, comment: str = "", meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_pi(pi, comment=comment, meta=meta))
