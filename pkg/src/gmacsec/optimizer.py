"""Linear-program maximisation of the puncture rate under EXIT convergence.

For a fixed noise target the variable-node transfer is linear in the
per-degree puncture fractions, so requiring the decoding tunnel to stay
open on a grid of check-side mutual informations gives a small dense LP:
maximise the node-perspective puncture mass subject to one tunnel row per
grid point, a mass cap, and box bounds.  The two users are optimised
alternately until their distributions stop moving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import Ensemble, PuncturingDistribution, code_rate, node_perspective, puncturing_rate
from . import exit_analysis as xa


class LPError(RuntimeError):
    """Simplex failure (cycling guard or malformed input)."""


def simplex_maximize(c, a_ub, b_ub, upper):
    """Maximise c.x subject to a_ub.x <= b_ub and 0 <= x <= upper.

    Dense tableau primal simplex with Bland's rule; upper bounds join the
    constraint rows.  Returns (x, feasible).  Assumes a_ub >= 0 so x = 0 is
    feasible exactly when b_ub >= 0.
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float)
    upper = np.asarray(upper, dtype=float)
    nvar = len(c)
    a = np.vstack([a, np.eye(nvar)])
    b = np.concatenate([b, upper])
    if (b < 0).any():
        return np.zeros(nvar), False
    m = len(b)
    # tableau: [A | I | b], objective row last
    tab = np.zeros((m + 1, nvar + m + 1))
    tab[:m, :nvar] = a
    tab[:m, nvar:nvar + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :nvar] = -c
    basis = list(range(nvar, nvar + m))
    tol = 1e-9
    for _ in range(20000):
        red = tab[m, :-1]
        enter = -1
        for j in range(nvar + m):                  # Bland: first improving column
            if red[j] < -tol:
                enter = j
                break
        if enter < 0:
            break
        col = tab[:m, enter]
        ratios = np.where(col > tol, tab[:m, -1] / np.where(col > tol, col, 1.0), np.inf)
        if not np.isfinite(ratios).any():
            raise LPError("unbounded LP (missing box bound?)")
        leave = int(np.lexsort((basis, ratios))[0])    # Bland: lowest basis index on ties
        piv = tab[leave, enter]
        tab[leave] /= piv
        for r in range(m + 1):
            if r != leave and abs(tab[r, enter]) > 0:
                tab[r] -= tab[r, enter] * tab[leave]
        basis[leave] = enter
    else:
        raise LPError("simplex iteration limit")
    x = np.zeros(nvar)
    for r, j in enumerate(basis):
        if j < nvar:
            x[j] = tab[r, -1]
    return np.clip(x, 0.0, upper), True


@dataclass
class LPInstance:
    degrees: list[int]
    objective: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    upper: np.ndarray


def build_lp(
    ens: Ensemble,
    pi_other: PuncturingDistribution,
    ens_other: Ensemble,
    p1: float,
    p2: float,
    sigma_target: float,
    user: int,
    grid: int = 100,
    eps: float = 1e-4,
    mass_cap: float | None = None,
) -> LPInstance:
    """Tunnel constraints sampled on a grid of check a-priori MI values.

    At grid value x both users are taken to sit at the same check-side MI,
    so the interferer's knowledge is its own check transfer at x.
    """
    if grid < 50:
        raise ValueError("grid must have at least 50 points")
    degrees = list(ens.var_degrees)
    lam = np.array([ens.var_edge[d] for d in degrees])
    lnode = node_perspective(ens)
    lvec = np.array([lnode[d] for d in degrees])
    cap = code_rate(ens) if mass_cap is None else mass_cap

    rows = []
    rhs = []
    for x in np.linspace(1e-3, 1.0 - 1e-3, grid):
        i_av = xa.I_Ec(x, ens)
        i_av_other = xa.I_Ec(x, ens_other)
        i_es = xa.I_Es(i_av_other, pi_other, ens_other, p1, p2, sigma_target, user)
        sig_av = xa.J_inv(i_av)
        sig_es = xa.J_inv(i_es)
        spread = (np.array(degrees) - 1) * sig_av * sig_av
        punc = xa.J_fast(np.sqrt(spread))
        unp = xa.J_fast(np.sqrt(sig_es * sig_es + spread))
        # sum_i lam_i [(1-pi_i) unp_i + pi_i punc_i] >= x + eps
        rows.append(lam * (unp - punc))
        rhs.append(float((lam * unp).sum()) - x - eps)
    rows.append(lvec)
    rhs.append(cap)
    return LPInstance(
        degrees=degrees,
        objective=lvec,
        rows=np.array(rows),
        rhs=np.array(rhs),
        upper=np.ones(len(degrees)),
    )


@dataclass
class OptimizedPi:
    pi: PuncturingDistribution
    feasible: bool
    rate: float
    sigma_target: float


def optimize_pi(
    ens: Ensemble,
    pi_other: PuncturingDistribution,
    ens_other: Ensemble,
    p1: float,
    p2: float,
    sigma_target: float,
    user: int,
    grid: int = 100,
    eps: float = 1e-4,
    mass_cap: float | None = None,
    verify: bool = True,
) -> OptimizedPi:
    """Maximal-rate puncturing for one user against a fixed interferer.

    The result is post-verified with the coupled recursion at the target;
    if that fails the tunnel slack is widened and the LP re-solved.
    """
    current_eps = eps
    for _ in range(4):
        lp = build_lp(ens, pi_other, ens_other, p1, p2, sigma_target, user,
                      grid=grid, eps=current_eps, mass_cap=mass_cap)
        x, feasible = simplex_maximize(lp.objective, lp.rows, lp.rhs, lp.upper)
        if not feasible:
            return OptimizedPi(PuncturingDistribution({}), False, 0.0, sigma_target)
        pi = PuncturingDistribution({d: float(v) for d, v in zip(lp.degrees, x) if v > 1e-12})
        if not verify:
            return OptimizedPi(pi, True, puncturing_rate(pi, ens), sigma_target)
        pis = (pi, pi_other) if user == 1 else (pi_other, pi)
        enss = (ens, ens_other) if user == 1 else (ens_other, ens)
        if xa.converges(enss[0], enss[1], pis[0], pis[1], p1, p2, sigma_target):
            return OptimizedPi(pi, True, puncturing_rate(pi, ens), sigma_target)
        current_eps *= 8.0
    raise LPError("post-verification failed even with widened tunnel slack")


@dataclass
class AlternationResult:
    pi1: PuncturingDistribution
    pi2: PuncturingDistribution
    rates: tuple[float, float]
    rounds: int
    converged: bool
    feasible: bool


def _symmetric_inputs(ens1, ens2, p1, p2, mass_caps) -> bool:
    return (p1 == p2 and mass_caps[0] == mass_caps[1]
            and ens1.var_edge == ens2.var_edge and ens1.chk_edge == ens2.chk_edge)


def _blend(prev: PuncturingDistribution, new: PuncturingDistribution,
           weight: float) -> PuncturingDistribution:
    degs = set(prev.pi) | set(new.pi)
    return PuncturingDistribution({
        d: (1 - weight) * prev.fraction(d) + weight * new.fraction(d) for d in degs
    })


def alternate(
    ens1: Ensemble,
    ens2: Ensemble,
    p1: float,
    p2: float,
    sigma_target: float,
    max_rounds: int = 12,
    grid: int = 100,
    delta_tol: float = 1e-3,
    mass_caps: tuple[float | None, float | None] = (None, None),
) -> AlternationResult:
    """Alternating per-user optimisation until the pair stops moving.

    Identical users get a damped simultaneous iteration so the fixed point
    stays symmetric; otherwise the users are optimised sequentially, each
    against the other's latest distribution.
    """
    pi1 = PuncturingDistribution({})
    pi2 = PuncturingDistribution({})
    feasible = True
    rounds = 0
    if _symmetric_inputs(ens1, ens2, p1, p2, mass_caps):
        pi = PuncturingDistribution({})
        for rounds in range(1, max_rounds + 1):
            r = optimize_pi(ens1, pi, ens2, p1, p2, sigma_target, user=1,
                            grid=grid, mass_cap=mass_caps[0], verify=False)
            feasible = r.feasible
            nxt = _blend(pi, r.pi, 0.5)
            d = nxt.max_delta(pi)
            pi = nxt
            if d <= delta_tol:
                break
        converged = d <= delta_tol
        # damping targets the self-consistent pair; back off to the
        # convergence boundary if the joint recursion still disagrees
        scale = 1.0
        while scale > 0.5 and not xa.converges(ens1, ens2, pi, pi, p1, p2, sigma_target):
            scale -= 0.02
            pi = PuncturingDistribution({deg: scale * f for deg, f in pi.pi.items()})
        rate = puncturing_rate(pi, ens1)
        return AlternationResult(pi, pi, (rate, rate), rounds, converged, feasible)

    for rounds in range(1, max_rounds + 1):
        r1 = optimize_pi(ens1, pi2, ens2, p1, p2, sigma_target, user=1,
                         grid=grid, mass_cap=mass_caps[0])
        r2 = optimize_pi(ens2, r1.pi, ens1, p1, p2, sigma_target, user=2,
                         grid=grid, mass_cap=mass_caps[1])
        feasible = r1.feasible and r2.feasible
        d = max(r1.pi.max_delta(pi1), r2.pi.max_delta(pi2))
        pi1, pi2 = r1.pi, r2.pi
        if d <= delta_tol:
            return AlternationResult(
                pi1, pi2, (puncturing_rate(pi1, ens1), puncturing_rate(pi2, ens2)),
                rounds, True, feasible,
            )
    return AlternationResult(
        pi1, pi2, (puncturing_rate(pi1, ens1), puncturing_rate(pi2, ens2)),
        rounds, False, feasible,
    )


def design_for_rates(
    ens1: Ensemble,
    ens2: Ensemble,
    p1: float,
    p2: float,
    target_rp: tuple[float, float],
    lo: float = 0.2,
    hi: float = 2.0,
    tol: float = 2e-3,
    grid: int = 100,
) -> tuple[AlternationResult, float]:
    """Largest noise target at which both users reach their puncture rates.

    This mirrors the design workflow: the noise target is searched until the
    alternating optimisation saturates the requested rate caps.
    """
    def reaches(sigma):
        res = alternate(ens1, ens2, p1, p2, sigma, grid=grid, mass_caps=target_rp)
        ok = (res.rates[0] >= target_rp[0] - 1e-3 and res.rates[1] >= target_rp[1] - 1e-3
              and res.feasible)
        return ok, res

    ok_lo, res_lo = reaches(lo)
    if not ok_lo:
        raise LPError(f"rate targets unreachable even at sigma={lo}")
    ok_hi, _ = reaches(hi)
    if ok_hi:
        return reaches(hi)[1], hi
    best = (res_lo, lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok, res = reaches(mid)
        if ok:
            best = (res, mid)
            lo = mid
        else:
            hi = mid
    return best
