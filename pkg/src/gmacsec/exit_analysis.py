"""Two-user EXIT chart analysis for punctured LDPC codes on the Gaussian MAC.

Mutual information is tracked under the consistent-Gaussian message model
N(sigma^2/2, sigma^2) through the J function.  The state nodes coupling the
two single-user decoders are handled by four Gauss-weighted integrals giving
the conditional mean of the state-to-variable LLR for each user and each
value (+1/-1) of the interfering bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

LOG2 = math.log(2.0)
SIGMA_CAP = 40.0          # J(40) is 1 to well below any tolerance used here
GH_ORDER = 160

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(GH_ORDER)
_SQRT_PI = math.sqrt(math.pi)


class NumericsError(ArithmeticError):
    """Quadrature or root finding failed to converge."""


def _log1pexp(x):
    return np.logaddexp(0.0, x)


def J(sigma):
    """Mutual information of a consistent Gaussian LLR with std dev sigma."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be >= 0")
    s = sigma[..., None]
    # l = sqrt(2)*sigma*z + sigma^2/2 turns the defining integral into
    # Gauss-Hermite form with integrand log2(1+exp(-l)).
    arg = -(math.sqrt(2.0) * s * _GH_NODES + 0.5 * s * s)
    vals = 1.0 - (_GH_WEIGHTS * _log1pexp(arg)).sum(axis=-1) / (_SQRT_PI * LOG2)
    vals = np.clip(vals, 0.0, 1.0)
    return vals if vals.ndim else float(vals)


# Dense monotone table for the hot paths; J itself stays quadrature-exact.
_J_GRID = np.concatenate([np.linspace(0.0, 10.0, 4001), np.linspace(10.005, SIGMA_CAP, 1500)])
_J_TABLE = J(_J_GRID)


def J_fast(sigma):
    """Table interpolation of J, max error well below 1e-6 on [0, 40]."""
    return np.interp(sigma, _J_GRID, _J_TABLE)


def J_inv(mi):
    """Inverse of J by bisection; capped at sigma = 40 as mi -> 1."""
    scalar = np.isscalar(mi)
    mi_arr = np.atleast_1d(np.asarray(mi, dtype=float))
    if np.any(mi_arr < 0.0) or np.any(mi_arr >= 1.0 + 1e-12):
        raise ValueError("mutual information must lie in [0, 1)")
    out = np.interp(mi_arr, _J_TABLE, _J_GRID)
    # refine with bisection on the exact quadrature
    lo = np.maximum(out - 0.02, 0.0)
    hi = np.minimum(out + 0.02, SIGMA_CAP)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        below = J(mid) < mi_arr
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out[mi_arr <= 0.0] = 0.0
    return float(out[0]) if scalar else out


def _j_inv_fast(mi: float) -> float:
    """Table inverse used in the recursion hot path (error well under 1e-5)."""
    return float(np.interp(mi, _J_TABLE, _J_GRID))


def _f_core(mu: float, q_self: float, q_other: float, branch: int) -> float:
    """Conditional mean of the state-to-variable LLR for one user.

    branch=+1: interfering bit +1; branch=-1: interfering bit -1.  Powers are
    already normalised by the channel noise variance.  mu is the mean of the
    interferer's variable-to-state LLR under the consistent-Gaussian model.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    spread = math.sqrt(max(4.0 * mu + 8.0 * q_other, 0.0))
    cross = 4.0 * math.sqrt(q_self * q_other)
    z = _GH_NODES
    if branch > 0:
        a = spread * z + mu + 2.0 * q_other
        integrand = _log1pexp(a) - _log1pexp(-a - cross)
        tail = -mu + 2.0 * (q_self - q_other)
    else:
        a = -spread * z - mu - 2.0 * q_other
        integrand = _log1pexp(a) - _log1pexp(-a - cross)
        tail = mu + 2.0 * (math.sqrt(q_self) - math.sqrt(q_other)) ** 2
    val = float((_GH_WEIGHTS * integrand).sum() / _SQRT_PI) + tail
    if not math.isfinite(val):
        raise NumericsError(f"state-node integral diverged (mu={mu}, q={q_self},{q_other})")
    return val


def F(mu: float, p1: float, p2: float, sigma_n2: float, user: int, sign: int) -> float:
    """State-node LLR-mean integral for the given user and interferer sign.

    The printed closed forms fix sigma_N^2 = 1; the general case rescales
    both powers by the noise variance.
    """
    q1 = p1 / sigma_n2
    q2 = p2 / sigma_n2
    if user == 1:
        return _f_core(mu, q1, q2, sign)
    if user == 2:
        return _f_core(mu, q2, q1, sign)
    raise ValueError(f"user must be 1 or 2, got {user}")


def _f_minus_user2_printed(mu: float, p1: float, p2: float, sigma_n2: float) -> float:
    """The opposite-sign branch for user 2 with the sign pattern as printed.

    Kept only for the user-swap symmetry cross-check; it is the negative of
    the role-swapped form and goes negative whenever the interferer is
    informative, so it cannot feed J(sqrt(2F)).
    """
    q1 = p1 / sigma_n2
    q2 = p2 / sigma_n2
    spread = math.sqrt(4.0 * mu + 8.0 * q1)
    cross = 4.0 * math.sqrt(q1 * q2)
    a = spread * _GH_NODES + mu + 2.0 * q1
    integrand = _log1pexp(a - cross) - _log1pexp(-a)
    tail = -mu - 2.0 * (math.sqrt(q2) - math.sqrt(q1)) ** 2
    return float((_GH_WEIGHTS * integrand).sum() / _SQRT_PI) + tail


def check_user_swap_symmetry(p1: float, p2: float, sigma_n2: float = 1.0,
                             mus=(0.0, 0.5, 2.0, 8.0), tol: float = 1e-9) -> bool:
    """Report whether the printed opposite-sign form for user 2 matches the
    role-swapped one.  It does not (the printed form is its negative); the
    analysis uses the role-swapped form throughout."""
    ok = True
    for mu in mus:
        printed = _f_minus_user2_printed(mu, p1, p2, sigma_n2)
        swapped = F(mu, p1, p2, sigma_n2, user=2, sign=-1)
        if abs(printed - swapped) > tol:
            ok = False
    if not ok:
        warnings.warn(
            "opposite-sign state integral for user 2: printed sign pattern is "
            "the negative of the user-swapped form; using the user-swapped form",
            stacklevel=2,
        )
    return ok


def mu_from_other(i_av_other: float, ens_other, pi_other) -> float:
    """Mean of the interferer's variable-to-state LLR.

    State nodes attach only to unpunctured variable nodes, and a degree-i
    node forwards the sum of all i check messages, so the mean is
    0.5 * sum_i L_i * i * (1 - pi_i) * J_inv(I_Av)^2.
    """
    from .ensembles import node_perspective

    sig2 = _j_inv_fast(i_av_other) ** 2
    lnode = node_perspective(ens_other)
    return 0.5 * sig2 * math.fsum(
        lnode[d] * d * (1.0 - pi_other.fraction(d)) for d in lnode
    )


def I_Es(i_av_other: float, pi_other, ens_other, p1: float, p2: float,
         sigma_n: float, user: int) -> float:
    """State-node extrinsic MI for one user, averaging the two interferer signs."""
    mu = mu_from_other(i_av_other, ens_other, pi_other)
    sigma_n2 = sigma_n * sigma_n
    f_plus = F(mu, p1, p2, sigma_n2, user, +1)
    f_minus = F(mu, p1, p2, sigma_n2, user, -1)
    mi = 0.0
    for f in (f_plus, f_minus):
        mi += 0.5 * (J_fast(math.sqrt(2.0 * f)) if f > 0.0 else 0.0)
    return float(min(max(mi, 0.0), 1.0))


def I_Ev(i_av: float, i_es: float, ens, pi) -> float:
    """Variable-node extrinsic MI mixing punctured and unpunctured branches."""
    sig_av = _j_inv_fast(i_av)
    sig_es = _j_inv_fast(i_es)
    total = 0.0
    for d, lam in ens.var_edge.items():
        spread = (d - 1) * sig_av * sig_av
        frac = pi.fraction(d)
        unp = J_fast(math.sqrt(sig_es * sig_es + spread))
        pun = J_fast(math.sqrt(spread))
        total += lam * ((1.0 - frac) * unp + frac * pun)
    return float(min(max(total, 0.0), 1.0))


def I_Ec(i_ac: float, ens) -> float:
    """Check-node extrinsic MI (same update as the single-user decoder)."""
    if not 0.0 <= i_ac <= 1.0:
        raise ValueError("I_Ac must lie in [0,1]")
    sig = _j_inv_fast(min(1.0 - i_ac, 1.0 - 1e-15))
    total = 0.0
    for d, r in ens.chk_edge.items():
        total += r * (1.0 - J_fast(math.sqrt((d - 1)) * sig))
    return float(min(max(total, 0.0), 1.0))


@dataclass
class TrajectoryPoint:
    iteration: int
    user: int
    i_av: float
    i_es: float
    i_ev: float


def exit_trajectory(ens1, ens2, pi1, pi2, p1: float, p2: float, sigma_n: float,
                    max_iter: int = 5000, conv_tol: float = 1e-4,
                    stall_tol: float = 1e-12):
    """Run the coupled two-user recursion under the parallel schedule.

    Returns (converged, trajectory).  Each iteration recomputes both users'
    state MI from the other's previous check-to-variable MI, then applies
    the variable and check transfer functions.
    """
    users = ((ens1, pi1), (ens2, pi2))
    i_av = [0.0, 0.0]
    trajectory: list[TrajectoryPoint] = []
    for it in range(max_iter):
        i_es = [
            I_Es(i_av[1], pi2, ens2, p1, p2, sigma_n, user=1),
            I_Es(i_av[0], pi1, ens1, p1, p2, sigma_n, user=2),
        ]
        i_ev = [I_Ev(i_av[j], i_es[j], users[j][0], users[j][1]) for j in range(2)]
        for j in range(2):
            trajectory.append(TrajectoryPoint(it, j + 1, i_av[j], i_es[j], i_ev[j]))
        if min(i_ev) >= 1.0 - conv_tol:
            return True, trajectory
        nxt = [I_Ec(i_ev[j], users[j][0]) for j in range(2)]
        if max(abs(nxt[j] - i_av[j]) for j in range(2)) < stall_tol:
            return False, trajectory
        i_av = nxt
    return False, trajectory


def converges(ens1, ens2, pi1, pi2, p1: float, p2: float, sigma_n: float,
              max_iter: int = 5000, conv_tol: float = 1e-4) -> bool:
    ok, _ = exit_trajectory(ens1, ens2, pi1, pi2, p1, p2, sigma_n,
                            max_iter=max_iter, conv_tol=conv_tol)
    return ok


class BracketError(ValueError):
    """No sign change between the bracket endpoints."""


def threshold(ens1, ens2, pi1, pi2, p1: float, p2: float,
              lo: float = 0.05, hi: float = 4.0, tol: float = 1e-4) -> float:
    """Largest noise std dev at which the coupled recursion still converges."""
    if not converges(ens1, ens2, pi1, pi2, p1, p2, lo):
        raise BracketError(f"recursion already fails at sigma={lo}")
    if converges(ens1, ens2, pi1, pi2, p1, p2, hi):
        raise BracketError(f"recursion still converges at sigma={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if converges(ens1, ens2, pi1, pi2, p1, p2, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def export_trajectory_csv(trajectory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,user,I_Av,I_Es,I_Ev\n")
        for pt in trajectory:
            fh.write(f"{pt.iteration},{pt.user},{pt.i_av:.10g},{pt.i_es:.10g},{pt.i_ev:.10g}\n")
