"""Joint belief-propagation decoding of the two-user Gaussian MAC.

Each user has a single-user Tanner graph; state nodes couple the l-th
unpunctured variable node of each user with the shared observation y_l.
Punctured variable nodes receive no channel evidence and are resolved
through check messages only.  The schedule is parallel: state update, then
variable updates, then check updates, once per iteration.

All message arrays carry a leading batch axis so independent codeword
trials decode simultaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codegraph import TannerGraph
from .secure_encoder import PuncturePattern

LLR_CLIP = 30.0
_ATANH_LIM = 1.0 - 1e-15


def _phi(x):
    return np.logaddexp(0.0, x)


def state_llr(y, l_other, p_self, p_other, sigma2):
    """State-node message to this user's variable node.

    Marginalises the interfering user's bit using its incoming LLR
    l_other; +/-inf in l_other reduce exactly to the interference
    cancelled single-user channel LLR.
    """
    y = np.asarray(y, dtype=np.float64)
    l_other = np.asarray(l_other, dtype=np.float64)
    s1 = math.sqrt(p_self)
    s2 = math.sqrt(p_other)
    a1 = -((y - s1 - s2) ** 2) / (2.0 * sigma2)
    a2 = -((y - s1 + s2) ** 2) / (2.0 * sigma2)
    b1 = -((y + s1 - s2) ** 2) / (2.0 * sigma2)
    b2 = -((y + s1 + s2) ** 2) / (2.0 * sigma2)
    with np.errstate(invalid="ignore"):
        out = (a2 - b2) + _phi(a1 - a2 + l_other) - _phi(b1 - b2 + l_other)
    pos = np.isposinf(l_other)
    if pos.any():
        out = np.where(pos, a1 - b1, out)
    neg = np.isneginf(l_other)
    if neg.any():
        out = np.where(neg, a2 - b2, out)
    return out


@dataclass
class UserCode:
    """One user's graph, puncture pattern and channel alignment."""

    graph: TannerGraph
    pattern: PuncturePattern
    unpunct: np.ndarray = field(init=False)
    slot_of_var: np.ndarray = field(init=False)   # -1 for punctured nodes
    edge_slot: np.ndarray = field(init=False)     # state slot per var-sorted edge
    edge_unpunct: np.ndarray = field(init=False)

    def __post_init__(self):
        g = self.graph
        self.unpunct = self.pattern.unpunctured(g.n_vars)
        self.slot_of_var = np.full(g.n_vars, -1, dtype=np.int64)
        self.slot_of_var[self.unpunct] = np.arange(len(self.unpunct))
        self.edge_slot = self.slot_of_var[g.edge_var]
        self.edge_unpunct = self.edge_slot >= 0

    @property
    def n_transmitted(self) -> int:
        return len(self.unpunct)


@dataclass
class DecoderState:
    """Per-edge and per-slot messages for one batch of trials."""

    l_vc: list[np.ndarray]    # per user, (B, E) var-sorted
    l_cv: list[np.ndarray]    # per user, (B, E) var-sorted
    l_vs: list[np.ndarray]    # per user, (B, n) state-slot order
    l_sv: list[np.ndarray]
    y: np.ndarray
    sigma2: float
    iteration: int = 0


class JointDecoder:
    def __init__(self, user1: UserCode, user2: UserCode, p1: float, p2: float,
                 max_iter: int = 100, clip: float = LLR_CLIP):
        if user1.n_transmitted != user2.n_transmitted:
            raise ValueError("users must transmit equally many bits")
        self.users = [user1, user2]
        self.powers = [p1, p2]
        self.max_iter = max_iter
        self.clip = clip
        self.n = user1.n_transmitted

    def new_state(self, y: np.ndarray, sigma2: float) -> DecoderState:
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        b = y.shape[0]
        if y.shape[1] != self.n:
            raise ValueError(f"observation length {y.shape[1]} != {self.n}")
        return DecoderState(
            l_vc=[np.zeros((b, u.graph.n_edges)) for u in self.users],
            l_cv=[np.zeros((b, u.graph.n_edges)) for u in self.users],
            l_vs=[np.zeros((b, self.n)) for _ in self.users],
            l_sv=[np.zeros((b, self.n)) for _ in self.users],
            y=y,
            sigma2=sigma2,
        )

    # -- schedule steps ----------------------------------------------------

    def state_update(self, state: DecoderState) -> None:
        p1, p2 = self.powers
        state.l_sv[0] = state_llr(state.y, state.l_vs[1], p1, p2, state.sigma2)
        state.l_sv[1] = state_llr(state.y, state.l_vs[0], p2, p1, state.sigma2)

    def variable_update(self, state: DecoderState, user: int) -> None:
        u = self.users[user]
        g = u.graph
        totals = np.add.reduceat(state.l_cv[user], g.var_ptr[:-1], axis=1)
        extr = totals[:, g.edge_var] - state.l_cv[user]
        sv_on_edges = np.where(
            u.edge_unpunct, state.l_sv[user][:, np.clip(u.edge_slot, 0, None)], 0.0
        )
        state.l_vc[user] = np.clip(extr + sv_on_edges, -self.clip, self.clip)
        state.l_vs[user] = np.clip(totals[:, u.unpunct], -self.clip, self.clip)

    def check_update(self, state: DecoderState, user: int) -> None:
        g = self.users[user].graph
        perm = g.perm_to_check_order
        l_in = state.l_vc[user][:, perm]
        t = np.tanh(0.5 * l_in)
        zero = t == 0.0
        neg = t < 0.0
        logmag = np.where(zero, 0.0, np.log(np.abs(np.where(zero, 1.0, t))))
        ptr = g.check_ptr[:-1]
        zsum = np.add.reduceat(zero.astype(np.float64), ptr, axis=1)
        lsum = np.add.reduceat(logmag, ptr, axis=1)
        nsum = np.add.reduceat(neg.astype(np.float64), ptr, axis=1)
        echeck = g.edge_check[perm]
        z_ex = zsum[:, echeck] - zero
        l_ex = lsum[:, echeck] - logmag
        n_ex = nsum[:, echeck] - neg
        prod = np.where(z_ex > 0.5, 0.0, (1.0 - 2.0 * (n_ex % 2)) * np.exp(l_ex))
        msgs = 2.0 * np.arctanh(np.clip(prod, -_ATANH_LIM, _ATANH_LIM))
        out = np.empty_like(msgs)
        out[:, perm] = np.clip(msgs, -self.clip, self.clip)
        state.l_cv[user] = out

    # -- decisions ---------------------------------------------------------

    def hard_decisions(self, state: DecoderState, user: int) -> np.ndarray:
        u = self.users[user]
        g = u.graph
        totals = np.add.reduceat(state.l_cv[user], g.var_ptr[:-1], axis=1)
        totals = totals.copy()
        totals[:, u.unpunct] += state.l_sv[user]
        return (totals < 0.0).astype(np.uint8)   # LLR >= 0 decides bit 0

    def syndrome_ok(self, user: int, bits: np.ndarray) -> np.ndarray:
        g = self.users[user].graph
        at_edges = bits[:, g.edge_var[g.perm_to_check_order]].astype(np.int64)
        parity = np.add.reduceat(at_edges, g.check_ptr[:-1], axis=1)
        return (parity % 2 == 0).all(axis=1)

    def decode(self, y: np.ndarray, sigma2: float, trace=None):
        """Returns (bits1, bits2, iterations, converged) with a batch axis.

        `trace(iteration, user, state)` is called per iteration when given;
        see `trace_csv_writer` for the bundled CSV dump.
        """
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        b = y.shape[0]
        state = self.new_state(y, sigma2)
        bits_out = [np.zeros((b, u.graph.n_vars), dtype=np.uint8) for u in self.users]
        iters_out = np.full(b, self.max_iter, dtype=np.int32)
        conv_out = np.zeros(b, dtype=bool)
        active = np.arange(b)

        for it in range(1, self.max_iter + 1):
            state.iteration = it
            self.state_update(state)
            for j in (0, 1):
                self.variable_update(state, j)
            for j in (0, 1):
                self.check_update(state, j)
            if trace is not None:
                for j in (0, 1):
                    trace(it, j + 1, state)
            decisions = [self.hard_decisions(state, j) for j in (0, 1)]
            ok = self.syndrome_ok(0, decisions[0]) & self.syndrome_ok(1, decisions[1])
            if ok.any():
                done = np.flatnonzero(ok)
                for j in (0, 1):
                    bits_out[j][active[done]] = decisions[j][done]
                iters_out[active[done]] = it
                conv_out[active[done]] = True
                keep = np.flatnonzero(~ok)
                if len(keep) == 0:
                    active = active[:0]
                    break
                active = active[keep]
                for j in (0, 1):
                    state.l_vc[j] = state.l_vc[j][keep]
                    state.l_cv[j] = state.l_cv[j][keep]
                    state.l_vs[j] = state.l_vs[j][keep]
                    state.l_sv[j] = state.l_sv[j][keep]
                state.y = state.y[keep]
                decisions = [d[keep] for d in decisions]
        if len(active):
            for j in (0, 1):
                bits_out[j][active] = decisions[j]
        return bits_out[0], bits_out[1], iters_out, conv_out


def extract_secret(word: np.ndarray, secret_cols: np.ndarray) -> np.ndarray:
    """Secret-message bits from a full decided codeword."""
    return np.asarray(word)[..., np.asarray(secret_cols, dtype=np.int64)]


def trace_csv_writer(fh):
    """Per-iteration mean-LLR trace: iteration, user, mean|Lvc|, mean|Lsv|."""
    fh.write("iteration,user,mean_abs_lvc,mean_abs_lsv\n")

    def trace(iteration, user, state):
        lvc = float(np.abs(state.l_vc[user - 1]).mean())
        lsv = float(np.abs(state.l_sv[user - 1]).mean())
        fh.write(f"{iteration},{user},{lvc:.6g},{lsv:.6g}\n")

    return trace
