"""Experiment orchestration: BER sweeps, security-gap and SNR-loss reports.

A scenario config (INI text) names the two users' ensembles and rates, the
puncturing mode, the noise grid and the Monte Carlo budget.  Sweeps are
deterministic under the master seed: every trial derives its own counter
rng from (seed, point index, trial index), batch boundaries are fixed, and
worker processes only change who computes which trial, never the totals.
"""

from __future__ import annotations

import configparser
import importlib.resources
import math
import multiprocessing
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import codegraph, ensembles, secure_encoder
from .channel import BOB, EVE
from .joint_decoder import JointDecoder, UserCode, extract_secret

CSV_HEADER = "scenario,user,tap,sigma2,snr_db,ber,fer,trials,errors,ci_halfwidth"
WILSON_Z = 1.96
MODES = ("optimized", "random", "none")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class RangeError(ValueError):
    """A BER target is not bracketed by the measured curve."""


def _resolve_data(name: str) -> str:
    """Accept a packaged data name (with or without .txt) or a file path."""
    if os.path.exists(name):
        return name
    base = importlib.resources.files("gmacsec").joinpath("data")
    for candidate in (name, f"{name}.txt"):
        p = base.joinpath(candidate)
        if p.is_file():
            return str(p)
    raise ConfigError(f"cannot resolve data file {name!r}")


@dataclass(frozen=True)
class UserSpec:
    ensemble_file: str
    r_s: float
    r_m: float
    pi_file: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    p1: float
    p2: float
    n: int
    mode: str
    users: tuple[UserSpec, UserSpec]
    sigma2_grid: tuple[float, ...]
    trials: int = 2000
    min_errors: int = 100
    max_iter: int = 100
    seed: int = 1
    taps: tuple[str, ...] = (BOB, EVE)
    batch: int = 16
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.sigma2_grid) == 0:
            raise ConfigError("empty noise grid")
        if any(s2 <= 0 for s2 in self.sigma2_grid):
            raise ConfigError("noise variances must be positive")
        if list(self.sigma2_grid) != sorted(self.sigma2_grid):
            raise ConfigError("noise grid must be strictly increasing")
        if len(set(self.sigma2_grid)) != len(self.sigma2_grid):
            raise ConfigError("noise grid must be strictly increasing")
        for tap in self.taps:
            if tap not in (BOB, EVE):
                raise ConfigError(f"unknown tap {tap!r}")


def _parse_grid(section: configparser.SectionProxy) -> tuple[float, ...]:
    if "sigma2" in section:
        return tuple(float(tok) for tok in section["sigma2"].replace(",", " ").split())
    if "sigma2_start" in section:
        start = float(section["sigma2_start"])
        stop = float(section["sigma2_stop"])
        points = int(section.get("sigma2_points", "8"))
        return tuple(np.geomspace(start, stop, points).tolist())
    raise ConfigError("sweep section needs sigma2 or sigma2_start/stop")


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path} not found")
    for key, value in (overrides or {}).items():
        section, _, option = key.partition(".")
        if not option:
            raise ConfigError(f"override {key!r} must look like section.key")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value)
    try:
        sc = parser["scenario"]
        users = []
        for name in ("user1", "user2"):
            u = parser[name]
            users.append(UserSpec(
                ensemble_file=u["ensemble"],
                r_s=float(u["r_s"]),
                r_m=float(u["r_m"]),
                pi_file=u.get("pi") or None,
            ))
        sweep = parser["sweep"]
        return ExperimentConfig(
            name=sc.get("name", "scenario"),
            p1=float(sc["p1"]),
            p2=float(sc["p2"]),
            n=int(sc["n"]),
            mode=sc.get("mode", "optimized"),
            users=(users[0], users[1]),
            sigma2_grid=_parse_grid(sweep),
            trials=int(sweep.get("trials", "2000")),
            min_errors=int(sweep.get("min_errors", "100")),
            max_iter=int(sweep.get("max_iter", "100")),
            seed=int(sweep.get("seed", sc.get("seed", "1"))),
            taps=tuple(t.strip() for t in sweep.get("taps", "bob,eve").split(",") if t.strip()),
            batch=int(sweep.get("batch", "16")),
            workers=int(sweep.get("workers", "1")),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config entry: {exc}") from exc


@dataclass
class BuiltUser:
    spec: UserSpec
    ensemble: ensembles.Ensemble
    rates: ensembles.RateSet
    graph: codegraph.TannerGraph
    pattern: secure_encoder.PuncturePattern
    encoder: codegraph.SystematicEncoder

    @property
    def k(self) -> int:
        return self.encoder.k


@dataclass
class Scenario:
    cfg: ExperimentConfig
    users: list[BuiltUser]
    decoder: JointDecoder


def build_scenario(cfg: ExperimentConfig) -> Scenario:
    """Construct graphs, patterns and encoders for both users."""
    built = []
    for idx, spec in enumerate(cfg.users):
        ens = ensembles.load_ensemble(_resolve_data(spec.ensemble_file))
        rates = ensembles.derive_rates(spec.r_s, spec.r_m, cfg.n)
        if cfg.mode == "none":
            # unpunctured baseline: mother code at the transmitted length,
            # same secret fraction of the codeword as the punctured scheme
            n_prime = cfg.n
            k = round(cfg.n * rates.r_p)
            graph = codegraph.construct_graph(ens, n_prime, seed=cfg.seed * 7 + idx)
            pattern = secure_encoder.PuncturePattern(np.array([], dtype=np.int64), {})
            encoder = codegraph.build_systematic_encoder(graph, k=k)
        else:
            graph = codegraph.construct_graph(ens, rates.n_prime, seed=cfg.seed * 7 + idx)
            if cfg.mode == "random":
                pi = ensembles.random_puncturing(rates.r_p, ens)
            else:
                if not spec.pi_file:
                    raise ConfigError("mode=optimized needs a pi file per user")
                pi = ensembles.load_pi(_resolve_data(spec.pi_file))
            pattern = secure_encoder.select_pattern(
                pi, graph, k=rates.k, seed=cfg.seed * 11 + idx
            )
            encoder = secure_encoder.encoder_for_pattern(graph, pattern)
        built.append(BuiltUser(spec, ens, rates, graph, pattern, encoder))
    if built[0].graph.n_vars - built[0].pattern.k != built[1].graph.n_vars - built[1].pattern.k:
        raise ConfigError("users do not transmit equal lengths")
    decoder = JointDecoder(
        UserCode(built[0].graph, built[0].pattern),
        UserCode(built[1].graph, built[1].pattern),
        cfg.p1, cfg.p2, max_iter=cfg.max_iter,
    )
    return Scenario(cfg, built, decoder)


# ---------------------------------------------------------------------------
# Monte Carlo sweep
# ---------------------------------------------------------------------------

@dataclass
class TapCounter:
    bit_errors: int = 0
    bits: int = 0
    frame_errors: int = 0
    frames: int = 0

    def add(self, other: "TapCounter") -> None:
        self.bit_errors += other.bit_errors
        self.bits += other.bits
        self.frame_errors += other.frame_errors
        self.frames += other.frames


@dataclass(frozen=True)
class BerPoint:
    scenario: str
    user: int
    tap: str
    sigma2: float
    snr_db: float
    ber: float
    fer: float
    trials: int
    errors: int
    ci_halfwidth: float


BerCurve = list[BerPoint]

_WORKER_SCENARIO: Scenario | None = None


def _trial_rngs(seed: int, point: int, trial: int):
    ss = np.random.SeedSequence((seed, point, trial))
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(4)]


def _run_trials(scn: Scenario, point: int, sigma2: float, trials: range,
                taps: tuple[str, ...]) -> dict[tuple[int, str], TapCounter]:
    cfg = scn.cfg
    u1, u2 = scn.users
    b = len(trials)
    secrets = [np.empty((b, u.k), dtype=np.uint8) for u in (u1, u2)]
    x = [np.empty((b, scn.decoder.n)) for _ in (0, 1)]
    noise = {tap: np.empty((b, scn.decoder.n)) for tap in taps}
    amp = [math.sqrt(cfg.p1), math.sqrt(cfg.p2)]
    for row, trial in enumerate(trials):
        rng_s1, rng_s2, rng_m, rng_n = _trial_rngs(cfg.seed, point, trial)
        for j, (user, rng_secret) in enumerate(((u1, rng_s1), (u2, rng_s2))):
            secret = rng_secret.integers(0, 2, user.k, dtype=np.uint8)
            secrets[j][row] = secret
            cw = secure_encoder.secure_encode(secret, user.encoder, user.pattern, rng_m)
            x[j][row] = 1.0 - 2.0 * cw.transmitted
        for tap in taps:
            noise[tap][row] = rng_n.standard_normal(scn.decoder.n)
    signal = amp[0] * x[0] + amp[1] * x[1]
    out: dict[tuple[int, str], TapCounter] = {}
    for tap in taps:
        y = signal + math.sqrt(sigma2) * noise[tap]
        b1, b2, _, _ = scn.decoder.decode(y, sigma2)
        for j, (user, bits) in enumerate(((u1, b1), (u2, b2))):
            got = extract_secret(bits, user.encoder.secret_cols)
            errs = got != secrets[j]
            out[(j + 1, tap)] = TapCounter(
                bit_errors=int(errs.sum()),
                bits=int(errs.size),
                frame_errors=int(errs.any(axis=1).sum()),
                frames=b,
            )
    return out


def _worker_init(scn: Scenario) -> None:
    global _WORKER_SCENARIO
    _WORKER_SCENARIO = scn


def _worker_task(args):
    point, sigma2, lo, hi, taps = args
    return _run_trials(_WORKER_SCENARIO, point, sigma2, range(lo, hi), taps)


def wilson_halfwidth(errors: int, n: int, z: float = WILSON_Z) -> float:
    if n == 0:
        return 0.5
    p = errors / n
    return z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / (1.0 + z * z / n)


def _batch_plan(total: int, base: int):
    """Fixed escalating batch sizes so early stopping is cheap and
    schedule-independent."""
    sizes = []
    size = max(2, min(4, base))
    done = 0
    while done < total:
        take = min(size, total - done)
        sizes.append((done, done + take))
        done += take
        size = min(base, size * 2)
    return sizes


def run_sweep(cfg: ExperimentConfig, scenario: Scenario | None = None,
              progress=None) -> BerCurve:
    """Monte Carlo BER per (grid point, user, tap) with adaptive stopping."""
    scn = scenario or build_scenario(cfg)
    pool = None
    ctx = multiprocessing.get_context("fork")
    if cfg.workers > 1:
        pool = ctx.Pool(cfg.workers, initializer=_worker_init, initargs=(scn,))
    try:
        curve: BerCurve = []
        for point, sigma2 in enumerate(cfg.sigma2_grid):
            counters = {(u, t): TapCounter() for u in (1, 2) for t in cfg.taps}
            for lo, hi in _batch_plan(cfg.trials, cfg.batch):
                if all(c.bit_errors >= cfg.min_errors for c in counters.values()):
                    break
                if pool is not None and hi - lo >= 2 * cfg.workers:
                    step = math.ceil((hi - lo) / cfg.workers)
                    chunks = [(point, sigma2, s, min(s + step, hi), cfg.taps)
                              for s in range(lo, hi, step)]
                    results = pool.map(_worker_task, chunks)
                else:
                    results = [_run_trials(scn, point, sigma2, range(lo, hi), cfg.taps)]
                for res in results:
                    for key, c in res.items():
                        counters[key].add(c)
            snr = 10.0 * math.log10((cfg.p1 + cfg.p2) / sigma2)
            for (user, tap), c in sorted(counters.items()):
                ber = c.bit_errors / c.bits if c.bits else 0.0
                fer = c.frame_errors / c.frames if c.frames else 0.0
                curve.append(BerPoint(
                    scenario=cfg.name, user=user, tap=tap, sigma2=sigma2,
                    snr_db=snr, ber=ber, fer=fer, trials=c.frames,
                    errors=c.bit_errors, ci_halfwidth=wilson_halfwidth(c.bit_errors, c.bits),
                ))
            if progress is not None:
                progress(point, sigma2, curve)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return curve


def write_csv(curve: BerCurve, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for p in curve:
            fh.write(
                f"{p.scenario},{p.user},{p.tap},{p.sigma2:.10g},{p.snr_db:.10g},"
                f"{p.ber:.10g},{p.fer:.10g},{p.trials},{p.errors},{p.ci_halfwidth:.10g}\n"
            )


def read_csv(path) -> BerCurve:
    curve: BerCurve = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header in {path}: {header!r}")
        for line in fh:
            if not line.strip():
                continue
            toks = line.strip().split(",")
            curve.append(BerPoint(
                scenario=toks[0], user=int(toks[1]), tap=toks[2], sigma2=float(toks[3]),
                snr_db=float(toks[4]), ber=float(toks[5]), fer=float(toks[6]),
                trials=int(toks[7]), errors=int(toks[8]), ci_halfwidth=float(toks[9]),
            ))
    return curve


# ---------------------------------------------------------------------------
# Curve analysis
# ---------------------------------------------------------------------------

def _logit(p: float, bits: int) -> float:
    floor = 0.5 / max(bits, 2)
    p = min(max(p, floor), 1.0 - floor)
    return math.log(p / (1.0 - p))


def select_curve(curve: BerCurve, user: int | None = None, tap: str | None = None,
                 scenario: str | None = None) -> BerCurve:
    out = [p for p in curve
           if (user is None or p.user == user)
           and (tap is None or p.tap == tap)
           and (scenario is None or p.scenario == scenario)]
    return sorted(out, key=lambda p: p.sigma2)


def sigma2_at_ber(curve: BerCurve, target: float, side: str) -> float:
    """Interpolated noise variance where the BER curve crosses `target`.

    side="reliability": largest sigma^2 with BER <= target (crossing from
    below);  side="security": smallest sigma^2 with BER >= target.
    Interpolation is linear in (log sigma^2, logit BER).
    """
    if len(curve) < 2:
        raise RangeError("need at least two curve points")
    xs = [math.log(p.sigma2) for p in curve]
    bits = [max(p.trials, 1) * max(1, p.errors if p.ber == 0 else round(p.errors / max(p.ber, 1e-300)))
            for p in curve]
    ys = [_logit(p.ber, b) for p, b in zip(curve, bits)]
    ty_list = [_logit(target, b) for b in bits]

    if side == "reliability":
        idx = None
        for i in range(len(curve) - 1):
            if ys[i] <= ty_list[i] and ys[i + 1] > ty_list[i + 1]:
                idx = i
        if idx is None:
            if all(y <= t for y, t in zip(ys, ty_list)):
                raise RangeError(f"curve never exceeds BER {target}: extend the grid upward")
            raise RangeError(f"curve already above BER {target} at its lowest point")
        t0, t1 = ty_list[idx], ty_list[idx + 1]
        frac = (t0 - ys[idx]) / (ys[idx + 1] - ys[idx])
    elif side == "security":
        idx = None
        for i in range(len(curve) - 1):
            if ys[i] < ty_list[i] and ys[i + 1] >= ty_list[i + 1]:
                idx = i
                break
        if idx is None:
            if all(y < t for y, t in zip(ys, ty_list)):
                raise RangeError(f"curve never reaches BER {target}: extend the grid upward")
            raise RangeError(f"curve already at BER {target} at its lowest point")
        frac = (ty_list[idx] - ys[idx]) / (ys[idx + 1] - ys[idx])
    else:
        raise ValueError("side must be reliability or security")
    return math.exp(xs[idx] + frac * (xs[idx + 1] - xs[idx]))


def security_gap(bob: BerCurve, eve: BerCurve, p_b_max: float, p_e_min: float) -> float:
    """10 log10(sigma^2_Emin / sigma^2_Bmax) for the given BER targets."""
    s2_b = sigma2_at_ber(bob, p_b_max, side="reliability")
    s2_e = sigma2_at_ber(eve, p_e_min, side="security")
    return 10.0 * math.log10(s2_e / s2_b)


def snr_loss(punctured: BerCurve, baseline: BerCurve, p_b_max: float) -> float:
    """Extra SNR the punctured scheme needs for the same reliability."""
    s2_p = sigma2_at_ber(punctured, p_b_max, side="reliability")
    s2_b = sigma2_at_ber(baseline, p_b_max, side="reliability")
    return 10.0 * math.log10(s2_b / s2_p)


@dataclass(frozen=True)
class SumRateReport:
    bound: float
    achieved: float
    gap: float
    note: str = (
        "bound is the Gaussian-input sum-rate difference "
        "0.5*log2(1+(p1+p2)/s2_B) - 0.5*log2(1+(p1+p2)/s2_E), an upper-bound "
        "proxy rather than an exact secrecy region"
    )


def sum_rate_comparison(p1: float, p2: float, sigma2_b: float, sigma2_e: float,
                        achieved: tuple[float, float]) -> SumRateReport:
    if sigma2_b <= 0 or sigma2_e <= 0:
        raise ValueError("noise variances must be positive")
    total = p1 + p2
    bound = 0.5 * math.log2(1.0 + total / sigma2_b) - 0.5 * math.log2(1.0 + total / sigma2_e)
    ach = achieved[0] + achieved[1]
    return SumRateReport(bound=bound, achieved=ach, gap=bound - ach)
