"""Command line interface.

Subcommands: design (optimise puncturing distributions), threshold (EXIT
decoding threshold), sweep (Monte Carlo BER curves to CSV), gap
(security-gap report from CSVs), region (sum-rate comparison report).
"""

from __future__ import annotations

import argparse
import sys

from . import __version__


def _overrides(pairs):
    out = {}
    for item in pairs or []:
        key, _, value = item.partition("=")
        if not value:
            raise SystemExit(f"--set expects section.key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _load_cfg(args):
    from . import harness

    over = _overrides(args.set)
    if args.seed is not None:
        over["sweep.seed"] = str(args.seed)
    if args.workers is not None:
        over["sweep.workers"] = str(args.workers)
    return harness.load_config(args.config, over)


def cmd_design(args) -> int:
    from . import ensembles, harness, optimizer

    cfg = _load_cfg(args)
    ens1 = ensembles.load_ensemble(harness._resolve_data(cfg.users[0].ensemble_file))
    ens2 = ensembles.load_ensemble(harness._resolve_data(cfg.users[1].ensemble_file))
    rates = [ensembles.derive_rates(u.r_s, u.r_m, cfg.n) for u in cfg.users]
    targets = (rates[0].r_p, rates[1].r_p)
    if args.sigma_target is not None:
        res = optimizer.alternate(ens1, ens2, cfg.p1, cfg.p2, args.sigma_target,
                                  grid=args.grid)
        sigma = args.sigma_target
    else:
        res, sigma = optimizer.design_for_rates(ens1, ens2, cfg.p1, cfg.p2, targets,
                                                grid=args.grid)
    print(f"noise target sigma = {sigma:.4f}")
    print(f"achieved puncture rates: {res.rates[0]:.4f}, {res.rates[1]:.4f} "
          f"(wanted {targets[0]:.4f}, {targets[1]:.4f})")
    if not res.converged:
        print("warning: alternation did not reach a fixed point", file=sys.stderr)
    for idx, (pi, rate) in enumerate(((res.pi1, res.rates[0]), (res.pi2, res.rates[1])), start=1):
        path = f"{args.out_prefix}_user{idx}.txt"
        ensembles.save_pi(
            pi, path,
            comment=f"optimised puncturing distribution for user {idx} of {cfg.name}",
            meta={"sigma_target": f"{sigma:.6g}", "achieved_rate": f"{rate:.6g}"},
        )
        print(f"wrote {path}")
    return 0


def cmd_threshold(args) -> int:
    from . import ensembles, exit_analysis, harness

    cfg = _load_cfg(args)
    ens = [ensembles.load_ensemble(harness._resolve_data(u.ensemble_file)) for u in cfg.users]
    pis = []
    for u, e in zip(cfg.users, ens):
        rates = ensembles.derive_rates(u.r_s, u.r_m, cfg.n)
        if cfg.mode == "none":
            pis.append(ensembles.PuncturingDistribution({}))
        elif cfg.mode == "random":
            pis.append(ensembles.random_puncturing(rates.r_p, e))
        else:
            if not u.pi_file:
                raise SystemExit("mode=optimized needs pi files for a threshold")
            pis.append(ensembles.load_pi(harness._resolve_data(u.pi_file)))
    sigma = exit_analysis.threshold(ens[0], ens[1], pis[0], pis[1], cfg.p1, cfg.p2)
    print(f"decoding threshold sigma = {sigma:.4f} (sigma^2 = {sigma * sigma:.4f})")
    return 0


def cmd_sweep(args) -> int:
    from . import harness

    cfg = _load_cfg(args)
    scenario = harness.build_scenario(cfg)

    def progress(point, sigma2, curve):
        rows = [p for p in curve if p.sigma2 == sigma2]
        msg = "; ".join(f"u{p.user}/{p.tap}: ber={p.ber:.3g} ({p.trials} frames)" for p in rows)
        print(f"[{point + 1}/{len(cfg.sigma2_grid)}] sigma2={sigma2:.4g}  {msg}", flush=True)

    curve = harness.run_sweep(cfg, scenario, progress=progress if args.verbose else None)
    harness.write_csv(curve, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_gap(args) -> int:
    from . import harness

    bob = harness.select_curve(harness.read_csv(args.bob), user=args.user, tap="bob")
    eve = harness.select_curve(harness.read_csv(args.eve), user=args.user, tap="eve")
    gap = harness.security_gap(bob, eve, args.p_b_max, args.p_e_min)
    s2b = harness.sigma2_at_ber(bob, args.p_b_max, "reliability")
    s2e = harness.sigma2_at_ber(eve, args.p_e_min, "security")
    print(f"sigma^2_Bmax (BER <= {args.p_b_max:g}) = {s2b:.4g}")
    print(f"sigma^2_Emin (BER >= {args.p_e_min:g}) = {s2e:.4g}")
    print(f"security gap = {gap:.2f} dB")
    return 0


def cmd_region(args) -> int:
    from . import harness

    report = harness.sum_rate_comparison(args.p1, args.p2, args.sigma2_b, args.sigma2_e,
                                         (args.rs1, args.rs2))
    print(f"sum-rate bound (proxy): {report.bound:.4f} bits")
    print(f"achieved secure sum rate: {report.achieved:.4f} bits")
    print(f"gap: {report.gap:.4f} bits")
    print(f"note: {report.note}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gmacsec",
        description="Punctured-LDPC secrecy coding over the two-user Gaussian "
                    "multiple-access wiretap channel",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario config file (INI)")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config entry")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--workers", type=int, help="worker process count")

    p = sub.add_parser("design", parents=[common],
                       help="optimise puncturing distributions for a scenario")
    p.add_argument("--sigma-target", type=float,
                   help="fixed noise target; default searches for the rate targets")
    p.add_argument("--grid", type=int, default=100, help="tunnel constraint grid size")
    p.add_argument("--out-prefix", default="pi", help="output file prefix")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("threshold", parents=[common],
                       help="EXIT decoding threshold of the configured pair")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo BER sweep to CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gap", help="security gap from sweep CSVs")
    p.add_argument("--bob", required=True, help="CSV with the legitimate receiver curve")
    p.add_argument("--eve", required=True, help="CSV with the eavesdropper curve")
    p.add_argument("--user", type=int, default=1)
    p.add_argument("--p-b-max", type=float, default=1e-4)
    p.add_argument("--p-e-min", type=float, default=0.45)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("region", help="sum-rate comparison report")
    p.add_argument("--p1", type=float, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--sigma2-b", type=float, required=True)
    p.add_argument("--sigma2-e", type=float, required=True)
    p.add_argument("--rs1", type=float, required=True)
    p.add_argument("--rs2", type=float, required=True)
    p.set_defaults(func=cmd_region)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
