"""Command-line surface: rates, thresholds, sweeps, simulation, validation.

Exit codes: 0 success / positive rate, 1 input error, 2 non-positive rate,
3 abort (p000 <= 0), 4 validation failure.
"""

import argparse
import sys

import numpy as np

from . import attack as attack_mod
from . import keyrate, simulate
from .keyrate import ChannelStatistics, ScenarioParams, TooNoisyError
from .linalg import von_neumann_entropy

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONPOSITIVE = 2
EXIT_ABORT = 3
EXIT_VALIDATION = 4

STATS_KEYS = ("p000", "p001", "p010", "p011", "p100", "p101", "p110", "p111",
              "p_plus_minus", "p_minus_plus")


class StatsFileError(ValueError):
    """Malformed statistics file."""


def parse_stats_file(path: str) -> ChannelStatistics:
    """Read a `key = value` statistics file.

    All ten keys must appear exactly once; `#` starts a comment; values are
    decimals in [0, 1].  Errors carry line numbers and key names.
    """
    values: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise StatsFileError(f"{path}:{lineno}: expected `key = value`")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in STATS_KEYS:
                raise StatsFileError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise StatsFileError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                v = float(value.strip())
            except ValueError:
                raise StatsFileError(
                    f"{path}:{lineno}: value for {key!r} is not a number") from None
            if not 0.0 <= v <= 1.0:
                raise StatsFileError(
                    f"{path}:{lineno}: value for {key!r} outside [0, 1]")
            values[key] = v
    missing = [k for k in STATS_KEYS if k not in values]
    if missing:
        raise StatsFileError(f"{path}: missing key {missing[0]!r}")
    p = np.array([values[f"p{i}{j}{k}"]
                  for i in (0, 1) for j in (0, 1) for k in (0, 1)]).reshape(2, 2, 2)
    return ChannelStatistics(p=p, p_pm=values["p_plus_minus"],
                             p_mp=values["p_minus_plus"])


def write_stats_file(path: str, stats: ChannelStatistics) -> None:
    """Write the canonical `key = value` form (exact float round-trip)."""
    p = stats.p
    lines = [f"p{i}{j}{k} = {float(p[i, j, k])!r}"
             for i in (0, 1) for j in (0, 1) for k in (0, 1)]
    lines.append(f"p_plus_minus = {float(stats.p_pm)!r}")
    lines.append(f"p_minus_plus = {float(stats.p_mp)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _print_report(report: keyrate.KeyRateReport) -> None:
    rows = [("B", report.b), ("calB", report.cal_b),
            ("lambda_tilde", report.lambda_tilde), ("S_BEC", report.s_bec),
            ("S_EC_upper", report.s_ec_upper), ("p_A0", report.p_a0),
            ("joint_00", report.joint[0]), ("joint_01", report.joint[1]),
            ("joint_10", report.joint[2]), ("joint_11", report.joint[3]),
            ("H_B_given_A", report.h_b_given_a), ("rate", report.rate)]
    for name, value in rows:
        print(f"{name:<13} = {float(value):.12g}")


def _parse_triple(text: str) -> ScenarioParams:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError("expected three comma-separated values Qf,Qr,Qx")
    qf, qr, qx = (float(x) for x in parts)
    return ScenarioParams(q_fwd=qf, q_rev=qr, q_x=qx)


def cmd_rate(args) -> int:
    try:
        if args.stats is not None:
            stats = parse_stats_file(args.stats)
        else:
            stats = keyrate.symmetric_stats(_parse_triple(args.symmetric))
        report = keyrate.key_rate_bound(stats, renormalize=args.normalize)
    except TooNoisyError as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (StatsFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _print_report(report)
    return EXIT_OK if report.rate > 0.0 else EXIT_NONPOSITIVE


def cmd_threshold(args) -> int:
    try:
        q = keyrate.noise_threshold(args.scenario, args.qx_ratio)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"{q:.6f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        rows = keyrate.sweep(args.scenario, args.qx_ratio, args.qmax, args.steps)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("Q,rate\n")
            for q, rate in rows:
                fh.write(f"{q:.9g},{rate:.9g}\n")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _build_attack(spec: str, seed: int) -> attack_mod.CollectiveAttack:
    if spec == "identity":
        return attack_mod.identity_attack()
    if spec == "zmeasure":
        return attack_mod.z_measurement_attack()
    if spec.startswith("symmetric:"):
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ValueError("symmetric attack needs two values: symmetric:Qf,Qr")
        return attack_mod.symmetric_realizing_attack(float(parts[0]), float(parts[1]))
    if spec.startswith("random:"):
        d_e = int(spec.split(":", 1)[1])
        return attack_mod.random_attack(d_e, seed)
    raise ValueError(f"unknown attack spec {spec!r}; expected identity, "
                     "zmeasure, symmetric:Qf,Qr or random:dE")


def cmd_simulate(args) -> int:
    try:
        atk = _build_attack(args.attack, args.seed)
        config = simulate.ProtocolConfig(iterations=args.iterations,
                                         seed=args.seed, workers=args.workers)
        tally, keys = simulate.run_protocol(atk, config)
        stats, err = simulate.estimate_statistics(tally)
        write_stats_file(args.out, stats)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    analytic = attack_mod.statistics(atk)
    print(f"iterations = {args.iterations}  sifted key bits = {len(keys)}")
    print(f"{'entry':<14}{'empirical':>14}{'analytic':>14}{'stderr':>12}")
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                print(f"{f'p{i}{j}{k}':<14}{stats.p[i, j, k]:>14.9f}"
                      f"{analytic.p[i, j, k]:>14.9f}{err.p[i, j, k]:>12.2e}")
    print(f"{'p_plus_minus':<14}{stats.p_pm:>14.9f}{analytic.p_pm:>14.9f}"
          f"{err.p_pm:>12.2e}")
    print(f"{'p_minus_plus':<14}{stats.p_mp:>14.9f}{analytic.p_mp:>14.9f}"
          f"{err.p_mp:>12.2e}")
    print(f"empirical QBER = {simulate.qber(keys):.9f}")
    try:
        report = keyrate.key_rate_bound(stats, renormalize=True)
        print(f"key rate bound (empirical statistics) = {report.rate:.9g}")
    except TooNoisyError as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    print(f"stats written to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        dims = [int(x) for x in args.ancilla_dims.split(",")]
        if args.attacks < 1 or any(d < 1 for d in dims):
            raise ValueError("need at least one attack and positive dimensions")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    cases: list[tuple[str, attack_mod.CollectiveAttack]] = [
        ("identity", attack_mod.identity_attack()),
        ("zmeasure", attack_mod.z_measurement_attack()),
    ]
    for idx in range(args.attacks):
        d_e = dims[idx % len(dims)]
        seed = [args.seed, idx]
        cases.append((f"random seed={seed}", attack_mod.random_attack(d_e, seed)))
    if args.corrupt:
        atk = cases[-1][1]
        u_bad = atk.u_e.copy()
        u_bad[0, 0] += 0.5
        cases.append(("corrupted (test hook)",
                      attack_mod.CollectiveAttack(atk.ancilla_dim, u_bad, atk.u_f)))

    failures = 0
    worst_slack = np.inf
    worst_residual = 0.0
    for label, atk in cases:
        vectors = attack_mod.extract_vectors(atk)
        residual = max(attack_mod.unitarity_residuals(vectors).values())
        worst_residual = max(worst_residual, residual)
        if residual > 1e-9:
            print(f"FAIL {label}: unitarity identity residual {residual:.3e}")
            failures += 1
            continue
        stats = attack_mod.statistics(atk)
        bound = keyrate.key_rate_bound(stats).rate
        exact = attack_mod.exact_collective_rate(atk)
        slack = exact - bound
        worst_slack = min(worst_slack, slack)
        if bound > exact + 1e-9:
            print(f"FAIL {label}: bound {bound:.9f} exceeds exact rate {exact:.9f}")
            failures += 1
        s_direct = keyrate.s_bec(stats)
        s_eigen = von_neumann_entropy(attack_mod.rho_bec(atk))
        if abs(s_direct - s_eigen) > 1e-9:
            print(f"FAIL {label}: S(BEC) mismatch {abs(s_direct - s_eigen):.3e}")
            failures += 1
    print(f"checked {len(cases)} attacks: worst identity residual "
          f"{worst_residual:.3e}, worst slack (exact - bound) {worst_slack:.9f}")
    if failures:
        print(f"{failures} violation(s) found")
        return EXIT_VALIDATION
    print("all checks passed")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 by default, which collides with the
    # "non-positive rate" code; input errors must exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sqkd",
                     description="Key-rate bounds and simulation for a "
                                 "measure-resend semi-quantum key "
                                 "distribution protocol.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_rate = sub.add_parser("rate", help="key-rate bound from statistics")
    src = p_rate.add_mutually_exclusive_group(required=True)
    src.add_argument("--stats", metavar="FILE",
                     help="statistics file with `key = value` lines")
    src.add_argument("--symmetric", metavar="QF,QR,QX",
                     help="symmetric scenario parameters")
    p_rate.add_argument("--normalize", action="store_true",
                        help="rescale each conditional block to sum to 1")
    p_rate.set_defaults(func=cmd_rate)

    p_thr = sub.add_parser("threshold", help="largest Q with positive rate")
    p_thr.add_argument("--scenario", required=True,
                       choices=sorted(keyrate.SCENARIOS))
    p_thr.add_argument("--qx-ratio", type=float, required=True,
                       help="X disturbance as a multiple of Q")
    p_thr.set_defaults(func=cmd_threshold)

    p_sweep = sub.add_parser("sweep", help="rate-vs-Q table as CSV")
    p_sweep.add_argument("--scenario", required=True,
                         choices=sorted(keyrate.SCENARIOS))
    p_sweep.add_argument("--qx-ratio", type=float, required=True)
    p_sweep.add_argument("--qmax", type=float, default=0.1)
    p_sweep.add_argument("--steps", type=int, default=101)
    p_sweep.add_argument("--out", required=True, metavar="CSV")
    p_sweep.set_defaults(func=cmd_sweep)

    p_sim = sub.add_parser("simulate", help="Monte Carlo protocol run")
    p_sim.add_argument("--attack", required=True,
                       help="identity | zmeasure | symmetric:Qf,Qr | random:dE")
    p_sim.add_argument("--iterations", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", required=True, metavar="STATSFILE")
    p_sim.set_defaults(func=cmd_simulate)

    p_val = sub.add_parser("validate", help="soundness and hygiene checks")
    p_val.add_argument("--attacks", type=int, default=100)
    p_val.add_argument("--ancilla-dims", default="1,2,4",
                       help="comma-separated list cycled over the attacks")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--corrupt", action="store_true",
                       help=argparse.SUPPRESS)  # test hook: inject a bad unitary
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse help/usage paths
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
