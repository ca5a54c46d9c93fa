"""``magnifier-qw`` command line.

Every command writes one table (CSV with a ``#`` metadata header, or JSON with
``meta`` and ``rows``).  Exit codes: 0 success, 1 usage error, 2 numerical
verification failure, 3 window overflow.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .graph import WindowOverflowError
from .limitlaw import R_UPPER_GUARD, LimitDomainError, LimitLaw, ks_distance, pseudo_velocity_empirical
from .localization import ensemble_profile, time_averaged_distribution
from .rw import GROVER, RWParams, is_recurrent, spectral_params, twisted_matrix
from .spectral import coin_operator, spectral_map_check, twisted_szegedy_unitary
from .szegedy import MIXED, Distribution, ensemble_history, moments
from .verify import run_suites

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_OVERFLOW = 0, 1, 2, 3


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _unit_open(name):
    def parse(text):
        try:
            val = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}={text!r} is not a number")
        if not 0.0 < val < 1.0:
            raise argparse.ArgumentTypeError(f"{name}={text} violates 0 < {name} < 1")
        return val
    return parse


def _int_at_least(lo, what):
    def parse(text):
        try:
            val = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{what} must be an integer, got {text!r}")
        if val < lo:
            raise argparse.ArgumentTypeError(f"{what} must be >= {lo}, got {val}")
        return val
    return parse


def _sweep(text):
    try:
        name, rng = text.split("=")
        start, stop, count = rng.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise argparse.ArgumentTypeError("sweep must look like NAME=START:STOP:COUNT")
    if name not in ("p", "q", "r"):
        raise argparse.ArgumentTypeError(f"sweep parameter must be p, q or r, not {name!r}")
    if int(count) < 1 or np.any((values <= 0) | (values >= 1)):
        raise argparse.ArgumentTypeError(f"sweep values must satisfy 0 < {name} < 1")
    return name, [float(v) for v in values]


@dataclass
class Table:
    meta: dict
    columns: list
    rows: list


def _fmt(val):
    if isinstance(val, (bool, np.bool_)):
        return "true" if val else "false"
    if isinstance(val, (float, np.floating)):
        return repr(float(val))
    return str(val)


def _jsonable(val):
    if isinstance(val, (np.bool_,)):
        return bool(val)
    if isinstance(val, np.integer):
        return int(val)
    if isinstance(val, np.floating):
        return float(val)
    return val


def render(tables: list[Table], fmt: str) -> str:
    if fmt == "json":
        docs = [{"meta": {k: _jsonable(v) for k, v in t.meta.items()},
                 "rows": [{c: _jsonable(v) for c, v in zip(t.columns, row)} for row in t.rows]}
                for t in tables]
        body = docs[0] if len(docs) == 1 else {"runs": docs}
        return json.dumps(body, indent=2) + "\n"
    out = []
    for t in tables:
        out.extend(f"# {k}: {_fmt(v)}" for k, v in t.meta.items())
        out.append(",".join(t.columns))
        out.extend(",".join(_fmt(v) for v in row) for row in t.rows)
    return "\n".join(out) + "\n"


def _base_meta(command: str, params: RWParams, args) -> dict:
    sp = spectral_params(params)
    meta = {"command": command, "p": params.p, "q": params.q, "r": params.r}
    meta.update(sp.as_dict())
    meta["recurrent"] = is_recurrent(params)
    if params.r <= 1 - R_UPPER_GUARD:
        meta["calibration_constant"] = LimitLaw(params).calibration
    else:
        meta["calibration_constant"] = "undefined (r too close to 1)"
    meta.update({"steps": args.steps, "window": args.window, "kgrid": args.kgrid, "quad": args.quad})
    return meta


def cmd_spectrum(params: RWParams, args) -> Table:
    meta = _base_meta("spectrum", params, args)
    cols = ["k", "J_0", "J_1", "J_2"] + [f"arg_U_{i}" for i in range(6)] + ["map_deviation"]
    rows, worst = [], 0.0
    for m in range(args.kgrid):
        k = 2 * np.pi * m / args.kgrid
        jv = np.linalg.eigvalsh(twisted_matrix(params, k))
        args_u = np.sort(np.angle(np.linalg.eigvals(twisted_szegedy_unitary(params, k).matrix)))
        rep = spectral_map_check(params, k, args.tol_spectral)
        worst = max(worst, rep.max_deviation)
        rows.append([k, *jv, *args_u, rep.max_deviation])
    meta["spectral_map_max_deviation"] = worst
    if worst >= args.tol_spectral:
        raise VerificationFailure(f"spectral mapping deviation {worst:.3e} exceeds {args.tol_spectral:.1e}")
    return Table(meta, cols, rows)


def _window(args, needed: int) -> tuple[int, int]:
    radius = needed + 2 if args.window is None else args.window
    return (-radius, radius)


def cmd_simulate(params: RWParams, args) -> Table:
    n = args.steps
    window, hist = ensemble_history(params, MIXED, n, window=_window(args, n))
    cells = np.arange(window[0], window[1] + 1)
    keep = np.abs(cells) <= n
    final = hist[n]
    meta = _base_meta("simulate", params, args)
    meta["total_mass"] = float(final.sum())
    dist = Distribution(window, final)
    meta["mean"] = moments(dist, 1)
    meta["second_moment"] = moments(dist, 2)
    if n >= 1:
        meta["pseudo_velocity_empirical"] = pseudo_velocity_empirical(dist, n, args.epsilon)
    checkpoints = sorted(set(c for c in args.checkpoint if c <= n))
    cols = ["j", "x", "mass", "cdf"] + [f"mass_n{c}" for c in checkpoints]
    cdf = np.cumsum(final)
    rows = []
    for i in np.flatnonzero(keep):
        x = cells[i] / n if n else 0.0
        rows.append([int(cells[i]), x, final[i], cdf[i], *(hist[c][i] for c in checkpoints)])
    return Table(meta, cols, rows)


def cmd_localization(params: RWParams, args) -> Table:
    radius = 20 if args.window is None else args.window
    t_hi = args.steps
    if t_hi < 2:
        raise UsageError("localization needs --steps >= 2 for the time average over [steps/2, steps)")
    t_lo = t_hi // 2
    even = ensemble_profile(params, MIXED, radius, parity="even")
    odd = ensemble_profile(params, MIXED, radius, parity="odd")
    avg = ensemble_profile(params, MIXED, radius, parity="average")
    sim = time_averaged_distribution(params, MIXED, t_lo, t_hi, radius)
    meta = _base_meta("localization", params, args)
    meta.update({"time_average_from": t_lo, "time_average_to": t_hi,
                 "localized_mass_even": even.total(), "localized_mass_odd": odd.total(),
                 "localized_mass_average": avg.total(), "simulated_mass_window": sim.total()})
    diff = sim.masses - avg.masses
    meta["max_cell_difference"] = float(np.max(np.abs(diff)))
    cols = ["j", "even", "odd", "average", "simulated", "difference"]
    rows = [[int(j), even.masses[i], odd.masses[i], avg.masses[i], sim.masses[i], diff[i]]
            for i, j in enumerate(avg.cells)]
    return Table(meta, cols, rows)


def cmd_limit(params: RWParams, args) -> Table:
    if params.r > 1 - R_UPPER_GUARD:
        raise UsageError("the weak limit is only defined for 0 < r < 1; r is within 1e-9 of 1")
    law = LimitLaw(params)
    x = law.kappa * (2 * (np.arange(args.quad) + 0.5) / args.quad - 1)
    meta = _base_meta("limit", params, args)
    meta["atom_mass"] = law.atom_mass
    if args.steps >= 1:
        n = args.steps
        window, hist = ensemble_history(params, MIXED, n, window=_window(args, n))
        rep = ks_distance(Distribution(window, hist[n]), n, law, atom_radius=args.atom_radius)
        meta.update({"ks_distance": rep.distance, "ks_distance_unrestricted": rep.distance_all,
                     "ks_atom_radius": rep.atom_radius})
    cols = ["x", "density", "gamma_plus", "gamma_minus", "wave_plus", "wave_minus", "cdf"]
    cols_data = [x, law.density(x), law.gamma(x, 1), law.gamma(x, -1), law.wave(x, 1), law.wave(x, -1),
                 law.cdf(x)]
    rows = [list(r) for r in zip(*cols_data)]
    return Table(meta, cols, rows)


def _tols(args) -> dict:
    return {k[4:]: v for k, v in vars(args).items() if k.startswith("tol_")}


def cmd_verify(params: RWParams, args) -> Table:
    coin = None
    if args.corrupt_coin:
        coin = coin_operator(params) + args.corrupt_coin
    checks = run_suites(params, full=args.full, steps=max(args.steps, 2), kgrid=args.kgrid,
                        quad=args.quad, coin=coin, tols=_tols(args))
    for c in checks:
        print(c.line(), file=sys.stderr)
    meta = _base_meta("verify", params, args)
    meta["passed"] = all(c.passed for c in checks)
    rows = [[c.name, c.passed, c.deviation, c.tol, c.detail] for c in checks]
    return Table(meta, ["suite", "passed", "deviation", "tol", "detail"], rows)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "localization": cmd_localization,
    "limit": cmd_limit,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--steps", type=_int_at_least(0, "--steps"), default=1000, help="time horizon n")
    common.add_argument("--window", type=_int_at_least(1, "--window"), default=None,
                        help="cell radius of the simulation window (default n + 2; 20 for localization)")
    common.add_argument("--kgrid", type=_int_at_least(16, "--kgrid"), default=100, help="k-grid size")
    common.add_argument("--quad", type=_int_at_least(16, "--quad"), default=4096, help="quadrature / x-grid size")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--sweep", type=_sweep, default=None, metavar="NAME=START:STOP:COUNT",
                        help="repeat the command over evenly spaced values of p, q or r")
    tol = common.add_argument_group("tolerances")
    tol.add_argument("--tol-unitarity", type=float, default=1e-9)
    tol.add_argument("--tol-spectral", type=float, default=1e-10)
    tol.add_argument("--tol-eigen", type=float, default=1e-12)
    tol.add_argument("--tol-density", type=float, default=1e-8)
    tol.add_argument("--tol-mass", type=float, default=1e-6)
    tol.add_argument("--tol-charfn", type=float, default=1e-8)
    tol.add_argument("--tol-total", type=float, default=1e-2)
    tol.add_argument("--tol-cell", type=float, default=1e-2)
    tol.add_argument("--tol-ks", type=float, default=0.05)

    parser = _Parser(prog="magnifier-qw",
                     description="Szegedy walk on the magnifier graph: spectra, simulation, localization and limit law.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=COMMANDS[name].__name__.replace("cmd_", ""))
        required = name != "verify"
        defaults = {} if required else {"p": GROVER.p, "q": GROVER.q, "r": GROVER.r}
        for flag in ("p", "q", "r"):
            sp.add_argument(f"--{flag}", type=_unit_open(flag), required=required,
                            default=defaults.get(flag))
        if name == "simulate":
            sp.add_argument("--checkpoint", type=_int_at_least(0, "--checkpoint"), action="append", default=[],
                            help="also write mu at this intermediate time (repeatable)")
            sp.add_argument("--epsilon", type=float, default=1e-3, help="tail mass for the pseudo velocity")
        if name == "limit":
            sp.add_argument("--atom-radius", type=_int_at_least(0, "--atom-radius"), default=20,
                            help="cells around 0 excluded from the KS supremum")
        if name == "verify":
            sp.add_argument("--full", action="store_true", help="add the long-horizon simulation suites")
            sp.add_argument("--corrupt-coin", type=float, default=0.0, metavar="EPS",
                            help="add EPS to every coin entry (negative control)")
    return parser


def _param_list(args) -> list[RWParams]:
    base = {"p": args.p, "q": args.q, "r": args.r}
    if args.sweep is None:
        return [RWParams(**base)]
    name, values = args.sweep
    return [RWParams(**{**base, name: v}) for v in values]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = COMMANDS[args.command]
    try:
        tables = [handler(prm, args) for prm in _param_list(args)]
    except (UsageError, LimitDomainError, ValueError) as exc:
        print(f"magnifier-qw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WindowOverflowError as exc:
        print(f"magnifier-qw: window overflow: {exc} (pass a larger --window)", file=sys.stderr)
        return EXIT_OVERFLOW
    except VerificationFailure as exc:
        print(f"magnifier-qw: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    text = render(tables, args.format)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if args.command == "verify" and not all(t.meta["passed"] for t in tables):
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
