"""Command-line front end.  Every command writes CSV: a ``# config:`` comment
line with the full configuration, a header row, then data rows.

Exit codes: 0 success, 1 invalid input, 2 a verification step failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field

from geonets import __version__
from geonets.digits import default_depth
from geonets.integrands import CATALOG, make_integrand
from geonets.nets import NetConstructionError, net_for, verify_net
from geonets.quad import gain_table
from geonets.regions import (NonConvergentSplitError, ProductSpace, SplitScheme, cell_volumes, default_root,
                             measure_preservation_check, sphericity_profile)
from geonets.scramble import ScrambleKey, scramble_point_set
from geonets.study import METHODS, BudgetError, convergence_study, fit_slope

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun a command; echoed into the CSV header."""

    command: str
    schemes: tuple[str, ...] = ()
    s: int | None = None
    b: int | None = None
    m_min: int | None = None
    m_max: int | None = None
    t: int = 0
    replicates: int = 30
    seed: int = 1
    integrand: str | None = None
    digits: int | None = None
    out: str | None = None
    options: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        d = json.loads(text)
        d["schemes"] = tuple(d["schemes"])
        return cls(**d)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Bad flags exit with code 1, keeping 2 for verification failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _schemes(text: str) -> tuple[str, ...]:
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    for name in names:
        try:
            SplitScheme.parse(name)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
    return names


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=1, help="master scramble seed (default 1)")
    common.add_argument("--replicates", type=int, default=30, help="independent scrambles R (default 30)")
    common.add_argument("--digits", type=int, default=None, help="digit depth K (default floor(52/log2 b))")
    common.add_argument("--out", default=None, help="write CSV here instead of stdout")

    p = _Parser(prog="geonets", description="Scrambled geometric nets: generation, checks and experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("net", parents=[common], help="generate and verify a (0,m,s)-net")
    q.add_argument("-b", type=int, required=True)
    q.add_argument("-s", type=int, required=True)
    q.add_argument("-m", type=int, required=True)
    q.add_argument("-t", type=int, default=0, help="quality to verify (default 0)")
    q.add_argument("--scramble", action="store_true", help="emit replicate 1 of the scrambled net")

    q = sub.add_parser("sample", parents=[common], help="emit scrambled geometric net points")
    q.add_argument("--scheme", type=_schemes, required=True, help="comma list, one scheme per factor")
    q.add_argument("-m", type=int, required=True)
    q.add_argument("--replicate", type=int, default=1, help="replicate id (default 1)")

    q = sub.add_parser("converge", parents=[common], help="variance against n for nets and plain MC")
    q.add_argument("--scheme", type=_schemes, required=True)
    q.add_argument("--integrand", choices=CATALOG, default="smooth")
    q.add_argument("--m-min", type=int, required=True)
    q.add_argument("--m-max", type=int, required=True)
    q.add_argument("--methods", default=",".join(METHODS), help="comma list of " + ", ".join(METHODS))
    q.add_argument("--max-slope", type=float, default=None,
                   help="exit 2 unless the net's fitted slope is at most this")

    q = sub.add_parser("gains", parents=[common], help="gain coefficients of a (0,m,s)-net")
    q.add_argument("-b", type=int, required=True)
    q.add_argument("-s", type=int, required=True)
    q.add_argument("-m", type=int, required=True)
    q.add_argument("--max-total", type=int, default=None, help="largest |u| + |kappa| (default m + 2)")

    q = sub.add_parser("verify-measure", parents=[common], help="chi-square test of phi's measure preservation")
    q.add_argument("--scheme", type=_schemes, required=True)
    q.add_argument("--level", type=int, default=2)
    q.add_argument("--samples", type=int, default=None, help="default 100 * b^level")
    q.add_argument("--alpha", type=float, default=0.999, help="acceptance quantile (default 0.999)")

    q = sub.add_parser("sphericity", parents=[common], help="empirical sphericity constant by level")
    q.add_argument("--scheme", type=_schemes, required=True)
    q.add_argument("--depth", type=int, default=8)
    return p


def _single(schemes: tuple[str, ...]) -> SplitScheme:
    if len(schemes) != 1:
        raise UsageError("this command takes exactly one scheme")
    return SplitScheme.parse(schemes[0])


def _fmt(x) -> str:
    return repr(float(x))


def _config(args) -> ExperimentConfig:
    base = dict(command=args.command, replicates=args.replicates, seed=args.seed, digits=args.digits, out=args.out)
    c = args.command
    if c == "net":
        return ExperimentConfig(**base, b=args.b, s=args.s, m_min=args.m, m_max=args.m, t=args.t,
                                options={"scramble": args.scramble})
    if c == "sample":
        return ExperimentConfig(**base, schemes=args.scheme, s=len(args.scheme), m_min=args.m, m_max=args.m,
                                options={"replicate": args.replicate})
    if c == "converge":
        return ExperimentConfig(**base, schemes=args.scheme, s=len(args.scheme), m_min=args.m_min,
                                m_max=args.m_max, integrand=args.integrand,
                                options={"methods": args.methods, "max_slope": args.max_slope})
    if c == "gains":
        return ExperimentConfig(**base, b=args.b, s=args.s, m_min=args.m, m_max=args.m,
                                options={"max_total": args.max_total})
    if c == "verify-measure":
        return ExperimentConfig(**base, schemes=args.scheme, s=1,
                                options={"level": args.level, "samples": args.samples, "alpha": args.alpha})
    return ExperimentConfig(**base, schemes=args.scheme, s=1, options={"depth": args.depth})


def _net(cfg: ExperimentConfig, w, notes: list[str]) -> int:
    if not 0 <= cfg.t <= cfg.m_max:
        raise UsageError(f"need 0 <= t <= m, got t={cfg.t}")
    K = cfg.digits
    if K is None:
        # unscrambled nets carry only m meaningful digits
        K = default_depth(cfg.b) if cfg.options["scramble"] else max(cfg.m_max, 1)
    ps = net_for(cfg.b, cfg.s, cfg.m_max, depth=K)
    if cfg.options["scramble"]:
        ps = scramble_point_set(ps, ScrambleKey(cfg.seed, 1))
    sep = "" if cfg.b <= 10 else ":"
    vals = ps.values()
    w.writerow(["i", "j", "value", "digits"])
    for i in range(ps.n):
        for j in range(ps.spec.s):
            w.writerow([i, j + 1, _fmt(vals[i, j]), sep.join(str(int(a)) for a in ps.digits[i, j])])
    ok = verify_net(ps, cfg.t)
    notes.append(f"verdict: t={cfg.t} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAILED


def _sample(cfg: ExperimentConfig, w, notes: list[str]) -> int:
    space = ProductSpace.of(cfg.schemes)
    K = cfg.digits if cfg.digits is not None else default_depth(space.base)
    ps = scramble_point_set(net_for(space.base, space.s, cfg.m_max, depth=K),
                            ScrambleKey(cfg.seed, cfg.options["replicate"]))
    xs = space.map(ps.digits)
    width = max(x.shape[1] for x in xs)
    w.writerow(["i", "factor"] + [f"x{c}" for c in range(width)])
    for i in range(ps.n):
        for j, x in enumerate(xs):
            w.writerow([i, j + 1] + [_fmt(v) for v in x[i]] + [""] * (width - x.shape[1]))
    return EXIT_OK


def _converge(cfg: ExperimentConfig, w, notes: list[str]) -> int:
    space = ProductSpace.of(cfg.schemes)
    f = make_integrand(cfg.integrand, space)
    methods = tuple(x.strip() for x in cfg.options["methods"].split(",") if x.strip())
    if cfg.m_min > cfg.m_max:
        raise UsageError("--m-min must not exceed --m-max")
    rows = convergence_study(f, space, range(cfg.m_min, cfg.m_max + 1), cfg.replicates, cfg.seed, methods, cfg.digits)
    slopes = {}
    for meth in methods:
        try:
            slopes[meth] = fit_slope(rows, meth)
        except ValueError:
            slopes[meth] = float("nan")
    w.writerow(["m", "method", "n", "mean", "variance", "stderr", "slope"])
    for r in rows:
        w.writerow([r.m, r.method, r.n, _fmt(r.mean), _fmt(r.variance), _fmt(r.stderr), _fmt(slopes[r.method])])
    limit = cfg.options["max_slope"]
    net = slopes.get("scrambled-geometric-net")
    if limit is not None and net is not None:
        ok = net <= limit
        notes.append(f"verdict: slope {net:.4f} <= {limit} {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_FAILED
    return EXIT_OK


def _gains(cfg: ExperimentConfig, w, notes: list[str]) -> int:
    ps = net_for(cfg.b, cfg.s, cfg.m_max, depth=cfg.digits)
    total = cfg.options["max_total"]
    total = cfg.m_max + 2 if total is None else total
    w.writerow(["u", "kappa", "gamma"])
    for (u, kap), g in gain_table(ps, total).items():
        w.writerow([";".join(map(str, u)), ";".join(map(str, kap)), _fmt(g)])
    return EXIT_OK


def _verify_measure(cfg: ExperimentConfig, w, notes: list[str]) -> int:
    scheme = _single(cfg.schemes)
    root = default_root(scheme)
    k = cfg.options["level"]
    N = cfg.options["samples"] or 100 * scheme.base ** k
    res = measure_preservation_check(root, scheme, cfg.seed, N, k, cfg.digits)
    expected = N * cell_volumes(root, scheme, k) / root.volume
    w.writerow(["cell", "observed", "expected"])
    for c, (o, e) in enumerate(zip(res.counts, expected)):
        w.writerow([c, int(o), _fmt(e)])
    ok = res.passes(cfg.options["alpha"])
    notes.append(f"chi2 {res.statistic:.6g} dof {res.dof} p {res.pvalue:.4g}")
    notes.append(f"verdict: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAILED


def _sphericity(cfg: ExperimentConfig, w, notes: list[str]) -> int:
    scheme = _single(cfg.schemes)
    prof = sphericity_profile(default_root(scheme), scheme, cfg.options["depth"])
    w.writerow(["k", "C_hat"])
    for k, c in enumerate(prof):
        w.writerow([k, _fmt(c)])
    notes.append(f"sphericity constant {prof.max():.10g}")
    return EXIT_OK


COMMANDS = {
    "net": _net,
    "sample": _sample,
    "converge": _converge,
    "gains": _gains,
    "verify-measure": _verify_measure,
    "sphericity": _sphericity,
}


def run(cfg: ExperimentConfig) -> tuple[int, str]:
    """Execute ``cfg``; returns the exit code and the CSV text."""
    buf = io.StringIO()
    buf.write(f"# config: {cfg.to_json()}\n")
    w = csv.writer(buf, lineterminator="\n")
    notes: list[str] = []
    code = COMMANDS[cfg.command](cfg, w, notes)
    for line in notes:
        buf.write(f"# {line}\n")
    return code, buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.replicates < 2:
        print("geonets: error: --replicates must be at least 2", file=sys.stderr)
        return EXIT_INVALID
    cfg = _config(args)
    try:
        code, text = run(cfg)
    except (UsageError, NetConstructionError, NonConvergentSplitError, BudgetError, ValueError, OverflowError) as e:
        print(f"geonets: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in text.splitlines():
        if line.startswith("# verdict") or line.startswith("# chi2") or line.startswith("# sphericity"):
            print(line[2:], file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
