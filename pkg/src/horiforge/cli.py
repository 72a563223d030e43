"""Command-line verification harness: ``horiforge <command> [flags]``."""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

from . import modular, tduality, theta, witten
from .coeffs import format_scalar
from .forms import Form
from .gerbe import SurrogateError
from .instances import (anomalous_pair, decomposable_pair, odd_diagonal,
                        random_diagonal_pair)
from .modelfile import ModelFile, ModelFileError, load_model
from .series import QYSeries

REPORT_VERSION = "1"

TOL_THETA = 1e-9
TOL_THETA_DERIVATIVE = 1e-8
TOL_NUMERIC = 1e-8
TOL_JACOBI = 1e-7

STATUSES = ("pass", "fail", "refused", "skipped")


@dataclass
class CheckRecord:
    name: str
    status: str
    residual: float | None = None
    tol: float | None = None
    ms: float = 0.0
    reason: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        if not d["reason"]:
            del d["reason"]
        return d


@dataclass
class CheckReport:
    suite: str
    checks: list[CheckRecord] = field(default_factory=list)
    version: str = REPORT_VERSION

    @property
    def verdict(self) -> str:
        return "fail" if any(c.status == "fail" for c in self.checks) else "pass"

    def to_json(self) -> dict:
        return {"suite": self.suite, "version": self.version,
                "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.name)],
                "verdict": self.verdict}

    @classmethod
    def from_json(cls, doc: dict) -> "CheckReport":
        if set(doc) != {"suite", "version", "checks", "verdict"}:
            raise ValueError(f"unexpected report keys {sorted(doc)}")
        checks = []
        for c in doc["checks"]:
            if c["status"] not in STATUSES:
                raise ValueError(f"unknown status {c['status']!r}")
            checks.append(CheckRecord(c["name"], c["status"], c["residual"], c["tol"], c["ms"],
                                      c.get("reason", "")))
        rep = cls(doc["suite"], checks, doc["version"])
        if rep.verdict != doc["verdict"]:
            raise ValueError("verdict does not match the check records")
        return rep

    def render(self) -> str:
        lines = [f"suite {self.suite}"]
        for c in sorted(self.checks, key=lambda c: c.name):
            res = "-" if c.residual is None else f"{c.residual:.3e}"
            tol = "-" if c.tol is None else f"{c.tol:.1e}"
            extra = f"  ({c.reason})" if c.reason else ""
            lines.append(f"  {c.status.upper():8s} {c.name:40s} residual={res} tol={tol} "
                         f"{c.ms:.0f}ms{extra}")
        lines.append(f"verdict: {self.verdict}")
        return "\n".join(lines)


def _threads() -> int:
    raw = os.environ.get("HORIFORGE_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"HORIFORGE_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


class InputError(ValueError):
    pass


def _numeric_record(name: str, residual: float, tol: float) -> CheckRecord:
    return CheckRecord(name, "pass" if residual < tol else "fail", residual, tol)


def _exact_record(name: str, residual) -> CheckRecord:
    """Exact suites demand literal zero; the reported residual is the largest coefficient."""
    size = _size(residual)
    return CheckRecord(name, "pass" if _is_exact_zero(residual) else "fail", size, 0.0)


def _is_exact_zero(x) -> bool:
    if isinstance(x, QYSeries):
        return all(c.is_zero() if isinstance(c, Form) else c == 0 for c in x.terms.values())
    if isinstance(x, Form):
        return x.is_zero()
    return x == 0


def _size(x) -> float:
    if isinstance(x, (QYSeries, Form)):
        return float(x.max_abs())
    return abs(complex(x))


def run_suite(suite: str, tasks: list[tuple[str, Callable[[], CheckRecord]]]) -> CheckReport:
    """Run independent checks, possibly concurrently; records are sorted by name."""

    def timed(item):
        name, fn = item
        t0 = time.perf_counter()
        try:
            rec = fn()
        except modular.SamplingExhaustedError as exc:
            rec = CheckRecord(name, "skipped", reason=str(exc))
        rec.ms = (time.perf_counter() - t0) * 1000
        return rec

    n = _threads()
    if n == 1 or len(tasks) == 1:
        records = [timed(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            records = list(pool.map(timed, tasks))
    return CheckReport(suite, records)


def _rng(seed: int, name: str) -> random.Random:
    """Per-check generator so results do not depend on scheduling."""
    return random.Random(f"{seed}:{name}")


# -- argument helpers ------------------------------------------------------------

def _window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi integers, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("y-window lower bound exceeds upper bound")
    return lo, hi


def _int_range(text: str) -> list[int]:
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":"))
            if lo > hi:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi or a comma list, got {text!r}") \
            from None


def _degrees(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated degrees, got {text!r}") \
            from None


def _kinds(text: str | None) -> list[witten.WittenKind]:
    if text in (None, "all"):
        return list(witten.WittenKind)
    try:
        return [witten.WittenKind.parse(k) for k in text.split(",")]
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _model(args, required: bool = True) -> ModelFile | None:
    if args.model is None:
        if required:
            raise InputError("--model is required")
        return None
    return load_model(args.model)


def _pair(args) -> tduality.TDualPair:
    mf = _model(args, required=False)
    return tduality.t3_pair() if mf is None else mf.pair()


def _modules(args):
    mf = _model(args, required=False)
    if mf is None:
        inst = decomposable_pair()
        return inst.E, inst.Ep
    return mf.module_pair()


# -- suites ------------------------------------------------------------------------

SCALAR_LAWS = ("T-shift", "S-inversion", "z+1", "z+tau")
DERIVATIVE_LAWS = ("derivative-T", "derivative-S")


def cmd_theta_laws(args) -> CheckReport:
    samples = args.samples or 100
    tasks = []
    for kind in theta.ThetaKind:
        for law in SCALAR_LAWS + DERIVATIVE_LAWS:
            name = f"{kind.value}:{law}"
            default = TOL_THETA_DERIVATIVE if law.startswith("derivative") else TOL_THETA
            tol = args.tol if args.tol is not None else default

            def task(kind=kind, law=law, name=name, tol=tol):
                rng = _rng(args.seed, name)
                worst = 0.0
                for _ in range(samples):
                    v, tau = theta.sample_point(rng)
                    worst = max(worst, theta.theta_transform_residual(kind, law, v, tau))
                return _numeric_record(name, worst, tol)
            tasks.append((name, task))
    return run_suite("theta-laws", tasks)


def _calibration_functions():
    def const(z, tau):
        num = theta.theta_numeric(theta.ThetaKind.THETA, z, tau)
        if abs(num) < modular.SINGULAR_THRESHOLD:
            raise modular.ResampleSignal("theta vanishes")
        return num / num

    def ratio4(z, tau):
        den = theta.theta_numeric(theta.ThetaKind.THETA, z, tau)
        if abs(den) < modular.SINGULAR_THRESHOLD:
            raise modular.ResampleSignal("theta vanishes")
        return (theta.theta_numeric(theta.ThetaKind.THETA1, z, tau) / den) ** 4

    return {"theta/theta": const, "(theta1/theta)^4": ratio4}


def cmd_jacobi_calibrate(args) -> CheckReport:
    samples = args.samples or 20
    tol = args.tol if args.tol is not None else TOL_NUMERIC
    spec = modular.JacobiSpec(0, 0, modular.SubgroupId.GAMMA0_2)
    tasks = []
    for fname, f in _calibration_functions().items():
        for tname, tr in spec.transforms():
            name = f"{fname}:{tname}"

            def task(f=f, tname=tname, tr=tr, name=name):
                reps = modular.check_jacobi(f, spec, _rng(args.seed, name), samples,
                                            [(tname, tr)])
                return _numeric_record(name, reps[0].max_residual, tol)
            tasks.append((name, task))
    return run_suite("jacobi-calibrate", tasks)


def cmd_hori_demo(args) -> CheckReport:
    pair = _pair(args)
    r1, r2 = tduality.flux_duality_residuals(pair)
    report = run_suite("hori-demo", [
        ("flux:int_Z H = Fhat", lambda: _exact_record("flux:int_Z H = Fhat", r1)),
        ("flux:int_Zhat Hhat = F", lambda: _exact_record("flux:int_Zhat Hhat = F", r2)),
        ("flux:Hhat - H = d(A Ahat)",
         lambda: _exact_record("flux:Hhat - H = d(A Ahat)", pair.correspondence_residual())),
    ])
    if not args.json:
        alg = pair.algebra
        print(f"H    = {pair.Z.H}")
        print(f"Hhat = {pair.Zhat.H}")
        for label, omega in (("1", alg.one()), ("A", pair.Z.A)):
            print(f"T_1({label}) = {tduality.hori_level(1, omega, pair)}")
    return report


def cmd_chain_check(args) -> CheckReport:
    pair = _pair(args)
    levels = args.m or list(range(-8, 9))
    samples = args.samples or 500
    tasks = []
    for side in ("Z", "Zhat"):
        name = f"chain:{side}"

        def task(side=side, name=name):
            rng = _rng(args.seed, name)
            worst, ok = 0.0, True
            for k in range(samples):
                m = levels[k % len(levels)]
                omega = tduality.random_invariant_form(rng, pair, side)
                res = tduality.chain_residual(m, omega, pair, side)
                ok = ok and res.is_zero()
                worst = max(worst, res.max_abs())
            return CheckRecord(name, "pass" if ok else "fail", worst, 0.0)
        tasks.append((name, task))
    return run_suite("chain-check", tasks)


def _random_family(rng: random.Random, pair, side: str, levels) -> tduality.GradedInvariantFamily:
    slots = {}
    for m in rng.sample(levels, min(3, len(levels))):
        slots[m] = tduality.random_invariant_form(rng, pair, side)
    return tduality.GradedInvariantFamily(slots, side)


def cmd_euler_check(args) -> CheckReport:
    pair = _pair(args)
    levels = args.m or list(range(-8, 9))
    samples = args.samples or 500
    tasks = []
    for side in ("Z", "Zhat"):
        name = f"euler:{side}"

        def euler(side=side, name=name):
            rng = _rng(args.seed, name)
            worst, ok = 0.0, True
            for _ in range(samples):
                res = tduality.euler_residual(_random_family(rng, pair, side, levels), pair)
                ok = ok and res.is_zero()
                worst = max([worst] + [w.max_abs() for w in res.slots.values()])
            return CheckRecord(name, "pass" if ok else "fail", worst, 0.0)
        tasks.append((name, euler))

        iname = f"inverse:{side}"

        def inverse(side=side, iname=iname):
            rng = _rng(args.seed, iname)
            other = pair.other(side)
            worst, ok = 0.0, True
            nonzero = [m for m in levels if m != 0] or [1]
            for k in range(samples):
                m = nonzero[k % len(nonzero)]
                omega = tduality.random_invariant_form(rng, pair, side)
                back = tduality.hori_inverse(m, tduality.hori_level(m, omega, pair, side),
                                             pair, other)
                res = back - omega
                ok = ok and res.is_zero()
                worst = max(worst, res.max_abs())
            return CheckRecord(iname, "pass" if ok else "fail", worst, 0.0)
        tasks.append((iname, inverse))
    return run_suite("euler-check", tasks)


def cmd_witten_identity(args) -> CheckReport:
    E, Ep = _modules(args)
    q_order = args.q_order
    window = args.y_window
    tol = args.tol if args.tol is not None else TOL_NUMERIC
    tasks = []
    for kind in _kinds(args.kind):
        name = f"{kind.value}:capital=det"

        def identity(kind=kind, name=name):
            a = witten.witten_capital(kind, E, Ep, q_order, window, exact=args.exact)
            b = witten.theta_det_form(kind, E, Ep, q_order, window, exact=args.exact)
            if args.exact:
                return _exact_record(name, a - b)
            return _numeric_record(name, (a - b).max_abs(), tol)
        tasks.append((name, identity))

        oname = f"{kind.value}:gch=wmn"

        def oracle(kind=kind, oname=oname):
            n_max = min(Fraction(q_order), Fraction(6))
            g = witten.gch_ratio(kind, E, Ep, n_max, window, exact=True)
            table = witten.wmn_table(kind, E, Ep, n_max, exact=True)
            zero = E.model.zero()
            keys = {(n, m) for (n, m) in table if window[0] <= m <= window[1]}
            keys |= {(q, y) for q, y, _ in g.items()}
            diff = [g.coefficient(n, m, default=zero) - table.get((n, m), zero)
                    for n, m in keys]
            worst = max((d.max_abs() for d in diff), default=0.0)
            ok = all(d.is_zero() for d in diff)
            return CheckRecord(oname, "pass" if ok else "fail", worst, 0.0)
        tasks.append((oname, oracle))
    return run_suite("witten-identity", tasks)


def _jacobi_records(verdict: witten.JacobiVerdict, tol: float, prefix: str) -> list[CheckRecord]:
    if verdict.status == "refused":
        return [CheckRecord(f"{prefix}", "refused", reason=verdict.reason)]
    return [_numeric_record(f"{prefix}:p={c.degree}:{c.transform}", c.max_residual, tol)
            for c in verdict.checks]


def cmd_witten_jacobi(args) -> CheckReport:
    E, Ep = _modules(args)
    degrees = args.degrees or [0, 2, 4]
    samples = args.samples or 10
    tol = args.tol if args.tol is not None else TOL_JACOBI
    records = []
    for kind in _kinds(args.kind):
        t0 = time.perf_counter()
        v = witten.witten_jacobi_check(kind, E, Ep, degrees, samples,
                                       _rng(args.seed, kind.value), tol)
        recs = _jacobi_records(v, tol, kind.value)
        for r in recs:
            r.ms = (time.perf_counter() - t0) * 1000 / len(recs)
        records += recs
    return CheckReport("witten-jacobi", records)


def cmd_deri_check(args) -> CheckReport:
    mf = _model(args, required=False)
    if mf is None:
        inst = random_diagonal_pair(random.Random(args.seed), rank=2, max_degree=6,
                                    exact=args.exact, scale=Fraction(1, 4))
        E, Ep = inst.E, inst.Ep
    else:
        E, Ep = mf.module_pair()
    tol = args.tol if args.tol is not None else TOL_NUMERIC
    tasks = []
    for kind in _kinds(args.kind):
        name = f"{kind.value}:deri"

        def task(kind=kind, name=name):
            r = witten.deri_residual(kind, E, Ep, args.q_order, args.y_window, exact=args.exact)
            if args.exact:
                return _exact_record(name, r)
            return _numeric_record(name, r.max_abs(), tol)
        tasks.append((name, task))
    return run_suite("deri-check", tasks)


def cmd_odd_jacobi(args) -> CheckReport:
    mf = _model(args, required=False)
    path = odd_diagonal().path if mf is None else mf.path()
    degrees = args.degrees or [1, 3]
    samples = args.samples or 10
    tol = args.tol if args.tol is not None else TOL_JACOBI
    records = []
    for kind in _kinds(args.kind):
        t0 = time.perf_counter()
        v = witten.odd_jacobi_check(kind, path, degrees, samples,
                                    _rng(args.seed, kind.value), tol)
        recs = _jacobi_records(v, tol, kind.value)
        for r in recs:
            r.ms = (time.perf_counter() - t0) * 1000 / len(recs)
        records += recs
    return CheckReport("odd-jacobi", records)


# -- expand -----------------------------------------------------------------------

EXPAND_TARGETS = ("theta", "theta1", "theta2", "theta3", "gch", "capital", "det", "deri",
                  "odd")


def _fmt_exp(x: Fraction) -> str:
    return str(Fraction(x))


def format_coefficient(c) -> str:
    if isinstance(c, Form):
        if c.is_zero():
            return "0"
        items = sorted(c.terms.items(), key=lambda kv: (c.model.word_degree(kv[0]), kv[0]))
        return " + ".join(f"({format_scalar(v)})*{c.word_str(w)}" if w else
                          f"({format_scalar(v)})" for w, v in items)
    return format_scalar(c)


def dump_lines(s: QYSeries) -> list[str]:
    """One line per term: ``q^<r_q> y^<r_y> <coefficient>``."""
    return [f"q^{_fmt_exp(q)} y^{_fmt_exp(y)} {format_coefficient(c)}" for q, y, c in s.items()]


def _expand_target(args) -> QYSeries:
    what = args.what
    if what in ("theta", "theta1", "theta2", "theta3"):
        return theta.theta_series(what, args.q_order, args.y_window, exact=True)
    kind = _kinds(args.kind or "Theta")[0]
    if what == "odd":
        mf = _model(args, required=False)
        path = odd_diagonal().path if mf is None else mf.path()
        return witten.odd_witten(kind, path, args.q_order, args.y_window, exact=args.exact)
    E, Ep = _modules(args)
    if what == "gch":
        return witten.gch_ratio(kind, E, Ep, args.q_order, args.y_window, exact=True)
    if what == "capital":
        return witten.witten_capital(kind, E, Ep, args.q_order, args.y_window, args.exact)
    if what == "det":
        return witten.theta_det_form(kind, E, Ep, args.q_order, args.y_window, args.exact)
    return witten.deri_residual(kind, E, Ep, args.q_order, args.y_window, args.exact)


def cmd_expand(args):
    s = _expand_target(args)
    if args.json:
        print(json.dumps({"what": args.what, "q_order": _fmt_exp(s.q_order),
                          "y_window": [_fmt_exp(v) for v in s.y_window],
                          "truncated": s.truncated,
                          "terms": [{"q": _fmt_exp(q), "y": _fmt_exp(y),
                                     "coeff": format_coefficient(c)} for q, y, c in s.items()]},
                         indent=2))
    else:
        for line in dump_lines(s):
            print(line)
        if s.truncated:
            print("# truncated: y-exponents outside the window were dropped")
    return None


COMMANDS = {
    "theta-laws": cmd_theta_laws,
    "jacobi-calibrate": cmd_jacobi_calibrate,
    "hori-demo": cmd_hori_demo,
    "chain-check": cmd_chain_check,
    "euler-check": cmd_euler_check,
    "witten-identity": cmd_witten_identity,
    "witten-jacobi": cmd_witten_jacobi,
    "deri-check": cmd_deri_check,
    "odd-jacobi": cmd_odd_jacobi,
    "expand": cmd_expand,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="tolerance override for numeric checks")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--exact", action="store_true",
                        help="use exact arithmetic where the suite supports it")
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--y-window", type=_window, default=(-6, 6), metavar="LO,HI")
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--q-order", type=Fraction, default=Fraction(8))
    common.add_argument("--model", default=None, help="model definition file")
    common.add_argument("--kind", default=None, help="Theta, Theta1, Theta2, Theta3 or all")
    common.add_argument("--m", type=_int_range, default=None, metavar="LO:HI")
    common.add_argument("--degrees", type=_degrees, default=None)

    parser = argparse.ArgumentParser(prog="horiforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "expand":
            p.add_argument("--what", required=True, choices=EXPAND_TARGETS)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.samples is not None and args.samples < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return 2
    try:
        report = COMMANDS[args.command](args)
    except (ModelFileError, InputError, SurrogateError, witten.WindowError,
            tduality.InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if report is None:
        return 0
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.render())
    return 0 if report.verdict == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
