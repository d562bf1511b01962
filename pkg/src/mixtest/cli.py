"""Command-line entry point: ``mixtest test`` and ``mixtest simulate``.

Exit codes: 0 success, 1 internal error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import comparators, sim
from .core import ConfigurationError, DomainError, Sample
from .em_equal import em_test
from .em_unequal import em_test_u
from .emdriver import REFINED_ALPHAS, EMTestConfig
from .limit_dist import delta

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2


class InputError(ValueError):
    """Bad data file or contradictory flags; reported with exit code 2."""


# -- data ingestion -------------------------------------------------------

def _is_number(tok: str) -> bool:
    try:
        return math.isfinite(float(tok))
    except ValueError:
        return False


def _split(line: str, comma: bool) -> list[str]:
    if comma:
        return [t.strip() for t in line.split(",")]
    return line.split()


def read_data(path, column=None, transform: str = "none") -> Sample:
    """Load one numeric column from a text or delimited file.

    One value per line, or comma/whitespace separated columns. A non-numeric
    first row is taken as a header when a column selector is given or the
    row has several fields; otherwise it is an error like any other bad row.
    ``column`` is a header name or a 0-based index. ``transform`` is
    ``none``, ``sqrt`` or ``log``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    rows = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=1)]
    rows = [(i, ln) for i, ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise InputError(f"{path}: file is empty")
    comma = "," in rows[0][1]
    header = None
    first = _split(rows[0][1], comma)
    if not all(_is_number(t) for t in first):
        if column is not None or (len(first) > 1 and not any(_is_number(t) for t in first)):
            header = first
            rows = rows[1:]

    ncols = len(header) if header else len(_split(rows[0][1], comma)) if rows else 1
    if column is None:
        if ncols > 1:
            raise InputError(f"{path}: {ncols} columns found; choose one with --column")
        idx = 0
    elif re.fullmatch(r"\d+", str(column)):
        idx = int(column)
    elif header is not None and column in header:
        idx = header.index(column)
    else:
        raise InputError(f"{path}: no column named {column!r}")
    if idx >= ncols:
        raise InputError(f"{path}: column index {idx} out of range ({ncols} columns)")

    values = []
    for lineno, ln in rows:
        toks = _split(ln, comma)
        if idx >= len(toks) or not _is_number(toks[idx]):
            got = toks[idx] if idx < len(toks) else "<missing>"
            raise InputError(f"{path}: line {lineno}: non-numeric value {got!r}")
        values.append(float(toks[idx]))

    if transform == "log":
        bad = [v for v in values if v <= 0.0]
        if bad:
            raise InputError(f"{path}: log transform needs positive values, found {bad[0]:g}")
        values = [math.log(v) for v in values]
    elif transform == "sqrt":
        bad = [v for v in values if v < 0.0]
        if bad:
            raise InputError(f"{path}: sqrt transform needs non-negative values, found {bad[0]:g}")
        values = [math.sqrt(v) for v in values]
    elif transform != "none":
        raise InputError(f"unknown transform {transform!r}")

    if len(values) < 2:
        raise InputError(f"{path}: need at least 2 values, found {len(values)}")
    try:
        return Sample.from_values(values)
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- run record -----------------------------------------------------------

@dataclass
class RunRecord:
    command: list
    config: dict
    statistic: float
    p_value: float
    m_trajectory: list
    fitted: dict
    null_fit: dict
    wall_time: float
    comparators: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))

    def to_text(self) -> str:
        c = self.config
        lines = [
            f"EM-test ({c['variance']} variances), n={c['n']}",
            f"  alphas: {c['alphas']}  K: {c['K']}",
            f"  statistic: {self.statistic!r}",
            f"  p-value:   {self.p_value!r}  ({c['limit_law']})",
            f"  null fit:  theta0={self.null_fit['theta0']!r} sigma0={self.null_fit['sigma0']!r}",
            "  fitted:    " + ", ".join(f"{k}={v!r}" for k, v in self.fitted.items()
                                        if k != "equal_variance"),
            "  M_n^(k) by initial alpha:",
        ]
        for a, traj in zip(c["alphas"], self.m_trajectory):
            lines.append(f"    {a!r}: " + " ".join(repr(v) for v in traj))
        for name, comp in sorted(self.comparators.items()):
            pv = " ".join(f"{k}={v!r}" for k, v in sorted(comp["reference_pvalues"].items()))
            lines.append(f"  {name}: statistic={comp['statistic']!r} {pv}")
        lines.append(f"  wall time: {self.wall_time:.3f}s")
        return "\n".join(lines)


def _parse_list(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--{what}: expected a comma-separated list of numbers, got {text!r}") from None


def run_test(args, argv=None) -> tuple[RunRecord, int]:
    t0 = time.perf_counter()
    if args.refined_alphas and args.alphas is not None:
        raise InputError("--alphas and --refined-alphas are mutually exclusive")
    if args.refined_alphas and args.variance != "equal":
        raise InputError("--refined-alphas is only available with --variance equal")
    if args.variance == "unequal" and "lrt" in (args.comparator or []):
        raise InputError("the LRT comparator is only defined for --variance equal")
    sample = read_data(args.data, args.column, args.transform)
    try:
        if args.refined_alphas:
            config = EMTestConfig.refined(K=args.K, seed=args.seed)
        else:
            alphas = _parse_list(args.alphas, "alphas") if args.alphas else [0.1, 0.3, 0.5]
            config = EMTestConfig(alphas=tuple(alphas), K=args.K, seed=args.seed)
    except ConfigurationError as exc:
        raise InputError(str(exc)) from None

    equal = args.variance == "equal"
    result = em_test(sample, config) if equal else em_test_u(sample, config)
    if equal:
        law = "F(x - delta){0.5 + 0.5 F(x)}, F = chi2_1" if 0.5 in config.alphas \
            else "chi2_1 + delta"
    else:
        law = "chi2_2"

    comps = {}
    for name in args.comparator or []:
        if name == "mlrt":
            stat = comparators.mlrt_equal(sample) if equal else comparators.mlrt_unequal(sample)
            ref = comparators.reference_pvalues(stat, (2,))
        else:
            stat = comparators.lrt_equal(sample)
            ref = comparators.reference_pvalues(stat, (2, 3, 4, 6))
        comps[name] = {"statistic": stat, "reference_pvalues": ref}

    record = RunRecord(
        command=list(argv) if argv is not None else sys.argv[1:],
        config={
            "data": str(args.data),
            "column": args.column,
            "transform": args.transform,
            "n": sample.n,
            "variance": args.variance,
            "alphas": list(config.alphas),
            "K": config.K,
            "seed": config.seed,
            "starts": config.starts,
            "inner_tol": config.inner_tol,
            "inner_max_iter": config.inner_max_iter,
            "sigma_penalty": {"coefficient": 1.0 if equal else 0.25,
                              "form": "-c{s_n^2/sigma^2 + log(sigma^2/s_n^2)}"},
            "alpha_penalty": "log(1 - |1 - 2 alpha|)",
            "delta": delta(config.alphas) if equal else None,
            "limit_law": law,
        },
        statistic=result.statistic,
        p_value=result.p_value,
        m_trajectory=[list(t) for t in result.m_trajectory],
        fitted=result.fitted.as_dict(),
        null_fit=result.null_fit.as_dict(),
        wall_time=time.perf_counter() - t0,
        comparators=comps,
    )
    return record, EXIT_OK


def run_simulation(args) -> tuple[sim.SimReport, int]:
    if args.model and args.params:
        raise InputError("--model and --params are mutually exclusive")
    spec = None
    if args.model:
        try:
            spec = sim.get_model(args.model)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    elif args.params:
        vals = _parse_list(args.params, "params")
        if len(vals) != 5:
            raise InputError("--params needs five values: 1-alpha,theta1,theta2,sigma1,sigma2")
        try:
            spec = sim.ModelSpec("custom", *vals)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if args.study == "power" and spec is None:
        raise InputError("a power study needs --model or --params")
    if args.study == "type1" and spec is not None:
        raise InputError("a type1 study always uses N(0, 1); drop --model/--params")

    try:
        if args.refined_alphas:
            config = EMTestConfig.refined(K=args.K)
        else:
            alphas = _parse_list(args.alphas, "alphas") if args.alphas else [0.1, 0.3, 0.5]
            config = EMTestConfig(alphas=tuple(alphas), K=args.K)
    except ConfigurationError as exc:
        raise InputError(str(exc)) from None

    levels = _parse_list(args.levels, "levels") if args.levels else None
    try:
        if args.study == "type1":
            if args.critical == "simulated":
                raise InputError("type1 studies use asymptotic critical values")
            return sim.type1_study(args.method, args.n, args.reps,
                                   tuple(levels or (0.10, 0.05, 0.01)), args.seed,
                                   config=config, workers=args.workers), EXIT_OK
        if levels is not None and len(levels) != 1:
            raise InputError("a power study takes a single --levels value")
        return sim.power_study(args.method, spec, args.n, args.reps,
                               (levels or [0.05])[0], args.critical or "simulated", args.seed,
                               null_reps=args.null_reps, config=config,
                               workers=args.workers), EXIT_OK
    except (ConfigurationError, ValueError) as exc:
        raise InputError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixtest", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("test", help="run the EM-test on a data file")
    t.add_argument("--data", required=True, help="text or delimited numeric file")
    t.add_argument("--column", help="column name or 0-based index")
    t.add_argument("--transform", choices=("none", "log", "sqrt"), default="none")
    t.add_argument("--variance", choices=("equal", "unequal"), required=True)
    t.add_argument("--alphas", help="comma-separated initial alphas (default 0.1,0.3,0.5)")
    t.add_argument("--refined-alphas", action="store_true",
                   help=f"use {','.join(map(str, REFINED_ALPHAS))} (equal variance only)")
    t.add_argument("--K", type=int, default=2, help="EM iterations count (default 2)")
    t.add_argument("--seed", type=int, default=0, help="seed for the jittered starts")
    t.add_argument("--comparator", action="append", choices=("mlrt", "lrt"))
    fmt = t.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--text", action="store_true")

    s = sub.add_parser("simulate", help="Monte Carlo size/power study")
    s.add_argument("study", choices=("type1", "power"))
    s.add_argument("--method", choices=sim.METHODS, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--model", help="Table model name I..XII")
    s.add_argument("--params", help="1-alpha,theta1,theta2,sigma1,sigma2")
    s.add_argument("--levels", help="comma-separated levels")
    s.add_argument("--critical", choices=("asymptotic", "simulated"))
    s.add_argument("--null-reps", type=int, help="null draws for simulated critical values")
    s.add_argument("--alphas")
    s.add_argument("--refined-alphas", action="store_true")
    s.add_argument("--K", type=int, default=2)
    s.add_argument("--workers", type=int, help="worker processes (default: MIXTEST_THREADS or CPUs)")
    s.add_argument("--json", action="store_true")
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.cmd == "test":
            record, code = run_test(args, argv)
            print(record.to_json() if args.json else record.to_text())
        else:
            report, code = run_simulation(args)
            print(json.dumps(report.as_dict(), sort_keys=True, indent=2) if args.json
                  else report.to_text())
        return code
    except InputError as exc:
        print(f"mixtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"mixtest: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
