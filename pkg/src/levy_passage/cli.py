"""Command-line front end.

Every subcommand reads a TOML process spec, calls the library and writes
CSV/JSON files into ``--out`` together with a ``manifest.json``.

Exit codes: 0 success, 1 check failed or other library error, 2 bad
arguments or config, 3 hypothesis validation failure, 4 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import eval_expansion, expand_F
from .bounds import check_poly_bound
from .compare import reconcile, two_sided_grid
from .config import load_spec
from .errors import ConfigError, HypothesisUnverified, LevyPassageError, NumericalError
from .limit_laws import (
    berry_esseen_probe,
    gaussian_limit,
    hitting_law_rho,
    overshoot_law,
)
from .mc.backend import default_threads
from .mc.engine import SimConfig, simulate_passage
from .model import validate_hypotheses
from .transform import invert_bromwich_full
from .zeros import find_strip_zeros, is_zero_mean

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 1, 2, 3, 4


@dataclass
class RunManifest:
    spec: str
    subcommand: str
    params: dict
    seed: int | None
    out_dir: str
    version: str = __version__
    schema_version: int = SCHEMA_VERSION
    wall_clock: float = 0.0
    outputs: list[str] = field(default_factory=list)

    def write(self) -> Path:
        path = Path(self.out_dir) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # always exit 2 with usage
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:step`` (inclusive stop)."""
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        n = int(math.floor((b - a) / s + 1e-9)) + 1
        return [a + i * s for i in range(n)]
    return _floats(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levy-passage", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("spec", help="process-spec TOML file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: LEVY_PASSAGE_THREADS or CPU count)")
        return sp

    def tmr(sp):
        sp.add_argument("--theta", type=float, default=0.0)
        sp.add_argument("--mu", type=float, default=0.0)
        sp.add_argument("--rho", type=float, default=0.0)

    sp = add("validate", "check structural hypotheses")
    sp.add_argument("--B", type=float, default=1.0)

    sp = add("zeros", "zeros of phi - theta in the strip")
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--strip-B", type=float, default=4.0)
    sp.add_argument("--seed", type=int, default=12345)

    sp = add("invert", "Bromwich inversion of the transform")
    tmr(sp)
    sp.add_argument("--x", type=_grid, required=True)

    sp = add("expand", "exponential expansion of F")
    tmr(sp)
    sp.add_argument("--B", type=float, default=None)

    sp = add("eval", "evaluate the expansion")
    tmr(sp)
    sp.add_argument("--B", type=float, default=None)
    sp.add_argument("--x", type=_grid, required=True)
    sp.add_argument("--terms", type=int, default=None)

    sp = add("limits", "limit laws of the hitting triplet")
    sp.add_argument("--regime", choices=["auto", "negative", "positive", "zero"], default="auto")
    sp.add_argument("--theta", type=_floats, default=[0.5, 1.0],
                    help="Laplace arguments for the zero-mean time law")

    sp = add("probe-berry-esseen", "sup-CDF distance of normalized time vs x")
    sp.add_argument("--x", type=_grid, default=[25.0, 100.0, 400.0])
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("simulate", "Monte Carlo sample of (T, K, L)")
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--kill-depth", type=float, default=None)

    sp = add("poly-bound", "certify F(x) <= C_n/(1+x^n)")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--grid", type=_grid, default=[1.0, 2.0, 5.0, 10.0, 20.0, 50.0])
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("compare", "expansion vs inversion vs Monte Carlo")
    tmr(sp)
    sp.add_argument("--x", type=_grid, default=[5.0, 10.0, 15.0, 20.0])
    sp.add_argument("--paths", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-3, help="expansion vs inversion tolerance")
    sp.add_argument("--n-se", type=float, default=3.0, help="MC agreement in standard errors")
    sp.add_argument("--slope-rtol", type=float, default=0.2)
    return p


# ---------------------------------------------------------------------------
# output helpers


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _need_hypothesis(spec) -> None:
    rep = validate_hypotheses(spec)
    if not rep.satisfied:
        raise HypothesisUnverified(f"{rep.family}: {rep.reason}")


# ---------------------------------------------------------------------------
# subcommands; each returns (exit code, payload for stdout)


def _cmd_validate(spec, a, out: Path, files):
    rep = validate_hypotheses(spec, a.B)
    d = {"schema_version": SCHEMA_VERSION, **rep.to_dict()}
    _write_json(out / "validate.json", d)
    files.append("validate.json")
    return (EXIT_OK if rep.satisfied else EXIT_HYPOTHESIS), d


def _cmd_zeros(spec, a, out, files):
    _need_hypothesis(spec)
    zr = find_strip_zeros(spec, a.theta, a.strip_B, seed=a.seed)
    d = {"schema_version": SCHEMA_VERSION, **zr.to_dict()}
    _write_json(out / "zeros.json", d)
    files.append("zeros.json")
    return EXIT_OK, d


def _cmd_invert(spec, a, out, files):
    _need_hypothesis(spec)
    grid = two_sided_grid(spec, a.theta, a.mu, a.rho, max(a.x))
    rows = []
    for x in a.x:
        r = invert_bromwich_full(spec, a.theta, a.mu, a.rho, x, grid=grid)
        rows.append((x, r.value, r.abserr, r.imag_residual))
    _write_csv(out / "invert.csv", ["x", "F", "abserr", "imag_residual"], rows)
    files.append("invert.csv")
    return EXIT_OK, {"schema_version": SCHEMA_VERSION, "rows": [list(r) for r in rows]}


def _cmd_expand(spec, a, out, files):
    _need_hypothesis(spec)
    grid = two_sided_grid(spec, a.theta, a.mu, a.rho, 20.0)
    rep = expand_F(spec, a.theta, a.mu, a.rho, a.B, grid=grid)
    d = {"schema_version": SCHEMA_VERSION, **rep.to_dict()}
    _write_json(out / "expand.json", d)
    files.append("expand.json")
    return EXIT_OK, d


def _cmd_eval(spec, a, out, files):
    _need_hypothesis(spec)
    grid = two_sided_grid(spec, a.theta, a.mu, a.rho, max(a.x))
    rep = expand_F(spec, a.theta, a.mu, a.rho, a.B, grid=grid)
    vals = np.atleast_1d(eval_expansion(rep, a.x, a.terms))
    rows = list(zip(a.x, vals))
    _write_csv(out / "eval.csv", ["x", "F_expansion"], rows)
    files.append("eval.csv")
    return EXIT_OK, {"schema_version": SCHEMA_VERSION, "rows": [[x, float(v)] for x, v in rows]}


def _cmd_limits(spec, a, out, files):
    d: dict = {"schema_version": SCHEMA_VERSION}
    regime = None if a.regime == "auto" else a.regime
    if is_zero_mean(spec):
        d["time"] = {
            "law": "rho",
            "laplace": [[th, hitting_law_rho(spec, th)] for th in a.theta],
        }
    else:
        g = gaussian_limit(spec)
        d["time"] = {"law": "gaussian", "shift": g.shift, "variance": g.variance,
                     "regime": g.regime}
    law = overshoot_law(spec, regime)
    d["overshoot"] = {"regime": law.regime, "atom": law.atom, "norm": law.norm,
                      "gamma": law.gamma, "total_mass": law.total_mass()}
    _write_json(out / "limits.json", d)
    law.to_csv(out / "limits_L_cdf.csv")
    files += ["limits.json", "limits_L_cdf.csv"]
    return EXIT_OK, d


def _cmd_probe(spec, a, out, files):
    rep = berry_esseen_probe(spec, a.x, a.paths, seed=a.seed, threads=a.threads)
    d = {"schema_version": SCHEMA_VERSION, **rep.to_dict()}
    _write_json(out / "berry_esseen.json", d)
    _write_csv(out / "berry_esseen.csv", ["x", "n_hits", "distance"],
               zip(rep.x, rep.n_hits, rep.distance))
    files += ["berry_esseen.json", "berry_esseen.csv"]
    return (EXIT_OK if rep.negative_at_95 else EXIT_FAIL), d


def _cmd_simulate(spec, a, out, files):
    cfg = SimConfig(n_paths=a.paths, x=a.x, horizon=a.horizon, seed=a.seed,
                    kill_depth=a.kill_depth, threads=a.threads)
    s = simulate_passage(spec, cfg)
    s.to_csv(out / "samples.csv")
    meta = {"schema_version": SCHEMA_VERSION, **s.metadata()}
    _write_json(out / "simulate.json", meta)
    files += ["samples.csv", "simulate.json"]
    return EXIT_OK, meta


def _cmd_poly(spec, a, out, files):
    cfg = SimConfig(n_paths=a.paths, seed=a.seed, threads=a.threads)
    rep = check_poly_bound(spec, a.p, a.grid, cfg)
    d = {"schema_version": SCHEMA_VERSION, **rep.to_dict()}
    _write_json(out / "poly_bound.json", d)
    files.append("poly_bound.json")
    return (EXIT_OK if rep.ok else EXIT_FAIL), d


def _cmd_compare(spec, a, out, files):
    _need_hypothesis(spec)
    rec = reconcile(spec, a.x, a.theta, a.mu, a.rho, n_paths=a.paths, seed=a.seed,
                    analytic_tol=a.tol, n_se=a.n_se, slope_rtol=a.slope_rtol, threads=a.threads)
    rows = [(r.x, r.F_expansion, r.F_bromwich, r.F_mc, r.se, int(r.flag)) for r in rec.rows]
    _write_csv(out / "compare.csv", ["x", "F_expansion", "F_bromwich", "F_mc", "SE", "flag"], rows)
    d = {"schema_version": SCHEMA_VERSION, **rec.to_dict()}
    _write_json(out / "compare.json", d)
    files += ["compare.csv", "compare.json"]
    return (EXIT_OK if rec.ok else EXIT_FAIL), d


COMMANDS = {
    "validate": _cmd_validate,
    "zeros": _cmd_zeros,
    "invert": _cmd_invert,
    "expand": _cmd_expand,
    "eval": _cmd_eval,
    "limits": _cmd_limits,
    "probe-berry-esseen": _cmd_probe,
    "simulate": _cmd_simulate,
    "poly-bound": _cmd_poly,
    "compare": _cmd_compare,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if a.threads is None:
        a.threads = default_threads()
    out = Path(a.out)
    try:
        spec = load_spec(a.spec)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out.mkdir(parents=True, exist_ok=True)
    params = {k: v for k, v in vars(a).items() if k not in ("spec", "out", "cmd")}
    man = RunManifest(str(a.spec), a.cmd, params, getattr(a, "seed", None), str(out))
    t0 = time.perf_counter()
    try:
        code, payload = COMMANDS[a.cmd](spec, a, out, man.outputs)
    except HypothesisUnverified as exc:
        print(f"hypothesis validation failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LevyPassageError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:  # argument rejected by the library
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
    man.wall_clock = time.perf_counter() - t0
    man.write()
    print(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    return code


def main() -> None:  # console entry point
    sys.exit(run())


if __name__ == "__main__":
    main()
