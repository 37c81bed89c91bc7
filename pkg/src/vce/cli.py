"""Command-line front end: ``vce {character,npoint,sew,foliate,verify}``.

Settings come from built-in defaults, then ``VCE_CUTOFF``, then a
``key = value`` config file (``--config``), then command-line flags; later
sources win.  JSON artifacts are exact and key-sorted; ``--decimal`` only
affects the human-readable summary.

Exit status: 0 success, 1 verification failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

from . import checks, foliation, genus1, sewing
from .qseries import TruncSeries
from .voa import CutoffError, InvalidState, VoaState

__all__ = ["JobConfig", "main", "load_config", "parse_insertions"]

DEFAULT_CUTOFF = 8


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    voa: str = "heisenberg"
    cutoff: int = DEFAULT_CUTOFF
    q_order: int | None = None
    z_order: int = 4
    eps_order: int = 2
    states: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    method: str = "both"
    n: int | None = None
    p: int | None = None
    output: str | None = None
    decimal: bool = False
    all: bool = False
    checks: list = field(default_factory=list)

    @property
    def qo(self) -> int:
        return self.cutoff if self.q_order is None else self.q_order

    def validate(self) -> None:
        if self.voa != "heisenberg":
            raise UsageError(f"unknown VOA instance {self.voa!r}")
        if self.cutoff < 0 or self.qo < 0 or self.z_order < 0 or self.eps_order < 0:
            raise UsageError("orders must be non-negative")
        if self.qo > self.cutoff:
            raise UsageError(f"q-order {self.qo} exceeds cutoff {self.cutoff}")
        if self.eps_order > self.cutoff:
            raise UsageError(f"eps-order {self.eps_order} exceeds cutoff {self.cutoff}")


INT_KEYS = {"cutoff", "q_order", "z_order", "eps_order", "n", "p"}
LIST_KEYS = {"states", "left", "right", "checks"}
BOOL_KEYS = {"decimal", "all"}
STR_KEYS = {"voa", "method", "output"}


def load_config(path: str) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment; list keys split on ``;``."""
    out: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "state":
            key = "states"
        try:
            if key in INT_KEYS:
                out[key] = int(value)
            elif key in LIST_KEYS:
                out[key] = [s.strip() for s in value.split(";") if s.strip()]
            elif key in BOOL_KEYS:
                out[key] = value.lower() in ("1", "true", "yes", "on")
            elif key in STR_KEYS:
                out[key] = value
            else:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def parse_insertions(specs: list[str], prefix: str) -> list[tuple[VoaState, str]]:
    """``"[2,1]"`` or ``"[2,1]@label"``; unlabeled points are named ``prefix1, prefix2, ...``."""
    out = []
    for i, text in enumerate(specs, 1):
        body, _, label = text.partition("@")
        out.append((VoaState.parse(body.strip()), label.strip() or f"{prefix}{i}"))
    return out


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".vce-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(payload, cfg: JobConfig, summary: str | None = None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    _write(text, cfg.output)
    if summary:
        print(summary, file=sys.stdout if cfg.output is not None else sys.stderr)


def _summary(series: TruncSeries, cfg: JobConfig) -> str:
    return series.format(decimal=cfg.decimal, limit=6)


# -- subcommands ------------------------------------------------------------------


def run_character(cfg: JobConfig) -> int:
    states = cfg.states or ["[]"]
    if len(states) != 1:
        raise UsageError("character takes exactly one state")
    state = VoaState.parse(states[0])
    value = genus1.trace_one_point(state, cfg.qo)
    _emit({"command": "character", "state": str(state), "value": value.to_json()}, cfg,
          f"Z({state}) = q^({value.prefactor_exp}) * [{_summary(value.body, cfg)}]")
    return 0


def run_npoint(cfg: JobConfig) -> int:
    if not cfg.states:
        raise UsageError("npoint needs at least one --state")
    if cfg.method not in ("recursion", "direct", "both"):
        raise UsageError(f"unknown method {cfg.method!r}")
    ins = genus1.InsertionList.build(parse_insertions(cfg.states, "z"), cfg.qo, cfg.z_order)
    payload = {"command": "npoint", "method": cfg.method, "states": list(cfg.states)}
    status = 0
    if cfg.method in ("recursion", "both"):
        rec = genus1.zhu_reduce(ins, 0, cfg.cutoff)
        payload["recursion"] = rec.to_json()
    if cfg.method in ("direct", "both"):
        direct = genus1.trace_n_point_direct(ins, cfg.cutoff)
        payload["direct"] = direct.to_json()
    if cfg.method == "both":
        mm = direct.mismatch(rec)
        payload["agree"] = mm is None
        if mm is None:
            print("recursion == direct", file=sys.stderr)
        else:
            payload["mismatch"] = [list(step) for step in mm]
            print(f"recursion != direct; first mismatch at {payload['mismatch']}", file=sys.stderr)
            status = 1
    _emit(payload, cfg)
    return status


def run_sew(cfg: JobConfig) -> int:
    spec = sewing.SewnSpec(tuple(parse_insertions(cfg.left, "x")), tuple(parse_insertions(cfg.right, "y")),
                           cfg.eps_order, cfg.cutoff, cfg.q_order, cfg.z_order)
    sc = sewing.sew(spec)
    _emit({"command": "sew", "eps_order": cfg.eps_order, "coefficients": sc.to_json()}, cfg,
          "\n".join(f"eps^{m}: {_summary(c, cfg)}" for m, c in enumerate(sc.coefficients)))
    return 0


def run_foliate(cfg: JobConfig) -> int:
    if cfg.states:
        states = parse_insertions(cfg.states, "x")
    else:
        n = 2 if cfg.n is None else cfg.n
        states = [(VoaState((1,)), f"x{i + 1}") for i in range(n)]
    n = len(states)
    p = n if cfg.p is None else cfg.p
    if not 0 <= p <= n:
        raise UsageError(f"p must lie in 0..{n}")
    conf = foliation.Configuration(tuple(states), p, cfg.eps_order, cfg.cutoff, cfg.q_order, cfg.z_order)
    report = foliation.verify_foliation(conf)
    _emit({"command": "foliate", "report": report}, cfg)
    return 0 if report["passed"] else 1


def run_verify(cfg: JobConfig) -> int:
    names = list(checks.CHECKS) if cfg.all or not cfg.checks else cfg.checks
    unknown = [n for n in names if n not in checks.CHECKS]
    if unknown:
        raise UsageError(f"unknown checks {unknown}; choose from {sorted(checks.CHECKS)}")
    results = checks.run_checks(names, cfg.cutoff)
    passed = all(r["pass"] for r in results)
    _emit({"command": "verify", "cutoff": cfg.cutoff, "passed": passed, "results": results}, cfg)
    for r in results:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['check']}", file=sys.stderr)
    return 0 if passed else 1


COMMANDS = {
    "character": run_character,
    "npoint": run_npoint,
    "sew": run_sew,
    "foliate": run_foliate,
    "verify": run_verify,
}


# -- argument handling -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file; flags override it")
    common.add_argument("--voa", help="vertex algebra instance (only 'heisenberg')")
    common.add_argument("--cutoff", type=int, help="basis cutoff N (default 8 or $VCE_CUTOFF)")
    common.add_argument("--q-order", dest="q_order", type=int, help="q truncation order (default: cutoff)")
    common.add_argument("--z-order", dest="z_order", type=int, help="order in each difference variable")
    common.add_argument("--eps-order", dest="eps_order", type=int, help="sewing-parameter order")
    common.add_argument("--output", "-o", help="write the JSON artifact here instead of stdout")
    common.add_argument("--decimal", action="store_true", default=None,
                        help="show decimal approximations in the summary")

    parser = _Parser(prog="vce", description="Exact characters of the Heisenberg vertex algebra.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("character", parents=[common], help="one-point trace of a state")
    p.add_argument("--state", dest="states", action="append", help='partition literal such as "[2,1]"')

    p = sub.add_parser("npoint", parents=[common], help="genus-one n-point function")
    p.add_argument("--state", dest="states", action="append", help='"[1]" or "[1]@label"; repeat per point')
    p.add_argument("--method", choices=["recursion", "direct", "both"])

    p = sub.add_parser("sew", parents=[common], help="genus-two eps-expansion from two tori")
    p.add_argument("--left", action="append", help="state on side 1")
    p.add_argument("--right", action="append", help="state on side 2")

    p = sub.add_parser("foliate", parents=[common], help="chart and transition checks")
    p.add_argument("--n", type=int, help="number of a(-1) insertions (ignored with --state)")
    p.add_argument("--p", type=int, help="how many points sit on side 1")
    p.add_argument("--state", dest="states", action="append", help="explicit states")

    p = sub.add_parser("verify", parents=[common], help="run invariant suites")
    p.add_argument("--all", action="store_true", default=None, help="run every suite")
    p.add_argument("--check", dest="checks", action="append", help=f"one of {', '.join(checks.CHECKS)}")
    return parser


def resolve(args: argparse.Namespace, environ=os.environ) -> JobConfig:
    cfg = JobConfig(command=args.command)
    env_cutoff = environ.get("VCE_CUTOFF")
    if env_cutoff:
        try:
            cfg.cutoff = int(env_cutoff)
        except ValueError as exc:
            raise UsageError(f"VCE_CUTOFF must be an integer, got {env_cutoff!r}") from exc
    if args.config:
        for key, value in load_config(args.config).items():
            setattr(cfg, key, value)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, InvalidState, CutoffError, ValueError) as exc:
        print(f"vce: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
