"""Command-line entry point: ``morse-ainfty <subcommand> ...``.

Every report is a version header line, a JSON document with sorted keys, and
a ``# summary`` footer.  Lines starting with ``#`` are comments, so
:func:`load_report` reads any report back.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error,
3 numerical or regularity failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .algebra import (
    CoefficientSystem,
    GradedBasis,
    NotAComplexError,
    build_mu,
    check_ainfty,
    check_all_relations,
    cohomology,
)
from .signs import DEGREE_SHIFTS, DEFAULT_SHIFT, check_sigma_identities, sign_table
from .trees import (
    canonical_ordering,
    dexterity,
    edge_label,
    enumerate_binary_trees,
    enumerate_ribbon_trees,
    serialize,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- reports

def render(payload: dict, summary: Sequence[str]) -> str:
    lines = [f"# morse-ainfty {__version__}", json.dumps(payload, sort_keys=True, indent=1)]
    lines += ["# summary"] + [f"# {s}" for s in summary]
    return "\n".join(lines) + "\n"


def load_report(text: str) -> Any:
    body = "\n".join(l for l in text.splitlines() if not l.lstrip().startswith("#"))
    return json.loads(body)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- run config

@dataclass
class RunConfig:
    manifold: str = "torus"
    n: int = 2
    freqs: list[int] | None = None
    amps: list[float] | None = None
    dmax: int = 2
    epsilon: float | None = None
    seed: int = 0
    degree_shift: str = DEFAULT_SHIFT
    grid: int | None = None
    tol_match: float | None = None
    tol_dedup: float | None = None
    tol_det: float | None = None
    max_cond: float | None = None
    max_length: float | None = None
    traces: bool = False

    def validate(self) -> "RunConfig":
        if self.manifold not in ("torus", "circle"):
            raise UsageError(f"manifold must be 'torus' or 'circle', got {self.manifold!r}")
        if self.manifold == "circle":
            self.n = 1
        if not isinstance(self.n, int) or not 1 <= self.n <= 3:
            raise UsageError("n must be an integer in [1, 3]")
        if not isinstance(self.dmax, int) or not 1 <= self.dmax <= 3:
            raise UsageError("dmax must be an integer in [1, 3]")
        if self.degree_shift not in DEGREE_SHIFTS:
            raise UsageError(f"degree_shift must be one of {DEGREE_SHIFTS}")
        if self.epsilon is not None and self.epsilon < 0:
            raise UsageError("epsilon must be non-negative")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise UsageError("seed must be a non-negative integer")
        for name in ("freqs", "amps"):
            v = getattr(self, name)
            if v is not None and len(v) != self.n:
                raise UsageError(f"{name} needs {self.n} entries")
        return self

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def morse_report(cfg: RunConfig) -> tuple[dict, int]:
    """Run the full pipeline; returns (report, exit code)."""
    from .morse.counting import basis_of, count_coefficients
    from .morse.manifold import ModelManifold
    from .morse.perturbation import build_perturbation_datum
    from .morse.solver import SolverConfig

    M = ModelManifold.torus(cfg.n, cfg.freqs, cfg.amps)
    crit = M.critical_points()
    datum = build_perturbation_datum(M, cfg.seed, cfg.dmax, cfg.epsilon)
    overrides = {k: getattr(cfg, k) for k in ("grid", "tol_match", "tol_dedup", "tol_det", "max_cond", "max_length")}
    solver = SolverConfig(**{k: v for k, v in overrides.items() if v is not None})
    result = count_coefficients(M, datum, cfg.dmax, solver)
    cs = result.coefficients
    basis = basis_of(M)

    relations = check_all_relations(cs, cfg.dmax, cfg.degree_shift)
    failed = [r for r in relations if not r["pass"]]
    ainfty = check_ainfty({d: build_mu(cs, d) for d in range(1, cfg.dmax + 1)}, basis, cfg.degree_shift)
    try:
        coh: dict | None = cohomology(build_mu(cs, 1), basis)
    except NotAComplexError:
        coh = None
    report = {
        "config": cfg.to_dict(),
        "manifold": M.to_dict(),
        "epsilon": datum.epsilon,
        "solver": solver.to_dict(),
        "critical_points": [c.to_dict() for c in crit],
        "basis": basis.to_dict(),
        "coefficients": cs.to_records(),
        "relations": {"checked": len(relations), "failed": failed},
        "ainfty": ainfty.to_dict(),
        "cohomology": coh,
        "n_solutions": len(result.solutions),
        "max_length": round(result.max_length, 9),
    }
    if cfg.traces:
        report["traces"] = result.traces()
    ok = not failed and ainfty.passed
    return report, EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- commands

def cmd_trees(args) -> int:
    if not 1 <= args.d <= 12:
        raise UsageError("d must lie in [1, 12]")
    trees = enumerate_binary_trees(args.d) if args.binary else enumerate_ribbon_trees(args.d)
    records = [
        {
            "tree": serialize(T),
            "binary": T.is_binary,
            "k": T.k,
            "ordering": [edge_label(T, e) for e in canonical_ordering(T)],
            "dexterity": dexterity(T) if T.is_binary else None,
        }
        for T in trees
    ]
    if args.format == "text":
        text = "".join(
            f"{r['tree']}\tk={r['k']}\tr={r['dexterity']}\t{' '.join(r['ordering'])}\n" for r in records
        )
        _emit(text, args.output)
    else:
        _emit(render({"d": args.d, "binary": args.binary, "trees": records}, [f"{len(records)} trees"]), args.output)
    return EXIT_OK


def cmd_signs(args) -> int:
    if not 1 <= args.d <= 9:
        raise UsageError("d must lie in [1, 9]")
    rows = sign_table(args.d)
    bad = [r for r in rows if r["tau_closed"] != r["tau_brute"]]
    _emit(render({"d": args.d, "rows": rows}, [f"{len(rows)} rows, {len(bad)} disagreements"]), args.output)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_sigma_check(args) -> int:
    if not 1 <= args.n <= 6 or not 1 <= args.dmax <= 7:
        raise UsageError("need 1 <= n <= 6 and 1 <= dmax <= 7")
    rep = check_sigma_identities(args.n, args.dmax, args.degree_shift)
    checked = sum(rep.checked.values())
    summary = [f"{checked} congruences checked, {len(rep.violations)} violations"]
    _emit(render(rep.to_dict(), summary), args.output)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _run_config(args) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    cfg = RunConfig.from_mapping(data)
    for name in ("seed", "epsilon", "dmax", "degree_shift", "manifold", "n"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if args.traces:
        cfg.traces = True
    return cfg.validate()


def cmd_morse_run(args) -> int:
    from .morse.manifold import NotMorseError
    from .morse.solver import RegularityError

    cfg = _run_config(args)
    try:
        report, code = morse_report(cfg)
    except NotMorseError as exc:
        raise UsageError(str(exc)) from exc
    except RegularityError as exc:
        print(f"regularity failure: {exc}; rerun with a different --seed", file=sys.stderr)
        return EXIT_NUMERIC
    nz = sum(1 for r in report["coefficients"] if r["value"])
    summary = [
        f"seed {cfg.seed}, dmax {cfg.dmax}, degree shift {cfg.degree_shift}",
        f"{report['n_solutions']} flow trees, {nz} nonzero coefficients",
        f"relations: {report['relations']['checked'] - len(report['relations']['failed'])}"
        f"/{report['relations']['checked']} hold; A-infinity check "
        + ("passed" if report["ainfty"]["pass"] else "FAILED"),
    ]
    if report["cohomology"] is not None:
        summary.append(f"cohomology ranks {report['cohomology']['ranks']}")
    _emit(render(report, summary), args.output)
    return code


def parse_table(data: Any, n: int | None = None) -> CoefficientSystem:
    """A coefficient table: {"basis": {"n", "generators"}, "coefficients": [...]}."""
    try:
        b = data["basis"]
        basis = GradedBasis.from_pairs([tuple(g) for g in b["generators"]], int(b["n"]))
        records = data["coefficients"]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed coefficient table: {exc}") from exc
    if n is not None and n != basis.n:
        raise UsageError(f"table is for n={basis.n}, not n={n}")
    if not isinstance(records, list):
        raise UsageError("coefficients must be a list")
    try:
        return CoefficientSystem.from_records(basis, records)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def table_payload(cs: CoefficientSystem) -> dict:
    return {"basis": cs.basis.to_dict(), "coefficients": cs.to_records()}


def cmd_verify(args) -> int:
    try:
        data = load_report(Path(args.table).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read table: {exc}") from exc
    cs = parse_table(data, args.n)
    arities = cs.arities()
    top = max(arities, default=0)
    relations = check_all_relations(cs, top, args.degree_shift) if top else []
    failed = [r for r in relations if not r["pass"]]
    payload = {"degree_shift": args.degree_shift, "checked": len(relations), "relations": relations}
    summary = [f"{len(relations) - len(failed)}/{len(relations)} relations hold"]
    if failed:
        summary.append(f"first witness {failed[0]['tuple']} sums to {failed[0]['lhs_sum']}")
    _emit(render(payload, summary), args.output)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="morse-ainfty", description="Morse flow trees and A-infinity coefficients.")
    p.add_argument("--version", action="version", version=f"morse-ainfty {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out(sp):
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")

    t = sub.add_parser("trees", help="list ribbon trees with d leaves")
    t.add_argument("d", type=int)
    t.add_argument("--binary", action="store_true")
    t.add_argument("--format", choices=("json", "text"), default="json")
    out(t)
    t.set_defaults(func=cmd_trees)

    s = sub.add_parser("signs", help="tau_e sign table, closed form against brute force")
    s.add_argument("d", type=int)
    out(s)
    s.set_defaults(func=cmd_signs)

    g = sub.add_parser("sigma-check", help="exhaustive check of the sigma congruences")
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--dmax", type=int, default=5)
    g.add_argument("--degree-shift", choices=DEGREE_SHIFTS, default=DEFAULT_SHIFT)
    out(g)
    g.set_defaults(func=cmd_sigma_check)

    m = sub.add_parser("morse-run", help="count flow trees on a flat torus and check the relations")
    m.add_argument("--config", help="JSON run config; see README")
    m.add_argument("--manifold", choices=("torus", "circle"))
    m.add_argument("--n", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--epsilon", type=float)
    m.add_argument("--dmax", type=int)
    m.add_argument("--degree-shift", choices=DEGREE_SHIFTS)
    m.add_argument("--traces", action="store_true", help="include per-solution trace records")
    out(m)
    m.set_defaults(func=cmd_morse_run)

    v = sub.add_parser("verify", help="check the coefficient relations of a table")
    v.add_argument("table", help="coefficient table or morse-run report")
    v.add_argument("--n", type=int)
    v.add_argument("--degree-shift", choices=DEGREE_SHIFTS, default=DEFAULT_SHIFT)
    out(v)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"morse-ainfty: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
