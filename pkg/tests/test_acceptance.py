"""Acceptance criteria AC-1 .. AC-10.

Each test records one PASS/FAIL line, printed in the pytest terminal summary.
Running this file directly (python3 tests/test_acceptance.py) prints the same
lines without pytest.  AC-7 and AC-8 count every flow tree on T^2 up to
arity 3 for two seeds, which takes a few minutes.
"""

import sys
import time
from pathlib import Path


sys.path.insert(0, str(Path(__file__).parent))
from conftest import record  # noqa: E402

from morse_ainfty.algebra import (  # noqa: E402
    build_mu,
    check_ainfty,
    check_all_relations,
    cohomology_ranks,
)
from morse_ainfty.fixtures import exterior_torus, interval_dga  # noqa: E402
from morse_ainfty.morse.counting import basis_of, count_coefficients  # noqa: E402
from morse_ainfty.morse.manifold import ModelManifold  # noqa: E402
from morse_ainfty.morse.perturbation import build_perturbation_datum  # noqa: E402
from morse_ainfty.morse.solver import RegularityError, SolverConfig, solve_flow_trees  # noqa: E402
from morse_ainfty.signs import DEGREE_SHIFTS, check_sigma_identities, tau_sign, tau_sign_bruteforce  # noqa: E402
from morse_ainfty.trees import (  # noqa: E402
    binary_parents,
    canonical_ordering,
    collapse_edge,
    compose,
    corolla,
    edge_type,
    enumerate_binary_trees,
    enumerate_ribbon_trees,
    handedness,
    split,
)

SEED = 1
# A rejected run is reseeded with the next integer, as the pipeline's exit-3 hint asks.
SECOND_SEEDS = range(2, 8)
T2 = ModelManifold.torus(2)
_RUNS: dict = {}


def t2_run(seed: int, d_max: int):
    """Cached (result or RegularityError, seconds) of the full T^2 count."""
    key = (seed, d_max)
    if key not in _RUNS:
        t = time.perf_counter()
        datum = build_perturbation_datum(T2, seed, d_max)
        try:
            res = count_coefficients(T2, datum, d_max)
        except RegularityError as exc:
            res = exc
        _RUNS[key] = (res, time.perf_counter() - t)
    return _RUNS[key]


def accepted(seed: int, d_max: int):
    res, dt = t2_run(seed, d_max)
    assert not isinstance(res, RegularityError), f"seed {seed} rejected: {res}"
    return res, dt


def _check(criterion, ok, detail, elapsed=None, limit=None):
    if limit is not None:
        detail += f" [{elapsed:.1f}s, limit {limit}s]"
        ok = ok and elapsed < limit
    record(criterion, ok, detail)
    assert ok, detail


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# ---------------------------------------------------------------- combinatorics

def test_ac1_tree_counts():
    def run():
        cat = [len(enumerate_binary_trees(d)) for d in range(2, 8)]
        sch = [len(enumerate_ribbon_trees(d)) for d in range(2, 7)]
        return cat, sch

    (cat, sch), dt = _timed(run)
    ok = cat == [1, 2, 5, 14, 42, 132] and sch == [1, 3, 11, 45, 197]
    _check("AC-1", ok, f"binary {cat}, ribbon {sch}", dt, 5)


def test_ac2_tau_sign():
    def run():
        pairs = [(T, e) for d in range(3, 8) for T in enumerate_binary_trees(d) for e in T.internal_edges]
        return len(pairs), [(T, e) for T, e in pairs if tau_sign(T, e) != tau_sign_bruteforce(T, e)]

    (n, bad), dt = _timed(run)
    _check("AC-2", not bad, f"{n} (T, e) pairs for d <= 7, {len(bad)} disagreements", dt, 30)


def test_ac3_collapse_split_structure():
    def run():
        problems = []
        counts = [0, 0, 0]
        for d in range(3, 8):
            for T in enumerate_ribbon_trees(d):
                if T.k == d - 3:
                    parents = binary_parents(T)
                    counts[0] += 1
                    if len(parents) != 2 or parents[0][0] == parents[1][0]:
                        problems.append(("parents", T))
                    if any(not P.is_binary or collapse_edge(P, e) != T for P, e in parents):
                        problems.append(("parents", T))
                for e in T.internal_edges:
                    counts[1] += 1
                    t = edge_type(T, e)
                    T1, T2_ = split(T, e)
                    if compose(T1, T2_, t.i) != (T, e):
                        problems.append(("breaking", T, e))
            images = {
                split(T, e) + (edge_type(T, e).i,) for T in enumerate_ribbon_trees(d) for e in T.internal_edges
            }
            triples = {
                (A, B, i)
                for l in range(1, d - 1)
                for A in enumerate_ribbon_trees(d - l)
                for B in enumerate_ribbon_trees(l + 1)
                for i in range(1, d - l + 1)
            }
            if images != triples:
                problems.append(("breaking-onto", d))
            for T in enumerate_binary_trees(d):
                pos = {g: j for j, g in enumerate(canonical_ordering(T), start=1)}
                for e in T.internal_edges:
                    counts[2] += 1
                    t = edge_type(T, e)
                    inside = sorted(pos[f] for f in T.internal_edges if f != e and f[: len(e)] == e)
                    want = t.i + t.l - 1 if handedness(T, e) == "left" else t.i - 1
                    if inside != list(range(t.i, t.i + t.l - 1)) or pos[e] != want:
                        problems.append(("block", T, e))
        return counts, problems

    (counts, problems), dt = _timed(run)
    detail = (
        f"{counts[0]} two-parent trees, {counts[1]} breaking pairs, "
        f"{counts[2]} block checks for d <= 7; {len(problems)} problems"
    )
    _check("AC-3", not problems, detail, dt, 30)


def test_ac4_sigma_identities():
    def run():
        out = {}
        for shift in DEGREE_SHIFTS:
            reps = [check_sigma_identities(n, 5, shift) for n in (1, 2, 3)]
            out[shift] = (sum(sum(r.checked.values()) for r in reps), sum(len(r.violations) for r in reps))
        return out

    out, dt = _timed(run)
    ok = out["mu-1"][1] == 0
    detail = ", ".join(f"{s}: {c} checked, {v} violations" for s, (c, v) in out.items())
    _check("AC-4", ok, f"selected mu-1; {detail}", dt, 60)


# ---------------------------------------------------------------- T^2 pipeline

def test_ac5_morse_complex():
    (res, dt) = accepted(SEED, 2)
    cs = res.coefficients
    basis = basis_of(T2)
    indices = sorted((c.index for c in T2.critical_points()), reverse=True)
    delta = {k: v for k, v in cs.entries.items() if k[0] == 1}
    ranks = cohomology_ranks(build_mu(cs, 1), basis)
    ok = indices == [2, 1, 1, 0] and all(v == 0 for v in delta.values()) and ranks == [1, 2, 1]
    detail = f"indices {indices}, {len(delta)} delta entries all zero: {ok}, ranks {ranks}"
    _check("AC-5", ok, detail, dt, 60)


def test_ac6_cup_product():
    (res, dt) = accepted(SEED, 2)
    cs = res.coefficients
    top, a, b, one = "x00", "x01", "x10", "x11"
    ab, ba = cs.get(2, top, (a, b)), cs.get(2, top, (b, a))
    aa, bb = cs.get(2, top, (a, a)), cs.get(2, top, (b, b))
    unit = all(
        abs(cs.get(2, x, (one, x))) == 1 and abs(cs.get(2, x, (x, one))) == 1
        for x in (top, a, b, one)
    )
    ok = abs(ab) == 1 and ab == -ba and aa == 0 and bb == 0 and unit
    detail = f"a2(top;a,b)={ab}, a2(top;b,a)={ba}, a2(top;a,a)={aa}, a2(top;b,b)={bb}, min acts as unit: {unit}"
    _check("AC-6", ok, detail, dt, 300)


def test_ac7_coefficient_relation():
    res, dt = accepted(SEED, 3)
    cs = res.coefficients
    basis = basis_of(T2)
    parts = []
    passing = []
    for shift in DEGREE_SHIFTS:
        rel = check_all_relations(cs, 3, shift)
        bad = [r for r in rel if not r["pass"]]
        ainfty = check_ainfty({d: build_mu(cs, d) for d in (1, 2, 3)}, basis, shift)
        parts.append(f"{shift}: {len(rel) - len(bad)}/{len(rel)} relations, A-infinity {'pass' if ainfty.passed else 'fail'}")
        if not bad and ainfty.passed:
            passing.append(shift)
    detail = f"{'; '.join(parts)}; holds under {passing or 'none'}"
    _check("AC-7", bool(passing), detail, dt, 600)


def test_ac8_seed_invariance():
    r1, elapsed = accepted(SEED, 3)
    rejected = []
    for seed in SECOND_SEEDS:
        r2, dt = t2_run(seed, 3)
        elapsed += dt
        if not isinstance(r2, RegularityError):
            break
        rejected.append(seed)
    else:
        _check("AC-8", False, f"seeds {list(SECOND_SEEDS)} all rejected", elapsed, 600)
    e1, e2 = r1.coefficients.entries, r2.coefficients.entries
    diff = sorted(k for k in set(e1) | set(e2) if e1.get(k) != e2.get(k))
    moved = [s.to_dict()["vertex"] for s in r1.solutions] != [s.to_dict()["vertex"] for s in r2.solutions]
    detail = (
        f"seeds {SEED} and {seed} (rejected and reseeded: {rejected or 'none'}): "
        f"{len(e1)} entries, {len(diff)} differ; flow trees moved between seeds: {moved}"
    )
    _check("AC-8", not diff and len(e1) == len(e2), detail, elapsed, 600)


def test_ac9_regularity():
    sols, rejected = [], []
    for key in sorted(_RUNS) or [(SEED, 2)]:
        res, _ = t2_run(*key)
        if isinstance(res, RegularityError):
            rejected.append(f"seed {key[0]}: {res}")
        else:
            sols += res.solutions
    worst_res = max(s.residual for s in sols)
    worst_cond = max(s.condition for s in sols)
    max_len = max(s.max_length for s in sols)
    refused = []
    datum = build_perturbation_datum(T2, SEED, 2)
    crit = {c.name: c for c in T2.critical_points()}
    for cfg in (SolverConfig(max_cond=1.0), SolverConfig(tol_match=1e-30), SolverConfig(tol_det=2.0)):
        try:
            solve_flow_trees(T2, datum, corolla(2), crit["x00"], [crit["x01"], crit["x10"]], cfg)
            refused.append(False)
        except RegularityError:
            refused.append(True)
    ok = worst_res < 1e-10 and worst_cond <= 1e8 and all(refused) and max_len < 3
    detail = (
        f"{len(sols)} accepted solutions, max residual {worst_res:.1e}, max condition {worst_cond:.1e}, "
        f"max length {max_len:.2f}; forced violations refused: {all(refused)}; "
        f"rejected runs: {rejected or 'none'}"
    )
    _check("AC-9", ok, detail)


def test_ac10_fixtures():
    def run():
        out = {}
        for name, fx in (("dga", interval_dga), ("exterior", exterior_torus)):
            cs = fx()
            out[name] = check_ainfty({d: build_mu(cs, d) for d in (1, 2, 3)}, cs.basis).passed
        mutants = {}
        cs = exterior_torus()
        cs.set(2, "a", ("1", "a"), -1)
        rep = check_ainfty({d: build_mu(cs, d) for d in (1, 2, 3)}, cs.basis)
        mutants["exterior"] = rep.violations[0] if rep.violations else None
        cs = interval_dga()
        cs.set(2, "q", ("p", "q"), -cs.get(2, "q", ("p", "q")))
        rep = check_ainfty({d: build_mu(cs, d) for d in (1, 2, 3)}, cs.basis)
        mutants["dga"] = rep.violations[0] if rep.violations else None
        return out, mutants

    (out, mutants), dt = _timed(run)
    ok = all(out.values()) and all(mutants.values())
    witness = mutants["exterior"]["inputs"] if mutants["exterior"] else None
    _check("AC-10", ok, f"fixtures pass: {out}; mutants fail, e.g. witness inputs {witness}", dt, 5)


if __name__ == "__main__":
    failures = 0
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_ac")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[1][2:]))
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
