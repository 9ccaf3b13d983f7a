"""Acceptance checks, one verdict line per criterion in the terminal summary.

Each test records ``(name, passed, detail)`` and then asserts the verdict, so a
failing criterion shows up both as a failed test and as a FAIL line.
"""

import math
import os
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from qldpc_mismatch.codes import GbCodeSpec, StabilizerCode, build_gb_code, is_stabilizer_element, load_code
from qldpc_mismatch.decoders import (
    DecoderConfig,
    Family,
    check_update,
    decode,
    decode_batch,
    decode_success,
    eps_from_llr,
    llr_bp4,
    llr_from_eps,
)
from qldpc_mismatch.montecarlo import MATCHED, FerPoint, FerSurface, StoppingPolicy, sweep
from qldpc_mismatch.objective import (
    ObjectiveSpec,
    aggregated_objective,
    build_report,
    convex_reconstruction,
    cp_floor,
)
from qldpc_mismatch.pauli import PauliVector

from conftest import CODES, CRITERIA, FIVE_QUBIT_ROWS
from oracles import all_pauli_strings, group_elements, sequential_fer, span_size

GB126_ENV = "QLDPC_GB126_CODE"


def record(name: str, ok: bool, detail: str) -> None:
    CRITERIA.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def fixed_trials(n: int) -> StoppingPolicy:
    return StoppingPolicy(max_trials=n, target_frame_errors=n + 1, min_trials=n)


def random_surface(rng, grid, l0s, trials=None):
    pts = []
    for l0 in l0s:
        for eps in grid:
            n = int(trials or rng.integers(100, 10**6))
            errs = int(rng.binomial(n, 10 ** rng.uniform(-5, -0.5))) if rng.random() > 0.2 else 0
            pts.append(FerPoint(eps, l0, n, errs, f"l0={l0!r}"))
    return FerSurface(pts, {"decoder": "bp4"})


# -- exact math ------------------------------------------------------------------------


def test_cp_floor_exact():
    err = abs(cp_floor(1000) - (1 - 0.05 ** (1 / 1000)))
    ok = err < 1e-12 and cp_floor(1) == 0.95
    record("exact: cp_floor", ok, f"|cp_floor(1000) - ref| = {err:.1e}, cp_floor(1) = {cp_floor(1)!r}")


def test_llr_maps():
    e4, e4b, e2 = eps_from_llr(Family.BP4, 0.0), eps_from_llr(Family.BP4, 3.4), eps_from_llr(Family.BP2, 2.85)
    worst = max(
        abs(eps_from_llr(f, llr_from_eps(f, e)) - e)
        for f in (Family.BP2, Family.BP4)
        for e in np.geomspace(1e-4, 0.74, 200)
    )
    ok = e4 == 0.75 and abs(e4b - 0.091) <= 5e-4 and abs(e2 - 0.082) <= 5e-4 and worst < 1e-12
    record("exact: LLR maps and inverses", ok,
           f"BP4(0)={e4!r}, BP4(3.4)={e4b:.5f}, BP2(2.85)={e2:.5f}, round-trip max err {worst:.1e}")


def test_check_update_value():
    # the target value is stated to 5 digits; direct evaluation is printed alongside
    got = check_update([1.0, 2.0], 1)
    direct = -2 * math.atanh(math.tanh(0.5) * math.tanh(1.0))
    target = -0.73544
    ok = abs(got - target) <= 1e-4
    record("exact: check_update((1, 2), s=1) = -0.73544 +- 1e-4", ok,
           f"got {got:.10f}, direct atanh/tanh {direct:.10f}, |got - target| = {abs(got - target):.2e}")


def test_degree_two_pass_through():
    Ls = np.linspace(-29.9, 29.9, 601)
    worst = max(abs(check_update([L], 0) - L) for L in Ls)
    record("exact: degree-2 pass-through", worst < 1e-9, f"max |out - in| = {worst:.1e} over [-29.9, 29.9]")


def test_objective_decomposition():
    rng = np.random.default_rng(2024)
    worst_sum = worst_convex = 0.0
    for _ in range(100):
        T = int(rng.integers(2, 12))
        grid = tuple(sorted(rng.uniform(0.001, 0.2, size=T), reverse=True))
        w = rng.dirichlet(np.ones(T)) if rng.random() < 0.5 else None
        if w is not None:
            w = tuple(w / math.fsum(w))
            if abs(math.fsum(w) - 1.0) > 1e-12:
                w = None
        s = random_surface(rng, grid, [2.0, 3.0])
        for split in list(grid) + [0.0, 1.0]:
            spec = ObjectiveSpec(grid, w, split)
            rep = build_report(s, spec, eps0_ref=None)
            for row in rep.rows:
                worst_sum = max(worst_sum, abs(row.J - (row.J_low + row.J_high)))
                worst_convex = max(worst_convex, abs(row.J - convex_reconstruction(row, spec)))
    ok = worst_sum < 1e-12 and worst_convex < 1e-12
    record("exact: J = J_low + J_high and convex form (100 surfaces)", ok,
           f"max errors {worst_sum:.1e} / {worst_convex:.1e}")


# -- oracles ---------------------------------------------------------------------------


def test_five_qubit_membership_oracle():
    code = StabilizerCode.from_strings(FIVE_QUBIT_ROWS)
    group = group_elements([code.row(i) for i in range(code.m)])
    strings = list(all_pauli_strings(5))
    codes = np.array([PauliVector.from_string(s).codes() for s in strings])
    batch = code.contains(codes)
    agree = all(bool(b) == (s in group) for b, s in zip(batch, strings))
    agree &= all(is_stabilizer_element(code, PauliVector.from_string(s)) == (s in group) for s in strings)
    zero = int((~code.syndromes(codes).any(axis=1)).sum())
    ok = agree and len(group) == 16 and zero == 64
    record("oracle: five-qubit membership on all 1024 vectors", ok,
           f"group size {len(group)}, agreement {agree}, zero-syndrome count {zero}")


def test_gb_toy_ranks():
    details, ok = [], True
    for ell, a, b in ((3, (0, 1), (0, 2)), (5, (0, 1), (0, 2)), (7, (0, 1, 3), (0, 2, 3))):
        code = build_gb_code(GbCodeSpec(ell, a, b))
        size = span_size(code.symplectic_matrix())
        hx, hz = code.hx.astype(int), code.hz.astype(int)
        commute = not ((hx @ hz.T + hz @ hx.T) % 2).any()
        good = size == 2**code.rank and code.k == code.n - code.rank and commute
        ok &= good
        details.append(f"l={ell}: rank {code.rank}, span {size}, k {code.k}")
    record("oracle: GB l in {3,5,7} rank vs span and orthogonality", ok, "; ".join(details))


def test_parallel_determinism():
    code = StabilizerCode.from_strings(FIVE_QUBIT_ROWS, name="five_qubit")
    eps, N = 0.05, 10**5
    cfg = DecoderConfig.from_eps0(Family.BP4, eps, 8)
    runs = {
        w: sweep(code, [eps], [cfg.initial_llr], cfg, fixed_trials(N), 31, workers=w, keep_indicators=True)
        for w in (1, 4, 8)
    }
    flags = {w: s.indicators[(s.points[0].label, eps)] for w, s in runs.items()}
    same_workers = all(np.array_equal(flags[1], flags[w]) for w in (4, 8))
    n, errs, seq = sequential_fer(code, eps, cfg, 31, N, decode, decode_success)
    same_seq = np.array_equal(flags[1], np.array(seq))
    ok = same_workers and same_seq and n == N
    record("oracle: 1e5-trial run identical for workers 1/4/8 and sequential reference", ok,
           f"errors {int(flags[1].sum())}/{N}; workers agree {same_workers}, sequential agrees {same_seq}")


# -- decoder contract ------------------------------------------------------------------


def test_convergence_soundness():
    rng = np.random.default_rng(77)
    gb48 = load_code(CODES / "gb48.code")
    gb18 = load_code(CODES / "gb18.code")
    five = StabilizerCode.from_strings(FIVE_QUBIT_ROWS)
    setups = [(gb48, Family.BP4), (gb48, Family.BP2), (gb18, Family.BP4), (gb18, Family.BP2),
              (five, Family.BP4)]
    total = violations = converged = 0
    batch = 10**4
    while total < 10**6:
        code, family = setups[int(rng.integers(len(setups)))]
        eps = float(10 ** rng.uniform(-2.5, -0.7))
        eps0 = float(rng.uniform(0.005, 0.5))
        iters = int(rng.choice([1, 2, 4, 8, 16]))
        E = rng.choice(4, size=(batch, code.n), p=[1 - eps, eps / 3, eps / 3, eps / 3]).astype(np.uint8)
        s = code.syndromes(E)
        res = decode_batch(code, s, DecoderConfig.from_eps0(family, eps0, iters))
        c = res.converged
        violations += int((code.syndromes(res.estimates[c]) != s[c]).any(axis=1).sum())
        converged += int(c.sum())
        total += batch
    record("contract: converged implies matching syndrome (1e6 decodes)", violations == 0,
           f"{violations} violations among {converged} converged of {total} decodes")


def test_zero_syndrome_identity():
    code = load_code(CODES / "gb48.code")
    bad = []
    for family in (Family.BP2, Family.BP4):
        for eps0 in (0.01, 0.1, 0.5, 0.74):
            res = decode(code, np.zeros(code.m, dtype=np.uint8), DecoderConfig.from_eps0(family, eps0, 4))
            if res.estimate.weight() or not res.converged or res.iterations_used:
                bad.append((family.value, eps0))
    record("contract: zero syndrome gives identity for all eps0, both families", not bad,
           f"failures: {bad or 'none'}")


@pytest.fixture(scope="module")
def gb48():
    return load_code(CODES / "gb48.code")


def paired(surface, eps, a, b):
    return surface.indicators[(a, eps)], surface.indicators[(b, eps)]


def test_mismatch_trend(gb48):
    eps, N = 0.01, 10**5
    cfg = DecoderConfig(Family.BP4, 4, 0.0)
    mism = llr_bp4(0.10)
    s = sweep(gb48, [eps], [MATCHED, mism], cfg, fixed_trials(N), 2025, keep_indicators=True)
    fm, fx = paired(s, eps, MATCHED, f"l0={mism!r}")
    only_m, only_x = int((fm & ~fx).sum()), int((fx & ~fm).sum())
    p = stats.binomtest(only_x, only_m + only_x, 0.5, alternative="less").pvalue if only_m + only_x else 1.0
    ok = fx.mean() <= fm.mean() and p < 0.01
    record("contract: mismatch trend, GB n=48, BP4, l=4, eps=0.01, 1e5 paired", ok,
           f"FER matched {fm.mean():.5f}, eps0=0.10 {fx.mean():.5f}; discordant {only_m}/{only_x}, "
           f"exact paired p = {p:.2e}")


def test_iteration_dependence(gb48):
    eps, N = 0.03, 10**5
    mism = llr_bp4(0.10)
    diffs, gaps = [], {}
    for iters in (4, 8):
        s = sweep(gb48, [eps], [MATCHED, mism], DecoderConfig(Family.BP4, iters, 0.0),
                  fixed_trials(N), 2026, keep_indicators=True)
        fm, fx = paired(s, eps, MATCHED, f"l0={mism!r}")
        d = fm.astype(int) - fx.astype(int)
        diffs.append(d)
        gaps[iters] = d.mean()
    z = diffs[0] - diffs[1]  # per-trial (gap at 4) - (gap at 8), same errors throughout
    se = z.std(ddof=1) / math.sqrt(z.size)
    lo, hi = z.mean() - 1.96 * se, z.mean() + 1.96 * se
    ok = hi >= 0 and z.mean() >= 0
    record("contract: gap shrinks from l=4 to l=8 (eps=0.03, paired 95% CI)", ok,
           f"gap l=4 {gaps[4]:.5f}, l=8 {gaps[8]:.5f}; shrinkage {z.mean():.5f} CI [{lo:.5f}, {hi:.5f}]")


def test_gb126_target():
    path = Path(os.environ.get(GB126_ENV) or CODES / "gb126.code")
    code = load_code(path)
    assert (code.n, code.k) == (126, 28)
    eps, N = 1e-3, int(os.environ.get("QLDPC_GB126_TRIALS", 10**6))
    mism = llr_bp4(0.10)
    s = sweep(code, [eps], [MATCHED, mism], DecoderConfig(Family.BP4, 4, 0.0), fixed_trials(N), 126,
              block_size=8192)
    fm, fx = s.points[0], s.points[1]
    ratio = fx.fer / fm.fer if fm.frame_errors else float("nan")
    # one-sided 95% upper bound on the ratio from the conditional binomial split
    n = fm.frame_errors + fx.frame_errors
    p_hi = stats.binomtest(fx.frame_errors, n).proportion_ci(0.90, method="exact").high if n else 1.0
    ratio_hi = p_hi / (1 - p_hi) if p_hi < 1 else float("inf")
    ok = fm.frame_errors > 0 and ratio <= 0.1
    record(f"contract: GB(126,28) FER ratio <= 0.1 at eps=1e-3, l=4 ({path.name})", ok,
           f"matched {fm.frame_errors}/{N}, eps0=0.10 {fx.frame_errors}/{N}, ratio {ratio:.2e} "
           f"(95% upper {ratio_hi:.2e})")


# -- objective landscape -----------------------------------------------------------------


def test_objective_monotonicity():
    rng = np.random.default_rng(99)
    violations = 0
    for _ in range(100):
        T = int(rng.integers(1, 10))
        grid = tuple(sorted(rng.uniform(0.01, 0.2, size=T)))
        w = tuple(rng.dirichlet(np.ones(T)))
        w = tuple(x / math.fsum(w) for x in w)
        try:
            spec = ObjectiveSpec(grid, w)
        except ValueError:
            spec = ObjectiveSpec(grid)
        N = int(rng.integers(100, 10**6))
        errs_b = rng.integers(0, N // 10 + 1, size=T)
        errs_a = np.array([rng.integers(0, e + 1) for e in errs_b])  # pointwise <=
        pts = [FerPoint(e, 1.0, N, int(k), "l0=1.0") for e, k in zip(grid, errs_a)]
        pts += [FerPoint(e, 2.0, N, int(k), "l0=2.0") for e, k in zip(grid, errs_b)]
        surf = FerSurface(pts, {"decoder": "bp4"})
        if aggregated_objective(surf, spec, 1.0) > aggregated_objective(surf, spec, 2.0):
            violations += 1
    record("objective: pointwise-dominated FER gives smaller J (100 instances)", violations == 0,
           f"{violations} violations")
