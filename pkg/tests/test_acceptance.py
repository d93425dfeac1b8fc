"""Exit criteria for the package, one test per criterion.

Criteria 1-3 share one run of the full synthetic grid (12 cells x 20
trials, n=100, L=1000, w=50, M=100, alpha=0.05), which takes a while on
a single core.
"""

import time

import numpy as np
import pytest

import recombsvd.detector as det
from recombsvd.detector import DetectorConfig, detect, mean_successive_difference, ols_scores, ramp
from recombsvd.distmat import build_matrix
from recombsvd.harness import ExperimentGrid, run_grid
from recombsvd.seqio import SequencePopulation
from recombsvd.svdcore import SvdFactors, truncated_svd

from conftest import naive_matrix, random_population

W = 50
DETECTOR = DetectorConfig(window=W, permutations=100, alpha=0.05, max_hotspots=2)
MASTER_SEED = 1

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="session")
def grid_cells():
    grid = ExperimentGrid(trials=20, n=100, length=1000, detector=DETECTOR, master_seed=MASTER_SEED)
    return {(c.r_c, c.r_i, c.num_recomb): c for c in run_grid(grid)}


@pytest.fixture(scope="session")
def noiseless_cells():
    grid = ExperimentGrid(
        common_rates=(0.05, 0.25), individual_rates=(0.0,), recomb_counts=(1,),
        trials=20, detector=DETECTOR, master_seed=MASTER_SEED + 1,
    )
    return run_grid(grid)


LOW, HIGH = 0.05, 0.25
CONFIGS = {"low/low": (LOW, LOW), "low/high": (LOW, HIGH), "high/low": (HIGH, LOW), "high/high": (HIGH, HIGH)}


@pytest.mark.slow
def test_criterion_1_table_reproduction(grid_cells, acceptance_line):
    checks = []
    for name, (rc, ri) in CONFIGS.items():
        c = grid_cells[(rc, ri, 0)]
        checks.append((f"0rec {name} FP={c.fp_rate:.2f}<=0.15", c.completed == 20 and c.fp_rate <= 0.15))
    for name in ("low/low", "high/low", "high/high"):
        c = grid_cells[(*CONFIGS[name], 1)]
        checks.append((f"1rec {name} FN={c.fn_rate:.2f}==0", c.completed == 20 and c.fn_rate == 0))
        checks.append((f"1rec {name} FP={c.fp_rate:.2f}<=0.20", c.fp_rate <= 0.20))
    c = grid_cells[(HIGH, LOW, 2)]
    checks.append((f"2rec high/low FN={c.fn_rate:.2f}<=0.15", c.completed == 20 and c.fn_rate <= 0.15))
    # The hard configuration shows up as under-calling, so "worst" compares FN rates.
    for k in (1, 2):
        worst = grid_cells[(LOW, HIGH, k)].fn_rate
        others = {n: grid_cells[(*rates, k)].fn_rate for n, rates in CONFIGS.items() if n != "low/high"}
        tie = any(v == worst for v in others.values())
        checks.append((
            f"{k}rec low/high worst (FN={worst:.2f} vs {max(others.values()):.2f}{', tied' if tie else ''})",
            worst >= max(others.values()),
        ))
    failed = [msg for msg, ok in checks if not ok]
    table = "; ".join(
        f"{c.name} FP={c.fp_rate:.2f} FN={'NA' if c.fn_rate is None else f'{c.fn_rate:.2f}'}"
        for c in grid_cells.values()
    )
    acceptance_line(
        "1 Table 1 at desk scale", not failed,
        ("failed: " + ", ".join(failed) + " | " if failed else "") + table,
    )
    assert not failed, failed


@pytest.mark.slow
def test_criterion_2_location_accuracy(grid_cells, noiseless_cells, acceptance_line):
    checks = []
    for name in ("high/low", "high/high"):
        c = grid_cells[(*CONFIGS[name], 1)]
        for method in ("diff", "ols"):
            errs = np.array(c.errors(method, 2))
            frac = float(np.mean(errs <= 2 * W)) if errs.size else 0.0
            checks.append((f"{name} {method} {frac:.2f}>=0.90 (n={errs.size})", frac >= 0.90))
    # The noiseless control is gated at the high common rate, matching the cells
    # above. At the low common rate the parents differ at few sites, so the
    # steepest stretch of v_2 can sit where that density jumps rather than at
    # the breakpoint; that result is reported but not gated.
    info = []
    for c in noiseless_cells:
        for method in ("diff", "ols"):
            errs = np.array(c.errors(method, 2))
            frac = float(np.mean(errs <= 2 * W)) if errs.size else 0.0
            msg = f"r_i=0 r_c={c.r_c} {method} {frac:.2f}==1 (n={errs.size})"
            if c.r_c == HIGH:
                checks.append((msg, errs.size > 0 and frac == 1.0))
            else:
                info.append(msg.replace("==1", ""))
    failed = [m for m, ok in checks if not ok]
    acceptance_line(
        "2 location accuracy within 2w", not failed,
        "; ".join(m for m, _ in checks) + " | not gated: " + "; ".join(info),
    )
    assert not failed, failed


@pytest.mark.slow
def test_criterion_3_duplicate_locations(grid_cells, acceptance_line):
    cells = [c for key, c in grid_cells.items() if key[2] == 2]
    dup = sum(c.duplicate_count for c in cells)
    total = sum(c.duplicate_trials for c in cells)
    rate = dup / total if total else float("nan")
    detail = f"{dup}/{total} = {rate:.3f} <= 0.25 (" + ", ".join(
        f"{c.name} {c.duplicate_count}/{c.duplicate_trials}" for c in cells
    ) + ")"
    ok = total > 0 and rate <= 0.25
    acceptance_line("3 vector-3 duplicates vector-2", ok, detail)
    assert ok, detail


def test_criterion_4_oracle_equivalence(acceptance_line):
    rng = np.random.default_rng(4)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        length = int(rng.integers(3, 60))
        w = int(rng.integers(1, (length - 1) // 2 + 1))
        pop = random_population(rng, n, length, "ACGT"[: int(rng.integers(2, 5))])
        mismatches += not np.array_equal(build_matrix(pop, w).values, naive_matrix(pop, w))

    worst_sv = 0.0
    for _ in range(200):
        p, c = int(rng.integers(5, 60)), int(rng.integers(5, 60))
        A = rng.integers(0, 30, size=(p, c)).astype(float)
        k = int(rng.integers(1, min(p, c) - 1))
        for solver in ("dense", "arpack"):
            f = truncated_svd(A, k, solver=solver, seed=1)
            ref = np.linalg.svd(A, compute_uv=False)[:k]
            worst_sv = max(worst_sv, float(np.max(np.abs(f.singular_values - ref) / ref[0])))

    argmax_mismatch = 0
    for _ in range(500):
        w = int(rng.integers(2, 60))
        x = np.cumsum(rng.standard_normal(int(rng.integers(w + 1, 400))))
        z = ramp(w)
        windows = np.lib.stride_tricks.sliding_window_view(x, len(z))
        lsq = np.abs(windows @ z) / (z @ z)
        argmax_mismatch += int(np.argmax(ols_scores(x, w)) != np.argmax(lsq))

    ok = mismatches == 0 and worst_sv <= 1e-6 and argmax_mismatch == 0
    acceptance_line(
        "4 oracle equivalence", ok,
        f"smoothed rows 1000 instances, {mismatches} mismatches; SVD max rel sv error {worst_sv:.2e} <= 1e-6; "
        f"OLS vs normalised LSQ argmax, {argmax_mismatch}/500 mismatches",
    )
    assert ok


def _handmade_population(seed=0, n=40, length=400, t=180):
    """Two parents and their two crossovers, copied with light noise; no simulator involved."""
    rng = np.random.default_rng(seed)
    letters = np.frombuffer(b"ACGT", dtype=np.uint8)
    a = rng.integers(0, 4, length)
    b = np.where(rng.random(length) < 0.2, (a + rng.integers(1, 4, length)) % 4, a)
    kinds = [a, b, np.r_[a[:t], b[t:]], np.r_[b[:t], a[t:]]]
    rows = np.array([kinds[i % 4] for i in range(n)])
    noise = rng.random(rows.shape) < 0.01
    rows[noise] = (rows[noise] + 1) % 4
    return SequencePopulation.from_codes(letters[rows])


def test_criterion_5_invariants(acceptance_line, monkeypatch):
    rng = np.random.default_rng(5)
    checks = []

    ortho = resid = 0.0
    nonneg = 0.0
    for _ in range(100):
        A = rng.integers(0, 10, size=(int(rng.integers(4, 80)), int(rng.integers(4, 80)))).astype(float)
        f = truncated_svd(A, 3)
        for Q in (f.left_vectors, f.right_vectors):
            ortho = max(ortho, float(np.max(np.abs(Q.T @ Q - np.eye(3)))))
        r = np.linalg.norm(A @ f.right_vectors - f.left_vectors * f.singular_values, axis=0)
        resid = max(resid, float(r.max() / max(1.0, f.singular_values[0])))
        nonneg = min(nonneg, float(f.v(1).min()), float(f.u(1).min()))
    checks.append((f"orthonormality {ortho:.1e}<=1e-8", ortho <= 1e-8))
    checks.append((f"residual {resid:.1e}<=1e-6", resid <= 1e-6))
    checks.append((f"first pair min {nonneg:.1e}>=-1e-8", nonneg >= -1e-8))

    d = mean_successive_difference([0, 1, 0, 1])
    checks.append((f"d_bar([0,1,0,1])={d}", d == 0.75))

    pop = _handmade_population()
    cfg = DetectorConfig(window=20, permutations=40, seed=11)
    base = detect(pop, cfg).to_json()
    checks.append(("detect deterministic", base == detect(pop, cfg).to_json()))

    real_svd, real_gram = det.truncated_svd, det.right_vectors_from_gram

    def flip(f):
        left = None if f.left_vectors is None else -f.left_vectors
        return SvdFactors(f.singular_values, left, -f.right_vectors, f.column_offset)

    monkeypatch.setattr(det, "truncated_svd", lambda *a, **k: flip(real_svd(*a, **k)))
    monkeypatch.setattr(det, "right_vectors_from_gram", lambda *a, **k: flip(real_gram(*a, **k)))
    checks.append(("sign-flip invariant report", detect(pop, cfg).to_json() == base))

    failed = [m for m, ok in checks if not ok]
    acceptance_line("5 invariants without simulation", not failed, "; ".join(m for m, _ in checks))
    assert not failed, failed


def test_criterion_6_performance(acceptance_line):
    rng = np.random.default_rng(6)
    pop = random_population(rng, 100, 1000)
    pop.codes  # encode once, outside the timed region
    build_times = []
    for _ in range(3):
        t0 = time.perf_counter()
        X = build_matrix(pop, W)
        build_times.append(time.perf_counter() - t0)
    assert X.values.shape == (4950, 900)
    t0 = time.perf_counter()
    detect(pop, DETECTOR)
    detect_time = time.perf_counter() - t0
    ok = min(build_times) < 1.0 and detect_time < 60.0
    acceptance_line(
        "6 performance", ok,
        f"matrix build 4950x900 {min(build_times):.3f}s < 1s; detect n=100 L=1000 M=100 {detect_time:.1f}s < 60s",
    )
    assert ok
