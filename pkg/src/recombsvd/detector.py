"""Hot spot existence test and location inference.

A population is called recombinant at right singular vector ``m`` when
the mean successive difference of ``v_m`` is below a threshold taken
from position-permuted copies of the same population. Locations come
from the steepest window of ``v_m`` under two slope proxies: the
endpoint difference ("diff") and the dot product with a centred ramp
("ols").
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .distmat import build_matrix, check_window, mismatch_gram, window_gram
from .errors import BoundsError, ConfigError, ContractError, ConvergenceError, WindowError
from .seqio import SequencePopulation
from .svdcore import ORTHONORMALITY_TOL, RESIDUAL_TOL, right_vectors_from_gram, truncated_svd

METHODS = ("diff", "ols")

# A singular value this small relative to d_1 carries no usable signal.
_NULL_SV_RTOL = 1e-10
# Neighbouring singular values closer than this (relative to d_1) are ties.
_TIE_RTOL = 1e-8


def mean_successive_difference(x) -> float:
    """Sum of ``|x[i] - x[i+1]|`` divided by ``len(x)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ContractError("mean_successive_difference needs a vector of length >= 2")
    return float(np.abs(np.diff(x)).sum() / len(x))


def _half(w: int) -> int:
    if w < 1:
        raise WindowError(f"slope window must be >= 1, got {w}")
    return w // 2


def slope_diff(x, i: int, w: int) -> float:
    """``|x[i - w/2] - x[i + w/2]|`` at 1-based centre ``i`` (``w/2`` floored)."""
    x = np.asarray(x, dtype=np.float64)
    h = _half(w)
    if i - h < 1 or i + h > len(x):
        raise BoundsError(f"centre {i} with half-width {h} leaves 1..{len(x)}")
    return float(abs(x[i - h - 1] - x[i + h - 1]))


def ramp(w: int) -> np.ndarray:
    h = _half(w)
    return np.arange(-h, h + 1, dtype=np.float64)


def slope_ols(x, i: int, w: int) -> float:
    """``|<x[i-w/2 : i+w/2], z>|`` at 1-based centre ``i``, ``z`` the centred integer ramp."""
    x = np.asarray(x, dtype=np.float64)
    h = _half(w)
    if i - h < 1 or i + h > len(x):
        raise BoundsError(f"centre {i} with half-width {h} leaves 1..{len(x)}")
    return float(abs(np.dot(x[i - h - 1 : i + h], ramp(w))))


def diff_scores(x, w: int) -> np.ndarray:
    """:func:`slope_diff` at every valid centre, in order."""
    x = np.asarray(x, dtype=np.float64)
    h = _half(w)
    if len(x) < 2 * h + 1:
        raise WindowError(f"vector of length {len(x)} too short for slope window {w}")
    return np.abs(x[: len(x) - 2 * h] - x[2 * h :])


def ols_scores(x, w: int) -> np.ndarray:
    """:func:`slope_ols` at every valid centre, in order."""
    x = np.asarray(x, dtype=np.float64)
    h = _half(w)
    if len(x) < 2 * h + 1:
        raise WindowError(f"vector of length {len(x)} too short for slope window {w}")
    windows = np.lib.stride_tricks.sliding_window_view(x, 2 * h + 1)
    return np.abs(windows @ ramp(w))


@dataclass(frozen=True)
class Location:
    location: int  # genomic, 1-based
    score: float
    tie: bool


@dataclass(frozen=True)
class ExistenceTest:
    vector_index: int
    d_bar: float
    gamma: float
    num_permutations: int
    alpha: float
    verdict: bool
    unstable: bool = False
    note: str | None = None


@dataclass(frozen=True)
class HotspotCall:
    vector_index: int
    diff_location: int
    diff_score: float
    ols_location: int
    ols_score: float
    diff_tie: bool = False
    ols_tie: bool = False
    # Earlier vector whose call (same method) lies within w of this one.
    duplicate_of_diff: int | None = None
    duplicate_of_ols: int | None = None

    @property
    def duplicate_of(self) -> int | None:
        if self.duplicate_of_diff is not None:
            return self.duplicate_of_diff
        return self.duplicate_of_ols

    def location(self, method: str) -> int:
        return getattr(self, f"{method}_location")


def _argmax(scores: np.ndarray) -> tuple[int, bool]:
    best = int(np.argmax(scores))
    tie = bool(np.count_nonzero(scores == scores[best]) > 1)
    return best, tie


def locate_hotspot(v, w: int, column_offset: int) -> dict[str, Location]:
    """Steepest window of ``v`` under each slope method, in genomic coordinates.

    Ties go to the smallest index. Column ``c`` (1-based) maps to genomic
    position ``c + column_offset``.
    """
    v = np.asarray(v, dtype=np.float64)
    if len(v) < w + 1:
        raise WindowError(f"vector of length {len(v)} too short for slope window {w}")
    h = _half(w)
    out = {}
    for method, scores in (("diff", diff_scores(v, w)), ("ols", ols_scores(v, w))):
        best, tie = _argmax(scores)
        column = best + h + 1
        out[method] = Location(int(column + column_offset), float(scores[best]), tie)
    return out


@dataclass(frozen=True)
class DetectorConfig:
    window: int = 50
    permutations: int = 100
    alpha: float = 0.05
    seed: int = 0
    max_hotspots: int = 2
    # "gram" recomputes only X^T X per replicate; "direct" rebuilds X and
    # runs a full truncated SVD. Both give the same right singular vectors.
    null_method: str = "gram"
    threads: int = 1

    def __post_init__(self):
        if isinstance(self.window, bool) or int(self.window) != self.window or self.window < 1:
            raise ConfigError(f"window must be a positive integer, got {self.window!r}")
        if int(self.permutations) != self.permutations or self.permutations < 1:
            raise ConfigError(f"permutations must be >= 1, got {self.permutations!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if int(self.max_hotspots) != self.max_hotspots or self.max_hotspots < 1:
            raise ConfigError(f"max_hotspots must be >= 1, got {self.max_hotspots!r}")
        if self.null_method not in ("gram", "direct"):
            raise ConfigError(f"unknown null method {self.null_method!r}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads!r}")

    @property
    def k(self) -> int:
        return max(3, self.max_hotspots + 2)


def replicate_permutation(length: int, seed: int, replicate: int) -> np.ndarray:
    """Position permutation for one null replicate, a function of (seed, replicate) only."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate)]))
    return rng.permutation(length)


def permutation_null(
    pop: SequencePopulation,
    w: int,
    vector_indices,
    num_permutations: int,
    seed: int,
    *,
    k: int | None = None,
    method: str = "gram",
    threads: int = 1,
) -> np.ndarray:
    """d̄ of the requested right singular vectors over permuted replicates.

    Returns an array of shape ``(num_permutations, len(vector_indices))``.
    Every replicate applies one uniform permutation of positions to all
    sequences; its randomness depends only on ``(seed, replicate)``.
    """
    vector_indices = list(vector_indices)
    k = k or max(vector_indices)
    check_window(pop.length, w)
    if num_permutations < 1:
        raise ConfigError("num_permutations must be >= 1")
    gram = mismatch_gram(pop) if method == "gram" else None

    def one(r: int) -> list[float]:
        perm = replicate_permutation(pop.length, seed, r)
        try:
            if method == "gram":
                factors = right_vectors_from_gram(window_gram(gram[np.ix_(perm, perm)], w), k)
            else:
                permuted = SequencePopulation.from_codes(pop.codes[:, perm], pop.labels)
                factors = truncated_svd(build_matrix(permuted, w), k, seed=seed)
        except ConvergenceError as exc:
            raise ConvergenceError(f"permutation replicate {r}: {exc}", exc.residual) from exc
        return [mean_successive_difference(factors.v(m)) for m in vector_indices]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(num_permutations)))
    else:
        rows = [one(r) for r in range(num_permutations)]
    return np.asarray(rows, dtype=np.float64).reshape(num_permutations, len(vector_indices))


def null_threshold(values, alpha: float) -> float:
    """Lower ``alpha`` quantile (linear interpolation) of replicate d̄ values."""
    return float(np.quantile(np.asarray(values, dtype=np.float64), alpha))


def permutation_null_threshold(
    pop: SequencePopulation,
    w: int,
    m: int,
    num_permutations: int,
    alpha: float,
    seed: int,
    **kwargs,
) -> float:
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha!r}")
    values = permutation_null(pop, w, [m], num_permutations, seed, k=max(3, m), **kwargs)
    return null_threshold(values[:, 0], alpha)


@dataclass
class DetectionReport:
    parameters: dict
    dimensions: dict
    singular_values: list[float]
    tests: list[ExistenceTest] = field(default_factory=list)
    calls: list[HotspotCall] = field(default_factory=list)
    signal: bool = True
    note: str | None = None

    @property
    def number_of_hotspots(self) -> int:
        return len(self.calls)

    def to_dict(self, methods=METHODS) -> dict:
        hotspots = []
        for call in self.calls:
            for method in methods:
                dup = getattr(call, f"duplicate_of_{method}")
                hotspots.append(
                    {
                        "vector": call.vector_index,
                        "method": method,
                        "location": getattr(call, f"{method}_location"),
                        "score": getattr(call, f"{method}_score"),
                        "tie": getattr(call, f"{method}_tie"),
                        "duplicate_flag": dup is not None,
                        "duplicate_of": dup,
                    }
                )
        return {
            "tool": {"name": "recombsvd", "version": __version__},
            "parameters": self.parameters,
            "input": self.dimensions,
            "signal": self.signal,
            "note": self.note,
            "singular_values": self.singular_values,
            "tests": [
                {
                    "vector": t.vector_index,
                    "d_bar": t.d_bar,
                    "gamma": t.gamma,
                    "verdict": t.verdict,
                    "unstable": t.unstable,
                    "note": t.note,
                }
                for t in self.tests
            ],
            "number_of_hotspots": self.number_of_hotspots,
            "hotspots": hotspots,
        }

    def to_json(self, methods=METHODS, indent: int = 2) -> str:
        return json.dumps(self.to_dict(methods), indent=indent) + "\n"


def _parameters(config: DetectorConfig, k: int) -> dict:
    params = asdict(config)
    params.pop("threads")
    params.update(
        k=k,
        window_length=2 * config.window + 1,
        slope_window=config.window,
        quantile="lower, linear interpolation",
        svd_residual_tol=RESIDUAL_TOL,
        svd_orthonormality_tol=ORTHONORMALITY_TOL,
    )
    return params


def detect(pop: SequencePopulation, config: DetectorConfig | None = None, **overrides) -> DetectionReport:
    """Count and locate recombination hot spots in ``pop``.

    Vectors ``2 .. max_hotspots + 1`` are tested in order, each against its
    own threshold from one shared set of permuted replicates; testing stops
    at the first vector that is not significant.
    """
    if config is None:
        config = DetectorConfig(**overrides)
    elif overrides:
        raise TypeError("pass either a config or keyword overrides, not both")
    w = config.window
    X = build_matrix(pop, w)
    dims = {
        "sequences": pop.n,
        "length": pop.length,
        "pairs": X.n_pairs,
        "columns": X.n_columns,
        "first_position": w + 1,
        "last_position": pop.length - w,
    }
    vectors = list(range(2, config.max_hotspots + 2))
    k = config.k
    params = _parameters(config, k)

    if not X.values.any():
        return DetectionReport(
            params, dims, [], signal=False,
            note="no signal: all sequences identical in every window (zero distance matrix)",
        )
    k_eff = min(k, X.n_pairs, X.n_columns)
    if k_eff < max(vectors):
        return DetectionReport(
            params, dims, [], signal=False,
            note=f"no signal: matrix rank is at most {k_eff}, too small to test vector {max(vectors)}",
        )

    factors = truncated_svd(X, k_eff, seed=config.seed)
    s = factors.singular_values
    report = DetectionReport(params, dims, [float(x) for x in s])

    null = permutation_null(
        pop, w, vectors, config.permutations, config.seed,
        k=k_eff, method=config.null_method, threads=config.threads,
    )

    for col, m in enumerate(vectors):
        gamma = null_threshold(null[:, col], config.alpha)
        d_bar = mean_successive_difference(factors.v(m))
        note = None
        verdict = d_bar < gamma
        if s[m - 1] <= _NULL_SV_RTOL * s[0]:
            verdict = False
            note = f"singular value {m} is numerically zero"
        unstable = bool(
            abs(s[m - 2] - s[m - 1]) <= _TIE_RTOL * s[0]
            or (m < len(s) and abs(s[m - 1] - s[m]) <= _TIE_RTOL * s[0])
        )
        report.tests.append(
            ExistenceTest(m, d_bar, gamma, config.permutations, config.alpha, verdict, unstable, note)
        )
        if not verdict:
            break
        locs = locate_hotspot(factors.v(m), w, X.column_offset)
        dups = {}
        for method in METHODS:
            dups[method] = next(
                (
                    c.vector_index
                    for c in report.calls
                    if abs(c.location(method) - locs[method].location) <= w
                ),
                None,
            )
        report.calls.append(
            HotspotCall(
                m,
                locs["diff"].location, locs["diff"].score,
                locs["ols"].location, locs["ols"].score,
                locs["diff"].tie, locs["ols"].tie,
                dups["diff"], dups["ols"],
            )
        )
    return report
