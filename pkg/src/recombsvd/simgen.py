"""Synthetic two-parent populations with 0, 1 or 2 recombination breakpoints.

Protocol: mutate one random ancestor twice (rate ``r_c``) to get parents
A and B, splice them at the breakpoints into every segment pattern
(A/B, AB/BA, AAA..BBB), sample ``n`` templates with replacement and
mutate each sampled copy (rate ``r_i``). A mutation always substitutes a
different character, drawn uniformly.

A breakpoint ``t`` closes the left segment: positions ``1..t`` come from
the left parent and ``t+1..L`` from the right one.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .seqio import NUCLEOTIDES, SequencePopulation


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 100
    length: int = 1000
    r_c: float = 0.05
    r_i: float = 0.05
    num_recomb: int = 1
    recomb_locations: tuple[int, ...] | None = None  # None -> drawn at random
    min_spacing: int = 150
    alphabet: str = NUCLEOTIDES
    seed: int = 0

    def __post_init__(self):
        if self.recomb_locations is not None:
            object.__setattr__(self, "recomb_locations", tuple(int(t) for t in self.recomb_locations))
        for name in ("r_c", "r_i"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {rate!r}")
        if self.num_recomb not in (0, 1, 2):
            raise ConfigError(f"num_recomb must be 0, 1 or 2, got {self.num_recomb!r}")
        if self.n < 2:
            raise ConfigError(f"population size must be >= 2, got {self.n}")
        if self.length < 2:
            raise ConfigError(f"sequence length must be >= 2, got {self.length}")
        if len(set(self.alphabet)) != len(self.alphabet) or len(self.alphabet) < 2:
            raise ConfigError(f"alphabet needs >= 2 distinct characters, got {self.alphabet!r}")
        if self.recomb_locations is not None:
            check_locations(self.recomb_locations, self.length, self.num_recomb)


def check_locations(locations, length: int, num_recomb: int | None = None) -> None:
    locations = list(locations)
    if num_recomb is not None and len(locations) != num_recomb:
        raise ConfigError(f"expected {num_recomb} recombination locations, got {len(locations)}")
    if any(not 1 < t < length for t in locations):
        raise ConfigError(f"recombination locations must lie strictly inside (1, {length})")
    if any(b <= a for a, b in zip(locations, locations[1:])):
        raise ConfigError("recombination locations must be strictly increasing")


@dataclass(frozen=True)
class SimulatedPopulation:
    population: SequencePopulation
    recomb_locations: tuple[int, ...]
    provenance: tuple[str, ...]
    config: SimulationConfig
    breakpoint_mode: str = "random"

    def truth(self) -> dict:
        return {
            "recomb_locations": list(self.recomb_locations),
            "breakpoint_mode": self.breakpoint_mode,
            "provenance": dict(zip(self.population.labels, self.provenance)),
            "config": _config_dict(self.config),
        }

    def truth_json(self) -> str:
        return json.dumps(self.truth(), indent=2) + "\n"


def _config_dict(config: SimulationConfig) -> dict:
    d = asdict(config)
    if d["recomb_locations"] is not None:
        d["recomb_locations"] = list(d["recomb_locations"])
    return d


def _mutate(seq: np.ndarray, rate: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Substitute each entry with probability ``rate`` by a different symbol in ``0..k-1``."""
    hit = rng.random(seq.shape) < rate
    out = seq.copy()
    out[hit] = (out[hit] + rng.integers(1, k, size=int(hit.sum()))) % k
    return out


def make_parents(length: int, r_c: float, seed=None, *, alphabet: str = NUCLEOTIDES):
    """Two parents mutated independently at rate ``r_c`` from one uniform ancestor.

    Returns symbol-index arrays (``0..len(alphabet)-1``).
    """
    rng = np.random.default_rng(seed)
    k = len(alphabet)
    ancestor = rng.integers(0, k, size=length, dtype=np.uint8)
    return _mutate(ancestor, r_c, k, rng), _mutate(ancestor, r_c, k, rng)


def make_daughters(parents, recomb_locations) -> dict[str, np.ndarray]:
    """Every parent-of-origin pattern over the segments cut by the breakpoints.

    Keys spell one parent letter per segment (``"A"``/``"B"``; ``"AA"``,
    ``"AB"``, ``"BA"``, ``"BB"``; ``"AAA"`` .. ``"BBB"``), so the
    homogeneous patterns are the parents themselves.
    """
    a, b = parents
    length = len(a)
    locations = list(recomb_locations)
    if len(locations) > 2:
        raise ConfigError("at most two recombination locations are supported")
    check_locations(locations, length)
    cuts = [0] + locations + [length]
    source = {"A": a, "B": b}
    templates = {}
    for pattern in itertools.product("AB", repeat=len(locations) + 1):
        pieces = [source[p][lo:hi] for p, lo, hi in zip(pattern, cuts, cuts[1:])]
        templates["".join(pattern)] = np.concatenate(pieces)
    return templates


def draw_locations(
    num_recomb: int, length: int, min_spacing: int, rng: np.random.Generator
) -> tuple[int, ...]:
    """Uniform breakpoints in ``[0.2 L, 0.8 L]``, at least ``min_spacing`` apart."""
    lo, hi = int(np.ceil(0.2 * length)), int(np.floor(0.8 * length))
    lo, hi = max(lo, 2), min(hi, length - 1)
    if num_recomb == 0:
        return ()
    if num_recomb == 2 and hi - lo < min_spacing:
        raise ConfigError(
            f"cannot place two breakpoints {min_spacing} apart within [{lo}, {hi}]"
        )
    while True:
        locs = sorted(int(t) for t in rng.integers(lo, hi + 1, size=num_recomb))
        if num_recomb == 1 or locs[1] - locs[0] >= min_spacing:
            return tuple(locs)


def sample_population(
    templates: dict[str, np.ndarray],
    n: int,
    r_i: float,
    seed=None,
    *,
    alphabet: str = NUCLEOTIDES,
    recomb_locations=(),
    config: SimulationConfig | None = None,
) -> SimulatedPopulation:
    """Draw ``n`` templates uniformly with replacement and mutate each copy at rate ``r_i``."""
    if not templates:
        raise ConfigError("no templates to sample from")
    rng = np.random.default_rng(seed)
    names = list(templates)
    picks = rng.integers(0, len(names), size=n)
    k = len(alphabet)
    table = np.frombuffer(alphabet.encode("ascii"), dtype=np.uint8)
    rows = np.stack([_mutate(templates[names[p]], r_i, k, rng) for p in picks])
    labels = [f"seq{i + 1}" for i in range(n)]
    pop = SequencePopulation.from_codes(table[rows], labels, alphabet=alphabet)
    return SimulatedPopulation(pop, tuple(recomb_locations), tuple(names[p] for p in picks), config)


def simulate(config: SimulationConfig) -> SimulatedPopulation:
    """One dataset per the protocol above, a pure function of ``config``."""
    rng = np.random.default_rng(config.seed)
    parents = make_parents(config.length, config.r_c, rng, alphabet=config.alphabet)
    if config.recomb_locations is None:
        locations = draw_locations(config.num_recomb, config.length, config.min_spacing, rng)
        mode = "random"
    else:
        locations = config.recomb_locations
        mode = "fixed"
    templates = make_daughters(parents, locations)
    sim = sample_population(
        templates, config.n, config.r_i, rng,
        alphabet=config.alphabet, recomb_locations=locations, config=config,
    )
    return SimulatedPopulation(sim.population, sim.recomb_locations, sim.provenance, config, mode)


def permute_population(pop: SequencePopulation, seed=None) -> SequencePopulation:
    """Apply one uniform random permutation of positions to every sequence."""
    perm = np.random.default_rng(seed).permutation(pop.length)
    return SequencePopulation.from_codes(
        pop.codes[:, perm], pop.labels, alphabet=pop.alphabet, case_folded=pop.case_folded
    )
