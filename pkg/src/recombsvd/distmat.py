"""Smoothed Hamming distance matrix over all sequence pairs.

Row ``r`` of the matrix belongs to the pair ``pair_index[r] = (i, j)``
(0-based, ``i < j``, lexicographic). Column ``c`` (0-based) holds the
Hamming distance of the two windows of ``2w + 1`` positions centred on
genomic position ``c + w + 1``. Partial windows at the sequence ends are
dropped, so there are ``L - 2w`` columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import ContractError, WindowError
from .seqio import SequencePopulation

# Rows processed per block; bounds the (rows, L) temporaries.
_BLOCK_ROWS = 2048


def hamming(a: str, b: str) -> int:
    if len(a) != len(b):
        raise ContractError(f"hamming needs equal lengths, got {len(a)} and {len(b)}")
    return sum(x != y for x, y in zip(a, b))


def check_window(length: int, w: int) -> None:
    if isinstance(w, bool) or not isinstance(w, (int, np.integer)) or w < 1:
        raise WindowError(f"window half-width must be a positive integer, got {w!r}")
    if length < 2 * w + 1:
        raise WindowError(
            f"window half-width {w} needs length >= {2 * w + 1}, sequences have length {length}"
        )


def _sliding_counts(mismatch: np.ndarray, w: int) -> np.ndarray:
    """Window sums of a 0/1 array along its last axis, updated incrementally.

    The first full window is summed directly; each following column adds
    the entering position and subtracts the one leaving the window.
    """
    span = 2 * w + 1
    mismatch = mismatch.astype(np.int32, copy=False)
    first = mismatch[..., :span].sum(axis=-1, keepdims=True)
    step = mismatch[..., span:] - mismatch[..., : mismatch.shape[-1] - span]
    out = np.empty(mismatch.shape[:-1] + (mismatch.shape[-1] - span + 1,), dtype=np.int32)
    out[..., :1] = first
    np.cumsum(step, axis=-1, out=out[..., 1:])
    out[..., 1:] += first
    return out


def smoothed_pair_sequence(pop: SequencePopulation, i: int, j: int, w: int) -> np.ndarray:
    """Smoothed Hamming sequence of sequences ``i`` and ``j`` (0-based)."""
    check_window(pop.length, w)
    if i == j:
        raise ContractError("smoothed_pair_sequence needs two distinct sequences")
    codes = pop.codes
    return _sliding_counts(codes[i] != codes[j], w)


def pair_indices(n: int) -> np.ndarray:
    """(P, 2) array of 0-based pairs ``(i, j)``, ``i < j``, lexicographic."""
    i, j = np.triu_indices(n, k=1)
    return np.stack([i, j], axis=1)


@dataclass(frozen=True)
class SmoothedDistanceMatrix:
    values: np.ndarray
    window: int
    pair_index: np.ndarray
    length: int
    labels: tuple[str, ...] = ()

    @property
    def n_pairs(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    @property
    def column_offset(self) -> int:
        """Genomic position of 1-based column ``c`` is ``c + column_offset``."""
        return self.window

    @property
    def positions(self) -> np.ndarray:
        """1-based genomic position of every column."""
        return np.arange(self.n_columns) + self.window + 1

    def row(self, i: int, j: int) -> np.ndarray:
        if i > j:
            i, j = j, i
        n = len(self.labels) if self.labels else _n_from_pairs(self.n_pairs)
        r = i * n - i * (i + 1) // 2 + (j - i - 1)
        return self.values[r]

    def write_tsv(self, fh: IO[str]) -> None:
        """Header of genomic positions, then one ``label_i|label_j`` row per pair."""
        fh.write("pair\t" + "\t".join(str(p) for p in self.positions) + "\n")
        labels = self.labels or tuple(str(k + 1) for k in range(_n_from_pairs(self.n_pairs)))
        for (i, j), row in zip(self.pair_index, self.values):
            fh.write(f"{labels[i]}|{labels[j]}\t" + "\t".join(map(str, row.tolist())) + "\n")


def _n_from_pairs(p: int) -> int:
    return int(round((1 + np.sqrt(1 + 8 * p)) / 2))


def _mismatch_block(codes: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return codes[pairs[:, 0]] != codes[pairs[:, 1]]


def build_matrix(pop: SequencePopulation, w: int) -> SmoothedDistanceMatrix:
    check_window(pop.length, w)
    pairs = pair_indices(pop.n)
    codes = pop.codes
    values = np.empty((len(pairs), pop.length - 2 * w), dtype=np.int32)
    for start in range(0, len(pairs), _BLOCK_ROWS):
        block = pairs[start : start + _BLOCK_ROWS]
        values[start : start + len(block)] = _sliding_counts(_mismatch_block(codes, block), w)
    values.flags.writeable = False
    return SmoothedDistanceMatrix(values, w, pairs, pop.length, pop.labels)


def mismatch_gram(pop: SequencePopulation) -> np.ndarray:
    """``M^T M`` for the (P, L) pair-by-position mismatch indicator matrix ``M``.

    Entry ``(a, b)`` counts the pairs that differ at both positions ``a``
    and ``b``. Applying one position permutation ``p`` to every sequence
    turns this into ``G[p][:, p]``, which is what makes permutation
    replicates cheap.
    """
    pairs = pair_indices(pop.n)
    codes = pop.codes
    gram = np.zeros((pop.length, pop.length), dtype=np.float64)
    for start in range(0, len(pairs), _BLOCK_ROWS):
        m = _mismatch_block(codes, pairs[start : start + _BLOCK_ROWS]).astype(np.float64)
        gram += m.T @ m
    return gram


def window_gram(gram: np.ndarray, w: int) -> np.ndarray:
    """``X^T X`` of the smoothed matrix ``X = M C`` given ``G = M^T M``.

    ``C`` sums each window of ``2w + 1`` positions, so every entry of the
    result is a box sum of ``G``; both sides use prefix sums. Exact for
    integer counts below 2**53.
    """
    length = gram.shape[0]
    check_window(length, w)
    span = 2 * w + 1
    rows = np.zeros((length + 1, length))
    np.cumsum(gram, axis=0, out=rows[1:])
    banded = rows[span:] - rows[:-span]
    cols = np.zeros((banded.shape[0], length + 1))
    np.cumsum(banded, axis=1, out=cols[:, 1:])
    return cols[:, span:] - cols[:, :-span]
