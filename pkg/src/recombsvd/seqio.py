"""Aligned sequence populations and FASTA input/output.

Positions are 1-based in every public function that takes a genomic
coordinate. Characters are kept verbatim (apart from optional upper-case
folding); two positions match iff their bytes are identical.
"""

from __future__ import annotations

import io
import sys
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import AlignmentError, BoundsError, EmptyInputError, MalformedRecordError

NUCLEOTIDES = "ACGT"

# Sequences are stored as text but compared as bytes; latin-1 maps every
# byte to exactly one character and back.
_ENCODING = "latin-1"


@dataclass(frozen=True)
class SequencePopulation:
    """``n >= 2`` aligned sequences of a common length.

    Immutable; the numeric encoding returned by :attr:`codes` is computed
    once and shared between readers.
    """

    labels: tuple[str, ...]
    sequences: tuple[str, ...]
    alphabet: str = NUCLEOTIDES
    case_folded: bool = True

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "sequences", tuple(self.sequences))
        if len(self.labels) != len(self.sequences):
            raise ValueError("labels and sequences differ in count")
        if len(self.sequences) < 2:
            raise EmptyInputError(
                f"a population needs at least 2 sequences, got {len(self.sequences)}"
            )
        length = len(self.sequences[0])
        for label, seq in zip(self.labels, self.sequences):
            if len(seq) != length:
                raise AlignmentError(
                    f"sequence {label!r} has length {len(seq)}, expected {length}",
                    label=label,
                )
        if length == 0:
            raise MalformedRecordError("sequences are empty")

    @property
    def n(self) -> int:
        return len(self.sequences)

    @property
    def length(self) -> int:
        return len(self.sequences[0])

    def __len__(self):
        return self.n

    @cached_property
    def codes(self) -> np.ndarray:
        """(n, L) uint8 array of character bytes, read-only."""
        buf = "".join(self.sequences).encode(_ENCODING)
        arr = np.frombuffer(buf, dtype=np.uint8).reshape(self.n, self.length)
        arr.flags.writeable = False
        return arr

    def subsequence(self, j: int, y: int, z: int) -> str:
        return subsequence(self, j, y, z)

    def with_sequences(self, sequences: Iterable[str]) -> "SequencePopulation":
        """Same labels and metadata, new (equal-length) sequences."""
        return SequencePopulation(
            self.labels, tuple(sequences), alphabet=self.alphabet, case_folded=self.case_folded
        )

    @classmethod
    def from_codes(cls, codes: np.ndarray, labels: Sequence[str] | None = None, **kwargs):
        codes = np.ascontiguousarray(codes, dtype=np.uint8)
        if labels is None:
            labels = [f"seq{i + 1}" for i in range(codes.shape[0])]
        seqs = [row.tobytes().decode(_ENCODING) for row in codes]
        return cls(tuple(labels), tuple(seqs), **kwargs)


def subsequence(pop: SequencePopulation, j: int, y: int, z: int) -> str:
    """Entries ``y`` through ``z`` (inclusive, 1-based) of sequence ``j`` (1-based)."""
    if not 1 <= j <= pop.n:
        raise BoundsError(f"sequence index {j} outside 1..{pop.n}")
    if not 1 <= y <= z <= pop.length:
        raise BoundsError(f"positions {y}..{z} invalid for length {pop.length}")
    return pop.sequences[j - 1][y - 1 : z]


def _iter_records(lines: Iterable[str]) -> Iterator[tuple[str, list[str], int]]:
    label = None
    body: list[str] = []
    lineno = 0
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if line.startswith(">"):
            if label is not None:
                yield label, body, lineno
            label, body = line[1:].strip(), []
        elif label is None:
            if line.strip():
                raise MalformedRecordError(f"line {lineno}: sequence data before first header")
        else:
            body.append(line)
    if label is not None:
        yield label, body, lineno


def parse_fasta(
    data: bytes | str | IO, *, fold_case: bool = True, alphabet: str = NUCLEOTIDES
) -> SequencePopulation:
    """Parse FASTA text into a population.

    ``data`` may be bytes, a string, or a text/binary stream. Whitespace
    inside sequence lines is removed and, unless ``fold_case`` is false,
    characters are upper-cased.
    """
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, (bytes, bytearray)):
        data = bytes(data).decode(_ENCODING)

    labels, seqs = [], []
    for label, body, _ in _iter_records(io.StringIO(data)):
        seq = "".join("".join(line.split()) for line in body)
        if not seq:
            raise MalformedRecordError(f"record {label!r} has an empty sequence")
        labels.append(label)
        seqs.append(seq.upper() if fold_case else seq)

    if not seqs:
        raise EmptyInputError("no FASTA records found")
    length = len(seqs[0])
    for label, seq in zip(labels, seqs):
        if len(seq) != length:
            raise AlignmentError(
                f"record {label!r} has length {len(seq)}, expected {length} "
                f"(from record {labels[0]!r})",
                label=label,
            )
    return SequencePopulation(tuple(labels), tuple(seqs), alphabet=alphabet, case_folded=fold_case)


def read_fasta(path: str | Path | None, **kwargs) -> SequencePopulation:
    """Read a FASTA file; ``None`` or ``"-"`` reads standard input."""
    if path is None or str(path) == "-":
        return parse_fasta(sys.stdin.buffer.read(), **kwargs)
    with open(path, "rb") as fh:
        return parse_fasta(fh.read(), **kwargs)


def format_fasta(pop: SequencePopulation) -> str:
    return "".join(f">{label}\n{seq}\n" for label, seq in zip(pop.labels, pop.sequences))


def write_fasta(pop: SequencePopulation, path: str | Path | IO) -> None:
    text = format_fasta(pop)
    if hasattr(path, "write"):
        path.write(text)
        return
    with open(path, "w", encoding=_ENCODING, newline="\n") as fh:
        fh.write(text)
