"""Truncated SVD with fixed ordering and sign conventions.

Singular values come back non-increasing. Each pair ``(u_i, v_i)`` is
oriented so that the entry of ``v_i`` with the largest magnitude is
positive (the first such entry on ties); ``u_i`` flips with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, svds

from .errors import ConvergenceError, RankError

ORTHONORMALITY_TOL = 1e-8
RESIDUAL_TOL = 1e-6

# Below this smaller dimension a dense LAPACK decomposition is cheaper
# than ARPACK and always converges.
_DENSE_LIMIT = 200


@dataclass(frozen=True)
class SvdFactors:
    """Top-``k`` singular triplets stored column-wise."""

    singular_values: np.ndarray  # (k,)
    left_vectors: np.ndarray | None  # (P, k); None when computed from X^T X
    right_vectors: np.ndarray  # (C, k)
    column_offset: int = 0

    @property
    def k(self) -> int:
        return len(self.singular_values)

    def v(self, i: int) -> np.ndarray:
        """The ``i``-th right singular vector, 1-based."""
        return self.right_vectors[:, i - 1]

    def u(self, i: int) -> np.ndarray:
        if self.left_vectors is None:
            raise ValueError("left singular vectors were not computed")
        return self.left_vectors[:, i - 1]

    def positions(self) -> np.ndarray:
        return np.arange(self.right_vectors.shape[0]) + self.column_offset + 1

    def write_csv(self, fh: IO[str]) -> None:
        """Genomic position followed by ``v_1 .. v_k``."""
        fh.write("position," + ",".join(f"v{i + 1}" for i in range(self.k)) + "\n")
        for pos, row in zip(self.positions(), self.right_vectors):
            fh.write(f"{pos}," + ",".join(repr(float(x)) for x in row) + "\n")


def orient(u: np.ndarray | None, v: np.ndarray) -> tuple[np.ndarray | None, np.ndarray]:
    """Flip columns so the largest-magnitude entry of each ``v`` column is positive."""
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    v = v * signs
    if u is not None:
        u = u * signs
    return u, v


def _sort_desc(s, u, vt):
    order = np.argsort(-s, kind="stable")
    return s[order], (u[:, order] if u is not None else None), vt[order]


def _start_vector(size: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(size)


def truncated_svd(
    X,
    k: int,
    *,
    seed: int = 0,
    solver: str = "auto",
    maxiter: int | None = None,
    column_offset: int | None = None,
) -> SvdFactors:
    """Top ``k`` singular triplets of ``X``.

    ``X`` is an array or a :class:`~recombsvd.distmat.SmoothedDistanceMatrix`.
    ``solver`` is ``"dense"`` (LAPACK), ``"arpack"`` (implicitly restarted
    Lanczos from a seeded start vector) or ``"auto"``. The result is checked
    against the residual and orthonormality tolerances before returning.
    """
    if hasattr(X, "values") and hasattr(X, "column_offset"):
        if column_offset is None:
            column_offset = X.column_offset
        X = X.values
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("truncated_svd needs a 2-D matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    rank_cap = min(A.shape)
    if k < 1 or k > rank_cap:
        raise RankError(f"cannot take {k} singular triplets of a {A.shape[0]}x{A.shape[1]} matrix")

    if solver == "auto":
        solver = "dense" if rank_cap <= _DENSE_LIMIT or k >= rank_cap - 1 else "arpack"
    if solver == "dense":
        u, s, vt = np.linalg.svd(A, full_matrices=False)
        u, s, vt = u[:, :k], s[:k], vt[:k]
    elif solver == "arpack":
        if k >= rank_cap:
            raise RankError(f"arpack needs k < {rank_cap}, got {k}")
        try:
            u, s, vt = svds(
                A, k=k, v0=_start_vector(rank_cap, seed), maxiter=maxiter, solver="arpack"
            )
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"ARPACK did not converge: {exc}") from exc
        s, u, vt = _sort_desc(s, u, vt)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    u, v = orient(u, vt.T)
    _check(A, s, u, v)
    return SvdFactors(s, u, v, column_offset or 0)


def _check(A, s, u, v):
    scale = max(1.0, float(s[0]))
    residual = float(np.max(np.linalg.norm(A @ v - u * s, axis=0)))
    if residual > RESIDUAL_TOL * scale:
        raise ConvergenceError(
            f"singular triplet residual {residual:.3g} exceeds {RESIDUAL_TOL:g} * {scale:.3g}",
            residual=residual,
        )
    k = len(s)
    for name, q in (("right", v), ("left", u)):
        err = float(np.max(np.abs(q.T @ q - np.eye(k))))
        if err > ORTHONORMALITY_TOL:
            raise ConvergenceError(
                f"{name} singular vectors deviate from orthonormality by {err:.3g}",
                residual=residual,
            )


def right_vectors_from_gram(gram: np.ndarray, k: int, *, seed: int = 0) -> SvdFactors:
    """Top ``k`` right singular triplets of ``X`` given only ``X^T X``.

    Eigenvectors of the Gram matrix are the right singular vectors and the
    square roots of its eigenvalues are the singular values. Left vectors
    are not formed.
    """
    size = gram.shape[0]
    if k < 1 or k > size:
        raise RankError(f"cannot take {k} eigenpairs of a {size}x{size} matrix")
    if size <= _DENSE_LIMIT or k >= size - 1:
        evals, evecs = scipy.linalg.eigh(gram, subset_by_index=[size - k, size - 1])
    else:
        try:
            evals, evecs = eigsh(gram, k=k, which="LA", v0=_start_vector(size, seed))
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"ARPACK did not converge: {exc}") from exc
    order = np.argsort(-evals, kind="stable")
    s = np.sqrt(np.clip(evals[order], 0.0, None))
    _, v = orient(None, evecs[:, order])
    return SvdFactors(s, None, v)
