"""Multipartite Hermitian linear algebra: tensor products, partial transposes,
bipartition bookkeeping, negativities and validated density matrices.

Parties are indexed 0-based throughout. A bipartition of N parties is stored
as the subset that does not contain party 0, so S and its complement collapse
to a single canonical representative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_RTOL = 1e-12
TRACE_ATOL = 1e-10
PSD_EIG_TOL = 1e-9

JZ_QUBIT = np.diag([0.5, -0.5])


class DimensionError(ValueError):
    """Dimension structure inconsistent with an operator or subset."""


@dataclass(frozen=True)
class DimensionSpec:
    """Local Hilbert-space dimensions, one entry per party."""

    local_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if not dims or any(d < 2 for d in dims):
            raise DimensionError(f"local dimensions must all be >= 2, got {dims}")
        object.__setattr__(self, "local_dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.local_dims))

    @property
    def n_parties(self) -> int:
        return len(self.local_dims)

    def check_subset(self, subset: Iterable[int]) -> frozenset[int]:
        s = frozenset(int(p) for p in subset)
        if not all(0 <= p < self.n_parties for p in s):
            raise DimensionError(f"subset {sorted(s)} invalid for {self.n_parties} parties")
        return s

    def __iter__(self):
        return iter(self.local_dims)

    def __len__(self):
        return len(self.local_dims)


def as_dimension_spec(dims) -> DimensionSpec:
    if isinstance(dims, DimensionSpec):
        return dims
    return DimensionSpec(tuple(dims))


def is_hermitian(mat: np.ndarray, rtol: float = HERMITICITY_RTOL) -> bool:
    """Frobenius-relative Hermiticity test."""
    mat = np.asarray(mat)
    scale = max(np.linalg.norm(mat), 1.0)
    return np.linalg.norm(mat - mat.conj().T) <= rtol * scale


def require_hermitian(mat: np.ndarray, what: str = "operator") -> np.ndarray:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {mat.shape}")
    if not is_hermitian(mat):
        raise ValueError(f"{what} is not Hermitian")
    return mat


def hermitize(mat: np.ndarray) -> np.ndarray:
    """(X + X†)/2; applied after every solver round-trip to kill drift."""
    return (mat + np.asarray(mat).conj().T) / 2


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of the factors in party order."""
    if not ops:
        raise ValueError("tensor() needs at least one factor")
    for op in ops:
        op = np.asarray(op)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise DimensionError(f"tensor factors must be square, got {op.shape}")
    return reduce(np.kron, ops)


def embed_local(op: np.ndarray, party: int, dims) -> np.ndarray:
    """I ⊗ ... ⊗ op ⊗ ... ⊗ I with op acting on the given party."""
    dims = as_dimension_spec(dims)
    op = np.asarray(op)
    if op.shape != (dims.local_dims[party],) * 2:
        raise DimensionError(
            f"operator shape {op.shape} does not match party {party} of {dims.local_dims}")
    factors = [np.eye(d) for d in dims.local_dims]
    factors[party] = op
    return tensor(*factors)


def collective_from_locals(local_ops: Sequence[np.ndarray]) -> np.ndarray:
    """Sum of single-party operators, Σ_n I⊗...⊗a^(n)⊗...⊗I."""
    dims = DimensionSpec(tuple(np.asarray(op).shape[0] for op in local_ops))
    return sum(embed_local(op, n, dims) for n, op in enumerate(local_ops))


def collective_jz(n_parties: int) -> np.ndarray:
    """Collective angular momentum Σ_n j_z^(n) for qubits; spectrum -N/2..N/2."""
    if n_parties < 1:
        raise ValueError("need at least one party")
    return collective_from_locals([JZ_QUBIT] * n_parties)


def split_diag(d: int) -> np.ndarray:
    """diag(1,..,1,-1,..,-1) with ceil(d/2) entries +1 and floor(d/2) entries -1."""
    n_plus = (d + 1) // 2
    return np.diag(np.array([1.0] * n_plus + [-1.0] * (d - n_plus)))


def collective_split_diag(d: int) -> np.ndarray:
    """Two-qudit generator D⊗1 + 1⊗D built from split_diag(d)."""
    D = split_diag(d)
    return np.kron(D, np.eye(d)) + np.kron(np.eye(d), D)


def partial_transpose(mat: np.ndarray, subset: Iterable[int], dims) -> np.ndarray:
    """Transpose the tensor factors in `subset` (0-based parties).

    Involutive, trace-preserving and Hermiticity-preserving. Works on any
    square matrix with the given dimension structure, not only states.
    """
    dims = as_dimension_spec(dims)
    subset = dims.check_subset(subset)
    mat = np.asarray(mat)
    total = dims.total
    if mat.shape != (total, total):
        raise DimensionError(f"matrix shape {mat.shape} does not match dims {dims.local_dims}")
    n = dims.n_parties
    tens = mat.reshape(*dims.local_dims, *dims.local_dims)
    perm = list(range(2 * n))
    for p in subset:
        perm[p], perm[n + p] = perm[n + p], perm[p]
    return tens.transpose(perm).reshape(total, total)


@dataclass(frozen=True)
class PartitionMask:
    """Set of bipartitions on which a PPT constraint is enforced.

    Each bipartition is canonicalised to the subset not containing party 0,
    which identifies S with its complement (their partial transposes are
    mutual transposes, so one PSD constraint per pair suffices).
    """

    n_parties: int
    subsets: frozenset[frozenset[int]]

    @staticmethod
    def canonical(subset: Iterable[int], n_parties: int) -> frozenset[int]:
        s = frozenset(int(p) for p in subset)
        if not s or len(s) >= n_parties:
            raise ValueError(f"bipartition subset must be proper and non-empty, got {sorted(s)}")
        if not all(0 <= p < n_parties for p in s):
            raise ValueError(f"subset {sorted(s)} out of range for {n_parties} parties")
        if 0 in s:
            s = frozenset(range(n_parties)) - s
        return s

    @classmethod
    def from_subsets(cls, subsets: Iterable[Iterable[int]], n_parties: int) -> "PartitionMask":
        canon = frozenset(cls.canonical(s, n_parties) for s in subsets)
        return cls(n_parties, canon)

    @classmethod
    def all_bipartitions(cls, n_parties: int) -> "PartitionMask":
        if n_parties < 2:
            raise ValueError("bipartitions need at least two parties")
        subs = []
        for r in range(1, n_parties):
            subs.extend(itertools.combinations(range(1, n_parties), r))
        return cls.from_subsets(subs, n_parties)

    @classmethod
    def single(cls, subset: Iterable[int], n_parties: int) -> "PartitionMask":
        return cls.from_subsets([subset], n_parties)

    @classmethod
    def none(cls, n_parties: int) -> "PartitionMask":
        return cls(n_parties, frozenset())

    def __iter__(self):
        return iter(sorted(self.subsets, key=lambda s: (len(s), sorted(s))))

    def __len__(self):
        return len(self.subsets)

    def __bool__(self):
        return bool(self.subsets)

    def label(self, subset: frozenset[int]) -> str:
        rest = sorted(set(range(self.n_parties)) - subset)
        return "{}:{}".format("".join(str(p + 1) for p in rest),
                              "".join(str(p + 1) for p in sorted(subset)))


def negativity(mat: np.ndarray, subset: Iterable[int], dims) -> float:
    """Sum of |negative eigenvalues| of the partial transpose on `subset`."""
    pt = partial_transpose(mat, subset, dims)
    eig = np.linalg.eigvalsh(hermitize(pt))
    return float(-eig[eig < 0].sum())


def min_bipartite_negativity(mat: np.ndarray, dims) -> float:
    """Minimum of the bipartite negativities over all bipartitions; 0 iff PPT."""
    dims = as_dimension_spec(dims)
    mask = PartitionMask.all_bipartitions(dims.n_parties)
    return min(negativity(mat, s, dims) for s in mask)


class DensityMatrix:
    """Unit-trace PSD Hermitian matrix with a cached eigendecomposition.

    Eigenvalues in [-psd_tol, 0) are clipped to zero before use (solvers
    return boundary points with small infeasibility); anything more negative
    raises. Immutable after construction.
    """

    def __init__(self, mat: np.ndarray, dims, *,
                 trace_tol: float = TRACE_ATOL, psd_tol: float = PSD_EIG_TOL):
        dims = as_dimension_spec(dims)
        mat = np.array(mat, dtype=complex)
        require_hermitian(mat, "density matrix")
        if mat.shape[0] != dims.total:
            raise DimensionError(f"matrix size {mat.shape[0]} != product of dims {dims.local_dims}")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr} deviates from 1 by more than {trace_tol}")
        lam, vec = np.linalg.eigh(mat)
        if lam.min() < -psd_tol:
            raise ValueError(f"matrix not PSD: min eigenvalue {lam.min():.3e} < -{psd_tol:.0e}")
        mat.setflags(write=False)
        self._mat = mat
        self._dims = dims
        self._eigvals = np.clip(lam, 0.0, None)
        self._eigvecs = vec

    @classmethod
    def from_solver(cls, mat: np.ndarray, dims, psd_tol: float = 1e-7,
                    eig_floor: float = 1e-8) -> "DensityMatrix":
        """Symmetrize, renormalize and wrap a solver round-trip matrix.

        Eigenvalues below `eig_floor` are zeroed (and the rest renormalized):
        interior-point dust at the cone boundary otherwise pollutes the
        eigen-sums of downstream functionals with spurious kernel couplings.
        """
        mat = hermitize(np.asarray(mat, dtype=complex))
        mat = mat / np.trace(mat).real
        lam, vec = np.linalg.eigh(mat)
        if lam.min() < -psd_tol:
            raise ValueError(f"matrix not PSD: min eigenvalue {lam.min():.3e}")
        lam = np.where(lam < eig_floor, 0.0, lam)
        lam = lam / lam.sum()
        clean = hermitize((vec * lam) @ vec.conj().T)
        obj = cls.__new__(cls)
        clean.setflags(write=False)
        obj._mat = clean
        obj._dims = as_dimension_spec(dims)
        if clean.shape[0] != obj._dims.total:
            raise DimensionError(
                f"matrix size {clean.shape[0]} != product of dims {obj._dims.local_dims}")
        obj._eigvals = lam
        obj._eigvecs = vec
        return obj

    @classmethod
    def from_vector(cls, psi: np.ndarray, dims) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims)

    @property
    def mat(self) -> np.ndarray:
        return self._mat

    @property
    def dims(self) -> DimensionSpec:
        return self._dims

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigvals

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eigvecs

    def expectation(self, op: np.ndarray) -> float:
        return float(np.trace(op @ self._mat).real)

    def variance(self, op: np.ndarray) -> float:
        m = self.expectation(op)
        return self.expectation(np.asarray(op) @ np.asarray(op)) - m * m

    def partial_transpose(self, subset: Iterable[int]) -> np.ndarray:
        return partial_transpose(self._mat, subset, self._dims)

    def min_pt_eigenvalue(self, mask: PartitionMask) -> float:
        """Smallest eigenvalue over all masked partial transposes."""
        if not mask:
            return float(self._eigvals.min())
        return min(float(np.linalg.eigvalsh(hermitize(self.partial_transpose(s))).min())
                   for s in mask)

    def is_ppt(self, mask: PartitionMask, tol: float = 1e-8) -> bool:
        return self.min_pt_eigenvalue(mask) >= -tol

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, dims={self._dims.local_dims})"
