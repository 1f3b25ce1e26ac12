"""Analytic reference states: the partial-transpose-invariant two-ququart
bound entangled state, Werner states, GHZ states, white-noise mixing and
tensor copies. Used by tests and by the certification commands.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, DimensionSpec, as_dimension_spec, tensor
from .metrology import qfi
from .stateio import load_state


@dataclass(frozen=True)
class NamedState:
    name: str
    rho: DensityMatrix
    dims: DimensionSpec
    provenance: str


def _ket(dims: DimensionSpec, *levels: int) -> np.ndarray:
    index = 0
    for d, l in zip(dims.local_dims, levels):
        index = index * d + l
    v = np.zeros(dims.total)
    v[index] = 1.0
    return v


def bound_entangled_4x4() -> NamedState:
    """Rank-6 two-ququart mixture invariant under partial transposition.

    Built from four maximally entangled pair vectors with weight p and two
    asymmetric vectors with weight q = (√2-1)/2, p = (1-2q)/4; the mixture is
    PPT yet gives quantum Fisher information 32-16√2 ≈ 9.3726 for the
    split-diagonal collective generator, against a separable bound of 8.
    """
    dims = DimensionSpec((4, 4))
    s2 = math.sqrt(2.0)
    vecs = [
        (_ket(dims, 0, 1) + _ket(dims, 2, 3)) / s2,
        (_ket(dims, 1, 0) + _ket(dims, 3, 2)) / s2,
        (_ket(dims, 1, 1) + _ket(dims, 2, 2)) / s2,
        (_ket(dims, 0, 0) - _ket(dims, 3, 3)) / s2,
        (_ket(dims, 0, 3) + _ket(dims, 1, 2)) / 2 + _ket(dims, 2, 1) / s2,
        (-_ket(dims, 0, 3) + _ket(dims, 1, 2)) / 2 + _ket(dims, 3, 0) / s2,
    ]
    q = (s2 - 1) / 2
    p = (1 - 2 * q) / 4
    mat = sum(w * np.outer(v, v) for w, v in zip([p] * 4 + [q] * 2, vecs))
    return NamedState("bound_entangled_4x4", DensityMatrix(mat, dims), dims,
                      "analytic PT-invariant two-ququart mixture, rank 6")


def singlet() -> NamedState:
    dims = DimensionSpec((2, 2))
    v = (_ket(dims, 0, 1) - _ket(dims, 1, 0)) / math.sqrt(2.0)
    return NamedState("singlet", DensityMatrix.from_vector(v, dims), dims,
                      "two-qubit singlet")


def werner(p: float) -> NamedState:
    """p·|Ψ-⟩⟨Ψ-| + (1-p)·I/4; positive exactly for p ∈ [-1/3, 1]."""
    if not -1.0 / 3.0 <= p <= 1.0:
        raise ValueError(f"werner parameter {p} outside [-1/3, 1]")
    dims = DimensionSpec((2, 2))
    mat = p * singlet().rho.mat + (1 - p) * np.eye(4) / 4
    return NamedState(f"werner({p})", DensityMatrix(mat, dims), dims,
                      "noisy two-qubit singlet family")


def werner_usefulness_threshold() -> dict:
    """Crossing of the Werner-family QFI with the two-qubit separable bound.

    With generator j_z⊗1 - 1⊗j_z the QFI of werner(p) is 8p²/(1+p), which
    crosses 2 at p = (1+√17)/8 ≈ 0.6404. Reading p as the noise weight
    instead (state (1-p)|Ψ-⟩⟨Ψ-| + p·1/4) puts the crossing at
    (7-√17)/8 ≈ 0.3596; both conventions are reported.
    """
    return {
        "threshold": (1 + math.sqrt(17)) / 8,
        "noise_weight_threshold": (7 - math.sqrt(17)) / 8,
        "note": "threshold applies to the singlet weight p; the second number "
                "is the same crossing with p read as the noise weight",
    }


def ghz(n_parties: int) -> NamedState:
    """(|0...0⟩ + |1...1⟩)/√2 on n qubits."""
    if n_parties < 2:
        raise ValueError("GHZ needs at least two qubits")
    dims = DimensionSpec((2,) * n_parties)
    v = np.zeros(dims.total)
    v[0] = v[-1] = 1 / math.sqrt(2.0)
    return NamedState(f"ghz({n_parties})", DensityMatrix.from_vector(v, dims), dims,
                      "maximally coherent qubit superposition")


def mix_white_noise(rho: DensityMatrix, p: float) -> DensityMatrix:
    """(1-p)ρ + p·I/D."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise weight {p} outside [0, 1]")
    d = rho.dim
    return DensityMatrix((1 - p) * rho.mat + p * np.eye(d) / d, rho.dims)


def tensor_copies(rho: DensityMatrix, a: np.ndarray, n_copies: int,
                  max_total_dim: int = 4096) -> tuple[DensityMatrix, np.ndarray, float]:
    """ρ^⊗M with the generator summed over copies; QFI adds per copy.

    Returns (state, collective generator, reported QFI = M·qfi(ρ,A)).
    """
    if n_copies < 1:
        raise ValueError("need at least one copy")
    d = rho.dim
    if d ** n_copies > max_total_dim:
        raise ValueError(f"total dimension {d**n_copies} exceeds {max_total_dim}")
    dims = DimensionSpec(rho.dims.local_dims * n_copies)
    mat = rho.mat
    for _ in range(n_copies - 1):
        mat = np.kron(mat, rho.mat)
    a_total = np.zeros((d ** n_copies,) * 2, dtype=complex)
    for m in range(n_copies):
        factors = [np.eye(d)] * n_copies
        factors[m] = np.asarray(a)
        a_total += tensor(*factors)
    return DensityMatrix(mat, dims), a_total, n_copies * qfi(rho, a)


def load_reference_state(path: str, dims) -> NamedState:
    """Wrap a text-format state file as a named reference state."""
    dims = as_dimension_spec(dims)
    mat = load_state(path)
    rho = DensityMatrix.from_solver(mat, dims)
    return NamedState(os.path.basename(path), rho, dims, f"loaded from {path}")
