"""Metrological functionals: quantum Fisher information, the optimal
measurement operator (symmetric logarithmic derivative), error-propagation
precision, the separable precision bound and skew information.

Conventions: the phase is imprinted by exp(-iAθ); the commutator observable
giving the signal slope is i[A,M], and for the optimal M its expectation
equals the quantum Fisher information.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DensityMatrix, hermitize, require_hermitian

# Pairs with λ_k+λ_l below this fraction of max(λ) are dropped in the
# eigen-sums; the standard support convention on rank-deficient states.
EIG_SUM_CUTOFF = 1e-10


def _eig(rho) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(rho, DensityMatrix):
        return rho.eigenvalues, rho.eigenvectors
    rho = np.asarray(rho, dtype=complex)
    lam, vec = np.linalg.eigh(rho)
    return np.clip(lam, 0.0, None), vec


def _as_matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def commutator_obs(a: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Hermitian observable i[A,M]; its expectation is the signal slope."""
    a = np.asarray(a, dtype=complex)
    m = np.asarray(m, dtype=complex)
    return hermitize(1j * (a @ m - m @ a))


def _pair_weights(lam: np.ndarray, cutoff_ratio: float):
    s = lam[:, None] + lam[None, :]
    d = lam[:, None] - lam[None, :]
    keep = s > cutoff_ratio * max(lam.max(), np.finfo(float).tiny)
    return s, d, keep


def qfi(rho, a: np.ndarray, cutoff_ratio: float = EIG_SUM_CUTOFF) -> float:
    """Quantum Fisher information 2 Σ_{kl} (λk-λl)²/(λk+λl) |⟨k|A|l⟩|².

    Equals 4·Var(A) on pure states. `rho` may be a DensityMatrix or a
    plain PSD matrix.
    """
    a = require_hermitian(a, "generator A")
    lam, vec = _eig(rho)
    ae = vec.conj().T @ a @ vec
    s, d, keep = _pair_weights(lam, cutoff_ratio)
    return float(2.0 * np.sum((d[keep] ** 2 / s[keep]) * np.abs(ae[keep]) ** 2))


def sld(rho, a: np.ndarray, cutoff_ratio: float = EIG_SUM_CUTOFF) -> np.ndarray:
    """Optimal measurement M = 2i Σ (λk-λl)/(λk+λl) |k⟩⟨l| ⟨k|A|l⟩.

    Satisfies Tr(Mρ)=0 and Tr(M²ρ)=qfi(ρ,A); saturates the error-propagation
    bound.
    """
    a = require_hermitian(a, "generator A")
    lam, vec = _eig(rho)
    ae = vec.conj().T @ a @ vec
    s, d, keep = _pair_weights(lam, cutoff_ratio)
    coef = np.zeros_like(s)
    coef[keep] = d[keep] / s[keep]
    m = vec @ (2j * coef * ae) @ vec.conj().T
    return hermitize(m)


def precision_inverse(rho, m: np.ndarray, a: np.ndarray) -> float:
    """Inverse error-propagation variance ⟨i[M,A]⟩² / Var(M).

    Always bounded by qfi(ρ,A); returns 0 when the measurement carries no
    signal (Var(M)=0 forces ⟨i[M,A]⟩=0).
    """
    rho_m = _as_matrix(rho)
    m = np.asarray(m, dtype=complex)
    k = commutator_obs(a, m)
    slope = float(np.trace(k @ rho_m).real)
    mean = float(np.trace(m @ rho_m).real)
    second = float(np.trace(m @ m @ rho_m).real)
    var = second - mean * mean
    if var <= 1e-14 * max(1.0, second):
        return 0.0
    return slope * slope / var


def separable_bound(local_ops: Sequence[np.ndarray]) -> float:
    """Σ_n (λmax - λmin)² of the local generators; max QFI over separable states."""
    total = 0.0
    for op in local_ops:
        eig = np.linalg.eigvalsh(require_hermitian(op, "local generator"))
        total += float(eig[-1] - eig[0]) ** 2
    return total


def skew_information(rho, a: np.ndarray) -> float:
    """Wigner-Yanase quantity Tr(A²ρ - A√ρA√ρ); between 0 and qfi/4."""
    a = require_hermitian(a, "generator A")
    lam, vec = _eig(rho)
    # kernel dust ~1e-17 would blow up to ~1e-8 under the square root
    lam = np.where(lam < 1e-14 * lam.max(), 0.0, lam)
    rho_m = vec @ np.diag(lam) @ vec.conj().T
    sqrt_rho = vec @ np.diag(np.sqrt(lam)) @ vec.conj().T
    val = np.trace(a @ a @ rho_m) - np.trace(a @ sqrt_rho @ a @ sqrt_rho)
    return float(val.real)


@dataclass
class MetrologyReport:
    """Bundle of the metrological figures of merit for one (state, generator)."""

    qfi: float
    separable_bound: float
    sld: np.ndarray = field(repr=False)
    skew_information: float | None = None

    @property
    def violation(self) -> float:
        return self.qfi - self.separable_bound

    def to_dict(self, include_sld: bool = False) -> dict:
        out = {
            "qfi": self.qfi,
            "separable_bound": self.separable_bound,
            "violation": self.violation,
            "skew_information": self.skew_information,
        }
        if include_sld:
            out["sld_real"] = self.sld.real.tolist()
            out["sld_imag"] = self.sld.imag.tolist()
        return out


def metrology_report(rho, local_ops: Sequence[np.ndarray],
                     with_skew: bool = True) -> MetrologyReport:
    """Evaluate QFI, bound and optimal measurement for A = Σ_n a^(n)."""
    from .core import collective_from_locals

    a = collective_from_locals(local_ops)
    return MetrologyReport(
        qfi=qfi(rho, a),
        separable_bound=separable_bound(local_ops),
        sld=sld(rho, a),
        skew_information=skew_information(rho, a) if with_skew else None,
    )
