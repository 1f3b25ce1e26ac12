"""Alternating optimization: SDP over the state at fixed measurement,
then the optimal-measurement update, iterated to convergence with seeded
restarts. Includes the white-noise robustness bisection and the relaxation
scan drivers (partial-transpose eigenvalue floor, negativity cap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .conic import SolverOptions
from .core import (DensityMatrix, DimensionSpec, PartitionMask, as_dimension_spec,
                   collective_from_locals)
from .metrology import commutator_obs, qfi, separable_bound, sld
from .programs import (FmQuery, InfeasibleError, LambdaMin, NegativityCap, Ppt,
                       Relaxation, SolverFailure, VerificationError, solve_fm)

MONOTONE_TOL = 1e-8


class SeesawError(RuntimeError):
    """Every restart failed."""


@dataclass(frozen=True)
class SeesawConfig:
    """Configuration of one search run.

    `local_ops` are the per-party generator terms a^(n); the collective
    generator and the separable bound derive from them. `measurement` picks
    the random-start ensemble: "complex" draws a GUE-style Hermitian matrix,
    "imag" draws i·(antisymmetric), which keeps every SDP real when the
    generator is real (exact by conjugation symmetry, and much faster).
    """

    dims: DimensionSpec
    local_ops: tuple[np.ndarray, ...]
    mask: PartitionMask
    restarts: int = 5
    max_iterations: int = 50
    convergence_tol: float = 1e-7
    rng_seed: int = 0
    relaxation: Relaxation = Ppt()
    measurement: str = "complex"
    solver: SolverOptions = field(default_factory=SolverOptions.from_env)
    # dust threshold for solver-returned states; a few optima need support
    # growth finer than the default (set lower at the cost of slower runs)
    eig_floor: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "dims", as_dimension_spec(self.dims))
        object.__setattr__(self, "local_ops", tuple(np.asarray(op) for op in self.local_ops))
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValueError("restarts and max_iterations must be positive")
        if self.convergence_tol <= 0:
            raise ValueError("convergence tolerance must be positive")
        if self.measurement not in ("complex", "imag"):
            raise ValueError("measurement must be 'complex' or 'imag'")
        if tuple(op.shape[0] for op in self.local_ops) != self.dims.local_dims:
            raise ValueError("local operator shapes do not match dims")
        if self.measurement == "imag" and np.abs(self.a.imag).max() > 1e-13:
            raise ValueError("'imag' measurement lane needs a real generator")

    @property
    def a(self) -> np.ndarray:
        return collective_from_locals(self.local_ops)

    @property
    def separable_bound(self) -> float:
        return separable_bound(self.local_ops)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims.local_dims),
            "mask": [sorted(s) for s in self.mask],
            "restarts": self.restarts,
            "max_iterations": self.max_iterations,
            "convergence_tol": self.convergence_tol,
            "rng_seed": self.rng_seed,
            "relaxation": _relaxation_dict(self.relaxation),
            "measurement": self.measurement,
            "separable_bound": self.separable_bound,
        }


def _relaxation_dict(r: Relaxation) -> dict:
    if isinstance(r, Ppt):
        return {"kind": "ppt"}
    if isinstance(r, LambdaMin):
        return {"kind": "lambda_min", "value": r.value}
    return {"kind": "negativity_cap", "value": r.value}


@dataclass
class IterationRecord:
    index: int
    qfi: float
    x: float
    precision_inverse: float
    solver_status: str

    def to_dict(self) -> dict:
        return {"j": self.index, "qfi": self.qfi, "x": self.x,
                "precision_inverse": self.precision_inverse,
                "solver_status": self.solver_status}


@dataclass
class RestartOutcome:
    index: int
    records: list[IterationRecord]
    final_state: DensityMatrix | None
    final_measurement: np.ndarray | None
    converged: bool
    error: str | None = None

    @property
    def final_qfi(self) -> float:
        return self.records[-1].qfi if self.records else -math.inf

    @property
    def failed(self) -> bool:
        return self.error is not None or self.final_state is None


@dataclass
class SeesawTrace:
    """Best restart of a run; the QFI sequence is non-decreasing by construction."""

    iterations: list[IterationRecord]
    final_state: DensityMatrix
    final_measurement: np.ndarray
    final_qfi: float
    separable_bound: float
    converged: bool
    restart_index: int
    config: SeesawConfig
    restart_summaries: list[dict] = field(default_factory=list)

    def __post_init__(self):
        values = [rec.qfi for rec in self.iterations]
        for prev, nxt in zip(values, values[1:]):
            if nxt < prev - MONOTONE_TOL:
                raise ValueError(f"non-monotone QFI sequence: {prev} -> {nxt}")
        if self.iterations and abs(self.final_qfi - self.iterations[-1].qfi) > 1e-12:
            raise ValueError("final_qfi does not match the last iteration record")

    @property
    def violation(self) -> float:
        return self.final_qfi - self.separable_bound

    def to_dict(self, state_file: str | None = None) -> dict:
        return {
            "config": self.config.to_dict(),
            "iterations": [rec.to_dict() for rec in self.iterations],
            "final_qfi": self.final_qfi,
            "separable_bound": self.separable_bound,
            "violation": self.violation,
            "converged": self.converged,
            "restart_index": self.restart_index,
            "restarts": self.restart_summaries,
            "state_file": state_file,
        }


def random_measurement(dims, rng: np.random.Generator, kind: str = "complex") -> np.ndarray:
    """Random start: Hermitian, traceless, unit Frobenius norm, seed-deterministic.

    kind="complex" symmetrizes a matrix of i.i.d. standard complex Gaussian
    entries; kind="imag" returns i·(antisymmetric real Gaussian), the ensemble
    whose see-saw stays real for real generators.
    """
    d = as_dimension_spec(dims).total
    if kind == "complex":
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        m = (g + g.conj().T) / 2
        m -= (np.trace(m).real / d) * np.eye(d)
    elif kind == "imag":
        g = rng.standard_normal((d, d))
        m = 1j * (g - g.T) / 2  # zero diagonal, hence traceless
    else:
        raise ValueError(f"unknown measurement kind {kind!r}")
    norm = np.linalg.norm(m)
    return m / norm


def initial_x(m: np.ndarray, a: np.ndarray) -> float:
    """Midpoint of the spectrum of the commutator observable i[A,M]."""
    eig = np.linalg.eigvalsh(commutator_obs(a, m))
    return float(eig[0] + eig[-1]) / 2


def _run_restart(config: SeesawConfig, index: int, rng: np.random.Generator,
                 initial_measurement: np.ndarray | None) -> RestartOutcome:
    a = config.a
    if initial_measurement is not None:
        m = np.asarray(initial_measurement, dtype=complex)
    else:
        m = random_measurement(config.dims, rng, config.measurement)
    x = initial_x(m, a)

    records: list[IterationRecord] = []
    state = None
    prev_qfi = None
    converged = False

    for j in range(config.max_iterations):
        query = FmQuery(m, a, x, 0.0, config.dims, config.mask, config.relaxation)
        result = None
        error = None
        for opts in (config.solver, config.solver.loosen(10.0)):
            try:
                result = solve_fm(query, opts, eig_floor=config.eig_floor)
                break
            except InfeasibleError as exc:
                error = f"iteration {j}: {exc}"
                break  # infeasible slope will not improve with looser tolerance
            except (SolverFailure, VerificationError) as exc:
                error = f"iteration {j}: {exc}"
        if result is None:
            return RestartOutcome(index, records, state,
                                  m if state is not None else None,
                                  False, error)

        rho = result.rho
        m_next = sld(rho, a)
        fq = float(np.trace(m_next @ m_next @ rho.mat).real)
        if prev_qfi is not None and fq < prev_qfi - MONOTONE_TOL:
            # solver noise now exceeds the per-step gain; keep the previous point
            converged = True
            break
        records.append(IterationRecord(
            j, fq, x, result.precision_inverse(x, 0.0),
            result.solve_result.solver_diagnostics))
        state, m = rho, m_next
        x = float(np.trace(commutator_obs(a, m_next) @ rho.mat).real)
        if prev_qfi is not None and abs(fq - prev_qfi) <= config.convergence_tol * max(1.0, abs(fq)):
            converged = True
            prev_qfi = fq
            break
        prev_qfi = fq

    if state is None:
        return RestartOutcome(index, records, None, None, False, "no iteration completed")
    return RestartOutcome(index, records, state, m, converged)


def run(config: SeesawConfig,
        initial_measurement: np.ndarray | None = None) -> SeesawTrace:
    """Full search: seeded restarts, best final QFI wins (ties: lowest index).

    `initial_measurement` warm-starts restart 0; the remaining restarts use
    the configured random ensemble.
    """
    seeds = np.random.SeedSequence(config.rng_seed).spawn(config.restarts)
    outcomes: list[RestartOutcome] = []
    for i in range(config.restarts):
        rng = np.random.default_rng(seeds[i])
        warm = initial_measurement if i == 0 else None
        outcomes.append(_run_restart(config, i, rng, warm))

    usable = [o for o in outcomes if not o.failed]
    if not usable:
        details = "; ".join(o.error or "?" for o in outcomes)
        raise SeesawError(f"all {config.restarts} restarts failed: {details}")
    best = max(usable, key=lambda o: (o.final_qfi, -o.index))

    summaries = [{"restart": o.index, "final_qfi": None if o.failed else o.final_qfi,
                  "iterations": len(o.records), "converged": o.converged,
                  "error": o.error} for o in outcomes]
    return SeesawTrace(
        iterations=best.records,
        final_state=best.final_state,
        final_measurement=best.final_measurement,
        final_qfi=best.final_qfi,
        separable_bound=config.separable_bound,
        converged=best.converged,
        restart_index=best.index,
        config=config,
        restart_summaries=summaries,
    )


def white_noise_robustness(rho: DensityMatrix, a: np.ndarray, f_sep: float,
                           tol: float = 1e-6) -> float:
    """Largest admixture p of the maximally mixed state keeping QFI ≥ f_sep.

    Bisection on the exact QFI of (1-p)ρ + p·I/D; returns 0 when the state
    does not beat the bound to begin with.
    """
    from .states import mix_white_noise

    if qfi(rho, a) <= f_sep:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if qfi(mix_white_noise(rho, mid), a) >= f_sep:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class ScanPoint:
    constraint_value: float
    qfi: float
    converged: bool
    error: str | None = None

    def to_dict(self) -> dict:
        return {"constraint_value": self.constraint_value,
                "qfi": None if math.isnan(self.qfi) else self.qfi,
                "converged": self.converged, "error": self.error}


def _scan(config: SeesawConfig, grid: Sequence[float], make_relax,
          loose_first: bool,
          initial_measurement: np.ndarray | None = None) -> list[ScanPoint]:
    """Run the see-saw per grid value, walking from the loosest constraint and
    warm-starting each point with the previous optimal measurement."""
    order = sorted(range(len(grid)), key=lambda i: grid[i], reverse=loose_first)
    results: dict[int, ScanPoint] = {}
    warm = initial_measurement
    for i in order:
        value = float(grid[i])
        cfg = replace(config, relaxation=make_relax(value))
        try:
            trace = run(cfg, initial_measurement=warm)
            results[i] = ScanPoint(value, trace.final_qfi, trace.converged)
            warm = trace.final_measurement
        except SeesawError as exc:
            results[i] = ScanPoint(value, math.nan, False, str(exc))
    return [results[i] for i in range(len(grid))]


def scan_lambda_min(config: SeesawConfig, grid: Sequence[float],
                    initial_measurement: np.ndarray | None = None) -> list[ScanPoint]:
    """Best QFI as a function of the partial-transpose eigenvalue floor."""
    return _scan(config, grid, LambdaMin, loose_first=False,
                 initial_measurement=initial_measurement)


def scan_negativity(config: SeesawConfig, grid: Sequence[float],
                    initial_measurement: np.ndarray | None = None) -> list[ScanPoint]:
    """Best QFI as a function of the bipartite negativity cap."""
    def make(value: float) -> Relaxation:
        return Ppt() if value == 0.0 else NegativityCap(value)
    return _scan(config, grid, make, loose_first=True,
                 initial_measurement=initial_measurement)
