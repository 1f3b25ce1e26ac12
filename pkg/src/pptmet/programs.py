"""Builders and drivers for the PPT-constrained precision programs.

Four programs are covered: the minimum of Tr(M²ρ) over PPT states at fixed
signal slope and measurement mean; the same with the partial-transpose
spectrum relaxed to λ ≥ λ_min; the same with a cap on every bipartite
negativity; and the noise-robustness lower bound. A 1-D grid/golden-section
driver handles the outer optimization over the slope X.

When the generator is real and the measurement is purely imaginary
(M = iW, W antisymmetric), all program data becomes real and the state
variable is restricted to real symmetric matrices; this is exact by
conjugation symmetry and roughly halves the PSD cone sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .conic import ConicProgram, SolveResult, SolverOptions, solve
from .core import (DensityMatrix, DimensionSpec, PartitionMask, as_dimension_spec,
                   hermitize, partial_transpose, require_hermitian)
from .metrology import commutator_obs

PPT_VERIFY_TOL = 1e-8
EXPECT_VERIFY_TOL = 1e-7
GRID_POINTS = 33
GOLDEN_REL_TOL = 1e-6


class InfeasibleError(RuntimeError):
    """The target slope/mean is not attainable on the constrained set."""


class SolverFailure(RuntimeError):
    """Conic solver did not return a certified answer."""

    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message + (f" [{diagnostics}]" if diagnostics else ""))
        self.diagnostics = diagnostics


class VerificationError(RuntimeError):
    """A returned state failed independent re-verification."""


@dataclass(frozen=True)
class Ppt:
    """Plain constraint: every masked partial transpose is PSD."""


@dataclass(frozen=True)
class LambdaMin:
    """Relaxed constraint: every masked partial transpose is ⪰ value·I."""

    value: float


@dataclass(frozen=True)
class NegativityCap:
    """Every masked bipartite negativity is bounded by value."""

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("negativity cap must be non-negative")


Relaxation = Ppt | LambdaMin | NegativityCap


@dataclass(frozen=True)
class FmQuery:
    """One instance of the constrained-precision minimization."""

    m: np.ndarray
    a: np.ndarray
    x: float
    y: float
    dims: DimensionSpec
    mask: PartitionMask
    relaxation: Relaxation = Ppt()

    def __post_init__(self):
        object.__setattr__(self, "dims", as_dimension_spec(self.dims))
        require_hermitian(self.m, "measurement M")
        require_hermitian(self.a, "generator A")
        d = self.dims.total
        if self.m.shape != (d, d) or self.a.shape != (d, d):
            raise ValueError("M, A and dims are inconsistent")


@dataclass(frozen=True)
class RobustnessQuery:
    """Minimal PPT-noise admixture driving the precision to the separable bound."""

    rho: DensityMatrix
    m: np.ndarray
    a: np.ndarray
    f_sep: float
    x: float
    mask: PartitionMask | None = None

    def __post_init__(self):
        if self.f_sep <= 0:
            raise ValueError("separable bound must be positive")


@dataclass
class FmResult:
    value: float
    rho: DensityMatrix
    solve_result: SolveResult = field(repr=False)

    def precision_inverse(self, x: float, y: float) -> float:
        var = self.value - y * y
        if var <= 0:
            return math.inf if x != 0 else 0.0
        return x * x / var


def _real_lane(q: FmQuery) -> bool:
    """True when conjugation symmetry lets the state stay real symmetric."""
    if q.y != 0.0:
        return False
    a_real = np.abs(np.asarray(q.a, dtype=complex).imag).max() < 1e-13
    m_imag = np.abs(np.asarray(q.m, dtype=complex).real).max() < 1e-13
    return a_real and m_imag


def build_fm_program(q: FmQuery) -> ConicProgram:
    """Assemble the SDP min Tr(M²ρ) at slope X and mean Y over the masked set."""
    d = q.dims.total
    k = commutator_obs(q.a, q.m)
    m2 = hermitize(np.asarray(q.m, dtype=complex) @ np.asarray(q.m, dtype=complex))
    eye = np.eye(d)
    real = _real_lane(q)

    prog = ConicProgram()
    prog.add_variable("rho", q.dims, psd=True, real=real)
    prog.add_equality([("rho", eye)], rhs=1.0)
    prog.add_equality([("rho", k)], rhs=q.x)
    if not (real and q.y == 0.0):
        # in the real lane Tr(Mρ)=0 holds identically for M = iW
        prog.add_equality([("rho", q.m)], rhs=q.y)

    if isinstance(q.relaxation, NegativityCap):
        cap = q.relaxation.value
        for i, subset in enumerate(q.mask):
            name = f"neg_{i}"
            # variable is the partial transpose of the subtracted part, so it
            # and rho^Tk + it are the PSD pair of the decomposition on k
            prog.add_variable(name, q.dims, psd=True, real=real)
            prog.add_equality([(name, eye)], rhs=cap)
            prog.add_psd([("rho", 1.0, subset), (name, 1.0, None)])
    else:
        lam = q.relaxation.value if isinstance(q.relaxation, LambdaMin) else 0.0
        offset = None if lam == 0.0 else -lam * eye
        for subset in q.mask:
            prog.add_psd([("rho", 1.0, subset)], offset=offset)

    prog.set_objective([("rho", m2)], sense="min")
    return prog


def verify_fm_state(q: FmQuery, rho_mat: np.ndarray,
                    ppt_tol: float = PPT_VERIFY_TOL,
                    expect_tol: float = EXPECT_VERIFY_TOL) -> list[str]:
    """Independent re-check of a candidate optimum (no solver trust)."""
    problems = []
    tr = float(np.trace(rho_mat).real)
    if abs(tr - 1.0) > 1e-8:
        problems.append(f"trace deviates: {tr}")
    mineig = float(np.linalg.eigvalsh(hermitize(rho_mat)).min())
    if mineig < -ppt_tol:
        problems.append(f"not PSD: min eig {mineig:.2e}")
    k = commutator_obs(q.a, q.m)
    slope = float(np.trace(k @ rho_mat).real)
    if abs(slope - q.x) > expect_tol:
        problems.append(f"slope constraint off by {abs(slope - q.x):.2e}")
    mean = float(np.trace(q.m @ rho_mat).real)
    if abs(mean - q.y) > expect_tol:
        problems.append(f"mean constraint off by {abs(mean - q.y):.2e}")
    if isinstance(q.relaxation, Ppt):
        floor = 0.0
    elif isinstance(q.relaxation, LambdaMin):
        floor = q.relaxation.value
    else:
        floor = None
    for subset in q.mask:
        pt = hermitize(partial_transpose(rho_mat, subset, q.dims))
        if floor is not None:
            mineig = float(np.linalg.eigvalsh(pt).min())
            if mineig < floor - ppt_tol:
                problems.append(
                    f"partial transpose {sorted(subset)}: min eig {mineig:.3e} < {floor:.3e}")
        else:
            eig = np.linalg.eigvalsh(pt)
            neg = float(-eig[eig < 0].sum())
            if neg > q.relaxation.value + 10 * ppt_tol:
                problems.append(
                    f"negativity on {sorted(subset)}: {neg:.3e} > cap {q.relaxation.value:.3e}")
    return problems


def solve_fm(q: FmQuery, options: SolverOptions | None = None,
             eig_floor: float = 1e-8) -> FmResult:
    """Solve the constrained-precision program and re-verify the optimizer.

    `eig_floor` is the dust threshold applied to the returned state's
    eigenvalues; see DensityMatrix.from_solver. Verification thresholds track
    the configured solver tolerance (the spec defaults are the floor).
    """
    opts = options or SolverOptions()
    res = solve(build_fm_program(q), opts)
    if res.status == "infeasible":
        raise InfeasibleError(f"slope X={q.x} (Y={q.y}) infeasible on the constrained set")
    if res.status != "optimal":
        raise SolverFailure("constrained-precision solve failed", res.solver_diagnostics)
    rho_raw = res.variable_values["rho"]
    problems = verify_fm_state(
        q, rho_raw,
        ppt_tol=max(PPT_VERIFY_TOL, 10 * opts.feas_tol),
        expect_tol=max(EXPECT_VERIFY_TOL, 10 * opts.feas_tol))
    if problems:
        raise VerificationError("; ".join(problems))
    rho = DensityMatrix.from_solver(rho_raw, q.dims,
                                    psd_tol=max(1e-7, 10 * opts.feas_tol),
                                    eig_floor=eig_floor)
    return FmResult(float(res.objective_value), rho, res)


def build_robustness_program(q: RobustnessQuery) -> ConicProgram:
    """Assemble min Tr(σ) s.t. the mixed state's precision is separably bounded.

    The mixed state is (1-p)ρ + σ with p = Tr(σ); σ must be PPT on the mask.
    The precision condition is linearized as Tr[M²ρ(p)] ≥ X²/F_sep.
    """
    rho = q.rho
    dims = rho.dims
    d = dims.total
    mask = q.mask if q.mask is not None else PartitionMask.all_bipartitions(dims.n_parties)
    k = commutator_obs(q.a, q.m)
    m2 = hermitize(np.asarray(q.m, dtype=complex) @ np.asarray(q.m, dtype=complex))
    eye = np.eye(d)

    k_rho = float(np.trace(k @ rho.mat).real)
    m2_rho = float(np.trace(m2 @ rho.mat).real)

    rho_real = np.abs(rho.mat.imag).max() < 1e-13
    a_real = np.abs(np.asarray(q.a, dtype=complex).imag).max() < 1e-13
    m_imag = np.abs(np.asarray(q.m, dtype=complex).real).max() < 1e-13
    real = rho_real and a_real and m_imag

    prog = ConicProgram()
    prog.add_variable("sigma", dims, psd=True, real=real)
    # Tr(ρ(p) K) = X  with ρ(p) = (1 - Trσ)ρ + σ
    prog.add_equality([("sigma", hermitize(k - k_rho * eye))], rhs=q.x, constant=k_rho)
    # Tr(M²ρ(p)) ≥ X²/F_sep
    prog.add_inequality([("sigma", hermitize(m2 - m2_rho * eye))], ">=",
                        rhs=q.x * q.x / q.f_sep, constant=m2_rho)
    prog.add_inequality([("sigma", eye)], "<=", rhs=1.0)
    for subset in mask:
        prog.add_psd([("sigma", 1.0, subset)])
    prog.set_objective([("sigma", eye)], sense="min")
    return prog


def solve_robustness(q: RobustnessQuery, options: SolverOptions | None = None) -> float:
    """Minimal noise weight p at the given slope X; may be infeasible."""
    res = solve(build_robustness_program(q), options)
    if res.status == "infeasible":
        raise InfeasibleError(f"robustness program infeasible at X={q.x}")
    if res.status != "optimal":
        raise SolverFailure("robustness solve failed", res.solver_diagnostics)
    return float(res.objective_value)


def minimize_over_x(fn: Callable[[float], float], x_range: tuple[float, float],
                    mode: str = "min", grid_points: int = GRID_POINTS,
                    rel_tol: float = GOLDEN_REL_TOL) -> tuple[float, float]:
    """Scalar outer optimization: coarse grid, then golden-section refinement.

    `fn` may raise InfeasibleError at individual points; those are skipped.
    Returns (best_x, best_value). Ties prefer x ≥ 0. Raises InfeasibleError
    when every grid point is infeasible.
    """
    lo, hi = x_range
    if not hi > lo:
        raise ValueError("x range is degenerate")
    if mode not in ("min", "max"):
        raise ValueError("mode must be 'min' or 'max'")
    sign = 1.0 if mode == "min" else -1.0

    cache: dict[float, float] = {}

    def ev(x: float) -> float:
        if x not in cache:
            try:
                cache[x] = sign * fn(x)
            except InfeasibleError:
                cache[x] = math.inf
        return cache[x]

    xs = [float(x) for x in np.linspace(lo, hi, grid_points)]
    vals = [ev(x) for x in xs]
    finite = [(v, i) for i, v in enumerate(vals) if math.isfinite(v)]
    if not finite:
        raise InfeasibleError("every grid point infeasible in the X scan")
    best_v = min(v for v, _ in finite)
    candidates = [i for v, i in finite if v <= best_v + 1e-12 * max(1.0, abs(best_v))]
    # symmetric objectives make ±X* tie; settle on the non-negative branch
    best_i = min(candidates, key=lambda i: (xs[i] < 0, abs(xs[i]))) \
        if len(candidates) > 1 else candidates[0]

    a = xs[max(best_i - 1, 0)]
    b = xs[min(best_i + 1, len(xs) - 1)]
    invphi = (math.sqrt(5.0) - 1) / 2
    c = b - invphi * (b - a)
    dpt = a + invphi * (b - a)
    fc, fd = ev(c), ev(dpt)
    span = hi - lo
    while (b - a) > rel_tol * span:
        if fc <= fd:
            b, dpt, fd = dpt, c, fc
            c = b - invphi * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, dpt, fd
            dpt = a + invphi * (b - a)
            fd = ev(dpt)
    pool = [(v, x) for x, v in cache.items() if math.isfinite(v)]
    best_v, best_x = min(pool, key=lambda t: (t[0], t[1] < 0, abs(t[1])))
    return best_x, sign * best_v


def robustness_lower_bound(rho: DensityMatrix, a: np.ndarray, m: np.ndarray,
                           f_sep: float, mask: PartitionMask | None = None,
                           options: SolverOptions | None = None,
                           grid_points: int = GRID_POINTS) -> tuple[float, float]:
    """Outer-minimized noise bound min_X p_M(X) over the slope spectrum.

    Returns (p, best_x). A state already at or below the separable bound
    reports p = 0.
    """
    k = commutator_obs(a, m)
    eig = np.linalg.eigvalsh(k)
    x0 = float(np.trace(k @ rho.mat).real)
    if x0 * x0 / max(f_sep, 1e-300) <= float(np.trace(
            hermitize(np.asarray(m) @ np.asarray(m)) @ rho.mat).real) + 1e-12:
        # σ = 0 is already feasible at the state's own slope
        return 0.0, x0

    def fn(x: float) -> float:
        return solve_robustness(
            RobustnessQuery(rho, m, a, f_sep, x, mask), options)

    best_x, p = minimize_over_x(fn, (float(eig[0]), float(eig[-1])), mode="min",
                                grid_points=grid_points)
    return p, best_x


def best_precision_for_measurement(m: np.ndarray, a: np.ndarray, dims,
                                   mask: PartitionMask,
                                   relaxation: Relaxation = Ppt(),
                                   options: SolverOptions | None = None,
                                   grid_points: int = GRID_POINTS,
                                   optimize_y: bool = False,
                                   y_grid_points: int = 9) -> tuple[float, float, float]:
    """Diagnostic 2-parameter scan: max over X (and optionally Y) of X²/(f - Y²).

    Returns (best_inverse_variance, best_x, best_y).
    """
    dims = as_dimension_spec(dims)
    k = commutator_obs(a, m)
    keig = np.linalg.eigvalsh(k)

    def inv_prec_at(x: float, y: float) -> float:
        q = FmQuery(m, a, x, y, dims, mask, relaxation)
        res = solve_fm(q, options)
        return res.precision_inverse(x, y)

    best = (0.0, 0.0, 0.0)
    if optimize_y:
        meig = np.linalg.eigvalsh(np.asarray(m, dtype=complex))
        ys = np.linspace(float(meig[0]), float(meig[-1]), y_grid_points)
    else:
        ys = [0.0]
    for y in ys:
        try:
            x, val = minimize_over_x(lambda x: inv_prec_at(x, y),
                                     (float(keig[0]), float(keig[-1])),
                                     mode="max", grid_points=grid_points)
        except InfeasibleError:
            continue
        if val > best[0]:
            best = (val, x, y)
    return best
