"""Modeling layer for semidefinite programs over Hermitian matrix variables,
lowered through the real symmetric embedding to an external conic solver.

A complex Hermitian H maps to the real symmetric block form
[[Re H, -Im H], [Im H, Re H]], which is PSD iff H is and doubles traces;
all factor-2 bookkeeping lives here. Variables flagged `real` skip the
embedding and are lowered as plain symmetric matrices (valid when every
coefficient acting on them is real, which the program builders guarantee).

The adapter boundary is `solve`: cvxpy translates the lowered program to any
installed conic solver (CVXOPT and CLARABEL are used here). Every returned
point is re-verified against the program before being reported optimal.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
import cvxpy as cp
import numpy as np

from .core import DimensionSpec, as_dimension_spec, hermitize, partial_transpose

DEFAULT_FEAS_TOL = 1e-8
DEFAULT_GAP_TOL = 1e-8
PSD_CHECK_TOL = 1e-8
RESIDUAL_CHECK_TOL = 1e-7


class ProgramError(ValueError):
    """Ill-formed conic program."""


class SolverUnavailableError(RuntimeError):
    """None of the configured conic solvers is importable."""


def embed_complex(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of Hermitian H.

    PSD iff H is PSD, with each eigenvalue doubled in multiplicity, and
    Tr(embedded) = 2 Tr(H).
    """
    h = np.asarray(h, dtype=complex)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def unembed_complex(e: np.ndarray) -> np.ndarray:
    """Inverse of embed_complex; averages the redundant blocks and halves traces."""
    e = np.asarray(e, dtype=float)
    n = e.shape[0] // 2
    re = (e[:n, :n] + e[n:, n:]) / 2
    im = (e[n:, :n] - e[:n, n:]) / 2
    return hermitize(re + 1j * im)


@dataclass(frozen=True)
class VariableSpec:
    name: str
    dims: DimensionSpec
    psd: bool = True
    real: bool = False

    @property
    def dim(self) -> int:
        return self.dims.total


@dataclass(frozen=True)
class ScalarTerm:
    """weight * Tr(coeff @ variable)."""

    var: str
    coeff: np.ndarray
    weight: float = 1.0


@dataclass(frozen=True)
class ScalarAffine:
    terms: tuple[ScalarTerm, ...]
    constant: float = 0.0

    def evaluate(self, values: dict[str, np.ndarray]) -> float:
        total = self.constant
        for t in self.terms:
            total += t.weight * float(np.trace(t.coeff @ values[t.var]).real)
        return total


@dataclass(frozen=True)
class MatrixTerm:
    """weight * PT_subset(variable); pt_subset=None means the identity map."""

    var: str
    weight: float = 1.0
    pt_subset: frozenset[int] | None = None


@dataclass(frozen=True)
class MatrixAffine:
    terms: tuple[MatrixTerm, ...]
    offset: np.ndarray | None = None

    def evaluate(self, values: dict[str, np.ndarray],
                 var_dims: dict[str, DimensionSpec]) -> np.ndarray:
        total = None
        for t in self.terms:
            v = values[t.var]
            if t.pt_subset is not None:
                v = partial_transpose(v, t.pt_subset, var_dims[t.var])
            v = t.weight * v
            total = v if total is None else total + v
        if self.offset is not None:
            total = total + self.offset
        return total


def _as_terms(terms) -> tuple[ScalarTerm, ...]:
    out = []
    for t in terms:
        if isinstance(t, ScalarTerm):
            out.append(t)
        else:
            var, coeff, *w = t
            out.append(ScalarTerm(var, np.asarray(coeff), float(w[0]) if w else 1.0))
    return tuple(out)


class ConicProgram:
    """SDP instance: Hermitian matrix variables, affine trace constraints,
    PSD constraints on partial-transpose affine expressions, linear objective.
    """

    def __init__(self):
        self.variables: dict[str, VariableSpec] = {}
        self.equalities: list[tuple[ScalarAffine, float]] = []
        self.inequalities: list[tuple[ScalarAffine, str, float]] = []
        self.psd_constraints: list[MatrixAffine] = []
        self.objective: tuple[ScalarAffine, str] | None = None

    def add_variable(self, name: str, dims, *, psd: bool = True, real: bool = False):
        if name in self.variables:
            raise ProgramError(f"duplicate variable {name!r}")
        self.variables[name] = VariableSpec(name, as_dimension_spec(dims), psd, real)

    def add_equality(self, terms, rhs: float, constant: float = 0.0):
        self.equalities.append((ScalarAffine(_as_terms(terms), constant), float(rhs)))

    def add_inequality(self, terms, sense: str, rhs: float, constant: float = 0.0):
        if sense not in (">=", "<="):
            raise ProgramError(f"sense must be '>=' or '<=', got {sense!r}")
        self.inequalities.append((ScalarAffine(_as_terms(terms), constant), sense, float(rhs)))

    def add_psd(self, terms, offset: np.ndarray | None = None):
        """Require Σ weight·PT(variable) + offset to be PSD."""
        mts = []
        for t in terms:
            if isinstance(t, MatrixTerm):
                mts.append(t)
            else:
                var, weight, subset = t
                mts.append(MatrixTerm(var, float(weight),
                                      None if subset is None else frozenset(subset)))
        self.psd_constraints.append(MatrixAffine(tuple(mts),
                                                 None if offset is None else np.asarray(offset)))

    def set_objective(self, terms, sense: str, constant: float = 0.0):
        if sense not in ("min", "max"):
            raise ProgramError(f"objective sense must be 'min' or 'max', got {sense!r}")
        self.objective = (ScalarAffine(_as_terms(terms), constant), sense)

    def validate(self):
        if not self.variables:
            raise ProgramError("program has no variables")
        if self.objective is None:
            raise ProgramError("program has no objective")
        for aff, _ in self.equalities:
            self._check_affine(aff)
        for aff, _, _ in self.inequalities:
            self._check_affine(aff)
        self._check_affine(self.objective[0])
        for ma in self.psd_constraints:
            dim = None
            for t in ma.terms:
                spec = self._spec(t.var)
                if t.pt_subset is not None:
                    spec.dims.check_subset(t.pt_subset)
                dim = spec.dim if dim is None else dim
                if spec.dim != dim:
                    raise ProgramError("PSD expression mixes variable dimensions")
            if ma.offset is not None and ma.offset.shape != (dim, dim):
                raise ProgramError("PSD offset shape mismatch")

    def _spec(self, name: str) -> VariableSpec:
        try:
            return self.variables[name]
        except KeyError:
            raise ProgramError(f"unknown variable {name!r}") from None

    def _check_affine(self, aff: ScalarAffine):
        for t in aff.terms:
            spec = self._spec(t.var)
            if t.coeff.shape != (spec.dim, spec.dim):
                raise ProgramError(
                    f"coefficient shape {t.coeff.shape} does not match variable "
                    f"{t.var!r} of dimension {spec.dim}")
            scale = max(np.linalg.norm(t.coeff), 1.0)
            if np.linalg.norm(t.coeff - t.coeff.conj().T) > 1e-10 * scale:
                raise ProgramError(f"coefficient for {t.var!r} is not Hermitian")

    def describe(self) -> str:
        """Human-readable listing for debugging."""
        lines = ["variables:"]
        for spec in self.variables.values():
            cone = "PSD" if spec.psd else "free"
            kind = "real symmetric" if spec.real else "Hermitian"
            lines.append(f"  {spec.name}: {kind} {spec.dim}x{spec.dim} "
                         f"[{cone}], dims={spec.dims.local_dims}")

        def fmt_aff(aff: ScalarAffine) -> str:
            parts = [f"{t.weight:+g}*Tr(C{i}@{t.var})" for i, t in enumerate(aff.terms)]
            if aff.constant:
                parts.append(f"{aff.constant:+g}")
            return " ".join(parts) if parts else "0"

        lines.append("equalities:")
        for aff, rhs in self.equalities:
            lines.append(f"  {fmt_aff(aff)} == {rhs:g}")
        if self.inequalities:
            lines.append("inequalities:")
            for aff, sense, rhs in self.inequalities:
                lines.append(f"  {fmt_aff(aff)} {sense} {rhs:g}")
        lines.append("psd constraints:")
        for ma in self.psd_constraints:
            parts = []
            for t in ma.terms:
                pt = "" if t.pt_subset is None else f"^T{sorted(t.pt_subset)}"
                parts.append(f"{t.weight:+g}*{t.var}{pt}")
            if ma.offset is not None:
                parts.append("+ offset")
            lines.append("  " + " ".join(parts) + " >> 0")
        if self.objective is not None:
            aff, sense = self.objective
            lines.append(f"objective: {sense} {fmt_aff(aff)}")
        return "\n".join(lines)


@dataclass(frozen=True)
class SolverOptions:
    """Backend choice and tolerances. solver="auto" picks per program shape:
    interior-point cost profiles differ, CVXOPT wins on one big embedded
    variable, CLARABEL on many coupled variables (measured on this workload).
    """

    solver: str = "auto"
    feas_tol: float = DEFAULT_FEAS_TOL
    gap_tol: float = DEFAULT_GAP_TOL
    max_iters: int | None = None
    verbose: bool = False
    fallbacks: tuple[str, ...] = ()

    def loosen(self, factor: float) -> "SolverOptions":
        return replace(self, feas_tol=self.feas_tol * factor, gap_tol=self.gap_tol * factor)

    def solver_order(self, program: "ConicProgram") -> tuple[str, ...]:
        if self.solver != "auto":
            order = (self.solver, *self.fallbacks)
        elif len(program.variables) > 1:
            order = ("clarabel", "cvxopt", *self.fallbacks)
        else:
            order = ("cvxopt", "clarabel", *self.fallbacks)
        seen = []
        for name in order:
            if name not in seen:
                seen.append(name)
        return tuple(seen)

    @classmethod
    def from_env(cls, **kwargs) -> "SolverOptions":
        """Honours the SOLVER_TOL environment variable when set."""
        tol = os.environ.get("SOLVER_TOL")
        if tol:
            kwargs.setdefault("feas_tol", float(tol))
            kwargs.setdefault("gap_tol", float(tol))
        return cls(**kwargs)


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | numerical-failure
    objective_value: float | None
    variable_values: dict[str, np.ndarray]
    solver_diagnostics: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


_SOLVER_MAP = {"cvxopt": "CVXOPT", "clarabel": "CLARABEL", "scs": "SCS"}


def _solver_kwargs(name: str, opts: SolverOptions) -> dict:
    if name == "cvxopt":
        kw = {"feastol": opts.feas_tol, "abstol": opts.gap_tol, "reltol": opts.gap_tol}
        if opts.max_iters:
            kw["max_iters"] = opts.max_iters
        return kw
    if name == "clarabel":
        kw = {"tol_feas": opts.feas_tol, "tol_gap_abs": opts.gap_tol,
              "tol_gap_rel": opts.gap_tol}
        if opts.max_iters:
            kw["max_iter"] = opts.max_iters
        return kw
    if name == "scs":
        kw = {"eps": max(opts.feas_tol, opts.gap_tol)}
        if opts.max_iters:
            kw["max_iters"] = opts.max_iters
        return kw
    raise SolverUnavailableError(f"unknown solver {name!r}")


def _lower(program: ConicProgram):
    """Translate to cvxpy over real variables (embedding complex ones)."""
    cvars: dict[str, cp.Variable] = {}
    for spec in program.variables.values():
        n = spec.dim if spec.real else 2 * spec.dim
        cvars[spec.name] = cp.Variable((n, n), PSD=True) if spec.psd \
            else cp.Variable((n, n), symmetric=True)

    def scalar(aff: ScalarAffine):
        expr = aff.constant
        for t in aff.terms:
            spec = program.variables[t.var]
            if spec.real:
                coeff = np.ascontiguousarray(np.asarray(t.coeff).real)
                expr = expr + t.weight * cp.trace(coeff @ cvars[t.var])
            else:
                expr = expr + t.weight * 0.5 * cp.trace(embed_complex(t.coeff) @ cvars[t.var])
        return expr

    def pt_expr(var: str, subset):
        spec = program.variables[var]
        expr = cvars[var]
        if subset is None:
            return expr
        if spec.real:
            edims, shift = list(spec.dims.local_dims), 0
        else:
            edims, shift = [2] + list(spec.dims.local_dims), 1
        for p in sorted(subset):
            expr = cp.partial_transpose(expr, dims=edims, axis=p + shift)
        return expr

    constraints = []
    for aff, rhs in program.equalities:
        constraints.append(scalar(aff) == rhs)
    for aff, sense, rhs in program.inequalities:
        expr = scalar(aff)
        constraints.append(expr >= rhs if sense == ">=" else expr <= rhs)
    for ma in program.psd_constraints:
        expr = None
        all_real = all(program.variables[t.var].real for t in ma.terms)
        for t in ma.terms:
            term = t.weight * pt_expr(t.var, t.pt_subset)
            expr = term if expr is None else expr + term
        if ma.offset is not None:
            off = np.asarray(ma.offset)
            if all_real:
                if np.iscomplexobj(off) and np.abs(off.imag).max() > 1e-12:
                    raise ProgramError("real PSD expression with complex offset")
                expr = expr + np.ascontiguousarray(off.real if np.iscomplexobj(off) else off)
            else:
                expr = expr + embed_complex(off)
        constraints.append(expr >> 0)

    aff, sense = program.objective
    obj = cp.Minimize(scalar(aff)) if sense == "min" else cp.Maximize(scalar(aff))
    return cp.Problem(obj, constraints), cvars


def _extract(program: ConicProgram, cvars) -> dict[str, np.ndarray]:
    values = {}
    for spec in program.variables.values():
        raw = cvars[spec.name].value
        if raw is None:
            raise RuntimeError("solver returned no value")
        if spec.real:
            values[spec.name] = hermitize(raw.astype(complex))
        else:
            values[spec.name] = unembed_complex(raw)
    return values


def verify_solution(program: ConicProgram, values: dict[str, np.ndarray],
                    objective_value: float,
                    psd_tol: float = PSD_CHECK_TOL,
                    residual_tol: float = RESIDUAL_CHECK_TOL) -> list[str]:
    """Certify a candidate point against the program; returns found defects."""
    problems = []
    var_dims = {name: spec.dims for name, spec in program.variables.items()}
    for name, spec in program.variables.items():
        if spec.psd:
            mineig = float(np.linalg.eigvalsh(values[name]).min())
            if mineig < -psd_tol:
                problems.append(f"variable {name}: min eigenvalue {mineig:.2e}")
    for i, (aff, rhs) in enumerate(program.equalities):
        res = abs(aff.evaluate(values) - rhs)
        if res > residual_tol:
            problems.append(f"equality {i}: residual {res:.2e}")
    for i, (aff, sense, rhs) in enumerate(program.inequalities):
        val = aff.evaluate(values)
        viol = rhs - val if sense == ">=" else val - rhs
        if viol > residual_tol:
            problems.append(f"inequality {i}: violation {viol:.2e}")
    for i, ma in enumerate(program.psd_constraints):
        mineig = float(np.linalg.eigvalsh(hermitize(ma.evaluate(values, var_dims))).min())
        if mineig < -psd_tol:
            problems.append(f"psd constraint {i}: min eigenvalue {mineig:.2e}")
    obj = program.objective[0].evaluate(values)
    if abs(obj - objective_value) > residual_tol * max(1.0, abs(obj)):
        problems.append(f"objective mismatch: re-evaluated {obj:.9g} "
                        f"vs reported {objective_value:.9g}")
    return problems


def solve(program: ConicProgram, options: SolverOptions | None = None) -> SolveResult:
    """Solve via the first configured solver that yields a certified answer."""
    options = options or SolverOptions()
    program.validate()
    problem, cvars = _lower(program)

    attempts = []
    notes = []
    for name in options.solver_order(program):
        if name in attempts:
            continue
        attempts.append(name)
        cp_name = _SOLVER_MAP.get(name)
        if cp_name is None or cp_name not in cp.installed_solvers():
            notes.append(f"{name}: not installed")
            continue
        try:
            problem.solve(solver=cp_name, verbose=options.verbose,
                          **_solver_kwargs(name, options))
        except Exception as exc:  # solver-side blowups stay contained
            notes.append(f"{name}: {type(exc).__name__}: {exc}")
            continue
        status = problem.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return SolveResult("infeasible", None, {}, f"{name}: {status}")
        if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            notes.append(f"{name}: {status}")
            continue
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            notes.append(f"{name}: {status}")
            continue
        try:
            values = _extract(program, cvars)
        except RuntimeError as exc:
            notes.append(f"{name}: {exc}")
            continue
        defects = verify_solution(
            program, values, float(problem.value),
            psd_tol=max(PSD_CHECK_TOL, 2 * options.feas_tol),
            residual_tol=max(RESIDUAL_CHECK_TOL, 10 * options.feas_tol))
        if defects:
            notes.append(f"{name}: {status}; " + "; ".join(defects))
            continue
        diag = f"{name}: {status}"
        if notes:
            diag += " (after: " + " | ".join(notes) + ")"
        return SolveResult("optimal", float(problem.value), values, diag)
    return SolveResult("numerical-failure", None, {}, " | ".join(notes) or "no solver attempted")
