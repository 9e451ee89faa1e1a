"""Perturbed resolvent R_V(lam^2 +- i0) via the Lippmann-Schwinger identity.

The second-kind equation (I + R V) R_V = R is discretized on the Nystrom
grid with V acting as the diagonal of the sampled potential.  Because the
potentials are compactly supported, every solve reduces exactly to a dense
system on the support nodes; the full-grid operator matrix is kept for the
invertibility and singular-value scans.

Compositions R_V(R_V f) need care on a truncated grid: R_V f carries an
outgoing tail beyond R_max whose contribution to the next application is a
conditionally convergent integral.  The tail is completed in closed form
(:func:`exwave.free_resolvent.outgoing_tail_integral`), which realizes the
Abel-regularized value the +-i0 boundary kernels define.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .core import (
    EXTERIOR_BALL,
    ModeField,
    PotentialSpec,
    RadialGrid,
    bracket_weight,
    relative_residual,
)
from .free_resolvent import (
    ModeResolvent,
    ResolventSign,
    apply_difference,
    outgoing_tail_integral,
)
from .obstacle_resolvent import apply_base_zero_energy, assemble_mode_resolvent

PLUS = ResolventSign.PLUS
MINUS = ResolventSign.MINUS

#: relative reciprocal-condition floor below which a solve is refused
RCOND_FLOOR = 1e-12


class NearSingularError(ArithmeticError):
    """The discretized I + R V is numerically non-invertible."""


@dataclass
class LSOperator:
    """Dense discretization of I + R(lam^2 +- i0) V on the grid."""

    l: int
    lam: float
    sign: ResolventSign
    pot: PotentialSpec
    base: ModeResolvent
    matrix: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> RadialGrid:
        return self.base.grid

    def lu(self):
        if "lu" not in self._cache:
            factor = lu_factor(self.matrix)
            diag = np.abs(np.diag(factor[0]))
            rcond_est = float(np.min(diag) / np.max(diag))
            if rcond_est < RCOND_FLOOR:
                raise NearSingularError(
                    f"I + RV is near-singular at lam = {self.lam:.6g} "
                    f"(pivot ratio {rcond_est:.2e})")
            self._cache["lu"] = factor
        return self._cache["lu"]

    def smallest_singular_value(self) -> float:
        if "sigma_min" not in self._cache:
            self._cache["sigma_min"] = float(
                np.linalg.svd(self.matrix, compute_uv=False)[-1])
        return self._cache["sigma_min"]


def assemble_ls_operator(l: int, lam: float, sign: ResolventSign,
                         pot: PotentialSpec,
                         base: ModeResolvent | None = None) -> LSOperator:
    if base is None:
        base = assemble_mode_resolvent(l, lam, sign, pot.grid)
    if base.grid is not pot.grid:
        raise ValueError("potential and resolvent live on different grids")
    if (base.l, base.sign) != (l, sign) or abs(base.lam - lam) > 1e-12:
        raise ValueError("base resolvent does not match the requested (l, lam, sign)")
    matrix = np.eye(pot.grid.size, dtype=complex) + base.matrix * pot.values[None, :]
    return LSOperator(l, lam, sign, pot, base, matrix)


def solve_perturbed_resolvent(op: LSOperator, f: ModeField,
                              residual_tol: float = 5e-2) -> ModeField:
    """u = R_V(lam^2 +- i0) f through (I + R V) u = R f.

    The returned field is checked against the radial equation
    (-Delta_l + v - lam^2) u = f in the grid interior; failures raise.  Set
    ``residual_tol`` to ``None`` to skip the guard (scans on coarse grids).
    """
    if f.l != op.l or f.grid is not op.grid:
        raise ValueError("source does not match the operator's mode or grid")
    rhs = op.base.apply(f.values)
    if op.pot.is_zero:
        u = rhs
    else:
        u = lu_solve(op.lu(), rhs)
    if residual_tol is not None:
        rel = relative_residual(op.grid, op.l, op.lam, u, f.values,
                                op.pot.values)
        if rel > residual_tol:
            raise ArithmeticError(
                f"radial-equation residual {rel:.2e} exceeds {residual_tol:.2e}; "
                "the grid does not resolve this solve")
    return f.with_values(u)


# ---------------------------------------------------------------------------
# Support-reduced solver (hot path)
# ---------------------------------------------------------------------------

class PerturbedSolver:
    """R_V applications at fixed (l, lam, sign) with support-reduced solves.

    Mathematically identical to the dense LSOperator solve: off the support
    of V the second-kind equation is explicit, so only the support block is
    ever factorized.
    """

    def __init__(self, l: int, lam: float, sign: ResolventSign,
                 pot: PotentialSpec, grid: RadialGrid | None = None):
        self.l = l
        self.lam = lam
        self.sign = sign
        self.pot = pot
        self.grid = grid or pot.grid
        self.base = assemble_mode_resolvent(l, lam, sign, self.grid)
        self._support = pot.support_indices
        self._lu = None
        if self._support.size:
            S = self._support
            app = self.base.applier
            pre = self.grid.prefix_matrix()
            suf = self.grid.suffix_matrix()
            r2 = self.grid.nodes**2
            block = app.scale * (
                app.u_out[S, None] * pre[np.ix_(S, S)] * (app.u_reg * r2)[S][None, :]
                + app.u_reg[S, None] * suf[np.ix_(S, S)] * (app.u_out * r2)[S][None, :]
            )
            small = np.eye(S.size, dtype=complex) + block * pot.values[S][None, :]
            factor = lu_factor(small)
            diag = np.abs(np.diag(factor[0]))
            if diag.size and np.min(diag) / np.max(diag) < RCOND_FLOOR:
                raise NearSingularError(
                    f"support block of I + RV is near-singular at lam = {lam:.6g}")
            self._lu = factor

    def solve_second_kind(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (I + R V) u = rhs for rhs on the full grid; (M,) or (M, k)."""
        rhs = np.asarray(rhs, dtype=complex)
        if self._lu is None:
            return rhs.copy()
        vec = rhs.ndim == 1
        R = rhs[:, None] if vec else rhs
        S = self._support
        u_S = lu_solve(self._lu, R[S])
        correction = np.zeros((self.grid.size, R.shape[1]), dtype=complex)
        correction[S] = self.pot.values[S][:, None] * u_S
        out = R - self.base.applier.apply(correction)
        return out[:, 0] if vec else out

    def apply(self, g: np.ndarray) -> np.ndarray:
        """R_V g for a source sampled on the grid."""
        return self.solve_second_kind(self.base.applier.apply(g))

    def apply_field(self, g: ModeField) -> ModeField:
        return g.with_values(self.apply(g.values))


# ---------------------------------------------------------------------------
# Boundary-value difference and lambda-derivative
# ---------------------------------------------------------------------------

def base_difference_values(l: int, lam: float, grid: RadialGrid,
                           g: np.ndarray,
                           base: ModeResolvent | None = None) -> np.ndarray:
    """[R(+) - R(-)] g for the grid's base domain; g is (M,) or (M, k).

    The incoming kernel is the conjugate of the outgoing one, so one
    outgoing applier serves both boundary values; in free space the
    difference collapses to the rank-one 2 i lam j_l j_l form.
    """
    from .free_resolvent import sph_jn_fast

    g = np.asarray(g, dtype=complex)
    if grid.domain.kind == EXTERIOR_BALL:
        if base is None or base.sign is not PLUS:
            base = assemble_mode_resolvent(l, lam, PLUS, grid)
        return (base.applier.apply(g)
                - np.conj(base.applier.apply(np.conj(g))))
    j = sph_jn_fast(l, lam * grid.nodes)
    moments = (grid.weights * j) @ g
    return 2j * lam * np.multiply.outer(j, moments)


def rv_difference_apply(l: int, lam: float, pot: PotentialSpec, f: ModeField,
                        check_tol: float = 1e-8,
                        solvers: "tuple[PerturbedSolver, PerturbedSolver] | None" = None,
                        ) -> ModeField:
    """[R_V(lam^2 + i0) - R_V(lam^2 - i0)] f, with a two-route consistency check.

    Route one subtracts the two signed solves; route two evaluates the
    factored form S+ [R(+) - R(-)] (I - V R_V(-)).  Disagreement beyond
    ``check_tol`` (relative) flags an inconsistent discretization.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    grid = f.grid
    if solvers is None:
        sp = PerturbedSolver(l, lam, PLUS, pot, grid)
        sm = PerturbedSolver(l, lam, MINUS, pot, grid)
    else:
        sp, sm = solvers
    u_plus = sp.apply(f.values)
    u_minus = sm.apply(f.values)
    direct = u_plus - u_minus

    inner = f.values - pot.values * u_minus
    diff = base_difference_values(l, lam, grid, inner, base=sp.base)
    factored = sp.solve_second_kind(diff)

    scale = np.max(np.abs(direct))
    floor = 1e-12 * np.max(np.abs(u_plus))
    if scale > 0.0:
        mismatch = np.max(np.abs(direct - factored))
        if mismatch > check_tol * scale + floor:
            raise ArithmeticError(
                f"resolvent-difference routes disagree by {mismatch / scale:.2e} "
                f"(> {check_tol:.0e}) at lam = {lam:.6g}")
    return f.with_values(factored)


def rv_apply_squared(l: int, lam: float, pot: PotentialSpec,
                     sign: ResolventSign, f: ModeField,
                     solver: PerturbedSolver | None = None) -> ModeField:
    """R_V(R_V f) with the outgoing tail beyond R_max completed in closed form.

    Requires f (and V) supported away from the outer boundary so that R_V f
    is a pure outgoing multiple of h_l(lam r) near R_max.
    """
    grid = f.grid
    if solver is None:
        solver = PerturbedSolver(l, lam, sign, pot, grid)
    w = solver.apply(f.values)
    app = solver.base.applier
    amp = w[-1] / app.u_out[-1]
    tail = outgoing_tail_integral(l, lam, sign, grid.r_max)
    rhs = app.apply(w) + app.scale * amp * tail * app.u_reg
    return f.with_values(solver.solve_second_kind(rhs))


def rv_derivative_apply(l: int, lam: float, pot: PotentialSpec,
                        sign: ResolventSign, f: ModeField,
                        solver: PerturbedSolver | None = None) -> ModeField:
    """d/dlam R_V(lam^2 +- i0) f = 2 lam R_V^2 f."""
    out = rv_apply_squared(l, lam, pot, sign, f, solver)
    return out.with_values(2.0 * lam * out.values)


def rv_derivative_fd(l: int, lam: float, pot: PotentialSpec,
                     sign: ResolventSign, f: ModeField,
                     step: float = 1e-4) -> ModeField:
    """Central difference of R_V f in lam (cross-validation oracle)."""
    up = PerturbedSolver(l, lam + step, sign, pot, f.grid).apply(f.values)
    dn = PerturbedSolver(l, lam - step, sign, pot, f.grid).apply(f.values)
    return f.with_values((up - dn) / (2.0 * step))


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------

def _weighted_conjugation(grid: RadialGrid, s: float):
    """Isometry factors mapping L^2_{-s}(r^2 dr) to plain coordinates."""
    ds = bracket_weight(grid.nodes, -s)
    sqw = np.sqrt(grid.weights)
    return sqw * ds, 1.0 / (sqw * ds)


def ls_weighted_sigma_min(l: int, lam: float, sign: ResolventSign,
                          pot: PotentialSpec, s: float) -> float:
    """Smallest singular value of I + R V as an operator on L^2_{-s}."""
    grid = pot.grid
    if lam == 0.0:
        base_matrix = _zero_energy_matrix(l, grid)
    else:
        base_matrix = assemble_mode_resolvent(l, lam, sign, grid).matrix
    T = np.eye(grid.size, dtype=complex) + base_matrix * pot.values[None, :]
    left, right = _weighted_conjugation(grid, s)
    conj = left[:, None] * T * right[None, :]
    return float(np.linalg.svd(conj, compute_uv=False)[-1])


def _zero_energy_matrix(l: int, grid: RadialGrid) -> np.ndarray:
    from .free_resolvent import RadialGreenApplier, zero_energy_pair
    from .obstacle_resolvent import dirichlet_zero_energy_pair

    if grid.domain.kind == EXTERIOR_BALL:
        u_reg, u_out, scale = dirichlet_zero_energy_pair(l, grid.nodes,
                                                         grid.domain.a)
    else:
        u_reg, u_out, scale = zero_energy_pair(l, grid.nodes)
    return RadialGreenApplier(grid, u_reg, u_out, scale).matrix()


def uniform_inverse_scan(l: int, lambdas, pot: PotentialSpec, s: float = 1.0,
                         sign: ResolventSign = PLUS) -> dict:
    """opnorm of S(lam) = (I + R V)^{-1} on L^2_{-s} over a lam grid."""
    lambdas = np.asarray(lambdas, dtype=float)
    norms = np.array([
        1.0 / ls_weighted_sigma_min(l, lam, sign, pot, s) for lam in lambdas
    ])
    return {
        "l": l,
        "s": s,
        "lambdas": lambdas,
        "inverse_norms": norms,
        "max": float(np.max(norms)),
        "min": float(np.min(norms)),
        "max_over_min": float(np.max(norms) / np.min(norms)),
        "final": float(norms[-1]),
    }


def resonance_margin_zero(pot: PotentialSpec, grid: RadialGrid | None = None,
                          s: float | None = None, l: int = 0) -> float:
    """sigma_min of I + R(0) V on L^2_{-s}, s in (1, delta0/2].

    A positive, refinement-stable margin certifies that zero energy carries
    neither an eigenvalue nor a resonance for this potential.
    """
    grid = grid or pot.grid
    if s is None:
        s = 0.5 * pot.delta0
    if not 1.0 < s <= 0.5 * pot.delta0 + 1e-12:
        raise ValueError("weight exponent must lie in (1, delta0/2]")
    return ls_weighted_sigma_min(l, 0.0, PLUS, pot, s)


def perturbed_weighted_norm_scan(l: int, lambdas, pot: PotentialSpec,
                                 s: float, lam_factor: bool = True,
                                 sign: ResolventSign = PLUS) -> dict:
    """Profile of (lam *) opnorm(<r>^{-s} R_V <r>^{-s}) over a lam grid."""
    grid = pot.grid
    lambdas = np.asarray(lambdas, dtype=float)
    vals = []
    for lam in lambdas:
        base = assemble_mode_resolvent(l, lam, sign, grid)
        T = np.eye(grid.size, dtype=complex) + base.matrix * pot.values[None, :]
        RV = np.linalg.solve(T, base.matrix)
        ds = bracket_weight(grid.nodes, -s)
        sqw = np.sqrt(grid.weights)
        conj = (sqw * ds)[:, None] * RV * (ds / sqw)[None, :]
        op = float(np.linalg.svd(conj, compute_uv=False)[0])
        vals.append(lam * op if lam_factor else op)
    vals = np.array(vals)
    return {
        "l": l,
        "s": s,
        "lambdas": lambdas,
        "values": vals,
        "max": float(np.max(vals)),
        "min": float(np.min(vals)),
        "max_over_min": float(np.max(vals) / np.min(vals)),
    }
