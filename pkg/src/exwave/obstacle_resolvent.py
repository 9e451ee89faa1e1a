"""Exterior-ball Dirichlet resolvent per spherical-harmonic mode.

For a ball of radius ``a`` the partial-wave kernel is the free one with the
regular solution replaced by

    u_reg(r) = j_l(lam r) - c * h_l(lam r),   c = j_l(lam a) / h_l(lam a),

so every output field vanishes at r = a; the Wronskian normalization is
unchanged because the reflected term is proportional to the outgoing
solution.  The reflection coefficient is well defined for every real lam > 0
(h_l has no real zeros); this is guarded rather than assumed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import spherical_jn

from .core import (
    EXTERIOR_BALL,
    DomainSpec,
    ModeField,
    RadialGrid,
    bracket_weight,
    sup_norm,
)
from .free_resolvent import (
    ModeResolvent,
    RadialGreenApplier,
    ResolventSign,
    sph_hankel_fast,
    sph_jn_fast,
)


def dirichlet_reflection(l: int, lam: float, a: float,
                         sign: ResolventSign) -> complex:
    """Reflection coefficient pinning u_reg(a) = 0."""
    ha = sph_hankel_fast(l, np.asarray(lam * a), sign)
    if np.abs(ha) < 1e-300:
        raise ArithmeticError(
            f"outgoing radial factor vanished at lam*a = {lam * a:.6g}; "
            "this cannot happen for real lam > 0")
    return complex(sph_jn_fast(l, np.asarray(lam * a)) / ha)


def dirichlet_solution_pair(l: int, lam: float, sign: ResolventSign,
                            r: np.ndarray, a: float):
    z = lam * np.asarray(r, dtype=float)
    c = dirichlet_reflection(l, lam, a, sign)
    h = sph_hankel_fast(l, z, sign)
    u_reg = sph_jn_fast(l, z) - c * h
    scale = 1j * sign.orientation * lam
    return u_reg, h, scale


def dirichlet_zero_energy_pair(l: int, r: np.ndarray, a: float):
    """lam = 0 pair: (r^l - a^{2l+1} / r^{l+1}) / ((2l+1) r_>^{l+1})."""
    r = np.asarray(r, dtype=float)
    u_reg = (r**l - a ** (2 * l + 1) / r ** (l + 1)).astype(complex)
    u_out = (r ** (-(l + 1))).astype(complex)
    return u_reg, u_out, 1.0 / (2 * l + 1)


def assemble_dirichlet_mode_resolvent(l: int, lam: float, sign: ResolventSign,
                                      grid: RadialGrid, a: float | None = None,
                                      ) -> ModeResolvent:
    """Mode-l exterior Dirichlet resolvent on a grid starting at r = a."""
    if lam <= 0.0:
        raise ValueError("lam must be positive; use apply_dirichlet_zero_energy")
    if a is None:
        a = grid.domain.a
    if not a > 0.0:
        raise ValueError("obstacle radius must be positive")
    if abs(grid.r_min - a) > 1e-12 * max(a, 1.0):
        raise ValueError("grid inner endpoint must sit on the obstacle boundary")
    u_reg, u_out, scale = dirichlet_solution_pair(l, lam, sign, grid.nodes, a)
    applier = RadialGreenApplier(grid, u_reg, u_out, scale)
    return ModeResolvent(l, lam, sign, grid, DomainSpec.exterior_ball(a), applier)


def apply_dirichlet_zero_energy(g: ModeField, a: float | None = None) -> ModeField:
    grid = g.grid
    if a is None:
        a = grid.domain.a
    u_reg, u_out, scale = dirichlet_zero_energy_pair(g.l, grid.nodes, a)
    applier = RadialGreenApplier(grid, u_reg, u_out, scale)
    return g.with_values(applier.apply(g.values))


def assemble_mode_resolvent(l: int, lam: float, sign: ResolventSign,
                            grid: RadialGrid) -> ModeResolvent:
    """Base resolvent for the grid's domain (free space or exterior ball)."""
    from .free_resolvent import assemble_free_mode_resolvent

    if grid.domain.kind == EXTERIOR_BALL:
        return assemble_dirichlet_mode_resolvent(l, lam, sign, grid)
    return assemble_free_mode_resolvent(l, lam, sign, grid)


def apply_base_zero_energy(g: ModeField) -> ModeField:
    from .free_resolvent import apply_zero_energy

    if g.grid.domain.kind == EXTERIOR_BALL:
        return apply_dirichlet_zero_energy(g)
    return apply_zero_energy(g)


# ---------------------------------------------------------------------------
# Verification scans
# ---------------------------------------------------------------------------

def weighted_operator_norm(res: ModeResolvent, s: float) -> float:
    """Operator norm of <r>^{-s} R <r>^{-s} on the per-mode L^2(r^2 dr)."""
    grid = res.grid
    ds = bracket_weight(grid.nodes, -s)
    sqw = np.sqrt(grid.weights)
    conj = (sqw * ds)[:, None] * res.matrix * (ds / sqw)[None, :]
    return float(np.linalg.svd(conj, compute_uv=False)[0])


def verify_weighted_bound(l: int, lambdas, s: float, n_derivs: int,
                          grid: RadialGrid, sign: ResolventSign = ResolventSign.PLUS,
                          ) -> dict:
    """Profile of opnorm(<r>^{-s} R(lam^2 +- i0) <r>^{-s}) over a lam grid.

    The exterior ball is non-trapping, so the profile must stay bounded with
    no derivative loss (``n_derivs`` is recorded for context only).
    """
    if not s > 0.5:
        raise ValueError("weight exponent must exceed 1/2")
    lambdas = np.asarray(lambdas, dtype=float)
    norms = np.array([
        weighted_operator_norm(assemble_mode_resolvent(l, lam, sign, grid), s)
        for lam in lambdas
    ])
    coeffs = np.polyfit(np.log(lambdas), np.log(norms), 1)
    return {
        "l": l,
        "s": s,
        "n_derivs": n_derivs,
        "lambdas": lambdas,
        "opnorms": norms,
        "max": float(np.max(norms)),
        "min": float(np.min(norms)),
        "max_over_min": float(np.max(norms) / np.min(norms)),
        "loglog_slope": float(coeffs[0]),
    }


def verify_sup_bound(lambdas, f: ModeField,
                     sign: ResolventSign = ResolventSign.PLUS) -> dict:
    """sup-norm profile of R(lam^2 +- i0) f for a fixed radial source."""
    if f.l != 0:
        raise ValueError("sup-bound scan is radial (l = 0) only")
    lambdas = np.asarray(lambdas, dtype=float)
    sups = np.array([
        sup_norm(assemble_mode_resolvent(0, lam, sign, f.grid).apply(f))
        for lam in lambdas
    ])
    return {
        "lambdas": lambdas,
        "sup_norms": sups,
        "max": float(np.max(sups)),
        "min": float(np.min(sups)),
        "max_over_min": float(np.max(sups) / np.min(sups)),
    }
