"""Independent ground truth for the wave flow: a closed-form free-space
propagator and a time-domain leapfrog solver.

This module deliberately imports nothing from the resolvent or spectral
modules; agreement between the two pipelines is then a real cross-check and
not a shared-code artifact.  Both solvers work in the reduced variable
w = r u, for which the radial wave operator becomes
w_tt = w_rr - l(l+1) w / r^2 - v(r) w with w = 0 at the inner boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    EXTERIOR_BALL,
    WHOLE_SPACE,
    CauchyData,
    DomainSpec,
    ModeField,
    PotentialSpec,
    RadialGrid,
)


@dataclass(frozen=True)
class OracleResult:
    """Displacement/velocity snapshot produced by an oracle solver."""

    t: float
    u: ModeField
    ut: ModeField


# ---------------------------------------------------------------------------
# Closed-form free propagation (whole space, l = 0)
# ---------------------------------------------------------------------------

class _OddExtension:
    """Panel-interpolated odd extension of r * field(r), zero beyond the grid."""

    def __init__(self, grid: RadialGrid, values: np.ndarray):
        self.grid = grid
        self.w = grid.nodes * np.real_if_close(values)
        self.dw = grid.derivative(self.w)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        ax = np.abs(x)
        out = np.zeros_like(ax)
        inside = ax <= self.grid.r_max
        out[inside] = self.grid.interpolate(self.w, ax[inside]).real
        return np.sign(x) * out

    def deriv(self, x: np.ndarray) -> np.ndarray:
        ax = np.abs(x)
        out = np.zeros_like(ax)
        inside = ax <= self.grid.r_max
        out[inside] = self.grid.interpolate(self.dw, ax[inside]).real
        return out  # derivative of an odd function is even

    def antiderivative(self, x: np.ndarray) -> np.ndarray:
        """G(x) = integral_0^x of the odd extension (an even function).

        The [0, r_min) sliver is below the inner grid edge; w = r * field
        vanishes there to the same order the grid can represent at all.
        """
        ax = np.clip(np.abs(x), self.grid.r_min, self.grid.r_max)
        out = np.empty_like(ax)
        for i, c in enumerate(ax):
            out[i] = self.grid.integrate_upto(self.w, c).real
        return out


def kirchhoff_free_propagate(t: float, data: CauchyData,
                             grid: RadialGrid | None = None) -> OracleResult:
    """Exact radial d'Alembert solution in free space (V = 0, l = 0).

    w = r u solves the half-line string equation with w(0) = 0, so
    w(t, r) = [W_f(r+t) + W_f(r-t)]/2 + [G_g(r+t) - G_g(r-t)]/2 with odd
    extensions of r f and r g.  Exact up to panel interpolation.
    """
    if data.l != 0:
        raise ValueError("closed-form free propagation is radial (l = 0) only")
    grid = grid or data.grid
    if grid.domain.kind != WHOLE_SPACE:
        raise ValueError("closed-form free propagation needs the whole space")
    wf = _OddExtension(grid, data.f.values)
    wg = _OddExtension(grid, data.g.values)
    r = grid.nodes
    xp, xm = r + t, r - t
    if np.max(np.abs(xp)) > grid.r_max or np.min(xm) < -grid.r_max:
        pass  # extensions vanish there; propagation left the grid
    w = 0.5 * (wf(xp) + wf(xm)) + 0.5 * (wg.antiderivative(xp)
                                         - wg.antiderivative(xm))
    wt = 0.5 * (wf.deriv(xp) - wf.deriv(xm)) + 0.5 * (wg(xp) + wg(xm))
    u = ModeField(0, (w / r).astype(complex), grid)
    ut = ModeField(0, (wt / r).astype(complex), grid)
    return OracleResult(t=float(t), u=u, ut=ut)


# ---------------------------------------------------------------------------
# Leapfrog time-domain solver
# ---------------------------------------------------------------------------

def time_domain_solve(T: float, data: CauchyData, pot: PotentialSpec,
                      domain: DomainSpec, l: int | None = None,
                      cfl: float = 0.5,
                      record_times=None,
                      dr: float | None = None) -> list[OracleResult]:
    """Leapfrog integration of the radial wave equation up to time T.

    Second-order differences in the w = r u variable on a uniform grid,
    Dirichlet at the inner boundary, hard wall at R_max.  Finite propagation
    speed makes the truncation exact provided
    R_max >= inner + support + T; this is enforced rather than absorbed.
    """
    if not 0.0 < cfl <= 0.9:
        raise ValueError("cfl must lie in (0, 0.9]")
    grid = data.grid
    if l is None:
        l = data.l
    r_inner = domain.a if domain.kind == EXTERIOR_BALL else 0.0
    supp = np.abs(data.f.values) + np.abs(data.g.values) + np.abs(pot.values)
    nz = np.nonzero(supp > 1e-14 * max(np.max(supp), 1e-300))[0]
    r_supp = grid.nodes[nz[-1]] if nz.size else r_inner
    if grid.r_max < r_supp + T:
        raise ValueError(
            f"truncation radius {grid.r_max} cannot contain the cone "
            f"support {r_supp} + T {T}")
    if dr is None:
        dr = min(grid.r_max / 2000.0, 0.02)
    n = int(np.ceil((grid.r_max - r_inner) / dr)) + 1
    rr = np.linspace(r_inner, grid.r_max, n)
    dr = rr[1] - rr[0]

    def sample(field: ModeField) -> np.ndarray:
        vals = grid.interpolate(field.values, np.maximum(rr, grid.r_min)).real
        if domain.kind == WHOLE_SPACE:
            vals[0] = grid.interpolate(field.values, np.array([grid.r_min])).real[0]
        return vals

    f0 = sample(data.f)
    g0 = sample(data.g)
    v = grid.interpolate(pot.values, np.maximum(rr, grid.r_min)).real
    with np.errstate(divide="ignore", invalid="ignore"):
        centrifugal = l * (l + 1) / rr**2
    if domain.kind == WHOLE_SPACE:
        centrifugal[0] = 0.0  # w(0) = 0 is pinned; the value never enters

    w = rr * f0
    wt = rr * g0
    w[0] = w[-1] = 0.0

    steps = max(1, int(np.ceil(T / (cfl * dr))))
    dt = T / steps
    if record_times is None:
        record_times = [T]
    record_times = sorted(set(float(t) for t in record_times))
    if record_times and (record_times[0] < 0.0 or record_times[-1] > T):
        raise ValueError("record times must lie in [0, T]")

    def accel(wv: np.ndarray) -> np.ndarray:
        a = np.zeros_like(wv)
        a[1:-1] = (wv[2:] - 2.0 * wv[1:-1] + wv[:-2]) / dr**2
        a[1:-1] -= (centrifugal[1:-1] + v[1:-1]) * wv[1:-1]
        return a

    # which step states each request needs (linear interpolation in time,
    # central differences in time for the velocity)
    needed: set[int] = set()
    brackets: dict[float, int] = {}
    for t_req in record_times:
        k = min(int(np.floor(t_req / dt + 1e-12)), steps - 1) if steps else 0
        brackets[t_req] = k
        needed.update((k - 1, k, k + 1, k + 2))
    stored: dict[int, np.ndarray] = {}

    w_prev = w.copy()  # w^0
    w_cur = w + dt * wt + 0.5 * dt**2 * accel(w)  # second-order first step
    w_cur[0] = w_cur[-1] = 0.0
    if -1 in needed:
        stored[-1] = w_cur - 2.0 * dt * wt  # mirror state behind t = 0
    if 0 in needed:
        stored[0] = w_prev.copy()
    if 1 in needed:
        stored[1] = w_cur.copy()
    for n in range(1, steps + 2):
        w_next = 2.0 * w_cur - w_prev + dt**2 * accel(w_cur)
        w_next[0] = w_next[-1] = 0.0
        if n + 1 in needed:
            stored[n + 1] = w_next.copy()
        w_prev, w_cur = w_cur, w_next

    results: list[OracleResult] = []
    for t_req in record_times:
        k = brackets[t_req]
        theta = t_req / dt - k
        w_k, w_k1 = stored[k], stored[k + 1]
        vel_k = (w_k1 - stored[k - 1]) / (2.0 * dt)
        vel_k1 = (stored[k + 2] - w_k) / (2.0 * dt)
        w_c = (1.0 - theta) * w_k + theta * w_k1
        wt_c = (1.0 - theta) * vel_k + theta * vel_k1
        with np.errstate(divide="ignore", invalid="ignore"):
            u_c = np.where(rr > 0, w_c / rr, 0.0)
            ut_c = np.where(rr > 0, wt_c / rr, 0.0)
        if domain.kind == WHOLE_SPACE:
            # parabolic fit through the first interior nodes for u(0)
            u_c[0] = 2.0 * u_c[1] - u_c[2]
            ut_c[0] = 2.0 * ut_c[1] - ut_c[2]
        u_vals = np.interp(grid.nodes, rr, u_c).astype(complex)
        ut_vals = np.interp(grid.nodes, rr, ut_c).astype(complex)
        results.append(OracleResult(
            t=t_req,
            u=ModeField(data.l, u_vals, grid),
            ut=ModeField(data.l, ut_vals, grid),
        ))
    return results


def discrete_energy(result: OracleResult, pot: PotentialSpec | None = None) -> float:
    """Conserved flow energy: |u'|^2 + l(l+1)|u/r|^2 + v|u|^2 + |u_t|^2, r^2 dr."""
    grid = result.u.grid
    l = result.u.l
    du = grid.derivative(result.u.values)
    dens = (np.abs(du) ** 2
            + l * (l + 1) * np.abs(result.u.values / grid.nodes) ** 2
            + np.abs(result.ut.values) ** 2)
    if pot is not None:
        dens = dens + pot.values * np.abs(result.u.values) ** 2
    return float(np.sum(grid.weights * dens))


def cross_validate(t: float, data: CauchyData, pot: PotentialSpec,
                   domain: DomainSpec, spectral_result=None,
                   cfl: float = 0.4) -> dict:
    """Relative L^2 gap between a spectral propagation and the leapfrog.

    ``spectral_result`` is any object with fields (t, u, ut); this module
    never computes one itself so the comparison stays independent.
    """
    ref = time_domain_solve(t, data, pot, domain, cfl=cfl, record_times=[t])[0]
    out = {"t": t, "reference_energy": discrete_energy(ref, pot)}
    if spectral_result is not None:
        w = data.grid.weights
        num = np.sum(w * np.abs(spectral_result.u.values - ref.u.values) ** 2)
        den = np.sum(w * np.abs(ref.u.values) ** 2)
        out["rel_l2_u"] = float(np.sqrt(num / den))
        numt = np.sum(w * np.abs(spectral_result.ut.values - ref.ut.values) ** 2)
        dent = np.sum(w * np.abs(ref.ut.values) ** 2)
        out["rel_l2_ut"] = float(np.sqrt(numt / dent))
    return out
