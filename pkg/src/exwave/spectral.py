"""Littlewood-Paley windows, the spectral-integral functional calculus, the
wave propagator, and Besov/Sobolev norms for the generators with and without
potential.

A spectral function phi is applied through

    phi(sqrt(G_V)) f = (1 / pi i) * int_0^inf phi(lam) [R_V(+) - R_V(-)] f lam dlam,

discretized windowwise: the dyadic partition splits the integrand, and each
window carries composite Gauss panels dense enough for the fastest phase in
play.  The phase budget counts both the explicit oscillation of phi (factor
e^{i lam t}) and the kernel's own radial phase e^{i lam r} up to the grid
truncation radius, so quadrature nodes must be spaced below
2 pi / (points_per_period * (t + r_max)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CauchyData,
    ModeField,
    PotentialSpec,
    RadialGrid,
    l1_norm,
    l2_norm,
    lp_norm,
    sup_norm,
)
from .free_resolvent import MINUS, PLUS
from .potential_resolvent import (
    PerturbedSolver,
    base_difference_values,
    rv_derivative_apply,
)

# ---------------------------------------------------------------------------
# Littlewood-Paley windows
# ---------------------------------------------------------------------------


def _mollifier(x: np.ndarray, p: float) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-p / x[pos])
    return out


@dataclass(frozen=True)
class WindowFamily:
    """Smooth dyadic partition built from the exp(-p/x) mollifier.

    psi(lam) = 1 for lam <= 1 and 0 for lam >= 2; the window is
    phi(lam) = psi(lam) - psi(2 lam), supported in [1/2, 2].  Doubling the
    argument is exact in binary floating point, so the dyadic sum telescopes
    to exactly 1 for every lam > 0.  ``steepness`` selects an alternative
    profile with the same support (norm stability checks).
    """

    steepness: float = 1.0

    def _step(self, x: np.ndarray) -> np.ndarray:
        # 0 for x <= 0, 1 for x >= 1
        a = _mollifier(x, self.steepness)
        b = _mollifier(1.0 - x, self.steepness)
        return a / (a + b)

    def _step_deriv(self, x: np.ndarray) -> np.ndarray:
        a = _mollifier(x, self.steepness)
        b = _mollifier(1.0 - x, self.steepness)
        da = np.zeros_like(x)
        db = np.zeros_like(x)
        pos = x > 0
        da[pos] = self.steepness / x[pos] ** 2 * a[pos]
        neg = (1.0 - x) > 0
        db[neg] = -self.steepness / (1.0 - x[neg]) ** 2 * b[neg]
        denom = (a + b) ** 2
        out = np.zeros_like(x)
        ok = denom > 0
        out[ok] = (da[ok] * b[ok] - a[ok] * db[ok]) / denom[ok]
        return out

    def psi(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return 1.0 - self._step(lam - 1.0)

    def phi(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return self.psi(lam) - self.psi(2.0 * lam)

    def phi_deriv(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return -self._step_deriv(lam - 1.0) + 2.0 * self._step_deriv(2.0 * lam - 1.0)


DEFAULT_FAMILY = WindowFamily()


@dataclass(frozen=True)
class SpectralWindow:
    """Dyadic window phi_j(lam) = phi(2^{-j} lam), supported in [2^{j-1}, 2^{j+1}]."""

    j: int
    family: WindowFamily = DEFAULT_FAMILY

    @property
    def support(self) -> tuple[float, float]:
        return (2.0 ** (self.j - 1), 2.0 ** (self.j + 1))

    def __call__(self, lam) -> np.ndarray:
        return self.family.phi(np.asarray(lam, dtype=float) * 2.0 ** (-self.j))

    def deriv(self, lam) -> np.ndarray:
        scale = 2.0 ** (-self.j)
        return scale * self.family.phi_deriv(np.asarray(lam, dtype=float) * scale)


def lp_window(j: int, family: WindowFamily = DEFAULT_FAMILY) -> SpectralWindow:
    return SpectralWindow(j, family)


def partition_check(lams, family: WindowFamily = DEFAULT_FAMILY) -> float:
    """max |sum_j phi(2^{-j} lam) - 1| over the given frequencies."""
    lams = np.asarray(lams, dtype=float)
    j_lo = int(np.floor(np.log2(np.min(lams)))) - 2
    j_hi = int(np.ceil(np.log2(np.max(lams)))) + 2
    total = np.zeros_like(lams)
    for j in range(j_lo, j_hi + 1):
        total += SpectralWindow(j, family)(lams)
    return float(np.max(np.abs(total - 1.0)))


# ---------------------------------------------------------------------------
# Stone-formula quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StoneRule:
    """Quadrature resolution policy for the spectral integrals."""

    points_per_period: float = 40.0
    panel_order: int = 8
    min_panels: int = 4
    max_nodes: int = 800_000

    def window_nodes(self, j: int, phase_scale: float):
        """Gauss panels on [2^{j-1}, 2^{j+1}] resolving e^{i lam phase_scale}."""
        lo, hi = 2.0 ** (j - 1), 2.0 ** (j + 1)
        width = hi - lo
        spacing = 2.0 * math.pi / (self.points_per_period * max(phase_scale, 1.0))
        panels = max(self.min_panels,
                     int(math.ceil(width / (spacing * self.panel_order))))
        x, w = np.polynomial.legendre.leggauss(self.panel_order)
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        lams = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        wts = (half[:, None] * w[None, :]).ravel()
        return lams, wts


DEFAULT_RULE = StoneRule()


class _DensityEngine:
    """Spectral density rho(lam) = (lam / pi i) [R_V(+) - R_V(-)] cols.

    One perturbed solver per frequency; the incoming boundary value comes
    from the kernel conjugation symmetry, and the factored route
    S+ [R(+) - R(-)] (I - V R_V(-)) is cross-checked against the direct
    subtraction at every node.
    """

    def __init__(self, l: int, pot: PotentialSpec, grid: RadialGrid,
                 check_tol: float = 1e-8):
        self.l = l
        self.pot = pot
        self.grid = grid
        self.check_tol = check_tol

    def density(self, lam: float, cols: np.ndarray) -> np.ndarray:
        sp = PerturbedSolver(self.l, lam, PLUS, self.pot, self.grid)
        u_plus = sp.apply(cols)
        if np.isrealobj(cols) or not np.any(cols.imag):
            u_minus = np.conj(u_plus)
        else:
            u_minus = np.conj(sp.apply(np.conj(cols)))
        direct = u_plus - u_minus
        inner = cols - self.pot.values[:, None] * u_minus
        diff = base_difference_values(self.l, lam, self.grid, inner, base=sp.base)
        factored = sp.solve_second_kind(diff)
        # the floor term covers frequencies where the difference is itself a
        # near-complete cancellation of the one-sided solves
        scale = np.max(np.abs(direct))
        floor = 1e-12 * np.max(np.abs(u_plus))
        if scale > 0.0:
            mismatch = np.max(np.abs(direct - factored))
            if mismatch > self.check_tol * scale + floor:
                raise ArithmeticError(
                    f"resolvent-difference routes disagree by "
                    f"{mismatch / scale:.2e} at lam = {lam:.6g}")
        return (lam / (1j * np.pi)) * factored


def _as_columns(fields) -> np.ndarray:
    return np.stack([f.values for f in fields], axis=1)


def block_l2_norms(f: ModeField, pot: PotentialSpec, js,
                   rule: StoneRule = DEFAULT_RULE) -> np.ndarray:
    """L^2 norms of the dyadic blocks phi_j(sqrt(G_V)) f."""
    blocks = dyadic_blocks([f], pot, js, rule=rule)
    return np.array([l2_norm(b[0]) for b in blocks])


def dyadic_blocks(fields, pot: PotentialSpec, js,
                  rule: StoneRule = DEFAULT_RULE,
                  family: WindowFamily = DEFAULT_FAMILY):
    """phi_j(sqrt(G_V)) applied to several fields at once, one list per j."""
    grid = fields[0].grid
    l = fields[0].l
    cols = _as_columns(fields)
    engine = _DensityEngine(l, pot, grid)
    out = []
    for j in js:
        window = SpectralWindow(j, family)
        lams, wts = rule.window_nodes(j, grid.r_max)
        acc = np.zeros_like(cols, dtype=complex)
        for lam, w in zip(lams, wts):
            acc += (w * window(lam)) * engine.density(lam, cols)
        out.append([fields[k].with_values(acc[:, k]) for k in range(len(fields))])
    return out


def dyadic_block_apply(j: int, f: ModeField, pot: PotentialSpec,
                       rule: StoneRule = DEFAULT_RULE,
                       family: WindowFamily = DEFAULT_FAMILY) -> ModeField:
    """Single Littlewood-Paley block of f under the generator with potential."""
    return dyadic_blocks([f], pot, [j], rule=rule, family=family)[0][0]


def spectral_mass_estimate(f: ModeField, pot: PotentialSpec, j: int,
                           samples: int = 24) -> float:
    """Cheap estimate of ||phi_j(sqrt(G_V)) f||_2 from the measure density.

    Samples sigma(lam) = (lam / pi) * <f, Im R_V(+) f> * 2 across the window;
    the scalar density involves no radial phase at large r, so a couple of
    dozen samples suffice for an order-of-magnitude range decision.
    """
    grid = f.grid
    window = SpectralWindow(j)
    lo, hi = window.support
    lams = np.linspace(lo, hi, samples + 2)[1:-1]
    w = grid.weights
    est = 0.0
    for lam in lams:
        sp = PerturbedSolver(f.l, lam, PLUS, pot, grid)
        u_plus = sp.apply(f.values)
        if np.any(f.values.imag):
            delta = u_plus - np.conj(sp.apply(np.conj(f.values)))
        else:
            delta = 2j * u_plus.imag
        density = np.real((lam / (1j * np.pi))
                          * np.sum(w * np.conj(f.values) * delta))
        est = max(est, abs(density) * float(window(lam)) ** 2)
    width = hi - lo
    return float(np.sqrt(est * width))


def max_resolvable_j(grid: RadialGrid) -> int:
    """Largest dyadic index whose window the grid can represent.

    Frequencies above pi / (node spacing) alias on the grid; the top usable
    window is the last one whose upper edge 2^{j+1} stays below that line.
    Windows beyond the cap produce quadrature fiction, not small corrections.
    """
    lam_grid = np.pi / grid.node_spacing
    return int(np.floor(np.log2(lam_grid))) - 1


def auto_j_range(f: ModeField, pot: PotentialSpec, tol: float = 1e-8,
                 j_start: tuple[int, int] = (-4, 4),
                 j_limit: tuple[int, int] | None = None) -> list[int]:
    """Dyadic range covering f's spectral content down to ``tol`` (relative).

    The upper end never exceeds what the grid resolves; request a finer grid
    if the data genuinely carries higher frequencies.
    """
    if j_limit is None:
        j_limit = (-12, max_resolvable_j(f.grid))
    base = l2_norm(f)
    if base == 0.0:
        return list(range(j_start[0], j_start[1] + 1))
    lo, hi = min(j_start[0], j_limit[1]), min(j_start[1], j_limit[1])
    est: dict[int, float] = {}

    def mass(j: int) -> float:
        if j not in est:
            est[j] = spectral_mass_estimate(f, pot, j)
        return est[j]

    while lo > j_limit[0] and mass(lo) > tol * base:
        lo -= 1
    while hi < j_limit[1] and mass(hi) > tol * base:
        hi += 1
    return list(range(lo, hi + 1))


def stone_apply(phi, f: ModeField, pot: PotentialSpec, *,
                osc_scale: float = 0.0,
                j_range=None,
                rule: StoneRule = DEFAULT_RULE,
                family: WindowFamily = DEFAULT_FAMILY,
                return_info: bool = False):
    """phi(sqrt(G_V)) f through the spectral-difference integral.

    ``osc_scale`` declares the oscillation scale of phi itself (use t when
    phi contains e^{i lam t}); the kernel's radial phase up to r_max is
    always budgeted.  Raises when the implied node count exceeds the rule's
    budget instead of silently under-resolving.
    """
    grid = f.grid
    if j_range is None:
        j_range = auto_j_range(f, pot)
    phase_scale = osc_scale + grid.r_max
    total_nodes = sum(
        rule.window_nodes(j, phase_scale)[0].size for j in j_range)
    if total_nodes > rule.max_nodes:
        raise ValueError(
            f"spectral quadrature needs {total_nodes} nodes, over the budget "
            f"{rule.max_nodes}; shrink t * r_max or relax the rule")
    engine = _DensityEngine(f.l, pot, grid)
    acc = np.zeros(grid.size, dtype=complex)
    contributions = {}
    cols = f.values[:, None]
    for j in j_range:
        window = SpectralWindow(j, family)
        lams, wts = rule.window_nodes(j, phase_scale)
        blk = np.zeros(grid.size, dtype=complex)
        for lam, w in zip(lams, wts):
            blk += (w * window(lam) * phi(lam)) * engine.density(lam, cols)[:, 0]
        acc += blk
        contributions[j] = float(np.max(np.abs(blk)))
    out = f.with_values(acc)
    if return_info:
        return out, {"j_range": list(j_range), "nodes": total_nodes,
                     "block_contributions": contributions}
    return out


# ---------------------------------------------------------------------------
# Wave propagator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropagatorResult:
    """Displacement/velocity pair of the wave flow at one time."""

    t: float
    u: ModeField
    ut: ModeField


def propagate_series(times, data: CauchyData, pot: PotentialSpec, *,
                     j_range=None,
                     rule: StoneRule = DEFAULT_RULE,
                     family: WindowFamily = DEFAULT_FAMILY,
                     block_tol: float = 1e-7) -> list[PropagatorResult]:
    """Wave flow cos(t sqrt(G_V)) f + (sqrt(G_V))^{-1} sin(t sqrt(G_V)) g.

    All requested times share one frequency scan: the spectral density
    applied to (f, g) is computed once per node and summed against the
    time-dependent trig weights, in deterministic window-then-node order.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    grid = data.grid
    t_max = float(np.max(np.abs(times))) if times.size else 0.0
    if j_range is None:
        j_f = auto_j_range(data.f, pot, tol=block_tol)
        j_g = auto_j_range(data.g, pot, tol=block_tol)
        # the g-term carries sin(lam t)/lam ~ t at small lam: push the lower
        # cutoff far enough that its truncated mass stays below tolerance
        lo = min(j_f[0], j_g[0])
        while lo > -12 and max(t_max, 1.0) * 2.0 ** (1.5 * lo) > 0.3 * block_tol:
            lo -= 1
        j_range = list(range(lo, max(j_f[-1], j_g[-1]) + 1))
    phase_scale = t_max + grid.r_max
    total_nodes = sum(rule.window_nodes(j, phase_scale)[0].size for j in j_range)
    if total_nodes > rule.max_nodes:
        raise ValueError(
            f"propagation needs {total_nodes} spectral nodes, over the budget "
            f"{rule.max_nodes}; reduce t or the truncation radius")
    engine = _DensityEngine(data.l, pot, grid)
    cols = _as_columns([data.f, data.g])
    acc_u = np.zeros((times.size, grid.size), dtype=complex)
    acc_ut = np.zeros((times.size, grid.size), dtype=complex)
    for j in j_range:
        window = SpectralWindow(j, family)
        lams, wts = rule.window_nodes(j, phase_scale)
        for lam, w in zip(lams, wts):
            dens = engine.density(lam, cols)
            wj = w * float(window(lam))
            if wj == 0.0:
                continue
            ct = np.cos(lam * times)
            st = np.sin(lam * times)
            acc_u += wj * (ct[:, None] * dens[:, 0][None, :]
                           + (st / lam)[:, None] * dens[:, 1][None, :])
            acc_ut += wj * ((-lam * st)[:, None] * dens[:, 0][None, :]
                            + ct[:, None] * dens[:, 1][None, :])
    out = []
    for k, t in enumerate(times):
        out.append(PropagatorResult(
            t=float(t),
            u=data.f.with_values(acc_u[k]),
            ut=data.f.with_values(acc_ut[k]),
        ))
    return out


def propagate(t: float, data: CauchyData, pot: PotentialSpec,
              **kwargs) -> PropagatorResult:
    """Single-time wave flow; see :func:`propagate_series`."""
    return propagate_series([t], data, pot, **kwargs)[0]


def halfwave_block(t: float, j: int, g: ModeField, pot: PotentialSpec, *,
                   rule: StoneRule = DEFAULT_RULE,
                   family: WindowFamily = DEFAULT_FAMILY) -> ModeField:
    """(sqrt(G_V))^{-1} e^{i t sqrt(G_V)} phi_j(sqrt(G_V)) g, direct quadrature.

    The lam factor of the spectral measure cancels the inverse square root,
    leaving the integrand e^{i lam t} phi_j(lam) [R_V(+) - R_V(-)] g / (pi i).
    """
    grid = g.grid
    engine = _DensityEngine(g.l, pot, grid)
    window = SpectralWindow(j, family)
    lams, wts = rule.window_nodes(j, t + grid.r_max)
    acc = np.zeros(grid.size, dtype=complex)
    cols = g.values[:, None]
    for lam, w in zip(lams, wts):
        phase = np.exp(1j * lam * t)
        acc += (w * float(window(lam)) * phase / lam) * engine.density(lam, cols)[:, 0]
    return g.with_values(acc)


def halfwave_block_series(times, j: int, g: ModeField, pot: PotentialSpec, *,
                          rule: StoneRule = DEFAULT_RULE,
                          family: WindowFamily = DEFAULT_FAMILY) -> list[ModeField]:
    """:func:`halfwave_block` at many times from one frequency scan."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    grid = g.grid
    engine = _DensityEngine(g.l, pot, grid)
    window = SpectralWindow(j, family)
    t_max = float(np.max(np.abs(times)))
    lams, wts = rule.window_nodes(j, t_max + grid.r_max)
    acc = np.zeros((times.size, grid.size), dtype=complex)
    cols = g.values[:, None]
    for lam, w in zip(lams, wts):
        dens = engine.density(lam, cols)[:, 0]
        phases = np.exp(1j * lam * times) * (w * float(window(lam)) / lam)
        acc += phases[:, None] * dens[None, :]
    return [g.with_values(acc[k]) for k in range(times.size)]


def halfwave_block_ibp(t: float, j: int, g: ModeField, pot: PotentialSpec, *,
                       rule: StoneRule = DEFAULT_RULE,
                       family: WindowFamily = DEFAULT_FAMILY) -> ModeField:
    """Same operator evaluated after one integration by parts in lam.

    T_j(t) g = (1/(pi t)) * int e^{i lam t} [ phi_j (d/dlam)(Delta R_V)
                                            + phi_j' (Delta R_V) ] g dlam,
    with d/dlam R_V = 2 lam R_V^2 realized by the tail-completed composition.
    Used to cross-check the direct quadrature at large t.
    """
    if t <= 0.0:
        raise ValueError("the integrated-by-parts form needs t > 0")
    grid = g.grid
    window = SpectralWindow(j, family)
    lams, wts = rule.window_nodes(j, t + grid.r_max)
    acc = np.zeros(grid.size, dtype=complex)
    for lam, w in zip(lams, wts):
        sp = PerturbedSolver(g.l, lam, PLUS, pot, grid)
        sm = PerturbedSolver(g.l, lam, MINUS, pot, grid)
        dplus = rv_derivative_apply(g.l, lam, pot, PLUS, g, solver=sp).values
        dminus = rv_derivative_apply(g.l, lam, pot, MINUS, g, solver=sm).values
        diff = sp.apply(g.values) - sm.apply(g.values)
        phase = np.exp(1j * lam * t)
        acc += w * phase * (float(window(lam)) * (dplus - dminus)
                            + float(window.deriv(lam)) * diff)
    return g.with_values(acc / (np.pi * t))


# ---------------------------------------------------------------------------
# Besov / Sobolev norms
# ---------------------------------------------------------------------------

def _block_lp(block: ModeField, p) -> float:
    if p == 2:
        return l2_norm(block)
    if np.isinf(p):
        return sup_norm(block)
    if p == 1:
        return l1_norm(block)
    return lp_norm(block, p)


def besov_norm(f: ModeField, s: float, p, q, pot: PotentialSpec,
               generator: str = "G_V", j_range=None,
               rule: StoneRule = DEFAULT_RULE,
               family: WindowFamily = DEFAULT_FAMILY) -> float:
    """l^q over j of 2^{sj} ||phi_j(sqrt(G)) f||_p for the chosen generator."""
    if p not in (1, 2) and not np.isinf(p):
        raise ValueError("block norms support p in {1, 2, inf}")
    if f.l != 0 and p != 2:
        raise ValueError("p != 2 block norms need radial (l = 0) fields")
    eff_pot = pot if generator == "G_V" else PotentialSpec.zero(f.grid)
    if j_range is None:
        j_range = _besov_default_range(f, eff_pot, rule)
    blocks = dyadic_blocks([f], eff_pot, j_range, rule=rule, family=family)
    terms = np.array([
        2.0 ** (s * j) * _block_lp(blk[0], p)
        for j, blk in zip(j_range, blocks)
    ])
    if np.isinf(q):
        return float(np.max(terms))
    return float(np.sum(terms**q) ** (1.0 / q))


def _besov_default_range(f: ModeField, pot: PotentialSpec,
                         rule: StoneRule) -> list[int]:
    return auto_j_range(f, pot, tol=1e-8, j_start=(-6, 6))


def sobolev_norm(f: ModeField, s: float, pot: PotentialSpec,
                 generator: str = "G_V", **kwargs) -> float:
    """Homogeneous Sobolev norm: the (2, 2) member of the Besov family."""
    return besov_norm(f, s, 2, 2, pot, generator=generator, **kwargs)


def besov_norms_batch(fields, s: float, p, q, pot: PotentialSpec,
                      j_range, rule: StoneRule = DEFAULT_RULE,
                      family: WindowFamily = DEFAULT_FAMILY) -> np.ndarray:
    """Besov norms of several fields from one shared frequency scan."""
    blocks = dyadic_blocks(fields, pot, j_range, rule=rule, family=family)
    out = []
    for k in range(len(fields)):
        terms = np.array([
            2.0 ** (s * j) * _block_lp(blocks[i][k], p)
            for i, j in enumerate(j_range)
        ])
        if np.isinf(q):
            out.append(float(np.max(terms)))
        else:
            out.append(float(np.sum(terms**q) ** (1.0 / q)))
    return np.array(out)


def besov_equivalence_ratio(f_set, s: float, p, q, pot: PotentialSpec,
                            rule: StoneRule = DEFAULT_RULE) -> dict:
    """Extremal ratios of the with-potential to free-generator Besov norms.

    Only meaningful inside the equivalence window
    |s| < min(3/p, 2, 3(1 - 1/p)); outside it the request is refused.
    """
    p_inv = 0.0 if np.isinf(p) else 1.0 / p
    window = min(3.0 * p_inv, 2.0, 3.0 * (1.0 - p_inv))
    if not abs(s) < window:
        raise ValueError(
            f"s = {s} sits outside the equivalence window |s| < {window}")
    zero = PotentialSpec.zero(f_set[0].grid)
    j_lo, j_hi = 10, -10
    for f in f_set:
        rng = auto_j_range(f, pot, tol=1e-8, j_start=(-6, 6))
        j_lo, j_hi = min(j_lo, rng[0]), max(j_hi, rng[-1])
    j_range = list(range(j_lo, j_hi + 1))
    with_pot = besov_norms_batch(f_set, s, p, q, pot, j_range, rule=rule)
    without = besov_norms_batch(f_set, s, p, q, zero, j_range, rule=rule)
    ratios = with_pot / without
    return {
        "ratios": ratios,
        "min_ratio": float(np.min(ratios)),
        "max_ratio": float(np.max(ratios)),
    }
