"""Domains, radial grids, potentials, mode fields and weighted norms.

Everything downstream works with spherical-harmonic mode coefficients on a
panel-based radial quadrature grid.  A field with degree ``l`` represents the
3-D function ``u(r) Y_lm(x/|x|)`` with an orthonormal spherical harmonic, so
per-mode radial integrals against the measure ``r^2 dr`` reproduce the 3-D
norms exactly (the angular factor contributes 1 in L^2, and explicit
``sqrt(4 pi)`` factors in L^1 / L^inf for the radial degree ``l = 0``).

The grid uses composite Gauss-Lobatto panels.  Panel endpoints are grid nodes,
which keeps boundary values explicit and lets integral kernels with a kink on
the diagonal be applied by splitting every integral at the target node (see
:class:`RadialGreenApplier` in the resolvent modules).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

WHOLE_SPACE = "whole_space"
EXTERIOR_BALL = "exterior_ball"

_FOUR_PI = 4.0 * np.pi


class AdmissibilityError(ValueError):
    """A potential sample violates the two-sided decay bound."""


@dataclass(frozen=True)
class DomainSpec:
    """Whole space, or the exterior of a ball centred at the origin."""

    kind: str
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in (WHOLE_SPACE, EXTERIOR_BALL):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == EXTERIOR_BALL and not self.a > 0.0:
            raise ValueError("exterior_ball requires obstacle radius a > 0")

    @classmethod
    def whole_space(cls) -> "DomainSpec":
        return cls(WHOLE_SPACE)

    @classmethod
    def exterior_ball(cls, a: float) -> "DomainSpec":
        return cls(EXTERIOR_BALL, a)

    @property
    def inner_radius(self) -> float:
        return self.a if self.kind == EXTERIOR_BALL else 0.0


@dataclass(frozen=True)
class NormWeight:
    """Polynomial weight exponent: <r>^s with <r> = sqrt(1 + r^2)."""

    s: float


def bracket_weight(r: np.ndarray, s: float) -> np.ndarray:
    """<r>^s = (1 + r^2)^(s/2)."""
    return (1.0 + np.asarray(r) ** 2) ** (0.5 * s)


# ---------------------------------------------------------------------------
# Gauss-Lobatto reference machinery
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _lobatto_rule(q: int):
    """Nodes/weights of the q-point Gauss-Lobatto rule on [-1, 1].

    Interior nodes are the roots of P'_{q-1}; weights are
    2 / (q (q-1) P_{q-1}(x)^2).  Exact for polynomials of degree 2q - 3.
    """
    if q < 3:
        raise ValueError("Lobatto rule needs at least 3 points per panel")
    c = np.zeros(q)
    c[-1] = 1.0  # Legendre coefficients of P_{q-1}
    dc = np.polynomial.legendre.legder(c)
    interior = np.polynomial.legendre.legroots(dc)
    x = np.concatenate(([-1.0], np.sort(interior), [1.0]))
    pq = np.polynomial.legendre.legval(x, c)
    w = 2.0 / (q * (q - 1) * pq**2)
    return x, w


@lru_cache(maxsize=32)
def _legendre_vandermonde_inv(q: int) -> np.ndarray:
    """Map nodal values on the Lobatto nodes to Legendre coefficients."""
    x, _ = _lobatto_rule(q)
    V = np.polynomial.legendre.legvander(x, q - 1)
    return np.linalg.inv(V)


@lru_cache(maxsize=32)
def _partial_integral_matrix(q: int) -> np.ndarray:
    """Q[i, j] = integral from -1 to x_i of the j-th cardinal polynomial.

    Uses the exact Legendre antiderivative; exact for the degree-(q-1)
    interpolant, which is what makes integrals split at a grid node exact.
    """
    x, _ = _lobatto_rule(q)
    Vinv = _legendre_vandermonde_inv(q)
    # antiderivative of P_k vanishing at -1:
    #   k = 0 : x + 1 ;  k >= 1 : (P_{k+1}(x) - P_{k-1}(x)) / (2k + 1)
    A = np.zeros((q, q))
    A[:, 0] = x + 1.0
    P = np.polynomial.legendre.legvander(x, q)
    for k in range(1, q):
        A[:, k] = (P[:, k + 1] - P[:, k - 1]) / (2 * k + 1)
    return A @ Vinv


@lru_cache(maxsize=32)
def _derivative_matrix(q: int) -> np.ndarray:
    """D[i, j] = derivative of the j-th cardinal polynomial at x_i."""
    x, _ = _lobatto_rule(q)
    Vinv = _legendre_vandermonde_inv(q)
    c = np.eye(q)
    D = np.zeros((q, q))
    for k in range(q):
        dk = np.polynomial.legendre.legder(np.ascontiguousarray(c[:, k]))
        D[:, k] = np.polynomial.legendre.legval(x, dk)
    return D @ Vinv


def _cardinal_at(q: int, xs: np.ndarray) -> np.ndarray:
    """Evaluate the q Lobatto cardinal polynomials at points xs in [-1, 1]."""
    Vinv = _legendre_vandermonde_inv(q)
    V = np.polynomial.legendre.legvander(np.asarray(xs, dtype=float), q - 1)
    return V @ Vinv


# ---------------------------------------------------------------------------
# Radial grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss-Lobatto quadrature grid on [r_min, R_max].

    ``nodes`` are strictly increasing and include both endpoints; shared
    panel-edge nodes appear once, with their quadrature weights merged.
    ``weights`` carry the radial measure: sum(weights * f(nodes)) approximates
    the integral of f(r) r^2 dr, exactly so for polynomials f with
    deg f + 2 <= 2 * order - 3.
    """

    domain: DomainSpec
    panel_edges: np.ndarray
    order: int
    nodes: np.ndarray = field(repr=False)
    plain_weights: np.ndarray = field(repr=False)
    panel_node_index: np.ndarray = field(repr=False)  # (P, q) global indices

    def __post_init__(self):
        for name in ("panel_edges", "nodes", "plain_weights"):
            getattr(self, name).setflags(write=False)
        self.panel_node_index.setflags(write=False)
        object.__setattr__(self, "_matrix_cache", {})

    # -- basic geometry ---------------------------------------------------

    @property
    def r_min(self) -> float:
        return float(self.panel_edges[0])

    @property
    def r_max(self) -> float:
        return float(self.panel_edges[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def num_panels(self) -> int:
        return self.panel_edges.size - 1

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights with the r^2 measure folded in."""
        return self.plain_weights * self.nodes**2

    @property
    def node_spacing(self) -> float:
        return float(np.max(np.diff(self.nodes)))

    # -- panel interpolation / integration --------------------------------

    def _panel_scale(self, p: int) -> float:
        return 0.5 * (self.panel_edges[p + 1] - self.panel_edges[p])

    def integrate(self, samples: np.ndarray) -> complex:
        """Integral of the panelwise interpolant of ``samples`` (plain dr)."""
        return np.sum(self.plain_weights * samples)

    def prefix_matrix(self) -> np.ndarray:
        """PRE with (PRE @ F)_i = integral of interp(F) over [r_min, r_i].

        The home-panel part of each row uses the exact partial integral of
        the panel interpolant up to the node, so splitting any kernel at the
        target node is exact for panelwise-polynomial integrands.
        """
        return self._prefix_matrix_cached()

    def _prefix_matrix_cached(self):
        cache = _grid_matrix_cache(self)
        if "prefix" not in cache:
            q = self.order
            Q = _partial_integral_matrix(q)
            M = self.size
            pre = np.zeros((M, M))
            running = np.zeros(M)
            for p in range(self.num_panels):
                idx = self.panel_node_index[p]
                block = self._panel_scale(p) * Q
                for loc, i in enumerate(idx):
                    pre[i] = running
                    pre[i, idx] += block[loc]
                running = pre[idx[-1]].copy()
            cache["prefix"] = pre
        return cache["prefix"]

    def suffix_matrix(self) -> np.ndarray:
        """SUF with (SUF @ F)_i = integral of interp(F) over [r_i, R_max]."""
        cache = _grid_matrix_cache(self)
        if "suffix" not in cache:
            cache["suffix"] = self.plain_weights[None, :] - self.prefix_matrix()
        return cache["suffix"]

    def derivative(self, samples: np.ndarray) -> np.ndarray:
        """Panelwise spectral derivative of sampled values."""
        D = _derivative_matrix(self.order)
        out = np.zeros_like(np.asarray(samples, dtype=complex))
        counts = np.zeros(self.size)
        for p in range(self.num_panels):
            idx = self.panel_node_index[p]
            vals = (D @ np.asarray(samples, dtype=complex)[idx]) / self._panel_scale(p)
            out[idx] += vals
            counts[idx] += 1.0
        out /= counts  # average the two one-sided values at shared edges
        if np.isrealobj(samples):
            return out.real
        return out

    def second_derivative(self, samples: np.ndarray) -> np.ndarray:
        return self.derivative(self.derivative(samples))

    def _locate_panels(self, r: np.ndarray) -> np.ndarray:
        p = np.searchsorted(self.panel_edges, r, side="right") - 1
        return np.clip(p, 0, self.num_panels - 1)

    def interpolate(self, samples: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Evaluate the panelwise interpolant at arbitrary radii."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        vals = np.asarray(samples, dtype=complex)
        out = np.zeros(r.shape, dtype=complex)
        panels = self._locate_panels(r)
        for p in np.unique(panels):
            sel = panels == p
            lo, hi = self.panel_edges[p], self.panel_edges[p + 1]
            xs = 2.0 * (r[sel] - lo) / (hi - lo) - 1.0
            C = _cardinal_at(self.order, xs)
            out[sel] = C @ vals[self.panel_node_index[p]]
        if np.isrealobj(samples):
            return out.real
        return out

    def integrate_upto(self, samples: np.ndarray, r_cut: float) -> complex:
        """Integral of the interpolant over [r_min, r_cut] (plain dr)."""
        if not self.r_min <= r_cut <= self.r_max + 1e-12:
            raise ValueError(f"cut radius {r_cut} outside grid range")
        r_cut = min(r_cut, self.r_max)
        vals = np.asarray(samples, dtype=complex)
        p = int(self._locate_panels(np.array([r_cut]))[0])
        _, w = _lobatto_rule(self.order)
        total = 0.0 + 0.0j
        for pp in range(p):
            idx = self.panel_node_index[pp]
            total += self._panel_scale(pp) * np.sum(w * vals[idx])
        lo, hi = self.panel_edges[p], self.panel_edges[p + 1]
        x_cut = 2.0 * (r_cut - lo) / (hi - lo) - 1.0
        q = self.order
        coeffs = _legendre_vandermonde_inv(q) @ vals[self.panel_node_index[p]]
        P = np.polynomial.legendre.legvander(np.array([x_cut]), q)[0]
        anti = np.zeros(q)
        anti[0] = x_cut + 1.0
        for k in range(1, q):
            anti[k] = (P[k + 1] - P[k - 1]) / (2 * k + 1)
        total += self._panel_scale(p) * np.sum(coeffs * anti)
        if np.isrealobj(samples):
            return total.real
        return total


def _grid_matrix_cache(grid: RadialGrid) -> dict:
    return grid._matrix_cache


def complex_prefix_suffix(grid: RadialGrid):
    """Complex copies of the prefix/suffix operators (fast complex matvecs)."""
    cache = _grid_matrix_cache(grid)
    if "prefix_c" not in cache:
        cache["prefix_c"] = grid.prefix_matrix().astype(complex)
        cache["suffix_c"] = grid.suffix_matrix().astype(complex)
    return cache["prefix_c"], cache["suffix_c"]


def build_grid(
    domain: DomainSpec,
    r_max: float,
    m: int,
    order: int = 8,
    r_min: float | None = None,
) -> RadialGrid:
    """Build a composite Lobatto grid with at least ``m`` nodes.

    For ``exterior_ball`` the inner endpoint is the obstacle radius; for
    ``whole_space`` it is a tiny positive radius (the r^2 measure keeps all
    integrals regular there).
    """
    if m < 16:
        raise ValueError("need at least 16 grid nodes")
    if r_min is None:
        r_min = domain.a if domain.kind == EXTERIOR_BALL else 1e-7 * r_max
    if domain.kind == EXTERIOR_BALL and r_max <= domain.a:
        raise ValueError("truncation radius must exceed the obstacle radius")
    if order < 4:
        raise ValueError("panel order too small for the requested quadrature")
    panels = int(np.ceil((m - 1) / (order - 1)))
    edges = np.linspace(r_min, r_max, panels + 1)
    return grid_from_edges(domain, edges, order)


def grid_from_edges(domain: DomainSpec, edges: np.ndarray, order: int) -> RadialGrid:
    """Assemble a grid from explicit panel edges (shared nodes merged)."""
    edges = np.asarray(edges, dtype=float)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    x, w = _lobatto_rule(order)
    P = edges.size - 1
    nodes: list[float] = []
    weights: list[float] = []
    index = np.zeros((P, order), dtype=int)
    for p in range(P):
        lo, hi = edges[p], edges[p + 1]
        scale = 0.5 * (hi - lo)
        rs = lo + scale * (x + 1.0)
        for loc in range(order):
            if p > 0 and loc == 0:
                # shared edge: merge with the last node of the previous panel
                index[p, 0] = len(nodes) - 1
                weights[-1] += scale * w[0]
            else:
                index[p, loc] = len(nodes)
                nodes.append(rs[loc])
                weights.append(scale * w[loc])
    nodes_arr = np.array(nodes)
    nodes_arr[index[:, 0]] = edges[:-1]  # pin edge nodes exactly
    nodes_arr[index[-1, -1]] = edges[-1]
    return RadialGrid(
        domain=domain,
        panel_edges=edges,
        order=order,
        nodes=nodes_arr,
        plain_weights=np.array(weights),
        panel_node_index=index,
    )


# ---------------------------------------------------------------------------
# Mode fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeField:
    """Radial coefficient of one spherical-harmonic mode."""

    l: int
    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        if self.l < 0:
            raise ValueError("mode degree must be non-negative")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.size,):
            raise ValueError("field length does not match the grid")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    def with_values(self, values: np.ndarray) -> "ModeField":
        return ModeField(self.l, values, self.grid)

    def __add__(self, other: "ModeField") -> "ModeField":
        _check_same_mode(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "ModeField") -> "ModeField":
        _check_same_mode(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, alpha: complex) -> "ModeField":
        return self.with_values(alpha * self.values)

    __rmul__ = __mul__


def _check_same_mode(u: ModeField, v: ModeField):
    if u.l != v.l or u.grid is not v.grid:
        raise ValueError("fields live on different modes or grids")


@dataclass(frozen=True)
class CauchyData:
    """Initial displacement and velocity of one mode."""

    f: ModeField
    g: ModeField

    def __post_init__(self):
        _check_same_mode(self.f, self.g)

    @property
    def l(self) -> int:
        return self.f.l

    @property
    def grid(self) -> RadialGrid:
        return self.f.grid


def smooth_bump(r: np.ndarray, center: float, width: float) -> np.ndarray:
    """C^infinity bump exp(1 - 1/(1 - s^2)) on |r - center| < width, else 0.

    Tail values below 1e-30 are flushed to exact zero: they are far beneath
    every tolerance in play, and the subnormal floats they otherwise seed
    stall the dense linear algebra downstream.
    """
    s = (np.asarray(r, dtype=float) - center) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    out[out < 1e-30] = 0.0
    return out


def bump_field(grid: RadialGrid, center: float, width: float, l: int = 0,
               amplitude: float = 1.0) -> ModeField:
    return ModeField(l, amplitude * smooth_bump(grid.nodes, center, width), grid)


def cos_bump(r: np.ndarray, center: float, width: float, power: int = 16) -> np.ndarray:
    """cos^power bump on |r - center| < width (zero of order ``power`` at the
    edges, analytic inside).

    Piecewise polynomial-like, so panel interpolation is essentially exact
    when the support edges sit on panel edges; preferred for oracle-grade
    comparisons where the exp-bump's edge layers would dominate the error.
    """
    s = (np.asarray(r, dtype=float) - center) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.cos(0.5 * np.pi * s[inside]) ** power
    return out


def cos_bump_field(grid: RadialGrid, center: float, width: float, l: int = 0,
                   amplitude: float = 1.0, power: int = 16) -> ModeField:
    return ModeField(l, amplitude * cos_bump(grid.nodes, center, width, power), grid)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """Radial potential with the two-sided decay bound.

    Admission requires, at every grid node,
    ``-c0 r^-delta0 <= v(r) <= c1 r^-delta0`` with 0 < c0 < 1/4, c1 > 0 and
    delta0 > 2.  Compactly supported smooth profiles satisfy this for any
    delta0 once the amplitude is small enough.
    """

    c0: float
    c1: float
    delta0: float
    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        if not 0.0 < self.c0 < 0.25:
            raise AdmissibilityError(
                f"c0 = {self.c0} violates the admission window 0 < c0 < 1/4")
        if not self.c1 > 0.0:
            raise AdmissibilityError("c1 must be positive")
        if not self.delta0 > 2.0:
            raise AdmissibilityError("decay exponent delta0 must exceed 2")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError("potential sample length does not match the grid")
        bound = self.grid.nodes ** (-self.delta0)
        low_bad = v < -self.c0 * bound
        high_bad = v > self.c1 * bound
        if np.any(low_bad) or np.any(high_bad):
            i = int(np.argmax(low_bad | high_bad))
            raise AdmissibilityError(
                f"potential leaves the decay envelope at r = {self.grid.nodes[i]:.4g}: "
                f"v = {v[i]:.4g}, allowed [{-self.c0 * bound[i]:.4g}, "
                f"{self.c1 * bound[i]:.4g}]")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @classmethod
    def zero(cls, grid: RadialGrid) -> "PotentialSpec":
        return cls(c0=0.1, c1=1.0, delta0=3.0, values=np.zeros(grid.size), grid=grid)

    @classmethod
    def bump(cls, grid: RadialGrid, center: float, width: float, amplitude: float,
             c0: float = 0.2, c1: float = 1.0, delta0: float = 2.5) -> "PotentialSpec":
        values = amplitude * smooth_bump(grid.nodes, center, width)
        return cls(c0=c0, c1=c1, delta0=delta0, values=values, grid=grid)

    @classmethod
    def unchecked(cls, grid: RadialGrid, values: np.ndarray,
                  delta0: float = 2.5) -> "PotentialSpec":
        """Bypass admission (negative controls only, e.g. deep wells)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "c0", float("nan"))
        object.__setattr__(obj, "c1", float("nan"))
        object.__setattr__(obj, "delta0", delta0)
        v = np.asarray(values, dtype=float).copy()
        v.setflags(write=False)
        object.__setattr__(obj, "values", v)
        object.__setattr__(obj, "grid", grid)
        return obj

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    @property
    def support_indices(self) -> np.ndarray:
        return np.nonzero(self.values)[0]


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def weighted_l2_norm(u: ModeField, w: NormWeight | float) -> float:
    """Per-mode weighted L^2 norm: ( sum w_i <r_i>^{2s} |u_i|^2 )^(1/2)."""
    s = w.s if isinstance(w, NormWeight) else float(w)
    g = u.grid
    return float(np.sqrt(np.sum(g.weights * bracket_weight(g.nodes, 2.0 * s)
                                * np.abs(u.values) ** 2)))


def l2_norm(u: ModeField) -> float:
    return weighted_l2_norm(u, 0.0)


def _require_radial(u: ModeField, what: str):
    if u.l != 0:
        raise ValueError(
            f"{what} is only defined for radial (l = 0) fields, got l = {u.l}")


def sup_norm(u: ModeField) -> float:
    """Sup over nodes of the 3-D field value |u(r) Y_00| = |u| / sqrt(4 pi)."""
    _require_radial(u, "the L^inf norm")
    return float(np.max(np.abs(u.values)) / np.sqrt(_FOUR_PI))


def l1_norm(u: ModeField) -> float:
    """3-D L^1 norm of u(r) Y_00: sqrt(4 pi) * integral |u| r^2 dr."""
    _require_radial(u, "the L^1 norm")
    return float(np.sqrt(_FOUR_PI) * np.sum(u.grid.weights * np.abs(u.values)))


def lp_norm(u: ModeField, p: float) -> float:
    """3-D L^p norm of the radial field u(r) Y_00 (l = 0 only)."""
    if np.isinf(p):
        return sup_norm(u)
    if p == 2:
        return l2_norm(u)
    _require_radial(u, f"the L^{p} norm")
    amp = np.abs(u.values) / np.sqrt(_FOUR_PI)
    return float((_FOUR_PI * np.sum(u.grid.weights * amp**p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Radial Helmholtz residual (independent differential check)
# ---------------------------------------------------------------------------

def helmholtz_residual(grid: RadialGrid, l: int, lam: float, u: np.ndarray,
                       f: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    """Nodewise residual of (-Delta_l + v - lam^2) u - f.

    Differentiation is panelwise spectral, so the residual accuracy is set by
    how well the grid resolves u, not by a fixed finite-difference order.
    """
    r = grid.nodes
    du = grid.derivative(u)
    ddu = grid.derivative(du)
    lap = ddu + 2.0 * du / r - l * (l + 1) * u / r**2
    resid = -lap - lam**2 * u - f
    if v is not None:
        resid = resid + v * u
    return resid


def relative_residual(grid: RadialGrid, l: int, lam: float, u: np.ndarray,
                      f: np.ndarray, v: np.ndarray | None = None,
                      edge_panels: int = 1) -> float:
    """Sup of the interior residual, scaled by the equation's size.

    ``edge_panels`` panels at each end are excluded: endpoint differentiation
    is one-sided and, for whole-space grids, the 1/r terms at the innermost
    nodes are not meaningful.
    """
    resid = helmholtz_residual(grid, l, lam, u, f, v)
    lo = grid.panel_edges[edge_panels]
    hi = grid.panel_edges[-(edge_panels + 1)]
    interior = (grid.nodes > lo) & (grid.nodes < hi)
    scale = np.max(np.abs(f)) + lam**2 * np.max(np.abs(u))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(resid[interior])) / scale)
