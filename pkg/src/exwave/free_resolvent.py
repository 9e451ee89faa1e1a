"""Free-space resolvent kernels at fixed frequency: boundary values
R0(lam^2 +- i0), the squared operator R0^2, the boundary-value difference
R0(+) - R0(-), and the zero-energy (Newtonian) limit.

The +-i0 limits are realized exactly by selecting the outgoing/incoming
phase e^{+-i lam rho}; no numerical epsilon -> 0 is ever taken (an epsilon
kernel exists only as a validation helper).  Per spherical-harmonic mode the
kernel separates into a regular and an outgoing radial solution,

    K_l(r, r') = scale * u_reg(min(r, r')) * u_out(max(r, r')),

and :class:`RadialGreenApplier` applies it by splitting every integral at the
target node, which removes the diagonal derivative kink from the quadrature.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .core import EXTERIOR_BALL, DomainSpec, ModeField, RadialGrid

_FOUR_PI = 4.0 * np.pi


class ResolventSign(enum.Enum):
    """Boundary value selector: +i0 (outgoing) or -i0 (incoming)."""

    PLUS = +1
    MINUS = -1

    @property
    def orientation(self) -> int:
        return self.value

    @property
    def conjugate(self) -> "ResolventSign":
        return ResolventSign.MINUS if self is ResolventSign.PLUS else ResolventSign.PLUS


PLUS = ResolventSign.PLUS
MINUS = ResolventSign.MINUS


# ---------------------------------------------------------------------------
# Point kernels
# ---------------------------------------------------------------------------

def free_kernel_point(lam: float, sign: ResolventSign, rho) -> np.ndarray | complex:
    """Kernel of R0(lam^2 +- i0): e^{+-i lam rho} / (4 pi rho)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("kernel evaluation on the singular diagonal (rho = 0)")
    if lam < 0.0:
        raise ValueError("frequency must be non-negative")
    out = np.exp(1j * sign.orientation * lam * rho) / (_FOUR_PI * rho)
    return out if out.ndim else complex(out)


def free_kernel_point_eps(lam: float, sign: ResolventSign, rho, eps: float):
    """Kernel at lam^2 +- i eps through the principal branch of sqrt.

    Validation helper only: converges first-order in eps to
    :func:`free_kernel_point`.
    """
    rho = np.asarray(rho, dtype=float)
    z = lam**2 + 1j * sign.orientation * eps
    kappa = np.sqrt(-z + 0j)  # principal branch; Re kappa > 0
    out = np.exp(-kappa * rho) / (_FOUR_PI * rho)
    return out if out.ndim else complex(out)


def difference_kernel_point(lam: float, rho) -> np.ndarray | complex:
    """Kernel of R0(+) - R0(-): (i / 2 pi) sin(lam rho) / rho, entire in rho."""
    rho = np.asarray(rho, dtype=float)
    out = np.asarray((1j / (2.0 * np.pi)) * lam * np.sinc(lam * rho / np.pi))
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# Radial solutions
# ---------------------------------------------------------------------------

def spherical_hankel(l: int, z, sign: ResolventSign, derivative: bool = False):
    """h_l^{(1)} (outgoing, sign +) or h_l^{(2)} (incoming, sign -)."""
    return (spherical_jn(l, z, derivative)
            + 1j * sign.orientation * spherical_yn(l, z, derivative))


def sph_jn_fast(l: int, z: np.ndarray) -> np.ndarray:
    """j_l with closed forms for l <= 1 (hot path; scipy wrapper is costly)."""
    if l == 0:
        return np.sinc(z / np.pi)
    if l == 1:
        with np.errstate(invalid="ignore", divide="ignore"):
            out = (np.sinc(z / np.pi) - np.cos(z)) / z
        # series below the cancellation knee
        return np.where(np.abs(z) < 1e-3, z / 3.0 - z**3 / 30.0, out)
    return spherical_jn(l, z)


def sph_yn_fast(l: int, z: np.ndarray) -> np.ndarray:
    if l == 0:
        return -np.cos(z) / z
    if l == 1:
        return -np.cos(z) / z**2 - np.sin(z) / z
    return spherical_yn(l, z)


def sph_hankel_fast(l: int, z: np.ndarray, sign: ResolventSign) -> np.ndarray:
    if l <= 1:
        return sph_jn_fast(l, z) + 1j * sign.orientation * sph_yn_fast(l, z)
    return spherical_hankel(l, z, sign)


def free_solution_pair(l: int, lam: float, sign: ResolventSign, r: np.ndarray):
    """Regular/outgoing radial pair and normalization for the free kernel.

    K_l(r, r') = (+-i lam) j_l(lam r_<) h_l^{(1/2)}(lam r_>); the Wronskian of
    (j_l, h_l) fixes the prefactor.
    """
    z = lam * np.asarray(r, dtype=float)
    u_reg = sph_jn_fast(l, z).astype(complex)
    u_out = sph_hankel_fast(l, z, sign)
    scale = 1j * sign.orientation * lam
    return u_reg, u_out, scale


def zero_energy_pair(l: int, r: np.ndarray):
    """Newtonian mode pair: r_<^l / ((2l+1) r_>^{l+1})."""
    r = np.asarray(r, dtype=float)
    u_reg = (r**l).astype(complex)
    u_out = (r ** (-(l + 1))).astype(complex)
    scale = 1.0 / (2 * l + 1)
    return u_reg, u_out, scale


# ---------------------------------------------------------------------------
# Green applier and mode resolvents
# ---------------------------------------------------------------------------

class RadialGreenApplier:
    """Applies a separable radial Green kernel on the grid.

    u(r_i) = scale * [ u_out(r_i) * int_{r<r_i} u_reg g r^2 dr
                     + u_reg(r_i) * int_{r>r_i} u_out g r^2 dr ]

    Both integrals integrate the panelwise polynomial interpolant of the
    integrand exactly, split at r_i, so only the smooth one-sided kernel
    branches are ever sampled.
    """

    def __init__(self, grid: RadialGrid, u_reg: np.ndarray, u_out: np.ndarray,
                 scale: complex):
        self.grid = grid
        self.u_reg = np.asarray(u_reg, dtype=complex)
        self.u_out = np.asarray(u_out, dtype=complex)
        self.scale = complex(scale)
        self._r2 = grid.nodes**2

    def apply(self, g: np.ndarray) -> np.ndarray:
        """Apply to one source (M,) or to stacked columns (M, k)."""
        from .core import complex_prefix_suffix

        g = np.asarray(g, dtype=complex)
        pre, suf = complex_prefix_suffix(self.grid)
        if g.ndim == 1:
            lower = pre @ (self.u_reg * self._r2 * g)
            upper = suf @ (self.u_out * self._r2 * g)
            return self.scale * (self.u_out * lower + self.u_reg * upper)
        out = np.empty_like(g)
        freg = (self.u_reg * self._r2)[:, None] * g
        fout = (self.u_out * self._r2)[:, None] * g
        for k in range(g.shape[1]):
            out[:, k] = self.u_out * (pre @ freg[:, k]) \
                + self.u_reg * (suf @ fout[:, k])
        return self.scale * out

    def matrix(self) -> np.ndarray:
        """Dense form N with N @ g identical to :meth:`apply`."""
        pre = self.grid.prefix_matrix()
        suf = self.grid.suffix_matrix()
        lower = (self.u_out[:, None] * pre) * (self.u_reg * self._r2)[None, :]
        upper = (self.u_reg[:, None] * suf) * (self.u_out * self._r2)[None, :]
        return self.scale * (lower + upper)

    def kernel_samples(self) -> np.ndarray:
        """Pointwise kernel values K(r_i, r_j) (symmetric)."""
        r = self.grid.nodes
        lo = np.minimum.outer(np.arange(r.size), np.arange(r.size))
        hi = np.maximum.outer(np.arange(r.size), np.arange(r.size))
        return self.scale * self.u_reg[lo] * self.u_out[hi]


@dataclass
class ModeResolvent:
    """Discretized kernel of a mode resolvent at fixed (l, lam, sign)."""

    l: int
    lam: float
    sign: ResolventSign
    grid: RadialGrid
    domain: DomainSpec
    applier: RadialGreenApplier
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        """Kernel samples with quadrature weights and r^2 measure folded in."""
        if "matrix" not in self._cache:
            self._cache["matrix"] = self.applier.matrix()
        return self._cache["matrix"]

    @property
    def kernel(self) -> np.ndarray:
        """Pointwise kernel samples, before weight-folding."""
        if "kernel" not in self._cache:
            self._cache["kernel"] = self.applier.kernel_samples()
        return self._cache["kernel"]

    def apply(self, g: ModeField | np.ndarray) -> ModeField | np.ndarray:
        if isinstance(g, ModeField):
            return g.with_values(self.applier.apply(g.values))
        return self.applier.apply(g)


def assemble_free_mode_resolvent(l: int, lam: float, sign: ResolventSign,
                                 grid: RadialGrid) -> ModeResolvent:
    """Mode-l reduction of the free kernel e^{+-i lam rho}/(4 pi rho)."""
    if lam <= 0.0:
        raise ValueError("lam must be positive; use apply_zero_energy at lam = 0")
    u_reg, u_out, scale = free_solution_pair(l, lam, sign, grid.nodes)
    applier = RadialGreenApplier(grid, u_reg, u_out, scale)
    return ModeResolvent(l, lam, sign, grid, DomainSpec.whole_space(), applier)


def apply_zero_energy(g: ModeField, grid: RadialGrid | None = None) -> ModeField:
    """Newtonian potential of the mode-l source (free space, lam = 0)."""
    grid = grid or g.grid
    u_reg, u_out, scale = zero_energy_pair(g.l, grid.nodes)
    applier = RadialGreenApplier(grid, u_reg, u_out, scale)
    out = applier.apply(g.values)
    if np.isrealobj(np.real_if_close(g.values, tol=1)) and not np.any(g.values.imag):
        out = out.real.astype(complex)
    return g.with_values(out)


# ---------------------------------------------------------------------------
# Squared resolvent and boundary-value difference (l = 0 closed forms)
# ---------------------------------------------------------------------------

def _squared_kernel_l0(lam: float, sign: ResolventSign, r: np.ndarray,
                       rp: np.ndarray) -> np.ndarray:
    """Mode-0 kernel of R0^2: angular average of (+-i/(8 pi lam)) e^{+-i lam rho}.

    The rho-integral has the elementary antiderivative
    F(rho) = e^{s i lam rho} (-s i rho / lam + 1 / lam^2); the resulting kernel
    is C^1 across the diagonal, so plain product quadrature applies.
    """
    s = sign.orientation
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)

    def F(rho):
        return np.exp(1j * s * lam * rho) * (-1j * s * rho / lam + 1.0 / lam**2)

    inner = F(r + rp) - F(np.abs(r - rp))
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = (1j * s / (8.0 * np.pi * lam)) * (2.0 * np.pi / (r * rp)) * inner
    # removable limit at r -> 0 (evaluation radius at or near the origin)
    tiny = lam * np.minimum(r, rp) < 1e-6
    if np.any(tiny):
        limit = (1j * s / (2.0 * lam)) * np.exp(1j * s * lam * np.maximum(r, rp))
        kern = np.where(tiny, limit, kern)
    return kern


def apply_free_resolvent_squared(g: ModeField, lam: float, sign: ResolventSign,
                                 r_eval: np.ndarray | None = None):
    """Apply R0(lam^2 +- i0)^2 to a radial (l = 0) source.

    Satisfies sup |out| <= ||g||_L1 / (8 pi lam) with equality approached by
    sources whose phase cancels e^{+-i lam r'} at the origin.  If ``r_eval``
    is given, returns raw values at those radii (0 allowed) instead of a
    field on the grid.
    """
    if g.l != 0:
        raise ValueError("squared-resolvent application is radial (l = 0) only")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    grid = g.grid
    src = grid.weights * g.values
    if r_eval is None:
        kern = _squared_kernel_l0(lam, sign, grid.nodes[:, None], grid.nodes[None, :])
        return g.with_values(kern @ src)
    r_eval = np.atleast_1d(np.asarray(r_eval, dtype=float))
    kern = _squared_kernel_l0(lam, sign, r_eval[:, None], grid.nodes[None, :])
    return kern @ src


def apply_difference(g: ModeField, lam: float) -> ModeField:
    """[R0(+) - R0(-)] g through the entire kernel (i/2 pi) sin(lam rho)/rho.

    Per mode the kernel is the rank-one 2 i lam j_l(lam r) j_l(lam r'), which
    coincides exactly with the split-quadrature difference of the two signed
    applications.
    """
    if lam < 0.0:
        raise ValueError("frequency must be non-negative")
    grid = g.grid
    if lam == 0.0:
        return g.with_values(np.zeros(grid.size, dtype=complex))
    j = spherical_jn(g.l, lam * grid.nodes)
    moment = np.sum(grid.weights * j * g.values)
    return g.with_values(2j * lam * j * moment)


# ---------------------------------------------------------------------------
# Outgoing tails
# ---------------------------------------------------------------------------

def outgoing_tail_integral(l: int, lam: float, sign: ResolventSign,
                           b: float) -> complex:
    """Abel-regularized integral of h_l(lam r)^2 r^2 dr over [b, infinity).

    Needed to complete truncated compositions R(R f): the outgoing part of
    R f beyond the grid contributes this closed-form moment.  Derived from
    the lambda-derivative Wronskian identity for radial Helmholtz solutions;
    for l = 0 it reduces to -i e^{2 i lam b} / (2 lam^3).
    """
    z = lam * b
    h = spherical_hankel(l, z, sign)
    hp = spherical_hankel(l, z, sign, derivative=True)
    # B/r^2 = -h h' - (z - l(l+1)/z) h^2 - z h'^2, from h'' via the radial ODE
    B = b**2 * (-h * hp - (z - l * (l + 1) / z) * h**2 - z * hp**2)
    return complex(B / (2.0 * lam))
