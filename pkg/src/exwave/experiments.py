"""Named experiments: one callable per acceptance criterion.

Each experiment builds its own grid and data sized for its tolerance,
runs deterministically, and returns an :class:`ExperimentResult` with
per-sample rows (value, reference bound, ratio) plus an overall pass flag.
The registry at the bottom is what the command-line runner executes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core, decay, oracle, spectral
from .core import CauchyData, DomainSpec, ModeField, PotentialSpec
from .free_resolvent import (
    MINUS,
    PLUS,
    apply_free_resolvent_squared,
    assemble_free_mode_resolvent,
    difference_kernel_point,
)
from .obstacle_resolvent import verify_weighted_bound
from .potential_resolvent import (
    perturbed_weighted_norm_scan,
    resonance_margin_zero,
    rv_difference_apply,
    uniform_inverse_scan,
)


@dataclass
class ExperimentResult:
    """Rows and verdict of one experiment run."""

    experiment_id: str
    theorem_ref: str
    samples: list = field(default_factory=list)  # (t_or_lambda, value, bound, ratio)
    slope: float | None = None
    slope_ci: float | None = None
    passed: bool = False
    details: dict = field(default_factory=dict)

    def add(self, x: float, value: float, bound: float | None = None):
        ratio = value / bound if bound else None
        self.samples.append((float(x), float(value), bound, ratio))


DYADIC_TIMES = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def _uniform_grid(domain: DomainSpec, r_max: float, panel: float,
                  order: int = 8) -> core.RadialGrid:
    r_lo = domain.a if domain.kind == core.EXTERIOR_BALL else 1e-7 * r_max
    panels = int(np.ceil((r_max - r_lo) / panel))
    edges = np.linspace(r_lo, r_max, panels + 1)
    return core.grid_from_edges(domain, edges, order)


# ---------------------------------------------------------------------------
# 1. free dispersive decay
# ---------------------------------------------------------------------------

def run_free_dispersive(fast: bool = False) -> ExperimentResult:
    """Block j = 0 sup-norm decay t^-1 in free space, plus the closed-form
    propagator match at early times.

    The rate is fitted on the outgoing front (r > t/2): a j = 0 block is
    ~ 2 units wide in space, so at t = 2, 4 the global sup still sits on the
    near-zone wake at the origin, which dies off-exponent (the full-sup fit
    is reported and must respect the upper-bound slope <= -0.85).
    """
    res = ExperimentResult("free_dispersive", "EQ:desired")
    domain = DomainSpec.whole_space()
    times = np.array(DYADIC_TIMES[: 4 if fast else 6])

    # block flow on a long coarse grid (spectral content is [1/2, 2]);
    # half-octave times thicken the asymptotic window for the rate fit
    t_lo = 8.0 if fast else 16.0
    extra = t_lo * 2.0 ** (0.5 * np.arange(1, 2 * int(np.log2(times[-1] / t_lo)), 2))
    all_times = np.unique(np.concatenate([times, extra]))
    grid = _uniform_grid(domain, float(times[-1]) + 8.0, 1.25)
    g_block = core.cos_bump_field(grid, 0.0, 1.5)
    pot = PotentialSpec.zero(grid)
    disp = decay.dispersive_experiment(g_block, pot, domain, j=0, times=all_times)
    tail = all_times >= t_lo
    fit = decay.fit_decay_exponent(all_times[tail], disp["front_sup_norms"][tail])
    res.slope, res.slope_ci = fit.slope, fit.ci
    dyadic = np.isin(all_times, times)
    for t, v, ratio in zip(all_times[dyadic], disp["sup_norms"][dyadic],
                           disp["envelope_ratio"][dyadic]):
        res.add(t, v, bound=v / ratio)

    # closed-form propagator match
    gridk = _uniform_grid(domain, 16.0, 0.25)
    data = CauchyData(core.cos_bump_field(gridk, 2.0, 1.2),
                      core.cos_bump_field(gridk, 2.0, 1.2, amplitude=0.7))
    potk = PotentialSpec.zero(gridk)
    outs = spectral.propagate_series([1.0, 2.0, 4.0], data, potk)
    w = gridk.weights
    kir_errs = []
    for out in outs:
        ref = oracle.kirchhoff_free_propagate(out.t, data)
        num = np.sum(w * np.abs(out.u.values - ref.u.values) ** 2)
        den = np.sum(w * np.abs(ref.u.values) ** 2)
        kir_errs.append(float(np.sqrt(num / den)))
    slope_ok = abs(fit.slope + 1.0) <= 0.05
    full_ok = disp["fit"].slope <= -0.85
    kirchhoff_ok = max(kir_errs) <= 1e-3
    res.passed = slope_ok and full_ok and kirchhoff_ok
    res.details = {
        "front_slope": fit.slope, "slope_tolerance": 0.05,
        "full_sup_slope": disp["fit"].slope, "full_sup_bound": -0.85,
        "kirchhoff_rel_l2": kir_errs, "kirchhoff_tolerance": 1e-3,
    }
    return res


# ---------------------------------------------------------------------------
# 2. local energy decay
# ---------------------------------------------------------------------------

def run_local_energy_decay(fast: bool = False) -> ExperimentResult:
    """Exterior ball: fitted E_R slope <= -1.7 with and without potential,
    plus the exact free-space Huygens window."""
    res = ExperimentResult("local_energy_decay", "eq.LED6")
    domain = DomainSpec.exterior_ball(1.0)
    times = np.array(DYADIC_TIMES[: 4 if fast else 6])
    grid = _uniform_grid(domain, float(times[-1]) + 6.0, 0.45)
    data = CauchyData(core.cos_bump_field(grid, 2.4, 1.2),
                      core.cos_bump_field(grid, 2.4, 1.2, amplitude=-0.6))
    R = 4.0
    slopes = {}
    for tag, pot in (("V=0", PotentialSpec.zero(grid)),
                     ("V=bump", PotentialSpec.bump(grid, 2.2, 0.8, -0.015))):
        fit, energies = decay.energy_decay_experiment(data, pot, domain, R, times)
        slopes[tag] = fit.slope
        for t, e in zip(times, energies):
            res.add(t, e)
        if tag == "V=0":
            res.slope, res.slope_ci = fit.slope, fit.ci

    # free-space Huygens control via the closed form
    gridf = _uniform_grid(DomainSpec.whole_space(), 12.0, 0.25)
    dataf = CauchyData(core.cos_bump_field(gridf, 0.55, 0.45),
                       core.cos_bump_field(gridf, 0.55, 0.45, amplitude=0.8))
    e_init = oracle.discrete_energy(oracle.kirchhoff_free_propagate(0.0, dataf))
    huygens = []
    for t in (3.5, 5.0, 8.0):
        k = oracle.kirchhoff_free_propagate(t, dataf)
        huygens.append(decay.local_energy(k, 2.0) / e_init)
    res.passed = (all(s <= -1.7 for s in slopes.values())
                  and max(huygens) <= 1e-6)
    res.details = {"slopes": slopes, "slope_bound": -1.7,
                   "huygens_ratio": huygens, "huygens_tolerance": 1e-6}
    return res


# ---------------------------------------------------------------------------
# 3. Littlewood-Paley partition
# ---------------------------------------------------------------------------

def run_lp_partition(fast: bool = False) -> ExperimentResult:
    res = ExperimentResult("lp_partition", "eq.eq.Ia_1")
    lams = np.logspace(-3.0, 3.0, 1000)
    dev = spectral.partition_check(lams)
    res.add(float(lams[0]), dev, bound=1e-12)
    res.passed = dev <= 1e-12
    res.details = {"max_deviation": dev, "tolerance": 1e-12,
                   "grid_points": len(lams)}
    return res


# ---------------------------------------------------------------------------
# 4. kernel constants
# ---------------------------------------------------------------------------

def run_kernel_constants(fast: bool = False) -> ExperimentResult:
    """Saturation of the 1/(8 pi lam) bound for R0^2 and the diagonal limit
    (i/2 pi) lam of the boundary-value difference kernel."""
    res = ExperimentResult("kernel_constants", "EQ:LLinfn")
    domain = DomainSpec.whole_space()
    grid = _uniform_grid(domain, 10.0, 0.2)
    sat_errs = []
    for lam in (1.0, 2.0, 4.0):
        profile = core.cos_bump(grid.nodes, 3.0, 1.0)
        g = ModeField(0, profile * np.exp(-1j * lam * grid.nodes), grid)
        at_origin = apply_free_resolvent_squared(g, lam, PLUS, r_eval=[0.0])[0]
        sup3d = abs(at_origin) / np.sqrt(4.0 * np.pi)
        ratio = sup3d * 8.0 * np.pi * lam / core.l1_norm(g)
        sat_errs.append(abs(ratio - 1.0))
        res.add(lam, ratio, bound=1.0)
    diag_errs = []
    for lam in (1.0, 2.0, 4.0):
        val = difference_kernel_point(lam, 1e-13)
        diag_errs.append(abs(val - 1j * lam / (2.0 * np.pi)))
        res.add(lam, float(np.imag(val)), bound=lam / (2.0 * np.pi))
    res.passed = max(sat_errs) <= 1e-6 and max(diag_errs) <= 1e-10
    res.details = {"saturation_errors": sat_errs, "saturation_tolerance": 1e-6,
                   "diagonal_errors": diag_errs, "diagonal_tolerance": 1e-10}
    return res


# ---------------------------------------------------------------------------
# 5. zero-energy resonance margin
# ---------------------------------------------------------------------------

def _margin_under_refinement(domain: DomainSpec, make_pot, sizes) -> list[float]:
    margins = []
    for panel in sizes:
        grid = _uniform_grid(domain, 9.0, panel)
        margins.append(resonance_margin_zero(make_pot(grid)))
    return margins


def run_resonance_margin(fast: bool = False) -> ExperimentResult:
    """sigma_min(I + R(0)V) > 0, stable across refinements, for attractive,
    repulsive and sign-changing admissible potentials."""
    res = ExperimentResult("resonance_margin", "eq.A11")
    domain = DomainSpec.exterior_ball(1.0)
    shapes = {
        "attractive": lambda g: PotentialSpec.bump(g, 2.5, 1.0, -0.012),
        "repulsive": lambda g: PotentialSpec.bump(g, 2.5, 1.0, +0.03),
        "sign_changing": lambda g: PotentialSpec(
            c0=0.2, c1=1.0, delta0=2.5,
            values=0.012 * core.smooth_bump(g.nodes, 3.2, 0.7)
            - 0.010 * core.smooth_bump(g.nodes, 2.0, 0.6),
            grid=g),
    }
    sizes = (0.36, 0.18, 0.09)
    ok = True
    for name, make in shapes.items():
        margins = _margin_under_refinement(domain, make, sizes)
        drift = max(abs(m - margins[-1]) / margins[-1] for m in margins)
        ok &= margins[-1] > 0.0 and drift <= 0.10
        res.details[name] = {"margins": margins, "drift": drift}
        res.add(0.0, margins[-1], bound=None)
    res.passed = ok
    res.details["drift_tolerance"] = 0.10
    return res


# ---------------------------------------------------------------------------
# 6. oracle equivalence
# ---------------------------------------------------------------------------

def run_oracle_equivalence(fast: bool = False) -> ExperimentResult:
    """Spectral propagation against the leapfrog solver, ball + potential."""
    res = ExperimentResult("oracle_equivalence", "EQ:Potential-eq")
    domain = DomainSpec.exterior_ball(1.0)
    grid = _uniform_grid(domain, 12.0, 0.25)
    data = CauchyData(core.cos_bump_field(grid, 2.4, 1.0),
                      core.cos_bump_field(grid, 2.4, 1.0, amplitude=-0.5))
    pot = PotentialSpec.bump(grid, 2.2, 0.7, -0.018)
    t = 5.0
    out = spectral.propagate_series([t], data, pot)[0]
    report = oracle.cross_validate(t, data, pot, domain,
                                   spectral_result=out, cfl=0.35)
    res.add(t, report["rel_l2_u"], bound=1e-2)
    res.passed = report["rel_l2_u"] <= 1e-2
    res.details = report | {"tolerance": 1e-2}
    return res


# ---------------------------------------------------------------------------
# 7. uniform resolvent scans
# ---------------------------------------------------------------------------

def run_resolvent_scans(fast: bool = False) -> ExperimentResult:
    """lam * weighted norm of R_V bounded (max/min <= 10) and the inverse
    operators S(lam) uniformly bounded with norm -> 1 at the top."""
    res = ExperimentResult("resolvent_scans", "eq.PRP9")
    domain = DomainSpec.exterior_ball(1.0)
    grid = _uniform_grid(domain, 16.0, 0.4 if fast else 0.25)
    pot = PotentialSpec.bump(grid, 2.2, 0.8, -0.015)
    lams = np.geomspace(0.25, 8.0, 9 if fast else 13)
    scan = perturbed_weighted_norm_scan(0, lams, pot, s=1.0, lam_factor=True)
    for lam, v in zip(lams, scan["values"]):
        res.add(lam, v)
    inv = uniform_inverse_scan(0, lams, pot, s=1.0)
    final_dev = abs(inv["final"] - 1.0)
    res.passed = (scan["max_over_min"] <= 10.0
                  and inv["max_over_min"] <= 10.0
                  and final_dev <= 0.2)
    res.details = {
        "rv_max_over_min": scan["max_over_min"],
        "inverse_max_over_min": inv["max_over_min"],
        "inverse_norm_at_top": inv["final"],
        "ratio_bound": 10.0, "top_tolerance": 0.2,
        "inverse_norms": list(map(float, inv["inverse_norms"])),
    }
    return res


# ---------------------------------------------------------------------------
# 8. L1 -> Linf resolvent-difference bound
# ---------------------------------------------------------------------------

def run_rv_difference_bound(fast: bool = False) -> ExperimentResult:
    """sup |[R_V(+) - R_V(-)] f| / (lam ||f||_1) bounded over the lam grid
    and vanishing linearly as lam -> 0.

    Run in whole space: a Dirichlet ball suppresses the mode-0 density by an
    extra lam^2 at low frequency, so the lam ||f||_1 envelope is only
    saturated (and the flat-ratio check meaningful) without the obstacle.
    """
    res = ExperimentResult("rv_difference_bound", "EQ:1-RVDifferencen")
    domain = DomainSpec.whole_space()
    grid = _uniform_grid(domain, 16.0, 0.25)
    pot = PotentialSpec.bump(grid, 2.2, 0.8, -0.015)
    # concentrated source at the origin: its transform stays flat across the
    # scan band, so the lam ||f||_1 envelope is actually approached
    f = core.cos_bump_field(grid, 0.0, 0.3)
    l1 = core.l1_norm(f)
    lams = np.geomspace(0.25, 8.0, 9 if fast else 13)
    ratios = []
    for lam in lams:
        d = rv_difference_apply(0, float(lam), pot, f)
        sup = core.sup_norm(d)
        ratios.append(sup / (lam * l1))
        res.add(lam, sup, bound=lam * l1)
    ratios = np.array(ratios)
    # small-lam slope of the raw sup norm
    small = np.geomspace(0.02, 0.2, 6)
    sups_small = np.array([
        core.sup_norm(rv_difference_apply(0, float(lam), pot, f))
        for lam in small
    ])
    coeffs = np.polyfit(np.log(small), np.log(sups_small), 1)
    res.slope = float(coeffs[0])
    ok_ratio = float(np.max(ratios) / np.min(ratios)) <= 10.0
    ok_slope = res.slope >= 0.8
    res.passed = ok_ratio and ok_slope
    res.details = {
        "ratio_max_over_min": float(np.max(ratios) / np.min(ratios)),
        "ratio_bound": 10.0,
        "small_lam_slope": res.slope, "slope_bound": 0.8,
    }
    return res


# ---------------------------------------------------------------------------
# 9. Strichartz stability
# ---------------------------------------------------------------------------

def run_strichartz_stability(fast: bool = False) -> ExperimentResult:
    """Space-time norm ratio against the data norm stabilizes under T -> 2T."""
    res = ExperimentResult("strichartz_stability", "EQ:Str")
    domain = DomainSpec.whole_space()
    q, p = 8.0, 4.0
    gamma = 3.0 * (0.5 - 1.0 / p) - 1.0 / q
    T_hi = 32.0
    grid = _uniform_grid(domain, T_hi + 8.0, 0.5)
    data = CauchyData(core.cos_bump_field(grid, 2.4, 1.4),
                      core.cos_bump_field(grid, 2.4, 1.4, amplitude=0.8))
    pot = PotentialSpec.zero(grid)
    n_time = 32 if fast else 64
    times = np.linspace(0.0, T_hi, n_time + 1)
    outs = spectral.propagate_series(times, data, pot)
    norms = np.array([core.lp_norm(o.u, p) for o in outs])
    data_norm = spectral.sobolev_norm(data.g, gamma, pot, generator="G_V")

    def st_norm(T):
        sel = times <= T + 1e-12
        return float(np.trapezoid(norms[sel] ** q, times[sel]) ** (1.0 / q))

    decay.check_strichartz_admissible(q, p, gamma)
    n16, n32 = st_norm(16.0), st_norm(32.0)
    growth = n32 / n16 - 1.0
    res.add(16.0, n16 / data_norm)
    res.add(32.0, n32 / data_norm)
    res.passed = growth <= 0.05
    res.details = {"q": q, "p": p, "gamma": gamma,
                   "norm_T16": n16, "norm_T32": n32,
                   "growth": growth, "tolerance": 0.05,
                   "data_norm": data_norm}
    return res


# ---------------------------------------------------------------------------
# 10. Besov equivalence
# ---------------------------------------------------------------------------

def run_besov_equivalence(fast: bool = False) -> ExperimentResult:
    """Ratios of G_V- to G-generated Besov norms over a 10-function set lie
    in [1/C, C] with C <= 5, stable under refinement."""
    res = ExperimentResult("besov_equivalence", "eq.EBS8")
    domain = DomainSpec.exterior_ball(1.0)
    s, p, q = 0.5, 2, 2

    def run_on(panel: float):
        grid = _uniform_grid(domain, 12.0, panel)
        pot = PotentialSpec.bump(grid, 2.2, 0.8, -0.015)
        rng = np.random.default_rng(20240811)
        fields = []
        for k in range(4 if fast else 10):
            center = 2.0 + 2.5 * rng.random()
            width = 0.7 + 0.8 * rng.random()
            amp = 0.5 + rng.random()
            power = int(rng.choice([8, 12, 16]))
            fields.append(core.cos_bump_field(grid, center, width,
                                              amplitude=amp, power=power))
        return spectral.besov_equivalence_ratio(fields, s, p, q, pot)

    coarse = run_on(0.4)
    fine = run_on(0.28)
    C = 5.0
    within = (fine["min_ratio"] >= 1.0 / C and fine["max_ratio"] <= C)
    drift = max(abs(fine["min_ratio"] - coarse["min_ratio"]),
                abs(fine["max_ratio"] - coarse["max_ratio"]))
    stable = drift <= 0.15
    for k, r in enumerate(fine["ratios"]):
        res.add(float(k), float(r), bound=C)
    res.passed = within and stable
    res.details = {"min_ratio": fine["min_ratio"], "max_ratio": fine["max_ratio"],
                   "coarse_min": coarse["min_ratio"], "coarse_max": coarse["max_ratio"],
                   "band": C, "refinement_drift": drift, "drift_tolerance": 0.15}
    return res


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

REGISTRY = {
    "free_dispersive": run_free_dispersive,
    "local_energy_decay": run_local_energy_decay,
    "lp_partition": run_lp_partition,
    "kernel_constants": run_kernel_constants,
    "resonance_margin": run_resonance_margin,
    "oracle_equivalence": run_oracle_equivalence,
    "resolvent_scans": run_resolvent_scans,
    "rv_difference_bound": run_rv_difference_bound,
    "strichartz_stability": run_strichartz_stability,
    "besov_equivalence": run_besov_equivalence,
}


def run_fail_probe(fast: bool = False) -> ExperimentResult:
    """Harness self-check: an experiment that always reports failure."""
    res = ExperimentResult("fail_probe", "none")
    res.add(0.0, 1.0, bound=0.0)
    res.passed = False
    res.details = {"note": "intentional failure for exit-code checks"}
    return res


REGISTRY_WITH_PROBES = dict(REGISTRY, fail_probe=run_fail_probe)
