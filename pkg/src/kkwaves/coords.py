"""Tortoise and star coordinates on the outer block (r_-, r_+).

The radial coordinate x (tortoise) and the azimuthal shift Z satisfy
dx/dr = 1/F and dZ/dr = -sV/F with V = 1/r. Both integrate in closed
form through the root factorization of F:

    x(r) = sum_a [1/(2 kappa_a)] ln|(r - r_a)/(ref - r_a)|
    Z(r) = -sum_a [s/(2 r_a kappa_a)] ln|(ref/r)(r - r_a)/(ref - r_a)|

normalized to vanish at a reference radius ref inside the block. Near
the horizons, r approaches r_-/r_+ exponentially in x at rates given by
the surface gravities; the constants in front are the 'decay constants'
below, and they drive the asymptotic branch of the inversion.

Kruskal charts (u, v, z#) extend the block analytically across either
horizon; the analytic factor G satisfies u v G = r - r_- (event) or
r_+ - r (cosmological).
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from kkwaves.geometry import (
    SpacetimeParams, HorizonStructure, SpacetimePoint, horizon_function,
)


class OutOfDomain(Exception):
    pass


class ChartOverflow(Exception):
    """Kruskal exponentials exceed floating range.

    Carries t_window: the largest |t| representable at this radius.
    """

    def __init__(self, message, t_window=None):
        super().__init__(message)
        self.t_window = t_window


_NAMES = ("n", "c", "minus", "plus")


@dataclass(frozen=True)
class TortoiseMap:
    params: SpacetimeParams
    horizons: HorizonStructure
    reference_radius: float
    coef_T: dict       # name -> 1/(2 kappa)
    coef_Z_unit: dict  # name -> -1/(2 r kappa)  (the s = 1 table)


@dataclass(frozen=True)
class KruskalChart:
    horizon: str       # 'event' | 'cosmological'
    u: float
    v: float
    z_sharp: float     # representative in [0, 2 pi)
    winding: int
    G: float           # analytic factor; u v G = r - r_- (resp. r_+ - r)
    r: float


def default_reference_radius(p: SpacetimeParams, h: HorizonStructure) -> float:
    """Maximizer of F on (r_-, r_+): keeps all log arguments well-scaled."""
    res = minimize_scalar(lambda r: -horizon_function(p, r)[0],
                          bounds=(h.r_minus, h.r_plus), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def build_tortoise_map(p: SpacetimeParams, h: HorizonStructure,
                       reference_radius: float | None = None) -> TortoiseMap:
    if reference_radius is None:
        reference_radius = default_reference_radius(p, h)
    if not (h.r_minus < reference_radius < h.r_plus):
        raise OutOfDomain("reference radius must lie in (r_-, r_+)")
    coef_T = {a: 1.0 / (2.0 * h.kappa[a]) for a in _NAMES}
    coef_Zu = {a: -1.0 / (2.0 * h.roots[a] * h.kappa[a]) for a in _NAMES}
    return TortoiseMap(params=p, horizons=h,
                       reference_radius=reference_radius,
                       coef_T=coef_T, coef_Z_unit=coef_Zu)


def _check_domain(tmap: TortoiseMap, r):
    r = np.asarray(r, dtype=float)
    h = tmap.horizons
    if np.any(r <= h.r_minus) or np.any(r >= h.r_plus):
        raise OutOfDomain("r must lie strictly inside (r_-, r_+)")
    return r


def tortoise_x(tmap: TortoiseMap, r):
    r = _check_domain(tmap, r)
    h, ref = tmap.horizons, tmap.reference_radius
    x = sum(tmap.coef_T[a]
            * np.log(np.abs((r - h.roots[a]) / (ref - h.roots[a])))
            for a in _NAMES)
    if np.ndim(x) == 0:
        return float(x)
    return x


def _z_shift_unit(tmap: TortoiseMap, r):
    r = _check_domain(tmap, r)
    h, ref = tmap.horizons, tmap.reference_radius
    z = sum(tmap.coef_Z_unit[a]
            * np.log(np.abs((ref / r) * (r - h.roots[a]) / (ref - h.roots[a])))
            for a in _NAMES)
    return z


def z_shift(tmap: TortoiseMap, r):
    z = tmap.params.s * _z_shift_unit(tmap, r)
    if np.ndim(z) == 0:
        return float(z)
    return z


def decay_constant(tmap: TortoiseMap, which: str) -> float:
    """C in r - r_- ~ C e^{2 kappa_- x} (which='minus'; x -> -inf) or
    r_+ - r ~ C e^{2 kappa_+ x} (which='plus'; x -> +inf)."""
    h, ref = tmap.horizons, tmap.reference_radius
    r_a = h.roots[which]
    k_a = h.kappa[which]
    C = abs(ref - r_a)
    for b in _NAMES:
        if b == which:
            continue
        C *= abs((ref - h.roots[b]) / (r_a - h.roots[b])) ** (k_a / h.kappa[b])
    return float(C)


def _tortoise_from_gap(tmap: TortoiseMap, side: str, u: float):
    """x = T(r) evaluated at horizon distance d = e^u, r = r_side +/- d.

    Well-conditioned for arbitrarily small d (no r - r_side cancellation).
    Returns (x, d, r, F_safe) with F_safe the factorized horizon function
    using d for the nearly-vanishing factor.
    """
    h, ref, p = tmap.horizons, tmap.reference_radius, tmap.params
    r_a = h.roots[side]
    sgn = 1.0 if side == "minus" else -1.0
    d = math.exp(u)
    r = r_a + sgn * d
    x = tmap.coef_T[side] * (u - math.log(abs(ref - r_a)))
    F = p.Lambda / (3.0 * r ** 2) * d
    for b in _NAMES:
        if b == side:
            continue
        x += tmap.coef_T[b] * math.log(abs((r - h.roots[b]) / (ref - h.roots[b])))
        F *= abs(r - h.roots[b])
    return x, d, r, F


def _gap_solve(tmap: TortoiseMap, x: float, side: str):
    """Solve T(r) = x in u = ln(distance to the tagged horizon).

    Seed: the exponential-decay law d ~ C e^{2 kappa x}; Newton in u with
    dx/du = sgn * d / F.
    """
    k = tmap.horizons.kappa[side]
    sgn = 1.0 if side == "minus" else -1.0
    u = math.log(decay_constant(tmap, side)) + 2.0 * k * x
    for _ in range(6):
        val, d, r, F = _tortoise_from_gap(tmap, side, u)
        resid = val - x
        if abs(resid) < 1e-13 * max(1.0, abs(x)):
            break
        u -= resid / (sgn * d / F)
    return u


def _invert_full(tmap: TortoiseMap, x: float):
    """(r, side, u): side/u = ln(gap) set on the asymptotic branches."""
    h = tmap.horizons
    k_m, k_p = h.kappa["minus"], h.kappa["plus"]
    # per-side switch: the decay-law seed is within Newton's basin well
    # before e^{-2 kappa |x|} reaches 1e-5, and the gap-form solve stays
    # machine-precise there while the direct brentq branch starts losing
    # the gap to cancellation
    xs_left = -10.0 / (2.0 * k_m)
    xs_right = 10.0 / (2.0 * abs(k_p))
    if x < xs_left:
        u = _gap_solve(tmap, x, "minus")
        return h.r_minus + math.exp(u), "minus", u
    if x > xs_right:
        u = _gap_solve(tmap, x, "plus")
        return h.r_plus - math.exp(u), "plus", u
    a = h.r_minus + 0.5 * decay_constant(tmap, "minus") * math.exp(2.0 * k_m * xs_left)
    b = h.r_plus - 0.5 * decay_constant(tmap, "plus") * math.exp(2.0 * k_p * xs_right)
    r = brentq(lambda rr: tortoise_x(tmap, rr) - x, a, b,
               xtol=1e-15, rtol=8.9e-16)
    # Newton polish: dx/dr = 1/F
    for _ in range(2):
        F = horizon_function(tmap.params, r)[0]
        r_new = r - (tortoise_x(tmap, r) - x) * F
        if h.r_minus < r_new < h.r_plus:
            r = r_new
    return r, None, None


def invert_tortoise(tmap: TortoiseMap, x):
    """Radius with T(r) = x; total on the real line.

    Deep in either asymptotic region the gap r - r_-(or r_+ - r) can fall
    below the floating spacing of r itself; horizon_gap exposes it exactly.
    """
    if np.ndim(x) == 0:
        return _invert_full(tmap, float(x))[0]
    return np.array([_invert_full(tmap, float(xi))[0] for xi in np.asarray(x)])


def horizon_gap(tmap: TortoiseMap, x: float) -> dict:
    """Distance to the nearest horizon at tortoise coordinate x.

    Returns {'side': 'minus'|'plus', 'gap': d}; exact even where r_side + d
    is not representable. For moderate x the gap is taken from the direct
    inversion against whichever horizon is closer.
    """
    r, side, u = _invert_full(tmap, float(x))
    if side is not None:
        return {"side": side, "gap": math.exp(u)}
    h = tmap.horizons
    dm, dp = r - h.r_minus, h.r_plus - r
    if dm <= dp:
        return {"side": "minus", "gap": dm}
    return {"side": "plus", "gap": dp}


def _z_unit_deep(tmap: TortoiseMap, side: str, u: float) -> float:
    """Unit-coupling shift at horizon distance e^u (cancellation-free)."""
    h, ref = tmap.horizons, tmap.reference_radius
    r_a = h.roots[side]
    sgn = 1.0 if side == "minus" else -1.0
    r = r_a + sgn * math.exp(u)
    z = tmap.coef_Z_unit[side] * (math.log(ref / r) + u - math.log(abs(ref - r_a)))
    for b in _NAMES:
        if b == side:
            continue
        z += tmap.coef_Z_unit[b] * math.log(
            abs((ref / r) * (r - h.roots[b]) / (ref - h.roots[b])))
    return z


def phase_integral(tmap: TortoiseMap, x1: float, x2: float,
                   V_ref: float = 0.0) -> float:
    """Integral of V(r(x)) - V_ref over [x1, x2], in closed form.

    Uses the unit-coupling shift table (dZ_unit/dx = -V), so this is
    well-defined for s = 0 backgrounds too.
    """
    if x1 == x2:
        return 0.0
    Zu = []
    for x in (x1, x2):
        r, side, u = _invert_full(tmap, float(x))
        if side is None:
            Zu.append(float(_z_shift_unit(tmap, r)))
        else:
            Zu.append(_z_unit_deep(tmap, side, u))
    return -(Zu[1] - Zu[0]) - V_ref * (x2 - x1)


_EXP_LIMIT = 700.0  # ln of float max, with headroom


def kruskal_chart(tmap: TortoiseMap, point: SpacetimePoint,
                  horizon: str) -> KruskalChart:
    """Kruskal coordinates (u, v, z#) of a block point near one horizon.

    u = e^{-kappa (t - T)}, v = e^{kappa (t + T)} with the tagged
    horizon's surface gravity; z# = z + s V_horizon t reduced mod 2 pi
    (winding count kept). G = (r - r_-) e^{-2 kappa T} for the event
    chart, (r_+ - r) e^{-2 kappa T} for the cosmological one.
    """
    if horizon not in ("event", "cosmological"):
        raise ValueError("horizon must be 'event' or 'cosmological'")
    name = "minus" if horizon == "event" else "plus"
    h = tmap.horizons
    k = h.kappa[name]
    T = tortoise_x(tmap, point.r)
    worst = abs(k) * (abs(point.t) + abs(T))
    if worst > _EXP_LIMIT:
        window = _EXP_LIMIT / abs(k) - abs(T)
        raise ChartOverflow(
            f"exp({worst:.1f}) exceeds floating range; usable |t| window "
            f"at this radius is {window:.3f}", t_window=window)
    u = math.exp(-k * (point.t - T))
    v = math.exp(k * (point.t + T))
    raw = point.z + tmap.params.s * h.V[name] * point.t
    winding = math.floor(raw / (2.0 * math.pi))
    z_sharp = raw - 2.0 * math.pi * winding
    if horizon == "event":
        G = (point.r - h.r_minus) * math.exp(-2.0 * k * T)
    else:
        G = (h.r_plus - point.r) * math.exp(-2.0 * k * T)
    return KruskalChart(horizon=horizon, u=u, v=v, z_sharp=z_sharp,
                        winding=int(winding), G=G, r=point.r)


# ---------------------------------------------------------------------------
# table emission

def coordinate_table(tmap: TortoiseMap, rs) -> np.ndarray:
    """Columns (r, x, Z) at the given radii."""
    rs = np.asarray(rs, dtype=float)
    return np.column_stack([rs, tortoise_x(tmap, rs), z_shift(tmap, rs)])


def write_coordinate_csv(tmap: TortoiseMap, rs, path):
    table = coordinate_table(tmap, rs)
    header = (f"r_ref={tmap.reference_radius!r}\nr,x,Z")
    np.savetxt(path, table, delimiter=",", header=header,
               fmt="%.17g")


def chart_diagnostics_json(chart: KruskalChart) -> str:
    return json.dumps({
        "horizon": chart.horizon,
        "u": chart.u, "v": chart.v,
        "z_sharp": chart.z_sharp, "winding": chart.winding,
        "G": chart.G, "r": chart.r,
    }, sort_keys=True)
