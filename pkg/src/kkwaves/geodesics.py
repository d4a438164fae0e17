"""Principal null transport on the outer block.

The principal null congruence with vanishing circle momentum satisfies,
in the r-parametrization,

    out:  dt/dr = +1/F,  dz/dr = -sV/F
    in :  dt/dr = -1/F,  dz/dr = +sV/F

so both integrate in closed form through the tortoise tables: along the
out branch t - x and z - Z are constant, along the in branch t + x and
z + Z are. The modified curves gamma_+/- run at unit coordinate speed in
t with an extra constant rotation -2sV_- (resp. -2sV_+), and carry data
to the future horizons.

Endpoint maps send a block point to its arrival coordinates on a chosen
horizon (star coordinates stay finite there); they are constant along
the corresponding transport.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kkwaves.geometry import SpacetimeParams, SpacetimePoint, horizon_function
from kkwaves.coords import (
    TortoiseMap, OutOfDomain, tortoise_x, z_shift, invert_tortoise,
    phase_integral,
)


_KINDS = ("in", "out", "plus", "minus")
_TAGS = ("H+", "H-", "I+", "I-")


@dataclass(frozen=True)
class NullPath:
    kind: str                 # 'in' | 'out' | 'plus' | 'minus'
    parameter: np.ndarray     # r for in/out, t for plus/minus
    t: np.ndarray
    z: np.ndarray
    r: np.ndarray
    theta: float
    phi: float
    null_invariant: np.ndarray    # g(dot, dot) per sample
    dz_invariant: np.ndarray      # g(dot, d/dz) per sample

    @property
    def omega(self):
        return (self.theta, self.phi)

    def points(self):
        return [SpacetimePoint(t=float(ti), z=float(zi), r=float(ri),
                               theta=self.theta, phi=self.phi)
                for ti, zi, ri in zip(self.t, self.z, self.r)]


@dataclass(frozen=True)
class HorizonPoint:
    tag: str                  # 'H+' | 'H-' | 'I+' | 'I-'
    t_star: float             # t* or *t depending on the tag
    z_star: float
    omega: tuple


def _principal_invariants(p: SpacetimeParams, r, eps: float):
    """g(dot, dot) and g(dot, d/dz) for dot = (eps/F, -eps sV/F, 1, 0, 0)."""
    F = horizon_function(p, r)[0]
    W = p.s / r
    m2 = p.m ** 2
    td = eps / F
    zd = -eps * W / F
    g_tt = F - W ** 2 / m2
    g_tz = -W / m2
    g_zz = -1.0 / m2
    null = g_tt * td ** 2 + 2.0 * g_tz * td * zd + g_zz * zd ** 2 - 1.0 / F
    dz = g_tz * td + g_zz * zd
    return null, dz


def integrate_principal(p: SpacetimeParams, tmap: TortoiseMap,
                        start: SpacetimePoint, kind: str, target_r: float,
                        n_samples: int = 200, J: float = 0.0) -> NullPath:
    """Closed-form principal null path from start.r to target_r.

    Only the vanishing-circle-momentum family is supported; J != 0 is
    rejected.
    """
    if J != 0.0:
        raise ValueError("only the J = 0 principal family is supported")
    if kind not in ("in", "out"):
        raise ValueError("kind must be 'in' or 'out'")
    h = tmap.horizons
    if not (h.r_minus < target_r < h.r_plus):
        raise OutOfDomain("target_r outside the outer block")
    if not (h.r_minus < start.r < h.r_plus):
        raise OutOfDomain("start radius outside the outer block")

    eps = 1.0 if kind == "out" else -1.0
    rs = np.linspace(start.r, target_r, n_samples)
    dT = tortoise_x(tmap, rs) - tortoise_x(tmap, start.r)
    dZ = z_shift(tmap, rs) - z_shift(tmap, start.r)
    t = start.t + eps * dT
    z = start.z + eps * dZ
    null, dz = _principal_invariants(p, rs, eps)
    return NullPath(kind=kind, parameter=rs, t=t, z=z, r=rs,
                    theta=start.theta, phi=start.phi,
                    null_invariant=np.asarray(null),
                    dz_invariant=np.asarray(dz))


def integrate_principal_ode(p: SpacetimeParams, start: SpacetimePoint,
                            kind: str, target_r: float,
                            h_step: float = 1e-3) -> NullPath:
    """RK4 integration of the principal ODE system; cross-validation path."""
    if kind not in ("in", "out"):
        raise ValueError("kind must be 'in' or 'out'")
    eps = 1.0 if kind == "out" else -1.0

    def rhs(r):
        F = horizon_function(p, r)[0]
        return np.array([eps / F, -eps * p.s / (r * F)])

    n = max(2, int(round(abs(target_r - start.r) / h_step)) + 1)
    rs = np.linspace(start.r, target_r, n)
    step = rs[1] - rs[0]
    y = np.zeros((n, 2))
    y[0] = (start.t, start.z)
    for i in range(n - 1):
        r0 = rs[i]
        k1 = rhs(r0)
        k2 = rhs(r0 + 0.5 * step)
        k3 = rhs(r0 + 0.5 * step)
        k4 = rhs(r0 + step)
        y[i + 1] = y[i] + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    null, dz = _principal_invariants(p, rs, eps)
    return NullPath(kind=kind, parameter=rs, t=y[:, 0], z=y[:, 1], r=rs,
                    theta=start.theta, phi=start.phi,
                    null_invariant=np.asarray(null),
                    dz_invariant=np.asarray(dz))


def endpoint_map(p: SpacetimeParams, tmap: TortoiseMap,
                 point: SpacetimePoint, tag: str) -> HorizonPoint:
    """Arrival coordinates on the tagged horizon.

    Future event horizon H+ collects in-paths: (t + T, z + Z). Future
    cosmological horizon I+ collects out-paths: (t - T, z - Z). The past
    horizons swap the signs.
    """
    if tag not in _TAGS:
        raise ValueError(f"tag must be one of {_TAGS}")
    h = tmap.horizons
    if not (h.r_minus < point.r < h.r_plus):
        raise OutOfDomain("point outside the outer block")
    T = tortoise_x(tmap, point.r)
    Z = z_shift(tmap, point.r)
    sign = 1.0 if tag in ("H+", "I-") else -1.0
    return HorizonPoint(tag=tag, t_star=point.t + sign * T,
                        z_star=point.z + sign * Z,
                        omega=(point.theta, point.phi))


def inverse_endpoint_map(p: SpacetimeParams, tmap: TortoiseMap,
                         hpoint: HorizonPoint,
                         r0: float | None = None) -> SpacetimePoint:
    """Block point at radius r0 whose endpoint image is hpoint.

    Default r0 is the map's reference radius, where T = Z = 0.
    """
    if r0 is None:
        r0 = tmap.reference_radius
    T = tortoise_x(tmap, r0)
    Z = z_shift(tmap, r0)
    sign = 1.0 if hpoint.tag in ("H+", "I-") else -1.0
    return SpacetimePoint(t=hpoint.t_star - sign * T,
                          z=hpoint.z_star - sign * Z,
                          r=r0, theta=hpoint.omega[0], phi=hpoint.omega[1])


def integrate_curve_gamma(p: SpacetimeParams, tmap: TortoiseMap,
                          start: SpacetimePoint, sign: str, duration: float,
                          n_samples: int = 200) -> NullPath:
    """The modified curves gamma_+ / gamma_- in the t-parametrization.

    gamma_+ ('plus'):  (dt, dz, dr)/dt = (1, s(V - 2V_-), F): x = x0 + t.
    gamma_- ('minus'): (dt, dz, dr)/dt = (1, s(V - 2V_+), -F): x = x0 - t.
    """
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    h = tmap.horizons
    if not (h.r_minus < start.r < h.r_plus):
        raise OutOfDomain("start radius outside the outer block")
    x0 = tortoise_x(tmap, start.r)
    ts = np.linspace(0.0, duration, n_samples)
    eps = 1.0 if sign == "plus" else -1.0
    Vh = h.V["minus"] if sign == "plus" else h.V["plus"]
    xs = x0 + eps * ts
    rs = invert_tortoise(tmap, xs)
    zs = np.empty_like(ts)
    for i, t in enumerate(ts):
        a, b = (x0, x0 + t) if sign == "plus" else (x0 - t, x0)
        zs[i] = start.z + p.s * phase_integral(tmap, a, b, 0.0) \
            - 2.0 * p.s * Vh * t
    # tangent (1, s(V - 2Vh), eps F): null and z-orthogonality logs
    F = horizon_function(p, rs)[0]
    W = p.s / rs
    m2 = p.m ** 2
    zd = p.s / rs - 2.0 * p.s * Vh
    g_tt = F - W ** 2 / m2
    g_tz = -W / m2
    g_zz = -1.0 / m2
    null = (g_tt + 2.0 * g_tz * zd + g_zz * zd ** 2
            - (eps * F) ** 2 / F)
    dz = g_tz + g_zz * zd
    return NullPath(kind=sign, parameter=ts, t=start.t + ts, z=zs, r=rs,
                    theta=start.theta, phi=start.phi,
                    null_invariant=np.asarray(null),
                    dz_invariant=np.asarray(dz))


def write_path_csv(path: NullPath, file_path):
    data = np.column_stack([
        path.parameter, path.t, path.z, path.r,
        np.full_like(path.r, path.theta), np.full_like(path.r, path.phi),
        path.null_invariant, path.dz_invariant,
    ])
    header = (f"kind={path.kind}\n"
              "parameter,t,z,r,theta,phi,null_invariant,dz_invariant")
    np.savetxt(file_path, data, delimiter=",", header=header, fmt="%.17g")
