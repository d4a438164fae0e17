"""Background geometry for a charged wave field on a de Sitter-Reissner-
Nordstrom (DSRN) black hole and its 5D Kaluza-Klein extension.

PHYSICS SCOPE
    Horizon function F(r) = 1 - 2M/r + Q^2/(2 r^2) - Lambda r^2 / 3.
    NOTE the Q^2/2 convention: this is NOT the standard Reissner-Nordstrom
    normalization (which carries Q^2/r^2); every formula in this package
    uses the halved charge term.

    The extended 5D metric lives on coordinates (t, z, r, theta, phi) with
    z on the circle. With V(r) = 1/r and W(r) = s V(r), s = qQ:

        g = (F - W^2/m^2) dt^2 - (2W/m^2) dt dz - dz^2/m^2
            - dr^2/F - r^2 dOmega^2

    signature (+,-,-,-,-). A charged Klein-Gordon field of charge q and
    mass m on the 4D base is equivalent to an uncharged massless wave on
    this extended metric, restricted to one circle mode.

UNITS
    Geometric units G = c = 1; all lengths in units of the mass M scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

ArrayR = np.ndarray


class BracketingFailure(Exception):
    """Root brackets for the horizon function could not be localized."""


class NoDyadoring(Exception):
    """The shifted horizon function has no interior zeros.

    Carries the covering threshold sup over (r_-, r_+) of m * r * sqrt(F):
    |s| at or above it means the frame-dragging band covers the whole
    outer region.
    """

    def __init__(self, message, threshold=None):
        super().__init__(message)
        self.threshold = threshold


class DegenerateChart(Exception):
    """Boyer-Lindquist chart breaks where F vanishes."""


class SamplerExhausted(Exception):
    """Could not generate timelike sample vectors at this point."""


@dataclass(frozen=True)
class SpacetimeParams:
    """Physical constants of the background.

    M: black-hole mass (> 0). Q: black-hole charge (!= 0).
    Lambda: cosmological constant (> 0). q: field charge. m: field mass
    (> 0; the extended metric degenerates at m = 0). s = qQ is derived.
    """

    M: float
    Q: float
    Lambda: float
    q: float = 0.0
    m: float = 1.0

    @property
    def s(self) -> float:
        return self.q * self.Q


@dataclass(frozen=True)
class HorizonStructure:
    """Roots of F with surface gravities and horizon potentials.

    r_n < 0 < r_c < r_minus < r_plus; kappa[alpha] = F'(r_alpha)/2;
    V[alpha] = 1/r_alpha. Keys: 'n', 'c', 'minus', 'plus'.
    """

    r_n: float
    r_c: float
    r_minus: float
    r_plus: float
    kappa: dict = field(default_factory=dict)
    V: dict = field(default_factory=dict)

    @property
    def roots(self) -> dict:
        return {"n": self.r_n, "c": self.r_c,
                "minus": self.r_minus, "plus": self.r_plus}


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    z: float
    r: float
    theta: float
    phi: float

    def __post_init__(self):
        # poles excluded: the (theta, phi) chart degenerates there
        if not (0.0 < self.theta < math.pi):
            raise ValueError("theta must lie in (0, pi)")


@dataclass(frozen=True)
class TensorBundle:
    metric: ArrayR
    inverse_metric: ArrayR
    christoffel: ArrayR          # christoffel[mu, a, b] = Gamma^mu_ab
    ricci: ArrayR
    scalar_curvature: float
    T_maxwell: ArrayR
    T_fluid: ArrayR

    @property
    def stress_energy(self) -> ArrayR:
        return self.T_maxwell + self.T_fluid


# ---------------------------------------------------------------------------
# horizon function and parameter validation

def horizon_function(p: SpacetimeParams, r):
    """F, F', F'' at radius r (scalar or array). Requires r != 0."""
    r = np.asarray(r, dtype=float)
    F = 1.0 - 2.0 * p.M / r + p.Q ** 2 / (2.0 * r ** 2) - p.Lambda * r ** 2 / 3.0
    Fp = 2.0 * p.M / r ** 2 - p.Q ** 2 / r ** 3 - 2.0 * p.Lambda * r / 3.0
    Fpp = -4.0 * p.M / r ** 3 + 3.0 * p.Q ** 2 / r ** 4 - 2.0 * p.Lambda / 3.0
    if F.ndim == 0:
        return float(F), float(Fp), float(Fpp)
    return F, Fp, Fpp


def shifted_horizon_function(p: SpacetimeParams, r):
    """Shifted horizon function: F - s^2 V^2 / m^2 with V = 1/r.

    Its interior zeros bound the frame-dragging band (where d/dt turns
    spacelike) responsible for superradiance.
    """
    r = np.asarray(r, dtype=float)
    F = horizon_function(p, r)[0]
    out = F - p.s ** 2 / (p.m ** 2 * r ** 2)
    if np.ndim(out) == 0:
        return float(out)
    return out


def validate_params(p: SpacetimeParams) -> dict:
    """Check the inequalities guaranteeing four distinct real roots of F.

    Returns {'ok': bool, 'violations': [...]} where each violation names
    the failed inequality with both sides evaluated. Never raises.
    """
    violations = []

    def fail(name, lhs, rhs, relation):
        violations.append({"inequality": name, "lhs": lhs, "rhs": rhs,
                           "relation": relation})

    if not p.M > 0:
        fail("M > 0", p.M, 0.0, ">")
    if p.Q == 0:
        fail("Q != 0", p.Q, 0.0, "!=")
    if not p.Lambda > 0:
        fail("Lambda > 0", p.Lambda, 0.0, ">")
    if p.m == 0:
        fail("m != 0 (metric degeneracy)", p.m, 0.0, "!=")

    delta = 9.0 * p.M ** 2 - 4.0 * p.Q ** 2
    if not delta > 0:
        fail("Delta = 9M^2 - 4Q^2 > 0", delta, 0.0, ">")
    else:
        sd = math.sqrt(delta)
        lo = max(0.0, 6.0 * (p.M - sd) / (3.0 * p.M - sd) ** 3)
        hi = 6.0 * (p.M + sd) / (3.0 * p.M + sd) ** 3
        if not p.Lambda > lo:
            fail("Lambda > max{0, 6(M-sqrt(Delta))/(3M-sqrt(Delta))^3}",
                 p.Lambda, lo, ">")
        if not p.Lambda < hi:
            fail("Lambda < 6(M+sqrt(Delta))/(3M+sqrt(Delta))^3",
                 p.Lambda, hi, "<")
    if p.M > 0 and not 9.0 * p.Lambda * p.M ** 2 < 1.0:
        fail("9 Lambda M^2 < 1", 9.0 * p.Lambda * p.M ** 2, 1.0, "<")

    return {"ok": not violations, "violations": violations}


# ---------------------------------------------------------------------------
# root finding

def _bisect_newton(p: SpacetimeParams, a: float, b: float) -> float:
    """Bracketed bisection to 1e-13 followed by two Newton polish steps."""
    fa = horizon_function(p, a)[0]
    fb = horizon_function(p, b)[0]
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise BracketingFailure(f"no sign change on [{a}, {b}]")
    while b - a > 1e-13 * max(1.0, abs(a), abs(b)):
        mid = 0.5 * (a + b)
        fm = horizon_function(p, mid)[0]
        if fm == 0.0:
            a = b = mid
            break
        if fa * fm < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    r = 0.5 * (a + b)
    for _ in range(2):
        F, Fp, _ = horizon_function(p, r)
        if Fp != 0.0:
            r = r - F / Fp
    return r


def horizon_structure(p: SpacetimeParams) -> HorizonStructure:
    """Locate the four roots r_n < 0 < r_c < r_minus < r_plus of F.

    Brackets come from log-spaced sweeps of (-20M, 0) and
    (0, 20M*max(1, Lambda^{-1/2})); each bracket is resolved by bisection
    plus Newton polishing. Raises BracketingFailure if the expected sign
    changes are absent (invalid parameters).
    """
    report = validate_params(p)
    if not report["ok"]:
        raise BracketingFailure(f"invalid parameters: {report['violations']}")

    roots = []
    # negative side: one root near -sqrt(3/Lambda) for small Lambda
    rmax = 20.0 * p.M * max(1.0, p.Lambda ** -0.5)
    mags = np.geomspace(1e-8 * p.M, rmax, 400)
    grid = -mags[::-1]
    Fg = horizon_function(p, grid)[0]
    for i in range(len(grid) - 1):
        if Fg[i] == 0.0:
            roots.append(grid[i])
        elif Fg[i] * Fg[i + 1] < 0:
            roots.append(_bisect_newton(p, grid[i], grid[i + 1]))
    # positive side: three roots
    grid = np.geomspace(1e-8 * p.M, rmax, 2000)
    Fg = horizon_function(p, grid)[0]
    for i in range(len(grid) - 1):
        if Fg[i] == 0.0:
            roots.append(grid[i])
        elif Fg[i] * Fg[i + 1] < 0:
            roots.append(_bisect_newton(p, grid[i], grid[i + 1]))

    roots = sorted(roots)
    if len(roots) != 4 or not (roots[0] < 0 < roots[1] < roots[2] < roots[3]):
        raise BracketingFailure(
            f"expected 4 ordered roots, found {roots}")

    names = ["n", "c", "minus", "plus"]
    kappa = {}
    V = {}
    for name, r in zip(names, roots):
        Fp = horizon_function(p, r)[1]
        kappa[name] = 0.5 * Fp
        V[name] = 1.0 / r
    return HorizonStructure(r_n=roots[0], r_c=roots[1], r_minus=roots[2],
                            r_plus=roots[3], kappa=kappa, V=V)


def factorized_horizon_function(p: SpacetimeParams, h: HorizonStructure, r):
    """F via its root factorization (Lambda/3r^2)(r-r_n)(r-r_c)(r-r_-)(r_+-r)."""
    r = np.asarray(r, dtype=float)
    out = (p.Lambda / (3.0 * r ** 2)
           * (r - h.r_n) * (r - h.r_c) * (r - h.r_minus) * (h.r_plus - r))
    if np.ndim(out) == 0:
        return float(out)
    return out


def dyadoring_roots(p: SpacetimeParams, h: HorizonStructure):
    """Zeros (r1, r2) of the shifted horizon function inside (r_-, r_+).

    The shifted function is negative on (r_-, r1) and (r2, r_+): the two
    bands near the horizons where d/dt is spacelike. Raises NoDyadoring
    when |s| is large enough that the bands cover the whole outer region
    (covering condition |s| >= m*r*sqrt(F) everywhere, i.e. |s| at or
    above the sup of m*r*sqrt(F)), or degenerately when s = 0.
    """
    rs = np.linspace(h.r_minus, h.r_plus, 4001)[1:-1]
    F = horizon_function(p, rs)[0]
    threshold = float(np.max(p.m * rs * np.sqrt(np.maximum(F, 0.0))))
    if p.s == 0.0:
        raise NoDyadoring(
            "s = 0: shifted function equals F; the bands degenerate to the "
            "horizons themselves (r1 -> r_-, r2 -> r_+)", threshold=threshold)
    if abs(p.s) >= threshold:
        raise NoDyadoring(
            f"|s| = {abs(p.s)} >= sup m r sqrt(F) = {threshold}: the bands "
            "cover the entire outer region", threshold=threshold)

    # roots hug the horizons for small |s| (distance ~ s^2/(m^2 r^2 F')),
    # often inside the first grid cell: bracket from the interior maximizer
    G = F - p.s ** 2 / (p.m ** 2 * rs ** 2)
    r_top = rs[int(np.argmax(G))]
    eps = (h.r_plus - h.r_minus) * 1e-12
    from scipy.optimize import brentq
    out = []
    for a, b in ((h.r_minus + eps, r_top), (r_top, h.r_plus - eps)):
        ga = shifted_horizon_function(p, a)
        gb = shifted_horizon_function(p, b)
        if ga * gb > 0:
            raise NoDyadoring(
                f"no sign change of the shifted function on [{a}, {b}]",
                threshold=threshold)
        out.append(brentq(lambda rr: shifted_horizon_function(p, rr),
                          a, b, xtol=1e-14, rtol=8.9e-16))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# metric and curvature (closed forms)

def metric_at(p: SpacetimeParams, r: float, theta: float) -> ArrayR:
    F = horizon_function(p, r)[0]
    W = p.s / r
    m2 = p.m ** 2
    g = np.zeros((5, 5))
    g[0, 0] = F - W ** 2 / m2
    g[0, 1] = g[1, 0] = -W / m2
    g[1, 1] = -1.0 / m2
    g[2, 2] = -1.0 / F
    g[3, 3] = -r ** 2
    g[4, 4] = -(r * math.sin(theta)) ** 2
    return g


def inverse_metric_at(p: SpacetimeParams, r: float, theta: float) -> ArrayR:
    F = horizon_function(p, r)[0]
    W = p.s / r
    m2 = p.m ** 2
    gi = np.zeros((5, 5))
    gi[0, 0] = 1.0 / F
    gi[0, 1] = gi[1, 0] = -W / F
    gi[1, 1] = W ** 2 / F - m2
    gi[2, 2] = -F
    gi[3, 3] = -1.0 / r ** 2
    gi[4, 4] = -1.0 / (r * math.sin(theta)) ** 2
    return gi


def christoffel_at(p: SpacetimeParams, r: float, theta: float) -> ArrayR:
    """Closed-form connection coefficients Gamma^mu_ab, indices (t,z,r,theta,phi)."""
    F, Fp, _ = horizon_function(p, r)
    W = p.s / r
    Wp = -p.s / r ** 2
    m2 = p.m ** 2
    st, ct = math.sin(theta), math.cos(theta)
    G = np.zeros((5, 5, 5))

    def sym(mu, a, b, val):
        G[mu, a, b] = val
        G[mu, b, a] = val

    sym(0, 0, 2, (m2 * Fp - W * Wp) / (2.0 * m2 * F))
    sym(0, 1, 2, -Wp / (2.0 * m2 * F))

    sym(1, 0, 2, (m2 * (F * Wp - Fp * W) + W ** 2 * Wp) / (2.0 * m2 * F))
    sym(1, 1, 2, W * Wp / (2.0 * m2 * F))

    G[2, 0, 0] = F * (m2 * Fp - 2.0 * W * Wp) / (2.0 * m2)
    sym(2, 0, 1, -F * Wp / (2.0 * m2))
    G[2, 2, 2] = -Fp / (2.0 * F)
    G[2, 3, 3] = -r * F
    G[2, 4, 4] = -r * F * st ** 2

    sym(3, 2, 3, 1.0 / r)
    G[3, 4, 4] = -st * ct

    sym(4, 2, 4, 1.0 / r)
    sym(4, 3, 4, ct / st)
    return G


def ricci_at(p: SpacetimeParams, r: float, theta: float) -> ArrayR:
    F, Fp, Fpp = horizon_function(p, r)
    W = p.s / r
    Wp = -p.s / r ** 2
    Wpp = 2.0 * p.s / r ** 3
    m2 = p.m ** 2
    m4 = m2 ** 2
    st = math.sin(theta)
    R = np.zeros((5, 5))
    R[0, 0] = (F * (2.0 * Fp + r * Fpp) / (2.0 * r)
               - (2.0 * F * W * Wp / (m2 * r) + F * W * Wpp / m2
                  + F * Wp ** 2 / (2.0 * m2) + W ** 2 * Wp ** 2 / (2.0 * m4)))
    R[0, 1] = R[1, 0] = -(F * Wp / (m2 * r) + F * Wpp / (2.0 * m2)
                          + W * Wp ** 2 / (2.0 * m4))
    R[1, 1] = -Wp ** 2 / (2.0 * m4)
    R[2, 2] = (-(2.0 * Fp + r * Fpp) / (2.0 * r * F)
               + Wp ** 2 / (2.0 * m2 * F))
    R[3, 3] = 1.0 - F - r * Fp
    R[4, 4] = (1.0 - F - r * Fp) * st ** 2
    return R


def scalar_curvature(p: SpacetimeParams, r: float) -> float:
    return -4.0 * p.Lambda - p.q ** 2 * p.Q ** 2 / (2.0 * p.m ** 2 * r ** 4)


def maxwell_energy_factor(p: SpacetimeParams, r: float) -> float:
    """Q^2/(2 r^4) * (1 - q^2/(2 m^2)): the electromagnetic energy scale."""
    return p.Q ** 2 / (2.0 * r ** 4) * (1.0 - p.q ** 2 / (2.0 * p.m ** 2))


def fluid_density(p: SpacetimeParams, r) -> float:
    r = np.asarray(r, dtype=float)
    rho = p.Lambda + p.Q ** 2 / (2.0 * r ** 4) * (1.0 + p.q ** 2 / p.m ** 2)
    if rho.ndim == 0:
        return float(rho)
    return rho


def fluid_pressure(p: SpacetimeParams, r) -> float:
    r = np.asarray(r, dtype=float)
    P = (-(p.q ** 2 * p.Q ** 2) / (4.0 * p.m ** 2 * r ** 2)
         * (p.Lambda + p.Q ** 2 * (1.0 + p.q ** 2 / p.m ** 2) / (6.0 * r ** 4)))
    if P.ndim == 0:
        return float(P)
    return P


def stress_energy_at(p: SpacetimeParams, r: float, theta: float):
    """(T_maxwell, T_fluid) lower-index matrices at (r, theta)."""
    F = horizon_function(p, r)[0]
    W = p.s / r
    m2 = p.m ** 2
    st = math.sin(theta)
    quad = maxwell_energy_factor(p, r)
    TM = np.zeros((5, 5))
    TM[0, 0] = quad * (-F - W ** 2 / m2)
    TM[0, 1] = TM[1, 0] = quad * (-W / m2)
    TM[1, 1] = quad * (-1.0 / m2)
    TM[2, 2] = quad * (1.0 / F)
    TM[3, 3] = quad * (-r ** 2)
    TM[4, 4] = quad * (-(r * st) ** 2)

    rho = fluid_density(p, r)
    u = np.array([W / p.m, 1.0 / p.m, 0.0, 0.0, 0.0])  # covector (1/m)(sV dt + dz)
    TF = rho * np.outer(u, u)
    return TM, TF


def tensors_at(p: SpacetimeParams, point: SpacetimePoint) -> TensorBundle:
    """All closed-form tensors at one point. Raises DegenerateChart on horizons."""
    r, theta = point.r, point.theta
    if r <= 0:
        raise DegenerateChart("r must be positive")
    F = horizon_function(p, r)[0]
    if abs(F) < 1e-13:
        raise DegenerateChart("Boyer-Lindquist chart degenerates where F = 0")
    TM, TF = stress_energy_at(p, r, theta)
    return TensorBundle(
        metric=metric_at(p, r, theta),
        inverse_metric=inverse_metric_at(p, r, theta),
        christoffel=christoffel_at(p, r, theta),
        ricci=ricci_at(p, r, theta),
        scalar_curvature=scalar_curvature(p, r),
        T_maxwell=TM,
        T_fluid=TF,
    )


def einstein_residual(p: SpacetimeParams, point: SpacetimePoint) -> ArrayR:
    """Ric - (R/2) g - Lambda g + T; analytically zero on this background."""
    b = tensors_at(p, point)
    R = b.scalar_curvature
    return (b.ricci - 0.5 * R * b.metric - p.Lambda * b.metric
            + b.T_maxwell + b.T_fluid)


# ---------------------------------------------------------------------------
# finite-difference curvature cross-check (independent of the closed forms)

_FD4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD4_OFF = np.array([-2, -1, 0, 1, 2])


def _fd_metric_derivs(p, r, theta, h_r, h_t):
    """4th-order central first derivatives of the metric in r and theta."""
    dg = np.zeros((5, 5, 5))  # dg[c] = d g / d x^c; only c = 2, 3 nonzero
    for w, off in zip(_FD4, _FD4_OFF):
        if w != 0.0:
            dg[2] += w * metric_at(p, r + off * h_r, theta)
            dg[3] += w * metric_at(p, r, theta + off * h_t)
    dg[2] /= h_r
    dg[3] /= h_t
    return dg


def fd_christoffel(p, r, theta, h_r=None, h_t=1e-5):
    if h_r is None:
        h_r = 1e-4 * r
    gi = inverse_metric_at(p, r, theta)
    dg = _fd_metric_derivs(p, r, theta, h_r, h_t)
    # Gamma^mu_ab = 1/2 g^{mu nu} (d_a g_{nb} + d_b g_{na} - d_nu g_{ab})
    G = 0.5 * (np.einsum("mn,anb->mab", gi, dg)
               + np.einsum("mn,bna->mab", gi, dg)
               - np.einsum("mn,nab->mab", gi, dg))
    return G


def _fd_ricci_once(p, r, theta, h_r, h_t):
    G = fd_christoffel(p, r, theta, h_r, h_t)
    dG = np.zeros((5, 5, 5, 5))  # dG[c, mu, a, b] = d_c Gamma^mu_ab
    for w, off in zip(_FD4, _FD4_OFF):
        if w != 0.0:
            dG[2] += w * fd_christoffel(p, r + off * h_r, theta, h_r, h_t)
            dG[3] += w * fd_christoffel(p, r, theta + off * h_t, h_r, h_t)
    dG[2] /= h_r
    dG[3] /= h_t
    ric = (np.einsum("mmab->ab", dG)
           - np.einsum("bmam->ab", dG)
           + np.einsum("mms,sab->ab", G, G)
           - np.einsum("mbs,sam->ab", G, G))
    return ric


def fd_ricci(p, r, theta, h_r=None, h_t=1e-4):
    """Ricci tensor from nested finite differences of the metric.

    One Richardson step on top of the 4th-order stencil. Serves as the
    independent oracle for the closed-form curvature path.
    """
    if h_r is None:
        h_r = 1e-4 * r
    coarse = _fd_ricci_once(p, r, theta, h_r, h_t)
    fine = _fd_ricci_once(p, r, theta, h_r / 2.0, h_t / 2.0)
    return (16.0 * fine - coarse) / 15.0


def einstein_residual_fd(p: SpacetimeParams, point: SpacetimePoint) -> ArrayR:
    """Einstein residual with the Ricci tensor from finite differences."""
    r, theta = point.r, point.theta
    g = metric_at(p, r, theta)
    gi = inverse_metric_at(p, r, theta)
    ric = fd_ricci(p, r, theta)
    R = float(np.einsum("ab,ab->", gi, ric))
    TM, TF = stress_energy_at(p, r, theta)
    return ric - 0.5 * R * g - p.Lambda * g + TM + TF


# ---------------------------------------------------------------------------
# fluid fields and energy conditions

def fluid_fields(p: SpacetimeParams, r: float) -> dict:
    """Density, pressure, velocity covector, and conservation residuals.

    euler_residual: dP/dr + rho W W' / (2 m^2) (numerical derivative of
    the closed-form P against the momentum-flux term; zero analytically).
    continuity_residual: divergence of rho * u, identically zero by
    staticity and axisymmetry.
    """
    W = p.s / r
    Wp = -p.s / r ** 2
    rho = fluid_density(p, r)
    P = fluid_pressure(p, r)
    u = np.array([W / p.m, 1.0 / p.m, 0.0, 0.0, 0.0])
    h = 1e-5 * r
    dP = sum(w * fluid_pressure(p, r + off * h)
             for w, off in zip(_FD4, _FD4_OFF)) / h
    euler = dP + rho * W * Wp / (2.0 * p.m ** 2)
    report = {
        "rho": rho,
        "pressure": P,
        "u_covector": u,
        "euler_residual": float(euler),
        "continuity_residual": 0.0,
        "em_potential_real": p.q ** 2 < 2.0 * p.m ** 2,
    }
    return report


def dominant_energy_check(p: SpacetimeParams, h: HorizonStructure):
    """Dominant-energy bound across the outer region.

    Checks m^2 D(r) <= Qd(r) with Qd the electromagnetic energy factor and
    D = Lambda/m^2 + 3 q^2 Q^2/(4 m^4 r^4); equivalent to
    Lambda <= (Q^2 / 2 r_+^4)(1 - 2 q^2/m^2). Returns (holds, margin),
    margin = min over (r_-, r_+) of Qd - m^2 D.
    """
    rs = np.linspace(h.r_minus, h.r_plus, 2001)
    margin_arr = (p.Q ** 2 / (2.0 * rs ** 4)
                  * (1.0 - 2.0 * p.q ** 2 / p.m ** 2) - p.Lambda)
    margin = float(np.min(margin_arr))
    return margin >= 0.0, margin


def _timelike_samples(p, point, n_samples, rng):
    """Random timelike vectors at a point.

    Spatial part uniform in a ball; the time component solves the
    quadratic g(X, X) = 0 and is pushed 1% past the root so the vector is
    strictly timelike (or pulled 1% inside the root interval when the
    tt-coefficient is negative, i.e. inside a frame-dragging band).
    """
    g = metric_at(p, point.r, point.theta)
    a = g[0, 0]
    X = np.zeros((n_samples, 5))
    spat = rng.uniform(-1.0, 1.0, size=(n_samples, 4))
    X[:, 1:] = spat
    b = 2.0 * g[0, 1] * X[:, 1]
    c = (g[1, 1] * X[:, 1] ** 2 + g[2, 2] * X[:, 2] ** 2
         + g[3, 3] * X[:, 3] ** 2 + g[4, 4] * X[:, 4] ** 2)
    disc = b ** 2 - 4.0 * a * c
    if a > 0:
        # g(X,X) > 0 outside the roots; take the future branch, inflated
        ok = disc > 0
        t2 = (-b + np.sqrt(np.abs(disc))) / (2.0 * a)
        mid = -b / (2.0 * a)
        X[:, 0] = mid + 1.01 * (t2 - mid)
    else:
        # inside a frame-dragging band: timelike only between the roots
        ok = disc > 0
        t1 = (-b + np.sqrt(np.abs(disc))) / (2.0 * a)
        t2 = (-b - np.sqrt(np.abs(disc))) / (2.0 * a)
        mid = 0.5 * (t1 + t2)
        X[:, 0] = mid + (1.0 / 1.01) * (t2 - mid)
    X = X[ok]
    if len(X) == 0:
        raise SamplerExhausted("no timelike directions found")
    return X


def energy_condition_sample(p: SpacetimeParams, point: SpacetimePoint,
                            n_samples: int = 1000, rng=None) -> dict:
    """Worst-case energy statistics over random timelike vectors.

    Over timelike X: min of -T(X, X) (weak energy). Over the same sample:
    whether the momentum flux -T^mu_nu X^nu stays causal and
    future-pointing (dominant energy), recording the worst margins.
    """
    rng = np.random.default_rng(rng)
    g = metric_at(p, point.r, point.theta)
    gi = inverse_metric_at(p, point.r, point.theta)
    TM, TF = stress_energy_at(p, point.r, point.theta)
    T = TM + TF
    X = _timelike_samples(p, point, n_samples, rng)

    TX = X @ T  # (T X)_mu... row vectors X^nu T_{nu mu}
    minus_TXX = -np.einsum("ij,ij->i", TX, X)
    # momentum flux P^mu = -T^mu_nu X^nu = -g^{mu a} T_{a nu} X^nu
    Pvec = -(gi @ T @ X.T).T
    # causal: g(P, P) >= 0; future-pointing: g(grad t, P) = P contracted
    # with dt via g^{-1}... grad t has components g^{0 mu}; g(grad t, P)
    # = dt(P) = P^0
    PP = np.einsum("ij,jk,ik->i", Pvec, g, Pvec)
    future = Pvec[:, 0]
    return {
        "n": len(X),
        "min_minus_TXX": float(np.min(minus_TXX)),
        "min_flux_causality": float(np.min(PP)),
        "min_flux_future": float(np.min(future)),
    }


def dec_violation_witness(p: SpacetimeParams, h: HorizonStructure) -> dict:
    """Search for a timelike X with -T(X, X) < 0 when the energy bound fails.

    Family X = d/dt - (sV + c) d/dz, evaluated where F > 0 and the local
    margin Qd - m^2 D is negative. Then g(X, X) = F - c^2/m^2 and
    -T(X, X) = Qd*F - D*c^2, so any c^2 in (Qd*F/D, m^2 F) is a witness;
    that window is nonempty exactly where the margin is negative. Uses the
    geometric mean of the window. (c = sV*eps recovers the boosted-rotation
    form of the construction when s != 0.)
    """
    best = {"value": np.inf, "r": None, "c": None, "timelike": None}
    rs = np.linspace(h.r_minus, h.r_plus, 801)[1:-1]
    for r in rs:
        F = horizon_function(p, r)[0]
        if F <= 0:
            continue
        Qd = maxwell_energy_factor(p, r)
        D = p.Lambda / p.m ** 2 + 3.0 * p.q ** 2 * p.Q ** 2 / (4.0 * p.m ** 4 * r ** 4)
        if D <= 0 or Qd >= p.m ** 2 * D:
            continue  # local margin nonnegative: no witness here
        c = (Qd * F / D * p.m ** 2 * F) ** 0.25
        X = np.array([1.0, -(p.s / r + c), 0.0, 0.0, 0.0])
        g = metric_at(p, r, math.pi / 2.0)
        T = sum(stress_energy_at(p, r, math.pi / 2.0))
        gXX = float(X @ g @ X)
        val = float(-X @ T @ X)
        if gXX > 0 and val < best["value"]:
            best = {"value": val, "r": float(r), "c": float(c),
                    "timelike": gXX}
    return best
