"""Radial lattice in the tortoise coordinate, per-mode potentials,
cutoff families, and initial data sampling.

Everything downstream works in the gauged rotation potential
Vt = V - V_+ (so the cosmological end is phase-free); the connecting
unitary e^{i s z V_+ t} is applied only when comparing with ungauged
quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import warnings

import numpy as np

from kkwaves.geometry import SpacetimeParams, HorizonStructure, horizon_function
from kkwaves.coords import TortoiseMap, build_tortoise_map, invert_tortoise


class ResolutionWarning(UserWarning):
    """Grid spacing coarse relative to the potential scale."""


class SupportOverflow(Exception):
    """Initial bump does not vanish inside the edge margin."""


@dataclass(frozen=True)
class RadialGrid:
    x_min: float
    x_max: float
    n: int
    dx: float
    x: np.ndarray
    r: np.ndarray
    F: np.ndarray
    Fp: np.ndarray
    V: np.ndarray
    Vt: np.ndarray          # gauged: V - V_+
    weights: np.ndarray     # trapezoid quadrature weights
    params: SpacetimeParams
    horizons: HorizonStructure
    tortoise: TortoiseMap


@dataclass(frozen=True)
class ModeIndex:
    ell: int
    zmode: int

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")
        # zmode = 0 removes the mass term and leaves the excluded wave case
        if self.zmode == 0:
            raise ValueError("zmode must be a nonzero integer")


@dataclass(frozen=True)
class ModeState:
    time: float
    u0: np.ndarray
    u1: np.ndarray

    def __post_init__(self):
        if self.u0.shape != self.u1.shape or self.u0.ndim != 1:
            raise ValueError("u0, u1 must be equal-length 1d arrays")
        if not (np.all(np.isfinite(self.u0.view(float)))
                and np.all(np.isfinite(self.u1.view(float)))):
            raise ValueError("non-finite entries in state")


@dataclass(frozen=True)
class CutoffFamily:
    i_minus: np.ndarray
    i_plus: np.ndarray
    j_minus: np.ndarray
    j_plus: np.ndarray


@dataclass(frozen=True)
class ModePotentials:
    pot0: np.ndarray        # F (l(l+1)/r^2 + F'/r + m^2 z^2)
    k: np.ndarray           # s z Vt
    k2: np.ndarray
    r_sq: np.ndarray        # conjugation weight for the nonnegative form


def build_grid(p: SpacetimeParams, h: HorizonStructure, x_min: float,
               x_max: float, n: int,
               tmap: TortoiseMap | None = None) -> RadialGrid:
    if not (x_min < 0.0 < x_max):
        raise ValueError("grid must straddle x = 0")
    if n < 2:
        raise ValueError("n must be >= 2")
    if tmap is None:
        tmap = build_tortoise_map(p, h)
    x = np.linspace(x_min, x_max, n)
    dx = x[1] - x[0]
    r = invert_tortoise(tmap, x)
    F, Fp, _ = horizon_function(p, r)
    V = 1.0 / r
    Vt = V - h.V["plus"]
    w = np.full(n, dx)
    w[0] = w[-1] = 0.5 * dx
    # resolution heuristic against the l=0, |z|=1 potential scale
    scale = float(np.sqrt(np.max(np.abs(F * (Fp / r + p.m ** 2)))))
    if scale > 0 and dx > 1.0 / (4.0 * scale):
        warnings.warn(
            f"dx = {dx:.3g} exceeds quarter inverse potential scale "
            f"{1.0 / (4.0 * scale):.3g}; results may be under-resolved",
            ResolutionWarning)
    return RadialGrid(x_min=x_min, x_max=x_max, n=n, dx=dx, x=x, r=r,
                      F=F, Fp=Fp, V=V, Vt=Vt, weights=w, params=p,
                      horizons=h, tortoise=tmap)


def mode_potentials(grid: RadialGrid, p: SpacetimeParams,
                    mode: ModeIndex) -> ModePotentials:
    ell, z = mode.ell, mode.zmode
    pot0 = grid.F * (ell * (ell + 1) / grid.r ** 2 + grid.Fp / grid.r
                     + p.m ** 2 * z ** 2)
    k = p.s * z * grid.Vt
    return ModePotentials(pot0=pot0, k=k, k2=k * k, r_sq=grid.r ** 2)


# ---------------------------------------------------------------------------
# cutoffs

def _smooth_step(y):
    """C^inf step: 0 for y <= 0, 1 for y >= 1, exp(-1/y) profile between."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    out[y >= 1.0] = 1.0
    mid = (y > 0.0) & (y < 1.0)
    ym = y[mid]
    f = np.exp(-1.0 / ym)
    g = np.exp(-1.0 / (1.0 - ym))
    out[mid] = f / (f + g)
    return out


def build_cutoffs(grid: RadialGrid, transition_width: float = 2.0) -> CutoffFamily:
    """Quadratic partition i_-^2 + i_+^2 = 1 anchored inside [-1, 1], and
    mollified steps j_- (one left of -1-width, zero right of -1) and j_+
    mirrored, so i_- j_- = j_-, i_+ j_+ = j_+, i_+- j_-+ = 0.
    """
    w = transition_width
    if not 0 < w <= 2.0:
        raise ValueError("transition_width must be in (0, 2]")
    x = grid.x
    prog = _smooth_step((x + 0.5 * w) / w)
    i_minus = np.cos(0.5 * np.pi * prog)
    i_plus = np.sin(0.5 * np.pi * prog)
    # exact support: cos(pi/2) rounds to ~6e-17, snap it
    i_minus[prog >= 1.0] = 0.0
    i_plus[prog <= 0.0] = 0.0
    j_minus = 1.0 - _smooth_step((x + 1.0 + w) / w)
    j_plus = _smooth_step((x - 1.0) / w)
    return CutoffFamily(i_minus=i_minus, i_plus=i_plus,
                        j_minus=j_minus, j_plus=j_plus)


# ---------------------------------------------------------------------------
# derivatives (4th order, one-sided at edges)

_C_INT = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_C_FWD = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


def deriv_x(u: np.ndarray, dx: float) -> np.ndarray:
    """4th-order first derivative; one-sided stencils at the 2-cell edges."""
    du = np.empty_like(u)
    du[2:-2] = (u[:-4] * _C_INT[0] + u[1:-3] * _C_INT[1]
                + u[3:-1] * _C_INT[3] + u[4:] * _C_INT[4]) / dx
    for i in (0, 1):
        du[i] = np.dot(_C_FWD, u[i:i + 5]) / dx
        du[-1 - i] = -np.dot(_C_FWD, u[-1 - i:-6 - i:-1]) / dx
    return du


# ---------------------------------------------------------------------------
# initial data

@dataclass(frozen=True)
class ProfileSpec:
    shape: str = "gaussian"        # 'gaussian' | 'bump' | 'zero'
    center: float = 0.0
    width: float = 5.0
    momentum: float = 0.0          # phase e^{i momentum x}
    amplitude: float = 1.0
    relation: str = "free"         # 'free' | 'incoming' | 'outgoing'


def _profile_values(spec: ProfileSpec, x: np.ndarray) -> np.ndarray:
    y = (x - spec.center) / spec.width
    if spec.shape == "zero":
        base = np.zeros_like(x)
    elif spec.shape == "gaussian":
        base = np.exp(-0.5 * y ** 2)
    elif spec.shape == "bump":
        base = np.zeros_like(x)
        inside = np.abs(y) < 1.0
        base[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2)) * np.e
    else:
        raise ValueError(f"unknown profile shape {spec.shape!r}")
    return spec.amplitude * base * np.exp(1j * spec.momentum * x)


def sample_initial_data(grid: RadialGrid, mode: ModeIndex,
                        spec: ProfileSpec):
    """(ModeState, support report). The incoming/outgoing relations set
    u1 = i L u0 with the horizon-side (L = -d_x - i s z Vt) or
    cosmological-side (L = d_x - i s z Vt) transport generator.
    """
    u0 = _profile_values(spec, grid.x).astype(complex)
    margin = 10
    edge_mag = max(np.max(np.abs(u0[:margin])), np.max(np.abs(u0[-margin:])))
    if edge_mag > 1e-14:
        raise SupportOverflow(
            f"profile magnitude {edge_mag:.3g} within {margin} cells of edge")
    szV = grid.params.s * mode.zmode * grid.Vt
    if spec.relation == "incoming":
        u1 = -1j * deriv_x(u0, grid.dx) + szV * u0
    elif spec.relation == "outgoing":
        u1 = 1j * deriv_x(u0, grid.dx) + szV * u0
    elif spec.relation == "free":
        u1 = np.zeros_like(u0)
    else:
        raise ValueError(f"unknown relation {spec.relation!r}")
    nz = np.nonzero(np.abs(u0) > 1e-14)[0]
    if len(nz):
        support = (float(grid.x[nz[0]]), float(grid.x[nz[-1]]))
        compact = spec.shape in ("bump", "zero")
    else:
        support = None
        compact = True
    report = {"compact_support": compact, "support": support}
    return ModeState(time=0.0, u0=u0, u1=u1), report


# ---------------------------------------------------------------------------
# checkpoints

def save_state_csv(grid: RadialGrid, state: ModeState, path):
    data = np.column_stack([grid.x, state.u0.real, state.u0.imag,
                            state.u1.real, state.u1.imag])
    header = f"time={state.time!r}\nx,re_u0,im_u0,re_u1,im_u1"
    np.savetxt(path, data, delimiter=",", header=header, fmt="%.17g")


def load_state_csv(path) -> ModeState:
    with open(path) as fh:
        first = fh.readline()
    time = float(first.split("time=")[1])
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    return ModeState(time=time,
                     u0=data[:, 1] + 1j * data[:, 2],
                     u1=data[:, 3] + 1j * data[:, 4])
