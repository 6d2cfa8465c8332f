"""Radial shooting solver for the zero-mass limit equation -Delta w = f(w).

The radial form w'' + (N-1)/r w' + f(w) = 0 is integrated from a series
start near r = 0. Trajectories either cross zero, approach the separatrix
fast-decay profile w ~ c r^-(N-2), or relax to the slow-decay regime where
r^(N-2) w grows. The separatrix is located by bisection on the sign of the
Robin combination a(r) = w + r w' / (N-2), which tends to the amplitude of
the unstable constant mode and never decreases along a trajectory
(a' = -r f(w) <= 0), so its endpoint sign separates the two sides far more
sharply than any classification of the truncated profile can.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigError, NumericalError
from .fields import fit_log_slope, panel_integrate_1d, unit_sphere_area


@dataclass(frozen=True)
class ShootOpts:
    rtol: float = 1e-10
    atol: float = 1e-14
    n_nodes: int = 2049
    r0: float = 1e-4


@dataclass(eq=False)
class RadialProfile:
    """Shot trajectory on log-spaced nodes with decay-fit metadata.

    Calls interpolate with a cubic Hermite spline on the stored range, the
    even series below the first node, and the fitted envelope
    c r^-(N-2) beyond the last node.
    """

    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    N: int
    u0: float
    classification: str
    decay_exponent: float = math.nan
    grad_decay_exponent: float = math.nan
    A4: float = math.nan
    A5: float = math.nan
    A6: float = math.nan
    sup_norm: float = math.nan
    plateau_stat: float = math.nan
    envelope_c: float = math.nan
    series: tuple = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nodes.size >= 2:
            self._spline = CubicHermiteSpline(self.nodes, self.values, self.derivs)
            self._dspline = self._spline.derivative()
        else:
            self._spline = self._dspline = None

    @property
    def r_end(self) -> float:
        return float(self.nodes[-1]) if self.nodes.size else 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        a2, a4 = self.series
        lo = r < self.nodes[0]
        hi = r > self.nodes[-1]
        mid = ~(lo | hi)
        out[lo] = self.u0 + a2 * r[lo] ** 2 + a4 * r[lo] ** 4
        out[mid] = self._spline(r[mid])
        c = self.envelope_c
        out[hi] = c * r[hi] ** (-(self.N - 2)) if math.isfinite(c) else 0.0
        return out

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        a2, a4 = self.series
        lo = r < self.nodes[0]
        hi = r > self.nodes[-1]
        mid = ~(lo | hi)
        out[lo] = 2 * a2 * r[lo] + 4 * a4 * r[lo] ** 3
        out[mid] = self._dspline(r[mid])
        c = self.envelope_c
        n = self.N - 2
        out[hi] = -n * c * r[hi] ** (-(n + 1)) if math.isfinite(c) else 0.0
        return out


def _series_coeffs(nl, u0: float, N: int):
    f0 = float(nl.f(u0))
    fp0 = float(nl.fprime(u0))
    a2 = -f0 / (2.0 * N)
    a4 = f0 * fp0 / (8.0 * N * (N + 2))
    return a2, a4


def _plateau(nodes, values, N, r_max):
    window = (nodes >= r_max / 10.0) & (nodes <= r_max / 2.0)
    if window.sum() < 8:
        return math.inf, 0.0
    q = nodes[window] ** (N - 2) * values[window]
    mean = float(q.mean())
    if mean <= 0:
        return math.inf, mean
    return float(q.std() / mean), mean


def shoot(nl, N: int, u0: float, r_max: float = 1e3,
          opts: ShootOpts | None = None):
    """Integrate one trajectory; returns (RadialProfile, classification)."""
    opts = opts or ShootOpts()
    if N < 3:
        raise ConfigError("the zero-mass setting needs N >= 3")
    if u0 < 0 or u0 >= nl.gamma:
        raise ConfigError(f"u0 must lie in [0, gamma); got {u0}")
    if u0 == 0.0:
        nodes = np.geomspace(opts.r0, r_max, 65)
        zeros = np.zeros_like(nodes)
        prof = RadialProfile(nodes=nodes, values=zeros, derivs=zeros, N=N,
                             u0=0.0, classification="slow_decay", sup_norm=0.0,
                             envelope_c=0.0)
        return prof, "slow_decay"

    a2, a4 = _series_coeffs(nl, u0, N)
    r0 = opts.r0
    w0 = u0 + a2 * r0 ** 2 + a4 * r0 ** 4
    wp0 = 2 * a2 * r0 + 4 * a4 * r0 ** 3

    def rhs(r, y):
        return (y[1], -(N - 1) / r * y[1] - float(nl.f(y[0])))

    def crossing(r, y):
        return y[0] + 1e-14

    crossing.terminal = True
    crossing.direction = -1.0

    nodes = np.geomspace(r0, r_max, opts.n_nodes)
    sol = solve_ivp(rhs, (r0, r_max), (w0, wp0), method="RK45",
                    rtol=opts.rtol, atol=opts.atol, t_eval=nodes,
                    events=(crossing,))
    if sol.status == -1:
        raise NumericalError(f"integrator failed at u0={u0}: {sol.message}")

    t = sol.t
    w = sol.y[0]
    wp = sol.y[1]
    if sol.status == 1:  # crossing event
        t = np.append(t, sol.t_events[0][0])
        w = np.append(w, sol.y_events[0][0][0])
        wp = np.append(wp, sol.y_events[0][0][1])
        label = "crossing"
        stat = math.inf
    else:
        stat, _ = _plateau(t, w, N, r_max)
        label = "fast_decay" if stat < 0.02 else "slow_decay"

    prof = RadialProfile(nodes=t, values=w, derivs=wp, N=N, u0=u0,
                         classification=label, sup_norm=float(w0),
                         plateau_stat=stat, series=(a2, a4),
                         meta={"rtol": opts.rtol})
    return prof, label


def _edge_statistic(prof: RadialProfile) -> float:
    """a(r_end) = w + r w'/(N-2); positive on the slow side, negative once
    the trajectory has committed to crossing."""
    r = prof.r_end
    return float(prof.values[-1] + r * prof.derivs[-1] / (prof.N - 2))


def find_fast_decay(nl, N: int, bracket=None, tol: float = 1e-15,
                    r_max: float = 1e3, final_nodes: int = 32769):
    """Bisect to the separatrix and return (u0*, profile).

    The bracket must separate the edge-statistic signs; when omitted it is
    found by a coarse scan of (0, gamma). The final profile is re-solved at
    tight tolerance on a dense log grid and carries tail fits.
    """
    gamma = nl.gamma
    scan_opts = ShootOpts(rtol=1e-12, atol=1e-15, n_nodes=257)

    def edge(u0):
        prof, _ = shoot(nl, N, u0, r_max, scan_opts)
        return _edge_statistic(prof)

    if bracket is None:
        us = np.linspace(0.05, 0.995, 25) * gamma
        vals = [edge(u) for u in us]
        signs = np.sign(vals)
        flips = np.nonzero(np.diff(signs) < 0)[0]
        if flips.size == 0:
            raise NumericalError("no separatrix bracket found in (0, gamma)")
        if flips.size > 1:
            raise NumericalError(
                f"multiple sign changes of the edge statistic at u0 = "
                f"{[float(us[i]) for i in flips]}; refusing to pick one")
        lo, hi = float(us[flips[0]]), float(us[flips[0] + 1])
        e_lo, e_hi = vals[flips[0]], vals[flips[0] + 1]
    else:
        lo, hi = map(float, bracket)
        e_lo, e_hi = edge(lo), edge(hi)
        if not (e_lo > 0 > e_hi):
            raise NumericalError(
                f"bracket does not separate: a({lo})={e_lo:.3e}, "
                f"a({hi})={e_hi:.3e}")

    while hi - lo > max(tol, 4 * np.finfo(float).eps * hi):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if edge(mid) > 0:
            lo = mid
        else:
            hi = mid

    u0_star = 0.5 * (lo + hi)
    final_opts = ShootOpts(rtol=1e-12, atol=1e-15, n_nodes=final_nodes)
    prof, label = shoot(nl, N, u0_star, r_max, final_opts)
    if label == "crossing":
        # the midpoint fell a hair on the crossing side; take the slow edge
        prof, label = shoot(nl, N, lo, r_max, final_opts)
        u0_star = lo
    prof = _fit_tail(prof, r_max)
    if prof.plateau_stat >= 0.02:
        raise NumericalError(
            f"refined trajectory fails the plateau certificate "
            f"(stat={prof.plateau_stat:.3g}); bracket [{lo}, {hi}]")
    return u0_star, prof


def _fit_tail(prof: RadialProfile, r_max: float) -> RadialProfile:
    N = prof.N
    r = prof.nodes
    w = prof.values
    wp = prof.derivs
    window = (r >= r_max / 10.0) & (r <= r_max / 2.0)
    rw = r[window]
    slope = fit_log_slope(rw, w[window]).slope
    gslope = fit_log_slope(rw, np.abs(wp[window])).slope
    A4 = float(np.min(w[window] * (1.0 + rw) ** (N - 2)))
    A5 = float(np.max(w[window] * (1.0 + rw) ** (N - 2)))
    A6 = float(np.max(np.abs(wp[window]) * (1.0 + rw) ** (N - 1)))
    stat, _ = _plateau(r, w, N, r_max)
    c_end = -float(wp[-1]) * prof.r_end ** (N - 1) / (N - 2)
    return replace(prof, decay_exponent=float(slope),
                   grad_decay_exponent=float(gslope), A4=A4, A5=A5, A6=A6,
                   plateau_stat=stat, envelope_c=c_end)


def ode_residual(prof: RadialProfile, nl) -> float:
    """Max interior residual |w'' + (N-1)/r w' + f(w)|.

    w'' is taken as the log-grid derivative of the stored w' (fourth-order
    central differences in t = ln r), which avoids the catastrophic
    cancellation of differencing w itself near the origin.
    """
    t = np.log(prof.nodes)
    h = np.diff(t)
    if prof.nodes.size < 9 or h.std() > 1e-9 * h.mean():
        raise NumericalError("residual check needs a uniform log grid")
    h = float(h.mean())
    wp = prof.derivs
    dwp = (wp[:-4] - 8 * wp[1:-3] + 8 * wp[3:-1] - wp[4:]) / (12 * h)
    r = prof.nodes[2:-2]
    wpp = dwp / r
    resid = wpp + (prof.N - 1) * wp[2:-2] / r + np.asarray(nl.f(prof.values[2:-2]))
    return float(np.max(np.abs(resid)))


def limit_energy(w: RadialProfile, nl):
    """(m, grad_norm_sq) for the limit functional, with analytic head and
    tail corrections from the series start and the fitted envelope."""
    base = _base_integrals(w, nl)
    m = 0.5 * base["grad_sq"] - base["F_mass"]
    return m, base["grad_sq"]


def _base_integrals(prof: RadialProfile, nl):
    N = prof.N
    omega = unit_sphere_area(N)
    r = prof.nodes
    t = np.log(r)
    w = prof.values
    wp = prof.derivs
    rN = r ** N  # dx measure in t: r^(N-1) dr = r^N dt

    grad = omega * simpson(wp ** 2 * rN, x=t)
    Fm = omega * simpson(np.asarray(nl.F(w)) * rN, x=t)

    # head [0, r0]: w' ~ 2 a2 r, F ~ F(u0)
    a2, _ = prof.series
    r0 = float(r[0])
    grad += omega * (2 * a2) ** 2 * r0 ** (N + 2) / (N + 2)
    Fm += omega * float(nl.F(prof.u0)) * r0 ** N / N

    # tail beyond r_end from the envelope c r^-(N-2)
    c = prof.envelope_c
    L = prof.r_end
    if math.isfinite(c) and c > 0:
        grad += omega * (N - 2) * c ** 2 * L ** (-(N - 2))
        wL = c * L ** (-(N - 2))
        FL = float(nl.F(wL))
        if FL > 0:
            q_loc = wL * float(nl.f(wL)) / FL  # local log-slope of F
            Fm += omega * FL * L ** N / (q_loc * (N - 2) - N)
    return {"grad_sq": float(grad), "F_mass": float(Fm)}


@dataclass(eq=False)
class RadialField:
    """A dilated ground-state field u(x) = w(|x| / a) with exact scalings.

    Dilation is a parameter change, so the scaling laws
    grad_sq = a^(N-2) G and F_mass = a^N int F(w) hold exactly.
    """

    profile: RadialProfile
    nl: object
    a: float = 1.0

    def __post_init__(self):
        self._base = _base_integrals(self.profile, self.nl)

    @property
    def N(self) -> int:
        return self.profile.N

    def grad_sq(self) -> float:
        return self.a ** (self.N - 2) * self._base["grad_sq"]

    def F_mass(self, nl=None) -> float:
        return self.a ** self.N * self._base["F_mass"]

    def dilate(self, s: float) -> "RadialField":
        return RadialField(profile=self.profile, nl=self.nl, a=self.a * s)

    def weighted_sq(self, g_of_r) -> float:
        """int g(|x|) u(x)^2 dx by radial quadrature with an envelope tail."""
        N = self.N
        omega = unit_sphere_area(N)
        r = self.profile.nodes
        t = np.log(r)
        w2 = self.profile.values ** 2
        val = omega * simpson(np.asarray(g_of_r(self.a * r)) * w2 * r ** N, x=t)
        val *= self.a ** N
        # head: u ~ u0^2 over a ball of radius a r0
        val += omega * float(g_of_r(0.0)) * self.profile.u0 ** 2 \
            * (self.a * r[0]) ** N / N
        # tail: u^2 r^(N-1) ~ c^2 a^(2N-4)? expressed in the outer variable
        c = self.profile.envelope_c
        if math.isfinite(c) and c > 0:
            L = self.a * self.profile.r_end
            cc = c * self.a ** (N - 2)
            edges = np.geomspace(L, 1e6 * L, 257)
            tail, _ = panel_integrate_1d(
                lambda s: np.asarray(g_of_r(s)) * cc ** 2
                * s ** (N - 1 - 2 * (N - 2)),
                edges, order=8)
            val += omega * tail
        return float(val)

    def power_moment(self, p: float):
        """(int |u|^p, int z |u|^p); the axial moment vanishes by symmetry."""
        N = self.N
        if p * (N - 2) <= N:
            raise NumericalError(f"moment power {p} diverges for decay {N - 2}")
        omega = unit_sphere_area(N)
        r = self.profile.nodes
        t = np.log(r)
        mass = omega * simpson(np.abs(self.profile.values) ** p * r ** N, x=t)
        c = self.profile.envelope_c
        L = self.profile.r_end
        if math.isfinite(c) and c > 0:
            q = p * (N - 2) - N
            mass += omega * (c * L ** (-(N - 2))) ** p * L ** N / q
        mass *= self.a ** N
        return float(mass), 0.0

    def residual_sq(self, pot, nl) -> float:
        """int (-Delta u + V u - f(u))^2 dx via the stored ODE residual."""
        N = self.N
        omega = unit_sphere_area(N)
        prof = self.profile
        t = np.log(prof.nodes)
        h = float(np.mean(np.diff(t)))
        wp = prof.derivs
        dwp = (wp[:-4] - 8 * wp[1:-3] + 8 * wp[3:-1] - wp[4:]) / (12 * h)
        r = prof.nodes[2:-2]
        w = prof.values[2:-2]
        lap = dwp / r + (N - 1) * wp[2:-2] / r
        fw = np.asarray(nl.f(w))
        if pot is None:
            v = 0.0
        elif pot.radial is not None:
            v = np.asarray(pot.radial.v(self.a * r))
        else:
            pts = np.zeros((r.size, N))
            pts[:, 0] = self.a * r
            v = np.asarray(pot.V(pts))
        # -Delta u = (1/a^2)(lap applied to w)(x/a); f(u) = f(w)
        dens = -lap / self.a ** 2 + v * w - fw
        val = omega * simpson(dens ** 2 * r ** N, x=np.log(r)) * self.a ** N
        return float(val)


@dataclass(frozen=True, eq=False)
class GroundState:
    u0: float
    profile: RadialProfile
    m: float
    grad_norm_sq: float
    nl: object

    def field(self) -> RadialField:
        return RadialField(profile=self.profile, nl=self.nl)


def ground_state(nl, N: int = 3, r_max: float = 1e3, tol: float = 1e-15,
                 final_nodes: int = 32769) -> GroundState:
    u0, prof = find_fast_decay(nl, N, tol=tol, r_max=r_max,
                               final_nodes=final_nodes)
    m, grad = limit_energy(prof, nl)
    return GroundState(u0=u0, profile=prof, m=m, grad_norm_sq=grad, nl=nl)
