"""Two-soliton trial fields and their interaction estimates.

U(x) = w((x - R y0)/lam) + w((x - R y)/(1 - lam)) with |y0| = 1 and
|y - y0| = 2. The centers and the origin must be collinear so that every
integral (including the radial-potential terms) reduces to an axisymmetric
(z, rho) quadrature; the non-collinear case would need a ring quadrature
and nothing downstream uses it.

Interaction quantities measured here, per R:
  epsilon        int f(w0) wy
  grad overlap   int grad w0 . grad wy   (= epsilon / lam^2 up to the
                 trajectory residual, via the divergence theorem)
  cross term     int [F(U) - F(w0) - F(wy) - f(w0) wy - f(wy) w0]
  mixed powers   int w0^a wy^b
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ResolutionError
from .fields import (PanelGrid, SlopeFit, _axis_projection, fit_log_slope,
                     unit_sphere_area)


@dataclass(frozen=True)
class TwoBumpConfig:
    y0: tuple
    y: tuple
    lam: float
    R: float
    s: float | None = None

    def __post_init__(self):
        y0 = np.asarray(self.y0, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if y0.shape != y.shape or y0.ndim != 1:
            raise ConfigError("y0 and y must be vectors of equal dimension")
        if abs(np.linalg.norm(y0) - 1.0) > 1e-12:
            raise ConfigError(f"|y0| must be 1, got {np.linalg.norm(y0)}")
        if abs(np.linalg.norm(y - y0) - 2.0) > 1e-12:
            raise ConfigError(f"|y - y0| must be 2, got {np.linalg.norm(y - y0)}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.R < 1.0:
            raise ConfigError(f"R must be >= 1, got {self.R}")
        object.__setattr__(self, "y0", tuple(y0))
        object.__setattr__(self, "y", tuple(y))

    @property
    def N(self) -> int:
        return len(self.y0)

    @property
    def lambda_minus(self) -> float:
        return min(self.lam, 1.0 - self.lam)

    def mirrored(self) -> "TwoBumpConfig":
        return TwoBumpConfig(y0=self.y, y=self.y0, lam=1.0 - self.lam,
                             R=self.R, s=self.s)


def antipodal_config(R: float, lam: float, N: int = 3,
                     s: float | None = None) -> TwoBumpConfig:
    e1 = (1.0,) + (0.0,) * (N - 1)
    m1 = (-1.0,) + (0.0,) * (N - 1)
    return TwoBumpConfig(y0=e1, y=m1, lam=lam, R=R, s=s)


class BumpsField:
    """Sum of dilated translated copies of a radial profile, on an
    axisymmetric panel grid whose axis passes through all centers and the
    origin. Zero-scale bumps are dropped."""

    def __init__(self, profile, nl, centers_z, scales, h0=0.02, ratio=1.08,
                 order=8, extent=None):
        keep = [(float(c), float(s)) for c, s in zip(centers_z, scales)
                if s > 0.0]
        if not keep:
            raise ConfigError("at least one bump needs a positive scale")
        self.profile = profile
        self.nl = nl
        self.centers_z = tuple(c for c, _ in keep)
        self.scales = tuple(s for _, s in keep)
        self.N = profile.N
        span = max(abs(c) for c in self.centers_z)
        self.extent = float(extent) if extent is not None \
            else max(350.0, 5.0 * span)
        if self.extent < 2.0 * span:
            raise ConfigError(
                f"grid extent {self.extent} does not cover centers at "
                f"{self.centers_z}")
        self.grid = PanelGrid.build(self.N, centers_z=self.centers_z,
                                    z_extent=self.extent, h0=h0, ratio=ratio,
                                    order=order)
        self._quad = {"h0": h0, "ratio": ratio, "order": order}
        self._cache = {}

    # per-bump geometry and values on the main grid, cached

    def _geom(self, i):
        key = ("geom", i)
        if key not in self._cache:
            Z, Rho = self.grid.mesh()
            d = np.hypot(Z - self.centers_z[i], Rho)
            with np.errstate(invalid="ignore", divide="ignore"):
                ez = np.where(d > 0, (Z - self.centers_z[i]) / np.maximum(d, 1e-300), 0.0)
                er = np.where(d > 0, Rho / np.maximum(d, 1e-300), 0.0)
            self._cache[key] = (d, ez, er)
        return self._cache[key]

    def bump_values(self, i):
        key = ("w", i)
        if key not in self._cache:
            d, _, _ = self._geom(i)
            self._cache[key] = self.profile(d / self.scales[i])
        return self._cache[key]

    def bump_grads(self, i):
        key = ("gw", i)
        if key not in self._cache:
            d, ez, er = self._geom(i)
            wp = self.profile.deriv(d / self.scales[i]) / self.scales[i]
            self._cache[key] = (wp * ez, wp * er)
        return self._cache[key]

    def values(self):
        if "U" not in self._cache:
            self._cache["U"] = sum(self.bump_values(i)
                                   for i in range(len(self.scales)))
        return self._cache["U"]

    # far-zone corrections: outside the quadrature cylinder every bump is in
    # its envelope regime, so the missing mass of any integrand behaving like
    # A r^(-2(N-1)) is A times the exterior integral below.

    def _exterior_integral(self) -> float:
        E = self.extent
        if self.N == 3:
            # exact exterior of the half-cylinder [-E,E] x [0,E] for r^-4
            return (math.pi ** 2 / 2.0 + 2.0 * math.pi) / E
        return unit_sphere_area(self.N) / ((self.N - 2)
                                           * E ** (self.N - 2))

    def _envelope_amp(self, i) -> float:
        c = self.profile.envelope_c
        return (self.N - 2) * c * self.scales[i] ** (self.N - 2)

    # field protocol

    def grad_sq(self) -> float:
        gz = sum(self.bump_grads(i)[0] for i in range(len(self.scales)))
        gr = sum(self.bump_grads(i)[1] for i in range(len(self.scales)))
        main = float(self.grid.integrate(gz ** 2 + gr ** 2))
        amp = sum(self._envelope_amp(i) for i in range(len(self.scales)))
        if math.isfinite(amp):
            main += amp ** 2 * self._exterior_integral()
        return main

    def F_mass(self, nl=None) -> float:
        nl = nl or self.nl
        return float(self.grid.integrate(np.asarray(nl.F(self.values()))))

    def _radius(self):
        if "r" not in self._cache:
            Z, Rho = self.grid.mesh()
            self._cache["r"] = np.hypot(Z, Rho)
        return self._cache["r"]

    def weighted_sq(self, g_of_r) -> float:
        return float(self.grid.integrate(np.asarray(g_of_r(self._radius()))
                                         * self.values() ** 2))

    def weighted_sq_fast(self, g_of_r, n_bins: int = 32768) -> float:
        """weighted_sq through a log-binned radial reduction of U^2 times
        the quadrature weight. Bins carry their U^2-weighted mean radius, so
        the residual error is second order in the bin width (~1e-8 here);
        evaluation per weight function is then one n_bins-sized dot."""
        key = ("reduction", n_bins)
        if key not in self._cache:
            r = self._radius().ravel()
            q = (self.grid.weight * self.values() ** 2).ravel()
            lo = max(float(r.min()), 1e-9)
            hi = float(r.max()) * (1.0 + 1e-12)
            idx = np.clip(((np.log(r) - math.log(lo))
                           / (math.log(hi) - math.log(lo))
                           * n_bins).astype(np.int64), 0, n_bins - 1)
            Q = np.bincount(idx, weights=q, minlength=n_bins)
            M1 = np.bincount(idx, weights=q * r, minlength=n_bins)
            keep = Q != 0.0
            self._cache[key] = (M1[keep] / Q[keep], Q[keep])
        r_bar, Q = self._cache[key]
        return float(np.dot(np.asarray(g_of_r(r_bar)), Q))

    def power_moment(self, p: float):
        Z, _ = self.grid.mesh()
        a = np.abs(self.values()) ** p
        return (float(self.grid.integrate(a)),
                float(self.grid.integrate(Z * a)))

    def residual_sq(self, pot, nl=None) -> float:
        """-Delta U is analytic here: each bump contributes f(w_i)/scale_i^2
        up to the trajectory residual, so no discrete Laplacian is needed."""
        nl = nl or self.nl
        neg_lap = sum(np.asarray(nl.f(self.bump_values(i))) / self.scales[i] ** 2
                      for i in range(len(self.scales)))
        dens = neg_lap - np.asarray(nl.f(self.values()))
        if pot is not None:
            if pot.radial is None:
                raise ConfigError("residual needs a radially profiled potential")
            Z, Rho = self.grid.mesh()
            dens = dens + np.asarray(pot.radial.v(np.hypot(Z, Rho))) * self.values()
        return float(self.grid.integrate(dens ** 2))

    def dilate(self, s: float) -> "BumpsField":
        if s <= 0:
            raise ConfigError("dilation factor must be positive")
        return BumpsField(self.profile, self.nl,
                          centers_z=[c * s for c in self.centers_z],
                          scales=[a * s for a in self.scales],
                          extent=self.extent * s, **self._quad)

    def grad_tail_estimate(self) -> float:
        """Residual gradient-tail uncertainty after the far-zone correction
        (the correction itself is applied inside grad_sq)."""
        amp = sum(self._envelope_amp(i) for i in range(len(self.scales)))
        if not math.isfinite(amp):
            return math.inf
        corr = amp ** 2 * self._exterior_integral()
        span = max(abs(c) for c in self.centers_z)
        return corr * (span / self.extent + 0.02)

    def coarse_grid(self) -> PanelGrid:
        if "coarse" not in self._cache:
            self._cache["coarse"] = self.grid.coarse()
        return self._cache["coarse"]

    def integrate_fn(self, fun):
        """(value, error estimate) for a pointwise integrand fun(Z, Rho),
        re-evaluated on the embedded coarse rule."""
        coarse = self.coarse_grid()
        v = float(self.grid.integrate(fun(*self.grid.mesh())))
        vc = float(coarse.integrate(fun(*coarse.mesh())))
        return v, abs(v - vc)


def build_U(w, nl, cfg: TwoBumpConfig, **quad) -> BumpsField:
    proj = _axis_projection(np.asarray(cfg.y0), np.asarray(cfg.y), cfg.N)
    if proj is None:
        raise ConfigError(
            "bump centers and the origin must be collinear; pass y = -y0 "
            "(or y = 3 y0) to keep the axisymmetric quadrature valid")
    _, c1, c2 = proj
    return BumpsField(w, nl, centers_z=(cfg.R * c1, cfg.R * c2),
                      scales=(cfg.lam, 1.0 - cfg.lam), **quad)


def _pair_field(w, nl, cfg, fld=None, **quad):
    if cfg.lam in (0.0, 1.0):
        return None
    if fld is None:
        fld = build_U(w, nl, cfg, **quad)
    if len(fld.scales) != 2:
        raise ConfigError("interaction quantities need both bumps present")
    return fld


def epsilon(w, nl, cfg: TwoBumpConfig, fld: BumpsField | None = None,
            swap: bool = False, **quad) -> float:
    """int f(w0) wy (or the swapped integrand); 0 exactly at lam in {0,1}."""
    fld = _pair_field(w, nl, cfg, fld, **quad)
    if fld is None:
        return 0.0
    i, j = (1, 0) if swap else (0, 1)
    val = float(fld.grid.integrate(
        np.asarray(nl.f(fld.bump_values(i))) * fld.bump_values(j)))
    ci, si = fld.centers_z[i], fld.scales[i]
    cj, sj = fld.centers_z[j], fld.scales[j]
    coarse = fld.coarse_grid()
    Zc, Rc = coarse.mesh()
    vc = float(coarse.integrate(
        np.asarray(nl.f(w(np.hypot(Zc - ci, Rc) / si)))
        * w(np.hypot(Zc - cj, Rc) / sj)))
    err = abs(val - vc)
    if err > 0.02 * abs(val):
        raise ResolutionError(
            f"epsilon error estimate {err:.3e} exceeds 2% of {val:.3e}")
    return val


def grad_interaction(fld: BumpsField) -> float:
    """int grad w0 . grad wy, with the far-zone envelope correction; the
    raw truncated integral is biased by an R-independent O(1/extent) term
    that would swamp the R^-(N-2) signal at large R."""
    g0z, g0r = fld.bump_grads(0)
    g1z, g1r = fld.bump_grads(1)
    main = float(fld.grid.integrate(g0z * g1z + g0r * g1r))
    amp = fld._envelope_amp(0) * fld._envelope_amp(1)
    if math.isfinite(amp):
        main += amp * fld._exterior_integral()
    return main


def cross_term(fld: BumpsField, nl=None) -> float:
    """int [F(U) - F(w0) - F(wy) - f(w0) wy - f(wy) w0], summed in
    compensated arithmetic since the integrand is a near-cancellation."""
    nl = nl or fld.nl
    w0 = fld.bump_values(0)
    w1 = fld.bump_values(1)
    U = fld.values()
    t = (np.asarray(nl.F(U)) - np.asarray(nl.F(w0)) - np.asarray(nl.F(w1))
         - np.asarray(nl.f(w0)) * w1 - np.asarray(nl.f(w1)) * w0)
    # numpy's pairwise summation keeps the cancellation error near roundoff
    return float(np.sum(fld.grid.weight * t))


def mixed_power(fld: BumpsField, alpha_bar: float, beta_bar: float) -> float:
    if 2 * alpha_bar <= fld.nl.two_star or beta_bar < 1:
        raise ConfigError(
            f"mixed power needs 2 alpha > 2* and beta >= 1; got "
            f"({alpha_bar}, {beta_bar})")
    w0 = fld.bump_values(0)
    w1 = fld.bump_values(1)
    return float(fld.grid.integrate(w0 ** alpha_bar * w1 ** beta_bar))


def windowed_mass_sq(fld: BumpsField, T: float) -> float:
    """int U^2 over the union of balls B(center, T); the full integral
    diverges for N = 3 so comparisons use matched windows."""
    Z, Rho = fld.grid.mesh()
    mask = np.zeros(Z.shape, dtype=bool)
    for c in fld.centers_z:
        mask |= np.hypot(Z - c, Rho) < T
    return float(fld.grid.integrate(fld.values() ** 2 * mask))


@dataclass(frozen=True)
class InteractionRow:
    R: float
    epsilon: float
    grad_overlap: float
    cross: float
    cross_over_eps: float
    mixed: dict


@dataclass(frozen=True)
class InteractionReport:
    lam: float
    rows: tuple
    eps_fit: SlopeFit
    grad_fit: SlopeFit
    mixed_fits: dict
    ratio_decreasing: bool
    fmin_ball: float

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "rows": [{"R": r.R, "epsilon": r.epsilon,
                      "grad_overlap": r.grad_overlap, "cross": r.cross,
                      "cross_over_eps": r.cross_over_eps,
                      "mixed": {str(k): v for k, v in r.mixed.items()}}
                     for r in self.rows],
            "eps_slope": self.eps_fit.slope,
            "grad_slope": self.grad_fit.slope,
            "mixed_slopes": {str(k): f.slope for k, f in self.mixed_fits.items()},
            "ratio_decreasing": self.ratio_decreasing,
            "fmin_ball": self.fmin_ball,
        }


def interaction_suite(w, nl, cfg_list, mixed_powers=((5.0, 1.0),),
                      **quad) -> InteractionReport:
    """R-scan of all interaction quantities at fixed (y0, y, lambda)."""
    cfgs = list(cfg_list)
    if len(cfgs) < 3:
        raise ConfigError("interaction scan needs at least 3 radii")
    key = (cfgs[0].y0, cfgs[0].y, cfgs[0].lam)
    if any((c.y0, c.y, c.lam) != key for c in cfgs):
        raise ConfigError("scan must vary R only")
    if not 0.0 < cfgs[0].lam < 1.0:
        raise ConfigError("interaction scan needs lambda inside (0, 1)")

    rows = []
    for cfg in cfgs:
        fld = build_U(w, nl, cfg, **quad)
        eps = epsilon(w, nl, cfg, fld=fld)
        gi = grad_interaction(fld)
        ct = cross_term(fld, nl)
        mixed = {(a, b): mixed_power(fld, a, b) for a, b in mixed_powers}
        rows.append(InteractionRow(R=cfg.R, epsilon=eps, grad_overlap=gi,
                                   cross=ct, cross_over_eps=ct / eps,
                                   mixed=mixed))

    Rs = np.array([r.R for r in rows])
    eps_fit = fit_log_slope(Rs, np.array([r.epsilon for r in rows]))
    grad_fit = fit_log_slope(Rs, np.abs([r.grad_overlap for r in rows]))
    mixed_fits = {
        key: fit_log_slope(Rs, np.array([r.mixed[key] for r in rows]))
        for key in rows[0].mixed
    }
    ratios = np.abs([r.cross_over_eps for r in rows])
    decreasing = bool(np.all(np.diff(ratios) < 0.0))
    rr = np.linspace(0.0, 1.0, 201)
    fmin = float(np.min(np.asarray(nl.f(w(rr)))))
    return InteractionReport(lam=cfgs[0].lam, rows=tuple(rows),
                             eps_fit=eps_fit, grad_fit=grad_fit,
                             mixed_fits=mixed_fits, ratio_decreasing=decreasing,
                             fmin_ball=fmin)


def near_additivity_check(nl, n_pairs: int = 10_000, C5: float | None = None,
                          seed: int = 20250822, slack: float = 1.05) -> dict:
    """Fit the smallest C6 with |f(u+v)-f(u)-f(v)| <= C6 |uv|^sigma and
    |F(u+v)-F(u)-F(v)-f(u)v-f(v)u| <= C6 |uv|^(2 sigma) on a random
    sample, then verify both hold (with slack) on a fresh holdout."""
    C5 = float(nl.gamma) if C5 is None else float(C5)
    sigma = min(nl.two_star / 4.0, 1.0)
    rng = np.random.default_rng(seed)

    def ratios(n):
        u = rng.uniform(-C5, C5, n)
        v = rng.uniform(-C5, C5, n)
        uv = np.abs(u * v)
        ok = uv > 1e-12
        u, v, uv = u[ok], v[ok], uv[ok]
        fu = np.asarray(nl.f(u))
        fv = np.asarray(nl.f(v))
        r1 = np.abs(np.asarray(nl.f(u + v)) - fu - fv) / uv ** sigma
        r2 = np.abs(np.asarray(nl.F(u + v)) - np.asarray(nl.F(u))
                    - np.asarray(nl.F(v)) - fu * v - fv * u) / uv ** (2 * sigma)
        return float(r1.max()), float(r2.max())

    fit1, fit2 = ratios(n_pairs)
    C6 = max(fit1, fit2)
    hold1, hold2 = ratios(n_pairs)
    passed = hold1 <= slack * C6 and hold2 <= slack * C6
    return {"sigma": sigma, "C5": C5, "C6": C6,
            "fit_ratio_f": fit1, "fit_ratio_F": fit2,
            "holdout_ratio_f": hold1, "holdout_ratio_F": hold2,
            "n_pairs": n_pairs, "passed": bool(passed)}
