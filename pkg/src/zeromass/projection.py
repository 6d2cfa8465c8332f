"""Dilation projection onto the Pohozaev manifold.

xi(s) = I_V(u(./s)) = s^(N-2)/2 G + s^N/2 Vq(s) - s^N Fi with
Vq(s) = int V(sx) u^2 and Wq(s) = int (grad V . x)(sx) u^2. The root of
xi'(s) is found by a bracketed superlinear solver; uniqueness is certified
(not proven) by sampling psi(s) = s^2 [Fi - (Wq(s)/N + Vq(s))/2], which is
strictly increasing exactly when the root is unique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, ProjectionError
from .two_bump import antipodal_config, build_U

ROOT_TOL = 1e-10


@dataclass(frozen=True)
class ProjectionResult:
    s_star: float
    bracket: tuple
    xi_samples: tuple
    psi_samples: tuple
    unique: bool
    projected_energy: float
    jv_scaled: float
    iterations: int

    def as_dict(self) -> dict:
        return {"s_star": self.s_star, "bracket": list(self.bracket),
                "unique": self.unique,
                "projected_energy": self.projected_energy,
                "jv_scaled": self.jv_scaled, "iterations": self.iterations}


class _Terms:
    """Caches the dilation monomials; the potential terms are re-evaluated
    per s by rescaling the radial weight, never by resampling u."""

    def __init__(self, u, pot, nl):
        self.N = u.N
        self.G = u.grad_sq()
        self.Fi = u.F_mass(nl)
        if pot is None:
            self.v = self.dv = None
        else:
            if pot.radial is None:
                raise ConfigError(
                    f"potential '{pot.name}' has no radial profile")
            self.v = pot.radial.v
            self.dv = pot.radial.dv
        self.u = u
        self._wsq = getattr(u, "weighted_sq_fast", u.weighted_sq)
        self._vq = {}
        self._wq = {}

    def Vq(self, s: float) -> float:
        if self.v is None:
            return 0.0
        if s not in self._vq:
            self._vq[s] = self._wsq(lambda r: self.v(s * r))
        return self._vq[s]

    def Wq(self, s: float) -> float:
        if self.dv is None:
            return 0.0
        if s not in self._wq:
            self._wq[s] = self._wsq(
                lambda r: np.asarray(self.dv(s * r)) * (s * r))
        return self._wq[s]

    def xi(self, s: float):
        N = self.N
        value = 0.5 * s ** (N - 2) * self.G \
            + s ** N * (0.5 * self.Vq(s) - self.Fi)
        deriv = 0.5 * (N - 2) * s ** (N - 3) * self.G + s ** (N - 1) * (
            N * (0.5 * self.Vq(s) - self.Fi) + 0.5 * self.Wq(s))
        return value, deriv

    def psi(self, s: float) -> float:
        return s ** 2 * (self.Fi - 0.5 * (self.Wq(s) / self.N + self.Vq(s)))

    def jv_scale(self, s: float) -> float:
        N = self.N
        return max(abs(0.5 * (N - 2) * s ** (N - 2) * self.G),
                   abs(N * s ** N * self.Fi), 1e-300)


def xi(u, pot, nl, s: float):
    """(xi(s), xi'(s)) for one dilation factor."""
    if s <= 0:
        raise DomainError(f"dilation factor must be positive, got {s}")
    return _Terms(u, pot, nl).xi(s)


def project(u, pot, nl, bracket=(0.05, 8.0), certify: bool = True) -> ProjectionResult:
    terms = _Terms(u, pot, nl)
    N = terms.N
    if terms.G <= 0:
        raise ProjectionError("cannot project the zero field")

    if pot is None:
        if terms.Fi <= 0:
            raise ProjectionError(
                f"int F(u) = {terms.Fi:.3e} <= 0; no dilation reaches the "
                "manifold")
        s_star = math.sqrt((N - 2) * terms.G / (2 * N * terms.Fi))
        val, der = terms.xi(s_star)
        samples = ((s_star, val, der),)
        psi_s = _psi_certificate(terms, bracket) if certify else ((), True)
        return ProjectionResult(
            s_star=s_star, bracket=tuple(bracket), xi_samples=samples,
            psi_samples=psi_s[0], unique=psi_s[1], projected_energy=val,
            jv_scaled=s_star * der, iterations=0)

    lo, hi = map(float, bracket)
    samples = []

    def dxi(s):
        return terms.xi(s)[1]

    d_lo, d_hi = dxi(lo), dxi(hi)
    samples += [(lo, terms.xi(lo)[0], d_lo), (hi, terms.xi(hi)[0], d_hi)]
    grows = 0
    while not (d_lo > 0 > d_hi) and grows < 4:
        lo, hi = lo / 2.0, hi * 2.0
        d_lo, d_hi = dxi(lo), dxi(hi)
        samples += [(lo, terms.xi(lo)[0], d_lo), (hi, terms.xi(hi)[0], d_hi)]
        grows += 1
    if not (d_lo > 0 > d_hi):
        raise ProjectionError(
            "xi' does not change sign on the expanded bracket "
            f"[{lo:.3g}, {hi:.3g}]; samples: "
            + ", ".join(f"({s:.3g}, {d:.3e})" for s, _, d in samples))

    s_star, res = brentq(dxi, lo, hi, xtol=ROOT_TOL,
                         rtol=4 * np.finfo(float).eps, full_output=True)
    val, der = terms.xi(s_star)
    samples.append((s_star, val, der))
    jv = s_star * der
    if abs(jv) > 10 * ROOT_TOL * terms.jv_scale(s_star) \
            and abs(jv) > 1e3 * ROOT_TOL:
        raise ProjectionError(
            f"root accepted but J_V(u(./s*)) = {jv:.3e} exceeds the "
            "consistency budget")
    psi_s = _psi_certificate(terms, (lo, hi)) if certify else ((), True)
    return ProjectionResult(
        s_star=float(s_star), bracket=(lo, hi), xi_samples=tuple(samples),
        psi_samples=psi_s[0], unique=psi_s[1], projected_energy=val,
        jv_scaled=jv, iterations=res.iterations)


def _psi_certificate(terms, bracket, n: int = 32):
    lo, hi = bracket
    s_grid = np.geomspace(lo, 4.0 * hi, n)
    vals = np.array([terms.psi(float(s)) for s in s_grid])
    increasing = bool(np.all(np.diff(vals) > 0))
    return tuple(zip(s_grid.tolist(), vals.tolist())), increasing


def two_bump_projection_scan(w, pot, nl, R_list, lam: float = 0.5, **quad):
    """Rows (R, s_star, projected_energy) for the antipodal two-bump family;
    at lam = 1/2 the dilation factor tends to 2."""
    rows = []
    for R in R_list:
        fld = build_U(w, nl, antipodal_config(float(R), lam), **quad)
        res = project(fld, pot, nl)
        rows.append((float(R), res.s_star, res.projected_energy))
    return rows


@dataclass(frozen=True)
class LandscapeCell:
    lam: float
    y_tag: str
    s_star: float
    energy: float
    unique: bool
    grad_norm: float
    barycenter_z: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.error == ""


@dataclass(frozen=True)
class LandscapeReport:
    R: float
    p0: float
    cells: tuple
    max_energy: float
    eta: float
    endpoint_max: float
    min_grad_norm: float

    def as_dict(self) -> dict:
        return {
            "R": self.R, "p0": self.p0, "max_energy": self.max_energy,
            "eta": self.eta, "endpoint_max": self.endpoint_max,
            "min_grad_norm": self.min_grad_norm,
            "cells": [{"lambda": c.lam, "y": c.y_tag, "s_star": c.s_star,
                       "energy": c.energy, "unique": c.unique,
                       "grad_norm": c.grad_norm,
                       "barycenter_z": c.barycenter_z, "error": c.error}
                      for c in self.cells],
        }


_Y_FACTORIES = {
    "antipodal": lambda R, lam, N: antipodal_config(R, lam, N),
}


def projection_landscape(w, pot, nl, R: float, lambda_grid=None,
                         y_choices=("antipodal",), **quad) -> LandscapeReport:
    """Project the two-bump family over a lambda grid at fixed R.

    Per-cell projection failures are recorded, not raised. p0 is the limit
    energy of w; eta = 2 p0 - max over all successful cells.
    """
    from .limit_problem import limit_energy

    if lambda_grid is None:
        lambda_grid = np.linspace(0.0, 1.0, 17)
    p0, _ = limit_energy(w, nl)

    cells = []
    for tag in y_choices:
        if tag not in _Y_FACTORIES:
            raise ConfigError(f"unknown y choice '{tag}'; have "
                              f"{sorted(_Y_FACTORIES)}")
        for lam in lambda_grid:
            lam = float(lam)
            cfg = _Y_FACTORIES[tag](float(R), lam, w.N)
            try:
                fld = build_U(w, nl, cfg, **quad)
                res = project(fld, pot, nl)
                s = res.s_star
                grad_norm = math.sqrt(s ** (w.N - 2) * fld.grad_sq())
                mass, zmom = fld.power_moment(nl.two_star)
                cells.append(LandscapeCell(
                    lam=lam, y_tag=tag, s_star=s,
                    energy=res.projected_energy, unique=res.unique,
                    grad_norm=grad_norm, barycenter_z=s * zmom / mass))
            except (ProjectionError, ConfigError, ValueError) as exc:
                cells.append(LandscapeCell(
                    lam=lam, y_tag=tag, s_star=math.nan, energy=math.nan,
                    unique=False, grad_norm=math.nan, barycenter_z=math.nan,
                    error=str(exc)))

    good = [c for c in cells if c.ok]
    if not good:
        raise ProjectionError("every landscape cell failed to project")
    max_energy = max(c.energy for c in good)
    ends = [c.energy for c in good if c.lam in (0.0, 1.0)]
    return LandscapeReport(
        R=float(R), p0=p0, cells=tuple(cells), max_energy=max_energy,
        eta=2.0 * p0 - max_energy,
        endpoint_max=max(ends) if ends else math.nan,
        min_grad_norm=min(c.grad_norm for c in good))
