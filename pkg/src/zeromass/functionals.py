"""Energy functionals, the Sobolev constant, and derived thresholds.

I_V(u) = 1/2 int |grad u|^2 + 1/2 int V u^2 - int F(u)
J_V(u) = (N-2)/2 int |grad u|^2 + 1/2 int (grad V . x) u^2
         + N/2 int V u^2 - N int F(u)

Every report assembles these identities exactly from the quadrature values
of the individual pieces, so the identity invariants hold to roundoff by
construction and any disagreement between routes shows up in the pieces.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigError, TruncationError
from .fields import unit_sphere_area


def sobolev_constant(N: int) -> float:
    """Talenti's best constant S(N) = N(N-2)/4 |S^N|^(2/N) for
    ||grad u||_2^2 >= S ||u||_{2*}^2."""
    if N < 3:
        raise ConfigError("Sobolev constant needs N >= 3")
    return N * (N - 2) / 4.0 * unit_sphere_area(N + 1) ** (2.0 / N)


def rho_lower_bound(nl, N: int | None = None) -> float:
    """The manifold gradient floor rho, from rho^(2*-2) = S^(2*/2)/(2 2* A2)."""
    N = nl.N if N is None else N
    S = sobolev_constant(N)
    two_star = 2.0 * N / (N - 2)
    return (S ** (two_star / 2.0) / (2.0 * two_star * nl.A2)) \
        ** (1.0 / (two_star - 2.0))


@dataclass(frozen=True)
class EnergyReport:
    I_V: float
    I_0: float
    J_V: float
    J_0: float
    grad_norm_sq: float
    V_quadratic: float
    gradV_quadratic: float
    F_integral: float
    residual_norm: float
    rho_bound: float

    def as_dict(self) -> dict:
        return asdict(self)


def _potential_weights(pot):
    if pot is None:
        return None, None
    if pot.radial is None:
        raise ConfigError(
            f"potential '{pot.name}' has no radial profile; energy reports "
            "need one for the quadratic terms")
    v = pot.radial.v
    dv = pot.radial.dv

    def w_weight(r):
        return dv(r) * r

    return v, w_weight


def evaluate(u, pot, nl, with_residual: bool = True) -> EnergyReport:
    """Full energy report for a field against a potential (or none)."""
    N = u.N
    grad = u.grad_sq()
    Fi = u.F_mass(nl)
    tail = getattr(u, "grad_tail_estimate", lambda: 0.0)()
    if grad > 0 and tail > 0.01 * grad:
        raise TruncationError(
            f"gradient tail estimate {tail:.3e} exceeds 1% of "
            f"grad_norm_sq {grad:.3e}; enlarge the domain")
    v, w_weight = _potential_weights(pot)
    if v is None:
        Vq = Wq = 0.0
    else:
        Vq = u.weighted_sq(v)
        Wq = u.weighted_sq(w_weight)
    I0 = 0.5 * grad - Fi
    J0 = 0.5 * (N - 2) * grad - N * Fi
    IV = 0.5 * grad + 0.5 * Vq - Fi
    JV = 0.5 * (N - 2) * grad + 0.5 * Wq + 0.5 * N * Vq - N * Fi
    if with_residual:
        resid = math.sqrt(max(u.residual_sq(pot, nl), 0.0))
    else:
        resid = math.nan
    return EnergyReport(I_V=IV, I_0=I0, J_V=JV, J_0=J0, grad_norm_sq=grad,
                        V_quadratic=Vq, gradV_quadratic=Wq, F_integral=Fi,
                        residual_norm=resid,
                        rho_bound=rho_lower_bound(nl, N))


def scaling_path(u, pot, nl, t_list):
    """[(t, I_V(u(./t)))] using the exact monomial scalings for the
    gradient and F terms; the potential term is re-quadratured per t."""
    N = u.N
    grad = u.grad_sq()
    Fi = u.F_mass(nl)
    v, _ = _potential_weights(pot)
    out = []
    for t in t_list:
        t = float(t)
        if t <= 0:
            raise ConfigError("scaling path needs positive t")
        val = 0.5 * t ** (N - 2) * grad - t ** N * Fi
        if v is not None:
            val += 0.5 * u.dilate(t).weighted_sq(v)
        out.append((t, float(val)))
    return out
