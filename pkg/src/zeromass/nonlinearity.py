"""Admissible nonlinearities: evaluator bundles and hypothesis checks.

A nonlinearity is shipped as closed-form f and f', with the primitive F
accumulated once over cached Gauss panels. All evaluators accept scalars or
arrays and implement the odd extension f(-s) = -f(s), so F is even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, NumericalError
from .fields import _gauss_rule
from .report import CheckItem, HypothesisReport

BUILTIN_MODELS = ("rational_asymlinear", "sine_superlinear")


class _PanelPrimitive:
    """F(s) = int_0^s f, accumulated over cached geometric Gauss panels.

    Panel widths grow geometrically but are capped for oscillatory
    integrands so that each panel stays well inside one oscillation.
    """

    def __init__(self, fun, width_cap: float = math.inf, first: float = 1e-3,
                 grow: float = 0.3, order: int = 24, end: float = math.inf):
        self.fun = fun
        self.cap = width_cap
        self.first = first
        self.grow = grow
        self.order = order
        self.end = end
        self.edges = [0.0]
        self.cum = [0.0]
        self._extend_to(min(4.0, end))

    def _extend_to(self, s: float) -> None:
        x, w = _gauss_rule(self.order)
        # panels never cross self.end, so fun is never sampled outside its
        # domain; the layout depends only on construction parameters, keeping
        # repeated evaluations bit-identical regardless of request order
        s = min(s, self.end)
        while self.edges[-1] < s:
            last = self.edges[-1]
            width = min(self.cap, max(self.first, self.grow * last))
            hi = min(last + width, self.end)
            half = 0.5 * (hi - last)
            mid = 0.5 * (hi + last)
            val = half * float(np.dot(w, self.fun(mid + half * x)))
            self.edges.append(hi)
            self.cum.append(self.cum[-1] + val)

    def _eval_flat(self, arr, edges, cum):
        idx = np.clip(np.searchsorted(edges, arr, side="right") - 1,
                      0, edges.size - 2)
        e0 = edges[idx]
        half = 0.5 * (arr - e0)
        # half the accumulation order is still far inside the partial panel's
        # accuracy and halves the dominant per-point cost
        x, w = _gauss_rule(max(self.order // 2, 8))
        nodes = (e0 + half)[:, None] + half[:, None] * x
        rem = np.einsum("nk,k->n", self.fun(nodes), w) * half
        return cum[idx] + rem

    def __call__(self, s):
        arr = np.abs(np.atleast_1d(np.asarray(s, dtype=float))).ravel()
        if arr.size:
            self._extend_to(float(arr.max()))
        edges = np.asarray(self.edges)
        cum = np.asarray(self.cum)
        out = np.empty(arr.size)
        block = 1 << 17  # bound the (n, order) scratch array
        for i in range(0, arr.size, block):
            out[i:i + block] = self._eval_flat(arr[i:i + block], edges, cum)
        if np.isscalar(s) or np.ndim(s) == 0:
            return float(out[0])
        return out.reshape(np.shape(s))


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Evaluator bundle (f, F, f') with decay/growth metadata."""

    name: str
    N: int
    f: object
    fprime: object
    F: object
    gamma: float
    ell: float
    A2: float
    meta: dict = field(default_factory=dict)

    @property
    def two_star(self) -> float:
        return 2.0 * self.N / (self.N - 2.0)


def _odd(fun_pos):
    def f(s):
        s_arr = np.asarray(s, dtype=float)
        return np.sign(s_arr) * fun_pos(np.abs(s_arr))
    return f


def _even(fun_pos):
    def f(s):
        return fun_pos(np.abs(np.asarray(s, dtype=float)))
    return f


def _fit_A2(f, F, s_grid, p):
    """Largest of |F|/s^p and |f|/s^(p-1) over the grid."""
    rF = np.abs(F(s_grid)) / s_grid ** p
    rf = np.abs(f(s_grid)) / s_grid ** (p - 1)
    return float(max(rF.max(), rf.max()))


def builtin_model(name: str) -> Nonlinearity:
    """Construct one of the two shipped models (both posed in N = 3)."""
    N = 3
    if name == "rational_asymlinear":
        rt2 = math.sqrt(2.0)

        def f_pos(s):
            s = np.asarray(s, dtype=float)
            num = s ** 7 * (2.0 * s ** 4 - 4.0 * rt2 * s ** 2 + 4.0)
            return num / (s ** 10 + 1.0)

        def fp_pos(s):
            s = np.asarray(s, dtype=float)
            P = 2.0 * s ** 11 - 4.0 * rt2 * s ** 9 + 4.0 * s ** 7
            Pp = 22.0 * s ** 10 - 36.0 * rt2 * s ** 8 + 28.0 * s ** 6
            Q = s ** 10 + 1.0
            return (Pp * Q - P * 10.0 * s ** 9) / Q ** 2

        gamma = 2.0 ** 0.25
        ell = 2.0
        prim = _PanelPrimitive(f_pos)
        meta = {"family": "rational", "oscillatory": False}
    elif name == "sine_superlinear":

        def f_pos(s):
            s = np.asarray(s, dtype=float)
            return s ** 7 * (1.0 - np.sin(s)) / (1.0 + s ** 4)

        def fp_pos(s):
            s = np.asarray(s, dtype=float)
            Q = 1.0 + s ** 4
            h = s ** 7 / Q
            hp = (7.0 * s ** 6 + 3.0 * s ** 10) / Q ** 2
            return hp * (1.0 - np.sin(s)) - h * np.cos(s)

        gamma = math.pi / 2.0
        ell = math.inf
        prim = _PanelPrimitive(f_pos, width_cap=0.5)
        meta = {"family": "sine", "oscillatory": True}
    else:
        raise ConfigError(f"unknown model {name!r}; choose from {BUILTIN_MODELS}")

    # cross-check the symbolic location of the first zero
    fg = float(f_pos(np.asarray(gamma)))
    probe = np.linspace(0.05 * gamma, 0.95 * gamma, 64)
    if abs(fg) > 1e-12 or np.any(f_pos(probe) <= 0.0):
        raise NumericalError(
            f"model {name}: stored gamma fails the zero cross-check (f={fg:.2e})")

    f = _odd(f_pos)
    F = _even(prim)
    A2 = _fit_A2(f, F, np.geomspace(1e-3, 1e3, 241), 2 * N / (N - 2))
    return Nonlinearity(name=name, N=N, f=f, fprime=_even(fp_pos), F=F,
                        gamma=gamma, ell=ell, A2=A2, meta=meta)


def from_table(s_values, f_values, name: str = "table") -> Nonlinearity:
    """Build a model from sampled (s, f(s)) pairs on s > 0.

    Monotone-cubic interpolation between samples; the first zero of f is
    located from the samples (sign change bracketed, otherwise a touching
    minimum), and the asymptotic slope is read from the last sample.
    """
    s_values = np.asarray(s_values, dtype=float)
    f_values = np.asarray(f_values, dtype=float)
    if s_values.ndim != 1 or s_values.shape != f_values.shape or s_values.size < 4:
        raise ConfigError("table needs matching 1-D arrays with at least 4 rows")
    if s_values[0] <= 0 or np.any(np.diff(s_values) <= 0):
        raise ConfigError("table s column must be positive and strictly increasing")
    # anchor the interpolant at the origin
    s_knots = np.concatenate([[0.0], s_values])
    f_knots = np.concatenate([[0.0], f_values])
    pch = PchipInterpolator(s_knots, f_knots, extrapolate=False)
    dpch = pch.derivative()
    s_max = float(s_values[-1])

    # tolerate rounding-level overshoot (quadrature nodes can land an ulp
    # past the last knot); a visible excursion is still a domain error
    s_edge = s_max * (1.0 + 1e-12)

    def f_pos(s):
        s = np.asarray(s, dtype=float)
        if np.any(s > s_edge):
            raise DomainError(f"table model defined up to s = {s_max}")
        return pch(np.minimum(s, s_max))

    def fp_pos(s):
        s = np.asarray(s, dtype=float)
        if np.any(s > s_edge):
            raise DomainError(f"table model defined up to s = {s_max}")
        return dpch(np.minimum(s, s_max))

    neg = np.nonzero(f_values <= 0.0)[0]
    if neg.size == 0:
        gamma = math.inf
    else:
        j = int(neg[0])
        if f_values[j] < 0.0 and j > 0:
            gamma = float(brentq(pch, s_values[j - 1], s_values[j], xtol=1e-12))
        else:
            gamma = float(s_values[j])
    prim = _PanelPrimitive(f_pos, width_cap=max(np.diff(s_knots).min() * 4, 1e-3),
                           end=s_max)
    N = 3
    grid = np.geomspace(max(s_values[0], 1e-6), s_max, 201)
    f = _odd(f_pos)
    F = _even(prim)
    A2 = _fit_A2(f, F, grid, 2 * N / (N - 2))
    ell = float(f_values[-1] / s_values[-1])
    return Nonlinearity(name=name, N=N, f=f, fprime=_even(fp_pos), F=F,
                        gamma=gamma, ell=ell, A2=A2,
                        meta={"family": "table", "oscillatory": False,
                              "s_max": s_max})


def eval_g(nl: Nonlinearity, s):
    """g(s) = s f'(s) / f(s), defined wherever f(s) > 0."""
    s_arr = np.asarray(s, dtype=float)
    fs = np.asarray(nl.f(s_arr))
    if np.any(fs <= 0.0) or np.any(np.abs(fs) < 1e-280):
        raise DomainError("g undefined where f(s) <= 0")
    out = s_arr * np.asarray(nl.fprime(s_arr)) / fs
    if np.ndim(s) == 0:
        return float(out)
    return out


def _decade_envelopes(s, r, n_decades):
    """Max of r over each of the trailing n_decades decades of s."""
    tops = []
    hi = s[-1]
    for _ in range(n_decades):
        lo = hi / 10.0
        mask = (s > lo) & (s <= hi)
        tops.append(float(r[mask].max()) if mask.any() else 0.0)
        hi = lo
    return tops[::-1]  # increasing s order


def check_f_hypotheses(nl: Nonlinearity, grid=None, tol: float = 1e-3) -> HypothesisReport:
    """Certificate-style verification of the growth, limit, and monotonicity
    hypotheses on a logarithmic grid.

    Limits are certified by decay of decade envelopes (maxima per decade),
    which stays meaningful for oscillatory models; failures are report
    entries, never exceptions.
    """
    if grid is None:
        grid = np.geomspace(1e-3, 1e3, 481)
    s = np.asarray(grid, dtype=float)
    p = nl.two_star
    items = []

    fs = np.asarray(nl.f(s))
    Fs = np.asarray(nl.F(s))
    fps = np.asarray(nl.fprime(s))
    h = 1e-6 * s
    f2 = (np.asarray(nl.fprime(s + h)) - np.asarray(nl.fprime(s - h))) / (2 * h)
    f3 = (np.asarray(nl.fprime(s + h)) - 2 * fps + np.asarray(nl.fprime(s - h))) / h ** 2

    # exact zeros at the origin
    z = max(abs(float(nl.f(0.0))), abs(float(nl.F(0.0))))
    items.append(CheckItem("f1.zero_at_origin", z, 0.0, z == 0.0))

    # sign on [0, s_max]
    fmin = float(fs.min())
    items.append(CheckItem("f1.nonneg", fmin, 0.0, fmin >= -1e-12 * abs(fs).max()))

    # growth ratios for F, f, f', f'', f'''
    ratios = {
        -1: np.abs(Fs) / s ** p,
        0: np.abs(fs) / s ** (p - 1),
        1: np.abs(fps) / s ** (p - 2),
        2: np.abs(f2) / s ** (p - 3),
        3: np.abs(f3) / s ** (p - 4),
    }
    A2_fit = max(float(r.max()) for r in ratios.values())
    bad = []
    for i, r in ratios.items():
        env = _decade_envelopes(s, r, 2)
        if env[1] > env[0] * (1.0 + tol):
            bad.append(i)
        if r[s <= s[0] * 10].max() > 0.05 * r.max():
            bad.append(i)
    note = (f"unbounded-looking orders: {sorted(set(bad))}" if bad
            else "fitted sup of |f^(i)| / s^(2*-1-i), i = -1..3")
    items.append(CheckItem("f1.growth_A2", A2_fit, math.inf, not bad, note))

    # critical-ratio limits at 0 and infinity
    r0 = ratios[0]
    edge = max(float(r0[s <= s[0] * 10].max()), float(r0[s > s[-1] / 10].max()))
    items.append(CheckItem("f2.critical_zero", edge / r0.max(), 0.05,
                           edge <= 0.05 * r0.max()))

    # asymptotic slope at infinity
    if math.isinf(nl.ell):
        means = []
        hi = s[-1]
        for _ in range(2):
            lo = hi / 10.0
            mask = (s > lo) & (s <= hi)
            means.append(float((fs[mask] / s[mask]).mean()))
            hi = lo
        growth = means[0] / max(means[1], 1e-300)
        items.append(CheckItem("f2.slope_ell", growth, 1.0 + tol,
                               growth > 1.0 + tol, "superlinear: decade means"))
    else:
        tail = float(fs[-1] / s[-1])
        thr = nl.ell * (1.0 - 10.0 * tol)
        items.append(CheckItem("f2.slope_ell", tail, thr, tail >= thr))

    # monotonicity of g on (0, gamma)
    if math.isfinite(nl.gamma):
        sg = np.geomspace(nl.gamma * 1e-3, nl.gamma * (1.0 - 1e-6), 400)
    else:
        sg = np.geomspace(s[0], s[-1], 400)
    g = eval_g(nl, sg)
    rise = float(np.max(np.diff(g) / (1.0 + np.abs(g[:-1]))))
    items.append(CheckItem("f3.monotone", rise, 1e-8, rise <= 1e-8))

    # endpoint ordering of the g limits
    g_small = float(g[0])
    if math.isfinite(nl.ell):
        g_large = float(eval_g(nl, s[-1]))
    else:
        mask = s > s[-1] / 10
        st = s[mask]
        ft = np.asarray(nl.f(st))
        ok = ft > 1e-200
        g_large = float(np.median(st[ok] * np.asarray(nl.fprime(st[ok])) / ft[ok]))
    margin = min(g_small - (p - 1.0), (p - 1.0) - g_large)
    items.append(CheckItem("f3.endpoints", margin, 0.0, margin > 0.0,
                           f"g(0+)={g_small:.4f} g(inf)={g_large:.4f} vs {p - 1:.0f}"))

    return HypothesisReport(name=f"f:{nl.name}", items=tuple(items))
