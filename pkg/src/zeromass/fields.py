"""Quadrature and sampling infrastructure for axisymmetric fields.

Everything here works in reduced cylindrical coordinates (z, rho) about a
common symmetry axis: for an axisymmetric function u on R^N,

    int_{R^N} u dx = omega_{N-2} * int int u(z, rho) rho^(N-2) drho dz,

where omega_{m-1} denotes the surface area of the unit sphere in R^m.
Grids are graded: panels grow geometrically away from a set of centers, so
covering a large domain costs a logarithmic number of panels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats


def unit_sphere_area(m: int) -> float:
    """Surface area of the unit sphere in R^m (so m=3 gives 4*pi)."""
    if m < 1:
        raise ValueError(f"dimension must be >= 1, got {m}")
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


# ---------------------------------------------------------------------------
# graded panel meshes and composite Gauss quadrature
# ---------------------------------------------------------------------------

def graded_edges(lo: float, hi: float, centers, h0: float,
                 ratio: float = 1.08, h_max: float = math.inf) -> np.ndarray:
    """Panel edges on [lo, hi] with width ~h0 near each center.

    The local target width is h(x) = min(h_max, h0 + (ratio-1)*dist(x, centers)),
    which grows geometrically with the given ratio away from the centers.
    Centers inside (lo, hi) are forced to be edges.
    """
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if not (h0 > 0 and ratio > 1):
        raise ValueError("need h0 > 0 and ratio > 1")
    g = ratio - 1.0
    cs = np.unique(np.asarray(list(centers), dtype=float))
    if cs.size == 0:
        cs = np.array([0.5 * (lo + hi)])

    def h_at(x: float) -> float:
        return min(h_max, h0 + g * float(np.min(np.abs(x - cs))))

    anchors = sorted({float(lo), float(hi), *(float(c) for c in cs if lo < c < hi)})
    edges = [anchors[0]]
    for a, b in zip(anchors[:-1], anchors[1:]):
        mid = 0.5 * (a + b)
        fill = []
        x = a
        while True:
            x += h_at(x)
            if x >= mid:
                break
            fill.append(x)
        back = []
        x = b
        while True:
            x -= h_at(x)
            if x <= mid:
                break
            back.append(x)
        seg = fill + back[::-1]
        # drop a sliver where the two fills meet
        cleaned = []
        prev = a
        for e in seg:
            if e - prev >= 0.2 * h_at(0.5 * (e + prev)):
                cleaned.append(e)
                prev = e
        if cleaned and b - cleaned[-1] < 0.2 * h_at(cleaned[-1]):
            cleaned.pop()
        edges.extend(cleaned)
        edges.append(b)
    return np.asarray(edges)


@lru_cache(maxsize=32)
def _gauss_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_panels(edges: np.ndarray, order: int = 8):
    """Composite Gauss-Legendre nodes and weights over the given panels."""
    edges = np.asarray(edges, dtype=float)
    x, w = _gauss_rule(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def panel_integrate_1d(fun, edges: np.ndarray, order: int = 8):
    """Integrate a vectorized callable over panels; returns (value, err_est).

    The error estimate compares against the embedded rule of half the order
    on the same panels.
    """
    xs, ws = gauss_panels(edges, order)
    value = float(np.dot(ws, fun(xs)))
    xc, wc = gauss_panels(edges, max(2, order // 2))
    coarse = float(np.dot(wc, fun(xc)))
    return value, abs(value - coarse)


def radial_integrate(fun, N: int, r_max: float, h0: float = 0.02,
                     ratio: float = 1.08, h_max: float = math.inf,
                     order: int = 8, centers=(0.0,)):
    """Integrate a radial function over R^N up to radius r_max.

    Returns (value, err_est) for omega * int_0^{r_max} fun(r) r^(N-1) dr.
    """
    omega = unit_sphere_area(N)
    edges = graded_edges(0.0, r_max, centers, h0, ratio, h_max)
    return tuple(omega * v for v in panel_integrate_1d(
        lambda r: fun(r) * r ** (N - 1), edges, order))


@dataclass(eq=False)
class PanelGrid:
    """Tensor-product composite Gauss grid in (z, rho) with measure weights."""

    N: int
    z: np.ndarray
    wz: np.ndarray
    rho: np.ndarray
    wrho: np.ndarray
    z_edges: np.ndarray
    rho_edges: np.ndarray
    order: int
    weight: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        omega = unit_sphere_area(self.N - 1)
        radial = omega * self.wrho * self.rho ** (self.N - 2)
        self.weight = self.wz[:, None] * radial[None, :]

    @classmethod
    def build(cls, N: int, centers_z, z_extent: float, rho_extent: float | None = None,
              h0: float = 0.02, ratio: float = 1.08, h_max: float = math.inf,
              order: int = 8) -> "PanelGrid":
        centers_z = sorted(float(c) for c in centers_z)
        z_lo = centers_z[0] - z_extent
        z_hi = centers_z[-1] + z_extent
        if rho_extent is None:
            rho_extent = max(z_hi, -z_lo)
        z_edges = graded_edges(z_lo, z_hi, centers_z, h0, ratio, h_max)
        rho_edges = graded_edges(0.0, rho_extent, [0.0], h0, ratio, h_max)
        z, wz = gauss_panels(z_edges, order)
        rho, wrho = gauss_panels(rho_edges, order)
        return cls(N=N, z=z, wz=wz, rho=rho, wrho=wrho,
                   z_edges=z_edges, rho_edges=rho_edges, order=order)

    def mesh(self):
        return np.meshgrid(self.z, self.rho, indexing="ij")

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weight.ravel(), values.ravel()))

    def coarse(self) -> "PanelGrid":
        """Same panels at half the Gauss order, for error estimation."""
        order = max(2, self.order // 2)
        z, wz = gauss_panels(self.z_edges, order)
        rho, wrho = gauss_panels(self.rho_edges, order)
        return PanelGrid(N=self.N, z=z, wz=wz, rho=rho, wrho=wrho,
                         z_edges=self.z_edges, rho_edges=self.rho_edges,
                         order=order)

    @property
    def ball_radius(self) -> float:
        """Radius of the largest origin-centered ball inside the grid region."""
        return min(-float(self.z_edges[0]), float(self.z_edges[-1]),
                   float(self.rho_edges[-1]))


def integrate_axisym(fun, grid: PanelGrid):
    """Integrate fun(z, rho) over R^N on the given grid.

    Returns (value, err_est); the estimate compares the embedded lower-order
    rule on the same panels.
    """
    Z, P = grid.mesh()
    value = grid.integrate(fun(Z, P))
    cg = grid.coarse()
    Zc, Pc = cg.mesh()
    coarse = cg.integrate(fun(Zc, Pc))
    return value, abs(value - coarse)


# ---------------------------------------------------------------------------
# log-log slope fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    ci95: float
    r2: float
    n: int

    def covers(self, target: float) -> bool:
        return abs(self.slope - target) <= self.ci95


def fit_log_slope(x, y, weights=None) -> SlopeFit:
    """Weighted least-squares slope of log y against log x, with 95% band."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size != ly.size or lx.size < 3:
        raise ValueError("need at least 3 points for a slope with a band")
    w = np.ones_like(lx) if weights is None else np.asarray(weights, dtype=float)
    sw = w.sum()
    mx = np.dot(w, lx) / sw
    my = np.dot(w, ly) / sw
    sxx = np.dot(w, (lx - mx) ** 2)
    sxy = np.dot(w, (lx - mx) * (ly - my))
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    dof = lx.size - 2
    s2 = np.dot(w, resid ** 2) / dof if dof > 0 else 0.0
    stderr = math.sqrt(s2 / sxx)
    tq = float(stats.t.ppf(0.975, dof)) if dof > 0 else math.inf
    ss_tot = np.dot(w, (ly - my) ** 2)
    r2 = 1.0 - np.dot(w, resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(slope=float(slope), intercept=float(intercept),
                    stderr=float(stderr), ci95=float(tq * stderr),
                    r2=float(r2), n=int(lx.size))


# ---------------------------------------------------------------------------
# Monte Carlo with heavy-tailed importance mixture
# ---------------------------------------------------------------------------

class McSampler:
    """Importance sampler: equal mixture of heavy-tailed balls at each center.

    Each component has density (N / omega_{N-1}) (1 + |x - c|)^(-(N+1)),
    sampled exactly by inverting the radial CDF t^N with r = t / (1 - t).
    """

    def __init__(self, N: int, centers, seed: int = 0):
        self.N = int(N)
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if self.centers.shape[1] != N:
            raise ValueError("centers must have shape (m, N)")
        self.rng = np.random.default_rng(seed)
        self._norm = self.N / unit_sphere_area(self.N)

    def sample(self, n: int):
        """Draw n points; returns (points (n, N), density (n,))."""
        m = self.centers.shape[0]
        idx = self.rng.integers(0, m, size=n)
        t = self.rng.random(n) ** (1.0 / self.N)
        r = t / (1.0 - t)
        d = self.rng.standard_normal((n, self.N))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        pts = self.centers[idx] + r[:, None] * d
        return pts, self.density(pts)

    def density(self, pts: np.ndarray) -> np.ndarray:
        dist = np.linalg.norm(pts[:, None, :] - self.centers[None, :, :], axis=2)
        comp = self._norm * (1.0 + dist) ** (-(self.N + 1))
        return comp.mean(axis=1)


def mc_integrate(fun, sampler: McSampler, n: int):
    """Importance-sampled integral of fun over R^N; returns (value, stderr)."""
    pts, pdf = sampler.sample(n)
    vals = fun(pts) / pdf
    value = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n))
    return value, stderr


# ---------------------------------------------------------------------------
# kernel overlap scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    R: float
    value: float
    err_est: float


@dataclass(frozen=True)
class ScanResult:
    kind: str
    exponents: tuple
    predicted_exponent: float
    rows: tuple
    fit: SlopeFit
    method: str

    @property
    def predicted_slope(self) -> float:
        return -self.predicted_exponent


def _axis_projection(y0, y, N):
    """Axis direction and scalar centers if y0, y are collinear, else None."""
    y0 = np.asarray(y0, dtype=float)
    y = np.asarray(y, dtype=float)
    if y0.shape != (N,) or y.shape != (N,):
        raise ValueError(f"y0 and y must be vectors in R^{N}")
    n0 = np.linalg.norm(y0)
    if n0 == 0:
        raise ValueError("y0 must be nonzero")
    axis = y0 / n0
    perp = y - np.dot(y, axis) * axis
    if np.linalg.norm(perp) > 1e-12 * max(1.0, np.linalg.norm(y)):
        return None
    return axis, float(n0), float(np.dot(y, axis))


def _scan(kernel_axisym, kernel_points, centers_z_of, centers_pts_of, R_list, N,
          method, extent_factor, h0, ratio, order, n_mc, seed, jobs, collinear):
    if method == "auto":
        method = "axisym" if collinear else "mc"
    if method == "axisym" and not collinear:
        raise ValueError("axisymmetric reduction needs collinear centers; use mc")

    def one(i_R):
        i, R = i_R
        if method == "axisym":
            zc = centers_z_of(R)
            extent = extent_factor * max(1.0, max(abs(c) for c in zc))
            grid = PanelGrid.build(N, zc, extent, h0=h0, ratio=ratio, order=order)
            val, err = integrate_axisym(lambda Z, P: kernel_axisym(Z, P, R), grid)
        else:
            sampler = McSampler(N, centers_pts_of(R), seed=seed + 1000 * i)
            val, err = mc_integrate(lambda pts: kernel_points(pts, R), sampler, n_mc)
        return ScanRow(R=float(R), value=val, err_est=err)

    items = list(enumerate(R_list))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(one, items))
    else:
        rows = [one(it) for it in items]

    values = np.array([r.value for r in rows])
    errs = np.array([max(r.err_est, 1e-300) for r in rows])
    if method == "mc":
        weights = (values / errs) ** 2
        fit = fit_log_slope([r.R for r in rows], values, weights)
    else:
        fit = fit_log_slope([r.R for r in rows], values)
    return rows, fit, method


def kernel_overlap_scan(alpha: float, beta: float, y0, y, R_list, *, N: int = 3,
                        method: str = "auto", extent_factor: float = 32.0,
                        h0: float = 0.05, ratio: float = 1.08, order: int = 8,
                        n_mc: int = 200_000, seed: int = 0, jobs: int = 1) -> ScanResult:
    """Fit the decay exponent of int (1+|x-R y0|)^-alpha (1+|x-R y|)^-beta dx.

    The predicted exponent is mu = min(alpha, beta, alpha + beta - N); the
    fitted log-log slope should approach -mu as R grows.
    """
    if alpha + beta <= N:
        raise ValueError("need alpha + beta > N for an integrable kernel")
    R_arr = [float(R) for R in R_list]
    if len(R_arr) < 4 or min(R_arr) < 1:
        raise ValueError("need at least 4 radii, all >= 1")
    proj = _axis_projection(y0, y, N)
    collinear = proj is not None
    y0 = np.asarray(y0, dtype=float)
    y = np.asarray(y, dtype=float)

    if collinear:
        _, c1, c2 = proj

        def kernel_axisym(Z, P, R):
            d1 = np.sqrt((Z - R * c1) ** 2 + P ** 2)
            d2 = np.sqrt((Z - R * c2) ** 2 + P ** 2)
            return (1.0 + d1) ** (-alpha) * (1.0 + d2) ** (-beta)

        def centers_z_of(R):
            return [R * c1, R * c2]
    else:
        kernel_axisym = None
        centers_z_of = None

    def kernel_points(pts, R):
        d1 = np.linalg.norm(pts - R * y0, axis=1)
        d2 = np.linalg.norm(pts - R * y, axis=1)
        return (1.0 + d1) ** (-alpha) * (1.0 + d2) ** (-beta)

    def centers_pts_of(R):
        return np.stack([R * y0, R * y])

    rows, fit, used = _scan(kernel_axisym, kernel_points, centers_z_of,
                            centers_pts_of, R_arr, N, method, extent_factor,
                            h0, ratio, order, n_mc, seed, jobs, collinear)
    mu = min(alpha, beta, alpha + beta - N)
    return ScanResult(kind="pair", exponents=(alpha, beta),
                      predicted_exponent=mu, rows=tuple(rows), fit=fit,
                      method=used)


def three_kernel_overlap_scan(theta: float, gamma_exp: float, y0, y, R_list, *,
                              N: int = 3, method: str = "auto",
                              extent_factor: float = 32.0, h0: float = 0.05,
                              ratio: float = 1.08, order: int = 8,
                              n_mc: int = 200_000, seed: int = 0,
                              jobs: int = 1) -> ScanResult:
    """Fit the decay exponent of the three-center kernel integral

        int (1+|x|)^-theta (1+|x-R y0|)^-gamma (1+|x-R y|)^-gamma dx.

    The predicted exponent is tau = min(theta, 2 gamma, theta + 2 gamma - N).
    When theta == N the near-origin region carries an extra log R factor, so
    the fitted slope sits above -tau by roughly 1/log R; the fit reports what
    the integral actually does.
    """
    if theta + 2 * gamma_exp <= N:
        raise ValueError("need theta + 2*gamma > N for an integrable kernel")
    R_arr = [float(R) for R in R_list]
    if len(R_arr) < 4 or min(R_arr) < 1:
        raise ValueError("need at least 4 radii, all >= 1")
    proj = _axis_projection(y0, y, N)
    collinear = proj is not None
    y0 = np.asarray(y0, dtype=float)
    y = np.asarray(y, dtype=float)

    if collinear:
        _, c1, c2 = proj

        def kernel_axisym(Z, P, R):
            d0 = np.sqrt(Z ** 2 + P ** 2)
            d1 = np.sqrt((Z - R * c1) ** 2 + P ** 2)
            d2 = np.sqrt((Z - R * c2) ** 2 + P ** 2)
            return ((1.0 + d0) ** (-theta)
                    * (1.0 + d1) ** (-gamma_exp) * (1.0 + d2) ** (-gamma_exp))

        def centers_z_of(R):
            return [0.0, R * c1, R * c2]
    else:
        kernel_axisym = None
        centers_z_of = None

    def kernel_points(pts, R):
        d0 = np.linalg.norm(pts, axis=1)
        d1 = np.linalg.norm(pts - R * y0, axis=1)
        d2 = np.linalg.norm(pts - R * y, axis=1)
        return ((1.0 + d0) ** (-theta)
                * (1.0 + d1) ** (-gamma_exp) * (1.0 + d2) ** (-gamma_exp))

    def centers_pts_of(R):
        return np.stack([np.zeros(N), R * y0, R * y])

    rows, fit, used = _scan(kernel_axisym, kernel_points, centers_z_of,
                            centers_pts_of, R_arr, N, method, extent_factor,
                            h0, ratio, order, n_mc, seed, jobs, collinear)
    tau = min(theta, 2 * gamma_exp, theta + 2 * gamma_exp - N)
    return ScanResult(kind="three", exponents=(theta, gamma_exp),
                      predicted_exponent=tau, rows=tuple(rows), fit=fit,
                      method=used)


# ---------------------------------------------------------------------------
# finite-difference grid for descent
# ---------------------------------------------------------------------------

def _fd_coeffs(x: np.ndarray):
    """First and second derivative stencil coefficients on a nonuniform grid.

    Returns arrays (n, 3) for [left, center, right] neighbors; boundary rows
    use a one-sided first derivative and a ghost-based second derivative
    assuming zero values just outside.
    """
    n = x.size
    c1 = np.zeros((n, 3))
    c2 = np.zeros((n, 3))
    hm = np.diff(x)
    for i in range(1, n - 1):
        a, b = hm[i - 1], hm[i]
        c1[i] = [-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b))]
        c2[i] = [2 / (a * (a + b)), -2 / (a * b), 2 / (b * (a + b))]
    # boundaries: ghost node mirrored at the same spacing with value 0
    a = hm[0]
    c1[0] = [0.0, -1.0 / a, 1.0 / a]
    c2[0] = [0.0, -2.0 / a ** 2, 1.0 / a ** 2]
    b = hm[-1]
    c1[-1] = [-1.0 / b, 1.0 / b, 0.0]
    c2[-1] = [1.0 / b ** 2, -2.0 / b ** 2, 0.0]
    return c1, c2


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    d = np.diff(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


@dataclass(eq=False)
class FDGrid:
    """Nonuniform (z, rho) node grid with FD derivatives and trapezoid weights.

    Intended for gradient descent; accuracy is second order in the local
    spacing. The outer boundary is treated as a homogeneous Dirichlet wall.
    """

    N: int
    z: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        self._cz1, self._cz2 = _fd_coeffs(self.z)
        self._cr1, self._cr2 = _fd_coeffs(self.rho)
        omega = unit_sphere_area(self.N - 1)
        wz = _trapezoid_weights(self.z)
        wr = _trapezoid_weights(self.rho) * omega * self.rho ** (self.N - 2)
        self.weight = wz[:, None] * wr[None, :]
        # Edge conductances for the Dirichlet form. Energy built from
        # centered differences has a null mode (the node-parity oscillation
        # costs it nothing), and gradient flow finds that hole reliably;
        # summing squared jumps over mesh edges prices every oscillation.
        dz = np.diff(self.z)
        dr = np.diff(self.rho)
        # dual-cell ring moments, exact integrals of rho^(N-2), so the axis
        # column (zero trapezoid weight) still has finite volume
        rh = np.concatenate([[0.0], 0.5 * (self.rho[:-1] + self.rho[1:]),
                             [self.rho[-1]]])
        mr = omega * np.diff(rh ** (self.N - 1)) / (self.N - 1)
        self._cond_z = mr[None, :] / dz[:, None]
        ring = omega * np.diff(self.rho ** (self.N - 1)) / (self.N - 1)
        self._cond_r = wz[:, None] * (ring / dr ** 2)[None, :]
        self._lump = wz[:, None] * mr[None, :]
        self._react_mask = self.weight / self._lump

    @classmethod
    def build(cls, N: int, centers_z, z_extent: float, rho_extent: float | None = None,
              h0: float = 0.02, ratio: float = 1.05, h_max: float = math.inf) -> "FDGrid":
        centers_z = sorted(float(c) for c in centers_z)
        z_lo = centers_z[0] - z_extent
        z_hi = centers_z[-1] + z_extent
        if rho_extent is None:
            rho_extent = max(z_hi, -z_lo)
        z = graded_edges(z_lo, z_hi, centers_z, h0, ratio, h_max)
        rho = graded_edges(0.0, rho_extent, [0.0], h0, ratio, h_max)
        return cls(N=N, z=z, rho=rho)

    def mesh(self):
        return np.meshgrid(self.z, self.rho, indexing="ij")

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weight.ravel(), values.ravel()))

    def _apply_axis0(self, coeff: np.ndarray, U: np.ndarray) -> np.ndarray:
        out = coeff[:, 1][:, None] * U
        out[1:] += coeff[1:, 0][:, None] * U[:-1]
        out[:-1] += coeff[:-1, 2][:, None] * U[1:]
        return out

    def _apply_axis1(self, coeff: np.ndarray, U: np.ndarray) -> np.ndarray:
        out = U * coeff[:, 1][None, :]
        out[:, 1:] += U[:, :-1] * coeff[1:, 0][None, :]
        out[:, :-1] += U[:, 1:] * coeff[:-1, 2][None, :]
        return out

    def d_z(self, U: np.ndarray) -> np.ndarray:
        return self._apply_axis0(self._cz1, U)

    def d_rho(self, U: np.ndarray) -> np.ndarray:
        D = self._apply_axis1(self._cr1, U)
        # axis regularity: u_rho vanishes at rho = 0
        D[:, 0] = 0.0
        return D

    def laplacian(self, U: np.ndarray) -> np.ndarray:
        """Axisymmetric Laplacian u_zz + u_rr + (N-2) u_r / rho.

        On the axis the angular term degenerates to (N-2) u_rr, using the
        even reflection u(-rho) = u(rho).
        """
        L = self._apply_axis0(self._cz2, U)
        Urr = self._apply_axis1(self._cr2, U)
        Ur = self._apply_axis1(self._cr1, U)
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = (self.N - 2) * Ur / self.rho[None, :]
        h1 = self.rho[1] - self.rho[0]
        axis_rr = 2.0 * (U[:, 1] - U[:, 0]) / h1 ** 2
        L += Urr
        L[:, 1:] += ang[:, 1:]
        L[:, 0] = self._apply_axis0(self._cz2, U)[:, 0] + (self.N - 1) * axis_rr
        return L

    def grad_sq_density(self, U: np.ndarray) -> np.ndarray:
        dz = self.d_z(U)
        dr = self.d_rho(U)
        return dz ** 2 + dr ** 2

    def dirichlet_energy(self, U: np.ndarray) -> float:
        """Sum of squared node-to-node jumps times edge conductances.

        This is the gradient energy of the piecewise-linear interpolant in
        each direction, so no nodal oscillation is free. The centered-stencil
        version annihilates the parity mode, and a projected descent will
        happily dump nonlinear mass into that mode until the energy drops
        below any physical level.
        """
        jz = np.diff(U, axis=0)
        jr = np.diff(U, axis=1)
        return float(np.sum(self._cond_z * jz ** 2) +
                     np.sum(self._cond_r * jr ** 2))

    def stiffness_apply(self, U: np.ndarray) -> np.ndarray:
        """Exact gradient of dirichlet_energy(U)/2 divided by the lumped
        node volumes.

        Descent along this field is descent for the discrete energy itself;
        a pointwise stencil Laplacian differs from that gradient at the
        grading jumps, enough to stall a line search well above any useful
        residual tolerance. Boundary rows are zeroed (Dirichlet data held
        fixed)."""
        fz = self._cond_z * np.diff(U, axis=0)
        fr = self._cond_r * np.diff(U, axis=1)
        out = np.zeros_like(U)
        out[:-1, :] -= fz
        out[1:, :] += fz
        out[:, :-1] -= fr
        out[:, 1:] += fr
        out /= self._lump
        out[0, :] = 0.0
        out[-1, :] = 0.0
        out[:, -1] = 0.0
        return out

    def interpolator(self, U: np.ndarray):
        from scipy.interpolate import RegularGridInterpolator
        return RegularGridInterpolator((self.z, self.rho), U,
                                       bounds_error=False, fill_value=0.0)
