"""Gauges (convex, even, 1-homogeneous norms), their polars, and duality checks.

A gauge H is a nonnegative convex function with H(t*xi) = |t|*H(xi); its unit
ball K = {H <= 1} is a centrally symmetric convex body.  Every constructor in
this module rescales the raw gauge so that |K| equals the volume omega_n of
the Euclidean unit ball; that normalization keeps the polar-body measure
kappa_n and all downstream symmetrization formulas consistent.

The polar gauge H0(x) = sup_{xi in K} <x, xi> is the support function of K
and the gauge of the polar body K0 = {H0 <= 1}.  For the built-in families
the polar is available in closed form:

    euclidean            -> euclidean
    ellipsoidal (M)      -> ellipsoidal (M^-1)
    p-norm (p)           -> p'-norm, 1/p + 1/p' = 1
    polygonal (K)        -> gauge of the polar polytope of K

Smooth gauges satisfy the duality identities H(grad H0(x)) = 1,
H0(grad H(x)) = 1 and grad H(grad H0(x)) = x / H0(x); ``check_duality``
measures their residuals at random sample points.  Polygonal gauges are not
differentiable on rays through the vertices of K: gradient queries within an
angular tolerance of such rays raise :class:`NonSmoothPoint`, and the third
identity is checked in the subdifferential sense (distance from x/H0(x) to
the face of K0 spanned by the active facet gradients).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import NonSmoothPoint

__all__ = [
    "Gauge",
    "DualityReport",
    "euclidean_gauge",
    "ellipsoidal_gauge",
    "pnorm_gauge",
    "polygonal_gauge",
    "parse_gauge",
    "unit_ball_volume",
    "ball_measure_quadrature",
]

#: angular tolerance for declaring a direction non-smooth (polygonal / p in {1, inf})
NONSMOOTH_ANGLE_TOL = 1e-9


def unit_ball_volume(n: int) -> float:
    """Volume omega_n of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _pnorm_ball_volume(n: int, p: float) -> float:
    """Volume of the unit p-norm ball in R^n."""
    if math.isinf(p):
        return 2.0**n
    return 2.0**n * math.gamma(1 + 1 / p) ** n / math.gamma(1 + n / p)


def _shoelace(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _facets_from_vertices(vertices: np.ndarray):
    """Outward facet normals and offsets of a CCW convex polygon containing 0."""
    edges = np.roll(vertices, -1, axis=0) - vertices
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
    lengths = np.linalg.norm(normals, axis=1)
    normals = normals / lengths[:, None]
    offsets = np.sum(normals * vertices, axis=1)
    return normals, offsets


def _vertices_from_facets(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Vertices of {x : <a_i, x> <= b_i}, facets sorted by normal angle."""
    order = np.argsort(np.arctan2(normals[:, 1], normals[:, 0]))
    a, b = normals[order], offsets[order]
    m = len(a)
    verts = np.empty((m, 2))
    for i in range(m):
        j = (i + 1) % m
        mat = np.array([a[i], a[j]])
        verts[i] = np.linalg.solve(mat, np.array([b[i], b[j]]))
    return verts


@dataclass
class DualityReport:
    """Worst residuals of the gauge/polar duality identities at sample points."""

    polar_gradient_residual: float  # max |H(grad H0(x)) - 1|
    gradient_residual: float        # max |H0(grad H(x)) - 1|
    inversion_residual: float       # max dist(grad H(grad H0(x)), x / H0(x))
    samples: int

    @property
    def max_residual(self) -> float:
        return max(self.polar_gradient_residual, self.gradient_residual,
                   self.inversion_residual)


@dataclass(frozen=True, eq=False)
class Gauge:
    """Normalized gauge function.  Build via the module-level constructors.

    ``value`` equals ``scale`` times the raw gauge of the stored parameters;
    the constructors choose ``scale = (|K_raw| / omega_n)^(1/n)`` so that the
    unit ball K of the scaled gauge has measure omega_n.
    """

    kind: str
    dim: int
    scale: float
    matrix: np.ndarray | None = None      # ellipsoidal: SPD matrix of the raw quadratic form
    p: float | None = None                # p-norm exponent
    normals: np.ndarray | None = None     # polygonal: facet normals of raw K
    offsets: np.ndarray | None = None     # polygonal: facet offsets of raw K
    vertices: np.ndarray | None = field(default=None, repr=False)  # polygonal: raw K vertices

    # -- evaluation ---------------------------------------------------------

    def value(self, xi) -> np.ndarray | float:
        """H(xi); vectorized over the leading axes of ``xi``."""
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        pts = np.atleast_2d(xi)
        if pts.shape[-1] != self.dim:
            raise ValueError(f"expected points in R^{self.dim}, got shape {xi.shape}")
        if self.kind == "euclidean":
            out = np.linalg.norm(pts, axis=-1)
        elif self.kind == "ellipsoidal":
            out = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", pts, self.matrix, pts), 0.0))
        elif self.kind == "pnorm":
            if math.isinf(self.p):
                out = np.max(np.abs(pts), axis=-1)
            else:
                out = np.sum(np.abs(pts) ** self.p, axis=-1) ** (1.0 / self.p)
        elif self.kind == "polygonal":
            out = np.max((pts @ self.normals.T) / self.offsets, axis=-1)
            out = np.maximum(out, 0.0)
        else:  # pragma: no cover
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        out = self.scale * out
        return float(out[0]) if single else out.reshape(xi.shape[:-1])

    def __call__(self, xi):
        return self.value(xi)

    def gradient(self, xi) -> np.ndarray:
        """grad H(xi).  Raises NonSmoothPoint on non-differentiable rays or at 0."""
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        grad, ok = self._gradient_masked(np.atleast_2d(xi))
        if not ok.all():
            raise NonSmoothPoint(
                f"gauge {self.kind!r} is not differentiable at "
                f"{np.atleast_2d(xi)[~ok][0]} (within angular tolerance "
                f"{NONSMOOTH_ANGLE_TOL:g})")
        return grad[0] if single else grad.reshape(xi.shape)

    def _gradient_masked(self, pts: np.ndarray):
        """Vectorized gradient with a per-point smoothness flag instead of raising."""
        norms = np.linalg.norm(pts, axis=-1)
        ok = norms > 0.0
        safe = np.where(ok[:, None], pts, 1.0)
        if self.kind == "euclidean":
            grad = self.scale * safe / np.linalg.norm(safe, axis=-1, keepdims=True)
        elif self.kind == "ellipsoidal":
            hv = np.sqrt(np.einsum("ij,jk,ik->i", safe, self.matrix, safe))
            grad = self.scale * (safe @ self.matrix.T) / hv[:, None]
        elif self.kind == "pnorm":
            grad, ok_p = self._pnorm_gradient(safe)
            ok = ok & ok_p
        elif self.kind == "polygonal":
            f = (safe @ self.normals.T) / self.offsets
            idx = np.argsort(f, axis=-1)
            top, second = idx[:, -1], idx[:, -2]
            grads = self.normals / self.offsets[:, None]
            gap = f[np.arange(len(f)), top] - f[np.arange(len(f)), second]
            sep = np.linalg.norm(grads[top] - grads[second], axis=-1)
            angle = gap / np.maximum(np.linalg.norm(safe, axis=-1) * sep, 1e-300)
            ok = ok & (angle > NONSMOOTH_ANGLE_TOL)
            grad = self.scale * grads[top]
        else:  # pragma: no cover
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        return grad, ok

    def _pnorm_gradient(self, pts: np.ndarray):
        p = self.p
        absx = np.abs(pts)
        nrm = np.linalg.norm(pts, axis=-1, keepdims=True)
        if p == 1.0:
            ok = np.min(absx, axis=-1) / nrm[:, 0] > NONSMOOTH_ANGLE_TOL
            return self.scale * np.sign(pts), ok
        if math.isinf(p):
            srt = np.sort(absx, axis=-1)
            ok = (srt[:, -1] - srt[:, -2]) / nrm[:, 0] > NONSMOOTH_ANGLE_TOL
            top = np.argmax(absx, axis=-1)
            grad = np.zeros_like(pts)
            rows = np.arange(len(pts))
            grad[rows, top] = np.sign(pts[rows, top])
            return self.scale * grad, ok
        raw = np.sum(absx**p, axis=-1, keepdims=True) ** (1.0 / p)
        grad = self.scale * np.sign(pts) * (absx / raw) ** (p - 1.0)
        return grad, np.ones(len(pts), dtype=bool)

    # -- duality ------------------------------------------------------------

    def polar(self) -> "Gauge":
        """Support-function gauge H0 of K (closed form for every built-in kind)."""
        inv_scale = 1.0 / self.scale
        if self.kind == "euclidean":
            return Gauge("euclidean", self.dim, inv_scale)
        if self.kind == "ellipsoidal":
            return Gauge("ellipsoidal", self.dim, inv_scale,
                         matrix=_readonly(np.linalg.inv(self.matrix)))
        if self.kind == "pnorm":
            if self.p == 1.0:
                q = math.inf
            elif math.isinf(self.p):
                q = 1.0
            else:
                q = self.p / (self.p - 1.0)
            return Gauge("pnorm", self.dim, inv_scale, p=q)
        if self.kind == "polygonal":
            normals = self.vertices.copy()
            offsets = np.ones(len(normals))
            return Gauge("polygonal", self.dim, inv_scale,
                         normals=_readonly(normals), offsets=_readonly(offsets),
                         vertices=_readonly(_vertices_from_facets(normals, offsets)))
        raise ValueError(f"unknown gauge kind {self.kind!r}")  # pragma: no cover

    def ball_measure(self) -> float:
        """|{H <= 1}| in closed form (omega_n for normalized gauges)."""
        if self.kind == "euclidean":
            raw = unit_ball_volume(self.dim)
        elif self.kind == "ellipsoidal":
            raw = unit_ball_volume(self.dim) / math.sqrt(np.linalg.det(self.matrix))
        elif self.kind == "pnorm":
            raw = _pnorm_ball_volume(self.dim, self.p)
        elif self.kind == "polygonal":
            raw = _shoelace(self.vertices)
        else:  # pragma: no cover
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        return raw / self.scale**self.dim

    def kappa(self) -> float:
        """Measure kappa_n of the polar body K0 = {H0 <= 1}."""
        return self.polar().ball_measure()

    def alpha_beta(self) -> tuple[float, float]:
        """Constants with alpha*|xi| <= H(xi) <= beta*|xi| (tight on the unit sphere)."""
        c = self.scale
        if self.kind == "euclidean":
            return c, c
        if self.kind == "ellipsoidal":
            eig = np.linalg.eigvalsh(self.matrix)
            return c * math.sqrt(eig[0]), c * math.sqrt(eig[-1])
        if self.kind == "pnorm":
            cross = self.dim ** abs(1.0 / self.p - 0.5) if not math.isinf(self.p) \
                else self.dim**0.5
            if (self.p or math.inf) >= 2.0:
                return c / cross, c
            return c, c * cross
        if self.kind == "polygonal":
            alpha = c / np.max(np.linalg.norm(self.vertices, axis=1))
            beta = c * np.max(np.linalg.norm(self.normals, axis=1) / self.offsets)
            return float(alpha), float(beta)
        raise ValueError(f"unknown gauge kind {self.kind!r}")  # pragma: no cover

    def check_duality(self, samples: int = 1000, seed: int = 0) -> DualityReport:
        """Sample the duality identities at random smooth points.

        Residuals: |H(grad H0(x)) - 1|, |H0(grad H(x)) - 1| and the distance
        of x/H0(x) from grad H(grad H0(x)) (for polygonal gauges: from the
        subdifferential of H at grad H0(x), which is a face of K0).
        """
        if samples < 1:
            raise ValueError("samples must be >= 1")
        rng = np.random.default_rng(seed)
        polar = self.polar()
        pts, polar_grads = [], []
        while sum(len(b) for b in pts) < samples:
            x = rng.standard_normal((2 * samples + 16, self.dim))
            x *= rng.uniform(0.5, 2.0, size=(len(x), 1))
            gp, ok_p = polar._gradient_masked(x)
            _, ok_h = self._gradient_masked(x)
            keep = ok_p & ok_h
            pts.append(x[keep])
            polar_grads.append(gp[keep])
        x = np.concatenate(pts)[:samples]
        gp = np.concatenate(polar_grads)[:samples]

        res1 = float(np.max(np.abs(self.value(gp) - 1.0)))
        gh, _ = self._gradient_masked(x)
        res2 = float(np.max(np.abs(polar.value(gh) - 1.0)))
        y = x / polar.value(x)[:, None]
        if self.kind == "polygonal":
            res3 = max(self._face_distance(gp[i], y[i]) for i in range(samples))
        else:
            ggp, ok = self._gradient_masked(gp)
            res3 = float(np.max(np.linalg.norm(ggp[ok] - y[ok], axis=-1)))
        return DualityReport(res1, res2, float(res3), samples)

    def _face_distance(self, w: np.ndarray, y: np.ndarray) -> float:
        """Distance from y to the subdifferential of H at w (a face of K0)."""
        f = (w @ self.normals.T) / self.offsets
        active = np.nonzero(f >= f.max() * (1.0 - 1e-9))[0]
        ends = self.scale * self.normals[active] / self.offsets[active, None]
        if len(ends) == 1:
            return float(np.linalg.norm(y - ends[0]))
        a, b = ends[0], ends[-1]
        ab = b - a
        t = np.clip(np.dot(y - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
        return float(np.linalg.norm(y - (a + t * ab)))

    # -- sampled-support oracle and boundary geometry ------------------------

    def boundary_points(self, m: int = 4096) -> np.ndarray:
        """m points on the unit-ball boundary {H = 1} (2-D only)."""
        if self.dim != 2:
            raise ValueError("boundary sampling implemented for dim 2 only")
        theta = np.linspace(0.0, 2.0 * math.pi, m, endpoint=False)
        d = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return d / self.value(d)[:, None]

    def support_value(self, x, boundary_samples: int = 4096):
        """sup_{xi in K} <x, xi> by boundary discretization (oracle for polar)."""
        pts = self.boundary_points(boundary_samples)
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        vals = np.max(np.atleast_2d(x) @ pts.T, axis=-1)
        return float(vals[0]) if single else vals.reshape(x.shape[:-1])

    def describe(self) -> str:
        if self.kind == "euclidean":
            return f"euclidean(n={self.dim})"
        if self.kind == "ellipsoidal":
            return f"ellipsoidal(n={self.dim})"
        if self.kind == "pnorm":
            return f"pnorm(p={self.p})"
        return f"polygonal({len(self.normals)} facets)"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


# -- constructors (all normalize |K| to omega_n) ------------------------------


def euclidean_gauge(dim: int = 2) -> Gauge:
    """The Euclidean norm; self-polar and already normalized."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return Gauge("euclidean", dim, 1.0)


def ellipsoidal_gauge(matrix) -> Gauge:
    """Gauge sqrt(xi . M xi), rescaled so the unit-ball ellipsoid has measure omega_n."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise ValueError("matrix must be square, n >= 2")
    if not np.allclose(m, m.T, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    eig = np.linalg.eigvalsh(m)
    if eig[0] <= 0:
        raise ValueError("matrix must be positive definite")
    n = m.shape[0]
    scale = float(np.linalg.det(m)) ** (-0.5 / n)
    return Gauge("ellipsoidal", n, scale, matrix=_readonly(m))


def pnorm_gauge(p: float, dim: int = 2) -> Gauge:
    """Scaled p-norm gauge (2-D); polar is the p'-norm with 1/p + 1/p' = 1."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if dim != 2:
        raise ValueError("p-norm gauges are supported in dim 2 only")
    raw = _pnorm_ball_volume(dim, p)
    scale = (raw / unit_ball_volume(dim)) ** (1.0 / dim)
    return Gauge("pnorm", dim, scale, p=float(p))


def polygonal_gauge(vertices) -> Gauge:
    """Gauge of the convex polygon with the given vertices (2-D).

    The polygon must be strictly convex and centrally symmetric (K = -K),
    since gauges here satisfy H(-xi) = H(xi).  Vertices may be listed in
    either orientation; they are reordered counterclockwise.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 4:
        raise ValueError("need at least 4 vertices (x, y) for a symmetric polygon")
    if _shoelace(v) < 0:
        v = v[::-1]
    if _shoelace(v) <= 0:
        raise ValueError("polygon has nonpositive area")
    edges = np.roll(v, -1, axis=0) - v
    cross = edges[:, 0] * np.roll(edges[:, 1], -1) - edges[:, 1] * np.roll(edges[:, 0], -1)
    if np.any(cross <= 0):
        raise ValueError("polygon must be strictly convex (no collinear vertices)")
    span = np.max(np.linalg.norm(v, axis=1))
    for vert in v:
        if np.min(np.linalg.norm(v + vert, axis=1)) > 1e-9 * span:
            raise ValueError("polygon must be centrally symmetric (K = -K)")
    normals, offsets = _facets_from_vertices(v)
    if np.any(offsets <= 0):
        raise ValueError("origin must lie in the interior of the polygon")
    scale = (_shoelace(v) / unit_ball_volume(2)) ** 0.5
    return Gauge("polygonal", 2, scale,
                 normals=_readonly(normals), offsets=_readonly(offsets),
                 vertices=_readonly(v))


def parse_gauge(spec: str) -> Gauge:
    """Parse the gauge mini-language used by the CLI and config files.

    euclidean | ellipse:a,b | pnorm:p | polygon:x1,y1;x2,y2;...
    (ellipse semi-axes and polygon vertices describe K before normalization)
    """
    spec = spec.strip()
    if spec == "euclidean":
        return euclidean_gauge(2)
    if spec.startswith("ellipse:"):
        a, b = (float(t) for t in spec[len("ellipse:"):].split(","))
        if a <= 0 or b <= 0:
            raise ValueError("ellipse semi-axes must be positive")
        return ellipsoidal_gauge(np.diag([1.0 / a**2, 1.0 / b**2]))
    if spec.startswith("pnorm:"):
        txt = spec[len("pnorm:"):]
        return pnorm_gauge(math.inf if txt in ("inf", "oo") else float(txt))
    if spec.startswith("polygon:"):
        verts = [tuple(float(t) for t in pair.split(","))
                 for pair in spec[len("polygon:"):].split(";") if pair.strip()]
        return polygonal_gauge(np.array(verts))
    raise ValueError(f"unrecognized gauge spec {spec!r}")


def ball_measure_quadrature(g: Gauge, rel_tol: float = 1e-10) -> float:
    """|{H <= 1}| by adaptive angular quadrature (2-D); independent of closed forms."""
    if g.dim != 2:
        raise ValueError("quadrature measure implemented for dim 2 only")

    def radial(theta):
        return 0.5 / g.value(np.array([math.cos(theta), math.sin(theta)])) ** 2

    total = 0.0
    edges = np.linspace(0.0, 2.0 * math.pi, 17)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(radial, a, b, epsabs=0.0, epsrel=rel_tol, limit=200)
        total += val
    return total
