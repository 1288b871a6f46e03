"""Grid functions and their rearrangements.

Scalar fields live on uniform 2-D grids with a boolean domain mask; each
masked cell carries measure h^2.  Rearrangements are cell-based: the
decreasing rearrangement simply sorts cell values, so equimeasurability with
the original function is an exact identity rather than an approximation.

The pseudo-rearrangement of a coefficient B relative to u orders cells by
decreasing |u| and reads off B along that ordering: the cumulative integral
of B^2 over superlevel sets of u is piecewise linear in the measure variable
s, and its slope on the k-th step is exactly B_k^2, so the square root of the
slope is the cell's own value.  Ties in |u| are broken by ascending flat cell
index, which makes the construction deterministic (and affects values only on
plateaus of u, never the cumulative integrals used downstream).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch
from .gauge import Gauge

__all__ = [
    "GridSpec",
    "GridFunction",
    "MonotoneProfile",
    "PseudoRearrangement",
    "distribution",
    "decreasing_rearrangement",
    "convex_rearrangement",
    "pseudo_rearrangement",
    "grid_for_wulff",
    "save_gridfunction",
    "load_gridfunction",
    "profile_to_csv",
    "profile_from_csv",
]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform cell-centered grid."""

    nx: int
    ny: int
    h: float
    origin: tuple[float, float] = (0.0, 0.0)

    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.h

    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.h

    def centers(self):
        """Meshgrid arrays (X, Y) of cell centers, shape (ny, nx)."""
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="xy")


@dataclass
class GridFunction:
    """Scalar field on a uniform grid with a domain mask (values per cell)."""

    values: np.ndarray           # shape (ny, nx)
    mask: np.ndarray             # shape (ny, nx), bool
    h: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.shape != self.mask.shape or self.values.ndim != 2:
            raise ValueError("values and mask must be 2-D arrays of equal shape")
        if self.h <= 0:
            raise ValueError("cell width h must be positive")
        if not self.mask.any():
            raise ValueError("domain mask is empty")
        if not np.isfinite(self.values[self.mask]).all():
            raise ValueError("values must be finite on the domain mask")
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.h, self.origin)

    @property
    def measure(self) -> float:
        """Grid measure |Omega| = h^2 * (number of masked cells)."""
        return self.h * self.h * int(self.mask.sum())

    def masked_values(self) -> np.ndarray:
        return self.values[self.mask]

    @classmethod
    def sample(cls, fn, spec: GridSpec, mask=None) -> "GridFunction":
        """Sample fn(X, Y) at cell centers; mask may be a bool array or fn(X, Y)."""
        X, Y = spec.centers()
        if mask is None:
            m = np.ones_like(X, dtype=bool)
        elif callable(mask):
            m = np.asarray(mask(X, Y), dtype=bool)
        else:
            m = np.asarray(mask, dtype=bool)
        vals = np.where(m, np.asarray(fn(X, Y), dtype=float), 0.0)
        return cls(vals, m, spec.h, spec.origin)

    def same_grid(self, other: "GridFunction") -> bool:
        return (self.values.shape == other.values.shape
                and self.h == other.h and self.origin == other.origin
                and bool(np.array_equal(self.mask, other.mask)))


@dataclass
class MonotoneProfile:
    """Nonincreasing step or piecewise-linear profile on [0, breakpoints[-1]].

    ``kind="constant"``: values[k] on [breakpoints[k], breakpoints[k+1]);
    evaluation beyond the last breakpoint returns 0 (empty superlevel set).
    ``kind="linear"``: values at the breakpoints, linear in between.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    kind: str = "constant"

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.breakpoints.ndim != 1 or len(self.breakpoints) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        expected = len(self.breakpoints) - 1 if self.kind == "constant" else len(self.breakpoints)
        if self.kind not in ("constant", "linear"):
            raise ValueError("kind must be 'constant' or 'linear'")
        if len(self.values) != expected:
            raise ValueError(f"expected {expected} values for kind={self.kind!r}")
        if np.any(np.diff(self.values) > 1e-15 * max(1.0, float(np.abs(self.values).max(initial=0.0)))):
            raise ValueError("profile values must be nonincreasing")

    @property
    def domain_end(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, s) -> np.ndarray | float:
        s = np.asarray(s, dtype=float)
        single = s.ndim == 0
        sv = np.atleast_1d(s)
        if self.kind == "constant":
            idx = np.clip(np.searchsorted(self.breakpoints, sv, side="right") - 1,
                          0, len(self.values) - 1)
            out = self.values[idx]
            out = np.where(sv >= self.breakpoints[-1], 0.0, out)
            out = np.where(sv < 0.0, self.values[0], out)
        else:
            out = np.interp(sv, self.breakpoints, self.values)
        return float(out[0]) if single else out.reshape(s.shape)


@dataclass
class PseudoRearrangement:
    """Radial profile b~(r) on [0, total_radius], constant beyond the node range."""

    radii: np.ndarray
    values: np.ndarray
    total_radius: float

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.radii.shape != self.values.shape or self.radii.ndim != 1:
            raise ValueError("radii and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if not np.isfinite(self.values).all() or np.any(self.values < 0):
            raise ValueError("pseudo-rearrangement values must be finite and >= 0")

    def __call__(self, r) -> np.ndarray | float:
        return np.interp(r, self.radii, self.values)

    def integral_nodes(self):
        """Nodes on [0, total_radius] and trapezoid antiderivative of b~ there."""
        nodes = np.concatenate([[0.0], self.radii, [self.total_radius]])
        vals = np.concatenate([[self.values[0]], self.values, [self.values[-1]]])
        seg = 0.5 * (vals[1:] + vals[:-1]) * np.diff(nodes)
        return nodes, np.concatenate([[0.0], np.cumsum(seg)])


# -- sorting machinery ---------------------------------------------------------


def _sorted_cells(u: GridFunction):
    """Masked |values| sorted descending; ties broken by ascending flat cell index."""
    av = np.abs(u.masked_values())
    order = np.argsort(-av, kind="stable")
    return order, av[order]


def distribution(u: GridFunction) -> MonotoneProfile:
    """Distribution function t -> h^2 * #{cells : |u| > t} (right-continuous step)."""
    av = np.abs(u.masked_values())
    m = len(av)
    asc = np.sort(av)
    uniq = np.unique(asc)
    pos = uniq[uniq > 0]
    if len(pos) == 0:
        return MonotoneProfile(np.array([0.0, 1.0]), np.array([0.0]))
    bp = np.concatenate([[0.0], pos])
    counts = m - np.searchsorted(asc, bp, side="right")
    cell = u.h * u.h
    return MonotoneProfile(bp, cell * counts[:-1].astype(float))


def decreasing_rearrangement(u: GridFunction) -> MonotoneProfile:
    """Step profile assigning the k-th largest |u| value to [(k-1)h^2, k h^2)."""
    _, desc = _sorted_cells(u)
    cell = u.h * u.h
    bp = np.arange(len(desc) + 1, dtype=float) * cell
    return MonotoneProfile(bp, desc)


def convex_rearrangement(u: GridFunction, g: Gauge, target) -> GridFunction:
    """Rearrangement with Wulff-shaped level sets, sampled on the target grid.

    The result at x is ustar(kappa_n * H0(x)^n); its superlevel sets are
    homothets of the polar body K0, and the target mask marks the symmetrized
    domain of the same measure as u's domain.
    """
    spec = target.spec if isinstance(target, GridFunction) else target
    ustar = decreasing_rearrangement(u)
    kappa = g.kappa()
    polar = g.polar()
    X, Y = spec.centers()
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    s = kappa * polar.value(pts) ** g.dim
    mask = (s <= u.measure).reshape(X.shape)
    vals = ustar(s).reshape(X.shape)
    return GridFunction(np.where(mask, vals, 0.0), mask, spec.h, spec.origin)


def pseudo_rearrangement(B: GridFunction, u: GridFunction, g: Gauge) -> PseudoRearrangement:
    """Square root of d/ds of the integral of B^2 over {|u| > ustar(s)}.

    On the discrete grid the cumulative integral is piecewise linear in s with
    slope B_k^2 on the k-th sorted step, so the profile value at the step's
    radius r = (s/kappa_n)^(1/n) (s taken at the step midpoint) is B_k itself.
    """
    if not B.same_grid(u):
        raise GridMismatch("B and u must be sampled on the same grid and mask")
    bm = B.masked_values()
    if np.any(bm < 0):
        raise ValueError("coefficient B must be nonnegative")
    order, _ = _sorted_cells(u)
    bvals = bm[order]
    m = len(bvals)
    cell = u.h * u.h
    kappa = g.kappa()
    s_mid = (np.arange(m) + 0.5) * cell
    radii = (s_mid / kappa) ** (1.0 / g.dim)
    total = (m * cell / kappa) ** (1.0 / g.dim)
    return PseudoRearrangement(radii, bvals, total)


def grid_for_wulff(g: Gauge, measure: float, nx: int, pad: float = 1.02) -> GridSpec:
    """Square-cell grid covering the Wulff domain (measure/kappa_n)^(1/n) * K0."""
    radius = (measure / g.kappa()) ** (1.0 / g.dim)
    wx = pad * radius * g.value(np.array([1.0, 0.0]))
    wy = pad * radius * g.value(np.array([0.0, 1.0]))
    h = 2.0 * wx / nx
    ny = int(np.ceil(2.0 * wy / h))
    return GridSpec(nx, ny, h, (-wx, -ny * h / 2.0))


# -- file formats ---------------------------------------------------------------


def save_gridfunction(u: GridFunction, path) -> None:
    """Write the JSON grid-function format: header plus row-major value/mask arrays."""
    doc = {
        "nx": u.nx,
        "ny": u.ny,
        "h": u.h,
        "origin": list(u.origin),
        "values": u.values.ravel().tolist(),
        "mask": u.mask.ravel().astype(int).tolist(),
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_gridfunction(path) -> GridFunction:
    with open(path) as f:
        doc = json.load(f)
    shape = (int(doc["ny"]), int(doc["nx"]))
    values = np.asarray(doc["values"], dtype=float).reshape(shape)
    mask = np.asarray(doc["mask"], dtype=bool).reshape(shape)
    return GridFunction(values, mask, float(doc["h"]), tuple(doc.get("origin", (0.0, 0.0))))


def profile_to_csv(profile: MonotoneProfile, path) -> None:
    """Two-column CSV (s, value); constant profiles repeat the last value at the end."""
    bp = profile.breakpoints
    if profile.kind == "constant":
        vals = np.concatenate([profile.values, profile.values[-1:]])
    else:
        vals = profile.values
    np.savetxt(path, np.column_stack([bp, vals]), delimiter=",", header="s,value", comments="")


def profile_from_csv(path, kind: str = "constant") -> MonotoneProfile:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    bp, vals = data[:, 0], data[:, 1]
    if kind == "constant":
        return MonotoneProfile(bp, vals[:-1], "constant")
    return MonotoneProfile(bp, vals, "linear")
