"""Discretized domains and derivative stencils.

Two one-complex-dimensional charts are supported: a flat torus with
coordinate w = x + iy, and an annulus in log-polar coordinates w = log z =
s + i*phi, in which dz/z-type coefficients are constant.  A flat
two-complex-dimensional patch (complex_dim=2) exists only as a node set for
pointwise linear-algebra checks; no stencils are defined on it.

All first derivatives are centered 2nd-order (one-sided 2nd-order closure at
the non-periodic annulus edges).  Second-derivative "curvature cores" use the
compact staggered composition with midpoint transport, which keeps the
truncation constants on the scale of log-metric derivatives; their values on
the two edge rows are a lower-order closure and every norm/solve contract in
this package is over the interior mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegreeMismatchError, SchemaError


@dataclass(frozen=True)
class GridDomain:
    """Uniform grid on a torus or a log-polar annulus with a Kahler weight.

    kahler_weight rho defines omega = rho * (i/2) dw ^ dwbar in the chart
    coordinate; contraction follows sqrt(-1)*Lambda(f dw^dwbar) = 2 f / rho.
    """

    kind: str  # "torus" | "annulus"
    shape: tuple[int, int]
    periods: tuple[float, float] = (1.0, 1.0)  # torus only
    r_min: float = 0.0  # annulus only
    r_max: float = 0.0
    kahler_weight: np.ndarray | None = None
    complex_dim: int = 1

    def __post_init__(self):
        if self.kind not in ("torus", "annulus"):
            raise SchemaError(f"unknown grid kind {self.kind!r}", "kind")
        n1, n2 = self.shape
        if min(n1, n2) < 8:
            raise SchemaError("resolution must be >= 8 per axis", "shape")
        if self.kind == "annulus":
            if self.complex_dim != 1:
                raise SchemaError("annulus grids are one-dimensional", "complex_dim")
            if not (0 < self.r_min < self.r_max):
                raise SchemaError("need 0 < r_min < r_max", "r_min")
        if self.kahler_weight is not None:
            w = np.asarray(self.kahler_weight, dtype=float)
            if w.shape != self.shape:
                raise SchemaError("kahler_weight shape mismatch", "kahler_weight")
            if not (w > 0).all():
                raise SchemaError("kahler_weight must be positive", "kahler_weight")
            object.__setattr__(self, "kahler_weight", w)

    # -- geometry ----------------------------------------------------------

    @cached_property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        n1, n2 = self.shape
        if self.kind == "torus":
            return (
                np.arange(n1) * (self.periods[0] / n1),
                np.arange(n2) * (self.periods[1] / n2),
            )
        s = np.linspace(np.log(self.r_min), np.log(self.r_max), n1)
        phi = np.arange(n2) * (2 * np.pi / n2)
        return s, phi

    @property
    def spacings(self) -> tuple[float, float]:
        a1, a2 = self.axes
        n1, n2 = self.shape
        if self.kind == "torus":
            return self.periods[0] / n1, self.periods[1] / n2
        return float(a1[1] - a1[0]), 2 * np.pi / n2

    @cached_property
    def w(self) -> np.ndarray:
        """Chart coordinate at nodes (complex)."""
        a1, a2 = self.axes
        return a1[:, None] + 1j * a2[None, :]

    @cached_property
    def z(self) -> np.ndarray:
        """Ambient coordinate: w itself on the torus, exp(w) on the annulus."""
        return self.w if self.kind == "torus" else np.exp(self.w)

    @cached_property
    def rho(self) -> np.ndarray:
        if self.kahler_weight is not None:
            return self.kahler_weight
        return np.ones(self.shape)

    @property
    def periodic_axis0(self) -> bool:
        return self.kind == "torus"

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        if not self.periodic_axis0:
            mask[0, :] = False
            mask[-1, :] = False
        return mask

    def with_weight(self, rho: np.ndarray) -> "GridDomain":
        return GridDomain(
            self.kind, self.shape, self.periods, self.r_min, self.r_max,
            np.asarray(rho, dtype=float), self.complex_dim,
        )

    # -- first derivatives ---------------------------------------------------

    def _d_axis0(self, F: np.ndarray) -> np.ndarray:
        h = self.spacings[0]
        if self.periodic_axis0:
            return (np.roll(F, -1, axis=0) - np.roll(F, 1, axis=0)) / (2 * h)
        out = np.empty_like(F)
        out[1:-1] = (F[2:] - F[:-2]) / (2 * h)
        out[0] = (-3 * F[0] + 4 * F[1] - F[2]) / (2 * h)
        out[-1] = (3 * F[-1] - 4 * F[-2] + F[-3]) / (2 * h)
        return out

    def _d_axis1(self, F: np.ndarray) -> np.ndarray:
        h = self.spacings[1]
        return (np.roll(F, -1, axis=1) - np.roll(F, 1, axis=1)) / (2 * h)

    def d_w(self, F: np.ndarray) -> np.ndarray:
        """d/dw of a node field with trailing matrix axes."""
        return 0.5 * (self._d_axis0(F) - 1j * self._d_axis1(F))

    def d_wbar(self, F: np.ndarray) -> np.ndarray:
        return 0.5 * (self._d_axis0(F) + 1j * self._d_axis1(F))

    # -- integration ---------------------------------------------------------

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Quadrature weights for the chart area element du dv."""
        h1, h2 = self.spacings
        w = np.full(self.shape, h1 * h2)
        if not self.periodic_axis0:
            w[0, :] *= 0.5
            w[-1, :] *= 0.5
        return w

    def integrate(self, f: np.ndarray) -> float | complex:
        """Integral of a scalar node field against the chart area element."""
        total = (f * self.quad_weights).sum()
        return complex(total) if np.iscomplexobj(f) else float(total)

    def volume(self) -> float:
        """Total volume of omega = rho (i/2) dw dwbar."""
        return float(self.integrate(self.rho))


# ---------------------------------------------------------------------------
# matrix-log transport machinery
# ---------------------------------------------------------------------------

def herm_log(H: np.ndarray) -> np.ndarray:
    """Principal logarithm of a Hermitian positive-definite field."""
    lam, U = np.linalg.eigh(H)
    if lam.min() <= 0:
        raise SchemaError("field is not positive definite", "metric")
    return (U * np.log(lam)[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))


def herm_exp(W: np.ndarray) -> np.ndarray:
    lam, U = np.linalg.eigh(W)
    return (U * np.exp(lam)[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))


def _phi_ratio(x: np.ndarray) -> np.ndarray:
    """(1 - exp(-x))/x, stable near 0."""
    small = np.abs(x) < 1e-7
    xs = np.where(small, 1.0, x)
    out = -np.expm1(-xs) / xs
    return np.where(small, 1.0 - x / 2.0 + x * x / 6.0, out)


def dexp_transport(Wmid: np.ndarray, X: np.ndarray) -> np.ndarray:
    """phi(ad_W)(X): maps a W-increment to H^-1 dH at the same point."""
    lam, U = np.linalg.eigh(Wmid)
    Uh = np.conj(np.swapaxes(U, -1, -2))
    Y = Uh @ X @ U
    Y = Y * _phi_ratio(lam[..., :, None] - lam[..., None, :])
    return U @ Y @ Uh


def _staggered(W: np.ndarray, axis: int, h: float, periodic: bool):
    """Transported staggered difference at half nodes along one axis."""
    if periodic:
        Wb = np.roll(W, -1, axis=axis)
        Wa = W
    else:
        sl_a = [slice(None)] * W.ndim
        sl_b = [slice(None)] * W.ndim
        sl_a[axis] = slice(0, -1)
        sl_b[axis] = slice(1, None)
        Wa, Wb = W[tuple(sl_a)], W[tuple(sl_b)]
    return dexp_transport(0.5 * (Wa + Wb), (Wb - Wa) / h)


def connection_form(grid: GridDomain, W: np.ndarray, bar: bool = False) -> np.ndarray:
    """Node values of H^-1 d_w H (or d_wbar) through the log variable."""
    h1, h2 = grid.spacings
    n1 = grid.shape[0]
    if grid.periodic_axis0:
        D1 = dexp_transport(W, (np.roll(W, -1, axis=0) - np.roll(W, 1, axis=0)) / (2 * h1))
    else:
        D1 = np.empty_like(W)
        D1[1:-1] = dexp_transport(W[1:-1], (W[2:] - W[:-2]) / (2 * h1))
        D1[0] = dexp_transport(W[0], (-3 * W[0] + 4 * W[1] - W[2]) / (2 * h1))
        D1[-1] = dexp_transport(W[-1], (3 * W[-1] - 4 * W[-2] + W[-3]) / (2 * h1))
    D2 = dexp_transport(W, (np.roll(W, -1, axis=1) - np.roll(W, 1, axis=1)) / (2 * h2))
    return 0.5 * (D1 + 1j * D2) if bar else 0.5 * (D1 - 1j * D2)


def curvature_cores(grid: GridDomain, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(dbar(H^-1 d H), d(H^-1 dbar H)) via compact staggered composition.

    Returns node fields; on a non-periodic axis the two edge rows carry a
    one-sided closure of reduced order.
    """
    h1, h2 = grid.spacings
    per0 = grid.periodic_axis0

    Fs_half = _staggered(W, 0, h1, per0)
    Ff_half = _staggered(W, 1, h2, True)

    DsFs = np.empty_like(W)
    if per0:
        DsFs = (Fs_half - np.roll(Fs_half, 1, axis=0)) / h1
    else:
        DsFs[1:-1] = (Fs_half[1:] - Fs_half[:-1]) / h1
        DsFs[0] = DsFs[1]
        DsFs[-1] = DsFs[-2]
    DfFf = (Ff_half - np.roll(Ff_half, 1, axis=1)) / h2

    # node-centered transported first derivatives for the mixed terms
    Fs_node = np.empty_like(W)
    if per0:
        Fs_node = dexp_transport(W, (np.roll(W, -1, axis=0) - np.roll(W, 1, axis=0)) / (2 * h1))
    else:
        Fs_node[1:-1] = dexp_transport(W[1:-1], (W[2:] - W[:-2]) / (2 * h1))
        Fs_node[0] = dexp_transport(W[0], (-3 * W[0] + 4 * W[1] - W[2]) / (2 * h1))
        Fs_node[-1] = dexp_transport(W[-1], (3 * W[-1] - 4 * W[-2] + W[-3]) / (2 * h1))
    Ff_node = dexp_transport(W, (np.roll(W, -1, axis=1) - np.roll(W, 1, axis=1)) / (2 * h2))

    DsFf = np.empty_like(W)
    if per0:
        DsFf = (np.roll(Ff_node, -1, axis=0) - np.roll(Ff_node, 1, axis=0)) / (2 * h1)
    else:
        DsFf[1:-1] = (Ff_node[2:] - Ff_node[:-2]) / (2 * h1)
        DsFf[0] = (-3 * Ff_node[0] + 4 * Ff_node[1] - Ff_node[2]) / (2 * h1)
        DsFf[-1] = (3 * Ff_node[-1] - 4 * Ff_node[-2] + Ff_node[-3]) / (2 * h1)
    DfFs = (np.roll(Fs_node, -1, axis=1) - np.roll(Fs_node, 1, axis=1)) / (2 * h2)

    lap = DsFs + DfFf
    mixed = DsFf - DfFs
    dbar_d = 0.25 * (lap + 1j * mixed)
    d_dbar = 0.25 * (lap - 1j * mixed)
    return dbar_d, d_dbar


# ---------------------------------------------------------------------------
# scalar compact-Laplacian solves (the rank-one curvature core is exactly
# 1/4 of this operator applied to log h)
# ---------------------------------------------------------------------------

def compact_laplacian(grid: GridDomain, q: np.ndarray) -> np.ndarray:
    """Compact 5-point Laplacian in chart coordinates (edge rows closed)."""
    h1, h2 = grid.spacings
    out = np.empty_like(q)
    if grid.periodic_axis0:
        out = (np.roll(q, -1, axis=0) - 2 * q + np.roll(q, 1, axis=0)) / h1**2
    else:
        out[1:-1] = (q[2:] - 2 * q[1:-1] + q[:-2]) / h1**2
        out[0] = (2 * q[0] - 5 * q[1] + 4 * q[2] - q[3]) / h1**2
        out[-1] = (2 * q[-1] - 5 * q[-2] + 4 * q[-3] - q[-4]) / h1**2
    out += (np.roll(q, -1, axis=1) - 2 * q + np.roll(q, 1, axis=1)) / h2**2
    return out


_dirichlet_cache: dict[tuple, spla.SuperLU] = {}


def solve_compact_poisson(grid: GridDomain, source: np.ndarray,
                          mean_tol: float = 1e-8) -> np.ndarray:
    """Solve Lap(phi) = source with the compact 5-point operator.

    Torus: spectral inversion of the stencil symbol; the source must have
    (numerically) zero mean, otherwise DegreeMismatchError.  Annulus:
    homogeneous Dirichlet values on the two edge rows, sparse LU cached per
    grid signature.
    """
    n1, n2 = grid.shape
    h1, h2 = grid.spacings
    if grid.periodic_axis0:
        mean = source.mean()
        scale = np.abs(source).max() + 1.0
        if abs(mean) > mean_tol * scale:
            raise DegreeMismatchError(
                f"source mean {mean:.3e} incompatible with a periodic solve"
            )
        k1 = np.fft.fftfreq(n1) * 2 * np.pi
        k2 = np.fft.fftfreq(n2) * 2 * np.pi
        sym = (
            (2 * np.cos(k1[:, None]) - 2) / h1**2
            + (2 * np.cos(k2[None, :]) - 2) / h2**2
        )
        S = np.fft.fft2(source)
        S[0, 0] = 0.0
        sym[0, 0] = 1.0
        phi = np.fft.ifft2(S / sym)
        phi = phi.real if not np.iscomplexobj(source) else phi
        return phi - phi.mean()

    key = ("dirichlet", n1, n2, round(h1, 15), round(h2, 15))
    if key not in _dirichlet_cache:
        m = n1 - 2
        ids = lambda i, j: i * n2 + j  # i in [0, m), interior rows only
        rows, cols, vals = [], [], []
        for i in range(m):
            for j in range(n2):
                c = ids(i, j)
                rows.append(c); cols.append(c); vals.append(-2 / h1**2 - 2 / h2**2)
                for di in (-1, 1):
                    ii = i + di
                    if 0 <= ii < m:
                        rows.append(c); cols.append(ids(ii, j)); vals.append(1 / h1**2)
                for dj in (-1, 1):
                    rows.append(c); cols.append(ids(i, (j + dj) % n2)); vals.append(1 / h2**2)
        A = sp.csc_matrix((vals, (rows, cols)), shape=(m * n2, m * n2))
        _dirichlet_cache[key] = spla.splu(A)
    lu = _dirichlet_cache[key]
    phi = np.zeros_like(source, dtype=float)
    phi[1:-1] = lu.solve(np.ascontiguousarray(source[1:-1], dtype=float).ravel()).reshape(n1 - 2, n2)
    return phi
