"""Operator calculus for lambda-connections on discretized domains.

Conventions.  Sections are coordinate columns in a fixed global frame; the
metric is the Gram field H with |u|^2 = u^H H u, and the adjoint of an
endomorphism M is H^-1 M^H H.  A connection is stored through its
coefficient matrices relative to the flat frame derivatives in the chart
coordinate w:

    d''_E = dbar_0 + A01 dwbar,      d'_E = lambda d_0 + A10 dw.

All (1,1)-objects are coefficient matrices on dw ^ dwbar; contraction
against omega = rho (i/2) dw dwbar follows sqrt(-1)*Lambda(f dw dwbar)
= 2 f / rho.  On one-complex-dimensional charts the (2,0) and (0,2) parts
of any operator square vanish identically as forms; they are reported as
structural zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMetricError,
    BadProjectorError,
    NotPrimitiveError,
    SchemaError,
    ShortcutInvalidError,
)
from .grids import GridDomain, connection_form, curvature_cores, herm_log


def _adjoint(Hinv: np.ndarray, H: np.ndarray, M: np.ndarray) -> np.ndarray:
    return Hinv @ np.conj(np.swapaxes(M, -1, -2)) @ H


def _comm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def frob(M: np.ndarray) -> np.ndarray:
    """Per-node Frobenius norm of a (..., r, r) field."""
    return np.sqrt((np.abs(M) ** 2).sum(axis=(-2, -1)))


@dataclass(frozen=True)
class MetricField:
    """Grid-sampled Hermitian positive-definite Gram matrices."""

    grid: GridDomain
    data: np.ndarray  # (n1, n2, r, r) complex

    def __post_init__(self):
        H = np.ascontiguousarray(self.data, dtype=complex)
        if H.shape[:2] != self.grid.shape or H.shape[-1] != H.shape[-2]:
            raise BadMetricError("metric field shape mismatch")
        if not np.allclose(H, np.conj(np.swapaxes(H, -1, -2)), atol=1e-12 * (1 + np.abs(H).max())):
            raise BadMetricError("metric field is not Hermitian")
        if np.linalg.eigvalsh(H).min() <= 0:
            raise BadMetricError("metric field is not positive definite")
        object.__setattr__(self, "data", H)

    @property
    def rank(self) -> int:
        return self.data.shape[-1]

    @property
    def inv(self) -> np.ndarray:
        return np.linalg.inv(self.data)

    def log(self) -> np.ndarray:
        return herm_log(self.data)

    def det(self) -> np.ndarray:
        return np.linalg.det(self.data).real

    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.data).min())

    def scaled(self, factor: float) -> "MetricField":
        return MetricField(self.grid, self.data * factor)


@dataclass(frozen=True)
class ConnectionField:
    """Coefficients of a lambda-connection in the flat frame."""

    grid: GridDomain
    lam: complex
    A01: np.ndarray
    A10: np.ndarray

    def __post_init__(self):
        for name in ("A01", "A10"):
            M = np.ascontiguousarray(getattr(self, name), dtype=complex)
            if M.shape[:2] != self.grid.shape or M.shape[-1] != M.shape[-2]:
                raise SchemaError(f"{name} shape mismatch", name)
            object.__setattr__(self, name, M)
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def rank(self) -> int:
        return self.A01.shape[-1]

    def flatness_residual(self) -> np.ndarray:
        """Coefficient of D o D on dw ^ dwbar."""
        g = self.grid
        return self.lam * g.d_w(self.A01) - g.d_wbar(self.A10) + _comm(self.A10, self.A01)

    def flatness_sup(self) -> float:
        return float(frob(self.flatness_residual())[self.grid.interior].max())


@dataclass(frozen=True)
class HiggsPair:
    """A Higgs bundle in the fixed frame: dbar-coefficient and Higgs field."""

    grid: GridDomain
    A01: np.ndarray
    theta: np.ndarray  # coefficient on dw

    def __post_init__(self):
        object.__setattr__(self, "A01", np.ascontiguousarray(self.A01, dtype=complex))
        object.__setattr__(self, "theta", np.ascontiguousarray(self.theta, dtype=complex))


@dataclass(frozen=True)
class OperatorBundle:
    """Derived operators of (D, h): coefficient matrices at nodes."""

    grid: GridDomain
    lam: complex
    C10: np.ndarray  # delta'  (1,0)-coefficient (Chern partner of d'')
    B01: np.ndarray  # delta'' (0,1)-coefficient
    P01: np.ndarray  # unitary dbar coefficient
    P10: np.ndarray  # unitary d coefficient
    T10: np.ndarray  # Higgs-direction theta coefficient (dw)
    T01: np.ndarray  # its adjoint direction (dwbar)

    def reconstruction_error(self, D: ConnectionField) -> float:
        """sup of |D - (dbar + theta + lam(d + theta^+))| coefficientwise."""
        lam = self.lam
        a01 = self.P01 + lam * self.T01
        a10 = self.T10 + lam * self.P10
        err = max(
            np.abs(a01 - D.A01).max(),
            np.abs(a10 - D.A10).max(),
        )
        return float(err)


def decompose_operators(D: ConnectionField, h: MetricField, grid: GridDomain | None = None) -> OperatorBundle:
    """Split D into unitary and Higgs directions with respect to h.

    delta' is the Chern (1,0)-partner of d''; delta'' is fixed by
    lam * dh(u,v) = h(d' u, v) + h(u, delta'' v).  The four displayed
    operators carry the 1/(1+|lam|^2) prefactors and satisfy
    D = dbar + theta + lam (d + theta^+) exactly at coefficient level.
    """
    g = grid or D.grid
    H = h.data
    Hinv = h.inv
    lam = D.lam
    W = h.log()
    F10 = connection_form(g, W, bar=False)
    F01 = connection_form(g, W, bar=True)
    C10 = F10 - _adjoint(Hinv, H, D.A01)
    B01 = np.conj(lam) * F01 - _adjoint(Hinv, H, D.A10)
    den = 1.0 + abs(lam) ** 2
    P01 = (D.A01 + lam * B01) / den
    T01 = (np.conj(lam) * D.A01 - B01) / den
    P10 = (np.conj(lam) * D.A10 + C10) / den
    T10 = (D.A10 - lam * C10) / den
    return OperatorBundle(g, lam, C10, B01, P01, P10, T10, T01)


@dataclass(frozen=True)
class GTensor:
    """Components of G(h) = [D, D*_h]; coefficients on dw ^ dwbar.

    On a curve the (2,0) and (0,2) parts vanish identically as forms and are
    returned as structural zeros.  The (1,1) part is symmetrized to be
    exactly h-self-adjoint (the continuum object is); the discarded
    asymmetry is reported for diagnostics.
    """

    grid: GridDomain
    lam: complex
    g11: np.ndarray
    g20: np.ndarray
    g02: np.ndarray
    asymmetry: float

    def lambda_g11(self, h: MetricField) -> np.ndarray:
        """sqrt(-1) * Lambda_omega G(h)^{1,1} as a per-node endomorphism."""
        return 2.0 * self.g11 / self.grid.rho[..., None, None]

    def sup_norms(self) -> tuple[float, float, float]:
        m = self.grid.interior
        return (
            float(frob(self.g11)[m].max()),
            float(frob(self.g20)[m].max()),
            float(frob(self.g02)[m].max()),
        )


def g_tensor(D: ConnectionField, h: MetricField, grid: GridDomain | None = None) -> GTensor:
    """Curvature-like tensor G(h) = [D, D*_{E,h}] of a metric and connection."""
    g = grid or D.grid
    H = h.data
    Hinv = h.inv
    lam = D.lam
    W = h.log()
    dbar_d, d_dbar = curvature_cores(g, W)
    adj_A01 = _adjoint(Hinv, H, D.A01)
    adj_A10 = _adjoint(Hinv, H, D.A10)
    F10 = connection_form(g, W, bar=False)
    F01 = connection_form(g, W, bar=True)
    C10 = F10 - adj_A01
    B01 = np.conj(lam) * F01 - adj_A10

    # [d'', delta'] coefficient
    t1 = g.d_w(D.A01) - (dbar_d - g.d_wbar(adj_A01)) + _comm(C10, D.A01)
    # [d', delta''] coefficient
    t2 = (
        lam * (np.conj(lam) * d_dbar - g.d_w(adj_A10))
        - np.conj(lam) * g.d_wbar(D.A10)
        + _comm(D.A10, B01)
    )
    g11 = t1 - t2
    g11_adj = _adjoint(Hinv, H, g11)
    asym = float(frob(g11 - g11_adj)[g.interior].max())
    g11 = 0.5 * (g11 + g11_adj)
    zero = np.zeros_like(g11)
    return GTensor(g, lam, g11, zero, zero.copy(), asym)


@dataclass(frozen=True)
class PluriharmonicReport:
    is_pluriharmonic: bool
    g11_sup: float
    g20_sup: float
    g02_sup: float
    tol: float
    shortcut_used: bool
    asymmetry: float


def default_curvature_tol(D: ConnectionField, h: MetricField, bundle: OperatorBundle | None = None,
                          factor: float = 10.0) -> float:
    """factor * Delta^2 scaled by the magnitude of the derived coefficients.

    The scale separates the stencil error of an exactly harmonic pair from
    genuine curvature on the model fixtures; it is a calibration, and every
    verdict carries the tolerance actually used.
    """
    g = D.grid
    delta = max(g.spacings)
    if bundle is None:
        bundle = decompose_operators(D, h)
    mags = [frob(M).max() for M in (D.A01, D.A10, bundle.C10, bundle.B01)]
    scale = 1.0 + max(mags)
    return factor * delta**2 * scale


def pluriharmonic_test(
    D: ConnectionField,
    h: MetricField,
    grid: GridDomain | None = None,
    tol: float | None = None,
    use_shortcut: bool | None = None,
) -> PluriharmonicReport:
    """Check G(h) = 0 within tolerance.

    For lam != 0 the (1,1) part alone decides (its vanishing forces the
    rest); requesting the shortcut at lam = 0 is an error.  All three
    component norms are reported either way.
    """
    g = grid or D.grid
    lam = D.lam
    if use_shortcut is None:
        use_shortcut = lam != 0
    if use_shortcut and lam == 0:
        raise ShortcutInvalidError("the (1,1)-only criterion needs lambda != 0")
    if tol is None:
        tol = default_curvature_tol(D, h)
    G = g_tensor(D, h, g)
    s11, s20, s02 = G.sup_norms()
    verdict = s11 < tol if use_shortcut else (s11 < tol and s20 < tol and s02 < tol)
    return PluriharmonicReport(bool(verdict), s11, s20, s02, float(tol), use_shortcut, G.asymmetry)


@dataclass(frozen=True)
class ResidualField:
    """Per-node residual matrix with interior norms."""

    grid: GridDomain
    field: np.ndarray

    @property
    def sup(self) -> float:
        return float(frob(self.field)[self.grid.interior].max())

    @property
    def l2(self) -> float:
        m = self.grid.interior
        dens = frob(self.field) ** 2 * self.grid.quad_weights
        return float(np.sqrt(dens[m].sum()))

    def s_profile(self) -> np.ndarray:
        """Max norm per axis-0 row (for refinement studies)."""
        return frob(self.field).max(axis=1)


def hitchin_residual(higgs: HiggsPair, h: MetricField, grid: GridDomain | None = None) -> ResidualField:
    """R(h) + [theta, theta^+_h] nodewise (coefficient on dw ^ dwbar).

    theta^+ is formed algebraically from h; only the metric and A01 are
    differenced.
    """
    g = grid or higgs.grid
    H, Hinv = h.data, h.inv
    W = h.log()
    dbar_d, _ = curvature_cores(g, W)
    adj_A01 = _adjoint(Hinv, H, higgs.A01)
    C10 = connection_form(g, W, bar=False) - adj_A01
    R = g.d_w(higgs.A01) - (dbar_d - g.d_wbar(adj_A01)) + _comm(C10, higgs.A01)
    theta_dag = _adjoint(Hinv, H, higgs.theta)
    return ResidualField(g, R + _comm(higgs.theta, theta_dag))


def refinement_ratio(coarse: ResidualField, fine: ResidualField) -> float:
    """Sup-norm ratio with the fine residual sampled at coarse locations.

    Grid-convergence comparison at common interior locations: the fine
    profile is interpolated to the coarse interior rows before taking sups.
    """
    gc, gf = coarse.grid, fine.grid
    sc, _ = gc.axes
    sf, _ = gf.axes
    pc = coarse.s_profile()
    pf = fine.s_profile()
    if gc.periodic_axis0:
        fine_vals = np.interp(sc, sf, pf, period=gc.periods[0])
        return float(pc.max() / fine_vals.max())
    mask_f = gf.interior[:, 0]
    fine_at_coarse = np.interp(sc[1:-1], sf[mask_f], pf[mask_f])
    return float(pc[1:-1].max() / fine_at_coarse.max())


@dataclass(frozen=True)
class LambdaFlatResult:
    connection: ConnectionField
    hitchin_sup: float
    flatness_sup: float
    warning: bool


def lambda_flat_from_higgs(
    higgs: HiggsPair,
    h: MetricField,
    lam: complex,
    grid: GridDomain | None = None,
    tol: float | None = None,
) -> LambdaFlatResult:
    """Flat lambda-connection dbar + lam theta^+ + lam d_h + theta.

    If h fails the Hitchin equation beyond tolerance the result is still
    returned, flagged with a warning.
    """
    g = grid or higgs.grid
    H, Hinv = h.data, h.inv
    res = hitchin_residual(higgs, h, g)
    if tol is None:
        delta = max(g.spacings)
        scale = 1.0 + max(frob(higgs.theta).max(), frob(connection_form(g, h.log())).max()) ** 2
        tol = 50.0 * delta**2 * scale
    theta_dag = _adjoint(Hinv, H, higgs.theta)
    C10 = connection_form(g, h.log(), bar=False) - _adjoint(Hinv, H, higgs.A01)
    A01 = higgs.A01 + lam * theta_dag
    A10 = lam * C10 + higgs.theta
    D = ConnectionField(g, lam, A01, A10)
    return LambdaFlatResult(D, res.sup, D.flatness_sup(), bool(res.sup > tol))


# ---------------------------------------------------------------------------
# pointwise trace identity on a flat two-complex-dimensional patch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KobayashiLubkeReport:
    lhs_field: np.ndarray
    rhs_field: np.ndarray
    ratio_field: np.ndarray
    removed_trace_sup: float


def kobayashi_lubke_pointwise(
    Gperp: np.ndarray,
    grid: GridDomain,
    tol: float = 1e-8,
) -> KobayashiLubkeReport:
    """Pointwise densities of Tr((G_perp)^2) against |G_perp|^2.

    ``Gperp`` has shape (n1, n2, 2, 2, r, r): coefficient matrices on
    dz_a ^ dzbar_b over a flat C^2 patch sampled in an h-orthonormal frame.
    Inputs are projected to their omega-primitive part (the removed trace
    must stay below tol); the lhs is the coefficient of the trace square on
    the dz1 dzbar1 dz2 dzbar2 basis and the rhs is the Frobenius density.
    For Hermitian-Einstein-structured samples the ratio is a constant whose
    value depends only on normalization conventions; constancy and sign are
    the testable claims.
    """
    if grid.complex_dim != 2:
        raise SchemaError("the trace identity check needs a 2-complex-dim grid", "grid")
    G = np.ascontiguousarray(Gperp, dtype=complex)
    if G.ndim != 6 or G.shape[2:4] != (2, 2) or G.shape[-1] != G.shape[-2]:
        raise SchemaError("Gperp must have shape (n1, n2, 2, 2, r, r)", "Gperp")
    r = G.shape[-1]
    scale = np.abs(G).max() + 1e-300
    tr_form = 0.5 * (G[:, :, 0, 0] + G[:, :, 1, 1])
    removed = float(frob(tr_form).max() / scale)
    if removed > tol:
        raise NotPrimitiveError(
            f"omega-trace of the input is {removed:.3e} of its magnitude (tol {tol:.1e})"
        )
    G = G.copy()
    G[:, :, 0, 0] -= tr_form
    G[:, :, 1, 1] -= tr_form
    endo_tr = np.trace(G, axis1=-2, axis2=-1)
    if np.abs(endo_tr).max() > tol * r * scale:
        raise NotPrimitiveError("input is not endomorphism-trace-free")

    G00, G01 = G[:, :, 0, 0], G[:, :, 0, 1]
    G10, G11 = G[:, :, 1, 0], G[:, :, 1, 1]
    lhs = np.trace(
        G00 @ G11 + G11 @ G00 - G01 @ G10 - G10 @ G01, axis1=-2, axis2=-1
    )
    rhs = (np.abs(G) ** 2).sum(axis=(2, 3, 4, 5))
    ratio = lhs.real / np.where(rhs > 0, rhs, 1.0)
    return KobayashiLubkeReport(lhs.real, rhs, ratio, removed)
