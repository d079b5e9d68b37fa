"""Hermitian-Einstein machinery: Kahler family, rank-one solve, heat flow.

The flow drives sqrt(-1)*Lambda_omega G(h) toward A*id.  The trace part of
that equation is scalar and linear in log det h, so it is removed up front
by a conformal correction (a compact-Poisson solve); the remaining flow
steps are exactly trace-free in the Lie-algebra chart and preserve det h
pointwise.  In rank one the correction already solves the whole problem and
the flow terminates at step zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadProjectorError,
    DegreeMismatchError,
    FlowBlowupError,
    ParhError,
    SchemaError,
)
from .grids import GridDomain, compact_laplacian, curvature_cores, solve_compact_poisson
from .lambda_ops import (
    ConnectionField,
    MetricField,
    _adjoint,
    _comm,
    connection_form,
    frob,
    g_tensor,
)


class InvalidDirectionError(ParhError):
    kind = "invalid-direction"


# ---------------------------------------------------------------------------
# Kahler family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KahlerEps:
    """Conformal perturbation of the base Kahler weight near the puncture."""

    base: GridDomain
    eps: float
    N: float
    C: float
    conformal_factor: np.ndarray
    weight: np.ndarray

    def as_grid(self) -> GridDomain:
        return self.base.with_weight(self.weight)


def kahler_eps(grid: GridDomain, eps: float, N: float, C: float) -> KahlerEps:
    """omega_eps = omega_0 (1 + C eps^(N+2) eps^2 |z|^(2 eps - 2)) on the annulus.

    The reference omega_0 is the flat metric of the ambient z-coordinate
    (times any weight already carried by the grid); on a torus there is no
    divisor section and the base weight is returned unchanged.  eps = 0
    reproduces the base exactly.
    """
    if not (N > 10):
        raise SchemaError("need N > 10", "N")
    if not (C > 0):
        raise SchemaError("need C > 0", "C")
    if not (0 <= eps < 0.1):
        raise SchemaError("need 0 <= eps < 1/10", "eps")
    if grid.kind == "torus":
        factor = np.ones(grid.shape)
        weight = grid.rho.copy()
    else:
        z_abs = np.abs(grid.z)
        factor = 1.0 + C * eps ** (N + 2) * eps**2 * z_abs ** (2 * eps - 2)
        base_weight = grid.rho * z_abs**2  # flat-z reference in the log chart
        weight = base_weight * factor
    if not (weight > 0).all():
        raise SchemaError("omega_eps lost positivity", "eps")
    return KahlerEps(grid, float(eps), float(N), float(C), factor, weight)


def he_constant(deg_par: float, vol: float, lam: complex, n: int) -> float:
    """A with A * vol = 2 pi n (1+|lam|^2) * parabolic degree."""
    if vol <= 0:
        raise SchemaError("volume must be positive", "vol")
    return 2.0 * np.pi * n * (1.0 + abs(lam) ** 2) * float(deg_par) / float(vol)


# ---------------------------------------------------------------------------
# rank-one solve
# ---------------------------------------------------------------------------

def rank1_solve(
    grid: GridDomain,
    A: float,
    h0: MetricField,
    lam: complex = 0j,
    mean_tol: float = 1e-8,
) -> MetricField:
    """Solve sqrt(-1)*Lambda G(h) = A for a line-bundle metric h = h0 e^phi.

    In rank one the discrete curvature is linear in log h (the compact
    5-point Laplacian), so a single Poisson solve is exact at stencil level.
    Torus: the compatibility integral must vanish (A incompatible with the
    degree raises degree-mismatch) and phi is mean-normalized.  Annulus:
    homogeneous Dirichlet data, i.e. h keeps h0's boundary values.
    """
    if h0.rank != 1:
        raise SchemaError("rank1_solve needs a rank-one metric", "h0")
    q0 = np.log(h0.data[..., 0, 0].real)
    den = 1.0 + abs(lam) ** 2
    source = -2.0 * grid.rho * float(A) / den - compact_laplacian(grid, q0)
    try:
        phi = solve_compact_poisson(grid, source, mean_tol=mean_tol)
    except DegreeMismatchError as exc:
        raise DegreeMismatchError(f"A = {A} is incompatible with the torus degree: {exc}") from exc
    return MetricField(grid, (np.exp(phi) * h0.data[..., 0, 0])[..., None, None])


# ---------------------------------------------------------------------------
# heat flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowState:
    step_count: int
    t: float
    residual: float
    donaldson_value: float
    dt: float
    min_eig: float
    h: MetricField | None = None


@dataclass(frozen=True)
class FlowResult:
    trajectory: tuple[FlowState, ...]
    final: MetricField
    initial: MetricField  # after the trace correction; reference for Donaldson
    converged: bool
    steps: int
    trace_correction_sup: float


def _expm_series(X: np.ndarray) -> np.ndarray:
    """Vectorized matrix exponential by scaling-and-squaring a short series."""
    norm = float(np.abs(X).max(initial=0.0))
    k = 0
    while norm > 0.25:
        X = X / 2.0
        norm /= 2.0
        k += 1
    r = X.shape[-1]
    E = np.broadcast_to(np.eye(r, dtype=complex), X.shape).copy()
    term = E.copy()
    for n in range(1, 13):
        term = term @ X / n
        E = E + term
        if np.abs(term).max(initial=0.0) < 1e-17:
            break
    for _ in range(k):
        E = E @ E
    return E


def he_residual_matrix(D: ConnectionField, h: MetricField, grid: GridDomain, A: float) -> np.ndarray:
    """sqrt(-1)*Lambda_omega G(h) - A id as a per-node endomorphism."""
    G = g_tensor(D, h, grid)
    r = h.rank
    M = 2.0 * G.g11 / grid.rho[..., None, None]
    return M - float(A) * np.eye(r)


def _trace_correct(
    D: ConnectionField,
    h: MetricField,
    grid: GridDomain,
    A: float,
    rounds: int,
    target: float,
) -> tuple[MetricField, float]:
    """Conformal correction solving the trace part of the HE equation."""
    r = h.rank
    den = 1.0 + abs(D.lam) ** 2
    H = h.data
    last = np.inf
    for _ in range(rounds):
        M = he_residual_matrix(D, MetricField(grid, H), grid, A)
        tau = np.trace(M, axis1=-2, axis2=-1).real
        sup = float(np.abs(tau)[grid.interior].max())
        if sup < target or sup >= last:
            break
        last = sup
        source = grid.rho * tau / (r * den)
        u = solve_compact_poisson(grid, source)
        H = H * np.exp(u / r)[..., None, None]
    M = he_residual_matrix(D, MetricField(grid, H), grid, A)
    tau = np.trace(M, axis1=-2, axis2=-1).real
    return MetricField(grid, H), float(np.abs(tau)[grid.interior].max())


def heat_flow(
    D: ConnectionField,
    h0: MetricField,
    grid: GridDomain,
    A: float,
    dt0: float | None = None,
    max_steps: int = 20000,
    tol: float = 1e-6,
    sample_every: int = 25,
    correct_trace: bool = True,
    trace_rounds: int = 4,
) -> FlowResult:
    """Donaldson heat flow h <- h exp(-dt (sqrt(-1)Lambda G - A)^perp).

    Explicit exponential Euler with adaptive dt (halve and revert on residual
    increase, grow 1.2x on decrease).  The Lie-algebra step is exactly
    trace-free, so det h is constant along the flow; the trace part of the
    equation is solved by a conformal pre-correction.  On the annulus the
    edge rows are Dirichlet data and are never updated; the residual is the
    interior sup of |sqrt(-1)Lambda G - A|.
    """
    r = h0.rank
    den = 1.0 + abs(D.lam) ** 2
    if correct_trace:
        href, trace_sup = _trace_correct(D, h0, grid, A, trace_rounds, 0.05 * tol)
    else:
        href, trace_sup = h0, float("nan")

    h1, h2 = grid.spacings
    lap_max = 4.0 / h1**2 + 4.0 / h2**2
    dt_cap = 0.9 * 2.0 / (den * lap_max / (2.0 * grid.rho.min()))
    dt = dt0 if dt0 is not None else dt_cap / 4.0
    interior = grid.interior
    eye = np.eye(r)

    H = href.data.copy()
    t = 0.0
    states: list[FlowState] = []
    prev_res = np.inf
    converged = False
    step = 0

    def record(step, t, res, dt, H):
        me = float(np.linalg.eigvalsh(H).min())
        dv = donaldson_functional(href, MetricField(grid, H), D, grid)
        states.append(FlowState(step, t, res, dv, dt, me))

    while step <= max_steps:
        M = he_residual_matrix(D, MetricField(grid, H), grid, A)
        res = float(frob(M)[interior].max())
        if step % sample_every == 0:
            record(step, t, res, dt, H)
        if res < tol:
            converged = True
            break
        Mperp = M - (np.trace(M, axis1=-2, axis2=-1) / r)[..., None, None] * eye
        if not grid.periodic_axis0:
            Mperp[0] = 0.0
            Mperp[-1] = 0.0
        if res > prev_res * (1.0 + 1e-12):
            dt = max(dt / 2.0, 1e-12)
        else:
            dt = min(dt * 1.2, dt_cap)
        E = _expm_series(-dt * Mperp)
        Hn = H @ E
        Hn = 0.5 * (Hn + np.conj(np.swapaxes(Hn, -1, -2)))
        if np.linalg.eigvalsh(Hn).min() <= 0:
            raise FlowBlowupError(
                "flow lost positive definiteness",
                last_state=FlowState(step, t, res, float("nan"), dt,
                                     float(np.linalg.eigvalsh(H).min()), MetricField(grid, H)),
            )
        H = Hn
        t += dt
        prev_res = res
        step += 1

    final = MetricField(grid, H)
    if not states or states[-1].step_count != step:
        M = he_residual_matrix(D, final, grid, A)
        res = float(frob(M)[interior].max())
        record(step, t, res, dt, H)
    states[-1] = FlowState(
        states[-1].step_count, states[-1].t, states[-1].residual,
        states[-1].donaldson_value, states[-1].dt, states[-1].min_eig, final,
    )
    return FlowResult(tuple(states), final, href, converged, step, trace_sup)


# ---------------------------------------------------------------------------
# Donaldson functional
# ---------------------------------------------------------------------------

def _h_log_direction(h0: MetricField, h1: MetricField) -> np.ndarray:
    """u with h1 = h0 e^u, self-adjoint for both metrics."""
    lam0, U0 = np.linalg.eigh(h0.data)
    root = (U0 * np.sqrt(lam0)[..., None, :]) @ np.conj(np.swapaxes(U0, -1, -2))
    rooti = (U0 * (1.0 / np.sqrt(lam0))[..., None, :]) @ np.conj(np.swapaxes(U0, -1, -2))
    P = rooti @ h1.data @ rooti
    lam, U = np.linalg.eigh(P)
    if lam.min() <= 0:
        raise InvalidDirectionError("h1 is not positive relative to h0")
    logP = (U * np.log(lam)[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    return rooti @ logP @ root


def donaldson_functional(
    h0: MetricField,
    h1: MetricField,
    D: ConnectionField,
    grid: GridDomain,
    n_quad: int = 8,
    u: np.ndarray | None = None,
) -> float:
    """Path integral of Tr(u sqrt(-1)Lambda G(h_t)) along h_t = h0 e^(t u).

    Composite Gauss-Legendre quadrature in t; carries the 1/(1+|lam|^2)
    degree normalization (monotonicity statements are normalization-free).
    """
    if u is None:
        u = _h_log_direction(h0, h1)
    else:
        u = np.ascontiguousarray(u, dtype=complex)
        uadj = _adjoint(h0.inv, h0.data, u)
        scale = 1.0 + np.abs(u).max()
        if np.abs(u - uadj).max() > 1e-8 * scale:
            raise InvalidDirectionError("direction is not h0-self-adjoint")
    nodes, wts = np.polynomial.legendre.leggauss(n_quad)
    nodes = 0.5 * (nodes + 1.0)
    wts = 0.5 * wts
    # u is h0-self-adjoint, not Hermitian; exponentiate via the Hermitian pencil
    lam0, U0 = np.linalg.eigh(h0.data)
    root = (U0 * np.sqrt(lam0)[..., None, :]) @ np.conj(np.swapaxes(U0, -1, -2))
    rooti = (U0 * (1.0 / np.sqrt(lam0))[..., None, :]) @ np.conj(np.swapaxes(U0, -1, -2))
    S = root @ u @ rooti  # Hermitian
    S = 0.5 * (S + np.conj(np.swapaxes(S, -1, -2)))
    lamS, US = np.linalg.eigh(S)
    USh = np.conj(np.swapaxes(US, -1, -2))
    den = 1.0 + abs(D.lam) ** 2
    total = 0.0
    for tq, wq in zip(nodes, wts):
        Et = (US * np.exp(tq * lamS)[..., None, :]) @ USh
        Ht = root @ Et @ root
        Ht = 0.5 * (Ht + np.conj(np.swapaxes(Ht, -1, -2)))
        G = g_tensor(D, MetricField(grid, Ht), grid)
        integrand = 2.0 * np.trace(u @ G.g11, axis1=-2, axis2=-1).real
        total += wq * grid.integrate(integrand)
    return float(total / den)


# ---------------------------------------------------------------------------
# Chern-Weil degree comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChernWeilReport:
    lhs_curvature_integral: float
    rhs_formula_value: float
    gap: float
    curvature_term: float
    deformation_term: float


def chern_weil_degree(
    D: ConnectionField,
    h: MetricField,
    pi: np.ndarray,
    grid: GridDomain,
    tol: float = 1e-8,
) -> ChernWeilReport:
    """Both sides of the projection degree formula for a subbundle.

    lhs: (1/2pi)(1+|lam|^2)^-1 [ integral Tr(sqrt(-1)Lambda G(h) pi)
         - integral |D pi|^2 ];  rhs: (sqrt(-1)/2pi) integral Tr R(h') for
    the induced metric on the image of pi.  The projector must be
    idempotent, h-orthogonal, constant in the frame, and D-invariant within
    tolerance.
    """
    pi = np.ascontiguousarray(pi, dtype=complex)
    if pi.shape != h.data.shape:
        raise BadProjectorError("projector field shape mismatch")
    scale = 1.0 + np.abs(pi).max()
    if np.abs(pi @ pi - pi).max() > tol * scale:
        raise BadProjectorError("projector is not idempotent")
    if np.abs(pi - _adjoint(h.inv, h.data, pi)).max() > tol * scale:
        raise BadProjectorError("projector is not h-orthogonal")
    pi0 = pi.reshape(-1, *pi.shape[-2:]).mean(axis=0)
    if np.abs(pi - pi0).max() > tol * scale:
        raise BadProjectorError("only frame-constant projectors are supported")
    r = h.rank
    eye = np.eye(r)
    inv01 = (eye - pi) @ D.A01 @ pi
    inv10 = (eye - pi) @ D.A10 @ pi
    conn_scale = 1.0 + max(np.abs(D.A01).max(), np.abs(D.A10).max())
    if max(np.abs(inv01).max(), np.abs(inv10).max()) > np.sqrt(tol) * conn_scale:
        raise BadProjectorError("image of the projector is not D-invariant")

    den = 1.0 + abs(D.lam) ** 2
    G = g_tensor(D, h, grid)
    curv = grid.integrate(2.0 * np.trace(G.g11 @ pi, axis1=-2, axis2=-1).real)
    Dpi01 = grid.d_wbar(pi) + _comm(D.A01, pi)
    Dpi10 = D.lam * grid.d_w(pi) + _comm(D.A10, pi)
    n01 = np.trace(Dpi01 @ _adjoint(h.inv, h.data, Dpi01), axis1=-2, axis2=-1).real
    n10 = np.trace(Dpi10 @ _adjoint(h.inv, h.data, Dpi10), axis1=-2, axis2=-1).real
    deform = grid.integrate(2.0 * (n01 + n10))
    lhs = (curv - deform) / (2.0 * np.pi * den)

    # induced subbundle data from the constant projector
    lam_p, U_p = np.linalg.eigh(0.5 * (pi0 + pi0.conj().T))
    cols = np.where(lam_p > 0.5)[0]
    B = U_p[:, cols]
    Hs = np.einsum("ai,xyab,bj->xyij", np.conj(B), h.data, B)
    A01s = np.einsum("ai,xyab,bj->xyij", np.conj(B), D.A01, B)
    hs = MetricField(grid, Hs)
    Ws = hs.log()
    dbar_d, _ = curvature_cores(grid, Ws)
    adj_A01s = _adjoint(hs.inv, Hs, A01s)
    C10s = connection_form(grid, Ws, bar=False) - adj_A01s
    Rs = grid.d_w(A01s) - (dbar_d - grid.d_wbar(adj_A01s)) + _comm(C10s, A01s)
    rhs = grid.integrate(2.0 * np.trace(Rs, axis1=-2, axis2=-1).real) / (2.0 * np.pi)
    return ChernWeilReport(float(lhs), float(rhs), float(abs(lhs - rhs)), float(curv), float(deform))
