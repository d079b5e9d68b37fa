"""Constructors for the explicitly solvable model bundles and metric families.

The L-kernel ``l_eps`` and the rank-2 diagonal metric built from it solve the
Hitchin equation in closed form on the punctured disc; symmetric powers and
weighted direct sums of those give curvature-bounded metric families for
arbitrary block data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import EpsilonTooLargeError, HypothesisViolatedError, OutOfDomainError, SchemaError
from .filtered import ComponentData, FilteredSpec, GradedPiece, ModelBlock
from .grids import GridDomain
from .lambda_ops import ConnectionField, HiggsPair, MetricField, _adjoint, frob, g_tensor
from .weights import (
    PsiMap,
    ResidueDatum,
    WeightSet,
    degree_preserving_psi,
    gap_or_default,
    reduce_to_window,
)

_SERIES_CUTOFF = 1e-8


def l_eps(z_abs, eps: float):
    """The kernel eps^-1 (|z|^-eps - |z|^eps); -log|z|^2 at eps = 0.

    Continuous in eps at 0; below 1e-8 a four-term series in eps*log|z| is
    used.  Accepts scalars or arrays with 0 < |z| < 1.
    """
    x = np.asarray(z_abs, dtype=float)
    if np.any(x <= 0) or np.any(x >= 1):
        raise OutOfDomainError("l_eps needs 0 < |z| < 1")
    if eps < 0:
        raise OutOfDomainError("eps must be >= 0")
    u = np.log(x)
    if eps < _SERIES_CUTOFF:
        e2 = eps * eps
        out = -2 * u * (1 + e2 * u**2 / 6 * (1 + e2 * u**2 / 20 * (1 + e2 * u**2 / 42)))
    else:
        out = -2 * np.sinh(eps * u) / eps
    return out if out.ndim else float(out)


def _check_model_grid(grid: GridDomain) -> None:
    if grid.kind != "annulus":
        raise OutOfDomainError("model metrics live on an annulus chart")
    if grid.r_max >= 1:
        raise OutOfDomainError("model annulus must sit inside the unit disc")


def _sym_gram_diag(L: np.ndarray, ell: int) -> np.ndarray:
    """Diagonal Gram entries of the (ell-1)-th symmetric power of diag(L, 1/L).

    Monomial basis v1^(ell-1-k) v2^k with the quotient normalization
    1/binom(ell-1, k); this is the normalization for which the induced
    metric solves the Hitchin equation with the derivation Higgs field.
    """
    return np.stack(
        [L ** (ell - 1 - 2 * k) / math.comb(ell - 1, k) for k in range(ell)],
        axis=-1,
    )


def _sym_lowering(ell: int) -> np.ndarray:
    N = np.zeros((ell, ell), dtype=complex)
    for k in range(ell - 1):
        N[k + 1, k] = ell - 1 - k
    return N


def sym_det_constant(ell: int) -> float:
    """Expected determinant of the symmetric-power Gram matrix."""
    return float(np.prod([1.0 / math.comb(ell - 1, k) for k in range(ell)]))


@dataclass(frozen=True)
class ModelHarmonicBundle:
    """A model Higgs bundle with its closed-form harmonic metric family."""

    grid: GridDomain
    rank: int
    eps: float
    theta: np.ndarray
    metric: MetricField
    spec: FilteredSpec
    basis_weights: tuple[float, ...]

    @property
    def higgs(self) -> HiggsPair:
        return HiggsPair(self.grid, np.zeros_like(self.theta), self.theta)


def _model_spec_for_levels(
    rank: int,
    pieces: Sequence[tuple[Fraction, complex, int]],
    label: str,
) -> FilteredSpec:
    """Spec with weights reduced into (-1, 0]; one [1]-block per level."""
    entries: dict[Fraction, int] = {}
    residues = []
    for w, alpha, mult in pieces:
        wr = reduce_to_window(Fraction(w))
        entries[wr] = entries.get(wr, 0) + mult
        residues.append(ResidueDatum(wr, alpha, (1,) * mult))
    comp = ComponentData(
        "D0",
        WeightSet.from_pairs("D0", entries.items()),
        tuple(residues),
    )
    return FilteredSpec(rank, 0j, (comp,), (), label)


def sym_power_model(ell: int, eps, grid: GridDomain) -> ModelHarmonicBundle:
    """Rank-ell symmetric power of the basic rank-2 model.

    Metric diag(L^(ell-1-2k)/binom(ell-1,k)) in the monomial basis, Higgs
    field the derivation lowering operator times dz/z.
    """
    if ell < 1:
        raise SchemaError("ell must be >= 1", "ell")
    _check_model_grid(grid)
    eps_f = float(eps)
    L = l_eps(np.abs(grid.z), eps_f)
    diag = _sym_gram_diag(L, ell)
    H = np.zeros(grid.shape + (ell, ell), dtype=complex)
    for k in range(ell):
        H[..., k, k] = diag[..., k]
    theta = np.broadcast_to(_sym_lowering(ell), grid.shape + (ell, ell)).copy()
    eps_exact = eps if isinstance(eps, Fraction) else Fraction(eps_f).limit_denominator(10**6)
    half = eps_exact / 2
    if ell == 1:
        pieces = [(Fraction(0), 0j, 1)]
        bweights = (0.0,)
    elif eps_f == 0:
        pieces = [(Fraction(0), 0j, ell)]
        bweights = (0.0,) * ell
    else:
        pieces = [(half * (ell - 1 - 2 * k), 0j, 1) for k in range(ell)]
        bweights = tuple(float(half * (ell - 1 - 2 * k)) for k in range(ell))
    spec = _model_spec_for_levels(ell, pieces, f"sym{ell - 1}-model")
    if ell > 1 and eps_f == 0:
        # nilpotent residue: one Jordan string of length ell
        comp = spec.components[0]
        spec = FilteredSpec(
            ell, 0j,
            (ComponentData("D0", comp.weights, (ResidueDatum(Fraction(0), 0j, (ell,)),)),),
            (), spec.label,
        )
    return ModelHarmonicBundle(grid, ell, eps_f, theta, MetricField(grid, H), spec, bweights)


def rank2_model_metric(eps, grid: GridDomain) -> ModelHarmonicBundle:
    """The basic rank-2 model: metric diag(L, 1/L), Higgs field [[0,0],[1,0]] dz/z."""
    return sym_power_model(2, eps, grid)


# ---------------------------------------------------------------------------
# model filtered lambda-flat bundles from block data
# ---------------------------------------------------------------------------

def _block_nilpotent(jordan: Sequence[int]) -> np.ndarray:
    n = sum(jordan)
    N = np.zeros((n, n), dtype=complex)
    off = 0
    for s in jordan:
        for i in range(s - 1):
            N[off + i + 1, off + i] = 1.0
        off += s
    return N


def _irregular_dlog(coeffs: Sequence[complex], zeta: np.ndarray) -> np.ndarray:
    """zeta * d(frak a)/d zeta for frak a = sum coeffs[j-1] zeta^-j."""
    out = np.zeros_like(zeta, dtype=complex)
    for j, a in enumerate(coeffs, start=1):
        out += -j * a * zeta ** (-j)
    return out


def build_model_bundle(
    blocks: Sequence[ModelBlock],
    lam: complex,
    e: int,
    grid: GridDomain,
) -> tuple[FilteredSpec, ConnectionField]:
    """Assemble D(v) = d(frak a) v + (alpha v + f v) dzeta/zeta blockwise.

    The grid is the covering-side annulus chart; in the log coordinate the
    coefficient of dw is zeta a'(zeta) + alpha + f per block.  The returned
    spec carries the block list and a Z/e grading for descent.
    """
    if not blocks:
        raise SchemaError("need at least one block", "blocks")
    if e < 1:
        raise SchemaError("covering order must be >= 1", "e")
    _check_model_grid(grid)
    rank = sum(b.dimension for b in blocks)
    zeta = grid.z
    A10 = np.zeros(grid.shape + (rank, rank), dtype=complex)
    off = 0
    pieces = []
    residues = []
    entries: dict[Fraction, int] = {}
    for b in blocks:
        d = b.dimension
        sl = slice(off, off + d)
        scalar = _irregular_dlog(b.irregular_coeffs, zeta) + b.alpha
        A10[..., sl, sl] = scalar[..., None, None] * np.eye(d) + _block_nilpotent(b.jordan_type)
        entries[b.weight] = entries.get(b.weight, 0) + d
        residues.append(ResidueDatum(b.weight, b.alpha, b.jordan_type))
        pieces.append(GradedPiece(b.weight, b.char % e, d, b.alpha, b.jordan_type))
        off += d
    pieces.sort(key=lambda p: (p.weight, p.char, p.alpha.real, p.alpha.imag))
    comp = ComponentData(
        "D0",
        WeightSet.from_pairs("D0", entries.items()),
        tuple(residues),
        grading=tuple(pieces),
        grading_order=e,
    )
    spec = FilteredSpec(rank, complex(lam), (comp,), tuple(blocks), "model")
    D = ConnectionField(grid, complex(lam), np.zeros_like(A10), A10)
    return spec, D


def family_eta(blocks: Sequence[ModelBlock]) -> Fraction:
    """Weight-gap scale of a block family; 1 when all weights coincide."""
    entries: dict[Fraction, int] = {}
    for b in blocks:
        entries[b.weight] = entries.get(b.weight, 0) + b.dimension
    w = WeightSet.from_pairs("blocks", entries.items())
    return gap_or_default(w, 1, Fraction(1))


def family_psi(blocks: Sequence[ModelBlock], eps: Fraction) -> PsiMap:
    """Degree-preserving weight snap used by the metric family."""
    entries: dict[Fraction, int] = {}
    for b in blocks:
        entries[b.weight] = entries.get(b.weight, 0) + b.dimension
    w = WeightSet.from_pairs("blocks", entries.items())
    if eps == 0:
        return PsiMap.identity(w)
    return degree_preserving_psi(w, eps)


def model_family_metric(
    blocks: Sequence[ModelBlock],
    eps,
    grid: GridDomain,
) -> MetricField:
    """Blockwise |z|^(-2 a(eps)) times symmetric-power L_eps metrics.

    Valid for eps in [0, eta/(10 rank)] with eta the blocks' weight gap
    (1 when degenerate); weights are snapped with the degree-preserving map.
    """
    _check_model_grid(grid)
    eps_exact = eps if isinstance(eps, Fraction) else Fraction(eps)
    rank = sum(b.dimension for b in blocks)
    eta = family_eta(blocks)
    if eps_exact < 0 or 10 * rank * eps_exact > eta:
        raise EpsilonTooLargeError(
            f"eps = {eps_exact} outside [0, {eta}/(10*{rank})]"
        )
    psi = family_psi(blocks, eps_exact)
    eps_f = float(eps_exact)
    s = np.log(np.abs(grid.z))
    L = l_eps(np.abs(grid.z), eps_f)
    H = np.zeros(grid.shape + (rank, rank), dtype=complex)
    off = 0
    for b in blocks:
        a_eps = float(psi(b.weight))
        radial = np.exp(-2.0 * a_eps * s)
        for sblk in b.jordan_type:
            diag = _sym_gram_diag(L, sblk)
            for k in range(sblk):
                H[..., off + k, off + k] = radial * diag[..., k]
            off += sblk
    return MetricField(grid, H)


def model_family_basis_weights(blocks: Sequence[ModelBlock], eps) -> tuple[float, ...]:
    """Growth exponent of each frame vector under the family metric."""
    eps_exact = eps if isinstance(eps, Fraction) else Fraction(eps)
    psi = family_psi(blocks, eps_exact)
    out = []
    for b in blocks:
        a_eps = psi(b.weight)
        for sblk in b.jordan_type:
            for k in range(sblk):
                out.append(float(a_eps + Fraction(sblk - 1 - 2 * k) * eps_exact / 2))
    return tuple(out)


def estimate_basis_weights(h: MetricField, grid: GridDomain) -> tuple[float, ...]:
    """Recover growth exponents of the frame vectors from a metric sample.

    Least-squares slope of log|v_j|_h against log|z| over the inner half of
    the annulus; the weight is minus the slope.
    """
    _check_model_grid(grid)
    s = np.log(np.abs(grid.z))[:, 0]
    n_half = grid.shape[0] // 2
    out = []
    for j in range(h.rank):
        norms = np.sqrt(h.data[..., j, j].real).mean(axis=1)
        coeffs = np.polyfit(s[:n_half], np.log(norms[:n_half]), 1)
        out.append(float(-coeffs[0]))
    return tuple(out)


def model_family_connection(
    blocks: Sequence[ModelBlock],
    lam: complex,
    grid: GridDomain,
    perturbation: np.ndarray | None = None,
) -> ConnectionField:
    """Block connection plus an optional A dz/z perturbation term."""
    _, D = build_model_bundle(blocks, lam, 1, grid)
    A10 = D.A10 if perturbation is None else D.A10 + perturbation
    return ConnectionField(grid, complex(lam), D.A01, A10)


@dataclass(frozen=True)
class CurvatureBoundTable:
    eps_values: tuple[float, ...]
    sup_norms: tuple[float, ...]
    max_over_min: float
    grows_with_eps: bool


def _block_slices(blocks: Sequence[ModelBlock]) -> list[slice]:
    out, off = [], 0
    for b in blocks:
        out.append(slice(off, off + b.dimension))
        off += b.dimension
    return out


def validate_perturbation_decay(
    blocks: Sequence[ModelBlock],
    A: np.ndarray,
    grid: GridDomain,
    C: float,
    m: int,
    slack: float = 1e-9,
) -> None:
    """Check |A_ji|_h0 <= C|z|^(10m) off-diagonal and C|z|^(4 eta) diagonal."""
    h0 = model_family_metric(blocks, Fraction(0), grid)
    lam0, U0 = np.linalg.eigh(h0.data)
    root = (U0 * np.sqrt(lam0)[..., None, :]) @ np.conj(np.swapaxes(U0, -1, -2))
    rooti = np.linalg.inv(root)
    At = root @ A @ rooti
    eta = float(family_eta(blocks))
    z_abs = np.abs(grid.z)
    slices = _block_slices(blocks)
    for i, si in enumerate(slices):
        for j, sj in enumerate(slices):
            sub = At[..., sj, si]
            norm = frob(sub)
            bound = C * z_abs ** (10 * m) if i != j else C * z_abs ** (4 * eta)
            if np.any(norm > bound * (1 + slack) + slack):
                raise HypothesisViolatedError(
                    f"block ({j},{i}) violates its decay bound: "
                    f"max excess {(norm - bound).max():.3e}"
                )


def g_eps_weight(blocks: Sequence[ModelBlock], eps: float, grid: GridDomain) -> np.ndarray:
    """Chart weight of the comparison Kahler metric g_eps on the annulus."""
    eta = float(family_eta(blocks))
    s = np.log(np.abs(grid.z))
    return eta**2 * np.exp(2 * eta * s) + (eps**2) * np.exp(2 * eps * s)


def curvature_bound_check(
    blocks: Sequence[ModelBlock],
    perturbation: np.ndarray | None,
    eps_list: Sequence,
    grid: GridDomain,
    lam: complex = 0j,
    C: float = 1.0,
    m: int | None = None,
) -> CurvatureBoundTable:
    """sup |G(h^(eps))| in the g_eps norm across a family of eps values.

    The perturbation must satisfy the declared decay bounds; the table flags
    growth of the sup with eps (uniform boundedness is the expected outcome).
    """
    if m is None:
        m = max(1, max((b.pole_order for b in blocks), default=1))
    if perturbation is not None:
        validate_perturbation_decay(blocks, perturbation, grid, C, m)
    sups = []
    eps_f = [float(Fraction(e) if not isinstance(e, float) else e) for e in eps_list]
    for eps in eps_list:
        h = model_family_metric(blocks, eps if isinstance(eps, Fraction) else Fraction(eps), grid)
        D = model_family_connection(blocks, lam, grid, perturbation)
        G = g_tensor(D, h, grid)
        lam0, U0 = np.linalg.eigh(h.data)
        root = (U0 * np.sqrt(lam0)[..., None, :]) @ np.conj(np.swapaxes(U0, -1, -2))
        rooti = np.linalg.inv(root)
        endo = frob(root @ G.g11 @ rooti)
        rho = g_eps_weight(blocks, float(Fraction(eps) if not isinstance(eps, float) else eps), grid)
        val = 2.0 * endo / rho
        sups.append(float(val[grid.interior].max()))
    ratio = max(sups) / max(min(sups), 1e-300)
    grows = all(b >= a for a, b in zip(sups, sups[1:])) and sups[-1] > 1.5 * sups[0]
    return CurvatureBoundTable(tuple(eps_f), tuple(sups), float(ratio), bool(grows))
