"""Filtered-bundle combinatorics.

Specs record the combinatorial shadow of a (model) good filtered lambda-flat
bundle: per-divisor-component parabolic weights with residue data, and an
optional global block decomposition.  All global geometry enters through
user-supplied intersection pairings, so every operation here is exact
rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    DimensionTooLowError,
    NoCandidatesError,
    NotEquivariantError,
    SchemaError,
)
from .weights import (
    PsiMap,
    ResidueDatum,
    WeightSet,
    apply_psi,
    perturb_weights,
    reduce_to_window,
)


def _sorted_residues(residues: Iterable[ResidueDatum]) -> tuple[ResidueDatum, ...]:
    merged: dict[tuple[Fraction, complex], list[int]] = {}
    for r in residues:
        key = (r.weight, complex(r.alpha))
        merged.setdefault(key, []).extend(r.jordan_type)
    out = [
        ResidueDatum(w, a, tuple(sorted(js, reverse=True)))
        for (w, a), js in merged.items()
    ]
    out.sort(key=lambda r: (r.weight, r.alpha.real, r.alpha.imag))
    return tuple(out)


@dataclass(frozen=True)
class GradedPiece:
    """One graded summand of a covering-side component (cyclic-group char)."""

    weight: Fraction
    char: int
    mult: int
    alpha: complex
    jordan_type: tuple[int, ...]


@dataclass(frozen=True)
class ComponentData:
    component_id: str
    weights: WeightSet
    residues: tuple[ResidueDatum, ...] = ()
    grading: tuple[GradedPiece, ...] | None = None
    grading_order: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "residues", _sorted_residues(self.residues))
        if (self.grading is None) != (self.grading_order is None):
            raise SchemaError("grading and grading_order go together", self.component_id)
        if self.weights.component_id != self.component_id:
            raise SchemaError("weight set label disagrees with component", self.component_id)
        if self.residues:
            dims: dict[Fraction, int] = {}
            for r in self.residues:
                dims[r.weight] = dims.get(r.weight, 0) + r.dimension
            for w, m in self.weights.entries:
                if dims.get(w, 0) != m:
                    raise SchemaError(
                        f"residue dimensions at weight {w} sum to {dims.get(w, 0)}, "
                        f"expected multiplicity {m}",
                        self.component_id,
                    )
            extra = set(dims) - set(self.weights.weights)
            if extra:
                raise SchemaError(f"residues at unknown weights {sorted(extra)}", self.component_id)


@dataclass(frozen=True)
class ModelBlock:
    """Elementary block: irregular part, weight, residue eigenvalue, Jordan type.

    ``irregular_coeffs[j-1]`` is the coefficient of zeta^(-j); an empty tuple
    means the block is regular.
    """

    irregular_coeffs: tuple[complex, ...]
    weight: Fraction
    alpha: complex
    jordan_type: tuple[int, ...]
    char: int = 0

    def __post_init__(self):
        object.__setattr__(self, "jordan_type", tuple(sorted(self.jordan_type, reverse=True)))
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "irregular_coeffs", tuple(complex(a) for a in self.irregular_coeffs))
        if self.irregular_coeffs and self.irregular_coeffs[-1] == 0:
            raise SchemaError("leading irregular coefficient must be nonzero", "irregular_coeffs")
        if not self.jordan_type or any(s < 1 for s in self.jordan_type):
            raise SchemaError("jordan_type entries must be >= 1", "jordan_type")
        if not (-1 < self.weight <= 0):
            raise SchemaError("block weight must lie in (-1, 0]", "weight")
        if self.char < 0:
            raise SchemaError("char must be >= 0", "char")

    @property
    def pole_order(self) -> int:
        return len(self.irregular_coeffs)

    @property
    def dimension(self) -> int:
        return sum(self.jordan_type)


@dataclass(frozen=True)
class FilteredSpec:
    rank: int
    lam: complex
    components: tuple[ComponentData, ...]
    blocks: tuple[ModelBlock, ...] = ()
    label: str = ""

    def __post_init__(self):
        for c in self.components:
            if c.weights.rank != self.rank:
                raise SchemaError(
                    f"multiplicities sum to {c.weights.rank}, expected rank {self.rank}",
                    c.component_id,
                )
        if self.blocks:
            total = sum(b.dimension for b in self.blocks)
            if total != self.rank:
                raise SchemaError(f"block dimensions sum to {total}, expected rank {self.rank}", "blocks")

    def component(self, component_id: str) -> ComponentData:
        for c in self.components:
            if c.component_id == component_id:
                return c
        raise SchemaError(f"unknown component {component_id!r}", "components")


@dataclass(frozen=True)
class ComponentPairing:
    component_id: str
    HiL: Fraction
    HiHiL: Fraction | None = None
    c1HiL: Fraction | None = None
    gysin_c1GrL: tuple[tuple[Fraction, Fraction], ...] = ()

    def gysin(self, weight: Fraction) -> Fraction:
        for w, v in self.gysin_c1GrL:
            if w == weight:
                return v
        return Fraction(0)


@dataclass(frozen=True)
class CurvePairing:
    comp_i: str
    comp_j: str
    CL: Fraction
    bigraded_ranks: tuple[tuple[tuple[Fraction, Fraction], int], ...]


@dataclass(frozen=True)
class IntersectionData:
    dim_x: int
    deg_L_lattice: Fraction
    ch2_lattice: Fraction | None = None
    components: tuple[ComponentPairing, ...] = ()
    curves: tuple[CurvePairing, ...] = ()
    c1c1_lattice: Fraction | None = None

    def pairing(self, component_id: str) -> ComponentPairing:
        for p in self.components:
            if p.component_id == component_id:
                return p
        raise SchemaError(f"no pairings for component {component_id!r}", "intersection")


def _check_labels(spec: FilteredSpec, ix: IntersectionData) -> None:
    have = {p.component_id for p in ix.components}
    want = {c.component_id for c in spec.components}
    if not want <= have:
        raise SchemaError(f"missing pairings for components {sorted(want - have)}", "intersection")


def weighted_rank_sum(c: ComponentData) -> Fraction:
    return sum((b * m for b, m in c.weights.entries), Fraction(0))


def parabolic_c1_dot(spec: FilteredSpec, ix: IntersectionData) -> Fraction:
    """Pair the parabolic first Chern class with c1(L)^(n-1).

    Lattice degree corrected by the weight-weighted graded ranks of each
    divisor component.
    """
    _check_labels(spec, ix)
    total = ix.deg_L_lattice
    for c in spec.components:
        total -= weighted_rank_sum(c) * ix.pairing(c.component_id).HiL
    return total


def slope(spec: FilteredSpec, ix: IntersectionData) -> Fraction:
    return parabolic_c1_dot(spec, ix) / spec.rank


def parabolic_ch2_dot(spec: FilteredSpec, ix: IntersectionData) -> Fraction:
    """Pair the second parabolic Chern character with c1(L)^(n-2).

    The cross term runs over ordered pairs of components with prefactor 1/2,
    so each unordered curve record is counted once in full.
    """
    if ix.dim_x < 2:
        raise DimensionTooLowError(f"dim_x = {ix.dim_x} < 2")
    if ix.ch2_lattice is None:
        raise SchemaError("ch2_lattice is required", "intersection")
    _check_labels(spec, ix)
    total = ix.ch2_lattice
    for c in spec.components:
        p = ix.pairing(c.component_id)
        for b, m in c.weights.entries:
            total -= b * p.gysin(b)
            if p.HiHiL is None:
                raise SchemaError("HiHiL is required", c.component_id)
            total += Fraction(1, 2) * b * b * m * p.HiHiL
    comp_ids = {c.component_id for c in spec.components}
    for curve in ix.curves:
        if curve.comp_i not in comp_ids or curve.comp_j not in comp_ids:
            raise SchemaError(
                f"curve references unknown components ({curve.comp_i}, {curve.comp_j})",
                "curves",
            )
        _check_bigraded(spec, curve)
        for (ci, cj), r in curve.bigraded_ranks:
            total += ci * cj * r * curve.CL
    return total


def _check_bigraded(spec: FilteredSpec, curve: CurvePairing) -> None:
    wi = spec.component(curve.comp_i).weights
    wj = spec.component(curve.comp_j).weights
    rows: dict[Fraction, int] = {}
    cols: dict[Fraction, int] = {}
    for (ci, cj), r in curve.bigraded_ranks:
        rows[ci] = rows.get(ci, 0) + r
        cols[cj] = cols.get(cj, 0) + r
    for b, m in wi.entries:
        if rows.get(b, 0) != m:
            raise SchemaError(
                f"bigraded row sums at weight {b} give {rows.get(b, 0)}, expected {m}",
                f"curve ({curve.comp_i},{curve.comp_j})",
            )
    for b, m in wj.entries:
        if cols.get(b, 0) != m:
            raise SchemaError(
                f"bigraded column sums at weight {b} give {cols.get(b, 0)}, expected {m}",
                f"curve ({curve.comp_i},{curve.comp_j})",
            )


# ---------------------------------------------------------------------------
# ramified-covering functors
# ---------------------------------------------------------------------------

def pullback(spec: FilteredSpec, e: int | Mapping[str, int]) -> FilteredSpec:
    """Pull back along a degree-e covering: weights scale by e and reduce.

    Residue eigenvalues multiply by e (e dzeta/zeta = dz/z); irregular parts
    are composed with zeta -> zeta^e.  The reduction shift of each weight is
    recorded as a cyclic-group character so descent can invert exactly.
    """
    e_of = (lambda cid: int(e)) if isinstance(e, int) else (lambda cid: int(e[cid]))
    comps = []
    for c in spec.components:
        ec = e_of(c.component_id)
        if ec < 1:
            raise SchemaError("covering degree must be >= 1", c.component_id)
        anchor = c.weights.window_anchor
        entries: dict[Fraction, int] = {}
        pieces: list[GradedPiece] = []
        residues: list[ResidueDatum] = []
        source = c.residues if c.residues else tuple(
            ResidueDatum(b, 0j, (1,) * m) for b, m in c.weights.entries
        )
        for r in source:
            cw = reduce_to_window(ec * r.weight, anchor)
            s = cw - ec * r.weight
            assert s.denominator == 1
            char = (-int(s)) % ec
            entries[cw] = entries.get(cw, 0) + r.dimension
            pieces.append(GradedPiece(cw, char, r.dimension, ec * complex(r.alpha), r.jordan_type))
            residues.append(ResidueDatum(cw, ec * complex(r.alpha), r.jordan_type))
        pieces.sort(key=lambda p: (p.weight, p.char, p.alpha.real, p.alpha.imag))
        comps.append(
            ComponentData(
                c.component_id,
                WeightSet.from_pairs(c.component_id, entries.items(), anchor),
                _sorted_residues(residues) if c.residues else (),
                grading=tuple(pieces),
                grading_order=ec,
            )
        )
    if spec.blocks and not isinstance(e, int):
        raise SchemaError("per-component covering degrees with blocks are unsupported", "blocks")
    blocks = ()
    if spec.blocks:
        eb = int(e)
        out = []
        for b in spec.blocks:
            cw = reduce_to_window(eb * b.weight)
            s = cw - eb * b.weight
            out.append(
                ModelBlock(
                    _stretch_irregular(b.irregular_coeffs, eb),
                    cw,
                    eb * complex(b.alpha),
                    b.jordan_type,
                    char=(-int(s)) % eb,
                )
            )
        blocks = tuple(out)
    return FilteredSpec(spec.rank, spec.lam, tuple(comps), blocks, spec.label)


def _stretch_irregular(coeffs: tuple[complex, ...], e: int) -> tuple[complex, ...]:
    if not coeffs or e == 1:
        return coeffs
    out = [0j] * (len(coeffs) * e)
    for j, a in enumerate(coeffs, start=1):
        out[j * e - 1] = a
    return tuple(out)


def pushforward_weights(spec: FilteredSpec, e: int) -> FilteredSpec:
    """Push forward along a degree-e covering: rank times e, weights divide.

    A covering-side weight c contributes weights (c - k)/e for k = 0..e-1
    (the monomial ladder of the pushed-forward lattice); residue eigenvalues
    divide by e.
    """
    if e < 1:
        raise SchemaError("covering degree must be >= 1", "e")
    comps = []
    for c in spec.components:
        anchor = c.weights.window_anchor
        entries: dict[Fraction, int] = {}
        residues: list[ResidueDatum] = []
        source = c.residues if c.residues else tuple(
            ResidueDatum(b, 0j, (1,) * m) for b, m in c.weights.entries
        )
        for r in source:
            for k in range(e):
                nw = reduce_to_window(Fraction(r.weight - k, e), anchor)
                entries[nw] = entries.get(nw, 0) + r.dimension
                residues.append(ResidueDatum(nw, complex(r.alpha) / e, r.jordan_type))
        comps.append(
            ComponentData(
                c.component_id,
                WeightSet.from_pairs(c.component_id, entries.items(), anchor),
                _sorted_residues(residues) if c.residues else (),
            )
        )
    return FilteredSpec(spec.rank * e, spec.lam, tuple(comps), (), spec.label)


def descent(spec: FilteredSpec, e: int) -> FilteredSpec:
    """Invariant part of the pushforward of a graded covering-side spec."""
    if e < 1:
        raise SchemaError("covering degree must be >= 1", "e")
    comps = []
    for c in spec.components:
        if c.grading is None:
            raise NotEquivariantError(f"component {c.component_id!r} carries no grading")
        if c.grading_order != e:
            raise NotEquivariantError(
                f"component {c.component_id!r} is graded for order {c.grading_order}, not {e}"
            )
        if sum(p.mult for p in c.grading) != spec.rank:
            raise NotEquivariantError(
                f"grading of {c.component_id!r} does not cover the full rank"
            )
        anchor = c.weights.window_anchor
        entries: dict[Fraction, int] = {}
        residues: list[ResidueDatum] = []
        for p in c.grading:
            k = (-p.char) % e
            nw = reduce_to_window(Fraction(p.weight - k, e), anchor)
            entries[nw] = entries.get(nw, 0) + p.mult
            residues.append(ResidueDatum(nw, complex(p.alpha) / e, p.jordan_type))
        comps.append(
            ComponentData(
                c.component_id,
                WeightSet.from_pairs(c.component_id, entries.items(), anchor),
                _sorted_residues(residues) if c.residues else (),
            )
        )
    blocks = tuple(
        ModelBlock(
            _shrink_irregular(b.irregular_coeffs, e),
            reduce_to_window(Fraction(b.weight - ((-b.char) % e), e)),
            complex(b.alpha) / e,
            b.jordan_type,
            char=0,
        )
        for b in spec.blocks
    )
    return FilteredSpec(spec.rank, spec.lam, tuple(comps), blocks, spec.label)


def _shrink_irregular(coeffs: tuple[complex, ...], e: int) -> tuple[complex, ...]:
    if not coeffs:
        return coeffs
    if len(coeffs) % e:
        raise NotEquivariantError("irregular part is not a function of zeta^e")
    out = []
    for j, a in enumerate(coeffs, start=1):
        if j % e:
            if a != 0:
                raise NotEquivariantError("irregular part is not a function of zeta^e")
        else:
            out.append(a)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


# ---------------------------------------------------------------------------
# perturbation at the spec level
# ---------------------------------------------------------------------------

def apply_psi_spec(spec: FilteredSpec, psi_by_component: Mapping[str, PsiMap]) -> FilteredSpec:
    """Reweight every component by its psi map (no level splitting)."""
    comps = []
    for c in spec.components:
        psi = psi_by_component[c.component_id]
        comps.append(ComponentData(c.component_id, apply_psi(c.weights, psi), ()))
    return FilteredSpec(spec.rank, spec.lam, tuple(comps), spec.blocks, spec.label)


def perturb_spec(
    spec: FilteredSpec,
    eps: Fraction,
    psi_by_component: Mapping[str, PsiMap],
) -> FilteredSpec:
    """Full perturbation: split weights along residue monodromy filtrations."""
    comps = []
    for c in spec.components:
        if not c.residues:
            raise SchemaError("perturbation needs residue data", c.component_id)
        w, res = perturb_weights(c.weights, c.residues, eps, psi_by_component[c.component_id])
        comps.append(ComponentData(c.component_id, w, res))
    return FilteredSpec(spec.rank, spec.lam, tuple(comps), (), spec.label)


# ---------------------------------------------------------------------------
# stability and Bogomolov-Gieseker
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubObjectSelector:
    """Block-generated candidate sub-object.

    ``sub_dims`` gives, per selected block, the dimensions kept from each
    Jordan block (termwise <= the block's jordan_type); omitted means the
    whole block.  ``deg_L_lattice`` is the candidate's own lattice pairing,
    supplied by the caller like every other cohomological number.
    """

    label: str
    block_indices: tuple[int, ...]
    sub_dims: tuple[tuple[int, ...], ...] | None = None
    deg_L_lattice: Fraction = Fraction(0)


@dataclass(frozen=True)
class CandidateComparison:
    label: str
    sub_rank: int
    sub_slope: Fraction
    relation: str  # "<", "==", ">"


@dataclass(frozen=True)
class StabilityReport:
    verdict: str  # stable | semistable-not-stable | unstable | inconclusive
    ambient_slope: Fraction
    comparisons: tuple[CandidateComparison, ...]
    witness: str | None
    exhaustive: bool


def induced_sub_spec(spec: FilteredSpec, cand: SubObjectSelector) -> FilteredSpec:
    """Sub-spec cut out by a block selection with invariant sub-dimensions."""
    if not spec.blocks:
        raise SchemaError("stability candidates need a block decomposition", "blocks")
    chosen: list[tuple[ModelBlock, tuple[int, ...]]] = []
    for pos, bi in enumerate(cand.block_indices):
        if not (0 <= bi < len(spec.blocks)):
            raise SchemaError(f"block index {bi} out of range", cand.label)
        blk = spec.blocks[bi]
        dims = blk.jordan_type if cand.sub_dims is None else cand.sub_dims[pos]
        if len(dims) != len(blk.jordan_type) or any(
            d < 0 or d > s for d, s in zip(dims, blk.jordan_type)
        ):
            raise SchemaError(
                f"sub-dimensions {dims} are not termwise within {blk.jordan_type}",
                cand.label,
            )
        kept = tuple(d for d in dims if d > 0)
        if kept:
            chosen.append((blk, kept))
    sub_rank = sum(sum(dims) for _, dims in chosen)
    if sub_rank == 0:
        raise SchemaError("candidate selects the zero object", cand.label)
    if sub_rank >= spec.rank:
        raise SchemaError("candidate is not a proper sub-object", cand.label)
    comps = []
    for c in spec.components:
        anchor = c.weights.window_anchor
        entries: dict[Fraction, int] = {}
        residues: list[ResidueDatum] = []
        for blk, dims in chosen:
            w = reduce_to_window(blk.weight, anchor)
            entries[w] = entries.get(w, 0) + sum(dims)
            residues.append(ResidueDatum(w, blk.alpha, tuple(sorted(dims, reverse=True))))
        comps.append(
            ComponentData(
                c.component_id,
                WeightSet.from_pairs(c.component_id, entries.items(), anchor),
                _sorted_residues(residues),
            )
        )
    sub_blocks = tuple(
        ModelBlock(blk.irregular_coeffs, blk.weight, blk.alpha, tuple(sorted(dims, reverse=True)))
        for blk, dims in chosen
    )
    return FilteredSpec(sub_rank, spec.lam, tuple(comps), sub_blocks, f"{spec.label}/{cand.label}")


def stability_check(
    spec: FilteredSpec,
    ix: IntersectionData,
    candidates: Sequence[SubObjectSelector],
    exhaustive: bool = False,
) -> StabilityReport:
    """Compare the ambient slope against every candidate sub-object.

    The verdict is ``inconclusive`` when every candidate has strictly smaller
    slope but the enumeration was not declared exhaustive.
    """
    mu = slope(spec, ix)
    if spec.rank == 1:
        return StabilityReport("stable", mu, (), None, True)
    if not candidates:
        raise NoCandidatesError("rank >= 2 needs at least one candidate sub-object")
    comparisons = []
    witness_eq = None
    witness_gt = None
    for cand in candidates:
        sub = induced_sub_spec(spec, cand)
        sub_ix = IntersectionData(
            dim_x=ix.dim_x,
            deg_L_lattice=cand.deg_L_lattice,
            components=ix.components,
        )
        mu_sub = slope(sub, sub_ix)
        rel = "<" if mu_sub < mu else ("==" if mu_sub == mu else ">")
        comparisons.append(CandidateComparison(cand.label, sub.rank, mu_sub, rel))
        if rel == ">" and witness_gt is None:
            witness_gt = cand.label
        if rel == "==" and witness_eq is None:
            witness_eq = cand.label
    if witness_gt is not None:
        verdict, witness = "unstable", witness_gt
    elif witness_eq is not None:
        verdict, witness = "semistable-not-stable", witness_eq
    elif exhaustive:
        verdict, witness = "stable", None
    else:
        verdict, witness = "inconclusive", None
    return StabilityReport(verdict, mu, tuple(comparisons), witness, exhaustive)


@dataclass(frozen=True)
class BGReport:
    ch2_pairing: Fraction
    c1_sq_pairing: Fraction
    rhs: Fraction
    inequality_holds: bool
    mu: Fraction
    vanishing_preconditions: bool


def _cross_pairing(ix: IntersectionData, ci: str, cj: str) -> Fraction:
    total = Fraction(0)
    for curve in ix.curves:
        if {curve.comp_i, curve.comp_j} == {ci, cj}:
            total += curve.CL
    return total


def bg_report(spec: FilteredSpec, ix: IntersectionData) -> BGReport:
    """Both sides of the Bogomolov-Gieseker inequality, exactly.

    c1^2 is assembled from supplied pairings: the lattice c1^2 number, the
    lattice-c1 against each [H_i], the self-intersections HiHiL, and curve
    classes for the mixed [H_i][H_j] terms.
    """
    if ix.dim_x < 2:
        raise DimensionTooLowError(f"dim_x = {ix.dim_x} < 2")
    if ix.c1c1_lattice is None:
        raise SchemaError("c1c1_lattice is required for bg_report", "intersection")
    lhs = parabolic_ch2_dot(spec, ix)
    wsum = {c.component_id: weighted_rank_sum(c) for c in spec.components}
    c1sq = ix.c1c1_lattice
    for c in spec.components:
        p = ix.pairing(c.component_id)
        if p.c1HiL is None:
            raise SchemaError("c1HiL is required for bg_report", c.component_id)
        c1sq -= 2 * wsum[c.component_id] * p.c1HiL
        c1sq += wsum[c.component_id] ** 2 * p.HiHiL
    ids = [c.component_id for c in spec.components]
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            c1sq += 2 * wsum[ids[a]] * wsum[ids[b]] * _cross_pairing(ix, ids[a], ids[b])
    rhs = c1sq / (2 * spec.rank)
    mu = slope(spec, ix)
    return BGReport(
        ch2_pairing=lhs,
        c1_sq_pairing=c1sq,
        rhs=rhs,
        inequality_holds=lhs <= rhs,
        mu=mu,
        vanishing_preconditions=(mu == 0 and lhs == 0),
    )


def direct_sum(a: FilteredSpec, b: FilteredSpec, label: str | None = None) -> FilteredSpec:
    """Componentwise direct sum (components matched by id)."""
    if a.lam != b.lam:
        raise SchemaError("direct summands must share lambda", "lam")
    ids_a = {c.component_id for c in a.components}
    ids_b = {c.component_id for c in b.components}
    if ids_a != ids_b:
        raise SchemaError("direct summands must share divisor components", "components")
    comps = []
    for ca in a.components:
        cb = b.component(ca.component_id)
        if ca.weights.window_anchor != cb.weights.window_anchor:
            raise SchemaError("summands must share window anchors", ca.component_id)
        entries: dict[Fraction, int] = {}
        for w, m in ca.weights.entries + cb.weights.entries:
            entries[w] = entries.get(w, 0) + m
        residues = ()
        if ca.residues or cb.residues:
            src_a = ca.residues or tuple(ResidueDatum(w, 0j, (1,) * m) for w, m in ca.weights.entries)
            src_b = cb.residues or tuple(ResidueDatum(w, 0j, (1,) * m) for w, m in cb.weights.entries)
            residues = _sorted_residues(src_a + src_b)
        comps.append(
            ComponentData(
                ca.component_id,
                WeightSet.from_pairs(ca.component_id, entries.items(), ca.weights.window_anchor),
                residues,
            )
        )
    return FilteredSpec(
        a.rank + b.rank,
        a.lam,
        tuple(comps),
        a.blocks + b.blocks,
        label if label is not None else f"{a.label}+{b.label}",
    )
