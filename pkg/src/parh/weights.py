"""Exact arithmetic on parabolic weight sets.

Weights are ``fractions.Fraction`` throughout.  A weight set lives in the
half-open window ``(anchor-1, anchor]``; the extended set obtained by adding
all shifts ``m/e`` is the combinatorial shadow of pulling back along a degree
``e`` ramified covering, and everything downstream (gaps, generic anchors,
perturbation lattices) is computed on that extended set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import DegenerateGapError, InvalidPsiError, PerturbationRangeError, SchemaError

Rational = Fraction


def reduce_to_window(x: Fraction, anchor: Fraction = Fraction(0)) -> Fraction:
    """Shift ``x`` by an integer into the window ``(anchor-1, anchor]``."""
    return x - Fraction(math.ceil(x - anchor))


@dataclass(frozen=True)
class WeightSet:
    """Parabolic weights of one divisor component with multiplicities.

    entries: tuple of (weight, multiplicity), weights pairwise distinct and
    inside the window ``(window_anchor-1, window_anchor]``; multiplicities
    sum to the bundle rank.
    """

    component_id: str
    entries: tuple[tuple[Fraction, int], ...]
    window_anchor: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))
        seen = set()
        for w, m in self.entries:
            if not isinstance(w, Fraction):
                raise SchemaError("weight must be an exact rational", "entries")
            if m < 1:
                raise SchemaError("multiplicity must be >= 1", "entries")
            if not (self.window_anchor - 1 < w <= self.window_anchor):
                raise SchemaError(
                    f"weight {w} outside window ({self.window_anchor - 1}, {self.window_anchor}]",
                    "entries",
                )
            if w in seen:
                raise SchemaError(f"duplicate weight {w}", "entries")
            seen.add(w)

    @property
    def rank(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for w, _ in self.entries)

    def multiplicity(self, w: Fraction) -> int:
        for wt, m in self.entries:
            if wt == w:
                return m
        raise KeyError(w)

    @staticmethod
    def from_pairs(component_id: str, pairs: Iterable[tuple[Fraction, int]],
                   window_anchor: Fraction = Fraction(0)) -> "WeightSet":
        ordered = tuple(sorted(((Fraction(w), int(m)) for w, m in pairs)))
        return WeightSet(component_id, ordered, Fraction(window_anchor))


@dataclass(frozen=True)
class ResidueDatum:
    """Residue data attached to one weight: eigenvalue and Jordan type.

    ``jordan_type`` lists the Jordan block sizes of the nilpotent part; the
    sizes sum to the multiplicity of the weight.
    """

    weight: Fraction
    alpha: complex
    jordan_type: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "jordan_type", tuple(sorted(self.jordan_type, reverse=True)))
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not self.jordan_type or any(s < 1 for s in self.jordan_type):
            raise SchemaError("jordan_type entries must be >= 1", "jordan_type")

    @property
    def dimension(self) -> int:
        return sum(self.jordan_type)


def tilde_par(w: WeightSet, e: int) -> tuple[Fraction, ...]:
    """Representatives of {b + m/e : b in w} reduced to the window, sorted."""
    if e < 1:
        raise SchemaError("e must be >= 1", "e")
    reps = set()
    step = Fraction(1, e)
    for b in w.weights:
        for m in range(e):
            reps.add(reduce_to_window(b + m * step, w.window_anchor))
    return tuple(sorted(reps))


def gap(w: WeightSet, e: int) -> Fraction:
    """Minimal cyclic distance between distinct extended representatives.

    Computed in closed form: the extended set is a union of 1/e-lattices, so
    the gap is min over weight pairs of their circle distance mod 1/e (and
    1/e itself once two or more lattice points exist).  Equivalent to the
    exhaustive cyclic minimum over tilde_par(w, e).
    """
    if e < 1:
        raise SchemaError("e must be >= 1", "e")
    step = Fraction(1, e)
    ws_ = w.weights
    cands: list[Fraction] = []
    if e >= 2 or len(ws_) >= 2:
        if e >= 2:
            cands.append(step)
        for i in range(len(ws_)):
            for j in range(i + 1, len(ws_)):
                d = (ws_[i] - ws_[j]) % step
                if d != 0:
                    cands.append(min(d, step - d))
                elif e == 1:
                    # congruent mod 1: cannot happen for distinct window weights
                    pass
    if not cands:
        raise DegenerateGapError(
            f"extended weight set of {w.component_id!r} has a single element"
        )
    return min(cands)


def gap_or_default(w: WeightSet, e: int, default: Fraction = Fraction(1)) -> Fraction:
    try:
        return gap(w, e)
    except DegenerateGapError:
        return default


def pick_generic_weight(w: WeightSet, e: int, rank: int) -> Fraction:
    """An anchor at distance > 1/(4*e*rank) from every extended weight.

    Deterministic: the smallest midpoint of a maximal cyclic gap of the
    extended set (ties compared before window reduction), reduced into the
    window.  Existence: at most e*rank representatives on a unit period
    leave some gap >= 1/(e*rank).
    """
    if rank < 1:
        raise SchemaError("rank must be >= 1", "rank")
    reps = tilde_par(w, e)
    mids: list[tuple[Fraction, Fraction]] = []  # (gap size, raw midpoint)
    if len(reps) == 1:
        mids.append((Fraction(1), reps[0] + Fraction(1, 2)))
    else:
        for i in range(len(reps) - 1):
            g = reps[i + 1] - reps[i]
            mids.append((g, reps[i] + g / 2))
        g = 1 - (reps[-1] - reps[0])
        mids.append((g, reps[-1] + g / 2))
    gmax = max(g for g, _ in mids)
    a = reduce_to_window(min(mid for g, mid in mids if g == gmax), w.window_anchor)
    margin = min(
        min(abs(a - b), 1 - abs(a - b)) for b in reps
    )
    assert margin > Fraction(1, 4 * e * rank), (a, reps, margin)
    return a


def weight_filtration(jordan_type: Iterable[int]) -> dict[int, int]:
    """Level -> dimension of the graded pieces of the monodromy filtration.

    A Jordan block of size s contributes one dimension at each level in
    {-(s-1), -(s-3), ..., s-1}.
    """
    out: dict[int, int] = {}
    for s in jordan_type:
        if s < 1:
            raise SchemaError("jordan block size must be >= 1", "jordan_type")
        for k in range(-(s - 1), s, 2):
            out[k] = out.get(k, 0) + 1
    return dict(sorted(out.items()))


class PsiMap:
    """Finite reweighting map b -> psi(b) on the weights of one component."""

    def __init__(self, values: Mapping[Fraction, Fraction]):
        self._values = {Fraction(k): Fraction(v) for k, v in values.items()}

    def __call__(self, b: Fraction) -> Fraction:
        return self._values[b]

    def items(self):
        return self._values.items()

    @staticmethod
    def identity(w: WeightSet) -> "PsiMap":
        return PsiMap({b: b for b in w.weights})


def validate_psi(w: WeightSet, psi: PsiMap, e: int, eps: Fraction) -> None:
    """Check |psi(b)-b| < 2*eps and the e-congruence offset condition."""
    offsets: dict[Fraction, Fraction] = {}
    for b in w.weights:
        try:
            off = psi(b) - b
        except KeyError:
            raise InvalidPsiError(f"psi undefined on weight {b}")
        if abs(off) >= 2 * eps:
            raise InvalidPsiError(f"|psi({b})-{b}| = {abs(off)} >= 2*eps")
        offsets[b] = off
    ws = w.weights
    for i in range(len(ws)):
        for j in range(i + 1, len(ws)):
            if (e * (ws[i] - ws[j])).denominator == 1:
                if offsets[ws[i]] != offsets[ws[j]]:
                    raise InvalidPsiError(
                        f"weights {ws[i]}, {ws[j]} are congruent mod 1/{e} but "
                        "psi shifts them differently"
                    )


def apply_psi(w: WeightSet, psi: PsiMap) -> WeightSet:
    """Reweight a set by psi (no level splitting); window-checked."""
    new: dict[Fraction, int] = {}
    for b, m in w.entries:
        nb = psi(b)
        if not (w.window_anchor - 1 < nb <= w.window_anchor):
            raise InvalidPsiError(
                f"psi({b}) = {nb} leaves the window ({w.window_anchor - 1}, {w.window_anchor}]"
            )
        new[nb] = new.get(nb, 0) + m
    return WeightSet.from_pairs(w.component_id, new.items(), w.window_anchor)


def perturb_weights(
    w: WeightSet,
    residues: Iterable[ResidueDatum],
    eps: Fraction,
    psi: PsiMap,
) -> tuple[WeightSet, tuple[ResidueDatum, ...]]:
    """Split each weight along the monodromy filtration of its residue.

    The new weight of the level-k graded piece at b is psi(b) + eps*k, with
    multiplicity dim Gr_k; the returned residues carry zero nilpotent parts.
    Preconditions (validated): 0 < eps, 10*e^2*eps < gap(w, e) for
    e = rank!, psi admissible, and no new weight may leave the window.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise PerturbationRangeError("eps must be positive")
    rank = w.rank
    e = math.factorial(rank)
    g = gap_or_default(w, e)
    if 10 * e * e * eps >= g:
        raise PerturbationRangeError(
            f"10*e^2*eps = {10 * e * e * eps} >= gap = {g} (e = rank! = {e})"
        )
    validate_psi(w, psi, e, eps)

    res_by_weight: dict[Fraction, list[ResidueDatum]] = {}
    for r in residues:
        res_by_weight.setdefault(r.weight, []).append(r)
    for b, m in w.entries:
        dims = sum(r.dimension for r in res_by_weight.get(b, ()))
        if dims != m:
            raise SchemaError(
                f"residue dimensions at weight {b} sum to {dims}, expected {m}",
                "residues",
            )

    new_entries: dict[Fraction, int] = {}
    new_residues: dict[tuple[Fraction, complex], int] = {}
    for b, _ in w.entries:
        for r in res_by_weight[b]:
            for k, dim in weight_filtration(r.jordan_type).items():
                nb = psi(b) + eps * k
                if not (w.window_anchor - 1 < nb <= w.window_anchor):
                    raise InvalidPsiError(
                        f"perturbed weight psi({b}) + {eps}*{k} = {nb} leaves the window"
                    )
                new_entries[nb] = new_entries.get(nb, 0) + dim
                key = (nb, complex(r.alpha))
                new_residues[key] = new_residues.get(key, 0) + dim
    out_w = WeightSet.from_pairs(w.component_id, new_entries.items(), w.window_anchor)
    out_res = tuple(
        ResidueDatum(nb, alpha, (1,) * dim)
        for (nb, alpha), dim in sorted(new_residues.items(), key=lambda kv: (kv[0][0], kv[0][1].real, kv[0][1].imag))
    )
    assert out_w.rank == rank
    return out_w, out_res


def lattice_floor(b: Fraction, eps: Fraction) -> Fraction:
    """max{d in eps*Z : d < b} (strict)."""
    q = b / eps
    n = q.numerator // q.denominator  # floor
    if Fraction(n) == q:
        n -= 1
    return n * eps


def degree_preserving_psi(w: WeightSet, eps: Fraction) -> PsiMap:
    """Snap weights down to the eps-lattice, then shift back by the average.

    psi(b) = floor_strict(b) + c with c the multiplicity-averaged offset, so
    sum of psi(b)*mult equals sum of b*mult exactly and |psi(b)-b| < 2*eps.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise PerturbationRangeError("eps must be positive")
    floors = {b: lattice_floor(b, eps) for b, _ in w.entries}
    total = sum((b - floors[b]) * m for b, m in w.entries)
    c = total / w.rank
    psi = PsiMap({b: floors[b] + c for b, _ in w.entries})
    for b, _ in w.entries:
        assert abs(psi(b) - b) < 2 * eps
    return psi
