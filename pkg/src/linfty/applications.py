"""Degenerate-case drivers: Lie algebras, foliations, homomorphism graphs.

Everything here reduces to the split-setup machinery: a Lie (sub)algebra is
an algebroid over a point, a foliation is a subalgebroid of a tangent
algebroid over a fixed base, and a bundle-map homomorphism is a graph
subalgebroid of a direct sum presented in adapted coordinates around the
zero map.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .algebroid import (
    AlgebroidData,
    PolyDict,
    _as_poly,
    build_xq,
    validate_algebroid,
)
from .subalgebroid import (
    DeformationPair,
    FrameForm,
    SplitSetup,
    explicit_structure_maps,
    simultaneous_residual,
    subalgebroid_mc_residual,
)
from .superfield import SuperFunction, SuperVectorField
from .valgebra import DEFAULT_SERIES_CAP, LInftyElement


# ---------------------------------------------------------------------
# Lie algebras over a point
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class LieAlgebraData:
    """Constant structure tensor; a thin wrapper over a point-base algebroid."""

    dimension: int
    data: AlgebroidData

    @staticmethod
    def build(dimension: int, structure=None) -> "LieAlgebraData":
        consts = {}
        for (i, j, k), c in (structure or {}).items():
            consts[(i, j, k)] = Fraction(c) if isinstance(c, (int, Fraction)) else c
        return LieAlgebraData(dimension, AlgebroidData.build(0, dimension, consts))


def lie_algebra_deformation(g: LieAlgebraData, mu: Mapping) -> SuperVectorField:
    """Residual of a constant bracket perturbation; zero iff c + mu is Lie."""
    from .algebroid import deformation_residual

    base = build_xq(g.data)
    pert = AlgebroidData.build(0, g.dimension, mu)
    return deformation_residual(base, build_xq(pert, g.data.plain_chart()))


def subalgebra_deformation(
    g: LieAlgebraData,
    sub_rank: int,
    phi: Mapping[tuple[int, int], Fraction | int],
    cap: int = DEFAULT_SERIES_CAP,
) -> LInftyElement:
    """Residual of a graph candidate over a sub-Lie-algebra of g.

    The first ``sub_rank`` frame elements must span a subalgebra; phi maps
    (sub index, complement index) to the rational matrix entry.
    """
    setup = SplitSetup.build(g.data, 0, 0, sub_rank)
    xq = build_xq(g.data, setup.chart)
    if not setup.project(xq).is_zero():
        raise ValueError("the leading frame block is not a subalgebra")
    d = DeformationPair.build(setup, phi={key: Fraction(val) for key, val in phi.items()})
    return subalgebroid_mc_residual(setup, xq, d, cap=cap)


# ---------------------------------------------------------------------
# direct sums and block embeddings
# ---------------------------------------------------------------------
def block_sum_data(a: AlgebroidData, b: AlgebroidData) -> AlgebroidData:
    """Block-diagonal structure and anchor tensors on the product base."""
    m_a, n_a = a.base_dim, a.fiber_rank
    structure: dict[tuple[int, int, int], PolyDict] = {}
    anchor: dict[tuple[int, int], PolyDict] = {}
    for (i, j, k), poly in a.structure.items():
        structure[(i, j, k)] = {e + (0,) * b.base_dim: c for e, c in poly.items()}
    for (i, t), poly in a.anchor.items():
        anchor[(i, t)] = {e + (0,) * b.base_dim: c for e, c in poly.items()}
    for (i, j, k), poly in b.structure.items():
        structure[(i + n_a, j + n_a, k + n_a)] = {(0,) * m_a + e: c for e, c in poly.items()}
    for (i, t), poly in b.anchor.items():
        anchor[(i + n_a, t + m_a)] = {(0,) * m_a + e: c for e, c in poly.items()}
    return AlgebroidData.build(m_a + b.base_dim, n_a + b.fiber_rank, structure, anchor)


def direct_sum_algebroid(a: AlgebroidData, b: AlgebroidData) -> AlgebroidData:
    """Product algebroid; the structure field is the sum of the two blocks."""
    if not validate_algebroid(a).ok:
        raise ValueError("invalid first summand")
    if not validate_algebroid(b).ok:
        raise ValueError("invalid second summand")
    return block_sum_data(a, b)


# ---------------------------------------------------------------------
# foliations: tangent-algebroid subbundles in a polynomial frame
# ---------------------------------------------------------------------
VectorFieldCoeffs = Mapping[int, PolyDict]


@dataclass(frozen=True)
class FoliationSetup:
    """A polynomial frame of the tangent bundle, split distribution-first.

    The first ``sub_rank`` frame fields span the distribution; the frame
    matrix must have constant nonzero determinant so that expansions in the
    frame stay polynomial.  ``algebroid`` carries the tangent-algebroid
    structure functions in this frame and ``setup`` the fixed-base split.
    """

    base_dim: int
    sub_rank: int
    frames: tuple[tuple[PolyDict, ...], ...]
    algebroid: AlgebroidData
    setup: SplitSetup

    @staticmethod
    def build(base_dim: int, sub_rank: int, frames: Sequence[VectorFieldCoeffs]) -> "FoliationSetup":
        if len(frames) != base_dim:
            raise ValueError("need one frame field per tangent direction")
        norm = tuple(
            tuple(_as_poly(dict(f).get(t, {}), base_dim) for t in range(base_dim)) for f in frames
        )
        data = _tangent_in_frame(base_dim, norm)
        setup = SplitSetup.build(data, base_dim, 0, sub_rank)
        return FoliationSetup(base_dim, sub_rank, norm, data, setup)

    def is_integrable(self) -> bool:
        xq = build_xq(self.algebroid, self.setup.chart)
        return self.setup.project(xq).is_zero()


def _poly_matrix_inverse(chart, mat):
    """Adjugate inverse of a polynomial matrix with constant determinant."""
    n = len(mat)
    det = SuperFunction.zero(chart)
    for perm in itertools.permutations(range(n)):
        inversions = sum(
            1 for a, b in itertools.combinations(range(n), 2) if perm[a] > perm[b]
        )
        sign = -1 if inversions % 2 else 1
        prod = SuperFunction.constant(chart, sign)
        for r in range(n):
            prod = prod * mat[r][perm[r]]
        det = det + prod
    terms = det.terms
    if len(terms) != 1 or list(terms.keys())[0][0] != (0,) * chart.n_even:
        raise ValueError("frame determinant is not a nonzero constant")
    det_c = list(terms.values())[0]
    inv = [[None] * n for _ in range(n)]
    for r in range(n):
        for c in range(n):
            minor_rows = [row for i, row in enumerate(mat) if i != c]
            minor = [[row[j] for j in range(n) if j != r] for row in minor_rows]
            sub = SuperFunction.zero(chart)
            k = n - 1
            if k == 0:
                sub = SuperFunction.constant(chart, 1)
            else:
                for perm in itertools.permutations(range(k)):
                    inversions = sum(
                        1 for a, b in itertools.combinations(range(k), 2) if perm[a] > perm[b]
                    )
                    sign = -1 if inversions % 2 else 1
                    prod = SuperFunction.constant(chart, sign)
                    for rr in range(k):
                        prod = prod * minor[rr][perm[rr]]
                    sub = sub + prod
            sign = -1 if (r + c) % 2 else 1
            inv[r][c] = sub.scale(Fraction(sign, 1) / det_c)
    return inv


def _tangent_in_frame(base_dim: int, frames) -> AlgebroidData:
    """Tangent-algebroid structure functions in an arbitrary polynomial frame."""
    probe = AlgebroidData.build(base_dim, base_dim)
    chart = probe.plain_chart()
    mat = [
        [_poly_fn_local(chart, frames[col][t]) for col in range(base_dim)]
        for t in range(base_dim)
    ]
    inv = _poly_matrix_inverse(chart, mat)

    def as_field(col: int) -> list[SuperFunction]:
        return [mat[t][col] for t in range(base_dim)]

    def vf_bracket(u: list[SuperFunction], v: list[SuperFunction]) -> list[SuperFunction]:
        out = []
        for t in range(base_dim):
            val = SuperFunction.zero(chart)
            for s in range(base_dim):
                val = val + u[s] * v[t].partial(s) - v[s] * u[t].partial(s)
            out.append(val)
        return out

    structure: dict[tuple[int, int, int], PolyDict] = {}
    anchor: dict[tuple[int, int], PolyDict] = {}
    for i in range(base_dim):
        for t in range(base_dim):
            f = frames[i][t]
            if f:
                anchor[(i, t)] = dict(f)
    for i, j in itertools.combinations(range(base_dim), 2):
        br = vf_bracket(as_field(i), as_field(j))
        for k in range(base_dim):
            coeff = SuperFunction.zero(chart)
            for t in range(base_dim):
                coeff = coeff + inv[k][t] * br[t]
            if not coeff.is_zero():
                structure[(i, j, k)] = {e: c for (e, _), c in coeff.terms.items()}
    return AlgebroidData.build(base_dim, base_dim, structure, anchor)


def _poly_fn_local(chart, poly: PolyDict) -> SuperFunction:
    return SuperFunction(chart, {(e, ()): c for e, c in poly.items()})


@dataclass
class FoliationResult:
    closed: bool
    residual: FrameForm
    condition_defects: dict[tuple[int, int, int], SuperFunction]

    @property
    def agree(self) -> bool:
        return self.closed == (not self.condition_defects)


def foliation_infinitesimal(fol: FoliationSetup, psi: Mapping) -> FoliationResult:
    """Whether a candidate bundle map is closed for the unary structure map.

    Evaluates the unary map on the candidate and, independently, the
    classical condition pi_F([psi v, w] + [v, psi w]) = psi([v, w]) on
    frame pairs of the distribution; both verdicts are reported.
    """
    if not fol.is_integrable():
        raise ValueError("the distribution is not integrable")
    setup = fol.setup
    chart = setup.chart
    form = FrameForm.build(
        setup,
        1,
        {
            ((i,), j): _poly_fn_local(chart, _as_poly(val, fol.base_dim))
            for (i, j), val in psi.items()
        },
    )
    residual = explicit_structure_maps(setup, 1, [form])

    # classical route on distribution frame pairs
    data = fol.algebroid
    one = SuperFunction.constant(chart, 1)
    defects: dict[tuple[int, int, int], SuperFunction] = {}

    def section_of(i: int) -> dict[int, SuperFunction]:
        return {i: one}

    def psi_of(section: dict[int, SuperFunction]) -> dict[int, SuperFunction]:
        out: dict[int, SuperFunction] = {}
        for i, coeff in section.items():
            if i not in setup.sub_indices:
                continue
            for j in setup.comp_indices:
                entry = form.values.get(((i,), j))
                if entry is None:
                    continue
                cur = out.get(j, SuperFunction.zero(chart))
                cur = cur + coeff * entry
                if not cur.is_zero():
                    out[j] = cur
                else:
                    out.pop(j, None)
        return out

    from .subalgebroid import _pi_comp, _pi_sub, _section_bracket

    for v, w in itertools.combinations(setup.sub_indices, 2):
        lhs = _pi_comp(
            setup,
            _section_bracket(setup, psi_of(section_of(v)), section_of(w)),
        )
        second = _pi_comp(
            setup,
            _section_bracket(setup, section_of(v), psi_of(section_of(w))),
        )
        for j, val in second.items():
            lhs[j] = lhs.get(j, SuperFunction.zero(chart)) + val
        rhs = psi_of(_pi_sub(setup, _section_bracket(setup, section_of(v), section_of(w))))
        for j in setup.comp_indices:
            diff = lhs.get(j, SuperFunction.zero(chart)) - rhs.get(j, SuperFunction.zero(chart))
            if not diff.is_zero():
                defects[(v, w, j)] = diff
    return FoliationResult(residual.is_zero(), residual, defects)


# ---------------------------------------------------------------------
# homomorphisms of algebroids via the graph construction
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class HomomorphismData:
    """Bundle map over a polynomial base map between two algebroids.

    ``bundle_map`` sends (source frame index, target frame index) to the
    polynomial entry in source base coordinates; ``base_map`` sends a
    target coordinate index to its polynomial expression.
    """

    source: AlgebroidData
    target: AlgebroidData
    bundle_map: Mapping[tuple[int, int], PolyDict]
    base_map: Mapping[int, PolyDict]

    @staticmethod
    def build(source, target, bundle_map=None, base_map=None) -> "HomomorphismData":
        bm = {}
        for (i, j), val in (bundle_map or {}).items():
            if not (0 <= i < source.fiber_rank and 0 <= j < target.fiber_rank):
                raise ValueError(f"bundle map index out of range: {(i, j)}")
            poly = _as_poly(val, source.base_dim)
            if poly:
                bm[(i, j)] = poly
        psi = {}
        for k, val in (base_map or {}).items():
            if not 0 <= k < target.base_dim:
                raise ValueError(f"base map index out of range: {k}")
            poly = _as_poly(val, source.base_dim)
            if poly:
                psi[k] = poly
        return HomomorphismData(source, target, bm, psi)


@dataclass(frozen=True)
class GraphSetup:
    """Adapted presentation of the graph of a homomorphism in a direct sum."""

    h: HomomorphismData
    sum_data: AlgebroidData
    setup: SplitSetup
    base_pair: DeformationPair
    xq: SuperVectorField


def graph_setup(h: HomomorphismData, validate: bool = True) -> GraphSetup:
    """Adapted split around the zero map, with the homomorphism as base pair.

    Source coordinates and frame form the base/sub blocks, target ones the
    normal/complement blocks; the homomorphism itself enters as the base
    deformation pair (its graph is the candidate subbundle).
    """
    if validate:
        if not validate_algebroid(h.source).ok:
            raise ValueError("invalid source algebroid")
        if not validate_algebroid(h.target).ok:
            raise ValueError("invalid target algebroid")
    sum_data = block_sum_data(h.source, h.target)
    setup = SplitSetup.build(
        sum_data, h.source.base_dim, h.target.base_dim, h.source.fiber_rank
    )
    base_pair = DeformationPair.build(
        setup,
        sigma={k: dict(poly) for k, poly in h.base_map.items()},
        phi={(i, h.source.fiber_rank + j): dict(poly) for (i, j), poly in h.bundle_map.items()},
    )
    return GraphSetup(h, sum_data, setup, base_pair, build_xq(sum_data, setup.chart))


def candidate_pair(gs: GraphSetup, bundle_map=None, base_map=None) -> DeformationPair:
    """Offsets of the bundle and base maps as a deformation pair."""
    h = gs.h
    sigma = {}
    for k, val in (base_map or {}).items():
        sigma[k] = _as_poly(val, h.source.base_dim)
    phi = {}
    for (i, j), val in (bundle_map or {}).items():
        phi[(i, h.source.fiber_rank + j)] = _as_poly(val, h.source.base_dim)
    return DeformationPair.build(gs.setup, sigma=sigma, phi=phi)


def homomorphism_residual(
    gs: GraphSetup, candidate: DeformationPair, cap: int = DEFAULT_SERIES_CAP
) -> LInftyElement:
    """Residual of the summed pair; zero iff the deformed map is a homomorphism."""
    base_check = subalgebroid_mc_residual(gs.setup, gs.xq, gs.base_pair, cap=cap)
    if not base_check.value.is_zero():
        raise ValueError("the base bundle map is not a homomorphism")
    return subalgebroid_mc_residual(gs.setup, gs.xq, gs.base_pair.add(candidate), cap=cap)


def homomorphism_deformation(
    h: HomomorphismData,
    bundle_map=None,
    base_map=None,
    cap: int = DEFAULT_SERIES_CAP,
) -> LInftyElement:
    """Residual of a (bundle map, base map) offset of a homomorphism."""
    gs = graph_setup(h)
    return homomorphism_residual(gs, candidate_pair(gs, bundle_map, base_map), cap=cap)


def embed_block_field(gs: GraphSetup, which: str, pert: AlgebroidData) -> SuperVectorField:
    """Structure-perturbation field of one block on the sum chart."""
    h = gs.h
    if which == "source":
        if (pert.base_dim, pert.fiber_rank) != (h.source.base_dim, h.source.fiber_rank):
            raise ValueError("source perturbation has wrong dimensions")
        data = block_sum_data(pert, AlgebroidData.build(h.target.base_dim, h.target.fiber_rank))
    elif which == "target":
        if (pert.base_dim, pert.fiber_rank) != (h.target.base_dim, h.target.fiber_rank):
            raise ValueError("target perturbation has wrong dimensions")
        data = block_sum_data(AlgebroidData.build(h.source.base_dim, h.source.fiber_rank), pert)
    else:
        raise ValueError("block must be 'source' or 'target'")
    return build_xq(data, gs.setup.chart)


def check_block_purity(gs: GraphSetup, field: SuperVectorField, which: str) -> bool:
    """Whether a candidate field lives purely in one block of the sum."""
    h = gs.h
    chart = gs.setup.chart
    m_a, n_a = h.source.base_dim, h.source.fiber_rank
    ne = chart.n_even
    for (even, odd, target), _ in field.terms.items():
        in_source = (
            all(e == 0 for e in even[m_a:])
            and all(j < n_a for j in odd)
            and (target < m_a or (ne <= target < ne + n_a))
        )
        in_target = (
            all(e == 0 for e in even[:m_a])
            and all(j >= n_a for j in odd)
            and ((m_a <= target < ne) or target >= ne + n_a)
        )
        if which == "source" and not in_source:
            return False
        if which == "target" and not in_target:
            return False
    return True


def simultaneous_homomorphism(
    h: HomomorphismData,
    cand_source: AlgebroidData | SuperVectorField | None,
    cand_target: AlgebroidData | SuperVectorField | None,
    bundle_map=None,
    base_map=None,
    cap: int = DEFAULT_SERIES_CAP,
) -> tuple[SuperVectorField, SuperVectorField]:
    """Joint residual: deform both block structures and the map between them.

    The block candidates must stay inside their blocks (cross terms are
    rejected); zero iff both deformed structures are algebroids and the
    deformed map is a homomorphism between them.
    """
    gs = graph_setup(h)
    fields = []
    for which, cand in (("source", cand_source), ("target", cand_target)):
        if cand is None:
            continue
        f = embed_block_field(gs, which, cand) if isinstance(cand, AlgebroidData) else cand
        if not check_block_purity(gs, f, which):
            raise ValueError(f"candidate field mixes blocks ({which})")
        fields.append(f)
    cand_xq = SuperVectorField.zero(gs.setup.chart)
    for f in fields:
        cand_xq = cand_xq + f
    return simultaneous_residual(
        gs.setup,
        gs.xq,
        gs.base_pair,
        cand_xq,
        candidate_pair(gs, bundle_map, base_map),
        cap=cap,
    )


# ---------------------------------------------------------------------
# preset instances
# ---------------------------------------------------------------------
def sl2() -> LieAlgebraData:
    """Frame order (h, e, f): [h,e]=2e, [h,f]=-2f, [e,f]=h."""
    return LieAlgebraData.build(3, {(0, 1, 1): 2, (0, 2, 2): -2, (1, 2, 0): 1})


def heisenberg3() -> LieAlgebraData:
    """Frame order (z, p, q) with [p,q]=z (center first)."""
    return LieAlgebraData.build(3, {(1, 2, 0): 1})


def abelian(n: int) -> LieAlgebraData:
    return LieAlgebraData.build(n, {})


def non_jacobi3() -> LieAlgebraData:
    """[e1,e2]=e3, [e1,e3]=e1: fails the Jacobi identity on (e1,e2,e3)."""
    return LieAlgebraData.build(3, {(0, 1, 2): 1, (0, 2, 0): 1})


def tangent_rn(n: int) -> AlgebroidData:
    return AlgebroidData.build(n, n, anchor={(i, i): 1 for i in range(n)})


def sl2_borel_setup() -> tuple[SplitSetup, SuperVectorField]:
    data = sl2().data
    setup = SplitSetup.build(data, 0, 0, 2)
    return setup, build_xq(data, setup.chart)


def foliation_r3() -> FoliationSetup:
    """Coordinate distribution spanned by the first two directions in R^3."""
    frames = [{0: 1}, {1: 1}, {2: 1}]
    return FoliationSetup.build(3, 2, frames)


def hom_sl2_id() -> HomomorphismData:
    g = sl2().data
    return HomomorphismData.build(
        g, g, bundle_map={(i, i): 1 for i in range(3)}, base_map={}
    )
