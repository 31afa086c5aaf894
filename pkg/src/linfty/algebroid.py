"""Lie algebroids from polynomial structure data.

An algebroid over a polynomial chart is given by antisymmetric structure
functions C^k_ij(x) and anchor coefficients b^t_i(x).  The odd degree-1
field built from them squares to zero exactly when the data satisfies the
classical axioms; both routes are implemented and cross-checked.  The
module also carries the bundle-valued cochain calculus (forms and their
differential), derivation complexes with their transport to fields, and
the deformation residual for candidate structures.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import linalg
from .superfield import (
    BASE,
    NORMAL,
    PLAIN,
    SUB_FRAME,
    COMPLEMENT_FRAME,
    CoordinateChart,
    SuperFunction,
    SuperVectorField,
    is_homological,
    render_field,
    render_function,
    super_commutator,
)

PolyDict = dict[tuple[int, ...], Fraction]


def _as_poly(value, base_dim: int) -> PolyDict:
    if isinstance(value, (int, Fraction)):
        c = Fraction(value)
        return {} if c == 0 else {(0,) * base_dim: c}
    out: PolyDict = {}
    for exps, c in dict(value).items():
        exps = tuple(exps)
        if len(exps) != base_dim:
            raise ValueError(f"exponent tuple {exps} has wrong length (need {base_dim})")
        if any(e < 0 for e in exps):
            raise ValueError("negative exponent")
        c = Fraction(c)
        if c != 0:
            out[exps] = out.get(exps, Fraction(0)) + c
    return {k: v for k, v in out.items() if v != 0}


def _poly_fn(chart: CoordinateChart, poly: PolyDict) -> SuperFunction:
    return SuperFunction(chart, {(exps, ()): c for exps, c in poly.items()})


@dataclass(frozen=True)
class AlgebroidData:
    """Polynomial structure functions of a Lie algebroid candidate.

    ``structure`` maps (i, j, k) with i < j to the polynomial coefficient of
    frame element k in the bracket of frame elements i and j; ``anchor``
    maps (i, t) to the coefficient of the t-th coordinate field.  Indices
    are 0-based.  Only antisymmetry is enforced at construction; the
    Jacobi/anchor axioms are what ``validate_algebroid`` decides.
    """

    base_dim: int
    fiber_rank: int
    structure: Mapping[tuple[int, int, int], PolyDict]
    anchor: Mapping[tuple[int, int], PolyDict]

    @staticmethod
    def build(base_dim: int, fiber_rank: int, structure=None, anchor=None) -> "AlgebroidData":
        struct: dict[tuple[int, int, int], PolyDict] = {}
        for (i, j, k), value in (structure or {}).items():
            if not (0 <= i < fiber_rank and 0 <= j < fiber_rank and 0 <= k < fiber_rank):
                raise ValueError(f"structure index out of range: {(i, j, k)}")
            poly = _as_poly(value, base_dim)
            if not poly:
                continue
            if i == j:
                raise ValueError(f"nonzero diagonal structure constant at {(i, j, k)}")
            if i > j:
                i, j = j, i
                poly = {e: -c for e, c in poly.items()}
            key = (i, j, k)
            merged = dict(struct.get(key, {}))
            for e, c in poly.items():
                merged[e] = merged.get(e, Fraction(0)) + c
            struct[key] = {e: c for e, c in merged.items() if c != 0}
        anch: dict[tuple[int, int], PolyDict] = {}
        for (i, t), value in (anchor or {}).items():
            if not (0 <= i < fiber_rank and 0 <= t < base_dim):
                raise ValueError(f"anchor index out of range: {(i, t)}")
            poly = _as_poly(value, base_dim)
            if poly:
                anch[(i, t)] = poly
        struct = {k: v for k, v in struct.items() if v}
        return AlgebroidData(base_dim, fiber_rank, struct, anch)

    # -- charts ---------------------------------------------------------
    def plain_chart(self) -> CoordinateChart:
        return CoordinateChart(
            tuple(f"x{t+1}" for t in range(self.base_dim)),
            (BASE,) * self.base_dim,
            tuple(f"xi{i+1}" for i in range(self.fiber_rank)),
            (PLAIN,) * self.fiber_rank,
        )

    def split_chart(self, base_dim_s: int, normal_rank: int, sub_rank: int) -> CoordinateChart:
        if base_dim_s + normal_rank != self.base_dim:
            raise ValueError("base + normal dimensions must sum to the even dimension")
        if not 0 <= sub_rank <= self.fiber_rank:
            raise ValueError("sub rank out of range")
        evens = tuple(f"x{t+1}" for t in range(base_dim_s)) + tuple(
            f"y{k+1}" for k in range(normal_rank)
        )
        roles = (BASE,) * base_dim_s + (NORMAL,) * normal_rank
        odds = tuple(f"xi{i+1}" for i in range(self.fiber_rank))
        odd_roles = (SUB_FRAME,) * sub_rank + (COMPLEMENT_FRAME,) * (self.fiber_rank - sub_rank)
        return CoordinateChart(evens, roles, odds, odd_roles)

    # -- accessors --------------------------------------------------------
    def structure_poly(self, i: int, j: int, k: int) -> PolyDict:
        if i == j:
            return {}
        if i < j:
            return dict(self.structure.get((i, j, k), {}))
        return {e: -c for e, c in self.structure.get((j, i, k), {}).items()}

    def structure_fn(self, chart: CoordinateChart, i: int, j: int, k: int) -> SuperFunction:
        return _poly_fn(chart, self.structure_poly(i, j, k))

    def anchor_fn(self, chart: CoordinateChart, i: int, t: int) -> SuperFunction:
        return _poly_fn(chart, dict(self.anchor.get((i, t), {})))

    def anchor_apply(self, chart: CoordinateChart, i: int, f: SuperFunction) -> SuperFunction:
        """Action of the anchor image of frame element i on a function."""
        out = SuperFunction.zero(chart)
        for t in range(self.base_dim):
            b = self.anchor_fn(chart, i, t)
            if b.is_zero():
                continue
            out = out + b * f.partial(t)
        return out

    def max_poly_degree(self) -> int:
        degs = [0]
        for poly in list(self.structure.values()) + list(self.anchor.values()):
            degs.extend(sum(e) for e in poly)
        return max(degs)


def build_xq(data: AlgebroidData, chart: CoordinateChart | None = None) -> SuperVectorField:
    """Degree-1 field (1/2) C^k_ij xi^i xi^j d/dxi^k - b^t_i xi^i d/dx^t."""
    chart = chart or data.plain_chart()
    ne = chart.n_even
    terms: dict[tuple, Fraction] = {}
    for (i, j, k), poly in data.structure.items():
        for exps, c in poly.items():
            key = (exps, (i, j), ne + k)
            terms[key] = terms.get(key, Fraction(0)) + c
    for (i, t), poly in data.anchor.items():
        for exps, c in poly.items():
            key = (exps, (i,), t)
            terms[key] = terms.get(key, Fraction(0)) - c
    return SuperVectorField(chart, terms)


# ---------------------------------------------------------------------
# validation: homological route and classical route
# ---------------------------------------------------------------------
@dataclass
class AlgebroidReport:
    homological: bool
    square_terms: list[str] = field(default_factory=list)
    anchor_defects: dict[tuple[int, int, int], str] = field(default_factory=dict)
    jacobi_defects: dict[tuple[int, int, int, int], str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.homological

    @property
    def classical_ok(self) -> bool:
        return not self.anchor_defects and not self.jacobi_defects


def validate_algebroid(data: AlgebroidData, chart: CoordinateChart | None = None) -> AlgebroidReport:
    """Pass iff the built field is homological; localizes failing terms."""
    chart = chart or data.plain_chart()
    xq = build_xq(data, chart)
    square = super_commutator(xq, xq)
    report = AlgebroidReport(homological=is_homological(xq))
    if not square.is_zero():
        for key, c in sorted(square.terms.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1])):
            single = SuperVectorField(chart, {key: c})
            report.square_terms.append(render_field(single))
    for (i, j, t), poly in classical_anchor_defects(data, chart).items():
        report.anchor_defects[(i, j, t)] = render_function(poly)
    for (i, j, k, c), poly in classical_jacobi_defects(data, chart).items():
        report.jacobi_defects[(i, j, k, c)] = render_function(poly)
    return report


def classical_anchor_defects(
    data: AlgebroidData, chart: CoordinateChart | None = None
) -> dict[tuple[int, int, int], SuperFunction]:
    """rho([xi_i, xi_j]) - [rho(xi_i), rho(xi_j)], componentwise, nonzero only."""
    chart = chart or data.plain_chart()
    out = {}
    for i, j in itertools.combinations(range(data.fiber_rank), 2):
        for t in range(data.base_dim):
            total = SuperFunction.zero(chart)
            for k in range(data.fiber_rank):
                ck = _poly_fn(chart, data.structure_poly(i, j, k))
                if not ck.is_zero():
                    total = total + ck * data.anchor_fn(chart, k, t)
            total = total - data.anchor_apply(chart, i, data.anchor_fn(chart, j, t))
            total = total + data.anchor_apply(chart, j, data.anchor_fn(chart, i, t))
            if not total.is_zero():
                out[(i, j, t)] = total
    return out


def classical_jacobi_defects(
    data: AlgebroidData, chart: CoordinateChart | None = None
) -> dict[tuple[int, int, int, int], SuperFunction]:
    """Cyclic Jacobiator coefficients on frame triples, nonzero only."""
    chart = chart or data.plain_chart()
    out = {}
    for i, j, k in itertools.combinations(range(data.fiber_rank), 3):
        for c in range(data.fiber_rank):
            total = SuperFunction.zero(chart)
            for (a, b, d) in ((i, j, k), (j, k, i), (k, i, j)):
                for e in range(data.fiber_rank):
                    cab = _poly_fn(chart, data.structure_poly(a, b, e))
                    if cab.is_zero():
                        continue
                    total = total + cab * _poly_fn(chart, data.structure_poly(e, d, c))
                total = total - data.anchor_apply(chart, d, _poly_fn(chart, data.structure_poly(a, b, c)))
            if not total.is_zero():
                out[(i, j, k, c)] = total
    return out


def deformation_residual(
    xq: SuperVectorField, xq_tilde: SuperVectorField
) -> SuperVectorField:
    """[[X, X~]] + (1/2)[[X~, X~]]; zero iff X + X~ is again homological."""
    if not is_homological(xq) or (not xq.is_zero() and xq.degree() != 1):
        raise ValueError("the base field must be homological of degree 1")
    if not xq_tilde.is_zero() and xq_tilde.degree() != 1:
        raise ValueError("the candidate must have degree 1")
    return super_commutator(xq, xq_tilde) + super_commutator(xq_tilde, xq_tilde).scale(
        Fraction(1, 2)
    )


# ---------------------------------------------------------------------
# bundle-valued forms and the differential
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class CEForm:
    """Element of the degree-n exterior power of the dual bundle.

    Values are stored on strictly increasing frame index tuples with
    polynomial base coefficients; evaluation on arbitrary tuples is the
    antisymmetric extension.
    """

    chart: CoordinateChart
    degree: int
    values: Mapping[tuple[int, ...], SuperFunction]

    @staticmethod
    def build(chart: CoordinateChart, degree: int, values: Mapping) -> "CEForm":
        canon: dict[tuple[int, ...], SuperFunction] = {}
        for idx, val in values.items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise ValueError("index tuple length must equal the form degree")
            if list(idx) != sorted(set(idx)):
                raise ValueError("index tuples must be strictly increasing")
            if not isinstance(val, SuperFunction):
                val = SuperFunction.constant(chart, val)
            if val.degrees() - {0}:
                raise ValueError("form values must be even polynomials")
            if not val.is_zero():
                canon[idx] = canon.get(idx, SuperFunction.zero(chart)) + val
        return CEForm(chart, degree, {k: v for k, v in canon.items() if not v.is_zero()})

    def evaluate(self, indices: tuple[int, ...]) -> SuperFunction:
        if len(indices) != self.degree:
            raise ValueError("wrong number of arguments")
        if len(set(indices)) != len(indices):
            return SuperFunction.zero(self.chart)
        inversions = sum(
            1 for a, b in itertools.combinations(range(len(indices)), 2) if indices[a] > indices[b]
        )
        sign = -1 if inversions % 2 else 1
        key = tuple(sorted(indices))
        val = self.values.get(key)
        if val is None:
            return SuperFunction.zero(self.chart)
        return val.scale(sign)

    def is_zero(self) -> bool:
        return not self.values


def ce_differential(data: AlgebroidData, form: CEForm) -> CEForm:
    """Cartan-type differential on bundle forms (frame-triple enumeration)."""
    chart = form.chart
    n = form.degree
    out: dict[tuple[int, ...], SuperFunction] = {}

    def add(idx: tuple[int, ...], val: SuperFunction):
        if val.is_zero():
            return
        cur = out.get(idx, SuperFunction.zero(chart))
        cur = cur + val
        if cur.is_zero():
            out.pop(idx, None)
        else:
            out[idx] = cur

    for idx in itertools.combinations(range(data.fiber_rank), n + 1):
        total = SuperFunction.zero(chart)
        for pos, u in enumerate(idx):
            rest = idx[:pos] + idx[pos + 1 :]
            inner = form.evaluate(rest)
            if not inner.is_zero():
                sign = -1 if pos % 2 else 1
                total = total + data.anchor_apply(chart, u, inner).scale(sign)
        for pa, pb in itertools.combinations(range(n + 1), 2):
            u, v = idx[pa], idx[pb]
            rest = tuple(w for p, w in enumerate(idx) if p not in (pa, pb))
            sign = -1 if (pa + pb) % 2 else 1
            for c in range(data.fiber_rank):
                coeff = data.structure_fn(chart, u, v, c)
                if coeff.is_zero():
                    continue
                val = form.evaluate((c,) + rest)
                if not val.is_zero():
                    total = total + (coeff * val).scale(sign)
        add(idx, total)
    return CEForm(chart, n + 1, out)


def form_to_superfunction(form: CEForm) -> SuperFunction:
    """Canonical identification of bundle forms with superfunctions.

    Carries the sign (-1)^degree, which intertwines the Cartan differential
    with the action of the structure field exactly.
    """
    chart = form.chart
    ne = chart.n_even
    sign = -1 if form.degree % 2 else 1
    total = SuperFunction.zero(chart)
    for idx, val in form.values.items():
        mono = SuperFunction(chart, {((0,) * ne, idx): Fraction(sign)})
        total = total + mono * val
    return total


def superfunction_to_form(f: SuperFunction, degree: int) -> CEForm:
    """Inverse of the canonical identification in one degree."""
    chart = f.chart
    sign = -1 if degree % 2 else 1
    values: dict[tuple[int, ...], SuperFunction] = {}
    for (even, odd), c in f.terms.items():
        if len(odd) != degree:
            raise ValueError("superfunction is not homogeneous of the requested degree")
        cur = values.get(odd, SuperFunction.zero(chart))
        values[odd] = cur + SuperFunction(chart, {(even, ()): c * sign})
    return CEForm.build(chart, degree, values)


# ---------------------------------------------------------------------
# derivations with symbols (degree-shifted multilinear operators)
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class Derivation:
    """Degree-p derivation: antisymmetric body tensor plus its symbol.

    The body maps (p+1)-tuples of frame elements to frame coefficients;
    the symbol maps p-tuples to base vector field coefficients.  Both are
    stored on strictly increasing tuples with polynomial values.
    """

    degree: int
    body: Mapping[tuple[tuple[int, ...], int], SuperFunction]
    symbol: Mapping[tuple[tuple[int, ...], int], SuperFunction]

    @staticmethod
    def build(chart: CoordinateChart, degree: int, body=None, symbol=None) -> "Derivation":
        def canon(entries, arity):
            out = {}
            for (idx, target), val in (entries or {}).items():
                idx = tuple(idx)
                if len(idx) != arity or list(idx) != sorted(set(idx)):
                    raise ValueError(f"index tuple must be strictly increasing of length {arity}")
                if not isinstance(val, SuperFunction):
                    val = SuperFunction.constant(chart, val)
                if val.degrees() - {0}:
                    raise ValueError("tensor values must be even polynomials")
                if not val.is_zero():
                    out[(idx, target)] = out.get((idx, target), SuperFunction.zero(chart)) + val
            return {k: v for k, v in out.items() if not v.is_zero()}

        return Derivation(degree, canon(body, degree + 1), canon(symbol, degree))

    def is_zero(self) -> bool:
        return not self.body and not self.symbol


def derivation_to_field(chart: CoordinateChart, d: Derivation) -> SuperVectorField:
    """Body tensor to odd-target terms, symbol (negated) to base-target terms."""
    ne = chart.n_even
    terms: dict[tuple, Fraction] = {}
    for (idx, a), val in d.body.items():
        for (even, _), c in val.terms.items():
            key = (even, idx, ne + a)
            terms[key] = terms.get(key, Fraction(0)) + c
    for (idx, t), val in d.symbol.items():
        for (even, _), c in val.terms.items():
            key = (even, idx, t)
            terms[key] = terms.get(key, Fraction(0)) - c
    return SuperVectorField(chart, terms)


def field_to_derivation(chart: CoordinateChart, X: SuperVectorField) -> Derivation:
    """Inverse transport; raises if the field is not of derivation shape."""
    if X.is_zero():
        return Derivation(0, {}, {})
    p = X.degree()
    if p is None:
        raise ValueError("field is not homogeneous")
    ne = chart.n_even
    body: dict[tuple[tuple[int, ...], int], SuperFunction] = {}
    symbol: dict[tuple[tuple[int, ...], int], SuperFunction] = {}
    for (even, odd, target), c in X.terms.items():
        mono = SuperFunction(chart, {(even, ()): c})
        if chart.target_is_odd(target):
            key = (odd, target - ne)
            body[key] = body.get(key, SuperFunction.zero(chart)) + mono
        else:
            key = (odd, target)
            symbol[key] = symbol.get(key, SuperFunction.zero(chart)) - mono
    return Derivation(
        p,
        {k: v for k, v in body.items() if not v.is_zero()},
        {k: v for k, v in symbol.items() if not v.is_zero()},
    )


def derivation_bracket(chart: CoordinateChart, d1: Derivation, d2: Derivation) -> Derivation:
    """Bracket transported through the field isomorphism (true by construction)."""
    bracket = super_commutator(derivation_to_field(chart, d1), derivation_to_field(chart, d2))
    return field_to_derivation(chart, bracket)


# ---------------------------------------------------------------------
# deformation cohomology of the field complex
# ---------------------------------------------------------------------
def field_basis(
    chart: CoordinateChart, field_degree: int, poly_bound: int
) -> list[SuperVectorField]:
    """Monomial fields of one degree with coefficient poly degree <= bound."""
    ne, no = chart.n_even, chart.n_odd
    exps = _exponents_up_to(ne, poly_bound)
    out = []
    for target in range(ne + no):
        odd_size = field_degree + (1 if target >= ne else 0)
        if odd_size < 0 or odd_size > no:
            continue
        for odd in itertools.combinations(range(no), odd_size):
            for e in exps:
                out.append(SuperVectorField(chart, {(e, odd, target): Fraction(1)}))
    return out


def _exponents_up_to(n_even: int, bound: int) -> list[tuple[int, ...]]:
    if n_even == 0:
        return [()]
    out = []
    for total in range(bound + 1):
        for combo in itertools.combinations_with_replacement(range(n_even), total):
            e = [0] * n_even
            for c in combo:
                e[c] += 1
            out.append(tuple(e))
    return out


@dataclass
class CohomologyResult:
    degree: int
    dimension: int
    representatives: list[SuperVectorField]
    truncated: bool = False


def complex_cohomology(
    differential, basis_of_degree, degree: int, truncated: bool = False
) -> CohomologyResult:
    """ker/im of a degree +1 differential on an enumerated field complex.

    ``basis_of_degree(d)`` enumerates the chosen window of the complex in
    one degree; image vectors falling outside the window enlarge the
    coordinate space, so the reported quotient is exact whenever the window
    is closed under the differential.
    """
    src = basis_of_degree(degree)
    below = basis_of_degree(degree - 1)
    images_src = [differential(v) for v in src]
    images_below = [differential(v) for v in below]

    keys: dict = {}
    for v in src:
        for key in v.terms:
            keys.setdefault(key, len(keys))
    for w in images_src + images_below:
        for key in w.terms:
            keys.setdefault(key, len(keys))

    def vec(w: SuperVectorField) -> list[Fraction]:
        out = [Fraction(0)] * len(keys)
        for key, c in w.terms.items():
            out[keys[key]] = c
        return out

    matrix_rows = [vec(w) for w in images_src]
    cols = len(src)
    col_matrix = (
        [[matrix_rows[j][i] for j in range(cols)] for i in range(len(keys))] if cols else []
    )
    kernel_coords = linalg.nullspace(col_matrix, cols)
    kernel_vecs = []
    kernel_fields = []
    for coeffs in kernel_coords:
        f = SuperVectorField.zero(src[0].chart) if src else None
        for c, v in zip(coeffs, src):
            if c != 0:
                f = f + v.scale(c)
        kernel_fields.append(f)
        kernel_vecs.append(vec(f))
    image_vecs = [vec(w) for w in images_below if not w.is_zero()]
    if kernel_vecs:
        joint = linalg.rank(kernel_vecs + image_vecs)
        dim = joint - (linalg.rank(image_vecs) if image_vecs else 0)
    else:
        dim = 0
    reps_coords = linalg.quotient_representatives(kernel_vecs, image_vecs)
    reps = []
    for rep in reps_coords:
        for f, v in zip(kernel_fields, kernel_vecs):
            if v == rep:
                reps.append(f)
                break
    return CohomologyResult(degree, dim, reps, truncated)


def dgla_cohomology(
    data: AlgebroidData, ce_degree: int, truncate: int | None = None
) -> CohomologyResult:
    """Deformation cohomology of the field complex at one cochain degree.

    Cochain degree q corresponds to field degree q - 1.  Over a point the
    complex is finite and the answer exact; a polynomial base requires a
    truncation bound.
    """
    chart = data.plain_chart()
    if data.base_dim > 0 and truncate is None:
        raise ValueError("polynomial base needs a truncation degree")
    bound = 0 if data.base_dim == 0 else int(truncate)  # type: ignore[arg-type]
    xq = build_xq(data, chart)

    def diff(v: SuperVectorField) -> SuperVectorField:
        return super_commutator(xq, v)

    result = complex_cohomology(
        diff,
        lambda d: field_basis(chart, d, bound),
        ce_degree - 1,
        truncated=data.base_dim > 0,
    )
    return CohomologyResult(ce_degree, result.dimension, result.representatives, result.truncated)
