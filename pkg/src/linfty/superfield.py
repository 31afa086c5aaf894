"""Polynomial super vector fields on a split superdomain.

The chart carries even coordinates (base and normal, degree 0) and odd
coordinates (degree 1).  Superfunctions are finite sums of rational
multiples of (even monomial) * (sorted odd monomial); the Koszul sign of
sorting is absorbed into the coefficient, so equality is a term-map
comparison.  A super vector field is a finite sum of
(superfunction term) * d/d(coordinate) pieces.

All values are immutable after construction and every operation is pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

BASE = "base"
NORMAL = "normal"
SUB_FRAME = "sub_frame"
COMPLEMENT_FRAME = "complement_frame"
PLAIN = "plain"

_EVEN_ROLES = (BASE, NORMAL)
_ODD_ROLES = (SUB_FRAME, COMPLEMENT_FRAME, PLAIN)


class ChartMismatchError(ValueError):
    """Operands live on different coordinate charts."""


@dataclass(frozen=True)
class CoordinateChart:
    """Named even/odd coordinates with their geometric roles.

    Roles partition the chart once and for all: higher layers read them
    instead of re-deriving the split.
    """

    even_names: tuple[str, ...]
    even_roles: tuple[str, ...]
    odd_names: tuple[str, ...]
    odd_roles: tuple[str, ...]

    def __post_init__(self):
        names = self.even_names + self.odd_names
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be unique")
        if len(self.even_roles) != len(self.even_names):
            raise ValueError("one role per even coordinate")
        if len(self.odd_roles) != len(self.odd_names):
            raise ValueError("one role per odd coordinate")
        for r in self.even_roles:
            if r not in _EVEN_ROLES:
                raise ValueError(f"bad even role {r!r}")
        for r in self.odd_roles:
            if r not in _ODD_ROLES:
                raise ValueError(f"bad odd role {r!r}")

    @property
    def n_even(self) -> int:
        return len(self.even_names)

    @property
    def n_odd(self) -> int:
        return len(self.odd_names)

    def target_name(self, target: int) -> str:
        if target < self.n_even:
            return self.even_names[target]
        return self.odd_names[target - self.n_even]

    def target_is_odd(self, target: int) -> bool:
        return target >= self.n_even

    def even_indices(self, role: str) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.even_roles) if r == role)

    def odd_indices(self, role: str) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.odd_roles) if r == role)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"coefficient must be rational, got {type(c).__name__}")


def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> int:
    """Koszul sign of merging two disjoint sorted odd index tuples."""
    inversions = 0
    for a in left:
        for b in right:
            if a > b:
                inversions += 1
    return -1 if inversions % 2 else 1


TermKey = tuple[tuple[int, ...], tuple[int, ...]]


class SuperFunction:
    """Polynomial superfunction: finite map (even exponents, odd subset) -> Q."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: CoordinateChart, terms: Mapping[TermKey, Fraction] | None = None):
        canonical: dict[TermKey, Fraction] = {}
        for (even, odd), c in (terms or {}).items():
            c = _as_fraction(c)
            if c == 0:
                continue
            even = tuple(even)
            odd = tuple(odd)
            if len(even) != chart.n_even:
                raise ValueError("even exponent tuple has wrong length")
            if any(e < 0 for e in even):
                raise ValueError("negative exponent")
            if list(odd) != sorted(set(odd)):
                raise ValueError("odd subset must be strictly increasing")
            if odd and (odd[0] < 0 or odd[-1] >= chart.n_odd):
                raise ValueError("odd index out of range")
            key = (even, odd)
            canonical[key] = canonical.get(key, Fraction(0)) + c
            if canonical[key] == 0:
                del canonical[key]
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "terms", canonical)

    def __setattr__(self, *a):
        raise AttributeError("SuperFunction is immutable")

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero(chart: CoordinateChart) -> "SuperFunction":
        return SuperFunction(chart)

    @staticmethod
    def constant(chart: CoordinateChart, c) -> "SuperFunction":
        return SuperFunction(chart, {((0,) * chart.n_even, ()): _as_fraction(c)})

    @staticmethod
    def even_var(chart: CoordinateChart, i: int) -> "SuperFunction":
        exps = [0] * chart.n_even
        exps[i] = 1
        return SuperFunction(chart, {(tuple(exps), ()): Fraction(1)})

    @staticmethod
    def odd_var(chart: CoordinateChart, j: int) -> "SuperFunction":
        return SuperFunction(chart, {((0,) * chart.n_even, (j,)): Fraction(1)})

    @staticmethod
    def var(chart: CoordinateChart, name: str) -> "SuperFunction":
        if name in chart.even_names:
            return SuperFunction.even_var(chart, chart.even_names.index(name))
        if name in chart.odd_names:
            return SuperFunction.odd_var(chart, chart.odd_names.index(name))
        raise KeyError(name)

    # -- structure ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {len(odd) for (_, odd) in self.terms}

    def degree_part(self, d: int) -> "SuperFunction":
        return SuperFunction(
            self.chart, {k: c for k, c in self.terms.items() if len(k[1]) == d}
        )

    def even_degree(self, positions: Iterable[int] | None = None) -> int:
        """Max total polynomial degree over the given even positions (all by default)."""
        if not self.terms:
            return 0
        pos = list(positions) if positions is not None else list(range(self.chart.n_even))
        return max(sum(even[p] for p in pos) for (even, _) in self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SuperFunction)
            and self.chart == other.chart
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.chart, frozenset(self.terms.items())))

    # -- algebra ------------------------------------------------------
    def _check(self, other: "SuperFunction"):
        if self.chart != other.chart:
            raise ChartMismatchError("superfunctions on different charts")

    def __add__(self, other: "SuperFunction") -> "SuperFunction":
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, Fraction(0)) + c
        return SuperFunction(self.chart, terms)

    def __neg__(self) -> "SuperFunction":
        return SuperFunction(self.chart, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "SuperFunction") -> "SuperFunction":
        return self + (-other)

    def scale(self, c) -> "SuperFunction":
        c = _as_fraction(c)
        return SuperFunction(self.chart, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        out: dict[TermKey, Fraction] = {}
        for (e1, o1), c1 in self.terms.items():
            for (e2, o2), c2 in other.terms.items():
                if set(o1) & set(o2):
                    continue
                sign = _merge_sign(o1, o2)
                even = tuple(a + b for a, b in zip(e1, e2))
                odd = tuple(sorted(o1 + o2))
                key = (even, odd)
                out[key] = out.get(key, Fraction(0)) + sign * c1 * c2
        return SuperFunction(self.chart, out)

    __rmul__ = __mul__

    # -- calculus -----------------------------------------------------
    def partial(self, target: int) -> "SuperFunction":
        """Left partial derivative along the coordinate with the given index."""
        chart = self.chart
        out: dict[TermKey, Fraction] = {}
        if chart.target_is_odd(target):
            j = target - chart.n_even
            for (even, odd), c in self.terms.items():
                if j not in odd:
                    continue
                pos = odd.index(j)
                sign = -1 if pos % 2 else 1
                rest = odd[:pos] + odd[pos + 1 :]
                key = (even, rest)
                out[key] = out.get(key, Fraction(0)) + sign * c
        else:
            for (even, odd), c in self.terms.items():
                e = even[target]
                if e == 0:
                    continue
                lowered = even[:target] + (e - 1,) + even[target + 1 :]
                key = (lowered, odd)
                out[key] = out.get(key, Fraction(0)) + e * c
        return SuperFunction(chart, out)

    def substitute(self, mapping: Mapping[int, "SuperFunction"]) -> "SuperFunction":
        """Replace coordinates by superfunctions (key = target index).

        Even coordinates must be replaced by even values, odd ones by values
        of pure degree 1 (or zero); unlisted coordinates stay themselves.
        """
        chart = self.chart
        for t, val in mapping.items():
            degs = val.degrees()
            if chart.target_is_odd(t):
                if degs - {1}:
                    raise ValueError("odd coordinate must be replaced by a degree-1 value")
            else:
                if any(d % 2 for d in degs):
                    raise ValueError("even coordinate must be replaced by an even value")
        one = SuperFunction.constant(chart, 1)
        even_values = {
            i: mapping.get(i, SuperFunction.even_var(chart, i)) for i in range(chart.n_even)
        }
        odd_values = {
            j: mapping.get(chart.n_even + j, SuperFunction.odd_var(chart, j))
            for j in range(chart.n_odd)
        }
        total = SuperFunction.zero(chart)
        for (even, odd), c in self.terms.items():
            acc = one.scale(c)
            for i, e in enumerate(even):
                for _ in range(e):
                    acc = acc * even_values[i]
            for j in odd:
                acc = acc * odd_values[j]
            total = total + acc
        return total

    def __repr__(self):
        return f"SuperFunction({render_function(self)})"


FieldKey = tuple[tuple[int, ...], tuple[int, ...], int]


class SuperVectorField:
    """Finite sum of (coefficient term) * d/d(coordinate), canonical form.

    The degree of a term is (number of odd factors in its coefficient) minus
    one if the derivative target is odd; a field is homogeneous when all its
    terms share one degree.
    """

    __slots__ = ("chart", "terms")

    def __init__(self, chart: CoordinateChart, terms: Mapping[FieldKey, Fraction] | None = None):
        canonical: dict[FieldKey, Fraction] = {}
        for (even, odd, target), c in (terms or {}).items():
            c = _as_fraction(c)
            if c == 0:
                continue
            even = tuple(even)
            odd = tuple(odd)
            if len(even) != chart.n_even:
                raise ValueError("even exponent tuple has wrong length")
            if list(odd) != sorted(set(odd)):
                raise ValueError("odd subset must be strictly increasing")
            if not 0 <= target < chart.n_even + chart.n_odd:
                raise ValueError("derivative target out of range")
            key = (even, odd, target)
            canonical[key] = canonical.get(key, Fraction(0)) + c
            if canonical[key] == 0:
                del canonical[key]
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "terms", canonical)

    def __setattr__(self, *a):
        raise AttributeError("SuperVectorField is immutable")

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero(chart: CoordinateChart) -> "SuperVectorField":
        return SuperVectorField(chart)

    @staticmethod
    def d_by(chart: CoordinateChart, name: str) -> "SuperVectorField":
        names = chart.even_names + chart.odd_names
        if name not in names:
            raise KeyError(name)
        key = ((0,) * chart.n_even, (), names.index(name))
        return SuperVectorField(chart, {key: Fraction(1)})

    @staticmethod
    def from_components(
        components: Mapping[int, SuperFunction], chart: CoordinateChart
    ) -> "SuperVectorField":
        terms: dict[FieldKey, Fraction] = {}
        for target, f in components.items():
            for (even, odd), c in f.terms.items():
                key = (even, odd, target)
                terms[key] = terms.get(key, Fraction(0)) + c
        return SuperVectorField(chart, terms)

    # -- structure ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def _term_degree(self, key: FieldKey) -> int:
        _, odd, target = key
        return len(odd) - (1 if self.chart.target_is_odd(target) else 0)

    def degrees(self) -> set[int]:
        return {self._term_degree(k) for k in self.terms}

    def degree(self) -> int | None:
        """The common degree of all terms, or None if mixed (0 is vacuous)."""
        ds = self.degrees()
        if not ds:
            return None
        if len(ds) > 1:
            return None
        return ds.pop()

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def degree_part(self, d: int) -> "SuperVectorField":
        return SuperVectorField(
            self.chart, {k: c for k, c in self.terms.items() if self._term_degree(k) == d}
        )

    def component(self, target: int) -> SuperFunction:
        """The coefficient superfunction of d/d(coordinate #target)."""
        return SuperFunction(
            self.chart,
            {(even, odd): c for (even, odd, t), c in self.terms.items() if t == target},
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SuperVectorField)
            and self.chart == other.chart
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.chart, frozenset(self.terms.items())))

    # -- algebra ------------------------------------------------------
    def _check(self, other: "SuperVectorField"):
        if self.chart != other.chart:
            raise ChartMismatchError("fields on different charts")

    def __add__(self, other: "SuperVectorField") -> "SuperVectorField":
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, Fraction(0)) + c
        return SuperVectorField(self.chart, terms)

    def __neg__(self) -> "SuperVectorField":
        return SuperVectorField(self.chart, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "SuperVectorField") -> "SuperVectorField":
        return self + (-other)

    def scale(self, c) -> "SuperVectorField":
        c = _as_fraction(c)
        return SuperVectorField(self.chart, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f"SuperVectorField({render_field(self)})"


def apply(X: SuperVectorField, f: SuperFunction) -> SuperFunction:
    """Graded derivation action of a field on a superfunction."""
    if X.chart != f.chart:
        raise ChartMismatchError("field and function on different charts")
    out = SuperFunction.zero(X.chart)
    for (even, odd, target), c in X.terms.items():
        df = f.partial(target)
        if df.is_zero():
            continue
        mono = SuperFunction(X.chart, {(even, odd): c})
        out = out + mono * df
    return out


def super_commutator(X: SuperVectorField, Y: SuperVectorField) -> SuperVectorField:
    """Graded commutator of derivations; second-order parts cancel exactly.

    For single terms f*d_a and g*d_b the bracket is
    f*(d_a g)*d_b - (-1)^(|X||Y|) g*(d_b f)*d_a; general fields expand
    bilinearly over their (automatically homogeneous) terms.
    """
    if X.chart != Y.chart:
        raise ChartMismatchError("fields on different charts")
    chart = X.chart
    out: dict[FieldKey, Fraction] = {}

    def add_terms(f: SuperFunction, target: int, sign: int):
        for (even, odd), c in f.terms.items():
            key = (even, odd, target)
            val = out.get(key, Fraction(0)) + sign * c
            if val == 0:
                out.pop(key, None)
            else:
                out[key] = val

    for (e1, o1, a), c1 in X.terms.items():
        d1 = len(o1) - (1 if chart.target_is_odd(a) else 0)
        f1 = SuperFunction(chart, {(e1, o1): c1})
        for (e2, o2, b), c2 in Y.terms.items():
            d2 = len(o2) - (1 if chart.target_is_odd(b) else 0)
            f2 = SuperFunction(chart, {(e2, o2): c2})
            sign = -1 if (d1 * d2) % 2 else 1
            left = f1 * f2.partial(a)
            if not left.is_zero():
                add_terms(left, b, 1)
            right = f2 * f1.partial(b)
            if not right.is_zero():
                add_terms(right, a, -sign)
    return SuperVectorField(chart, out)


def is_homological(X: SuperVectorField) -> bool:
    """True iff X is homogeneous of odd degree and [[X, X]] vanishes."""
    if X.is_zero():
        return True
    d = X.degree()
    if d is None or d % 2 == 0:
        return False
    return super_commutator(X, X).is_zero()


# -- rendering --------------------------------------------------------
def _render_monomial(chart: CoordinateChart, even: tuple[int, ...], odd: tuple[int, ...]) -> str:
    parts = []
    for i, e in enumerate(even):
        if e == 1:
            parts.append(chart.even_names[i])
        elif e > 1:
            parts.append(f"{chart.even_names[i]}^{e}")
    parts.extend(chart.odd_names[j] for j in odd)
    return " ".join(parts)


def render_function(f: SuperFunction) -> str:
    if f.is_zero():
        return "0"
    bits = []
    for (even, odd), c in sorted(f.terms.items()):
        mono = _render_monomial(f.chart, even, odd)
        bits.append(f"{c}" + (f" {mono}" if mono else ""))
    return " + ".join(bits)


def render_field(X: SuperVectorField) -> str:
    if X.is_zero():
        return "0"
    bits = []
    for (even, odd, target), c in sorted(X.terms.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1])):
        mono = _render_monomial(X.chart, even, odd)
        head = f"{c}" + (f" {mono}" if mono else "")
        bits.append(f"{head} d/d{X.chart.target_name(target)}")
    return " + ".join(bits)
