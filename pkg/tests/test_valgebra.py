import random
from fractions import Fraction

import pytest

from linfty.algebroid import AlgebroidData, build_xq
from linfty.signs import Permutation, koszul_sign
from linfty.subalgebroid import DeformationPair, SplitSetup, encode_deformation
from linfty.superfield import SuperVectorField, super_commutator
from linfty.valgebra import (
    ExtElement,
    LInftyElement,
    MCDelta,
    NotInAbelianPart,
    SeriesCapExceeded,
    VAlgebra,
    check_linfty_axioms,
    check_v_algebra,
    derived_bracket,
    extended_bracket,
    mc_residual,
    twisted_projection,
)

SL2 = AlgebroidData.build(0, 3, structure={(0, 1, 1): 2, (0, 2, 2): -2, (1, 2, 0): 1})


@pytest.fixture(scope="module")
def borel():
    setup = SplitSetup.build(SL2, 0, 0, 2)
    xq = build_xq(SL2, setup.chart)
    valg = setup.valgebra()
    return setup, xq, valg, MCDelta.of(valg, xq)


def basis_elements(setup, valg):
    out = []
    for d in (-1, 0, 1):
        out.extend(LInftyElement.of(valg, b) for b in setup.abelian_basis(d))
    return out


def phi_pair(setup, a, b):
    return DeformationPair.build(setup, phi={(0, 2): Fraction(a), (1, 2): Fraction(b)})


class TestCheckVAlgebra:
    def test_borel_split_passes(self, borel):
        setup, xq, valg, delta = borel
        report = check_v_algebra(valg, probe_degree_bound=2, poly_degree_bound=0)
        assert report.ok

    def test_enlarged_summand_fails_abelianness(self, borel):
        setup, xq, valg, delta = borel
        ne = setup.chart.n_even
        extra = [
            SuperVectorField(setup.chart, {((), (0,), ne + 2): Fraction(1)}),
            SuperVectorField(setup.chart, {((), (2,), ne + 0): Fraction(1)}),
        ]

        def bigger_basis(d):
            fields = setup.abelian_basis(d)
            if d == 0:
                fields = fields + extra
            return fields

        def fake_project(v):
            return v

        bad = VAlgebra(setup.chart, fake_project, bigger_basis, setup.kernel_basis)
        report = check_v_algebra(bad, probe_degree_bound=1, poly_degree_bound=0)
        assert not report.abelian_ok

    def test_fully_abelian_identity_projection(self):
        ab = AlgebroidData.build(0, 2)
        setup = SplitSetup.build(ab, 0, 0, 0)
        valg = setup.valgebra()
        report = check_v_algebra(valg, probe_degree_bound=1, poly_degree_bound=0)
        assert report.ok


class TestDerivedBracket:
    def test_zero_delta_gives_zero(self, borel):
        setup, xq, valg, _ = borel
        delta0 = MCDelta.of(valg, SuperVectorField.zero(setup.chart))
        args = basis_elements(setup, valg)[:2]
        assert derived_bracket(valg, delta0, args).value.is_zero()

    def test_unary_on_zero(self, borel):
        setup, xq, valg, delta = borel
        zero = LInftyElement(SuperVectorField.zero(setup.chart), 0)
        assert derived_bracket(valg, delta, [zero]).value.is_zero()

    def test_unary_linear_part_of_closure_defect(self, borel):
        # the unary bracket sees only the linear part -4b (as field: +4b on the
        # top generator under the encoding sign conventions)
        setup, xq, valg, delta = borel
        enc = encode_deformation(setup, phi_pair(setup, 0, 1))
        out = derived_bracket(valg, delta, [enc])
        ne = setup.chart.n_even
        assert out.value == SuperVectorField(setup.chart, {((), (0, 1), ne + 2): Fraction(4)})

    def test_rejects_non_summand_argument(self, borel):
        setup, xq, valg, delta = borel
        ne = setup.chart.n_even
        bad = LInftyElement(SuperVectorField(setup.chart, {((), (2,), ne): Fraction(1)}), 0)
        with pytest.raises(NotInAbelianPart):
            derived_bracket(valg, delta, [bad])

    def test_koszul_symmetry(self, borel):
        setup, xq, valg, delta = borel
        basis = basis_elements(setup, valg)
        rng = random.Random(5)
        for _ in range(40):
            args = [rng.choice(basis) for _ in range(3)]
            degs = tuple(a.degree for a in args)
            base_val = derived_bracket(valg, delta, args).value
            images = tuple(rng.sample((1, 2, 3), 3))
            tau = Permutation(images)
            permuted = [args[tau(i) - 1] for i in (1, 2, 3)]
            assert derived_bracket(valg, delta, permuted).value == base_val.scale(
                koszul_sign(tau, degs)
            )


class TestMCResidual:
    def test_zero_candidate(self, borel):
        setup, xq, valg, delta = borel
        zero = LInftyElement(SuperVectorField.zero(setup.chart), 0)
        assert mc_residual(valg, delta, zero).value.is_zero()

    def test_sl2_borel_locus(self, borel):
        setup, xq, valg, delta = borel
        ne = setup.chart.n_even
        for a, b in [(2, 1), (-2, 1), (0, 0), (1, 1), (2, -2)]:
            cand = LInftyElement(-encode_deformation(setup, phi_pair(setup, a, b)).value, 0)
            res = mc_residual(valg, delta, cand)
            expected = SuperVectorField(
                setup.chart, {((), (0, 1), ne + 2): Fraction(a * a - 4 * b)}
            )
            assert res.value == expected

    def test_agrees_with_twisted_projection(self, borel):
        setup, xq, valg, delta = borel
        for a, b in [(1, 1), (2, 1), (-1, 2)]:
            cand = LInftyElement(-encode_deformation(setup, phi_pair(setup, a, b)).value, 0)
            assert mc_residual(valg, delta, cand).value == twisted_projection(
                valg, cand, delta.delta
            )

    def test_cap_exceeded_is_typed(self, borel):
        setup, xq, valg, delta = borel
        cand = LInftyElement(-encode_deformation(setup, phi_pair(setup, 1, 1)).value, 0)
        with pytest.raises(SeriesCapExceeded):
            mc_residual(valg, delta, cand, cap=1)


class TestTwistedProjection:
    def test_zero_twist_is_projection(self, borel):
        setup, xq, valg, delta = borel
        zero = LInftyElement(SuperVectorField.zero(setup.chart), 0)
        v = SuperVectorField(setup.chart, {((), (0,), setup.chart.n_even + 2): Fraction(3)})
        assert twisted_projection(valg, zero, v) == valg.project(v)

    def test_quadratic_vertical_example(self):
        # chart with one base and one normal even coordinate, no odd frame
        data = AlgebroidData.build(2, 0)
        setup = SplitSetup.build(data, 1, 1, 0)
        valg = setup.valgebra()
        v = SuperVectorField(setup.chart, {((0, 2), (), 1): Fraction(1)})  # y^2 d/dy
        for c in (1, 2, -3):
            phi = LInftyElement(
                SuperVectorField(setup.chart, {((0, 0), (), 1): Fraction(c)}), 0
            )
            out = twisted_projection(valg, phi, v)
            assert out == SuperVectorField(setup.chart, {((0, 0), (), 1): Fraction(c * c)})

    def test_linear_normal_dependence_two_terms(self):
        data = AlgebroidData.build(2, 0)
        setup = SplitSetup.build(data, 1, 1, 0)
        valg = setup.valgebra()
        v = SuperVectorField(setup.chart, {((0, 1), (), 1): Fraction(1)})  # y d/dy
        phi = LInftyElement(SuperVectorField(setup.chart, {((0, 0), (), 1): Fraction(5)}), 0)
        # series ends after the first bracket: second derivative of a linear
        # coefficient vanishes, leaving [[y d/dy, 5 d/dy]] = -5 d/dy
        assert twisted_projection(valg, phi, v) == SuperVectorField(
            setup.chart, {((0, 0), (), 1): Fraction(-5)}
        )


class TestExtendedBracket:
    def test_empty_arity_flat(self, borel):
        setup, xq, valg, delta = borel
        out = extended_bracket(valg, delta, [])
        assert out.is_zero()

    def test_unary_with_zero_delta(self, borel):
        setup, xq, valg, _ = borel
        delta0 = MCDelta.of(valg, SuperVectorField.zero(setup.chart))
        v = xq  # any degree-1 field
        x = ExtElement.of(valg, v, SuperVectorField.zero(setup.chart))
        out = extended_bracket(valg, delta0, [x])
        assert out.v.is_zero()
        assert out.a == valg.project(v)

    def test_binary_on_shifted_fields(self, borel):
        setup, xq, valg, delta = borel
        ne = setup.chart.n_even
        v = SuperVectorField(setup.chart, {((), (0,), 0 + 0): Fraction(0)})
        # v = xi1 d/dxi3 (degree 0), w = d/dxi1 (degree -1)
        v = SuperVectorField(setup.chart, {((), (0,), ne + 2): Fraction(1)})
        w = SuperVectorField(setup.chart, {((), (), ne + 0): Fraction(1)})
        x = ExtElement.of(valg, v, SuperVectorField.zero(setup.chart))
        y = ExtElement.of(valg, w, SuperVectorField.zero(setup.chart))
        out = extended_bracket(valg, delta, [x, y])
        assert out.v == super_commutator(v, w)  # (-1)^{|v|} with |v| = 0

    def test_simultaneous_decomposition(self, borel):
        # MC residual of (v[1], a) decomposes into the structure residual and
        # the twisted projection of the summed field
        setup, xq, valg, delta = borel
        rng = random.Random(3)
        kernel = [f for f in setup.kernel_basis(0) if f.degree() == 1]
        for _ in range(10):
            v = SuperVectorField.zero(setup.chart)
            for f in rng.sample(kernel, 3):
                v = v + f.scale(Fraction(rng.randint(-2, 2)))
            a = encode_deformation(
                setup, phi_pair(setup, rng.randint(-2, 2), rng.randint(-2, 2))
            ).value
            elt = ExtElement.of(valg, v, a)
            total = ExtElement(
                SuperVectorField.zero(setup.chart), SuperVectorField.zero(setup.chart), None
            )
            acc_v = SuperVectorField.zero(setup.chart)
            acc_a = SuperVectorField.zero(setup.chart)
            import math

            for k in range(1, 8):
                mk = extended_bracket(valg, delta, [elt] * k)
                acc_v = acc_v + mk.v.scale(Fraction(1, math.factorial(k)))
                acc_a = acc_a + mk.a.scale(Fraction(1, math.factorial(k)))
            expected_v = -(
                super_commutator(delta.delta, v)
                + super_commutator(v, v).scale(Fraction(1, 2))
            )
            expected_a = twisted_projection(
                valg, LInftyElement(a, 0), delta.delta + v
            )
            assert acc_v == expected_v
            assert acc_a == expected_a

    def test_mixed_pattern_vanishes(self, borel):
        # two shifted fields plus a summand argument must give zero
        setup, xq, valg, delta = borel
        ne = setup.chart.n_even
        v = SuperVectorField(setup.chart, {((), (0,), ne + 2): Fraction(1)})
        a = SuperVectorField(setup.chart, {((), (0,), ne + 2): Fraction(1)})
        x = ExtElement.of(valg, v, SuperVectorField.zero(setup.chart))
        y = ExtElement.of(valg, v, SuperVectorField.zero(setup.chart))
        z = ExtElement.of(valg, SuperVectorField.zero(setup.chart), a)
        out = extended_bracket(valg, delta, [x, y, z])
        assert out.v.is_zero() and out.a.is_zero()


def dgla_package(delta_field):
    """The shifted packaging of the field algebra with differential [[delta, .]]."""
    chart = delta_field.chart

    def m(args):
        args = list(args)
        if len(args) == 1:
            (x,) = args
            return LInftyElement(-super_commutator(delta_field, x.value), None)
        if len(args) == 2:
            x, y = args
            vx = x.value
            if vx.is_zero():
                return LInftyElement(SuperVectorField.zero(chart), None)
            sign = -1 if vx.degree() % 2 else 1
            return LInftyElement(super_commutator(vx, y.value).scale(sign), None)
        return LInftyElement(SuperVectorField.zero(chart), None)

    return m


class TestLInftyAxioms:
    def test_unary_square_zero_on_basis(self, borel):
        setup, xq, valg, delta = borel
        m = lambda args: derived_bracket(valg, delta, args)
        probes = [(b,) for b in basis_elements(setup, valg)]
        report = check_linfty_axioms(m, setup.chart, 1, probes)
        assert report.ok and report.checked == len(probes)

    @pytest.mark.parametrize(
        "data,sub_rank",
        [
            (SL2, 2),
            (AlgebroidData.build(0, 3, structure={(1, 2, 0): 1}), 1),
            (AlgebroidData.build(0, 4, structure={(2, 3, 0): 1}), 2),
        ],
    )
    def test_derived_structure_all_arities(self, data, sub_rank):
        setup = SplitSetup.build(data, 0, 0, sub_rank)
        xq = build_xq(data, setup.chart)
        valg = setup.valgebra()
        delta = MCDelta.of(valg, xq)
        basis = basis_elements(setup, valg)
        m = lambda args: derived_bracket(valg, delta, args)
        probes = [(b,) for b in basis] + [(a, b) for a in basis for b in basis]
        rng = random.Random(11)
        for n in (3, 4):
            for _ in range(40):
                probes.append(tuple(rng.choice(basis) for _ in range(n)))
        report = check_linfty_axioms(m, setup.chart, 4, probes)
        assert report.ok

    def test_dgla_packaging_reduces_to_jacobi(self, borel):
        # m_k = 0 for k >= 3: the arity-3 identity is the graded Jacobi identity
        setup, xq, valg, delta = borel
        m = dgla_package(xq)
        fields = []
        rng = random.Random(4)
        monos = setup.kernel_basis(0) + setup.abelian_basis(-1) + setup.abelian_basis(0)
        for _ in range(12):
            f = rng.choice(monos)
            d = f.degree()
            fields.append(LInftyElement(f, (d if d is not None else 0) - 1))
        probes = []
        for n in (1, 2, 3):
            for _ in range(25):
                probes.append(tuple(rng.choice(fields) for _ in range(n)))
        report = check_linfty_axioms(m, setup.chart, 3, probes)
        assert report.ok

    def test_detects_broken_structure(self, borel):
        # the DGLA packaging with the shift sign dropped from the binary map
        # violates the arity-2 identity on odd-degree fields
        setup, xq, valg, delta = borel
        chart = setup.chart

        def broken(args):
            args = list(args)
            if len(args) == 1:
                return LInftyElement(-super_commutator(xq, args[0].value), None)
            if len(args) == 2:
                x, y = args
                if x.value.is_zero():
                    return LInftyElement(SuperVectorField.zero(chart), None)
                return LInftyElement(super_commutator(x.value, y.value), None)
            return LInftyElement(SuperVectorField.zero(chart), None)

        rng = random.Random(4)
        monos = (
            setup.kernel_basis(0)
            + setup.abelian_basis(-1)
            + setup.abelian_basis(0)
            + setup.abelian_basis(1)
        )
        fields = [
            LInftyElement(f, (0 if f.degree() is None else f.degree()) - 1) for f in monos
        ]
        probes = [
            tuple(rng.choice(fields) for _ in range(n)) for n in (1, 2, 3) for _ in range(40)
        ]
        report = check_linfty_axioms(broken, setup.chart, 3, probes)
        assert not report.ok


class TestTwisting:
    def test_round_trip_on_known_locus(self, borel):
        # with base (2,1) the twisted locus is (2+a)^2 = 4(1+b)
        setup, xq, valg, delta = borel
        base = phi_pair(setup, 2, 1)
        enc_base = encode_deformation(setup, base).value
        for a in range(-2, 3):
            for b in range(-2, 3):
                cand = phi_pair(setup, a, b)
                enc_cand = encode_deformation(setup, cand).value
                twisted = twisted_projection(
                    valg, LInftyElement(-(enc_base + enc_cand), 0), delta.delta
                )
                summed = mc_residual(
                    valg, delta, LInftyElement(-(enc_base + enc_cand), 0)
                )
                assert twisted == summed.value
                assert twisted.is_zero() == ((2 + a) ** 2 == 4 * (1 + b))
