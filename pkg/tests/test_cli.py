import json

import pytest

from linfty.cli import main
from linfty.instances import (
    FORMAT_VERSION,
    InstanceError,
    Options,
    fixture_path,
    parse_instance,
    resolve_instance,
    serialize_algebroid,
    write_instance,
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParsing:
    def test_bundled_sl2_round_trips(self, tmp_path):
        inst = parse_instance(fixture_path("sl2"))
        assert inst.kind == "lie_algebra"
        data = inst.payload["data"]
        assert len(data.structure) == 3
        out = tmp_path / "copy.json"
        write_instance(serialize_algebroid(data, kind="lie_algebra"), out)
        again = parse_instance(out)
        assert again.payload["data"].structure == data.structure

    def test_empty_structure_is_abelian(self):
        inst = parse_instance(
            {"format_version": FORMAT_VERSION, "kind": "lie_algebra", "dimension": 2}
        )
        assert inst.payload["data"].structure == {}

    def test_zero_denominator_rejected_with_path(self):
        obj = {
            "format_version": FORMAT_VERSION,
            "kind": "lie_algebra",
            "dimension": 2,
            "structure": [
                {"i": 0, "j": 1, "k": 0, "terms": [{"exponents": [], "numer": 1, "denom": 0}]}
            ],
        }
        with pytest.raises(InstanceError) as err:
            parse_instance(obj)
        assert "denom" in str(err.value)

    def test_index_out_of_range_localized(self):
        obj = {
            "format_version": FORMAT_VERSION,
            "kind": "lie_algebra",
            "dimension": 2,
            "structure": [{"i": 0, "j": 5, "k": 0, "terms": []}],
        }
        with pytest.raises(InstanceError) as err:
            parse_instance(obj)
        assert "structure[0].j" in str(err.value)

    def test_bad_format_version(self):
        with pytest.raises(InstanceError):
            parse_instance({"format_version": 99, "kind": "lie_algebra", "dimension": 1})

    def test_unknown_kind(self):
        with pytest.raises(InstanceError):
            parse_instance({"format_version": FORMAT_VERSION, "kind": "nope"})

    def test_options_parsed(self):
        inst = parse_instance(
            {
                "format_version": FORMAT_VERSION,
                "kind": "lie_algebra",
                "dimension": 1,
                "options": {"series_cap": 9, "probes": 3, "seed": 4, "truncate": 2},
            }
        )
        assert inst.options == Options(series_cap=9, truncate=2, probes=3, seed=4)

    def test_resolve_preset_and_missing(self, tmp_path):
        assert resolve_instance("sl2").name == "sl2.json"
        with pytest.raises(InstanceError):
            resolve_instance(str(tmp_path / "missing.json"))

    @pytest.mark.parametrize(
        "name",
        [
            "sl2", "heisenberg-3", "abelian-2", "abelian-3", "abelian-4", "sl2-sum",
            "non-jacobi-3", "tangent-r1", "tangent-r2", "sl2-borel",
            "tangent-r1-origin", "foliation-r3", "hom-sl2-id",
        ],
    )
    def test_parse_serialize_parse_identity(self, name):
        from linfty.instances import serialize_instance

        first = parse_instance(fixture_path(name))
        serialized = serialize_instance(first)
        second = parse_instance(serialized)
        assert serialize_instance(second) == serialized


class TestCommands:
    @pytest.mark.parametrize(
        "name", ["sl2", "heisenberg-3", "abelian-2", "abelian-3", "abelian-4", "sl2-sum", "tangent-r1", "tangent-r2"]
    )
    def test_validate_passes_fixture_library(self, capsys, name):
        code, out, _ = run_cli(capsys, "validate", name)
        assert code == 0 and "pass" in out

    def test_validate_fails_non_jacobi(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "non-jacobi-3")
        assert code == 1
        assert "(0, 1, 2, 2)" in out and "-1" in out

    def test_subalg_check_borel_grid_points(self, capsys):
        code, out, _ = run_cli(capsys, "subalg-check", "sl2-borel", "--phi", "2", "1")
        assert code == 0 and "mc-zero" in out
        code, out, _ = run_cli(capsys, "subalg-check", "sl2-borel", "--phi", "1", "1")
        assert code == 1 and "mc-nonzero" in out and "-3" in out

    def test_mc_check_with_candidate(self, capsys, tmp_path):
        obj = {
            "format_version": FORMAT_VERSION,
            "kind": "lie_algebra",
            "dimension": 3,
            "structure": [],
            "candidate": {
                "structure": [
                    {"i": 0, "j": 1, "k": 2, "terms": [{"exponents": [], "numer": 1, "denom": 1}]},
                    {"i": 0, "j": 2, "k": 0, "terms": [{"exponents": [], "numer": 1, "denom": 1}]},
                ]
            },
        }
        path = tmp_path / "cand.json"
        write_instance(obj, path)
        code, out, _ = run_cli(capsys, "mc-check", str(path))
        assert code == 1 and "mc-nonzero" in out
        obj["candidate"]["structure"] = obj["candidate"]["structure"][:1]
        write_instance(obj, path)
        code, out, _ = run_cli(capsys, "mc-check", str(path))
        assert code == 0 and "mc-zero" in out

    def test_simultaneous_subalgebra(self, capsys, tmp_path):
        obj = {
            "format_version": FORMAT_VERSION,
            "kind": "subalgebra",
            "dimension": 2,
            "sub_rank": 1,
            "structure": [],
            "candidate": {"phi": []},
            "candidate_xq": {
                "structure": [
                    {"i": 0, "j": 1, "k": 0, "terms": [{"exponents": [], "numer": 1, "denom": 1}]}
                ]
            },
        }
        path = tmp_path / "sim.json"
        write_instance(obj, path)
        code, out, _ = run_cli(capsys, "simultaneous", str(path))
        assert code == 0 and "mc-zero" in out

    def test_simultaneous_homomorphism(self, capsys, tmp_path):
        ab = {"base_dim": 0, "fiber_rank": 2, "structure": [], "anchor": []}
        pert = {
            "structure": [
                {"i": 0, "j": 1, "k": 0, "terms": [{"exponents": [], "numer": 1, "denom": 1}]}
            ]
        }
        obj = {
            "format_version": FORMAT_VERSION,
            "kind": "homomorphism",
            "source": ab,
            "target": ab,
            "bundle_map": [
                {"i": 0, "j": 0, "terms": [{"exponents": [], "numer": 1, "denom": 1}]},
                {"i": 1, "j": 1, "terms": [{"exponents": [], "numer": 1, "denom": 1}]},
            ],
            "base_map": [],
            "candidate": {"sigma": [], "phi": []},
            "candidate_xq": {"source": pert, "target": pert},
        }
        path = tmp_path / "hom.json"
        write_instance(obj, path)
        code, out, _ = run_cli(capsys, "simultaneous", str(path))
        assert code == 0 and "mc-zero" in out
        obj["candidate_xq"] = {"source": pert}
        write_instance(obj, path)
        code, out, _ = run_cli(capsys, "simultaneous", str(path))
        assert code == 1 and "mc-nonzero" in out

    def test_cohomology_sl2(self, capsys):
        code, out, _ = run_cli(capsys, "cohomology", "sl2", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["details"]["dimensions"] == {"H^0": 0, "H^1": 0, "H^2": 0, "H^3": 0}

    def test_cohomology_borel(self, capsys):
        code, out, _ = run_cli(capsys, "cohomology", "sl2-borel", "--json")
        payload = json.loads(out)
        assert payload["details"]["dimensions"] == {"H^0": 0, "H^1": 0, "H^2": 0}

    def test_cohomology_polynomial_needs_truncate(self, capsys):
        code, _, err = run_cli(capsys, "cohomology", "tangent-r1")
        assert code == 2 and "truncation" in err
        code, out, _ = run_cli(capsys, "cohomology", "tangent-r1", "--truncate", "2")
        assert code == 0

    def test_axioms_command(self, capsys):
        code, out, _ = run_cli(capsys, "axioms", "sl2-borel", "--probes", "10", "--seed", "1")
        assert code == 0 and "pass" in out

    def test_brackets_command(self, capsys):
        code, out, _ = run_cli(capsys, "brackets", "sl2-borel", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["oracle_agreement"] is True
        assert payload["details"]["nonzero_brackets"]

    @pytest.mark.parametrize(
        "name",
        ["sl2", "non-jacobi-3", "sl2-borel", "foliation-r3", "hom-sl2-id", "tangent-r1-origin"],
    )
    def test_oracle_compare_always_agrees(self, capsys, name):
        code, out, _ = run_cli(capsys, "oracle-compare", name)
        assert code != 3
        assert "DISAGREE" not in out

    def test_oracle_compare_exit_codes(self, capsys):
        code, _, _ = run_cli(capsys, "oracle-compare", "sl2")
        assert code == 0
        code, _, _ = run_cli(capsys, "oracle-compare", "non-jacobi-3")
        assert code == 1


class TestReportContract:
    def test_json_reports_are_byte_stable(self, capsys):
        _, first, _ = run_cli(capsys, "subalg-check", "sl2-borel", "--phi", "1", "1", "--json")
        _, second, _ = run_cli(capsys, "subalg-check", "sl2-borel", "--phi", "1", "1", "--json")
        assert first == second

    def test_axioms_deterministic_given_seed(self, capsys):
        _, first, _ = run_cli(capsys, "axioms", "sl2-borel", "--probes", "5", "--seed", "7", "--json")
        _, second, _ = run_cli(capsys, "axioms", "sl2-borel", "--probes", "5", "--seed", "7", "--json")
        assert first == second

    def test_json_omits_timing(self, capsys):
        _, out, _ = run_cli(capsys, "validate", "sl2", "--json")
        payload = json.loads(out)
        assert "timing" not in json.dumps(payload)

    def test_residual_present_on_nonzero(self, capsys):
        _, out, _ = run_cli(capsys, "subalg-check", "sl2-borel", "--phi", "2", "2", "--json")
        payload = json.loads(out)
        assert payload["residual_terms"] == ["-4 xi1 xi2 d/dxi3"]
        assert payload["oracle_agreement"] is True

    def test_exit_codes(self, capsys):
        assert run_cli(capsys, "validate", "sl2")[0] == 0
        assert run_cli(capsys, "validate", "non-jacobi-3")[0] == 1
        assert run_cli(capsys, "validate", "no-such-instance")[0] == 2

    def test_bad_phi_arity_is_input_error(self, capsys):
        code, _, err = run_cli(capsys, "subalg-check", "sl2-borel", "--phi", "1")
        assert code == 2 and "--phi" in err

    def test_unsupported_command_kind_pair(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "brackets", "sl2")
        assert code == 2
