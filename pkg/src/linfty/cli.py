"""Command-line interface: validation, MC checks, cohomology, oracle cross-runs.

Every command produces a deterministic report; ``--json`` emits the
machine-readable form (timing omitted so reports are byte-stable).  Exit
codes: 0 pass/mc-zero, 1 mathematical failure, 2 input error, 3 internal
inconsistency (the two independent routes disagreed; must never happen).
"""
from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any

from .algebroid import (
    AlgebroidData,
    build_xq,
    dgla_cohomology,
    validate_algebroid,
)
from .applications import (
    FoliationSetup,
    candidate_pair,
    foliation_infinitesimal,
    graph_setup,
    homomorphism_residual,
    simultaneous_homomorphism,
)
from .instances import InstanceError, InstanceFile, parse_instance, resolve_instance
from .subalgebroid import (
    DeformationPair,
    SplitSetup,
    decode_form,
    encode_form,
    explicit_structure_maps,
    graph_closure_oracle,
    m1_cohomology,
    subalgebroid_mc_residual,
    simultaneous_residual,
    tangency_oracle,
)
from .superfield import SuperVectorField, render_field, super_commutator
from .valgebra import (
    LInftyElement,
    MCDelta,
    SeriesCapExceeded,
    check_linfty_axioms,
    derived_bracket,
)

CONVENTIONS = (
    "candidate-sign=-1",
    "form-shift-sign=(-1)^(k(k-1)/2)",
    "m3-signs=bracket-matched",
)

EXIT_PASS = 0
EXIT_MATH_FAIL = 1
EXIT_INPUT_ERROR = 2
EXIT_INCONSISTENT = 3


@dataclass
class Report:
    command: str
    verdict: str
    residual_terms: list[str] | None = None
    oracle_agreement: bool | None = None
    timing_ms: float = 0.0
    conventions: tuple[str, ...] = CONVENTIONS
    details: dict[str, Any] = dc_field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.oracle_agreement is False:
            return EXIT_INCONSISTENT
        if self.verdict in ("pass", "mc-zero"):
            return EXIT_PASS
        return EXIT_MATH_FAIL

    def to_json_obj(self) -> dict:
        obj = {
            "command": self.command,
            "verdict": self.verdict,
            "conventions": list(self.conventions),
            "details": self.details,
        }
        if self.residual_terms is not None:
            obj["residual_terms"] = self.residual_terms
        if self.oracle_agreement is not None:
            obj["oracle_agreement"] = self.oracle_agreement
        return obj

    def render_text(self) -> str:
        lines = [f"command:  {self.command}", f"verdict:  {self.verdict}"]
        if self.residual_terms is not None:
            if self.residual_terms:
                lines.append("residual:")
                lines.extend(f"  {t}" for t in self.residual_terms)
            else:
                lines.append("residual: 0")
        if self.oracle_agreement is not None:
            lines.append(f"oracle:   {'agree' if self.oracle_agreement else 'DISAGREE'}")
        for key in sorted(self.details):
            lines.append(f"{key}: {self.details[key]}")
        lines.append(f"time:     {self.timing_ms:.1f} ms")
        lines.append(f"conventions: {', '.join(self.conventions)}")
        return "\n".join(lines)


def _residual_terms(value: SuperVectorField) -> list[str]:
    if value.is_zero():
        return []
    return [
        render_field(SuperVectorField(value.chart, {key: c}))
        for key, c in sorted(value.terms.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1]))
    ]


def _data_sum(a: AlgebroidData, b: AlgebroidData) -> AlgebroidData:
    if (a.base_dim, a.fiber_rank) != (b.base_dim, b.fiber_rank):
        raise ValueError("summands have different dimensions")
    structure: dict = {k: dict(v) for k, v in a.structure.items()}
    for k, v in b.structure.items():
        merged = structure.get(k, {})
        for e, c in v.items():
            merged[e] = merged.get(e, Fraction(0)) + c
        structure[k] = merged
    anchor: dict = {k: dict(v) for k, v in a.anchor.items()}
    for k, v in b.anchor.items():
        merged = anchor.get(k, {})
        for e, c in v.items():
            merged[e] = merged.get(e, Fraction(0)) + c
        anchor[k] = merged
    return AlgebroidData.build(a.base_dim, a.fiber_rank, structure, anchor)


def _phi_override(setup: SplitSetup, values: list[str]) -> DeformationPair:
    """Fill the bundle-map entries in row-major frame order from CLI numbers."""
    slots = [(i, j) for i in setup.sub_indices for j in setup.comp_indices]
    if len(values) != len(slots):
        raise InstanceError("--phi", f"expected {len(slots)} entries, got {len(values)}")
    phi = {}
    for slot, text in zip(slots, values):
        try:
            c = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError("--phi", f"bad rational {text!r}: {exc}") from exc
        if c != 0:
            phi[slot] = c
    return DeformationPair.build(setup, phi=phi)


# ---------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------
def _cmd_validate(inst: InstanceFile, args) -> Report:
    if inst.kind in ("algebroid", "lie_algebra"):
        rep = validate_algebroid(inst.payload["data"])
        agreement = rep.ok == rep.classical_ok
        details: dict[str, Any] = {}
        if rep.anchor_defects:
            details["anchor_defects"] = {str(k): v for k, v in sorted(rep.anchor_defects.items())}
        if rep.jacobi_defects:
            details["jacobi_defects"] = {str(k): v for k, v in sorted(rep.jacobi_defects.items())}
        return Report(
            "validate",
            "pass" if rep.ok else "fail",
            residual_terms=rep.square_terms or [],
            oracle_agreement=agreement,
            details=details,
        )
    if inst.kind in ("subalgebroid", "subalgebra"):
        setup: SplitSetup = inst.payload["setup"]
        rep = validate_algebroid(inst.payload["data"], setup.chart)
        xq = build_xq(inst.payload["data"], setup.chart)
        p_ok = setup.project(xq).is_zero()
        oracle = graph_closure_oracle(setup, DeformationPair.zero())
        return Report(
            "validate",
            "pass" if (rep.ok and p_ok) else "fail",
            residual_terms=rep.square_terms + ([] if p_ok else _residual_terms(setup.project(xq))),
            oracle_agreement=(rep.ok and p_ok) == (rep.classical_ok and oracle.accepts),
            details={"ambient_valid": rep.ok, "subbundle_closed": p_ok},
        )
    if inst.kind == "foliation":
        fol: FoliationSetup = inst.payload["foliation"]
        ok = fol.is_integrable()
        rep = validate_algebroid(fol.algebroid, fol.setup.chart)
        return Report(
            "validate",
            "pass" if (ok and rep.ok) else "fail",
            oracle_agreement=rep.ok == rep.classical_ok,
            details={"integrable": ok},
        )
    if inst.kind == "homomorphism":
        gs = graph_setup(inst.payload["homomorphism"])
        res = subalgebroid_mc_residual(gs.setup, gs.xq, gs.base_pair, cap=inst.options.series_cap)
        oracle = graph_closure_oracle(gs.setup, gs.base_pair)
        return Report(
            "validate",
            "pass" if res.value.is_zero() else "fail",
            residual_terms=_residual_terms(res.value),
            oracle_agreement=res.value.is_zero() == oracle.accepts,
        )
    raise InstanceError("$.kind", f"validate does not support kind {inst.kind!r}")


def _cmd_mc_check(inst: InstanceFile, args) -> Report:
    if inst.kind in ("algebroid", "lie_algebra"):
        data: AlgebroidData = inst.payload["data"]
        cand = inst.payload.get("candidate")
        if cand is None:
            raise InstanceError("$.candidate", "mc-check needs a candidate block")
        chart = data.plain_chart()
        residual = super_commutator(build_xq(data, chart), build_xq(cand, chart)) + (
            super_commutator(build_xq(cand, chart), build_xq(cand, chart)).scale(Fraction(1, 2))
        )
        summed_ok = validate_algebroid(_data_sum(data, cand)).classical_ok
        zero = residual.is_zero()
        return Report(
            "mc-check",
            "mc-zero" if zero else "mc-nonzero",
            residual_terms=_residual_terms(residual),
            oracle_agreement=zero == summed_ok,
        )
    return _cmd_subalg_check(inst, args, command="mc-check")


def _cmd_subalg_check(inst: InstanceFile, args, command: str = "subalg-check") -> Report:
    cap = args.cap if args.cap is not None else inst.options.series_cap
    if inst.kind in ("subalgebroid", "subalgebra"):
        setup: SplitSetup = inst.payload["setup"]
        xq = build_xq(inst.payload["data"], setup.chart)
        cand: DeformationPair = inst.payload["candidate"]
        if getattr(args, "phi", None):
            cand = _phi_override(setup, args.phi)
        base: DeformationPair | None = inst.payload.get("base")
        pair = base.add(cand) if base is not None else cand
        residual = subalgebroid_mc_residual(setup, xq, pair, cap=cap)
        oracle = graph_closure_oracle(setup, pair)
        zero = residual.value.is_zero()
        return Report(
            command,
            "mc-zero" if zero else "mc-nonzero",
            residual_terms=_residual_terms(residual.value),
            oracle_agreement=zero == oracle.accepts,
        )
    if inst.kind == "foliation":
        fol: FoliationSetup = inst.payload["foliation"]
        psi = inst.payload["psi"]
        pair = DeformationPair.build(fol.setup, phi=psi)
        xq = build_xq(fol.algebroid, fol.setup.chart)
        residual = subalgebroid_mc_residual(fol.setup, xq, pair, cap=cap)
        oracle = graph_closure_oracle(fol.setup, pair)
        zero = residual.value.is_zero()
        return Report(
            command,
            "mc-zero" if zero else "mc-nonzero",
            residual_terms=_residual_terms(residual.value),
            oracle_agreement=zero == oracle.accepts,
        )
    if inst.kind == "homomorphism":
        gs = graph_setup(inst.payload["homomorphism"])
        cand = candidate_pair(gs, inst.payload["candidate_bundle"], inst.payload["candidate_base"])
        residual = homomorphism_residual(gs, cand, cap=cap)
        oracle = graph_closure_oracle(gs.setup, gs.base_pair.add(cand))
        zero = residual.value.is_zero()
        return Report(
            command,
            "mc-zero" if zero else "mc-nonzero",
            residual_terms=_residual_terms(residual.value),
            oracle_agreement=zero == oracle.accepts,
        )
    raise InstanceError("$.kind", f"{command} does not support kind {inst.kind!r}")


def _cmd_simultaneous(inst: InstanceFile, args) -> Report:
    cap = args.cap if args.cap is not None else inst.options.series_cap
    if inst.kind in ("subalgebroid", "subalgebra"):
        setup: SplitSetup = inst.payload["setup"]
        data: AlgebroidData = inst.payload["data"]
        xq = build_xq(data, setup.chart)
        base = inst.payload.get("base") or DeformationPair.zero()
        cand_def: DeformationPair = inst.payload["candidate"]
        cand_data = inst.payload.get("candidate_xq")
        cand_xq = (
            build_xq(cand_data, setup.chart) if cand_data is not None else SuperVectorField.zero(setup.chart)
        )
        v_res, a_res = simultaneous_residual(setup, xq, base, cand_xq, cand_def, cap=cap)
        zero = v_res.is_zero() and a_res.is_zero()
        summed = _data_sum(data, cand_data) if cand_data is not None else data
        summed_ok = validate_algebroid(summed, setup.chart).ok
        oracle_ok = summed_ok and graph_closure_oracle(
            SplitSetup.build(summed, setup.base_dim, setup.normal_rank, setup.sub_rank),
            base.add(cand_def),
        ).accepts
        return Report(
            "simultaneous",
            "mc-zero" if zero else "mc-nonzero",
            residual_terms=_residual_terms(v_res) + _residual_terms(a_res),
            oracle_agreement=zero == oracle_ok,
            details={
                "structure_residual_zero": v_res.is_zero(),
                "graph_residual_zero": a_res.is_zero(),
            },
        )
    if inst.kind == "homomorphism":
        h = inst.payload["homomorphism"]
        pert = inst.payload.get("candidate_xq", {})
        v_res, a_res = simultaneous_homomorphism(
            h,
            pert.get("source"),
            pert.get("target"),
            bundle_map=inst.payload["candidate_bundle"],
            base_map=inst.payload["candidate_base"],
            cap=cap,
        )
        zero = v_res.is_zero() and a_res.is_zero()
        gs = graph_setup(h)
        from .applications import block_sum_data

        summed_source = (
            _data_sum(h.source, pert["source"]) if "source" in pert else h.source
        )
        summed_target = (
            _data_sum(h.target, pert["target"]) if "target" in pert else h.target
        )
        summed = block_sum_data(summed_source, summed_target)
        cand = candidate_pair(gs, inst.payload["candidate_bundle"], inst.payload["candidate_base"])
        oracle_ok = validate_algebroid(summed, gs.setup.chart).ok and graph_closure_oracle(
            SplitSetup.build(summed, gs.setup.base_dim, gs.setup.normal_rank, gs.setup.sub_rank),
            gs.base_pair.add(cand),
        ).accepts
        return Report(
            "simultaneous",
            "mc-zero" if zero else "mc-nonzero",
            residual_terms=_residual_terms(v_res) + _residual_terms(a_res),
            oracle_agreement=zero == oracle_ok,
            details={
                "structure_residual_zero": v_res.is_zero(),
                "graph_residual_zero": a_res.is_zero(),
            },
        )
    raise InstanceError("$.kind", f"simultaneous does not support kind {inst.kind!r}")


def _cmd_cohomology(inst: InstanceFile, args) -> Report:
    truncate = args.truncate if args.truncate is not None else inst.options.truncate
    details: dict[str, Any] = {}
    if inst.kind in ("algebroid", "lie_algebra"):
        data: AlgebroidData = inst.payload["data"]
        degrees = [args.degree] if args.degree is not None else list(range(data.fiber_rank + 1))
        dims = {}
        truncated = False
        for q in degrees:
            res = dgla_cohomology(data, q, truncate=truncate)
            dims[f"H^{q}"] = res.dimension
            truncated = truncated or res.truncated
        details["dimensions"] = dims
        if truncated:
            details["truncated_at"] = truncate
        return Report("cohomology", "pass", details=details)
    if inst.kind in ("subalgebroid", "subalgebra", "foliation"):
        if inst.kind == "foliation":
            fol: FoliationSetup = inst.payload["foliation"]
            setup, data = fol.setup, fol.algebroid
        else:
            setup, data = inst.payload["setup"], inst.payload["data"]
        xq = build_xq(data, setup.chart)
        top = setup.sub_rank + (1 if setup.normal_rank else 0)
        degrees = [args.degree] if args.degree is not None else list(range(top + 1))
        dims = {}
        truncated = False
        for n in degrees:
            res = m1_cohomology(setup, xq, n - 1, truncate=truncate)
            dims[f"H^{n}"] = res.dimension
            truncated = truncated or res.truncated
        details["dimensions"] = dims
        if truncated:
            details["truncated_at"] = truncate
        return Report("cohomology", "pass", details=details)
    raise InstanceError("$.kind", f"cohomology does not support kind {inst.kind!r}")


def _split_of(inst: InstanceFile) -> tuple[SplitSetup, AlgebroidData]:
    if inst.kind in ("subalgebroid", "subalgebra"):
        return inst.payload["setup"], inst.payload["data"]
    if inst.kind == "foliation":
        fol: FoliationSetup = inst.payload["foliation"]
        return fol.setup, fol.algebroid
    if inst.kind == "homomorphism":
        gs = graph_setup(inst.payload["homomorphism"])
        return gs.setup, gs.sum_data
    raise InstanceError("$.kind", f"command needs a split instance, got {inst.kind!r}")


def _cmd_brackets(inst: InstanceFile, args) -> Report:
    setup, data = _split_of(inst)
    xq = build_xq(data, setup.chart)
    valg = setup.valgebra()
    delta = MCDelta.of(valg, xq)
    basis: list[LInftyElement] = []
    for d in range(-1, setup.sub_rank + 1):
        basis.extend(LInftyElement.of(valg, b) for b in setup.abelian_basis(d))
    table = {}
    agreement: bool | None = None
    fixed_base = setup.normal_rank == 0
    if fixed_base:
        agreement = True
    for arity in (1, 2, 3):
        for combo in itertools.product(range(len(basis)), repeat=arity):
            argsel = [basis[i] for i in combo]
            value = derived_bracket(valg, delta, argsel)
            if not value.value.is_zero():
                key = f"m{arity}{list(combo)}"
                table[key] = render_field(value.value)
            if fixed_base:
                try:
                    forms = [
                        decode_form(setup, el, el.degree + 1) for el in argsel
                    ]
                    explicit = encode_form(explicit_structure_maps(setup, arity, forms))
                    if explicit.value != value.value:
                        agreement = False
                except ValueError:
                    pass
    return Report(
        "brackets",
        "pass",
        oracle_agreement=agreement,
        details={"nonzero_brackets": table, "basis_size": len(basis)},
    )


def _cmd_axioms(inst: InstanceFile, args) -> Report:
    probes_count = args.probes if args.probes is not None else inst.options.probes
    seed = args.seed if args.seed is not None else inst.options.seed
    setup, data = _split_of(inst)
    xq = build_xq(data, setup.chart)
    valg = setup.valgebra()
    delta = MCDelta.of(valg, xq)
    basis = []
    for d in range(-1, setup.sub_rank + 1):
        basis.extend(LInftyElement.of(valg, b) for b in setup.abelian_basis(d))
    probes: list[tuple[LInftyElement, ...]] = [(b,) for b in basis]
    probes += [(a, b) for a in basis for b in basis]
    rng = random.Random(seed)
    for n in (3, 4):
        for _ in range(probes_count):
            probes.append(tuple(rng.choice(basis) for _ in range(n)))
    rep = check_linfty_axioms(
        lambda a: derived_bracket(valg, delta, a), setup.chart, 4, probes
    )
    return Report(
        "axioms",
        "pass" if rep.ok else "fail",
        details={"checked": rep.checked, "failures": rep.failures[:3]},
    )


def _cmd_oracle_compare(inst: InstanceFile, args) -> Report:
    cap = args.cap if args.cap is not None else inst.options.series_cap
    if inst.kind in ("algebroid", "lie_algebra"):
        rep = validate_algebroid(inst.payload["data"])
        agree = rep.ok == rep.classical_ok
        details: dict[str, Any] = {"homological": rep.ok, "classical": rep.classical_ok}
        cand = inst.payload.get("candidate")
        if cand is not None:
            data = inst.payload["data"]
            chart = data.plain_chart()
            residual = super_commutator(build_xq(data, chart), build_xq(cand, chart)) + (
                super_commutator(build_xq(cand, chart), build_xq(cand, chart)).scale(Fraction(1, 2))
            )
            summed_ok = validate_algebroid(_data_sum(data, cand)).classical_ok
            details["mc_zero"] = residual.is_zero()
            details["summed_classical"] = summed_ok
            agree = agree and (residual.is_zero() == summed_ok)
        return Report(
            "oracle-compare",
            "pass" if (rep.ok and agree) else "fail",
            oracle_agreement=agree,
            details=details,
        )
    if inst.kind == "foliation":
        fol: FoliationSetup = inst.payload["foliation"]
        res = foliation_infinitesimal(fol, inst.payload["psi"])
        pair = DeformationPair.build(fol.setup, phi=inst.payload["psi"])
        xq = build_xq(fol.algebroid, fol.setup.chart)
        mc = subalgebroid_mc_residual(fol.setup, xq, pair, cap=cap)
        oracle = graph_closure_oracle(fol.setup, pair)
        agree = res.agree and (mc.value.is_zero() == oracle.accepts)
        return Report(
            "oracle-compare",
            "pass" if (mc.value.is_zero() and agree) else "fail",
            oracle_agreement=agree,
            details={
                "infinitesimal_closed": res.closed,
                "mc_zero": mc.value.is_zero(),
                "graph_oracle": oracle.accepts,
            },
        )
    # split kinds: MC residual vs graph closure, plus the tangency cross-check
    if inst.kind in ("subalgebroid", "subalgebra"):
        setup: SplitSetup = inst.payload["setup"]
        data = inst.payload["data"]
        pair = inst.payload["candidate"]
        if getattr(args, "phi", None):
            pair = _phi_override(setup, args.phi)
        base = inst.payload.get("base")
        if base is not None:
            pair = base.add(pair)
    elif inst.kind == "homomorphism":
        gs = graph_setup(inst.payload["homomorphism"])
        setup, data = gs.setup, gs.sum_data
        pair = gs.base_pair.add(
            candidate_pair(gs, inst.payload["candidate_bundle"], inst.payload["candidate_base"])
        )
    else:
        raise InstanceError("$.kind", f"oracle-compare does not support kind {inst.kind!r}")
    xq = build_xq(data, setup.chart)
    mc = subalgebroid_mc_residual(setup, xq, pair, cap=cap)
    oracle = graph_closure_oracle(setup, pair)
    tan = tangency_oracle(setup, xq, pair, cap=cap)
    agree = (mc.value.is_zero() == oracle.accepts) and tan.agree and (tan.series == mc.value)
    return Report(
        "oracle-compare",
        "pass" if (mc.value.is_zero() and agree) else "fail",
        residual_terms=_residual_terms(mc.value),
        oracle_agreement=agree,
        details={
            "mc_zero": mc.value.is_zero(),
            "graph_oracle": oracle.accepts,
            "tangency_routes_agree": tan.agree,
        },
    )


COMMANDS = {
    "validate": _cmd_validate,
    "mc-check": _cmd_mc_check,
    "subalg-check": _cmd_subalg_check,
    "simultaneous": _cmd_simultaneous,
    "cohomology": _cmd_cohomology,
    "brackets": _cmd_brackets,
    "oracle-compare": _cmd_oracle_compare,
    "axioms": _cmd_axioms,
}


def run_command(cmd: str, inst: InstanceFile, args=None) -> Report:
    """Dispatch a command on a parsed instance; deterministic given the seed."""
    if cmd not in COMMANDS:
        raise InstanceError("command", f"unsupported command {cmd!r}")
    if args is None:
        args = argparse.Namespace(cap=None, truncate=None, probes=None, seed=None, phi=None, degree=None)
    start = time.perf_counter()
    report = COMMANDS[cmd](inst, args)
    report.timing_ms = (time.perf_counter() - start) * 1000.0
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linfty",
        description="Exact Maurer-Cartan checks for algebroid, subalgebroid and homomorphism deformations.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("instance", help="instance file path or bundled preset name (e.g. sl2, sl2-borel, abelian-3)")
    parser.add_argument("--cap", type=int, default=None, help="bracket series cap (default 64)")
    parser.add_argument("--truncate", type=int, default=None, help="cohomology polynomial truncation degree")
    parser.add_argument("--probes", type=int, default=None, help="random probe count for the axiom checker")
    parser.add_argument("--seed", type=int, default=None, help="random seed for probe generation")
    parser.add_argument("--degree", type=int, default=None, help="restrict cohomology to a single degree")
    parser.add_argument("--phi", nargs="*", default=None, help="override bundle-map entries (row-major rationals)")
    parser.add_argument("--json", action="store_true", help="machine-readable report on stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = resolve_instance(args.instance)
        inst = parse_instance(path)
        report = run_command(args.command, inst, args)
    except InstanceError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except SeriesCapExceeded as exc:
        print(f"series cap exceeded: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except ValueError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if args.json:
        print(json.dumps(report.to_json_obj(), sort_keys=True, indent=1))
    else:
        print(report.render_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
