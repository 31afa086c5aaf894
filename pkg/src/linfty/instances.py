"""Instance file schema: versioned JSON with exact rational polynomial terms.

Every polynomial is a list of terms; a term carries an exponent vector over
the even coordinates and an integer numerator/denominator pair.  Parsing
errors point at the offending field path.  Parse -> serialize -> parse is
the identity on canonical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .algebroid import AlgebroidData, PolyDict
from .applications import FoliationSetup, HomomorphismData
from .subalgebroid import DeformationPair, SplitSetup

FORMAT_VERSION = 1

KINDS = ("algebroid", "subalgebroid", "lie_algebra", "subalgebra", "foliation", "homomorphism")


class InstanceError(ValueError):
    """Malformed instance file; the message carries the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Options:
    series_cap: int = 64
    truncate: int | None = None
    probes: int = 100
    seed: int = 0


@dataclass
class InstanceFile:
    kind: str
    payload: dict[str, Any]
    options: Options = field(default_factory=Options)
    source: str = "<memory>"


def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise InstanceError(path, message)


def _parse_terms(obj: Any, n_even: int, path: str) -> PolyDict:
    _expect(isinstance(obj, list), path, "expected a list of terms")
    poly: PolyDict = {}
    for idx, term in enumerate(obj):
        tpath = f"{path}[{idx}]"
        _expect(isinstance(term, dict), tpath, "expected a term object")
        exps = term.get("exponents", [])
        _expect(isinstance(exps, list), f"{tpath}.exponents", "expected a list")
        _expect(
            len(exps) == n_even, f"{tpath}.exponents", f"expected {n_even} exponents"
        )
        _expect(all(isinstance(e, int) and e >= 0 for e in exps), f"{tpath}.exponents", "exponents must be nonnegative integers")
        numer = term.get("numer")
        denom = term.get("denom", 1)
        _expect(isinstance(numer, int), f"{tpath}.numer", "expected an integer")
        _expect(isinstance(denom, int), f"{tpath}.denom", "expected an integer")
        _expect(denom > 0, f"{tpath}.denom", "denominator must be positive")
        c = Fraction(numer, denom)
        if c != 0:
            key = tuple(exps)
            poly[key] = poly.get(key, Fraction(0)) + c
    return {k: v for k, v in poly.items() if v != 0}


def _parse_structure(obj: Any, n_even: int, rank: int, path: str):
    _expect(isinstance(obj, list), path, "expected a list")
    out = {}
    for idx, entry in enumerate(obj):
        epath = f"{path}[{idx}]"
        _expect(isinstance(entry, dict), epath, "expected an object")
        i, j, k = entry.get("i"), entry.get("j"), entry.get("k")
        for name, v in (("i", i), ("j", j), ("k", k)):
            _expect(isinstance(v, int), f"{epath}.{name}", "expected an integer")
            _expect(0 <= v < rank, f"{epath}.{name}", f"index out of range 0..{rank-1}")
        _expect(i != j, epath, "diagonal structure entries must be omitted")
        poly = _parse_terms(entry.get("terms", []), n_even, f"{epath}.terms")
        if poly:
            key = (i, j, k)
            merged = dict(out.get(key, {}))
            for e, c in poly.items():
                merged[e] = merged.get(e, Fraction(0)) + c
            out[key] = merged
    return out


def _parse_anchor(obj: Any, n_even: int, rank: int, path: str):
    _expect(isinstance(obj, list), path, "expected a list")
    out = {}
    for idx, entry in enumerate(obj):
        epath = f"{path}[{idx}]"
        _expect(isinstance(entry, dict), epath, "expected an object")
        i, t = entry.get("i"), entry.get("t")
        _expect(isinstance(i, int) and 0 <= i < rank, f"{epath}.i", f"index out of range 0..{rank-1}")
        _expect(isinstance(t, int) and 0 <= t < n_even, f"{epath}.t", f"index out of range 0..{n_even-1}")
        poly = _parse_terms(entry.get("terms", []), n_even, f"{epath}.terms")
        if poly:
            out[(i, t)] = poly
    return out


def _parse_algebroid(obj: Mapping, path: str) -> AlgebroidData:
    base_dim = obj.get("base_dim")
    rank = obj.get("fiber_rank")
    _expect(isinstance(base_dim, int) and base_dim >= 0, f"{path}.base_dim", "expected a nonnegative integer")
    _expect(isinstance(rank, int) and rank >= 0, f"{path}.fiber_rank", "expected a nonnegative integer")
    structure = _parse_structure(obj.get("structure", []), base_dim, rank, f"{path}.structure")
    anchor = _parse_anchor(obj.get("anchor", []), base_dim, rank, f"{path}.anchor")
    try:
        return AlgebroidData.build(base_dim, rank, structure, anchor)
    except ValueError as exc:
        raise InstanceError(path, str(exc)) from exc


def _parse_candidate_pair(obj: Mapping, setup: SplitSetup, path: str) -> DeformationPair:
    sigma = {}
    for idx, entry in enumerate(obj.get("sigma", [])):
        epath = f"{path}.sigma[{idx}]"
        k = entry.get("k")
        _expect(isinstance(k, int), f"{epath}.k", "expected an integer")
        sigma[k] = _parse_terms(entry.get("terms", []), setup.base_dim, f"{epath}.terms")
    phi = {}
    for idx, entry in enumerate(obj.get("phi", [])):
        epath = f"{path}.phi[{idx}]"
        i, j = entry.get("i"), entry.get("j")
        _expect(isinstance(i, int), f"{epath}.i", "expected an integer")
        _expect(isinstance(j, int), f"{epath}.j", "expected an integer")
        phi[(i, j)] = _parse_terms(entry.get("terms", []), setup.base_dim, f"{epath}.terms")
    try:
        return DeformationPair.build(setup, sigma=sigma, phi=phi)
    except ValueError as exc:
        raise InstanceError(path, str(exc)) from exc


def parse_instance(path_or_obj) -> InstanceFile:
    """Load and schema-check an instance file (or an already-parsed object)."""
    if isinstance(path_or_obj, (str, Path)):
        source = str(path_or_obj)
        try:
            text = Path(path_or_obj).read_text()
        except OSError as exc:
            raise InstanceError(source, f"cannot read file: {exc}") from exc
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError(source, f"invalid JSON: {exc}") from exc
    else:
        source = "<memory>"
        obj = path_or_obj
    _expect(isinstance(obj, dict), "$", "expected a JSON object")
    version = obj.get("format_version")
    _expect(version == FORMAT_VERSION, "$.format_version", f"expected {FORMAT_VERSION}")
    kind = obj.get("kind")
    _expect(kind in KINDS, "$.kind", f"expected one of {KINDS}")

    opts_obj = obj.get("options", {})
    _expect(isinstance(opts_obj, dict), "$.options", "expected an object")
    options = Options()
    if "series_cap" in opts_obj:
        _expect(isinstance(opts_obj["series_cap"], int) and opts_obj["series_cap"] > 0, "$.options.series_cap", "expected a positive integer")
        options.series_cap = opts_obj["series_cap"]
    if "truncate" in opts_obj and opts_obj["truncate"] is not None:
        _expect(isinstance(opts_obj["truncate"], int) and opts_obj["truncate"] >= 0, "$.options.truncate", "expected a nonnegative integer")
        options.truncate = opts_obj["truncate"]
    if "probes" in opts_obj:
        _expect(isinstance(opts_obj["probes"], int) and opts_obj["probes"] >= 0, "$.options.probes", "expected a nonnegative integer")
        options.probes = opts_obj["probes"]
    if "seed" in opts_obj:
        _expect(isinstance(opts_obj["seed"], int), "$.options.seed", "expected an integer")
        options.seed = opts_obj["seed"]

    instance = InstanceFile(kind=kind, payload={}, options=options, source=source)

    if kind in ("algebroid", "lie_algebra"):
        if kind == "lie_algebra":
            dim = obj.get("dimension")
            _expect(isinstance(dim, int) and dim >= 0, "$.dimension", "expected a nonnegative integer")
            shaped = {"base_dim": 0, "fiber_rank": dim, "structure": obj.get("structure", []), "anchor": []}
        else:
            shaped = obj
        data = _parse_algebroid(shaped, "$")
        instance.payload["data"] = data
        if "candidate" in obj:
            cand = obj["candidate"]
            _expect(isinstance(cand, dict), "$.candidate", "expected an object")
            shaped_c = {
                "base_dim": data.base_dim,
                "fiber_rank": data.fiber_rank,
                "structure": cand.get("structure", []),
                "anchor": cand.get("anchor", []),
            }
            instance.payload["candidate"] = _parse_algebroid(shaped_c, "$.candidate")
        return instance

    if kind in ("subalgebroid", "subalgebra"):
        if kind == "subalgebra":
            dim = obj.get("dimension")
            _expect(isinstance(dim, int) and dim >= 0, "$.dimension", "expected a nonnegative integer")
            sub_rank = obj.get("sub_rank")
            _expect(isinstance(sub_rank, int) and 0 <= sub_rank <= dim, "$.sub_rank", "sub rank out of range")
            shaped = {"base_dim": 0, "fiber_rank": dim, "structure": obj.get("structure", []), "anchor": []}
            p, q, l = 0, 0, sub_rank
        else:
            p = obj.get("base_dim")
            q = obj.get("normal_rank")
            l = obj.get("sub_rank")
            rank = obj.get("fiber_rank")
            _expect(isinstance(p, int) and p >= 0, "$.base_dim", "expected a nonnegative integer")
            _expect(isinstance(q, int) and q >= 0, "$.normal_rank", "expected a nonnegative integer")
            _expect(isinstance(rank, int) and rank >= 0, "$.fiber_rank", "expected a nonnegative integer")
            _expect(isinstance(l, int) and 0 <= l <= rank, "$.sub_rank", "sub rank out of range")
            shaped = {"base_dim": p + q, "fiber_rank": rank, "structure": obj.get("structure", []), "anchor": obj.get("anchor", [])}
        data = _parse_algebroid(shaped, "$")
        try:
            setup = SplitSetup.build(data, p, q, l)
        except ValueError as exc:
            raise InstanceError("$", str(exc)) from exc
        instance.payload["data"] = data
        instance.payload["setup"] = setup
        instance.payload["candidate"] = _parse_candidate_pair(obj.get("candidate", {}), setup, "$.candidate")
        if "base" in obj:
            instance.payload["base"] = _parse_candidate_pair(obj["base"], setup, "$.base")
        if "candidate_xq" in obj:
            shaped_c = {
                "base_dim": data.base_dim,
                "fiber_rank": data.fiber_rank,
                "structure": obj["candidate_xq"].get("structure", []),
                "anchor": obj["candidate_xq"].get("anchor", []),
            }
            instance.payload["candidate_xq"] = _parse_algebroid(shaped_c, "$.candidate_xq")
        return instance

    if kind == "foliation":
        base_dim = obj.get("base_dim")
        sub_rank = obj.get("sub_rank")
        _expect(isinstance(base_dim, int) and base_dim > 0, "$.base_dim", "expected a positive integer")
        _expect(isinstance(sub_rank, int) and 0 <= sub_rank <= base_dim, "$.sub_rank", "sub rank out of range")
        frames_obj = obj.get("frames")
        _expect(isinstance(frames_obj, list) and len(frames_obj) == base_dim, "$.frames", f"expected {base_dim} frame fields")
        frames = []
        for fi, entries in enumerate(frames_obj):
            fpath = f"$.frames[{fi}]"
            _expect(isinstance(entries, list), fpath, "expected a list of components")
            comp = {}
            for ci, entry in enumerate(entries):
                epath = f"{fpath}[{ci}]"
                t = entry.get("t")
                _expect(isinstance(t, int) and 0 <= t < base_dim, f"{epath}.t", "component index out of range")
                comp[t] = _parse_terms(entry.get("terms", []), base_dim, f"{epath}.terms")
            frames.append(comp)
        try:
            fol = FoliationSetup.build(base_dim, sub_rank, frames)
        except ValueError as exc:
            raise InstanceError("$.frames", str(exc)) from exc
        psi = {}
        for idx, entry in enumerate(obj.get("psi", [])):
            epath = f"$.psi[{idx}]"
            i, j = entry.get("i"), entry.get("j")
            _expect(isinstance(i, int), f"{epath}.i", "expected an integer")
            _expect(isinstance(j, int), f"{epath}.j", "expected an integer")
            psi[(i, j)] = _parse_terms(entry.get("terms", []), base_dim, f"{epath}.terms")
        instance.payload["foliation"] = fol
        instance.payload["psi"] = psi
        return instance

    if kind == "homomorphism":
        source_data = _parse_algebroid(obj.get("source", {}), "$.source")
        target_data = _parse_algebroid(obj.get("target", {}), "$.target")
        bundle = {}
        for idx, entry in enumerate(obj.get("bundle_map", [])):
            epath = f"$.bundle_map[{idx}]"
            i, j = entry.get("i"), entry.get("j")
            _expect(isinstance(i, int), f"{epath}.i", "expected an integer")
            _expect(isinstance(j, int), f"{epath}.j", "expected an integer")
            bundle[(i, j)] = _parse_terms(entry.get("terms", []), source_data.base_dim, f"{epath}.terms")
        base_map = {}
        for idx, entry in enumerate(obj.get("base_map", [])):
            epath = f"$.base_map[{idx}]"
            k = entry.get("k")
            _expect(isinstance(k, int), f"{epath}.k", "expected an integer")
            base_map[k] = _parse_terms(entry.get("terms", []), source_data.base_dim, f"{epath}.terms")
        try:
            h = HomomorphismData.build(source_data, target_data, bundle, base_map)
        except ValueError as exc:
            raise InstanceError("$", str(exc)) from exc
        instance.payload["homomorphism"] = h
        cand = obj.get("candidate", {})
        cand_bundle = {}
        for idx, entry in enumerate(cand.get("phi", [])):
            epath = f"$.candidate.phi[{idx}]"
            i, j = entry.get("i"), entry.get("j")
            _expect(isinstance(i, int), f"{epath}.i", "expected an integer")
            _expect(isinstance(j, int), f"{epath}.j", "expected an integer")
            cand_bundle[(i, j)] = _parse_terms(entry.get("terms", []), source_data.base_dim, f"{epath}.terms")
        cand_base = {}
        for idx, entry in enumerate(cand.get("sigma", [])):
            epath = f"$.candidate.sigma[{idx}]"
            k = entry.get("k")
            _expect(isinstance(k, int), f"{epath}.k", "expected an integer")
            cand_base[k] = _parse_terms(entry.get("terms", []), source_data.base_dim, f"{epath}.terms")
        instance.payload["candidate_bundle"] = cand_bundle
        instance.payload["candidate_base"] = cand_base
        if "candidate_xq" in obj:
            cxq = obj["candidate_xq"]
            _expect(isinstance(cxq, dict), "$.candidate_xq", "expected an object")
            pert = {}
            for which, data in (("source", source_data), ("target", target_data)):
                if which in cxq:
                    shaped = {
                        "base_dim": data.base_dim,
                        "fiber_rank": data.fiber_rank,
                        "structure": cxq[which].get("structure", []),
                        "anchor": cxq[which].get("anchor", []),
                    }
                    pert[which] = _parse_algebroid(shaped, f"$.candidate_xq.{which}")
            instance.payload["candidate_xq"] = pert
        return instance

    raise InstanceError("$.kind", f"unsupported kind {kind!r}")


# ---------------------------------------------------------------------
# serialization (canonical form)
# ---------------------------------------------------------------------
def _terms_obj(poly: PolyDict) -> list[dict]:
    out = []
    for exps in sorted(poly):
        c = poly[exps]
        out.append({"exponents": list(exps), "numer": c.numerator, "denom": c.denominator})
    return out


def serialize_algebroid(data: AlgebroidData, kind: str = "algebroid", options: Options | None = None) -> dict:
    obj: dict[str, Any] = {"format_version": FORMAT_VERSION, "kind": kind}
    if kind == "lie_algebra":
        obj["dimension"] = data.fiber_rank
    else:
        obj["base_dim"] = data.base_dim
        obj["fiber_rank"] = data.fiber_rank
    obj["structure"] = [
        {"i": i, "j": j, "k": k, "terms": _terms_obj(poly)}
        for (i, j, k), poly in sorted(data.structure.items())
    ]
    if kind != "lie_algebra":
        obj["anchor"] = [
            {"i": i, "t": t, "terms": _terms_obj(poly)}
            for (i, t), poly in sorted(data.anchor.items())
        ]
    if options is not None:
        obj["options"] = {"series_cap": options.series_cap, "probes": options.probes, "seed": options.seed}
        if options.truncate is not None:
            obj["options"]["truncate"] = options.truncate
    return obj


def serialize_pair(d: DeformationPair) -> dict:
    return {
        "sigma": [{"k": k, "terms": _terms_obj(poly)} for k, poly in sorted(d.sigma.items())],
        "phi": [
            {"i": i, "j": j, "terms": _terms_obj(poly)} for (i, j), poly in sorted(d.phi.items())
        ],
    }


def _tensors_obj(data: AlgebroidData) -> dict:
    return {
        "structure": [
            {"i": i, "j": j, "k": k, "terms": _terms_obj(poly)}
            for (i, j, k), poly in sorted(data.structure.items())
        ],
        "anchor": [
            {"i": i, "t": t, "terms": _terms_obj(poly)}
            for (i, t), poly in sorted(data.anchor.items())
        ],
    }


def serialize_instance(inst: InstanceFile) -> dict:
    """Canonical JSON object of a parsed instance (all kinds)."""
    obj: dict[str, Any] = {"format_version": FORMAT_VERSION, "kind": inst.kind}
    if inst.kind in ("algebroid", "lie_algebra"):
        data: AlgebroidData = inst.payload["data"]
        obj.update(serialize_algebroid(data, kind=inst.kind))
        if "candidate" in inst.payload:
            obj["candidate"] = _tensors_obj(inst.payload["candidate"])
        return obj
    if inst.kind in ("subalgebroid", "subalgebra"):
        setup: SplitSetup = inst.payload["setup"]
        data = inst.payload["data"]
        if inst.kind == "subalgebra":
            obj["dimension"] = data.fiber_rank
            obj["sub_rank"] = setup.sub_rank
            obj["structure"] = _tensors_obj(data)["structure"]
        else:
            obj["base_dim"] = setup.base_dim
            obj["normal_rank"] = setup.normal_rank
            obj["sub_rank"] = setup.sub_rank
            obj["fiber_rank"] = data.fiber_rank
            obj.update(_tensors_obj(data))
        obj["candidate"] = serialize_pair(inst.payload["candidate"])
        if "base" in inst.payload:
            obj["base"] = serialize_pair(inst.payload["base"])
        if "candidate_xq" in inst.payload:
            obj["candidate_xq"] = _tensors_obj(inst.payload["candidate_xq"])
        return obj
    if inst.kind == "foliation":
        fol: FoliationSetup = inst.payload["foliation"]
        obj["base_dim"] = fol.base_dim
        obj["sub_rank"] = fol.sub_rank
        obj["frames"] = [
            [
                {"t": t, "terms": _terms_obj(comp)}
                for t, comp in enumerate(frame)
                if comp
            ]
            for frame in fol.frames
        ]
        obj["psi"] = [
            {"i": i, "j": j, "terms": _terms_obj(poly)}
            for (i, j), poly in sorted(inst.payload["psi"].items())
            if poly
        ]
        return obj
    if inst.kind == "homomorphism":
        h: HomomorphismData = inst.payload["homomorphism"]
        for field_name, data in (("source", h.source), ("target", h.target)):
            block = {"base_dim": data.base_dim, "fiber_rank": data.fiber_rank}
            block.update(_tensors_obj(data))
            obj[field_name] = block
        obj["bundle_map"] = [
            {"i": i, "j": j, "terms": _terms_obj(poly)}
            for (i, j), poly in sorted(h.bundle_map.items())
        ]
        obj["base_map"] = [
            {"k": k, "terms": _terms_obj(poly)} for k, poly in sorted(h.base_map.items())
        ]
        obj["candidate"] = {
            "sigma": [
                {"k": k, "terms": _terms_obj(poly)}
                for k, poly in sorted(inst.payload["candidate_base"].items())
                if poly
            ],
            "phi": [
                {"i": i, "j": j, "terms": _terms_obj(poly)}
                for (i, j), poly in sorted(inst.payload["candidate_bundle"].items())
                if poly
            ],
        }
        if "candidate_xq" in inst.payload:
            obj["candidate_xq"] = {
                which: _tensors_obj(pert)
                for which, pert in sorted(inst.payload["candidate_xq"].items())
            }
        return obj
    raise InstanceError("$.kind", f"cannot serialize kind {inst.kind!r}")


def write_instance(obj: dict, path: str | Path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------
# bundled fixtures / presets
# ---------------------------------------------------------------------
def fixture_path(name: str) -> Path:
    """Path of a bundled fixture; name may omit the .json suffix."""
    if not name.endswith(".json"):
        name = name + ".json"
    base = resources.files("linfty").joinpath("fixtures")
    candidate = base.joinpath(name)
    if not candidate.is_file():
        raise InstanceError(name, "unknown bundled fixture")
    return Path(str(candidate))


def resolve_instance(spec: str) -> Path:
    """Resolve a CLI argument: a filesystem path or a bundled preset name."""
    p = Path(spec)
    if p.exists():
        return p
    try:
        return fixture_path(spec)
    except InstanceError:
        raise InstanceError(spec, "not a file and not a bundled preset")
