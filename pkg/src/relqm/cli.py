"""Batch front end: scenario file in, CSV or JSON out.

Usage::

    relqm prob --scenario bell.json --mode incoherent --outcome 0
    relqm entropy --scenario product.json
    relqm schmidt --scenario bell.json --format json --out bell_schmidt.json
    relqm evolve --scenario evolution.json
    relqm pathint --scenario pathint-coupled.json

Exit status is 0 on success, 1 when the scenario (or a flag) is malformed,
and 2 when the library refuses the request on numerical grounds; the
library's message is printed unchanged in that case.

Every number written is the repr of a float returned by the library. JSON
output repeats the scenario (with any ``--hbar`` override applied) and adds
a ``results`` key, so feeding it back in reproduces the same results.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import jsonschema
import numpy as np

from . import dynamics, entangle, pathint, prob, relcore
from .errors import RelqmError
from .relcore import DEFAULT_ENTROPY_TOL

COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
GRID = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": COMPLEX}}
POTENTIAL = {
    "type": "object",
    "required": ["name"],
    "properties": {
        "name": {"enum": sorted(pathint.POTENTIALS)},
        "params": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}
INTERACTION = {
    "type": "object",
    "required": ["name"],
    "properties": {
        "name": {"enum": ["none"] + sorted(pathint.INTERACTIONS)},
        "params": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}
POSITIVE = {"type": "number", "exclusiveMinimum": 0}
COUNT = {"type": "integer", "minimum": 0}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["Matrix", "Evolution", "PathIntegral"]},
        "system_dim": {"type": "integer", "minimum": 1},
        "apparatus_dim": {"type": "integer", "minimum": 1},
        "matrix": GRID,
        "target_matrix": GRID,
        "norm_mode": {"enum": ["coherent", "incoherent", "raw"]},
        "hamiltonian_s": GRID,
        "hamiltonian_a": GRID,
        "hbar": POSITIVE,
        "times": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "lattice": {
            "type": "object",
            "required": ["x_min", "x_max", "n_points", "n_slices", "dt", "start_s", "start_a"],
            "properties": {
                "x_min": {"type": "number"},
                "x_max": {"type": "number"},
                "n_points": {"type": "integer", "minimum": 2},
                "n_slices": {"type": "integer", "minimum": 1},
                "dt": POSITIVE,
                "start_s": COUNT,
                "start_a": COUNT,
                "apparatus": {
                    "type": "object",
                    "required": ["x_min", "x_max", "n_points"],
                    "properties": {
                        "x_min": {"type": "number"},
                        "x_max": {"type": "number"},
                        "n_points": {"type": "integer", "minimum": 2},
                    },
                    "additionalProperties": False,
                },
                "probes": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["start", "end"],
                        "properties": {
                            "start": COUNT,
                            "end": COUNT,
                            "normalize": {"type": "boolean"},
                        },
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
        "action": {
            "type": "object",
            "properties": {
                "mass_s": POSITIVE,
                "mass_a": POSITIVE,
                "potential_s": POTENTIAL,
                "potential_a": POTENTIAL,
                "interaction": INTERACTION,
                "scheme": {"enum": ["split", "action"]},
            },
            "additionalProperties": False,
        },
        "results": {},
    },
    "additionalProperties": False,
    "allOf": [
        {
            "if": {"properties": {"kind": {"enum": ["Matrix", "Evolution"]}}},
            "then": {"required": ["system_dim", "apparatus_dim", "matrix"]},
        },
        {
            "if": {"properties": {"kind": {"const": "Evolution"}}},
            "then": {"required": ["hamiltonian_s", "hamiltonian_a", "times"]},
        },
        {
            "if": {"properties": {"kind": {"const": "PathIntegral"}}},
            "then": {"required": ["lattice", "action"]},
        },
    ],
}


class ScenarioError(Exception):
    """Malformed scenario or flags; reported with exit status 1."""


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _where(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def load_scenario(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{path}: field {_where(e.absolute_path)}: {e.message}" for e in errors]
        raise ScenarioError("\n".join(lines))
    _check_dims(data, path)
    return data


def _grid_shape(grid) -> tuple[int, int]:
    widths = {len(row) for row in grid}
    if len(widths) != 1:
        raise ValueError("rows have different lengths")
    return len(grid), widths.pop()


def _check_dims(sc: dict, path: str) -> None:
    def fail(field, msg):
        raise ScenarioError(f"{path}: field {field}: {msg}")

    def shape_of(field):
        try:
            return _grid_shape(sc[field])
        except ValueError as exc:
            fail(field, str(exc))

    if "matrix" in sc:
        want = (sc.get("system_dim"), sc.get("apparatus_dim"))
        got = shape_of("matrix")
        if got != want:
            fail("matrix", f"shape {got[0]}x{got[1]} does not match system_dim x apparatus_dim {want[0]}x{want[1]}")
    if "target_matrix" in sc:
        got = shape_of("target_matrix")
        if got[0] != sc.get("system_dim"):
            fail("target_matrix", f"has {got[0]} rows, expected system_dim {sc.get('system_dim')}")
    for field, dim_key in (("hamiltonian_s", "system_dim"), ("hamiltonian_a", "apparatus_dim")):
        if field in sc:
            n = sc.get(dim_key)
            if shape_of(field) != (n, n):
                fail(field, f"must be {n}x{n} to match {dim_key}")
    lat = sc.get("lattice")
    if lat is not None:
        n_app = lat.get("apparatus", lat)["n_points"]
        if lat["start_s"] >= lat["n_points"]:
            fail("lattice/start_s", f"{lat['start_s']} is not below n_points {lat['n_points']}")
        if lat["start_a"] >= n_app:
            fail("lattice/start_a", f"{lat['start_a']} is not below apparatus n_points {n_app}")
        for k, probe in enumerate(lat.get("probes", [])):
            for key in ("start", "end"):
                if probe[key] >= lat["n_points"]:
                    fail(f"lattice/probes/{k}/{key}", f"{probe[key]} is not below n_points {lat['n_points']}")


def _complex_grid(grid) -> np.ndarray:
    a = np.array(grid, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _pairs(a) -> list:
    a = np.asarray(a)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def relational_of(sc: dict, key: str = "matrix"):
    n = sc["system_dim"]
    m = _grid_shape(sc[key])[1] if key != "matrix" else sc["apparatus_dim"]
    return relcore.build_relational(n, m, _complex_grid(sc[key]), sc.get("norm_mode", "raw"))


def hamiltonians_of(sc: dict):
    hbar = sc.get("hbar", 1.0)
    hs = dynamics.HermitianOperator(_complex_grid(sc["hamiltonian_s"]), hbar)
    ha = dynamics.HermitianOperator(_complex_grid(sc["hamiltonian_a"]), hbar)
    return hs, ha


def lattices_of(sc: dict):
    lat = sc["lattice"]
    ls = pathint.Lattice1D(lat["x_min"], lat["x_max"], lat["n_points"], lat["n_slices"], lat["dt"])
    app = lat.get("apparatus")
    if app is None:
        return ls, ls
    la = pathint.Lattice1D(app["x_min"], app["x_max"], app["n_points"], lat["n_slices"], lat["dt"])
    return ls, la


def action_of(sc: dict) -> tuple[pathint.ActionSpec, str]:
    act = sc["action"]

    def pot(key):
        spec = act.get(key, {"name": "zero"})
        return pathint.make_potential(spec["name"], spec.get("params", []))

    inter = act.get("interaction", {"name": "none"})
    spec = pathint.ActionSpec(
        mass_s=act.get("mass_s", 1.0),
        mass_a=act.get("mass_a", 1.0),
        v_s=pot("potential_s"),
        v_a=pot("potential_a"),
        v_int=pathint.make_interaction(inter["name"], inter.get("params", [])),
        hbar=sc.get("hbar", 1.0),
    )
    return spec, act.get("scheme", "split")


# ---------------------------------------------------------------------------
# Commands. Each returns (csv header, csv rows, json results).
# ---------------------------------------------------------------------------


def _need(sc: dict, kinds: tuple[str, ...], command: str) -> None:
    if sc["kind"] not in kinds:
        raise ScenarioError(f"field kind: '{command}' needs a scenario of kind {' or '.join(kinds)}, got {sc['kind']}")


def _outcome(args) -> tuple[int, ...]:
    if args.outcome is None:
        raise ScenarioError("--outcome is required for this mode")
    return tuple(args.outcome)


def run_prob(sc: dict, args):
    _need(sc, ("Matrix", "Evolution"), "prob")
    R = relational_of(sc)
    tol = args.tol
    mode = args.mode
    if mode == "coherent":
        out = _outcome(args)
        p = prob.prob_coherent(R, out, tol)
    elif mode == "incoherent":
        out = _outcome(args)
        p = prob.prob_incoherent(R, out)
    elif mode == "joint":
        out = _outcome(args)
        if len(out) != 1 or args.app_index is None:
            raise ScenarioError("joint mode takes one --outcome index and --app-index")
        p = prob.prob_joint(R, out[0], args.app_index)
    else:
        if "target_matrix" not in sc:
            raise ScenarioError("field target_matrix: required for --mode transition")
        out = ()
        p = prob.prob_transition(relational_of(sc, "target_matrix"), R, tol)
    res = {"mode": mode, "outcome": list(out), "p": p}
    if mode == "joint":
        res["app_index"] = args.app_index
    return ["quantity", "value"], [["p", p]], res


def run_entropy(sc: dict, args):
    _need(sc, ("Matrix", "Evolution"), "entropy")
    h = entangle.entropy(relational_of(sc))
    return ["quantity", "value"], [["entropy", h]], {"entropy": h}


def _matrix_rows(label: str, a, prefix=()):
    a = np.asarray(a)
    return [
        [*prefix, label, i, j, float(a[i, j].real), float(a[i, j].imag)]
        for i in range(a.shape[0])
        for j in range(a.shape[1])
    ]


def run_schmidt(sc: dict, args):
    _need(sc, ("Matrix", "Evolution"), "schmidt")
    sd = entangle.schmidt(relational_of(sc))
    rows = _matrix_rows("u", sd.u)
    rows += [["s", k, k, float(s), 0.0] for k, s in enumerate(sd.singulars)]
    rows += _matrix_rows("v", sd.v)
    res = {"u": _pairs(sd.u), "singulars": [float(s) for s in sd.singulars], "v": _pairs(sd.v)}
    return ["factor", "i", "j", "re", "im"], rows, res


def run_evolve(sc: dict, args):
    _need(sc, ("Evolution",), "evolve")
    R0 = relational_of(sc)
    hs, ha = hamiltonians_of(sc)
    rows, steps = [], []
    for t in sorted(sc["times"]):
        Rt = dynamics.evolve_relational(R0, hs, ha, t)
        h = entangle.entropy(Rt)
        ps = [prob.prob_incoherent(Rt, i) for i in range(Rt.n_sys)]
        rows += _matrix_rows("R", Rt.entries, (t,))
        rows.append([t, "entropy", "", "", h, 0.0])
        rows += [[t, "p_incoherent", i, "", p, 0.0] for i, p in enumerate(ps)]
        steps.append({"t": t, "matrix": _pairs(Rt.entries), "entropy": h, "p_incoherent": ps})
    return ["t", "quantity", "i", "j", "re", "im"], rows, {"steps": steps}


def run_pathint(sc: dict, args):
    _need(sc, ("PathIntegral",), "pathint")
    ls, la = lattices_of(sc)
    act, scheme = action_of(sc)
    lat = sc["lattice"]
    K = pathint.kernel_single(ls, act, "system", scheme)
    R = pathint.relational_from_paths(ls, la, act, lat["start_s"], lat["start_a"], scheme)
    rho = pathint.reduced_density_paths(ls, la, act, lat["start_s"], scheme=scheme)
    h = entangle.entropy(R)
    rows = _matrix_rows("kernel", K.values) + _matrix_rows("R", R.entries) + _matrix_rows("rho", rho.entries)
    rows.append(["entropy", "", "", h, 0.0])
    probes = []
    if lat.get("probes"):
        rho4 = pathint.density_tensor_paths(ls, la, act, scheme)
        dx = ls.dx
        for probe in lat["probes"]:
            chi = np.zeros(ls.n_points)
            psi = np.zeros(ls.n_points)
            chi[probe["start"]] = 1.0 / dx
            psi[probe["end"]] = 1.0 / dx
            norm = probe.get("normalize", False)
            p = pathint.transition_prob_paths(rho4, chi, psi, dx, normalize=norm)
            rows.append(["p_transition", probe["start"], probe["end"], p, 0.0])
            probes.append({"start": probe["start"], "end": probe["end"], "normalize": norm, "p": p})
    res = {
        "kernel": _pairs(K.values),
        "matrix": _pairs(R.entries),
        "rho": _pairs(rho.entries),
        "entropy": h,
        "probes": probes,
    }
    return ["quantity", "i", "j", "re", "im"], rows, res


COMMANDS = {
    "prob": run_prob,
    "entropy": run_entropy,
    "schmidt": run_schmidt,
    "evolve": run_evolve,
    "pathint": run_pathint,
}


# ---------------------------------------------------------------------------
# Output and entry point
# ---------------------------------------------------------------------------


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_json(sc: dict, results) -> str:
    doc = {k: v for k, v in sc.items() if k != "results"}
    doc["results"] = results
    return json.dumps(doc, indent=2) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relqm", description="Relational amplitude matrices: batch runner")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (
        ("prob", "outcome probability"),
        ("entropy", "entanglement entropy"),
        ("schmidt", "Schmidt decomposition"),
        ("evolve", "time evolution of the relational matrix"),
        ("pathint", "lattice path sums"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="write here instead of stdout")
        p.add_argument("--hbar", type=float, help="override the scenario's hbar")
        p.add_argument("--tol", type=float, default=DEFAULT_ENTROPY_TOL,
                       help="entropy threshold for the unentangled gate (default %(default)g)")
        if name == "prob":
            p.add_argument("--mode", choices=("coherent", "incoherent", "joint", "transition"),
                           default="incoherent")
            p.add_argument("--outcome", type=lambda s: [int(v) for v in s.split(",")],
                           help="system indices, comma separated")
            p.add_argument("--app-index", type=int, help="apparatus index for --mode joint")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        if args.hbar is not None:
            if not args.hbar > 0:
                raise ScenarioError("--hbar must be positive")
            sc["hbar"] = args.hbar
        header, rows, results = COMMANDS[args.command](sc, args)
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return 1
    except IndexError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return 1
    except RelqmError as exc:
        print(exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        # malformed values the schema cannot express, e.g. an empty interval
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return 1

    text = render_csv(header, rows) if args.format == "csv" else render_json(sc, results)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
