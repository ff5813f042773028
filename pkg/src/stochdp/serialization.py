"""JSON instance files and result documents with exact rational strings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from importlib import resources
from typing import Dict, Mapping, Optional, Sequence

import jsonschema

from .errors import SchemaError, TreeError
from .finance import ConeMarket, LiquidMarket, UtilitySpec, build_consumption, build_superhedge, cone
from .integrand import BellmanSpec, IntegrandSpec, bellman_to_integrand
from .polyfunc import INF, PolyFunc
from .quad import HedgeProblem
from .tree import Policy, ScenarioTree, validate_tree

SCHEMA_VERSION = 1
DECIMAL_DIGITS = 20


def load_schema(name: str) -> dict:
    text = resources.files("stochdp").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


# -- rationals ------------------------------------------------------------------

def parse_rational(v) -> Fraction:
    return Fraction(v) if isinstance(v, int) else Fraction(str(v))


def rational_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def decimal_str(x) -> str:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = DECIMAL_DIGITS
        return str(Decimal(x.numerator) / Decimal(x.denominator))


def value_json(x) -> dict:
    """``{"exact": "p/q", "decimal": ...}``; infinite values have ``exact = null``."""
    if x in (INF, -INF):
        return {"exact": None, "decimal": decimal_str(x)}
    return {"exact": rational_str(x), "decimal": decimal_str(x)}


def vector_json(v) -> list:
    return [rational_str(a) for a in v]


def policy_json(policy: Policy) -> Dict[str, list]:
    return {nid: vector_json(v) for nid, v in policy.values.items()}


def policy_from_json(doc: Mapping[str, Sequence]) -> Policy:
    return Policy({nid: tuple(parse_rational(a) for a in v) for nid, v in doc.items()})


def polyfunc_from_json(doc: Mapping) -> PolyFunc:
    n = doc["n"]
    for key in ("pieces", "ineqs", "eqs"):
        for row in doc.get(key, []):
            if len(row) != n + 1:
                raise SchemaError(f"{key} row {row} should have {n + 1} entries")

    def split(rows):
        return [([parse_rational(a) for a in r[:-1]], parse_rational(r[-1])) for r in rows]
    pieces = split(doc.get("pieces", []))
    if not pieces:
        return PolyFunc.indicator(n, split(doc.get("ineqs", [])), split(doc.get("eqs", [])))
    return PolyFunc.from_pieces(n, pieces, split(doc.get("ineqs", [])), split(doc.get("eqs", [])))


def polyfunc_to_json(f: PolyFunc) -> dict:
    dom = f.domain()
    return {"n": f.n,
            "pieces": [vector_json(list(a) + [c]) for a, c in f.pieces],
            "ineqs": [vector_json(r) for r in dom.ineqs],
            "eqs": [vector_json(r) for r in dom.eqs]}


# -- instances --------------------------------------------------------------------

@dataclass
class Instance:
    tree: ScenarioTree
    model: dict
    doc: dict = field(repr=False, default_factory=dict)

    @property
    def kind(self) -> str:
        return self.model["type"]

    @property
    def options(self) -> dict:
        return self.doc.get("options", {})

    def require(self, *kinds: str):
        if self.kind not in kinds:
            raise SchemaError(f"model type {self.kind!r} not supported here; expected one of {kinds}")

    def _node_vectors(self, key, d, default=None):
        raw = self.doc.get(key)
        if raw is None:
            return default
        out = {}
        for nid, v in raw.items():
            if nid not in self.tree.nodes:
                raise SchemaError(f"{key} given at unknown node {nid!r}")
            if len(v) != d:
                raise SchemaError(f"{key} at node {nid!r} has length {len(v)}, expected {d}")
            out[nid] = tuple(parse_rational(a) for a in v)
        return out

    def _per_node(self, mapping, what, nodes):
        missing = [nid for nid in nodes if nid not in mapping]
        if missing:
            raise SchemaError(f"{what} missing at node {missing[0]!r}")
        unknown = [nid for nid in mapping if nid not in self.tree.nodes]
        if unknown:
            raise SchemaError(f"{what} given at unknown node {unknown[0]!r}")

    def prices(self) -> Dict[str, tuple]:
        raw = self.model["prices"]
        self._per_node(raw, "prices", self.tree.order)
        d = len(raw[self.tree.root])
        return self._node_vectors_from(raw, d, "prices")

    def _node_vectors_from(self, raw, d, what):
        out = {}
        for nid, v in raw.items():
            if len(v) != d:
                raise SchemaError(f"{what} at node {nid!r} has length {len(v)}, expected {d}")
            out[nid] = tuple(parse_rational(a) for a in v)
        return out

    def claim(self) -> Dict[str, Fraction]:
        raw = self.doc.get("claim")
        if raw is None:
            raise SchemaError("this command needs a claim")
        self._per_node(raw, "claim", self.tree.leaves)
        return {nid: parse_rational(v) for nid, v in raw.items()}

    def liquid_market(self) -> LiquidMarket:
        self.require("liquid_market")
        return LiquidMarket(self.tree, self.prices())

    def hedge_problem(self) -> HedgeProblem:
        self.require("hedge", "liquid_market")
        return HedgeProblem(self.tree, self.prices(), self.claim())

    def cone_market(self) -> ConeMarket:
        self.require("cone_market")
        d = self.model["d"]
        self._per_node(self.model["C"], "C", self.tree.order)

        def mk(doc):
            rows = [[parse_rational(a) for a in r] for r in doc.get("rows", [])]
            eqs = [[parse_rational(a) for a in r] for r in doc.get("eqs", [])]
            for r in rows + eqs:
                if len(r) != d:
                    raise SchemaError(f"cone row {r} should have {d} entries")
            return cone(d, rows, eqs)
        C = {nid: mk(doc) for nid, doc in self.model["C"].items()}
        D = {nid: mk(doc) for nid, doc in self.model.get("D", {}).items()}
        try:
            return ConeMarket(self.tree, d, C, D)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None

    def utility(self, d: int) -> UtilitySpec:
        raw = self.doc.get("utilities")
        if raw is None:
            raise SchemaError("cone_market instances need utilities")
        self._per_node(raw, "utilities", self.tree.order)
        g = {nid: polyfunc_from_json(doc) for nid, doc in raw.items()}
        for nid, f in g.items():
            if f.n != d:
                raise SchemaError(f"utility at node {nid!r} has dimension {f.n}, expected {d}")
        bounds = self.doc.get("utility_bounds")
        if bounds is not None:
            self._per_node(bounds, "utility_bounds", self.tree.order)
            bounds = {nid: parse_rational(v) for nid, v in bounds.items()}
        return UtilitySpec(g, bounds)

    def endowment(self, d: int) -> Optional[Dict[str, tuple]]:
        return self._node_vectors("endowment", d)

    def bellman_spec(self) -> BellmanSpec:
        if self.kind == "cone_market":
            from .finance import consumption_bellman
            mkt = self.cone_market()
            return consumption_bellman(mkt, self.utility(mkt.d), self.endowment(mkt.d))
        self.require("bellman")
        self._per_node(self.model["costs"], "stage costs", self.tree.order)
        costs = {nid: polyfunc_from_json(doc) for nid, doc in self.model["costs"].items()}
        x0 = tuple(parse_rational(a) for a in self.model["x_init"])
        return BellmanSpec(tuple(self.model["dims"]), x0, costs)

    def integrand(self) -> IntegrandSpec:
        """Any polyhedral model rewritten as one integrand per leaf."""
        kind = self.kind
        if kind == "integrand":
            leaves = self.model["leaves"]
            self._per_node(leaves, "leaf integrand", self.tree.leaves)
            funcs = {nid: polyfunc_from_json(doc) for nid, doc in leaves.items()}
            lb = self.model.get("lower_bounds")
            if lb is not None:
                lb = {nid: parse_rational(v) for nid, v in lb.items()}
            return IntegrandSpec(tuple(self.model["dims"]), funcs, lb)
        if kind == "bellman":
            return bellman_to_integrand(self.tree, self.bellman_spec())
        if kind == "liquid_market":
            return build_superhedge(self.liquid_market(), self.claim(),
                                    feasibility=self.options.get("feasibility", False))
        if kind == "cone_market":
            mkt = self.cone_market()
            return build_consumption(mkt, self.utility(mkt.d), self.endowment(mkt.d))
        raise SchemaError(f"model type {kind!r} has no polyhedral integrand")


def parse_instance(doc: dict) -> Instance:
    try:
        jsonschema.validate(doc, load_schema("instance"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {exc.message}") from None
    recs = [(n["id"], n["parent"], parse_rational(n["prob"])) for n in doc["tree"]["nodes"]]
    try:
        tree = validate_tree(recs)
    except TreeError as exc:
        raise SchemaError(f"invalid tree: {exc}") from None
    return Instance(tree, doc["model"], doc)


def load_instance(path) -> Instance:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read instance {path}: {exc}") from None
    return parse_instance(doc)


def tree_json(tree: ScenarioTree) -> dict:
    return {"nodes": [{"id": nid, "parent": par, "prob": rational_str(p)}
                      for nid, par, p in tree.to_records()]}


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
