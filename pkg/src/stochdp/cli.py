"""Command-line front end.

Every command reads one instance file and writes one JSON result.  Exit
codes: 0 success, 1 other engine failure, 2 a cone of cost-free directions
is not linear (including arbitrage), 3 infeasible, 4 malformed instance.
"""
from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from typing import Callable, Dict

from .dp import bellman_consistency, bellman_pass, check_linearity_L, solve
from .errors import Infeasible, LinearityViolated, SchemaError, StochDPError
from .finance import (build_consumption, build_consumption_dual, build_superhedge,
                      check_thm_ocp_conditions, duality_gap, is_consistent_price_system,
                      no_arbitrage_check, strategy_gains)
from .integrand import AdaptedLayout, expected_objective
from .oracle import flatten_solve, least_squares_oracle, phi_probe
from .polyfunc import INF
from .quad import variance_hedge_solve
from .serialization import (SCHEMA_VERSION, dumps, load_instance, policy_json, rational_str,
                            value_json, vector_json)

EXIT_OK, EXIT_FAILURE, EXIT_LINEARITY, EXIT_INFEASIBLE, EXIT_SCHEMA = 0, 1, 2, 3, 4


class CommandFailed(Exception):
    """A check that the command exists to perform came out negative."""

    def __init__(self, code: int, kind: str, message: str, **details):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.details = details


def _lineality(table) -> Dict[str, list]:
    return {nid: [vector_json(b) for b in nc.basis] for nid, nc in table.cones.items()}


def _solution_doc(tree, spec, sol, args) -> dict:
    obj = expected_objective(tree, spec, sol.policy)
    checks = {"optimality": {"ok": sol.report.ok,
                             "stage_values": {str(t): value_json(v)
                                              for t, v in sol.report.stage_values.items()},
                             "argmin_failures": sol.report.argmin_failures},
              "policy_objective_matches": obj == sol.value}
    if sol.commutation is not None:
        checks["recession_commutation"] = {"ok": sol.commutation.ok,
                                           "nodes": {n: list(v) for n, v in
                                                     sol.commutation.nodes.items()}}
    if args.check_level == "full":
        rep = check_linearity_L(tree, spec)
        checks["linearity"] = {"is_linear": rep.is_linear, "nodewise": rep.nodewise,
                               "direct": rep.direct}
    return {"value": value_json(sol.value), "policy": policy_json(sol.policy),
            "lineality": _lineality(sol.table), "checks": checks}


# -- commands ---------------------------------------------------------------------

def cmd_solve(inst, args) -> dict:
    spec = inst.integrand()
    sol = solve(inst.tree, spec, args.check_level)
    return _solution_doc(inst.tree, spec, sol, args)


def cmd_bellman(inst, args) -> dict:
    bspec = inst.bellman_spec()
    res = bellman_pass(inst.tree, bspec)
    if res.policy is None:
        raise Infeasible("no policy has finite expected cost")
    doc = {"value": value_json(res.value), "policy": policy_json(res.policy),
           "lineality": {nid: [vector_json(b) for b in nc.basis] for nid, nc in res.cones.items()}}
    if args.check_level == "full":
        bval, gval, obj = bellman_consistency(inst.tree, bspec)
        doc["checks"] = {"bellman_consistency": {"bellman_value": value_json(bval),
                                                 "generic_value": value_json(gval),
                                                 "policy_objective": value_json(obj),
                                                 "ok": bval == gval == obj}}
    return doc


def _witness_doc(tree, spec, witness) -> dict:
    layout = AdaptedLayout(tree, tuple(spec.dims))
    return {"witness": vector_json(layout.from_policy(witness)),
            "witness_policy": policy_json(witness)}


def cmd_check_linearity(inst, args) -> dict:
    spec = inst.integrand()
    rep = check_linearity_L(inst.tree, spec)
    if not rep.is_linear:
        raise CommandFailed(EXIT_LINEARITY, "LinearityViolated",
                            "cost-free adapted directions do not form a linear space",
                            node=rep.node, **_witness_doc(inst.tree, spec, rep.witness))
    return {"checks": {"linearity": {"is_linear": True, "nodewise": rep.nodewise,
                                     "direct": rep.direct}}}


def cmd_no_arbitrage(inst, args) -> dict:
    mkt = inst.liquid_market()
    holds, witness = no_arbitrage_check(mkt)
    if not holds:
        spec = build_superhedge(mkt, {l: 0 for l in inst.tree.leaves}, feasibility=True)
        gains = strategy_gains(mkt, witness)
        raise CommandFailed(EXIT_LINEARITY, "Arbitrage",
                            "a self-financing strategy has nonnegative, nonzero gains",
                            node=None, gains={l: rational_str(g) for l, g in gains.items()},
                            **_witness_doc(inst.tree, spec, witness))
    return {"checks": {"no_arbitrage": {"holds": True}}}


def cmd_superhedge(inst, args) -> dict:
    mkt = inst.liquid_market()
    spec = build_superhedge(mkt, inst.claim())
    sol = solve(inst.tree, spec, args.check_level)
    doc = _solution_doc(inst.tree, spec, sol, args)
    doc["capital"] = value_json(sol.policy[inst.tree.root][0])
    return doc


def cmd_varhedge(inst, args) -> dict:
    hp = inst.hedge_problem()
    res = variance_hedge_solve(hp)
    doc = {"value": value_json(res.value), "capital": value_json(res.V0),
           "policy": policy_json(res.policy),
           "lineality": {nid: [vector_json(b) for b in v] for nid, v in res.null_spaces.items()}}
    if args.check_level == "full":
        ov, _ = least_squares_oracle(hp)
        doc["checks"] = {"least_squares": {"value": value_json(ov), "ok": ov == res.value}}
    return doc


def policy_json_from_map(y) -> dict:
    return {nid: vector_json(v) for nid, v in y.items()}


def _market_and_utility(inst):
    mkt = inst.cone_market()
    return mkt, inst.utility(mkt.d)


def cmd_consume(inst, args) -> dict:
    mkt, util = _market_and_utility(inst)
    spec = build_consumption(mkt, util, inst.endowment(mkt.d))
    sol = solve(inst.tree, spec, args.check_level)
    doc = _solution_doc(inst.tree, spec, sol, args)
    doc["expected_utility"] = value_json(-sol.value)
    if args.check_level == "full":
        doc["checks"]["conditions"] = check_thm_ocp_conditions(mkt, util).as_dict()
    return doc


def cmd_dual(inst, args) -> dict:
    mkt, util = _market_and_utility(inst)
    res = build_consumption_dual(mkt, util, args.dual_index, inst.endowment(mkt.d))
    doc = {"value": value_json(res.value), "dual_status": res.status, "dual_index": args.dual_index}
    if res.y is not None:
        doc["dual_process"] = policy_json_from_map(res.y)
        doc["checks"] = {"consistent_price_system":
                         is_consistent_price_system(mkt, res.y, args.dual_index)}
    return doc


def cmd_duality_gap(inst, args) -> dict:
    mkt, util = _market_and_utility(inst)
    rep = duality_gap(mkt, util, args.dual_index, endowment=inst.endowment(mkt.d))
    doc = {"primal_value": value_json(rep.primal_value), "dual_value": value_json(rep.dual_value),
           "gap": None if rep.gap is None else value_json(rep.gap),
           "dual_index": args.dual_index,
           "checks": {"weak_duality": rep.weak_duality, "zero_gap": rep.zero_gap,
                      "conditions": rep.conditions.as_dict()}}
    if rep.dual_y is not None:
        doc["dual_process"] = policy_json_from_map(rep.dual_y)
    if rep.policy is not None:
        doc["policy"] = policy_json(rep.policy)
    return doc


def cmd_oracle_compare(inst, args) -> dict:
    if inst.kind == "hedge":
        hp = inst.hedge_problem()
        res = variance_hedge_solve(hp)
        ov, opol = least_squares_oracle(hp)
        return {"value": value_json(res.value), "oracle_value": value_json(ov),
                "discrepancy": value_json(res.value - ov),
                "checks": {"agree": res.value == ov}}
    spec = inst.integrand()
    sol = solve(inst.tree, spec, args.check_level)
    ov, opol = flatten_solve(inst.tree, spec)
    cross_dp = expected_objective(inst.tree, spec, sol.policy)
    cross_oracle = expected_objective(inst.tree, spec, opol)
    agree = sol.value == ov == cross_dp == cross_oracle
    doc = {"value": value_json(sol.value), "oracle_value": value_json(ov),
           "discrepancy": value_json(sol.value - ov),
           "policy": policy_json(sol.policy), "oracle_policy": policy_json(opol),
           "checks": {"agree": agree, "dp_policy_objective": value_json(cross_dp),
                      "oracle_policy_objective": value_json(cross_oracle)}}
    if not agree:
        raise CommandFailed(EXIT_FAILURE, "OracleMismatch", "recursion and oracle disagree", **doc)
    return doc


def _default_radius(inst, vectors) -> Fraction:
    big = max((abs(a) for v in vectors for a in v), default=Fraction(0))
    return max(Fraction(1), big)


def cmd_phi_probe(inst, args) -> dict:
    """Probe ``s -> phi(u + s * direction)`` on a grid of scalars ``s``."""
    opts = inst.options
    tree = inst.tree
    if inst.kind == "cone_market":
        mkt, util = _market_and_utility(inst)
        d = mkt.d
        base = inst.endowment(d) or {}
        base = {nid: base.get(nid, (Fraction(0),) * d) for nid in tree.order}
        direction = inst._node_vectors("direction", d) or {}
        direction = {nid: direction.get(nid, (Fraction(1),) + (Fraction(0),) * (d - 1))
                     for nid in tree.order}

        def shifted(s):
            return {nid: tuple(a + s * b for a, b in zip(base[nid], direction[nid]))
                    for nid in tree.order}

        def builder(u):
            return tree, build_consumption(mkt, util, shifted(u[0]))
        radius = _default_radius(inst, list(base.values()))
        # dual optimizer at the grid centre; phi(u) >= E sum u.y + E sum U*(y) everywhere
        dual = build_consumption_dual(mkt, util, args.dual_index, base)
        dual_bound = None
        if dual.y is not None:
            offset = dual.value - dual.pairing(tree, base)
            dual_bound = lambda u: dual.pairing(tree, shifted(u[0])) + offset  # noqa: E731
    elif inst.kind == "liquid_market":
        mkt = inst.liquid_market()
        claim = inst.claim()
        direction = {l: Fraction(1) for l in tree.leaves}
        raw = opts.get("direction")
        if raw is not None:
            direction = {l: Fraction(str(raw[l][0])) if l in raw else Fraction(0)
                         for l in tree.leaves}
        feas = opts.get("feasibility", False)

        def builder(u):
            return tree, build_superhedge(mkt, {l: claim[l] + u[0] * direction[l]
                                                for l in tree.leaves}, feasibility=feas)
        radius = _default_radius(inst, [[v] for v in claim.values()])
        dual_bound = None
    else:
        raise SchemaError(f"phi-probe needs a cone_market or liquid_market model, not {inst.kind!r}")
    if "grid" in opts:
        grid = [Fraction(str(s)) for s in opts["grid"]]
    else:
        grid = [-radius, -radius / 2, Fraction(0), radius / 2, radius]
    tight = grid.index(0) if 0 in grid and dual_bound is not None else None
    rep = phi_probe(builder, [(s,) for s in grid], dual_bound=dual_bound, tight_index=tight,
                    radius=radius)
    points = []
    for s, v, m in zip(grid, rep.values, rep.minimizers):
        pt = {"s": rational_str(s), "value": value_json(v), "has_minimizer": m is not None}
        if m is not None:
            pt["minimizer"] = policy_json(m)
        if dual_bound is not None:
            pt["dual_bound"] = value_json(dual_bound((s,)))
        points.append(pt)
    attained = all(m is not None for v, m in zip(rep.values, rep.minimizers) if v != INF)
    return {"points": points, "radius": rational_str(radius),
            "checks": {"convex": rep.convex,
                       "convexity_failures": [list(p) for p in rep.convexity_failures],
                       "attained": attained, "fenchel_inequality": rep.fenchel_ok,
                       "fenchel_tight_at_center": rep.fenchel_tight}}


COMMANDS: Dict[str, Callable] = {
    "solve": cmd_solve,
    "bellman": cmd_bellman,
    "check-linearity": cmd_check_linearity,
    "no-arbitrage": cmd_no_arbitrage,
    "superhedge": cmd_superhedge,
    "varhedge": cmd_varhedge,
    "consume": cmd_consume,
    "dual": cmd_dual,
    "duality-gap": cmd_duality_gap,
    "oracle-compare": cmd_oracle_compare,
    "phi-probe": cmd_phi_probe,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochdp",
                                description="Exact multistage stochastic programming on scenario trees.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--instance", required=True, help="instance JSON file")
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--check-level", choices=("fast", "full"), default="fast")
    p.add_argument("--dual-index", choices=("derivation", "displayed"), default="derivation")
    return p


def run(command: str, instance_path: str, check_level: str = "fast",
        dual_index: str = "derivation"):
    """``(exit code, result document)`` for one command."""
    args = argparse.Namespace(check_level=check_level, dual_index=dual_index)
    doc = {"schema": SCHEMA_VERSION, "command": command}
    start = time.perf_counter()
    code = EXIT_OK
    try:
        inst = load_instance(instance_path)
        doc.update(COMMANDS[command](inst, args))
        doc["status"] = "ok"
    except CommandFailed as exc:
        code = exc.code
        doc["status"] = "error"
        doc["error"] = {"type": exc.kind, "message": str(exc), **exc.details}
    except LinearityViolated as exc:
        code = EXIT_LINEARITY
        doc["status"] = "error"
        doc["error"] = {"type": "LinearityViolated", "message": str(exc), "node": exc.node,
                        "stage": exc.stage, "witness": vector_json(exc.witness)}
    except Infeasible as exc:
        code = EXIT_INFEASIBLE
        doc["status"] = "error"
        doc["error"] = {"type": "Infeasible", "message": str(exc)}
    except (SchemaError, ValueError) as exc:
        code = EXIT_SCHEMA
        doc["status"] = "error"
        doc["error"] = {"type": "SchemaError", "message": str(exc)}
    except StochDPError as exc:
        code = EXIT_FAILURE
        doc["status"] = "error"
        doc["error"] = {"type": type(exc).__name__, "message": str(exc)}
    doc["timing"] = {"seconds": round(time.perf_counter() - start, 6)}
    return code, doc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, doc = run(args.command, args.instance, args.check_level, args.dual_index)
    text = dumps(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
