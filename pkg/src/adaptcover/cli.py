"""Command line: generate instances, solve, evaluate, and walk a strategy by hand.

Exit codes: 0 success, 2 invalid input, 3 infeasible, 4 oracle limits exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .adaptrp import adaptrp_solve
from .errors import InfeasibleError, InfeasibleStrategy, LimitExceeded
from .gso import make_oracle
from .instances import (
    InstanceError,
    default_hardness_L,
    encode_number,
    gen_paper_star,
    gen_random,
    gen_trp_star,
    gst_from_doc,
    gst_to_adaptsp,
    instance_from_doc,
    instance_to_doc,
)
from .isolation import adaptsp_solve, iso_solve
from .lpgst import LpgstConfig
from .metric import MetricError
from .odt import (
    OdtError,
    OdtInstance,
    TestNode,
    TestStrategy,
    disease_costs,
    eval_test_strategy,
    export_test_dot,
    gen_random_odt,
    odt_from_doc,
    odt_solve,
    odt_to_doc,
    strategy_node_from_dict,
    strategy_node_to_dict,
)
from .oracle import (
    opt_adaptrp_exact,
    opt_adaptsp_exact,
    opt_isolation_exact,
    opt_odt_exact,
    parse_limits,
    phase_constant_adaptrp,
    phase_ratio_isolation,
    phase_ratio_odt,
)
from .strategy import (
    Observe,
    Waypoint,
    check_feasible,
    evaluate,
    export_dot,
    tree_from_doc,
    tree_to_doc,
)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_LIMITS = 0, 2, 3, 4
ENV_LIMITS = "ADAPTCOVER_LIMITS"


@dataclass
class RunReport:
    instance: str  # sha256 of the canonical instance document
    solver: str
    objective: str
    value: float
    oracle_value: float | None = None
    ratio: float | None = None
    bound: float | None = None
    seed: int | None = None
    wall_time: float | None = None
    violations: list | None = None

    def to_doc(self) -> dict:
        doc = {"schema": "adaptcover/report", "version": 1}
        doc.update({k: v for k, v in asdict(self).items() if v is not None})
        return doc


def canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def digest(doc) -> str:
    return hashlib.sha256(canonical(doc).encode()).hexdigest()


def write_atomic(path: str, text: str):
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=".tmp-", text=True)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, target)


def emit(doc, out: str | None):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def load_doc(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError([f"cannot read {path}: {exc}"]) from None


def load_problem(path: str):
    doc = load_doc(path)
    if doc.get("schema") == "adaptcover/odt" or "diseases" in doc:
        return odt_from_doc(doc), doc
    return instance_from_doc(doc), doc


# --- gen ------------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.kind == "paper-star":
        inst = gen_paper_star(args.size)
    elif args.kind == "trp-star":
        inst = gen_trp_star(args.size)
    elif args.kind == "random":
        inst = gen_random(args.seed, args.n, args.m, kind=args.metric, skew=args.skew, objective=args.objective or "isolation")
    elif args.kind == "hardness":
        gst = gst_from_doc(load_doc(args.gst))
        L = default_hardness_L(gst) if args.L == "auto" else json.loads(args.L)
        inst = gst_to_adaptsp(gst, L)
    elif args.kind == "odt-random":
        emit(odt_to_doc(gen_random_odt(args.seed, args.m, args.n)), args.output)
        return EXIT_OK
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.kind)
    if args.objective and args.kind != "random":
        inst = inst.with_objective(args.objective)
    emit(instance_to_doc(inst), args.output)
    return EXIT_OK


# --- solve / eval ----------------------------------------------------------------------------


def _solver(objective):
    return {"isolation": iso_solve, "adaptsp": adaptsp_solve}.get(objective)


def cmd_solve(args) -> int:
    problem, doc = load_problem(args.instance)
    limits = parse_limits(args.limits) if args.limits else None
    config = LpgstConfig(beta=args.beta)
    start = time.perf_counter()
    if isinstance(problem, OdtInstance):
        name = args.oracle if args.oracle != "auto" else "star"
        sol = odt_solve(problem, name, config)
        value = eval_test_strategy(problem, sol.strategy)
        report = RunReport(digest(doc), f"odt/{name}", "odt", value, seed=args.seed)
        if args.exact_check:
            opt = opt_odt_exact(problem, limits)
            report.oracle_value = opt.value
            report.ratio = _ratio(value, opt.value)
            rho = phase_ratio_odt(problem, sol.phases, limits)
            report.bound = 2 * rho * math.log(problem.m, 8 / 7) if problem.m > 1 else 0.0
        strategy_doc = {"schema": "adaptcover/test-strategy", "version": 1, "tree": strategy_node_to_dict(sol.strategy.node)}
        dot = export_test_dot(sol.strategy) if args.dot_out else None
    else:
        objective = args.objective or problem.objective
        inst = problem.with_objective(objective)
        oracle = make_oracle(args.oracle, inst.metric, inst.root)
        phases: list = []
        if objective == "adaptrp":
            tree = adaptrp_solve(inst, oracle, args.beta, phases)
        else:
            tree = _solver(objective)(inst, oracle, config, phases)
        value = evaluate(inst, tree, objective)
        report = RunReport(digest(doc), f"{objective}/{oracle.name}", objective, value, seed=args.seed)
        if args.exact_check:
            opt = {"isolation": opt_isolation_exact, "adaptsp": opt_adaptsp_exact, "adaptrp": opt_adaptrp_exact}[objective](
                inst, limits
            )
            report.oracle_value = opt.value
            report.ratio = _ratio(value, opt.value)
            if objective == "isolation":
                rho = phase_ratio_isolation(inst, phases, limits)
                report.bound = 2 * rho * math.log(inst.m, 8 / 7) if inst.m > 1 else 0.0
            elif objective == "adaptrp":
                c = phase_constant_adaptrp(inst, phases, limits)
                report.bound = c * math.ceil(math.log2(inst.m)) if inst.m > 1 else 1.0
        strategy_doc = tree_to_doc(tree)
        dot = export_dot(tree, inst.metric.labels) if args.dot_out else None
    if args.timing:
        report.wall_time = time.perf_counter() - start
    if args.output:
        emit(strategy_doc, args.output)
    if dot is not None:
        write_atomic(args.dot_out, dot)
    if args.report:
        emit(report.to_doc(), args.report)
    else:
        emit(report.to_doc(), None)
    return EXIT_OK


def _ratio(value: float, opt: float) -> float:
    if opt == 0:
        return 1.0 if value == 0 else math.inf
    return value / opt


def load_strategy(path: str):
    doc = load_doc(path)
    if doc.get("schema") == "adaptcover/test-strategy":
        return TestStrategy(strategy_node_from_dict(doc["tree"]))
    try:
        return tree_from_doc(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise InstanceError([f"malformed strategy: {exc}"]) from None


def cmd_eval(args) -> int:
    problem, doc = load_problem(args.instance)
    strategy = load_strategy(args.strategy)
    if isinstance(problem, OdtInstance):
        if not isinstance(strategy, TestStrategy):
            raise InstanceError(["a decision-tree instance needs a test strategy"])
        costs, issues = disease_costs(problem, strategy)
        value = sum(float(p) * c for p, c in zip(problem.priors, costs)) if not issues else None
        report = RunReport(digest(doc), "eval", "odt", value, violations=[str(v) for v in issues] or None)
    else:
        if isinstance(strategy, TestStrategy):
            raise InstanceError(["a covering instance needs a strategy tree"])
        objective = args.objective or problem.objective
        rep = check_feasible(problem, strategy, objective)
        value = evaluate(problem, strategy, objective, check=False) if rep.ok else None
        report = RunReport(digest(doc), "eval", objective, value, violations=[str(v) for v in rep.violations] or None)
        issues = rep.violations
    emit(report.to_doc(), args.report)
    return EXIT_INFEASIBLE if issues else EXIT_OK


# --- walk ----------------------------------------------------------------------------------------


YES = {"y", "yes", "1", "true", "t"}
NO = {"n", "no", "0", "false", "f"}


def cmd_walk(args, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    problem, _ = load_problem(args.instance)
    strategy = load_strategy(args.strategy)
    scripted = None if args.answers is None else [a.strip() for a in args.answers.split(",") if a.strip()]

    def ask(prompt: str) -> str:
        stdout.write(prompt)
        if scripted is not None:
            if not scripted:
                raise InstanceError(["scripted answers ran out"])
            ans = scripted.pop(0)
            stdout.write(ans + "\n")
            return ans
        line = stdin.readline()
        if not line:
            raise InstanceError(["input ended before a leaf was reached"])
        return line.strip()

    if isinstance(problem, OdtInstance):
        node, cost = strategy.node, 0.0
        while isinstance(node, TestNode):
            test = problem.tests[node.test]
            options = [str(o).lower() if isinstance(o, bool) else str(o) for o, _ in node.branches]
            while True:
                ans = ask(f"test {node.test} (cost {encode_number(test.cost)}): outcome [{'/'.join(options)}]? ").lower()
                pick = _match_outcome(ans, node.branches)
                if pick is not None:
                    break
                stdout.write(f"  please answer one of {', '.join(options)}\n")
            cost += test.cost
            node = pick
            stdout.write(f"  running cost {encode_number(cost)}\n")
        stdout.write(f"diagnosis: disease {node.disease}; total cost {encode_number(cost)}\n")
        return EXIT_OK
    inst = problem
    d, here, t = inst.metric.dist, inst.root, 0.0
    node = strategy.node
    while isinstance(node, (Observe, Waypoint)):
        t += float(d[here, node.vertex])
        here = node.vertex
        if isinstance(node, Waypoint):
            stdout.write(f"travel to {node.vertex}; running length {encode_number(t)}\n")
            node = node.child
            continue
        while True:
            ans = ask(f"at vertex {node.vertex} (length {encode_number(t)}): demand here [y/n]? ").lower()
            if ans in YES or ans in NO:
                break
            stdout.write("  please answer y or n\n")
        node = node.yes if ans in YES else node.no
    t += float(d[here, inst.root])
    label = "unknown" if node.scenario is None else f"scenario {node.scenario}"
    stdout.write(f"stop: {label}; tour length back at the root {encode_number(t)}\n")
    return EXIT_OK


def _match_outcome(ans: str, branches):
    for o, child in branches:
        if isinstance(o, bool):
            if (o and ans in YES | {"positive", "+"}) or (not o and ans in NO | {"negative", "-"}):
                return child
        elif ans == str(o):
            return child
    return None


# --- entry point ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adaptcover", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write an instance document")
    g.add_argument("kind", choices=["paper-star", "trp-star", "random", "hardness", "odt-random"])
    g.add_argument("size", nargs="?", type=int, help="vertex count for the star generators")
    g.add_argument("--gst", help="group Steiner document (hardness)")
    g.add_argument("--L", default="auto", help="hardness scale; 'auto' = 10 * 2n * max distance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=6)
    g.add_argument("--m", type=int, default=4)
    g.add_argument("--metric", choices=["graph", "star"], default="graph")
    g.add_argument("--skew", choices=["uniform", "exponential"], default="uniform")
    g.add_argument("--objective", choices=["isolation", "adaptsp", "adaptrp"], default=None)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run a solver and report its value")
    s.add_argument("instance")
    s.add_argument("--objective", choices=["isolation", "adaptsp", "adaptrp"])
    s.add_argument("--oracle", choices=["exact", "star", "auto"], default="auto")
    s.add_argument("--exact-check", action="store_true", help="also run the exact oracle and report the ratio")
    s.add_argument("--beta", type=float, default=1.25)
    s.add_argument("--seed", type=int, default=None, help="recorded in the report; the solvers are deterministic")
    s.add_argument("--limits", default=os.environ.get(ENV_LIMITS), help="oracle limits 'n,m[,seconds]'")
    s.add_argument("--dot-out")
    s.add_argument("--timing", action="store_true", help="include wall time in the report")
    s.add_argument("-o", "--output", help="strategy document")
    s.add_argument("--report")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("eval", help="evaluate a strategy exactly")
    e.add_argument("instance")
    e.add_argument("strategy")
    e.add_argument("--objective", choices=["isolation", "adaptsp", "adaptrp"])
    e.add_argument("--report")
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("walk", help="step through a strategy, answering observations")
    w.add_argument("instance")
    w.add_argument("strategy")
    w.add_argument("--answers", help="comma-separated scripted answers")
    w.set_defaults(func=cmd_walk)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen":
        if args.kind in ("paper-star", "trp-star") and args.size is None:
            parser.error(f"gen {args.kind} needs a size")
        if args.kind == "hardness" and not args.gst:
            parser.error("gen hardness needs --gst")
    try:
        return args.func(args)
    except (InfeasibleStrategy, InfeasibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InstanceError, MetricError, OdtError, KeyError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LimitExceeded as exc:
        print(f"limits: {exc}", file=sys.stderr)
        return EXIT_LIMITS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
