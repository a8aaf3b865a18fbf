"""``ucpoly`` command line: instance checks, cut generation, enumeration,
hull/facet verification, separation, cut loops and batch reports.

Exit status: 0 when every claim is confirmed (or the command succeeded),
1 when something is refuted or violated, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cuts, oracle, verify
from .cutloop import CutLoopError, ITER_CAP, PER_ITER_CAP, run_cut_loop
from .cuts import CutParamError, CutParams, FAMILIES, enumerate_family, generate
from .formulation import build_base
from .model import (InstanceError, Point, UCInstance, derive_constants, format_rational,
                    instance_from_doc, parse_rational)
from .oracle import OracleCapError
from .separation import separate_all

EXIT_OK, EXIT_REFUTED, EXIT_USAGE = 0, 1, 2

INSTANCE_HELP = ('instance document: {"T": 4, "L": 2, "ell": 2, "Cmin": 1, "Cmax": 3, '
                 '"Vbar": "3/2", "V": 1} (rationals as integers or "p/q" strings)')
FAMILY_VARIANT = {"F2": "full", "F5": "full", "F6U": "full", "F6D": "full",
                  "F7": "up", "F9": "up", "F8": "down", "F10": "down"}


class UsageError(Exception):
    pass


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: parse error: {exc}") from exc


def _instance(path: str) -> UCInstance:
    return instance_from_doc(_read_json(path))


def _families(text: str | None):
    if text is None:
        return None
    fams = [f.strip().upper() for f in text.split(",") if f.strip()]
    bad = [f for f in fams if f not in FAMILIES]
    if bad:
        raise UsageError(f"unknown famil{'y' if len(bad) == 1 else 'ies'} {', '.join(bad)} "
                         f"(choose from {', '.join(FAMILIES)})")
    return tuple(fams)


def parse_objective(doc, inst: UCInstance) -> dict:
    """Objective as a point-shaped document, a dense list, or a ``{"x1": c}`` map."""
    sp = inst.space
    if isinstance(doc, list):
        if len(doc) != sp.dim:
            raise UsageError(f"objective list needs {sp.dim} entries, got {len(doc)}")
        return {k: parse_rational(v) for k, v in enumerate(doc)}
    if isinstance(doc, dict) and {"x", "y", "u"} <= set(doc):
        return dict(enumerate(Point.from_doc(doc, inst.T).values))
    if isinstance(doc, dict):
        names = {sp.name(k): k for k in range(sp.dim)}
        out = {}
        for key, v in doc.items():
            if key not in names:
                raise UsageError(f"objective names unknown variable {key!r}")
            out[names[key]] = parse_rational(v)
        return out
    raise UsageError("objective must be a list, a point-shaped document or a name map")


def _emit(args, doc, lines) -> None:
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        for line in lines:
            print(line)


def _row_doc(row, space) -> dict:
    return {"tag": row.tag, "sense": row.sense, "rhs": format_rational(row.rhs),
            "coeffs": {space.name(v): format_rational(c) for v, c in row.coeffs.items()}}


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_instance(args) -> int:
    inst = _instance(args.instance)
    dc = derive_constants(inst)
    doc = {"instance": inst.to_doc(), "regime": inst.regime.value, "kappa": dc.kappa,
           "gamma": dc.gamma, "alpha1": dc.alpha1, "alpha2": dc.alpha2,
           "grid": [format_rational(q) for q in sorted(dc.grid)]}
    _emit(args, doc, [f"valid instance: {inst.summary()}",
                      f"regime {inst.regime.value}; kappa={dc.kappa} gamma={dc.gamma} "
                      f"alpha1={dc.alpha1} alpha2={dc.alpha2}",
                      "grid: " + ", ".join(str(q) for q in doc["grid"])])
    return EXIT_OK


def cmd_generate(args) -> int:
    inst = _instance(args.instance)
    sp = inst.space
    if args.hull:
        rows = verify.hull_system(inst, args.hull).rows
    elif args.family:
        fam = args.family.upper()
        if args.t is not None and not args.all:
            rows = [generate(inst, CutParams(fam, args.t, args.m, tuple(args.S or ())))]
        else:
            rows = [mem.ineq for mem in enumerate_family(inst, fam)]
    else:
        rows = build_base(inst, args.variant or "full").rows
    _emit(args, [_row_doc(r, sp) for r in rows], [r.format(sp) for r in rows])
    return EXIT_OK


def cmd_enumerate(args) -> int:
    inst = _instance(args.instance)
    variant = args.variant or "full"
    if args.what == "patterns":
        pats = oracle.enumerate_patterns(inst, args.cap)
        doc = [{"y": list(p.y), "u": list(p.u)} for p in pats]
        _emit(args, doc, [f"y={p.y} u={p.u}" for p in pats])
        return EXIT_OK
    if args.candidates:
        cs = oracle.candidate_points(inst, variant, args.cap)
        doc = [dict(p.to_doc(), pattern={"y": list(pat.y), "u": list(pat.u)}, fiber_index=k)
               for p, (pat, k) in zip(cs.points, cs.provenance)]
        _emit(args, doc, [f"{p}  fiber {k}" for p, (_, k) in zip(cs.points, cs.provenance)])
        return EXIT_OK
    if args.what == "extreme":
        pts = oracle.hull_vertices(inst, variant, args.cap)
    elif args.what == "k1":
        pts = oracle.k1_characterized_points(inst)
    else:
        pts = oracle.scenario_tree_points_k2up(inst)
    _emit(args, [p.to_doc() for p in pts], [str(p) for p in pts])
    return EXIT_OK


def _report_exit(reports) -> int:
    return EXIT_REFUTED if any(r.refuted for r in reports) else EXIT_OK


def _emit_reports(args, reports, single=False) -> int:
    docs = [r.to_doc() for r in reports]
    _emit(args, docs[0] if single and len(docs) == 1 else docs, [r.line() for r in reports])
    return _report_exit(reports)


def cmd_verify_hull(args) -> int:
    inst = _instance(args.instance)
    exclude = _families(args.exclude) or ()
    reports = []
    if not args.objectives_only:
        reports.append(verify.check_hull_equality(inst, args.which, exclude=exclude, cap=args.cap,
                                                  max_T=args.max_T))
    if args.objectives:
        reports.append(verify.random_objective_equivalence(
            inst, args.which, args.objectives, seed=args.seed, exclude=exclude, cap=args.cap))
    if not reports:
        raise UsageError("--objectives-only needs --objectives N")
    return _emit_reports(args, reports, single=True)


def cmd_facets(args) -> int:
    inst = _instance(args.instance)
    fam = args.family.upper()
    variant = args.variant or FAMILY_VARIANT.get(fam, "full")
    members = enumerate_family(inst, fam)
    tasks = [(verify.check_facet, (m.ineq, inst, variant), {"cap": args.cap}) for m in members]
    reports = verify.run_parallel(tasks, args.jobs)
    code = _emit_reports(args, reports)
    if any(r.status != "confirmed" for r in reports):
        return EXIT_REFUTED
    return code


def cmd_separate(args) -> int:
    inst = _instance(args.instance)
    pt = Point.from_doc(_read_json(args.point), inst.T)
    res = separate_all(inst, args.variant or "full", pt, _families(args.families))
    _emit(args, [r.to_doc() for r in res],
          [f"{r.params.tag} violation {format_rational(r.violation)}" for r in res]
          or ["no violated member"])
    return EXIT_REFUTED if res else EXIT_OK


def cmd_cutloop(args) -> int:
    inst = _instance(args.instance)
    obj = parse_objective(_read_json(args.objective), inst)
    fams = _families(args.families)
    rep = run_cut_loop(inst, args.variant or "full", obj, fams, per_iter_cap=args.per_iter_cap,
                       iter_cap=args.iter_cap, cap=args.cap)
    lines = [f"iter {k}: objective {format_rational(it['objective'])}, {len(it['cuts'])} cuts"
             for k, it in enumerate(rep.iterations)]
    lines.append(f"status {rep.status}; oracle optimum {format_rational(rep.oracle_objective)}; "
                 f"gap {format_rational(rep.gap)}")
    _emit(args, rep.to_doc(), lines)
    return EXIT_OK if rep.gap == 0 else EXIT_REFUTED


# ---------------------------------------------------------------------------
# batch reports


def _split_claim(claim: str):
    parts = claim.split(":")
    return parts[0].lower(), parts[1:]


def run_claim(inst: UCInstance, claim: str, *, seed: int, cap: int | None = None) -> list:
    """Reports for one claim string, e.g. ``hull:q-up``, ``hull:q-k1:minus=F2``,
    ``objectives:q-up:200``, ``facets:F7``, ``full-dimension:up``, ``grid:down``,
    ``k1-characterization``, ``scenario-trees`` or ``base``."""
    kind, rest = _split_claim(claim)
    if kind == "hull":
        if not rest:
            raise UsageError("hull claim needs a hull name (hull:q-up)")
        exclude = ()
        for opt in rest[1:]:
            if opt.startswith("minus="):
                exclude = _families(opt[len("minus="):].replace("+", ","))
        return [verify.check_hull_equality(inst, rest[0], exclude=exclude, cap=cap)]
    if kind == "base":
        return [verify.check_hull_equality(inst, "base", cap=cap)]
    if kind == "objectives":
        if not rest:
            raise UsageError("objectives claim needs a hull name (objectives:q-up:200)")
        trials = int(rest[1]) if len(rest) > 1 else 200
        return [verify.random_objective_equivalence(inst, rest[0], trials, seed=seed, cap=cap)]
    if kind == "facets":
        if not rest:
            raise UsageError("facets claim needs a family (facets:F7)")
        fam = rest[0].upper()
        variant = rest[1] if len(rest) > 1 else FAMILY_VARIANT.get(fam, "full")
        return verify.family_facet_reports(inst, fam, variant, cap=cap)
    if kind == "full-dimension":
        return [verify.check_full_dimension(inst, rest[0] if rest else "full", cap=cap)]
    if kind == "grid":
        return [verify.check_grid(inst, rest[0] if rest else "up", cap=cap)]
    if kind == "k1-characterization":
        return [verify.check_k1_characterization(inst, cap=cap)]
    if kind == "scenario-trees":
        return [verify.check_scenario_trees(inst, cap=cap)]
    raise UsageError(f"unknown claim {claim!r}")


def _claim_task(inst_doc: dict, claim: str, seed: int, cap, reading_set: dict) -> list:
    inst = instance_from_doc(inst_doc)
    with cuts.readings(**reading_set):
        return [r.to_doc() for r in run_claim(inst, claim, seed=seed, cap=cap)]


def batch_report(suite: dict, *, base_dir: Path = Path("."), seed: int = verify.DEFAULT_SEED,
                 jobs: int = 1, cap: int | None = None) -> dict:
    """One report per (instance, claim) of the suite, plus an aggregate.

    Suite shape: ``{"entries": [{"instance": <path or inline document>,
    "claims": ["hull:q-up", ...]}, ...]}``.
    """
    tasks, owners = [], []
    for k, entry in enumerate(suite.get("entries", [])):
        src = entry.get("instance")
        if isinstance(src, str):
            path = Path(src) if Path(src).is_absolute() else base_dir / src
            if not path.exists():
                raise UsageError(f"suite entry {k}: missing instance file {path}")
            doc = json.loads(path.read_text())
        elif isinstance(src, dict):
            doc = src
        else:
            raise UsageError(f"suite entry {k} needs an instance path or document")
        inst_doc = instance_from_doc(doc).to_doc()
        for claim in entry.get("claims", []):
            tasks.append((_claim_task, (inst_doc, claim, seed, cap, cuts.current_readings()), {}))
            owners.append((k, claim))
    results = verify.run_parallel(tasks, jobs)
    entries, summary = [], {"confirmed": 0, "refuted": 0, "skipped": 0}
    for (k, claim), docs in zip(owners, results):
        for d in docs:
            summary[d["status"]] += 1
        entries.append({"entry": k, "claim": claim, "reports": docs})
    return {"seed": seed, "readings": cuts.current_readings(), "results": entries,
            "summary": summary, "ok": summary["refuted"] == 0}


def cmd_report(args) -> int:
    suite = _read_json(args.suite)
    if not isinstance(suite, dict):
        raise UsageError('suite must be a JSON object {"entries": [...]}')
    base_dir = Path(args.suite).parent if args.suite != "-" else Path(".")
    agg = batch_report(suite, base_dir=base_dir, seed=args.seed, jobs=args.jobs, cap=args.cap)
    lines = []
    for e in agg["results"]:
        for d in e["reports"]:
            lines.append(f"{d['status']:9s} entry {e['entry']} {d['claim']}")
    s = agg["summary"]
    lines.append(f"{s['confirmed']} confirmed, {s['refuted']} refuted, {s['skipped']} skipped")
    _emit(args, agg, lines)
    return EXIT_OK if agg["ok"] else EXIT_REFUTED


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=verify.DEFAULT_SEED,
                        help=f"seed for random objectives (default {verify.DEFAULT_SEED})")
    common.add_argument("--jobs", type=int, default=1, help="parallel verification workers")
    common.add_argument("--cap", type=int, default=None,
                        help=f"largest T the enumeration oracle accepts (default {oracle.DEFAULT_CAP})")
    common.add_argument("--literal-readings", action="store_true",
                        help="use the unrepaired index conventions for F5, F6D and F10")
    common.add_argument("--reading", action="append", default=[], metavar="KEY=VALUE",
                        help="set one index convention, e.g. F10_Q=literal")

    p = argparse.ArgumentParser(prog="ucpoly", description="Exact polyhedral checks for "
                                "single-generator unit-commitment polytopes.",
                                epilog=INSTANCE_HELP)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-instance", parents=[common], help="validate an instance")
    s.add_argument("instance")
    s.set_defaults(func=cmd_check_instance)

    s = sub.add_parser("generate", parents=[common], help="print base rows, family members or a hull")
    s.add_argument("instance")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--family")
    g.add_argument("--hull", help="q-k1, q-k2, q-up, q-down or base")
    s.add_argument("--variant", choices=("full", "up", "down"))
    s.add_argument("--t", type=int)
    s.add_argument("--m", type=int, default=0)
    s.add_argument("--set", "--S", dest="S", type=int, nargs="*", help="index set S (or S0)")
    s.add_argument("--all", action="store_true", help="every member of the family (default without --t)")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("enumerate", parents=[common], help="list extreme points or patterns")
    s.add_argument("instance")
    s.add_argument("--variant", choices=("full", "up", "down"))
    s.add_argument("--what", choices=("extreme", "patterns", "k1", "trees"), default="extreme")
    s.add_argument("--candidates", action="store_true",
                   help="stream the fiber-vertex superset with its binary pattern")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("verify-hull", parents=[common], help="check a hull description")
    s.add_argument("instance")
    s.add_argument("--which", required=True, help="q-k1, q-k2, q-up, q-down or base")
    s.add_argument("--exclude", help="families to drop (negative control), e.g. F7")
    s.add_argument("--objectives", type=int, default=0,
                   help="also compare N random objectives against the oracle")
    s.add_argument("--objectives-only", action="store_true", help="skip vertex enumeration")
    s.add_argument("--max-T", type=int, default=None, help="override the enumeration limit")
    s.set_defaults(func=cmd_verify_hull)

    s = sub.add_parser("facets", parents=[common], help="check every member of a family is a facet")
    s.add_argument("instance")
    s.add_argument("--family", required=True)
    s.add_argument("--variant", choices=("full", "up", "down"))
    s.set_defaults(func=cmd_facets)

    s = sub.add_parser("separate", parents=[common], help="most violated members at a point")
    s.add_argument("instance")
    s.add_argument("--point", required=True)
    s.add_argument("--variant", choices=("full", "up", "down"))
    s.add_argument("--families")
    s.set_defaults(func=cmd_separate)

    s = sub.add_parser("cutloop", parents=[common], help="cutting-plane loop against the oracle")
    s.add_argument("instance")
    s.add_argument("--objective", required=True)
    s.add_argument("--variant", choices=("full", "up", "down"))
    s.add_argument("--families", help="comma list; empty string for none")
    s.add_argument("--per-iter-cap", type=int, default=PER_ITER_CAP)
    s.add_argument("--iter-cap", type=int, default=ITER_CAP)
    s.set_defaults(func=cmd_cutloop)

    s = sub.add_parser("report", parents=[common], help="run a suite of claims")
    s.add_argument("suite")
    s.set_defaults(func=cmd_report)
    return p


def _reading_overrides(args) -> dict:
    out = dict(cuts.LITERAL_READINGS) if args.literal_readings else {}
    for item in args.reading:
        if "=" not in item:
            raise UsageError(f"--reading expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with cuts.readings(**_reading_overrides(args)):
            return args.func(args)
    except InstanceError as exc:
        print(f"ucpoly: {exc}\n{INSTANCE_HELP}", file=sys.stderr)
        return EXIT_USAGE
    except CutLoopError as exc:
        print(f"ucpoly: {exc}", file=sys.stderr)
        return EXIT_REFUTED
    except (UsageError, CutParamError, OracleCapError, ValueError) as exc:
        print(f"ucpoly: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
