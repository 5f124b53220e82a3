from __future__ import annotations

import argparse
import json
import sys
from typing import Any, List, Mapping, NoReturn, Sequence, Tuple, Union

from . import __version__
from .charclass import (
    modified_todd_class,
    resolve_bundle,
    sqrt_todd,
    todd_class,
)
from .cohring import (
    TRACE_MODES,
    BadDiamond,
    CohRing,
    ParseError,
    ValidationError,
    build_builtin,
    hochschild_grading,
    parity_dimensions,
    parse_class,
    ring_from_document,
    validate_ring,
)
from .documents import DocumentError, builtin_name, read_document
from .family import family_report, load_family
from .graphs import FAMILIES, enumerate_admissible, graph_to_document, load_graph, weight_estimate
from .ncvshs import TWISTS, hkr_embed
from .pairing import canonical_pairing, higher_residue, hrr_chi, mukai_pairing, symmetry_sweep
from .scalars import modified_todd_series, todd_series
from .tracing import flush, traced

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3
EXIT_USAGE = 64

VALIDATION_ERRORS = (ValidationError, ParseError, BadDiamond, DocumentError)


class NchodgeArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 64."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _source(reference: str) -> Union[str, Mapping[str, Any]]:
    """``builtin:`` references pass through; anything else is a document path."""
    if builtin_name(reference) is not None:
        return reference
    return read_document(reference)


def _load_ring(reference: str, validate: bool = True) -> CohRing:
    name = builtin_name(reference)
    if name is not None:
        return build_builtin(name)
    return ring_from_document(read_document(reference), validate=validate)


def _print_checks(title: str, passed: bool, checks: Sequence[Tuple[str, bool, str]]) -> None:
    print(f"{title}: {'ok' if passed else 'FAILED'}")
    for name, ok, detail in checks:
        suffix = f" ({detail})" if detail else ""
        print(f"  [{'ok' if ok else 'fail'}] {name}{suffix}")


def cmd_ring_validate(args: argparse.Namespace) -> int:
    ring = _load_ring(args.ring, validate=False)
    report = validate_ring(ring)
    if args.format == "json":
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    else:
        _print_checks(f"ring {report.ring_name}", report.passed, [(c.name, c.passed, c.detail) for c in report.checks])
    if not report.passed:
        for failure in report.failures():
            print(f"[nchodge] invariant {failure.name} violated: {failure.detail}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_ring_show(args: argparse.Namespace) -> int:
    ring = _load_ring(args.ring)
    print(f"ring {ring.name}: dimension {ring.n}, rank {ring.dim}")
    for element in ring.basis:
        print(f"  {element.label} ({element.p},{element.q})")
    hodge = ", ".join(f"h{p}{q}={count}" for (p, q), count in ring.hodge_numbers.items())
    print(f"hodge: {hodge}")
    grading = ", ".join(f"HH_{k}={count}" for k, count in sorted(hochschild_grading(ring).items()))
    print(f"hochschild: {grading}")
    parity = parity_dimensions(ring)
    print(f"periodic cyclic: even={parity['even']}, odd={parity['odd']}")
    return EXIT_OK


def cmd_todd(args: argparse.Namespace) -> int:
    ring = _load_ring(args.ring)
    with traced("todd", ring=ring.name, modified=args.modified, sqrt=args.sqrt):
        if args.sqrt:
            value = sqrt_todd(ring, args.modified)
        else:
            value = modified_todd_class(ring) if args.modified else todd_class(ring)
    print(value)
    if args.order is not None:
        series = modified_todd_series(args.order) if args.modified else todd_series(args.order)
        if args.sqrt:
            series = series.sqrt()
        print(f"series = {series}")
    return EXIT_OK


def _element(ring: CohRing, text: str, u_order: int):
    return hkr_embed(parse_class(ring, text), u_order)


def cmd_pair(args: argparse.Namespace) -> int:
    ring = _load_ring(args.ring)
    if args.kind == "mukai":
        value = mukai_pairing(resolve_bundle(ring, args.a), resolve_bundle(ring, args.b))
        print(f"mukai = {value}")
        return EXIT_OK
    a = _element(ring, args.a, args.u_order)
    b = _element(ring, args.b, args.u_order)
    if args.kind == "hres":
        print(f"hres = {higher_residue(a, b, args.twist)}")
    else:
        print(f"can = {canonical_pairing(a, b, args.trace)}")
    return EXIT_OK


def cmd_hrr(args: argparse.Namespace) -> int:
    ring = _load_ring(args.ring)
    chi = hrr_chi(resolve_bundle(ring, args.e), resolve_bundle(ring, args.f))
    print(f"chi = {chi}")
    return EXIT_OK


def cmd_symmetry(args: argparse.Namespace) -> int:
    ring = _load_ring(args.ring)
    sweep = symmetry_sweep(ring, args.twist)
    if not sweep.passed:
        print(f"symmetry {ring.name}: FAILED on {len(sweep.violations)} of {sweep.pairs} pairs")
        for left, right, defect in sweep.violations:
            print(f"[nchodge] symmetry violated on {left}, {right}: {defect}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"symmetry {ring.name}: ok ({sweep.pairs} pairs)")
    return EXIT_OK


def cmd_family_check(args: argparse.Namespace) -> int:
    family = load_family(_source(args.family))
    report = family_report(family)
    if args.format == "json":
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    else:
        _print_checks(f"family {report.family}", report.passed, [(c.name, c.passed, c.detail) for c in report.checks])
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_graph_weight(args: argparse.Namespace) -> int:
    graph = load_graph(_source(args.graph))
    estimate = weight_estimate(graph, args.samples, args.seed, workers=args.workers)
    print(f"mean = {estimate.mean:.12g}")
    print(f"std_error = {estimate.std_error:.12g}")
    print(f"samples = {estimate.samples}")
    print(f"seed = {estimate.seed}")
    if estimate.reason:
        print(f"reason = {estimate.reason}")
    return EXIT_OK


def cmd_graph_enum(args: argparse.Namespace) -> int:
    for graph in enumerate_admissible(args.aerial, args.boundary, args.max_edges, args.family):
        print(json.dumps(graph_to_document(graph), ensure_ascii=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = NchodgeArgumentParser(prog="nchodge", description="Exact nc-Hodge calculus on cohomology-ring models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    ring_parser = subparsers.add_parser("ring", help="Inspect and validate ring documents.")
    ring_commands = ring_parser.add_subparsers(dest="ring_command", required=True)
    validate_parser = ring_commands.add_parser("validate", help="Run every ring invariant check.")
    validate_parser.add_argument("--ring", required=True, help="Ring document path or builtin:<name>.")
    validate_parser.add_argument("--format", choices=("text", "json"), default="text", help="Report format.")
    validate_parser.set_defaults(func=cmd_ring_validate)
    show_parser = ring_commands.add_parser("show", help="Print basis, Hodge numbers and Hochschild grading.")
    show_parser.add_argument("--ring", required=True, help="Ring document path or builtin:<name>.")
    show_parser.set_defaults(func=cmd_ring_show)

    todd_parser = subparsers.add_parser("todd", help="Todd class of a ring's tangent bundle.")
    todd_parser.add_argument("--ring", required=True, help="Ring document path or builtin:<name>.")
    todd_parser.add_argument("--order", type=int, help="Also print the one-variable series to this order.")
    todd_parser.add_argument("--modified", action="store_true", help="Use z/(e^{z/2} - e^{-z/2}).")
    todd_parser.add_argument("--sqrt", action="store_true", help="Print the square root.")
    todd_parser.set_defaults(func=cmd_todd)

    pair_parser = subparsers.add_parser("pair", help="Evaluate a pairing on two classes or bundles.")
    pair_parser.add_argument("--kind", choices=("hres", "can", "mukai"), required=True, help="Pairing to evaluate.")
    pair_parser.add_argument("--ring", required=True, help="Ring document path or builtin:<name>.")
    pair_parser.add_argument("--a", required=True, help="First class expression (bundle for mukai).")
    pair_parser.add_argument("--b", required=True, help="Second class expression (bundle for mukai).")
    pair_parser.add_argument("--u-order", type=int, default=0, help="u-truncation of the lattice elements.")
    pair_parser.add_argument("--twist", choices=TWISTS, default="J", help="Twist used by hres.")
    pair_parser.add_argument("--trace", choices=TRACE_MODES, default="algebraic", help="Trace used by can.")
    pair_parser.set_defaults(func=cmd_pair)

    hrr_parser = subparsers.add_parser("hrr", help="Euler pairing chi(E, F) by both routes.")
    hrr_parser.add_argument("--ring", required=True, help="Ring document path or builtin:<name>.")
    hrr_parser.add_argument("--e", required=True, help="Bundle: O, O^r, O(a), T or a named bundle.")
    hrr_parser.add_argument("--f", required=True, help="Bundle: O, O^r, O(a), T or a named bundle.")
    hrr_parser.set_defaults(func=cmd_hrr)

    symmetry_parser = subparsers.add_parser("symmetry", help="Check higher-residue symmetry on basis pairs.")
    symmetry_parser.add_argument("--ring", required=True, help="Ring document path or builtin:<name>.")
    symmetry_parser.add_argument("--twist", choices=TWISTS, default="J", help="Twist used by the pairing.")
    symmetry_parser.set_defaults(func=cmd_symmetry)

    family_parser = subparsers.add_parser("family", help="Deformation family checks.")
    family_commands = family_parser.add_subparsers(dest="family_command", required=True)
    check_parser = family_commands.add_parser("check", help="Maurer-Cartan, transversality and flatness.")
    check_parser.add_argument("--family", required=True, help="Family document path or builtin:<name>.")
    check_parser.add_argument("--format", choices=("text", "json"), default="text", help="Report format.")
    check_parser.set_defaults(func=cmd_family_check)

    graph_parser = subparsers.add_parser("graph", help="Admissible graphs and their weights.")
    graph_commands = graph_parser.add_subparsers(dest="graph_command", required=True)
    weight_parser = graph_commands.add_parser("weight", help="Monte-Carlo estimate of a graph weight.")
    weight_parser.add_argument("--graph", required=True, help="Graph document path or builtin:<name>.")
    weight_parser.add_argument("--samples", type=int, default=100000, help="Number of samples.")
    weight_parser.add_argument("--seed", type=int, default=0, help="64-bit seed.")
    weight_parser.add_argument("--workers", type=int, help="Threads for sharded sampling (NCHODGE_WORKERS).")
    weight_parser.set_defaults(func=cmd_graph_weight)
    enum_parser = graph_commands.add_parser("enum", help="Enumerate admissible graphs as JSON lines.")
    enum_parser.add_argument("--aerial", type=int, required=True, help="Aerial vertex count.")
    enum_parser.add_argument("--boundary", type=int, required=True, help="Boundary vertex count.")
    enum_parser.add_argument("--max-edges", type=int, required=True, help="Largest edge count.")
    enum_parser.add_argument("--family", choices=FAMILIES, default="disk", help="Configuration-space family.")
    enum_parser.set_defaults(func=cmd_graph_enum)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = getattr(args, "func", None)
    if func is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return func(args)
    except ValidationError as exc:
        print(f"[nchodge] invariant {exc.invariant} violated: {exc.detail}", file=sys.stderr)
        return EXIT_VALIDATION
    except VALIDATION_ERRORS as exc:
        print(f"[nchodge] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"[nchodge] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTATION
    finally:
        for result in flush(sys.stderr):
            if result.get("status") == "error":
                print(f"[nchodge] exporter failed: {result}", file=sys.stderr)


if __name__ == "__main__":
    raise SystemExit(main())
