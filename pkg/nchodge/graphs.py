"""Admissible graphs and Monte-Carlo estimates of their configuration-space weights.

The propagator is the hyperbolic angle ``theta(p, q) = arg((q - p)/(q - conj(p)))``
on the upper half-plane. Configurations are sampled uniformly in explicit
charts on the unit disk (mapped to the half-plane by the Cayley transform),
and each sample evaluates the wedge of the ``d theta_e`` exactly as a
determinant of chain-rule derivatives.

Vertices ``0..aerial-1`` are aerial, ``aerial..aerial+boundary-1`` are on the
boundary, ordered along it.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .documents import DocumentError, as_int, builtin_name, parse_document
from .example_data import GRAPH_DOCUMENTS, graph_document
from .tracing import traced

FAMILIES = ("disk", "cfw_constrained")
REASONS = ("self-loop", "dimension-mismatch", "doubled-edge", "isolated-aerial-vertex")
SHARD_SIZE = 65536
DEFAULT_ENUM_CAP = 200000
TWO_PI = 2.0 * math.pi

Edge = Tuple[int, int]


class GraphError(ValueError):
    """Base class for graph errors."""


class BudgetExceeded(GraphError):
    """Raised when an enumeration would produce more graphs than the cap allows."""


class SampleBudgetZero(GraphError):
    """Raised when a weight estimate is requested with no samples."""


@dataclass(frozen=True)
class AdmissibleGraph:
    aerial: int
    boundary: int
    edges: Tuple[Edge, ...]
    family: str = "disk"

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise GraphError(f"Unknown graph family '{self.family}', expected one of {', '.join(FAMILIES)}")
        minimum = 2 if self.family == "cfw_constrained" else 1
        if self.aerial < minimum:
            raise GraphError(f"{self.family} graphs need at least {minimum} aerial vertices, got {self.aerial}")
        if self.boundary < 0:
            raise GraphError(f"boundary count must be non-negative, got {self.boundary}")
        for source, target in self.edges:
            if not (0 <= source < self.vertex_count and 0 <= target < self.vertex_count):
                raise GraphError(f"Edge ({source}, {target}) refers to a missing vertex")
            if source >= self.aerial:
                raise GraphError(f"Edge ({source}, {target}) starts at a boundary vertex")

    @property
    def vertex_count(self) -> int:
        return self.aerial + self.boundary

    def dimension(self) -> int:
        if self.family == "disk":
            return 2 * self.aerial + self.boundary - 2
        return 2 * (self.aerial - 2) + self.boundary + 1

    def pinned(self) -> Tuple[int, ...]:
        """Aerial vertices held at a fixed point by the chart."""
        if self.family == "cfw_constrained" or self.boundary == 0:
            return (0,)
        return ()


@dataclass(frozen=True)
class VanishingResult:
    forced: bool
    reason: Optional[str] = None

    def __str__(self) -> str:
        return f"ForcedZero({self.reason})" if self.forced else "NotForced"


@dataclass(frozen=True)
class WeightEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        payload: Dict[str, Any] = {
            "mean": self.mean,
            "std_error": self.std_error,
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.reason:
            payload["reason"] = self.reason
        return payload


def vanishing_check(g: AdmissibleGraph) -> VanishingResult:
    if any(source == target for source, target in g.edges):
        return VanishingResult(True, "self-loop")
    if len(g.edges) != g.dimension():
        return VanishingResult(True, "dimension-mismatch")
    if len(set(g.edges)) != len(g.edges):
        return VanishingResult(True, "doubled-edge")
    touched = {v for edge in g.edges for v in edge}
    pinned = set(g.pinned())
    for vertex in range(g.aerial):
        if vertex not in touched and vertex not in pinned:
            return VanishingResult(True, "isolated-aerial-vertex")
    return VanishingResult(False)


def _permutation_sign(order: Sequence[int]) -> int:
    inversions = sum(1 for i, j in itertools.combinations(range(len(order)), 2) if order[i] > order[j])
    return -1 if inversions % 2 else 1


def _canonical_edges(g: AdmissibleGraph) -> Tuple[List[Edge], int]:
    order = sorted(range(len(g.edges)), key=lambda i: g.edges[i])
    return [g.edges[i] for i in order], _permutation_sign(order)


class _Chart:
    """Vectorised point positions and their derivatives in the sampled coordinates."""

    def __init__(self, n: int, vertices: int, dimension: int) -> None:
        self.points = np.zeros((n, vertices), dtype=complex)
        self.derivs = np.zeros((n, vertices, dimension), dtype=complex)
        self.column = 0
        self.volume = 1.0

    def free_aerial(self, vertex: int, rng: np.random.Generator) -> None:
        n = self.points.shape[0]
        r = rng.uniform(0.0, 1.0, n)
        psi = rng.uniform(0.0, TWO_PI, n)
        w = r * np.exp(1j * psi)
        dpdw = 2j / (1.0 - w) ** 2
        self.points[:, vertex] = 1j * (1.0 + w) / (1.0 - w)
        self.derivs[:, vertex, self.column] = dpdw * np.exp(1j * psi)
        self.derivs[:, vertex, self.column + 1] = dpdw * 1j * w
        self.column += 2
        self.volume *= TWO_PI


def _disk_chart(g: AdmissibleGraph, rng: np.random.Generator, n: int) -> _Chart:
    k, m = g.aerial, g.boundary
    chart = _Chart(n, g.vertex_count, g.dimension())
    free = range(k)
    if m == 0:
        chart.points[:, 0] = 1j
        free = range(1, k)
    elif m == 1:
        alpha = rng.uniform(0.0, math.pi, n)
        chart.points[:, 0] = np.exp(1j * alpha)
        chart.derivs[:, 0, chart.column] = 1j * np.exp(1j * alpha)
        chart.column += 1
        chart.volume *= math.pi
        free = range(1, k)
    for vertex in free:
        chart.free_aerial(vertex, rng)
    if m >= 1:
        chart.points[:, k] = 0.0
    if m >= 2:
        chart.points[:, k + 1] = 1.0
        s = np.sort(rng.uniform(0.0, 1.0, (n, m - 2)), axis=1)
        for j in range(m - 2):
            chart.points[:, k + 2 + j] = 1.0 + s[:, j] / (1.0 - s[:, j])
            chart.derivs[:, k + 2 + j, chart.column] = 1.0 / (1.0 - s[:, j]) ** 2
            chart.column += 1
        chart.volume /= math.factorial(m - 2)
    return chart


def _cfw_chart(g: AdmissibleGraph, rng: np.random.Generator, n: int) -> _Chart:
    """z_0 at the centre, z_1 = r on the positive real axis, boundary points free."""
    k, m = g.aerial, g.boundary
    chart = _Chart(n, g.vertex_count, g.dimension())
    chart.points[:, 0] = 1j
    r = rng.uniform(0.0, 1.0, n)
    chart.points[:, 1] = 1j * (1.0 + r) / (1.0 - r)
    chart.derivs[:, 1, chart.column] = 2j / (1.0 - r) ** 2
    chart.column += 1
    for vertex in range(2, k):
        chart.free_aerial(vertex, rng)
    if m >= 1:
        base = rng.uniform(0.0, TWO_PI, n)
        offsets = np.sort(rng.uniform(0.0, TWO_PI, (n, m - 1)), axis=1)
        base_column = chart.column
        chart.column += 1
        for j in range(m):
            beta = base if j == 0 else base + offsets[:, j - 1]
            half = beta / 2.0
            slope = 0.5 / np.sin(half) ** 2
            chart.points[:, k + j] = -np.cos(half) / np.sin(half)
            chart.derivs[:, k + j, base_column] = slope
            if j > 0:
                chart.derivs[:, k + j, chart.column] = slope
                chart.column += 1
        chart.volume *= TWO_PI * TWO_PI ** (m - 1) / math.factorial(m - 1)
    return chart


def _angle_forms(chart: _Chart, edges: Sequence[Edge]) -> np.ndarray:
    n, _, dimension = chart.derivs.shape
    matrix = np.zeros((n, len(edges), dimension))
    for row, (source, target) in enumerate(edges):
        p = chart.points[:, source]
        q = chart.points[:, target]
        a = (1.0 / (q - p))[:, None]
        b = (1.0 / (q - np.conj(p)))[:, None]
        dp = chart.derivs[:, source, :]
        dq = chart.derivs[:, target, :]
        matrix[:, row, :] = np.imag(-a * dp + b * np.conj(dp)) + np.imag((a - b) * dq)
    return matrix


def _shard_values(g: AdmissibleGraph, edges: Sequence[Edge], sign: int, seed: int, shard: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed ^ shard)
    chart = _disk_chart(g, rng, n) if g.family == "disk" else _cfw_chart(g, rng, n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if edges:
            det = np.linalg.det(_angle_forms(chart, edges))
        else:
            det = np.ones(n)
        values = sign * chart.volume * det / TWO_PI ** len(edges)
    return np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)


def _default_workers() -> int:
    try:
        return max(1, int(os.getenv("NCHODGE_WORKERS", "1")))
    except ValueError:
        return 1


def weight_estimate(g: AdmissibleGraph, samples: int, seed: int, workers: Optional[int] = None) -> WeightEstimate:
    """Estimate the weight of ``g``; deterministic in (graph, samples, seed).

    Forced zeros return an exact 0 without drawing samples. Shards have a
    fixed size, so the worker count never changes the result.
    """
    if samples <= 0:
        raise SampleBudgetZero(f"samples must be positive, got {samples}")
    if seed < 0 or seed >= 2**64:
        raise GraphError(f"seed must be a 64-bit unsigned integer, got {seed}")
    verdict = vanishing_check(g)
    if verdict.forced:
        return WeightEstimate(0.0, 0.0, 0, seed, verdict.reason)
    edges, sign = _canonical_edges(g)
    shards = [(index, min(SHARD_SIZE, samples - index * SHARD_SIZE)) for index in range(-(-samples // SHARD_SIZE))]
    pool_size = workers if workers is not None else _default_workers()
    with traced("weight_estimate", family=g.family, edges=len(edges), samples=samples, seed=seed) as span:
        if pool_size <= 1 or len(shards) == 1:
            chunks = [_shard_values(g, edges, sign, seed, index, n) for index, n in shards]
        else:
            with ThreadPoolExecutor(max_workers=pool_size) as pool:
                chunks = list(pool.map(lambda item: _shard_values(g, edges, sign, seed, item[0], item[1]), shards))
        values = np.concatenate(chunks)
        mean = float(np.mean(values))
        std_error = float(np.std(values, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        span["nchodge.mean"] = mean
    return WeightEstimate(mean, std_error, samples, seed)


def _enum_cap() -> int:
    try:
        return int(os.getenv("NCHODGE_ENUM_CAP", str(DEFAULT_ENUM_CAP)))
    except ValueError:
        return DEFAULT_ENUM_CAP


def candidate_edges(aerial: int, boundary: int) -> List[Edge]:
    return [(s, t) for s in range(aerial) for t in range(aerial + boundary) if s != t]


def enumerate_admissible(
    k: int, m: int, max_edges: int, family: str = "disk", cap: Optional[int] = None
) -> List[AdmissibleGraph]:
    """All graphs without self-loops or repeated edges, up to ``max_edges`` edges.

    Ordered by edge count, then lexicographically by the sorted edge list.
    """
    minimum = 2 if family == "cfw_constrained" else 1
    if k < minimum:
        raise GraphError(f"{family} enumeration needs k >= {minimum}, got {k}")
    if m < 0 or max_edges < 0:
        raise GraphError("boundary count and max_edges must be non-negative")
    limit = _enum_cap() if cap is None else cap
    candidates = candidate_edges(k, m)
    top = min(max_edges, len(candidates))
    total = sum(math.comb(len(candidates), e) for e in range(top + 1))
    if total > limit:
        raise BudgetExceeded(f"{total} graphs exceed the enumeration cap of {limit}")
    with traced("enumerate_admissible", aerial=k, boundary=m, max_edges=max_edges, total=total):
        return [
            AdmissibleGraph(k, m, tuple(chosen), family)
            for size in range(top + 1)
            for chosen in itertools.combinations(candidates, size)
        ]


def graph_from_document(document: Mapping[str, Any]) -> AdmissibleGraph:
    try:
        edges = tuple(
            (as_int(edge[0], "edges"), as_int(edge[1], "edges")) for edge in document.get("edges", []) or []
        )
        return AdmissibleGraph(
            aerial=as_int(document.get("aerial"), "aerial"),
            boundary=as_int(document.get("boundary", 0), "boundary"),
            edges=edges,
            family=str(document.get("family", "disk")),
        )
    except (DocumentError, IndexError, TypeError) as exc:
        raise GraphError(f"Malformed graph document: {exc}") from exc


def graph_to_document(g: AdmissibleGraph) -> dict:
    return {
        "family": g.family,
        "aerial": g.aerial,
        "boundary": g.boundary,
        "edges": [[s, t] for s, t in g.edges],
    }


def load_graph(source: Any) -> AdmissibleGraph:
    if isinstance(source, Mapping):
        return graph_from_document(source)
    if isinstance(source, str):
        name = builtin_name(source)
        if name is not None:
            if name not in GRAPH_DOCUMENTS:
                raise GraphError(f"Unknown built-in graph: {name}")
            return graph_from_document(graph_document(name))
        try:
            return graph_from_document(parse_document(source))
        except DocumentError as exc:
            raise GraphError(str(exc)) from exc
    raise GraphError(f"Cannot load a graph from {type(source).__name__}")
