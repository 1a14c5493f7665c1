"""Weighted similarity graph over posts.

Two posts are linked when they share an author (weight 1) and/or title
tokens (Jaccard weight in [0, 1]); the weights add, so every edge weight
lies in (0, 2]. Each node keeps at least its top-n strongest candidate
edges; an edge survives if either endpoint ranks it, which bounds the
total edge count by |V|*n.
"""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cascade import Post
from .hawkes import FitResult

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize_title(title: str) -> frozenset[str]:
    """Lowercase, split on non-alphanumeric runs, collapse duplicates."""
    return frozenset(_TOKEN_RE.findall(title.lower()))


def jaccard(s1: frozenset[str], s2: frozenset[str]) -> float:
    """|s1 & s2| / |s1 | s2|; two empty sets score 0 so blank titles never link."""
    if not s1 or not s2:
        return 0.0
    inter = len(s1 & s2)
    if inter == 0:
        return 0.0
    return inter / len(s1 | s2)


@dataclass(frozen=True)
class GraphNode:
    author: str
    title_tokens: frozenset[str]
    fit: FitResult | None = None


@dataclass(frozen=True)
class PostGraph:
    """Immutable similarity graph; ``unknown`` names the one unfitted post."""

    nodes: dict[str, GraphNode]
    edges: dict[tuple[str, str], float]  # key = sorted id pair
    top_n: int
    unknown: str | None = None

    @cached_property
    def adjacency(self) -> dict[str, list[tuple[str, float]]]:
        adj: dict[str, list[tuple[str, float]]] = {u: [] for u in self.nodes}
        for (u, v), w in self.edges.items():
            adj[u].append((v, w))
            adj[v].append((u, w))
        for u in adj:
            adj[u].sort()
        return adj

    @cached_property
    def _indexes(self) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
        by_author: dict[str, list[str]] = defaultdict(list)
        by_token: dict[str, list[str]] = defaultdict(list)
        for pid in sorted(self.nodes):
            if pid == self.unknown:
                continue
            node = self.nodes[pid]
            by_author[node.author].append(pid)
            for tok in node.title_tokens:
                by_token[tok].append(pid)
        return dict(by_author), dict(by_token)

    def degree(self, pid: str) -> int:
        return len(self.adjacency[pid])

    def to_csr(self) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
        """Adjacency in CSR form over the sorted node order.

        Returns (ordered ids, indptr, neighbor indices, cumulative edge
        weights per row) as the walk kernels expect.
        """
        order = sorted(self.nodes)
        idx = {pid: i for i, pid in enumerate(order)}
        indptr = np.zeros(len(order) + 1, dtype=np.int64)
        indices = []
        cumw = []
        for i, pid in enumerate(order):
            total = 0.0
            for v, w in self.adjacency[pid]:
                indices.append(idx[v])
                total += w
                cumw.append(total)
            indptr[i + 1] = len(indices)
        return order, indptr, np.array(indices, dtype=np.int64), np.array(cumw)


def edge_weight(u: GraphNode, v: GraphNode) -> float:
    return (1.0 if u.author == v.author else 0.0) + jaccard(u.title_tokens, v.title_tokens)


def _candidate_ids(node: GraphNode, by_author, by_token) -> set[str]:
    cands: set[str] = set(by_author.get(node.author, ()))
    for tok in node.title_tokens:
        cands.update(by_token.get(tok, ()))
    return cands


def _top_n_edges(candidates: list[tuple[float, str]], n: int) -> list[tuple[float, str]]:
    # ties broken by neighbor id ascending for deterministic builds
    candidates.sort(key=lambda t: (-t[0], t[1]))
    return candidates[:n]


def build_graph(posts: list[Post], fits: dict[str, FitResult], top_n: int = 20) -> PostGraph:
    """Build the pruned similarity graph over fitted training posts."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    nodes: dict[str, GraphNode] = {}
    for p in sorted(posts, key=lambda p: p.post_id):
        if p.post_id in nodes:
            raise ValueError(f"duplicate post id {p.post_id!r}")
        if p.post_id not in fits:
            raise ValueError(f"post {p.post_id!r} has no fit result")
        nodes[p.post_id] = GraphNode(p.author, tokenize_title(p.title), fits[p.post_id])

    by_author: dict[str, list[str]] = defaultdict(list)
    by_token: dict[str, list[str]] = defaultdict(list)
    for pid, node in nodes.items():
        by_author[node.author].append(pid)
        for tok in node.title_tokens:
            by_token[tok].append(pid)

    incident: dict[str, list[tuple[float, str]]] = {pid: [] for pid in nodes}
    for pid, node in nodes.items():
        for other in _candidate_ids(node, by_author, by_token):
            if other <= pid:  # each unordered pair once
                continue
            w = edge_weight(node, nodes[other])
            if w > 0.0:
                incident[pid].append((w, other))
                incident[other].append((w, pid))

    edges: dict[tuple[str, str], float] = {}
    for pid in sorted(nodes):
        for w, other in _top_n_edges(incident[pid], top_n):
            key = (pid, other) if pid < other else (other, pid)
            edges[key] = w
    return PostGraph(nodes=nodes, edges=edges, top_n=top_n)


def attach_post(g: PostGraph, x: Post, top_n: int | None = None) -> PostGraph:
    """Overlay one unknown post onto a base graph.

    The new node gets its own top-n edges against the training nodes;
    training edges are untouched, so the base graph keeps serving other
    attachments concurrently.
    """
    if g.unknown is not None:
        raise ValueError(f"graph already has an unknown post {g.unknown!r}")
    if x.post_id in g.nodes:
        raise ValueError(f"post {x.post_id!r} is already in the graph")
    n = g.top_n if top_n is None else top_n
    xnode = GraphNode(x.author, tokenize_title(x.title), None)
    by_author, by_token = g._indexes
    candidates = []
    for other in _candidate_ids(xnode, by_author, by_token):
        w = edge_weight(xnode, g.nodes[other])
        if w > 0.0:
            candidates.append((w, other))

    edges = dict(g.edges)
    for w, other in _top_n_edges(candidates, n):
        key = (x.post_id, other) if x.post_id < other else (other, x.post_id)
        edges[key] = w
    nodes = dict(g.nodes)
    nodes[x.post_id] = xnode
    return PostGraph(nodes=nodes, edges=edges, top_n=g.top_n, unknown=x.post_id)


def detach_post(g: PostGraph) -> PostGraph:
    """Drop the unknown post, restoring the base graph."""
    if g.unknown is None:
        raise ValueError("graph has no unknown post")
    nodes = {pid: n for pid, n in g.nodes.items() if pid != g.unknown}
    edges = {k: w for k, w in g.edges.items() if g.unknown not in k}
    return PostGraph(nodes=nodes, edges=edges, top_n=g.top_n)
