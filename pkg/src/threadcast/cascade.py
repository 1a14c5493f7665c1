"""Domain types for discussion cascades.

A cascade is a rooted tree: the post is the root, top-level comments hang
off the root, and replies hang off other comments. Record timestamps are
absolute epoch seconds; all modelling works in minutes relative to the
root post (see :attr:`CascadeTree.relative_times`).

Everything here is immutable after construction and safe to share across
threads.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

SECONDS_PER_MINUTE = 60.0


@dataclass(frozen=True)
class Post:
    """The root of a cascade: one submission to a community."""

    post_id: str
    author: str
    title: str
    created_at: float  # epoch seconds
    community: str = ""

    def __post_init__(self):
        if not self.post_id:
            raise ValueError("post_id must be non-empty")
        if not math.isfinite(self.created_at) or self.created_at < 0:
            raise ValueError(f"post {self.post_id}: created_at must be finite and >= 0")


@dataclass(frozen=True)
class Comment:
    """One comment; ``parent_id`` names either the post or another comment."""

    comment_id: str
    parent_id: str
    created_at: float  # epoch seconds
    depth: int  # 0 = top-level comment (direct reply to the post)

    def __post_init__(self):
        if not self.comment_id:
            raise ValueError("comment_id must be non-empty")
        if self.depth < 0:
            raise ValueError(f"comment {self.comment_id}: negative depth")


@dataclass(frozen=True)
class HawkesParams:
    """Six parameters describing one thread's dynamics.

    ``a``, ``b``, ``alpha`` shape the Weibull arrival rate of top-level
    comments (``a`` is the expected count, ``b`` the scale in minutes,
    ``alpha`` the shape). ``mu``, ``sigma`` are the lognormal reply-delay
    kernel (log-minutes). ``n_b`` is the branching factor: the expected
    number of direct replies per comment.

    The vector (a, b, alpha, mu, sigma, n_b) doubles as a node embedding
    during parameter inference.
    """

    a: float
    b: float
    alpha: float
    mu: float
    sigma: float
    n_b: float

    def __post_init__(self):
        vec = (self.a, self.b, self.alpha, self.mu, self.sigma, self.n_b)
        if not all(math.isfinite(v) for v in vec):
            raise ValueError(f"non-finite parameter in {vec}")
        if self.a < 0 or self.b <= 0 or self.alpha <= 0 or self.sigma <= 0 or self.n_b < 0:
            raise ValueError(f"parameters out of range: {vec}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.alpha, self.mu, self.sigma, self.n_b])

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "HawkesParams":
        if len(vec) != 6:
            raise ValueError(f"expected 6 components, got {len(vec)}")
        return cls(*(float(v) for v in vec))


@dataclass(frozen=True)
class CascadeTree:
    """A post plus its comment tree, validated on construction.

    Comments are kept sorted by (created_at, comment_id); the sort is the
    canonical order used everywhere for deterministic replay. ``simulated``
    and ``truncated`` are bookkeeping flags that do not participate in
    equality.
    """

    root: Post
    comments: tuple[Comment, ...] = ()
    simulated: bool = field(default=False, compare=False)
    truncated: bool = field(default=False, compare=False)

    def __post_init__(self):
        by_id: dict[str, Comment] = {}
        for c in self.comments:
            if c.comment_id == self.root.post_id or c.comment_id in by_id:
                raise ValueError(f"duplicate node id {c.comment_id!r}")
            by_id[c.comment_id] = c
        prev_key = None
        for c in self.comments:
            key = (c.created_at, c.comment_id)
            if prev_key is not None and key < prev_key:
                raise ValueError("comments not sorted by (created_at, comment_id)")
            prev_key = key
            if c.created_at < self.root.created_at:
                raise ValueError(f"comment {c.comment_id} precedes the post")
            if c.depth == 0:
                if c.parent_id != self.root.post_id:
                    raise ValueError(f"comment {c.comment_id}: depth 0 but parent is not the post")
            else:
                parent = by_id.get(c.parent_id)
                if parent is None:
                    raise ValueError(f"comment {c.comment_id}: missing parent {c.parent_id!r}")
                if parent.depth != c.depth - 1:
                    raise ValueError(f"comment {c.comment_id}: depth {c.depth} under depth {parent.depth}")
                if c.created_at < parent.created_at:
                    raise ValueError(f"comment {c.comment_id} precedes its parent")

    @cached_property
    def relative_times(self) -> np.ndarray:
        """Comment offsets from the post in minutes, aligned with ``comments``."""
        return np.array(
            [(c.created_at - self.root.created_at) / SECONDS_PER_MINUTE for c in self.comments]
        )


def build_tree(
    root: Post, events: Iterable[tuple[str, str, float]]
) -> tuple[CascadeTree, int]:
    """Assemble a tree from raw (comment_id, parent_id, created_at) events.

    Depths are derived by walking parent chains. Comments whose chain is
    broken (missing parent, cycle, or a child timestamped before its
    parent) are dropped; the count of dropped comments is returned so
    callers can log it. Re-rooting orphans would inflate top-level counts,
    so we never do it.
    """
    raw: dict[str, tuple[str, float]] = {}
    dropped = 0
    for cid, pid, t in events:
        if cid == root.post_id or cid in raw:
            dropped += 1  # malformed dump line; keep the first occurrence
            continue
        raw[cid] = (pid, t)
    depth: dict[str, int | None] = {}

    def resolve(cid: str) -> int | None:
        chain = []
        cur = cid
        seen = set()
        while cur not in depth:
            if cur in seen or cur not in raw:
                d = None
                break
            seen.add(cur)
            chain.append(cur)
            pid, t = raw[cur]
            if pid == root.post_id:
                d = 0 if t >= root.created_at else None
                break
            cur = pid
        else:
            d = depth[cur]
        # unwind: each link adds one level and must not move back in time
        for node in reversed(chain):
            pid, t = raw[node]
            if d is None:
                depth[node] = None
                continue
            if pid == root.post_id:
                depth[node] = 0 if t >= root.created_at else None
            else:
                parent_t = raw[pid][1]
                depth[node] = d + 1 if t >= parent_t else None
            d = depth[node]
        return depth[cid]

    kept = []
    for cid, (pid, t) in raw.items():
        d = resolve(cid)
        if d is None:
            dropped += 1
        else:
            kept.append(Comment(comment_id=cid, parent_id=pid, created_at=t, depth=d))
    kept.sort(key=lambda c: (c.created_at, c.comment_id))
    return CascadeTree(root=root, comments=tuple(kept)), dropped


def tree_size(t: CascadeTree) -> int:
    """Node count: the post plus all comments."""
    return 1 + len(t.comments)


def tree_depth(t: CascadeTree) -> int:
    """Longest root-to-leaf path in edges (0 when there are no comments)."""
    if not t.comments:
        return 0
    return 1 + max(c.depth for c in t.comments)


def tree_breadth(t: CascadeTree) -> int:
    """Largest node count at any single depth level, the root level included."""
    if not t.comments:
        return 1
    counts = Counter(c.depth for c in t.comments)
    return max(1, max(counts.values()))


def truncate_observed(t: CascadeTree, observe_hours: float) -> CascadeTree:
    """The sub-cascade visible after watching for ``observe_hours``.

    Keeps the root and every comment within the window. Because children
    never precede their parents, retaining by time automatically retains
    full ancestor chains.
    """
    if observe_hours < 0:
        raise ValueError("observe_hours must be >= 0")
    cutoff_min = observe_hours * 60.0
    rel = t.relative_times
    kept = tuple(c for c, m in zip(t.comments, rel) if m <= cutoff_min)
    if len(kept) == len(t.comments):
        return t
    return CascadeTree(root=t.root, comments=kept, simulated=t.simulated)
