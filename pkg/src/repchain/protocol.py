"""Protocol trees, shape enumeration, and the text/JSON wire formats.

A protocol for an ``N``-node chain is a full binary tree with ``N - 1``
leaves (the elementary links, left to right) whose internal vertices are
entanglement swaps; every vertex additionally carries the number of
distillation rounds applied to the link it produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import product
from typing import Iterator, Union

__all__ = [
    "Leaf",
    "Branch",
    "ProtocolTree",
    "ShapeId",
    "ProtocolParseError",
    "catalan",
    "count_space",
    "enumerate_shapes",
    "shapes_by_symmetricity",
    "enumerate_protocols",
    "symmetricity",
    "leaf_depths",
    "canonical_vertex_order",
    "with_labels",
    "get_labels",
    "n_leaves",
    "n_vertices",
    "span",
    "validate_tree",
    "serialize",
    "parse",
    "to_json_dict",
    "from_json_dict",
]


@dataclass(frozen=True)
class Leaf:
    """Elementary link ``link`` with ``rounds`` distillation rounds."""

    link: int
    rounds: int = 0


@dataclass(frozen=True)
class Branch:
    """Swap of two adjacent links, then ``rounds`` distillation rounds."""

    left: "ProtocolTree"
    right: "ProtocolTree"
    rounds: int = 0


ProtocolTree = Union[Leaf, Branch]


def n_leaves(tree: ProtocolTree) -> int:
    if isinstance(tree, Leaf):
        return 1
    return n_leaves(tree.left) + n_leaves(tree.right)


def n_vertices(tree: ProtocolTree) -> int:
    return 2 * n_leaves(tree) - 1


def _leaf_links(tree: ProtocolTree) -> list[int]:
    if isinstance(tree, Leaf):
        return [tree.link]
    return _leaf_links(tree.left) + _leaf_links(tree.right)


def span(tree: ProtocolTree) -> tuple[int, int]:
    """Outermost chain nodes connected by this (sub)protocol's link.

    Link ``i`` joins nodes ``i`` and ``i + 1``, so a subtree covering
    links ``l .. r`` spans nodes ``(l, r + 1)``.
    """
    links = _leaf_links(tree)
    return links[0], links[-1] + 1


def validate_tree(tree: ProtocolTree, n_links: int | None = None, beta: int | None = None) -> None:
    """Check the chain-protocol invariants, raising ValueError on failure."""
    links = _leaf_links(tree)
    if links != list(range(links[0], links[0] + len(links))):
        raise ValueError(f"leaves must cover consecutive links left to right, got {links}")
    if n_links is not None and links != list(range(n_links)):
        raise ValueError(
            f"protocol covers links {links[0]}..{links[-1]} but the chain has "
            f"links 0..{n_links - 1}"
        )

    def check(v: ProtocolTree) -> None:
        if v.rounds < 0:
            raise ValueError(f"negative distillation rounds: {v.rounds}")
        if beta is not None and v.rounds > beta:
            raise ValueError(f"vertex has {v.rounds} rounds, exceeding beta={beta}")
        if isinstance(v, Branch):
            check(v.left)
            check(v.right)

    check(tree)


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def count_space(n_nodes: int, beta: int) -> int:
    """Exact cardinality of the protocol space: ``C(N-2) * (beta+1)^(2N-3)``."""
    if n_nodes < 2:
        raise ValueError("a chain needs at least 2 nodes")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    v = 2 * n_nodes - 3
    return catalan(n_nodes - 2) * (beta + 1) ** v


@dataclass(frozen=True)
class ShapeId:
    """One swap-tree shape: the unlabeled tree, its canonical enumeration
    index, and its symmetricity score."""

    shape: ProtocolTree
    index: int
    symmetricity: float


def _shapes(count: int, offset: int) -> list[ProtocolTree]:
    if count == 1:
        return [Leaf(offset)]
    out: list[ProtocolTree] = []
    for left_size in range(1, count):
        for left in _shapes(left_size, offset):
            for right in _shapes(count - left_size, offset + left_size):
                out.append(Branch(left, right))
    return out


def enumerate_shapes(num_leaves: int) -> list[ShapeId]:
    """All full binary tree shapes with the given number of leaves.

    The list has Catalan(num_leaves - 1) entries in a deterministic
    order: recursion on ascending left-subtree size.  Leaves carry link
    indices 0..num_leaves-1 left to right; all rounds are zero.
    """
    if num_leaves < 1:
        raise ValueError("need at least one leaf")
    return [
        ShapeId(shape=s, index=i, symmetricity=symmetricity(s))
        for i, s in enumerate(_shapes(num_leaves, 0))
    ]


def shapes_by_symmetricity(num_leaves: int) -> list[ShapeId]:
    """Shapes sorted least symmetric first; ties keep enumeration order."""
    return sorted(enumerate_shapes(num_leaves), key=lambda s: (s.symmetricity, s.index))


def leaf_depths(tree: ProtocolTree) -> list[int]:
    """Depth of every leaf in edges from the root, in-order."""
    if isinstance(tree, Leaf):
        return [0]
    return [d + 1 for d in leaf_depths(tree.left)] + [d + 1 for d in leaf_depths(tree.right)]


def symmetricity(tree: ProtocolTree) -> float:
    """1 minus the leaf-depth variance over the maximum leaf depth.

    Equals 1 exactly when all leaves sit at the same depth; the
    single-leaf tree scores 1 by convention (0/0 case).
    """
    depths = leaf_depths(tree)
    deepest = max(depths)
    if deepest == 0:
        return 1.0
    mean = sum(depths) / len(depths)
    var = sum((d - mean) ** 2 for d in depths) / len(depths)
    return 1.0 - var / deepest


def canonical_vertex_order(tree: ProtocolTree) -> list[tuple[int, ...]]:
    """Vertex paths in label-tuple order: leaves first (chain order), then
    internal vertices deepest first (ties left to right), root last.

    A path is a tuple of 0/1 steps from the root (0 = left child).
    """
    leaves: list[tuple[int, ...]] = []
    internals: list[tuple[int, int, tuple[int, ...]]] = []  # (depth, seq, path)
    seq = 0

    def walk(v: ProtocolTree, depth: int, path: tuple[int, ...]) -> None:
        nonlocal seq
        if isinstance(v, Leaf):
            leaves.append(path)
            return
        walk(v.left, depth + 1, path + (0,))
        internals.append((depth, seq, path))
        seq += 1
        walk(v.right, depth + 1, path + (1,))

    walk(tree, 0, ())
    internals.sort(key=lambda item: (-item[0], item[1]))
    return leaves + [path for _, _, path in internals]


def _vertex_at(tree: ProtocolTree, path: tuple[int, ...]) -> ProtocolTree:
    v = tree
    for step in path:
        if isinstance(v, Leaf):
            raise ValueError(f"path {path} walks past a leaf")
        v = v.left if step == 0 else v.right
    return v


def with_labels(tree: ProtocolTree, labels) -> ProtocolTree:
    """Attach distillation-round labels in canonical vertex order."""
    order = canonical_vertex_order(tree)
    if len(labels) != len(order):
        raise ValueError(f"expected {len(order)} labels, got {len(labels)}")
    by_path = dict(zip(order, labels))

    def rebuild(v: ProtocolTree, path: tuple[int, ...]) -> ProtocolTree:
        if isinstance(v, Leaf):
            return replace(v, rounds=int(by_path[path]))
        return Branch(
            left=rebuild(v.left, path + (0,)),
            right=rebuild(v.right, path + (1,)),
            rounds=int(by_path[path]),
        )

    return rebuild(tree, ())


def get_labels(tree: ProtocolTree) -> list[int]:
    """Distillation-round labels read off in canonical vertex order."""
    return [_vertex_at(tree, path).rounds for path in canonical_vertex_order(tree)]


def enumerate_protocols(n_nodes: int, beta: int) -> Iterator[ProtocolTree]:
    """Yield every protocol in the (N, beta) space exactly once.

    Deterministic order: shapes in canonical enumeration order, label
    tuples in lexicographic order over {0..beta}^v.
    """
    if n_nodes < 2:
        raise ValueError("a chain needs at least 2 nodes")
    for shape_id in enumerate_shapes(n_nodes - 1):
        v = n_vertices(shape_id.shape)
        for labels in product(range(beta + 1), repeat=v):
            yield with_labels(shape_id.shape, labels)


# --- wire formats -----------------------------------------------------------

class ProtocolParseError(ValueError):
    """Malformed protocol text; carries the 0-based offending position."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")


def serialize(tree: ProtocolTree) -> str:
    """Compact text form: leaf ``(L<link>:<k>)``, swap ``(<left><right>:<k>)``."""
    if isinstance(tree, Leaf):
        return f"(L{tree.link}:{tree.rounds})"
    return f"({serialize(tree.left)}{serialize(tree.right)}:{tree.rounds})"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise ProtocolParseError("unexpected end of input", self.pos)
        return self.text[self.pos]

    def expect(self, ch: str) -> None:
        got = self.peek()
        if got != ch:
            raise ProtocolParseError(f"expected {ch!r}, found {got!r}", self.pos)
        self.pos += 1

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ProtocolParseError("expected an integer", start)
        return int(self.text[start : self.pos])

    def node(self) -> ProtocolTree:
        self.expect("(")
        if self.peek() == "L":
            self.pos += 1
            link = self.integer()
            self.expect(":")
            rounds = self.integer()
            self.expect(")")
            return Leaf(link=link, rounds=rounds)
        left = self.node()
        right = self.node()
        self.expect(":")
        rounds = self.integer()
        self.expect(")")
        return Branch(left=left, right=right, rounds=rounds)


def parse(text: str) -> ProtocolTree:
    """Parse the text form back into a tree; inverse of :func:`serialize`.

    Rejects malformed input with a position-annotated error and enforces
    the left-to-right consecutive-links invariant.
    """
    parser = _Parser(text)
    tree = parser.node()
    parser.skip_ws()
    if parser.pos != len(text):
        raise ProtocolParseError("trailing characters after protocol", parser.pos)
    try:
        validate_tree(tree)
    except ValueError as exc:
        raise ProtocolParseError(str(exc), 0) from exc
    return tree


def to_json_dict(tree: ProtocolTree) -> dict:
    """Structured JSON form with fields {type, link, k, left, right}."""
    if isinstance(tree, Leaf):
        return {"type": "leaf", "link": tree.link, "k": tree.rounds}
    return {
        "type": "swap",
        "k": tree.rounds,
        "left": to_json_dict(tree.left),
        "right": to_json_dict(tree.right),
    }


def from_json_dict(obj: dict) -> ProtocolTree:
    kind = obj.get("type")
    if kind == "leaf":
        return Leaf(link=int(obj["link"]), rounds=int(obj["k"]))
    if kind == "swap":
        return Branch(
            left=from_json_dict(obj["left"]),
            right=from_json_dict(obj["right"]),
            rounds=int(obj["k"]),
        )
    raise ValueError(f"unknown protocol node type {kind!r}")
