"""Labeled ordered rooted trees and the structural operations built on them.

Nodes are dense integer indices ``0..n-1``. Child order is significant:
for parse trees it encodes word order, so isomorphism is ordered-skeleton
equality throughout this package.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Sequence

DEFAULT_MAX_OUT_DEGREE = 64


class TreeError(ValueError):
    """Base class for structural tree errors."""


class MultipleRootsError(TreeError):
    pass


class CycleError(TreeError):
    pass


class DanglingIndexError(TreeError):
    pass


class OutDegreeError(TreeError):
    pass


class CannotPruneRootError(TreeError):
    pass


class Tree:
    """Immutable labeled ordered rooted tree with bounded out-degree.

    Parameters
    ----------
    labels : one label per node (symbol for internal nodes, token for leaves
        when used as a parse tree; any hashable or vector otherwise).
    parents : per-node parent index, ``None`` exactly once (the root).
    children : optional per-node ordered child lists; when omitted, children
        are ordered by node index.
    """

    __slots__ = ("labels", "parents", "children", "root")

    def __init__(
        self,
        labels: Sequence,
        parents: Sequence[int | None],
        children: Sequence[Sequence[int]] | None = None,
        max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
    ):
        n = len(labels)
        if len(parents) != n:
            raise DanglingIndexError(
                f"{n} labels but {len(parents)} parent links"
            )
        roots = [u for u, p in enumerate(parents) if p is None]
        if len(roots) != 1:
            raise MultipleRootsError(
                f"expected exactly one root, found {len(roots)}"
            )
        for u, p in enumerate(parents):
            if p is not None and not (0 <= p < n):
                raise DanglingIndexError(f"node {u} has parent {p} out of range")

        if children is None:
            kids: list[list[int]] = [[] for _ in range(n)]
            for u, p in enumerate(parents):
                if p is not None:
                    kids[p].append(u)
        else:
            if len(children) != n:
                raise DanglingIndexError("children list length mismatch")
            kids = [list(cs) for cs in children]
            for u, cs in enumerate(kids):
                for c in cs:
                    if not (0 <= c < n):
                        raise DanglingIndexError(
                            f"node {u} lists child {c} out of range"
                        )
                    if parents[c] != u:
                        raise DanglingIndexError(
                            f"child link {u}->{c} contradicts parent array"
                        )
            listed = sum(len(cs) for cs in kids)
            if listed != n - 1:
                raise DanglingIndexError("children lists do not cover all edges")

        for u, cs in enumerate(kids):
            if len(cs) > max_out_degree:
                raise OutDegreeError(
                    f"node {u} has out-degree {len(cs)} > {max_out_degree}"
                )

        # Reachability scan from the root doubles as the cycle check: with
        # n-1 parent links, every node reachable <=> no cycle.
        seen = [False] * n
        stack = [roots[0]]
        while stack:
            u = stack.pop()
            seen[u] = True
            stack.extend(kids[u])
        if not all(seen):
            raise CycleError("graph contains a cycle or unreachable nodes")

        object.__setattr__(self, "labels", tuple(labels))
        object.__setattr__(self, "parents", tuple(parents))
        object.__setattr__(self, "children", tuple(tuple(cs) for cs in kids))
        object.__setattr__(self, "root", roots[0])

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    def __len__(self) -> int:
        return len(self.labels)

    def is_leaf(self, u: int) -> bool:
        return not self.children[u]

    @property
    def out_degree(self) -> int:
        """Maximum out-degree actually occurring in this tree."""
        return max(len(cs) for cs in self.children)

    def topdown_order(self) -> list[int]:
        """Pre-order traversal: every node after its parent, siblings in order."""
        order = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            order.append(u)
            stack.extend(reversed(self.children[u]))
        return order

    def leaves(self) -> list[int]:
        """Leaf indices in left-to-right order."""
        return [u for u in self.topdown_order() if self.is_leaf(u)]

    def skeleton(self) -> tuple:
        """Label-erased structure as nested tuples, comparable and hashable."""

        def skel(u: int) -> tuple:
            return tuple(skel(c) for c in self.children[u])

        return skel(self.root)

    def relabel(self, labels: Sequence) -> "Tree":
        return Tree(labels, self.parents, self.children)

    def depth(self, u: int) -> int:
        d = 0
        while self.parents[u] is not None:
            u = self.parents[u]
            d += 1
        return d

    def prune(self, roots_to_remove: Iterable[int]) -> tuple["Tree", list[int]]:
        """Remove the subtrees rooted at the given nodes.

        The removal set is normalized first: nodes that are descendants of
        other removed nodes are dropped. Returns the new tree plus a
        provenance map ``old_index[new_index]`` so per-node data can be
        transported across the re-compaction.
        """
        removed = set(roots_to_remove)
        if self.root in removed:
            raise CannotPruneRootError("cannot prune the root subtree")
        dead = [False] * len(self)
        for u in self.topdown_order():
            p = self.parents[u]
            if u in removed or (p is not None and dead[p]):
                dead[u] = True
        old_of_new = [u for u in range(len(self)) if not dead[u]]
        new_of_old = {old: new for new, old in enumerate(old_of_new)}
        labels = [self.labels[u] for u in old_of_new]
        parents = [
            None if self.parents[u] is None else new_of_old[self.parents[u]]
            for u in old_of_new
        ]
        children = [
            [new_of_old[c] for c in self.children[u] if not dead[c]]
            for u in old_of_new
        ]
        return Tree(labels, parents, children), old_of_new

    def __repr__(self) -> str:
        return f"Tree(n={len(self)}, root={self.root})"


def build_tree(
    node_labels: Sequence,
    parent_links: Sequence[int | None],
    child_orders: Sequence[Sequence[int]] | None = None,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> Tree:
    """Validated construction from parallel label/parent arrays."""
    return Tree(node_labels, parent_links, child_orders, max_out_degree)


def skeleton(t: Tree) -> tuple:
    return t.skeleton()


def is_isomorphic(a: Tree, b: Tree) -> bool:
    """Ordered-tree isomorphism: equality of label-erased skeletons."""
    return a.skeleton() == b.skeleton()
