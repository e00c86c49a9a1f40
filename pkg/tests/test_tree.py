import numpy as np
import pytest

from treecompress.tree import (
    CannotPruneRootError,
    CycleError,
    DanglingIndexError,
    MultipleRootsError,
    Tree,
    build_tree,
    is_isomorphic,
    skeleton,
)

from conftest import GOLDEN_SENTENCE, random_tree_arrays


def chain(n):
    return Tree([f"c{k}" for k in range(n)], [None] + list(range(n - 1)))


def test_single_node():
    t = build_tree(["root"], [None])
    assert len(t) == 1
    assert t.root == 0
    assert t.is_leaf(0)


def test_golden_tree_shape(golden_tree):
    assert len(golden_tree) == 23
    assert golden_tree.out_degree == 3  # S -> NP, VP, .


def test_multiple_roots_rejected():
    with pytest.raises(MultipleRootsError):
        build_tree(["a", "b"], [None, None])


def test_no_root_rejected():
    with pytest.raises(MultipleRootsError):
        build_tree(["a", "b"], [1, 0])


def test_cycle_rejected():
    # 2-cycle hanging off a root
    with pytest.raises(CycleError):
        build_tree(["a", "b", "c"], [None, 2, 1])


def test_dangling_index_rejected():
    with pytest.raises(DanglingIndexError):
        build_tree(["a", "b"], [None, 5])


def test_inconsistent_children_rejected():
    with pytest.raises(DanglingIndexError):
        Tree(["a", "b"], [None, 0], children=[[], [1]])


def test_skeleton_ignores_labels():
    a = Tree(["x", "y", "z"], [None, 0, 0])
    b = Tree(["1", "2", "3"], [None, 0, 0])
    assert skeleton(a) == skeleton(b)
    assert is_isomorphic(a, b)


def test_skeleton_single_node():
    assert skeleton(build_tree(["a"], [None])) == ()


def test_chain_vs_star_not_isomorphic():
    star = Tree(["a", "b", "c"], [None, 0, 0])
    assert not is_isomorphic(chain(3), star)


def test_isomorphism_identity_and_relabel(golden_tree):
    assert is_isomorphic(golden_tree, golden_tree)
    relabeled = golden_tree.relabel([f"L{u}" for u in range(len(golden_tree))])
    assert is_isomorphic(golden_tree, relabeled)


def test_skeleton_equivalence_relation(rng):
    trees = []
    for _ in range(15):
        labels, parents = random_tree_arrays(rng)
        trees.append(Tree(labels, parents))
    for a in trees:
        assert is_isomorphic(a, a)
        for b in trees:
            assert is_isomorphic(a, b) == is_isomorphic(b, a)
            for c in trees:
                if is_isomorphic(a, b) and is_isomorphic(b, c):
                    assert is_isomorphic(a, c)


def test_topdown_order_trivial():
    t = Tree(["r", "a", "b"], [None, 0, 0])
    assert t.topdown_order() == [0, 1, 2]
    assert build_tree(["x"], [None]).topdown_order() == [0]


def test_topdown_order_parents_first(golden_tree, rng):
    for t in [golden_tree] + [
        Tree(*random_tree_arrays(rng)) for _ in range(25)
    ]:
        order = t.topdown_order()
        assert sorted(order) == list(range(len(t)))
        pos = {u: k for k, u in enumerate(order)}
        for u in range(len(t)):
            if t.parents[u] is not None:
                assert pos[t.parents[u]] < pos[u]


def test_topdown_order_siblings_in_child_order(golden_tree):
    order = golden_tree.topdown_order()
    pos = {u: k for k, u in enumerate(order)}
    for u in range(len(golden_tree)):
        kids = golden_tree.children[u]
        for a, b in zip(kids, kids[1:]):
            assert pos[a] < pos[b]


def test_leaves_in_order(golden_tree):
    assert [golden_tree.labels[u] for u in golden_tree.leaves()] == GOLDEN_SENTENCE
    assert build_tree(["x"], [None]).leaves() == [0]
    # full binary tree of depth 2
    t = Tree(list("rabcdef"), [None, 0, 0, 1, 1, 2, 2])
    assert [t.labels[u] for u in t.leaves()] == ["c", "d", "e", "f"]


def test_prune_pp_subtree(golden_tree):
    pp = next(
        u for u in range(len(golden_tree)) if golden_tree.labels[u] == "PP"
    )
    pruned, old_of_new = golden_tree.prune([pp])
    assert len(pruned) == 17
    assert [pruned.labels[u] for u in pruned.leaves()] == [
        "I", "like", "playing", "football", ".",
    ]
    assert not is_isomorphic(golden_tree, pruned)
    # provenance maps back to original labels
    for new, old in enumerate(old_of_new):
        assert pruned.labels[new] == golden_tree.labels[old]


def test_prune_empty_set_is_isomorphic_copy(golden_tree):
    copy, old_of_new = golden_tree.prune([])
    assert is_isomorphic(golden_tree, copy)
    assert old_of_new == list(range(len(golden_tree)))


def test_prune_leaf(golden_tree):
    leaf = golden_tree.leaves()[0]
    pruned, _ = golden_tree.prune([leaf])
    assert len(pruned) == len(golden_tree) - 1


def test_prune_root_rejected(golden_tree):
    with pytest.raises(CannotPruneRootError):
        golden_tree.prune([golden_tree.root])


def test_prune_normalizes_nested_removals(golden_tree):
    pp = next(u for u in range(len(golden_tree)) if golden_tree.labels[u] == "PP")
    inner = golden_tree.children[pp][0]
    once, _ = golden_tree.prune([pp])
    twice, _ = golden_tree.prune([pp, inner])
    assert is_isomorphic(once, twice)


def test_prune_preserves_surviving_leaf_order(rng):
    for _ in range(25):
        labels, parents = random_tree_arrays(rng)
        t = Tree(labels, parents)
        candidates = [u for u in range(len(t)) if u != t.root]
        if not candidates:
            continue
        remove = list(
            rng.choice(candidates, size=min(2, len(candidates)), replace=False)
        )
        pruned, old_of_new = t.prune(remove)
        surviving = [old_of_new[u] for u in pruned.leaves()]
        original_order = {u: k for k, u in enumerate(t.leaves())}
        kept_positions = [original_order[u] for u in surviving if u in original_order]
        assert kept_positions == sorted(kept_positions)


def test_build_round_trips_arrays(rng):
    for _ in range(20):
        labels, parents = random_tree_arrays(rng)
        t = build_tree(labels, parents)
        assert list(t.labels) == labels
        assert list(t.parents) == parents
        rebuilt = build_tree(list(t.labels), list(t.parents), t.children)
        assert rebuilt.children == t.children


def test_out_degree_limit():
    labels = ["r"] + [f"c{k}" for k in range(5)]
    parents = [None] + [0] * 5
    with pytest.raises(Exception):
        Tree(labels, parents, max_out_degree=4)
