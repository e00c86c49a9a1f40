import numpy as np
import pytest

from treecompress.ptb import parse_bracketed

GOLDEN_TEXT = (
    "(ROOT (S (NP (PRP I)) (VP (VBP like) (S (VP (VBG playing)) "
    "(NP (NN football)) (PP (IN with) (NN (PRP you))))) (. .)))"
)
GOLDEN_SENTENCE = ["I", "like", "playing", "football", "with", "you", "."]
GOLDEN_COMPRESSED = ["I", "like", "playing", "football", "."]
GOLDEN_MASK = [1, 1, 1, 1, 0, 0, 1]


@pytest.fixture
def golden_tree():
    return parse_bracketed(GOLDEN_TEXT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_tree_arrays(rng, max_nodes=15, max_children=3):
    """Random labeled tree as (labels, parents) arrays."""
    n = int(rng.integers(1, max_nodes + 1))
    labels = [f"n{k}" for k in range(n)]
    parents = [None]
    for u in range(1, n):
        # attach to an earlier node with spare capacity
        while True:
            p = int(rng.integers(0, u))
            if parents.count(p) < max_children:
                break
        parents.append(p)
    return labels, parents
