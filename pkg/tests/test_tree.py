"""Category-tree structure and the closed-form path length against a BFS oracle."""

from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from knowspan.corpus import PacsCode, Paper
from knowspan.tree import (
    LEAF_LEVEL,
    ROOT,
    build_tree,
    lca_level,
    network_distance,
    path_length,
)


def codes(*texts):
    return [PacsCode.from_text(t) for t in texts]


def bfs_distance(tree, start: str, goal: str) -> int:
    """Oracle: breadth-first search over the materialized undirected edge list."""
    adjacency: dict[str, list[str]] = {ROOT: []}
    for child, parent, _level in tree.edges():
        adjacency.setdefault(child, []).append(parent)
        adjacency.setdefault(parent, []).append(child)
    frontier = deque([(start, 0)])
    seen = {start}
    while frontier:
        node, dist = frontier.popleft()
        if node == goal:
            return dist
        for neighbor in adjacency[node]:
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append((neighbor, dist + 1))
    raise AssertionError(f"no path from {start} to {goal}")


def make_paper(code_texts, paper_id="P", year=2000):
    return Paper(
        id=paper_id,
        year=year,
        journal="J",
        pacs_codes=tuple(PacsCode.from_text(t) for t in code_texts),
        author_count=1,
        n_pages=4,
        title_length=5,
        references=(),
    )


# ---------------------------------------------------------------- structure

def test_single_code_chain():
    tree = build_tree(codes("03.67.Ah"))
    assert tree.level[ROOT] == 1
    assert tree.parent["0"] == ROOT
    assert tree.parent["03"] == "0"
    assert tree.parent["036"] == "03"
    assert tree.parent["0367"] == "036"
    assert tree.parent["0367Ah"] == "0367"
    assert tree.level["0367Ah"] == LEAF_LEVEL
    assert tree.leaves == {"0367Ah"}


def test_shared_prefixes_share_nodes():
    tree = build_tree(codes("03.67.Ah", "03.75.Fi"))
    # both leaves hang under the shared "03" node
    assert tree.parent["0367"] == "036"
    assert tree.parent["0375"] == "037"
    assert tree.parent["036"] == "03"
    assert tree.parent["037"] == "03"


def test_empty_tree_is_error():
    with pytest.raises(ValueError):
        build_tree([])


def test_unknown_code_is_error():
    tree = build_tree(codes("03.67.Ah"))
    with pytest.raises(KeyError, match="05.45.Xt"):
        path_length(tree, *codes("03.67.Ah", "05.45.Xt"))


# ---------------------------------------------------------------- distances

def test_worked_example_level3_ancestor_gives_6():
    # codes that first diverge below their shared two-character node
    a, b = codes("03.67.Ah", "03.75.Fi")
    assert lca_level(a, b) == 3
    tree = build_tree([a, b])
    assert path_length(tree, a, b) == 6


def test_worked_example_level2_ancestor_gives_8():
    a, b = codes("03.67.Ah", "05.45.Xt")
    assert lca_level(a, b) == 2
    tree = build_tree([a, b])
    assert path_length(tree, a, b) == 8


def test_distance_extremes():
    a, b = codes("03.67.Ah", "42.50.Dv")  # nothing shared: through the root
    tree = build_tree([a, b])
    assert path_length(tree, a, b) == 10
    assert path_length(tree, a, a) == 0
    # divergence only in the trailing pair: shared level-5 node
    c, d = codes("03.67.Ah", "03.67.Bg")
    tree2 = build_tree([c, d])
    assert path_length(tree2, c, d) == 2


code_text = st.text(alphabet="0123456789ABab", min_size=6, max_size=6)


@settings(max_examples=120)
@given(code_text, code_text)
def test_metric_properties(a_text, b_text):
    a, b = PacsCode.from_text(a_text), PacsCode.from_text(b_text)
    tree = build_tree([a, b])
    d = path_length(tree, a, b)
    assert d == path_length(tree, b, a)
    assert d % 2 == 0
    assert 0 <= d <= 2 * (LEAF_LEVEL - 1)
    assert (d == 0) == (a == b)


@settings(max_examples=60)
@given(code_text, code_text, code_text)
def test_triangle_inequality(a_text, b_text, c_text):
    a, b, c = (PacsCode.from_text(t) for t in (a_text, b_text, c_text))
    tree = build_tree([a, b, c])
    assert path_length(tree, a, c) <= path_length(tree, a, b) + path_length(tree, b, c)


@settings(max_examples=40, deadline=None)
@given(code_text, code_text)
def test_closed_form_matches_bfs(a_text, b_text):
    a, b = PacsCode.from_text(a_text), PacsCode.from_text(b_text)
    tree = build_tree([a, b])
    assert path_length(tree, a, b) == bfs_distance(tree, a.compact, b.compact)


# ---------------------------------------------------------------- paper means

def test_network_distance_single_code_is_zero():
    tree = build_tree(codes("03.67.Ah"))
    assert network_distance(make_paper(["03.67.Ah"]), tree) == 0.0


def test_network_distance_averages_pairs():
    texts = ["03.67.Ah", "03.75.Fi", "05.45.Xt"]
    tree = build_tree(codes(*texts))
    paper = make_paper(texts)
    # pairs: (03.67, 03.75) -> 6, (03.67, 05.45) -> 8, (03.75, 05.45) -> 8
    assert network_distance(paper, tree) == pytest.approx((6 + 8 + 8) / 3)


def test_network_distance_matches_bfs_mean():
    rng = np.random.default_rng(4)
    alphabet = "0123456789"
    texts = list({
        "".join(rng.choice(list(alphabet)) for _ in range(6)) for _ in range(8)
    })[:5]
    tree = build_tree(codes(*texts))
    paper = make_paper(texts)
    m = len(texts)
    expected = np.mean([
        bfs_distance(tree, texts[i].replace(".", ""), texts[j].replace(".", ""))
        for i in range(m)
        for j in range(i + 1, m)
    ])
    assert network_distance(paper, tree) == pytest.approx(expected, rel=1e-12)


def test_edges_export_order_is_deterministic():
    tree = build_tree(codes("03.67.Ah", "05.45.Xt"))
    rows = tree.edges()
    assert rows == sorted(rows, key=lambda r: (r[2], r[0]))
    assert ("0", ROOT, 2) in rows
