"""Six-level category hierarchy and shortest-path distances between codes.

Every full code is a leaf on level 6 under a single root.  Because the tree
is built from character prefixes, the path length between two leaves has the
closed form 2 * (6 - level of the lowest common ancestor).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .corpus import PacsCode, Paper

ROOT = "physics"
ROOT_LEVEL = 1
LEAF_LEVEL = 6


@dataclass(frozen=True)
class KnowledgeTree:
    parent: dict[str, str]  # child label -> parent label; the root has none
    level: dict[str, int]  # label -> level, 1 at the root, 6 at leaves
    leaves: frozenset[str]  # compact six-character leaf labels

    def edges(self) -> list[tuple[str, str, int]]:
        """(child, parent, child_level) rows, deterministically ordered."""
        rows = [(child, parent, self.level[child]) for child, parent in self.parent.items()]
        rows.sort(key=lambda row: (row[2], row[0]))
        return rows


def build_tree(codes: Iterable[PacsCode]) -> KnowledgeTree:
    codes = list(codes)
    if not codes:
        raise ValueError("cannot build a tree from zero codes")
    parent: dict[str, str] = {}
    level: dict[str, int] = {ROOT: ROOT_LEVEL}
    leaves: set[str] = set()
    for code in codes:
        chain = (ROOT, *code.levels)
        for depth, label in enumerate(chain[1:], start=2):
            parent[label] = chain[depth - 2]
            level[label] = depth
        leaves.add(code.compact)
    return KnowledgeTree(parent=parent, level=level, leaves=frozenset(leaves))


def lca_level(p: PacsCode, q: PacsCode) -> int:
    """Level of the lowest common ancestor of two leaf codes."""
    a, b = p.compact, q.compact
    shared = 0
    for ca, cb in zip(a, b):
        if ca != cb:
            break
        shared += 1
    if shared == 6:
        return 6
    if shared >= 4:
        return 5  # they agree through the fourth character
    return shared + 1


def path_length(tree: KnowledgeTree, p: PacsCode, q: PacsCode) -> int:
    """Edge count of the unique tree path between two leaf codes."""
    for code in (p, q):
        if code.compact not in tree.leaves:
            raise KeyError(f"code {code.raw!r} is not a leaf of this tree")
    return 2 * (LEAF_LEVEL - lca_level(p, q))


def network_distance(paper: Paper, tree: KnowledgeTree) -> float:
    """Mean tree path length over all unordered code pairs; 0.0 for one code."""
    codes = paper.pacs_codes
    m = len(codes)
    if m == 0:
        raise ValueError(f"paper {paper.id!r} has no codes")
    if m == 1:
        return 0.0
    total = 0
    for i in range(m):
        for j in range(i + 1, m):
            total += path_length(tree, codes[i], codes[j])
    return total / (m * (m - 1) // 2)


def export_edges(tree: KnowledgeTree, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("child_label,parent_label,level\n")
        for child, parent, level in tree.edges():
            fh.write(f"{child},{parent},{level}\n")
