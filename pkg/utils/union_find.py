import numpy as np


class UnionFind:
    """Disjoint sets over 0..size-1 with path compression and union by size."""

    def __init__(self, size: int):
        self.parents = list(range(size))
        self.sizes = [1] * size
        self.num_components = size

    @property
    def size(self) -> int:
        return len(self.parents)

    def find_parent(self, a: int) -> int:
        root = a
        while self.parents[root] != root:
            root = self.parents[root]
        while self.parents[a] != root:
            self.parents[a], a = root, self.parents[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find_parent(a), self.find_parent(b)
        if ra == rb:
            return False
        if self.sizes[ra] < self.sizes[rb]:
            ra, rb = rb, ra
        self.parents[rb] = ra
        self.sizes[ra] += self.sizes[rb]
        self.num_components -= 1
        return True

    def union_pairs(self, left: np.ndarray, right: np.ndarray) -> None:
        for a, b in zip(np.asarray(left).ravel().tolist(), np.asarray(right).ravel().tolist()):
            self.union(a, b)

    def compact_labels(self) -> np.ndarray:
        """Map every element to a component index 0..num_components-1, ordered by first element."""
        out = np.empty(self.size, dtype=np.int64)
        seen = {}
        for i in range(self.size):
            root = self.find_parent(i)
            if root not in seen:
                seen[root] = len(seen)
            out[i] = seen[root]
        return out
