"""Infinite locally-finite graphs with integer vertex encodings.

Every vertex is a non-negative integer below 2**63 (``VertexId``). The
encoding is fixed per topology kind and is part of the reproducibility
contract, as is the neighbour order returned by :meth:`Topology.neighbors`
(jump instructions index into it).

Encodings
---------
line      zigzag of the integer coordinate: 0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ...
grid2d    ``(zigzag(x) << 32) | zigzag(y)``
tree r    breadth-first numbering; the root is 0 and siblings are ordered by
          child index. A vertex is decoded to its path of child indices.
cycle n   the residue 0..n-1
path n    the position 0..n-1

Neighbour orders
----------------
line      [x-1, x+1]
grid2d    [(x-1,y), (x+1,y), (x,y-1), (x,y+1)]
tree r    root: [child 0, ..., child r-1]; other: [parent, child 0, ..., child r-2]
cycle n   [v-1 mod n, v+1 mod n]
path n    [v-1, v+1] with missing endpoints dropped
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

VertexId = int

_COORD_BITS = 32
_COORD_MASK = (1 << _COORD_BITS) - 1
_MAX_ID = (1 << 63) - 1

KINDS = ("line", "grid2d", "tree", "cycle", "path")


class InvalidVertex(ValueError):
    pass


def zigzag(z: int) -> int:
    return 2 * z if z >= 0 else -2 * z - 1


def unzigzag(n: int) -> int:
    return n // 2 if n % 2 == 0 else -(n + 1) // 2


@dataclass(frozen=True)
class Topology:
    """A vertex-transitive (or small finite test) graph.

    Parameters
    ----------
    kind : str
        One of ``line``, ``grid2d``, ``tree``, ``cycle``, ``path``.
    size : int
        Branching number ``r`` for trees, number of vertices for ``cycle`` and
        ``path``; ignored otherwise.
    """

    kind: str
    size: int = 0
    _tree_starts: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.kind == "tree":
            if self.size < 3:
                raise ValueError("regular tree needs r >= 3 (r = 2 is the line)")
            object.__setattr__(self, "_tree_starts", _tree_level_starts(self.size))
        if self.kind == "cycle" and self.size < 3:
            raise ValueError("cycle needs n >= 3")
        if self.kind == "path" and self.size < 2:
            raise ValueError("path needs n >= 2")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "Topology":
        """Parse ``line``, ``grid2d``, ``tree r=3``, ``cycle n=8``, ``path n=4``."""
        parts = text.replace(",", " ").split()
        if not parts:
            raise ValueError("empty topology spec")
        kind = parts[0]
        params = {}
        for p in parts[1:]:
            key, _, val = p.partition("=")
            params[key] = int(val)
        if kind == "tree":
            return cls(kind, params.get("r", 3))
        if kind in ("cycle", "path"):
            if "n" not in params:
                raise ValueError(f"{kind} needs n=<size>")
            return cls(kind, params["n"])
        return cls(kind)

    def spec(self) -> str:
        if self.kind == "tree":
            return f"tree r={self.size}"
        if self.kind in ("cycle", "path"):
            return f"{self.kind} n={self.size}"
        return self.kind

    @property
    def origin(self) -> VertexId:
        return 0

    @property
    def finite(self) -> bool:
        return self.kind in ("cycle", "path")

    @property
    def transitive(self) -> bool:
        return self.kind != "path"

    # -- encoding -------------------------------------------------------------

    def encode(self, coord) -> VertexId:
        k = self.kind
        if k == "line":
            v = zigzag(int(coord))
        elif k == "grid2d":
            x, y = coord
            zx, zy = zigzag(int(x)), zigzag(int(y))
            if zx > _COORD_MASK or zy > _COORD_MASK:
                raise InvalidVertex(f"grid coordinate out of range: {coord}")
            v = (zx << _COORD_BITS) | zy
        elif k == "tree":
            v = self._tree_encode(tuple(coord))
        else:
            v = int(coord)
            if not 0 <= v < self.size:
                raise InvalidVertex(f"vertex {v} outside {self.spec()}")
        if v > _MAX_ID:
            raise InvalidVertex(f"vertex {coord!r} does not fit in 63 bits")
        return v

    def decode(self, v: VertexId):
        self.validate(v)
        k = self.kind
        if k == "line":
            return unzigzag(v)
        if k == "grid2d":
            return (unzigzag(v >> _COORD_BITS), unzigzag(v & _COORD_MASK))
        if k == "tree":
            return self._tree_decode(v)
        return v

    def validate(self, v: VertexId) -> None:
        if not isinstance(v, int) or isinstance(v, bool) or v < 0 or v > _MAX_ID:
            raise InvalidVertex(f"invalid vertex id {v!r}")
        if self.finite and v >= self.size:
            raise InvalidVertex(f"vertex {v} outside {self.spec()}")
        if self.kind == "grid2d" and (v >> _COORD_BITS) > _COORD_MASK:
            raise InvalidVertex(f"invalid grid vertex id {v}")
        if self.kind == "tree" and v >= self._tree_starts[-1]:
            raise InvalidVertex(f"tree vertex {v} deeper than the encodable range")

    # -- adjacency ------------------------------------------------------------

    def neighbors(self, v: VertexId) -> list[VertexId]:
        self.validate(v)
        k = self.kind
        if k == "line":
            z = unzigzag(v)
            return [zigzag(z - 1), zigzag(z + 1)]
        if k == "grid2d":
            x, y = unzigzag(v >> _COORD_BITS), unzigzag(v & _COORD_MASK)
            return [self.encode(c) for c in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1))]
        if k == "tree":
            return self._tree_neighbors(v)
        n = self.size
        if k == "cycle":
            return [(v - 1) % n, (v + 1) % n]
        return [u for u in (v - 1, v + 1) if 0 <= u < n]

    def degree(self, v: VertexId) -> int:
        return len(self.neighbors(v))

    def distance(self, u: VertexId, v: VertexId) -> int:
        k = self.kind
        if k == "line":
            return abs(self.decode(u) - self.decode(v))
        if k == "grid2d":
            (a, b), (c, d) = self.decode(u), self.decode(v)
            return abs(a - c) + abs(b - d)
        if k == "tree":
            p, q = self.decode(u), self.decode(v)
            common = 0
            while common < min(len(p), len(q)) and p[common] == q[common]:
                common += 1
            return len(p) + len(q) - 2 * common
        if k == "cycle":
            d = abs(u - v) % self.size
            return min(d, self.size - d)
        self.validate(u)
        self.validate(v)
        return abs(u - v)

    def ball(self, o: VertexId, radius: int) -> list[VertexId]:
        """Vertices within graph distance ``radius`` of ``o``, in BFS order."""
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.validate(o)
        seen = {o: 0}
        order = [o]
        frontier = deque([o])
        while frontier:
            x = frontier.popleft()
            if seen[x] == radius:
                continue
            for y in self.neighbors(x):
                if y not in seen:
                    seen[y] = seen[x] + 1
                    order.append(y)
                    frontier.append(y)
        return order

    def boundary(self, K: Iterable[VertexId]) -> list[VertexId]:
        """Outer vertex boundary of ``K`` (neighbours of K not in K), sorted."""
        Kset = set(K)
        out = set()
        for x in Kset:
            out.update(y for y in self.neighbors(x) if y not in Kset)
        return sorted(out)

    # -- tree internals -------------------------------------------------------

    def _tree_level(self, v: int) -> tuple[int, int]:
        starts = self._tree_starts
        lo, hi = 0, len(starts) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if starts[mid] <= v:
                lo = mid
            else:
                hi = mid
        return lo, v - starts[lo]

    def _tree_neighbors(self, v: int) -> list[int]:
        r = self.size
        starts = self._tree_starts
        depth, off = self._tree_level(v)
        out = []
        if depth == 0:
            children = [starts[1] + c for c in range(r)]
        else:
            parent_off = 0 if depth == 1 else off // (r - 1)
            out.append(starts[depth - 1] + parent_off)
            children = [starts[depth + 1] + off * (r - 1) + c for c in range(r - 1)]
        if depth + 2 >= len(starts) and children:
            raise InvalidVertex(f"tree vertex {v} at the edge of the encodable range")
        return out + children

    def _tree_encode(self, path: tuple) -> int:
        r = self.size
        if not path:
            return 0
        if not 0 <= path[0] < r or any(not 0 <= c < r - 1 for c in path[1:]):
            raise InvalidVertex(f"invalid tree path {path}")
        off = path[0]
        for c in path[1:]:
            off = off * (r - 1) + c
        depth = len(path)
        if depth >= len(self._tree_starts) - 1:
            raise InvalidVertex(f"tree path {path} too deep to encode")
        return self._tree_starts[depth] + off

    def _tree_decode(self, v: int) -> tuple:
        r = self.size
        depth, off = self._tree_level(v)
        path = []
        for _ in range(depth - 1):
            path.append(off % (r - 1))
            off //= r - 1
        if depth:
            path.append(off)
        return tuple(reversed(path))


def _tree_level_starts(r: int) -> tuple:
    # starts[d] = index of the first vertex at depth d; last entry bounds the id range
    starts = [0, 1]
    count = r
    while starts[-1] + count <= _MAX_ID:
        starts.append(starts[-1] + count)
        count *= r - 1
    return tuple(starts)
