"""Canonical exotic aromatic forests.

A forest is a directed graph in which every vertex has at most one
successor.  Connected components are rooted trees or aromas; an aroma
carries either one directed cycle or one stolon (an unordered link
between two successor-free vertices).  Vertices are decorated: black
(``'b'``), an extra lowercase letter (``'w'``, ...), or a positive
integer.  Integer decorations mark liana halves, occur exactly twice
each, and are identified up to relabelling, so two forests differing
only by a permutation of the labels are the same value.

The order grading is #black + #letters + #lianas - #stolons; in the
purely black/numbered (exotic) case this is |V_black| + |L| - |S|.
All values are immutable and identified by a canonical key.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

BLACK = "b"

Decoration = str | int

# placeholder decoration for a not-yet-paired liana half (enumeration only)
HALF = 0


class ForestError(ValueError):
    """Structural violation or unparseable forest text."""


# ---------------------------------------------------------------------------
# raw (mutable) graphs


class RawForest:
    """Mutable builder; ``canonical()`` freezes it into a Forest value."""

    def __init__(self):
        self.dec: list[Decoration] = []
        self.succ: list[int | None] = []
        self.stolons: set[frozenset[int]] = set()

    def add_vertex(self, dec: Decoration = BLACK) -> int:
        self.dec.append(dec)
        self.succ.append(None)
        return len(self.dec) - 1

    def add_edge(self, child: int, parent: int) -> None:
        if self.succ[child] is not None:
            raise ForestError(f"vertex {child} already has a successor")
        self.succ[child] = parent

    def add_stolon(self, u: int, v: int) -> None:
        self.stolons.add(frozenset((u, v)))

    def copy(self) -> "RawForest":
        r = RawForest()
        r.dec = list(self.dec)
        r.succ = list(self.succ)
        r.stolons = set(self.stolons)
        return r

    def merge(self, other: "RawForest") -> list[int]:
        """Disjoint union; returns new indices of ``other``'s vertices.
        Positive liana labels of ``other`` are shifted clear of ours."""
        shift = len(self.dec)
        own = [d for d in self.dec if isinstance(d, int) and d > 0]
        lab_shift = max(own, default=0)
        for d in other.dec:
            self.dec.append(d + lab_shift if isinstance(d, int) and d > 0 else d)
        for s in other.succ:
            self.succ.append(None if s is None else s + shift)
        for st in other.stolons:
            u, v = tuple(st)
            self.stolons.add(frozenset((u + shift, v + shift)))
        return list(range(shift, shift + len(other.dec)))

    def root_of_merged(self, idxs: list[int]) -> int:
        for v in idxs:
            if self.succ[v] is None:
                return v
        raise ForestError("merged component has no root")

    def canonical(self) -> "Forest":
        return _canonicalize(self)


def _validate(raw: RawForest) -> None:
    n = len(raw.dec)
    stolon_vertices: set[int] = set()
    for st in raw.stolons:
        if len(st) != 2:
            raise ForestError("stolon must link two distinct vertices")
        for v in st:
            if v in stolon_vertices:
                raise ForestError("vertex in more than one stolon")
            stolon_vertices.add(v)
            if raw.succ[v] is not None:
                raise ForestError("stolon endpoint with a successor")
            if isinstance(raw.dec[v], int):
                raise ForestError("stolon endpoint cannot be a liana half")
    labels: dict[int, int] = {}
    for v in range(n):
        d = raw.dec[v]
        if isinstance(d, int):
            if d == HALF:
                raise ForestError("unpaired liana half placeholder")
            labels[d] = labels.get(d, 0) + 1
    for lab, k in labels.items():
        if k != 2:
            raise ForestError(f"liana label {lab} occurs {k} times (needs 2)")
    for v in range(n):
        s = raw.succ[v]
        if s is not None:
            if not (0 <= s < n):
                raise ForestError("dangling edge")
            if isinstance(raw.dec[s], int):
                raise ForestError("liana half with a predecessor")


def _components(raw: RawForest) -> list[list[int]]:
    """Weakly connected components w.r.t. edges and stolons (not lianas)."""
    n = len(raw.dec)
    adj: list[set[int]] = [set() for _ in range(n)]
    for v in range(n):
        s = raw.succ[v]
        if s is not None:
            adj[v].add(s)
            adj[s].add(v)
    for st in raw.stolons:
        u, v = tuple(st)
        adj[u].add(v)
        adj[v].add(u)
    seen = [False] * n
    comps = []
    for v0 in range(n):
        if seen[v0]:
            continue
        stack, comp = [v0], []
        seen[v0] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _cycle_of(raw: RawForest, comp: list[int]) -> list[int] | None:
    """The directed cycle of an aroma component, in successor order."""
    walk_order: dict[int, int] = {}
    v = comp[0]
    while v is not None and v not in walk_order:
        walk_order[v] = len(walk_order)
        v = raw.succ[v]
    if v is None:
        return None
    walk = sorted(walk_order, key=walk_order.get)
    return walk[walk_order[v]:]


# ---------------------------------------------------------------------------
# canonical encoding

def _dec_token(d: Decoration, labmap: dict[int, int] | None) -> str:
    if isinstance(d, int):
        if labmap is None or d == HALF:
            return "L?"
        return f"L{labmap[d]:03d}"
    return d


def _tree_children(raw: RawForest, comp: list[int],
                   cyc: list[int] | None) -> dict[int, list[int]]:
    cyc_set = set(cyc or ())
    children: dict[int, list[int]] = {}
    for v in comp:
        s = raw.succ[v]
        if s is None or v in cyc_set:
            continue  # cycle edges are not tree edges
        children.setdefault(s, []).append(v)
    return children


def _enc_tree(raw: RawForest, v: int, children: dict[int, list[int]],
              labmap: dict[int, int] | None) -> str:
    kids = sorted(_enc_tree(raw, c, children, labmap) for c in children.get(v, ()))
    tok = _dec_token(raw.dec[v], labmap)
    return tok + ("[" + ",".join(kids) + "]" if kids else "")


def _comp_encoding(raw: RawForest, comp: list[int],
                   labmap: dict[int, int] | None) -> str:
    in_comp = set(comp)
    cyc = _cycle_of(raw, comp)
    children = _tree_children(raw, comp, cyc)
    if cyc:
        encs = [_enc_tree(raw, v, children, labmap) for v in cyc]
        k = len(encs)
        best = min(";".join(encs[r:] + encs[:r]) for r in range(k))
        return "(" + best + ")"
    st = [s for s in raw.stolons if s <= in_comp]
    if st:
        u, v = tuple(st[0])
        pair = sorted([_enc_tree(raw, u, children, labmap),
                       _enc_tree(raw, v, children, labmap)])
        return "S{" + "|".join(pair) + "}"
    roots = [v for v in comp if raw.succ[v] is None]
    if len(roots) != 1:
        raise ForestError("component is neither a tree nor an aroma")
    return _enc_tree(raw, roots[0], children, labmap)


def _full_encoding(raw: RawForest, labmap: dict[int, int] | None) -> str:
    return "|".join(sorted(_comp_encoding(raw, c, labmap)
                           for c in _components(raw)))


def _best_labelling(raw: RawForest) -> tuple[str, dict[int, int]]:
    labels = sorted({d for d in raw.dec if isinstance(d, int)})
    if not labels:
        return _full_encoding(raw, {}), {}
    best, best_map = None, {}
    for perm in itertools.permutations(range(1, len(labels) + 1)):
        labmap = dict(zip(labels, perm))
        enc = _full_encoding(raw, labmap)
        if best is None or enc < best:
            best, best_map = enc, labmap
    return best, best_map


# ---------------------------------------------------------------------------
# the immutable value

@dataclass(frozen=True, eq=False)
class Forest:
    """Immutable canonical forest; equality and hashing go by ``key``."""

    key: str
    dec: tuple[Decoration, ...]
    succ: tuple[int | None, ...]
    stolons: frozenset[frozenset[int]]

    def __eq__(self, other):
        return isinstance(other, Forest) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other: "Forest"):
        return self.key < other.key

    def __repr__(self):
        return f"Forest({render(self)!r})"

    # -- structure helpers --------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.dec)

    def raw(self) -> RawForest:
        r = RawForest()
        r.dec = list(self.dec)
        r.succ = list(self.succ)
        r.stolons = set(self.stolons)
        return r

    def vertices(self) -> range:
        return range(len(self.dec))

    def is_black(self, v: int) -> bool:
        return self.dec[v] == BLACK

    def is_numbered(self, v: int) -> bool:
        return isinstance(self.dec[v], int)

    def black_vertices(self) -> list[int]:
        return [v for v in self.vertices() if not self.is_numbered(v)]

    @property
    def stolon_vertices(self) -> set[int]:
        return {v for st in self.stolons for v in st}

    @property
    def roots(self) -> tuple[int, ...]:
        sv = self.stolon_vertices
        return tuple(v for v in self.vertices()
                     if self.succ[v] is None and v not in sv)

    def predecessors(self, v: int) -> list[int]:
        return [u for u in self.vertices() if self.succ[u] == v]

    def liana_pairs(self) -> list[tuple[int, int]]:
        by_label: dict[int, list[int]] = {}
        for v in self.vertices():
            if isinstance(self.dec[v], int):
                by_label.setdefault(self.dec[v], []).append(v)
        return [tuple(vs) for _, vs in sorted(by_label.items())]

    def partner(self, v: int) -> int:
        for a, b in self.liana_pairs():
            if v == a:
                return b
            if v == b:
                return a
        raise ForestError("vertex is not a liana half")

    def components(self) -> list[list[int]]:
        return _components(self.raw())

    def cycle_vertices(self) -> set[int]:
        out: set[int] = set()
        raw = self.raw()
        for comp in _components(raw):
            cyc = _cycle_of(raw, comp)
            if cyc:
                out.update(cyc)
        return out

    def connected_pieces(self) -> list[list[int]]:
        """Components merged along liana pairings (exotic connectedness)."""
        comps = self.components()
        comp_of = {v: i for i, c in enumerate(comps) for v in c}
        parent = list(range(len(comps)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b in self.liana_pairs():
            parent[find(comp_of[a])] = find(comp_of[b])
        groups: dict[int, list[int]] = {}
        for i, c in enumerate(comps):
            groups.setdefault(find(i), []).extend(c)
        return [sorted(g) for g in groups.values()]

    def restrict(self, vertices: set[int]) -> "Forest":
        """Induced sub-forest (edges/stolons with both ends inside)."""
        idx = {v: i for i, v in enumerate(sorted(vertices))}
        raw = RawForest()
        for v in sorted(vertices):
            raw.add_vertex(self.dec[v])
        for v in sorted(vertices):
            s = self.succ[v]
            if s is not None and s in idx:
                raw.succ[idx[v]] = idx[s]
        for st in self.stolons:
            if st <= vertices:
                u, v = tuple(st)
                raw.add_stolon(idx[u], idx[v])
        return raw.canonical()

    # -- gradings -------------------------------------------------------------
    @property
    def num_black(self) -> int:
        return sum(1 for d in self.dec if d == BLACK)

    @property
    def num_letters(self) -> int:
        return sum(1 for d in self.dec if isinstance(d, str) and d != BLACK)

    @property
    def num_lianas(self) -> int:
        return sum(1 for d in self.dec if isinstance(d, int)) // 2

    @property
    def num_stolons(self) -> int:
        return len(self.stolons)

    @property
    def num_edges(self) -> int:
        return sum(1 for s in self.succ if s is not None)

    @property
    def order(self) -> int:
        return (self.num_black + self.num_letters + self.num_lianas
                - self.num_stolons)

    @property
    def num_roots(self) -> int:
        return len(self.roots)

    def is_empty(self) -> bool:
        return self.n == 0

    def is_exotic(self) -> bool:
        return self.num_letters == 0

    def has_aroma(self) -> bool:
        return bool(self.stolons) or bool(self.cycle_vertices())

    def is_tree(self) -> bool:
        """Single black-rooted tree, no aromas, no lianas crossing out."""
        return (self.num_roots == 1 and not self.has_aroma()
                and len(self.components()) == 1
                and not self.is_numbered(self.roots[0]))


def _canonical_order(raw: RawForest, labmap: dict[int, int]) -> list[int]:
    """Vertex output order: components sorted by encoding, roots first."""
    comps = _components(raw)
    keyed = sorted(((_comp_encoding(raw, c, labmap), c) for c in comps),
                   key=lambda t: t[0])
    order: list[int] = []
    for _, comp in keyed:
        in_comp = set(comp)
        cyc = _cycle_of(raw, comp)
        children = _tree_children(raw, comp, cyc)

        def emit(v: int) -> None:
            order.append(v)
            for _, c in sorted((_enc_tree(raw, c, children, labmap), c)
                               for c in children.get(v, ())):
                emit(c)

        if cyc:
            encs = [_enc_tree(raw, v, children, labmap) for v in cyc]
            k = len(encs)
            best_r = min(range(k), key=lambda r: ";".join(encs[r:] + encs[:r]))
            for i in range(k):
                emit(cyc[(best_r + i) % k])
        else:
            st = [s for s in raw.stolons if s <= in_comp]
            if st:
                u, v = sorted(tuple(st[0]),
                              key=lambda w: _enc_tree(raw, w, children, labmap))
                emit(u)
                emit(v)
            else:
                root, = [v for v in comp if raw.succ[v] is None]
                emit(root)
    return order


def _canonicalize(raw: RawForest) -> Forest:
    _validate(raw)
    enc, labmap = _best_labelling(raw)
    order = _canonical_order(raw, labmap)
    pos = {v: i for i, v in enumerate(order)}
    dec = tuple(labmap[raw.dec[v]] if isinstance(raw.dec[v], int) else raw.dec[v]
                for v in order)
    succ = tuple(None if raw.succ[v] is None else pos[raw.succ[v]] for v in order)
    stolons = frozenset(frozenset(pos[v] for v in st) for st in raw.stolons)
    return Forest(key=enc, dec=dec, succ=succ, stolons=stolons)


def canonicalize(raw: RawForest) -> Forest:
    """Freeze a raw graph into its canonical immutable value."""
    return _canonicalize(raw)


EMPTY = Forest(key="", dec=(), succ=(), stolons=frozenset())


# ---------------------------------------------------------------------------
# parsing and rendering

def parse(text: str) -> Forest:
    """Parse bracket notation, e.g. ``"(b[1]),b[1,b]"`` or ``"{}"``."""
    s = text.strip()
    if s == "{}":
        return EMPTY
    raw = RawForest()
    pos = 0

    def peek() -> str:
        return s[pos] if pos < len(s) else ""

    def expect(ch: str) -> None:
        nonlocal pos
        if peek() != ch:
            raise ForestError(f"expected {ch!r} at position {pos} in {text!r}")
        pos += 1

    def parse_int() -> int:
        nonlocal pos
        start = pos
        while pos < len(s) and s[pos].isdigit():
            pos += 1
        if start == pos:
            raise ForestError(f"expected integer at {start} in {text!r}")
        val = int(s[start:pos])
        if val <= 0:
            raise ForestError("liana labels are positive integers")
        return val

    def parse_tree() -> int:
        nonlocal pos
        ch = peek()
        if not (ch.isalpha() and ch.islower()):
            raise ForestError(f"expected vertex letter at {pos} in {text!r}")
        pos += 1
        v = raw.add_vertex(ch)
        if peek() == "[":
            pos += 1
            while True:
                c = parse_tree() if peek().isalpha() else raw.add_vertex(parse_int())
                raw.add_edge(c, v)
                if peek() == ",":
                    pos += 1
                    continue
                expect("]")
                break
        return v

    def parse_comp() -> None:
        nonlocal pos
        ch = peek()
        if ch == "(":
            pos += 1
            cyc = [parse_tree()]
            while peek() == ",":
                pos += 1
                cyc.append(parse_tree())
            expect(")")
            for i, v in enumerate(cyc):
                raw.add_edge(v, cyc[(i + 1) % len(cyc)])
        elif ch.isdigit():
            raw.add_vertex(parse_int())
        else:
            t = parse_tree()
            if peek() == "=":
                pos += 1
                u = parse_tree()
                raw.add_stolon(t, u)

    parse_comp()
    while peek() == ",":
        pos += 1
        parse_comp()
    if pos != len(s):
        raise ForestError(f"trailing input at position {pos} in {text!r}")
    return raw.canonical()


def _render_sort_key(txt: str):
    return (0, int(txt)) if txt.isdigit() else (1, txt)


def _render_tree(f: Forest, v: int, children: dict[int, list[int]]) -> str:
    d = f.dec[v]
    if isinstance(d, int):
        return str(d)
    kids = children.get(v, ())
    if not kids:
        return d
    parts = sorted((_render_tree(f, c, children) for c in kids),
                   key=_render_sort_key)
    return d + "[" + ",".join(parts) + "]"


def render(f: Forest) -> str:
    """Canonical text in the bracket grammar (inverse of ``parse``)."""
    if f.is_empty():
        return "{}"
    raw = f.raw()
    out = []
    for comp in _components(raw):
        in_comp = set(comp)
        cyc = _cycle_of(raw, comp)
        children = _tree_children(raw, comp, cyc)
        if cyc:
            encs = [_render_tree(f, v, children) for v in cyc]
            k = len(encs)
            best_r = min(range(k), key=lambda r: ",".join(encs[r:] + encs[:r]))
            out.append("(" + ",".join(encs[best_r:] + encs[:best_r]) + ")")
            continue
        st = [s for s in f.stolons if s <= in_comp]
        if st:
            pair = sorted((_render_tree(f, w, children) for w in tuple(st[0])),
                          key=_render_sort_key)
            out.append(pair[0] + "=" + pair[1])
        else:
            root, = [v for v in comp if f.succ[v] is None]
            out.append(_render_tree(f, root, children))
    out.sort(key=_render_sort_key)
    return ",".join(out)


# ---------------------------------------------------------------------------
# symmetry coefficient

_sigma_cache: dict[str, int] = {}


def sigma(f: Forest) -> int:
    """|Aut(f)|: bijections preserving edges, stolon pairs, decorations,
    and the liana pairing (labels only up to relabelling)."""
    got = _sigma_cache.get(f.key)
    if got is not None:
        return got
    n = f.n
    if n == 0:
        return 1
    liana_partner: dict[int, int] = {}
    for a, b in f.liana_pairs():
        liana_partner[a] = b
        liana_partner[b] = a
    stolon_partner: dict[int, int] = {}
    for st in f.stolons:
        u, v = tuple(st)
        stolon_partner[u] = v
        stolon_partner[v] = u
    pred_count = [0] * n
    for v in range(n):
        s = f.succ[v]
        if s is not None:
            pred_count[s] += 1

    def dec_class(v: int) -> str:
        return "#" if isinstance(f.dec[v], int) else f.dec[v]

    sig = [(dec_class(v), pred_count[v], f.succ[v] is None,
            v in stolon_partner, v in liana_partner) for v in range(n)]

    mapping: list[int | None] = [None] * n
    used = [False] * n
    count = 0

    def feasible(v: int, w: int) -> bool:
        if sig[v] != sig[w]:
            return False
        sv, sw = f.succ[v], f.succ[w]
        if sv is not None and mapping[sv] is not None and mapping[sv] != sw:
            return False
        for u in range(n):
            m = mapping[u]
            if m is None:
                continue
            if f.succ[u] == v and f.succ[m] != w:
                return False
            if f.succ[u] != v and f.succ[m] == w:
                return False
        pv = stolon_partner.get(v)
        if pv is not None and mapping[pv] is not None:
            if stolon_partner.get(w) != mapping[pv]:
                return False
        lv = liana_partner.get(v)
        if lv is not None and mapping[lv] is not None:
            if liana_partner.get(w) != mapping[lv]:
                return False
        return True

    def bt(i: int) -> None:
        nonlocal count
        if i == n:
            count += 1
            return
        v = i
        for w in range(n):
            if used[w] or not feasible(v, w):
                continue
            mapping[v] = w
            used[w] = True
            bt(i + 1)
            mapping[v] = None
            used[w] = False

    bt(0)
    _sigma_cache[f.key] = count
    return count


# ---------------------------------------------------------------------------
# grading record

@dataclass(frozen=True)
class Grading:
    order: int
    num_roots: int
    num_black: int
    num_lianas: int
    num_stolons: int
    num_edges: int


def grading(f: Forest) -> Grading:
    return Grading(order=f.order, num_roots=f.num_roots, num_black=f.num_black,
                   num_lianas=f.num_lianas, num_stolons=f.num_stolons,
                   num_edges=f.num_edges)


# ---------------------------------------------------------------------------
# clumped forests

@dataclass(frozen=True)
class ClumpedForest:
    """Monomial of rooted pieces; aromas stay attached to their factor.
    ``(b),b . b[b]`` and ``b . (b),b[b]`` are distinct values."""

    clumps: tuple[Forest, ...]

    @staticmethod
    def of(*clumps: Forest) -> "ClumpedForest":
        return ClumpedForest(tuple(sorted(clumps)))

    @staticmethod
    def of_single_root(*clumps: Forest) -> "ClumpedForest":
        for c in clumps:
            if c.num_roots != 1:
                raise ForestError(f"clump {render(c)!r} must have one root")
        return ClumpedForest(tuple(sorted(clumps)))

    @property
    def order(self) -> int:
        return sum(c.order for c in self.clumps)

    @property
    def num_clumps(self) -> int:
        return len(self.clumps)

    def flatten(self) -> Forest:
        raw = RawForest()
        for c in self.clumps:
            raw.merge(c.raw())
        return raw.canonical()

    def __repr__(self):
        return f"ClumpedForest({render_clumped(self)!r})"


def render_clumped(cf: ClumpedForest) -> str:
    if not cf.clumps:
        return "{}"
    return " . ".join(render(c) for c in cf.clumps)


def parse_clumped(text: str) -> ClumpedForest:
    s = text.strip()
    if s == "{}":
        return ClumpedForest(())
    return ClumpedForest.of(*(parse(part) for part in s.split(" . ")))


def sigma_clumped(cf: ClumpedForest) -> int:
    """Automorphisms preserving the clump partition."""
    out = 1
    for _, group in itertools.groupby(cf.clumps, key=lambda c: c.key):
        g = list(group)
        out *= factorial(len(g)) * sigma(g[0]) ** len(g)
    return out


EMPTY_CLUMPED = ClumpedForest(())


# ---------------------------------------------------------------------------
# enumeration

MAX_ENUM_ORDER = 6

_subtree_memo: dict[tuple[int, int], list[RawForest]] = {}


def _subtree_types(n_black: int, n_half: int) -> list[RawForest]:
    """Rooted trees with n_black black vertices and n_half placeholder
    liana-half leaves (decoration HALF)."""
    key = (n_black, n_half)
    if key in _subtree_memo:
        return _subtree_memo[key]
    out: list[RawForest] = []
    if n_black == 0:
        if n_half == 1:
            r = RawForest()
            r.add_vertex(HALF)
            out.append(r)
    elif n_black >= 1:
        for combo in _child_multisets(n_black - 1, n_half):
            r = RawForest()
            root = r.add_vertex(BLACK)
            for sub in combo:
                idxs = r.merge(sub)
                r.add_edge(r.root_of_merged(idxs), root)
            out.append(r)
        out = _dedup(out)
    _subtree_memo[key] = out
    return out


def _child_multisets(nb: int, nh: int):
    """Multisets of subtrees using exactly nb blacks and nh halves."""
    types: list[tuple[int, int, RawForest]] = []
    for b in range(nb + 1):
        for h in range(nh + 1):
            if b == 0 and h == 0:
                continue
            for t in _subtree_types(b, h):
                types.append((b, h, t))

    def rec(i: int, nbl: int, nhl: int, acc: list[RawForest]):
        if nbl == 0 and nhl == 0:
            yield list(acc)
            return
        if i >= len(types):
            return
        b, h, t = types[i]
        kmax = min(nbl // b if b else nhl, nhl // h if h else nbl)
        for k in range(kmax + 1):
            yield from rec(i + 1, nbl - k * b, nhl - k * h, acc + [t] * k)

    yield from rec(0, nb, nh, [])


def _dedup(raws: list[RawForest]) -> list[RawForest]:
    seen: dict[str, RawForest] = {}
    for r in raws:
        enc = _full_encoding(r, None)  # label-blind (halves all render "L?")
        seen.setdefault(enc, r)
    return list(seen.values())


@lru_cache(maxsize=None)
def _component_types(max_order: int) -> tuple[tuple[int, "Forest | None", RawForest], ...]:
    """(weight2, None, raw) for all connected component shapes of weight
    <= max_order, where weight2 = 2*black + halves - 2*stolons."""
    cap2 = 2 * max_order
    out: list[tuple[int, None, RawForest]] = []
    seen: set[str] = set()

    def push(r: RawForest, w2: int):
        if not (0 < w2 <= cap2):
            return
        enc = _full_encoding(r, None)
        if enc not in seen:
            seen.add(enc)
            out.append((w2, None, r))

    # trees (including the bare half)
    for nb in range(0, max_order + 1):
        for nh in range(0, cap2 + 1):
            w2 = 2 * nb + nh
            if w2 > cap2 or (nb == 0 and nh != 1):
                continue
            for t in _subtree_types(nb, nh):
                push(t.copy(), w2)
    # cycle aromas
    for c in range(1, max_order + 1):
        for extra2 in range(0, cap2 - 2 * c + 1):
            for hang in _hanging_combos(c, extra2):
                raw = RawForest()
                cyc = [raw.add_vertex(BLACK) for _ in range(c)]
                for i in range(c):
                    raw.succ[cyc[i]] = cyc[(i + 1) % c]
                for i, subs in enumerate(hang):
                    for sub in subs:
                        idxs = raw.merge(sub)
                        raw.add_edge(raw.root_of_merged(idxs), cyc[i])
                push(raw, 2 * c + extra2)
    # stolon aromas: two black-rooted trees, roots linked
    tree_pool: list[tuple[int, RawForest]] = []
    for nb in range(1, max_order + 2):
        for nh in range(0, cap2 + 1):
            w2 = 2 * nb + nh
            if w2 > cap2 + 2:
                continue
            for t in _subtree_types(nb, nh):
                tree_pool.append((w2, t))
    for i, (w1, t1) in enumerate(tree_pool):
        for w2_, t2 in tree_pool[i:]:
            w2 = w1 + w2_ - 2
            if not (0 < w2 <= cap2):
                continue
            raw = RawForest()
            i1 = raw.merge(t1)
            i2 = raw.merge(t2)
            r1, r2 = raw.root_of_merged(i1), raw.root_of_merged(i2)
            if isinstance(raw.dec[r1], int) or isinstance(raw.dec[r2], int):
                continue
            raw.add_stolon(r1, r2)
            push(raw, w2)
    return tuple(out)


def _hanging_combos(c: int, extra2: int):
    """Assignments of hanging-subtree multisets to c cycle positions with
    total weight2 = extra2 (rotation symmetry removed later)."""
    pool: list[tuple[int, RawForest]] = []
    for nb in range(0, extra2 // 2 + 1):
        for nh in range(0, extra2 + 1):
            w2 = 2 * nb + nh
            if w2 == 0 or w2 > extra2 or (nb == 0 and nh != 1):
                continue
            for t in _subtree_types(nb, nh):
                pool.append((w2, t))

    def combos_one(cap: int):
        def rec(i: int, left: int, acc: list[RawForest], w2: int):
            yield list(acc), w2
            for j in range(i, len(pool)):
                wj, t = pool[j]
                if wj <= left:
                    acc.append(t)
                    yield from rec(j, left - wj, acc, w2 + wj)
                    acc.pop()
        yield from rec(0, cap, [], 0)

    def rec_pos(pos: int, left: int, acc: list[list[RawForest]]):
        if pos == c:
            if left == 0:
                yield [list(x) for x in acc]
            return
        for combo, w2 in combos_one(left):
            acc.append(combo)
            yield from rec_pos(pos + 1, left - w2, acc)
            acc.pop()

    yield from rec_pos(0, extra2, [])


@lru_cache(maxsize=None)
def _enumerate_all(max_order: int) -> tuple[Forest, ...]:
    comps = _component_types(max_order)
    results: set[Forest] = {EMPTY}

    def emit(component_raws: list[RawForest]) -> None:
        raw = RawForest()
        for comp in component_raws:
            raw.merge(comp)
        halves = [v for v in range(len(raw.dec)) if raw.dec[v] == HALF]
        if len(halves) % 2:
            return
        for matching in _perfect_matchings(halves):
            r2 = raw.copy()
            for lab, (a, b) in enumerate(matching, start=1):
                r2.dec[a] = lab + 1000  # clear of merged labels
                r2.dec[b] = lab + 1000
            f = r2.canonical()
            if f.order <= max_order:
                results.add(f)

    def rec(i: int, w2_left: int, acc: list[RawForest]):
        if i == len(comps):
            emit(acc)
            return
        w2, _, raw = comps[i]
        k = 0
        while k * w2 <= w2_left:
            rec(i + 1, w2_left - k * w2, acc + [raw] * k)
            k += 1

    rec(0, 2 * max_order, [])
    return tuple(sorted(results, key=lambda f: (f.order, f.key)))


def _perfect_matchings(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in _perfect_matchings(remaining):
            yield [(first, other)] + tail


_FILTERS = {
    "all": lambda f: True,
    "trees": lambda f: f.is_tree() and f.num_lianas == 0,
    "eat": lambda f: f.num_roots == 1,
    "eat-black-root": lambda f: f.num_roots == 1 and not f.is_numbered(f.roots[0]),
    "aromas": lambda f: f.num_roots == 0 and not f.is_empty(),
    "connected": lambda f: len(f.connected_pieces()) == 1,
    "no-aromas": lambda f: not f.has_aroma(),
}


def enumerate_forests(max_order: int, filter: str = "all") -> tuple[Forest, ...]:
    """All canonical exotic aromatic forests of order <= max_order.

    Filters: all, trees (all-black rooted trees), eat (one root),
    eat-black-root, aromas, connected, no-aromas.
    """
    if max_order > MAX_ENUM_ORDER:
        raise ForestError(f"enumeration bound exceeded (max {MAX_ENUM_ORDER})")
    if filter not in _FILTERS:
        raise ForestError(f"unknown filter {filter!r}")
    pred = _FILTERS[filter]
    return tuple(f for f in _enumerate_all(max(max_order, 0)) if pred(f))
