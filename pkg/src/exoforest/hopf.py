"""Products and coproducts on exotic aromatic forests.

Grafting, divergence and the stolon form generate the pre-Lie layer; the
Guin-Oudom extension gives the Grossman-Larson product and its antipode.
Dually, the Butcher-Connes-Kreimer coproduct drives the composition law
and the CEM coaction (with clumped left factors) drives the substitution
law.  The sigma-weighted pairing <pi,mu> = sigma(pi) [pi = mu] is the
single duality convention used throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .forests import (BLACK, EMPTY, EMPTY_CLUMPED, ClumpedForest, Forest,
                      ForestError, RawForest, render, render_clumped)
from .series import Functional, Q, Series, character_value_clumped, unit_functional

LeftKey = object  # Forest | ClumpedForest | TaggedClumps


@dataclass(frozen=True)
class TaggedClumps:
    """Left factor of the decorated coaction: clumps with target tags."""

    items: tuple[tuple[Forest, str], ...]

    @staticmethod
    def of(pairs) -> "TaggedClumps":
        return TaggedClumps(tuple(sorted(pairs, key=lambda t: (t[1], t[0].key))))

    @property
    def order(self) -> int:
        return sum(f.order for f, _ in self.items)

    def __repr__(self):
        return f"TaggedClumps({render_tagged(self)!r})"


def render_tagged(tc: TaggedClumps) -> str:
    if not tc.items:
        return "{}"
    groups: dict[str, list[str]] = {}
    for f, tag in tc.items:
        groups.setdefault(tag, []).append(render(f))
    return " . ".join(",".join(sorted(v, key=len)) + f" i{tag}"
                      for tag, v in sorted(groups.items()))


class TensorSeries:
    """Finite sum of left (x) right basis tensors with exact coefficients."""

    def __init__(self):
        self.terms: dict[tuple[object, Forest], Fraction] = {}

    def acc(self, left, right: Forest, coeff) -> None:
        key = (left, right)
        new = self.terms.get(key, Q(0)) + Q(coeff)
        if new:
            self.terms[key] = new
        else:
            self.terms.pop(key, None)

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda t: _tensor_sort_key(t[0])))

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return isinstance(other, TensorSeries) and self.terms == other.terms

    def pair(self, a, b) -> Fraction:
        """(a (x) b) applied to this expansion."""
        total = Q(0)
        for (left, right), c in self.terms.items():
            av = a(left)
            if av:
                bv = b(right)
                if bv:
                    total += c * av * bv
        return total

    def __repr__(self):
        bits = []
        for (left, right), c in self:
            lt = _render_left(left)
            rt = render(right) or "{}"
            pre = "" if c == 1 else f"{c}*"
            bits.append(f"{pre}{lt or '{}'} (x) {rt}")
        return " + ".join(bits) if bits else "0"


def _render_left(left) -> str:
    if isinstance(left, ClumpedForest):
        return render_clumped(left)
    if isinstance(left, TaggedClumps):
        return render_tagged(left)
    return render(left)


def _tensor_sort_key(key):
    left, right = key
    if isinstance(left, ClumpedForest):
        lk = tuple(c.key for c in left.clumps)
    elif isinstance(left, TaggedClumps):
        lk = tuple((t, f.key) for f, t in left.items)
    else:
        lk = (left.key,)
    return (right.order, lk, right.key)


# ---------------------------------------------------------------------------
# concatenation and pre-Lie layer

def forest_product(*forests: Forest) -> Forest:
    raw = RawForest()
    for f in forests:
        raw.merge(f.raw())
    return raw.canonical()


def _graft_targets(f: Forest) -> list[int]:
    # numbered vertices take no incoming edges
    return [v for v in f.vertices() if not f.is_numbered(v)]


def graft(tau: Forest, gamma: Forest) -> Series:
    """Attach the root of ``tau`` to each attachable vertex of ``gamma``."""
    if tau.num_roots != 1:
        raise ForestError("left operand of grafting must have one root")
    out = Series()
    for v in _graft_targets(gamma):
        raw = gamma.raw()
        idxs = raw.merge(tau.raw())
        raw.add_edge(next(i for i in idxs if raw.succ[i] is None), v)
        out._acc(raw.canonical(), Q(1))
    return out


def divergence(tau: Forest) -> Series:
    """Attach the root of ``tau`` to each of its own attachable vertices."""
    if tau.num_roots != 1:
        raise ForestError("divergence needs a single-root forest")
    root = tau.roots[0]
    out = Series()
    for v in _graft_targets(tau):
        raw = tau.raw()
        raw.add_edge(root, v)
        out._acc(raw.canonical(), Q(1))
    return out


def stolon_pair(tau: Forest, gamma: Forest) -> Forest:
    """Join the two roots by a stolon (the bilinear form <tau, gamma>)."""
    for f in (tau, gamma):
        if f.num_roots != 1 or f.is_numbered(f.roots[0]):
            raise ForestError("stolon endpoints must be black roots")
    raw = tau.raw()
    r1 = tau.roots[0]
    idxs = raw.merge(gamma.raw())
    r2 = next(i for i in idxs if raw.succ[i] is None and
              not any(i in st for st in raw.stolons))
    raw.add_stolon(r1, r2)
    return raw.canonical()


def _tree_components(f: Forest) -> tuple[list[list[int]], list[list[int]]]:
    """Graph components split into rooted trees and aromas."""
    trees, aromas = [], []
    sv = f.stolon_vertices
    for comp in f.components():
        if any(f.succ[v] is None and v not in sv for v in comp):
            trees.append(comp)
        else:
            aromas.append(comp)
    return trees, aromas


def gl_product(p1: Forest, p2: Forest) -> Series:
    """Grossman-Larson product via the Guin-Oudom extension: every subset
    of p1's tree components grafts simultaneously onto p2; the rest (and
    all aromas of p1) multiply."""
    trees, _ = _tree_components(p1)
    out = Series()
    sv = p1.stolon_vertices
    for r in range(len(trees) + 1):
        for subset in itertools.combinations(range(len(trees)), r):
            chosen = [trees[i] for i in subset]
            roots = []
            for comp in chosen:
                roots.append(next(v for v in comp
                                  if p1.succ[v] is None and v not in sv))
            targets = _graft_targets(p2)
            if chosen and not targets:
                continue
            for assign in itertools.product(targets, repeat=len(chosen)):
                raw = RawForest()
                i1 = raw.merge(p1.raw())
                i2 = raw.merge(p2.raw())
                for root, tgt in zip(roots, assign):
                    raw.add_edge(i1[root], i2[tgt])
                out._acc(raw.canonical(), Q(1))
    return out


def gl_product_series(s1: Series, s2: Series) -> Series:
    out = Series(truncation=None)
    for f1, c1 in s1.terms.items():
        for f2, c2 in s2.terms.items():
            for g, c in gl_product(f1, f2).terms.items():
                out._acc(g, c1 * c2 * c)
    return out


def pre_lie(tau: Forest, pi: Forest) -> Series:
    """pi1 (curved arrow) pi2 := pi1 <> pi2 - pi1 . pi2 on primitives,
    extended as a derivation over the factors of ``pi``."""
    out = gl_product(tau, pi)
    out._acc(forest_product(tau, pi), Q(-1))
    return out


def pre_lie_series(s: Series, t: Series) -> Series:
    out = Series()
    for f1, c1 in s.terms.items():
        for f2, c2 in t.terms.items():
            for g, c in pre_lie(f1, f2).terms.items():
                out._acc(g, c1 * c2 * c)
    return out


# ---------------------------------------------------------------------------
# connected pieces and deshuffles

def pieces_of(f: Forest) -> list[Forest]:
    return [f.restrict(set(p)) for p in f.connected_pieces()]


def piece_split(f: Forest) -> tuple[list[Forest], list[Forest]]:
    """(rooted pieces, rootless pieces)."""
    rooted, rootless = [], []
    roots = set(f.roots)
    for p in f.connected_pieces():
        (rooted if roots & set(p) else rootless).append(f.restrict(set(p)))
    return rooted, rootless


def deshuffle(f: Forest) -> TensorSeries:
    """R-linear deshuffle: every connected piece goes left or right."""
    pieces = f.connected_pieces()
    out = TensorSeries()
    for r in range(len(pieces) + 1):
        for subset in itertools.combinations(range(len(pieces)), r):
            s = set(subset)
            left = set(itertools.chain.from_iterable(
                pieces[i] for i in range(len(pieces)) if i not in s))
            right = set(itertools.chain.from_iterable(pieces[i] for i in s))
            out.acc(f.restrict(left), f.restrict(right), 1)
    return out


def deshuffle_aroma_left(f: Forest) -> TensorSeries:
    """Aroma-linear deshuffle: rootless pieces stay on the left leg (the
    section that places all aromas on the left)."""
    pieces = f.connected_pieces()
    roots = set(f.roots)
    rooted_idx = [i for i, p in enumerate(pieces) if roots & set(p)]
    aroma_vs = set(itertools.chain.from_iterable(
        pieces[i] for i in range(len(pieces)) if i not in rooted_idx))
    out = TensorSeries()
    for r in range(len(rooted_idx) + 1):
        for subset in itertools.combinations(rooted_idx, r):
            right = set(itertools.chain.from_iterable(pieces[i] for i in subset))
            left = aroma_vs | set(itertools.chain.from_iterable(
                pieces[i] for i in rooted_idx if i not in subset))
            out.acc(f.restrict(left), f.restrict(right), 1)
    return out


def antipode_deshuffle(f: Forest) -> Series:
    out = Series()
    out._acc(f, Q(-1) ** len(f.connected_pieces()))
    return out


# ---------------------------------------------------------------------------
# Grossman-Larson antipode

_antipode_gl_cache: dict[str, Series] = {}


def antipode_gl(f: Forest) -> Series:
    """Antipode of the Grossman-Larson structure:
    S(1) = 1, S(omega pi) = S(pi) <> omega for rootless pieces omega,
    S(tau pi) = -S(pi) <> tau - S(tau ~> pi) for rooted pieces tau."""
    got = _antipode_gl_cache.get(f.key)
    if got is not None:
        return got
    if f.is_empty():
        out = Series()
        out._acc(EMPTY, Q(1))
        _antipode_gl_cache[f.key] = out
        return out
    rooted, rootless = piece_split(f)
    if rootless:
        omega = rootless[0]
        rest = forest_product(*(rooted + rootless[1:]))
        out = Series()
        for g, c in antipode_gl(rest).terms.items():
            for h, c2 in gl_product(g, omega).terms.items():
                out._acc(h, c * c2)
    else:
        tau = rooted[0]
        rest = forest_product(*rooted[1:])
        out = Series()
        for g, c in antipode_gl(rest).terms.items():
            for h, c2 in gl_product(g, tau).terms.items():
                out._acc(h, -c * c2)
        for g, c in _pre_lie_onto_forest(tau, rest).terms.items():
            for h, c2 in antipode_gl(g).terms.items():
                out._acc(h, -c * c2)
    _antipode_gl_cache[f.key] = out
    return out


def _as_series(f: Forest) -> Series:
    s = Series()
    s._acc(f, Q(1))
    return s


def _pre_lie_onto_forest(tau: Forest, pi: Forest) -> Series:
    """tau ~> pi, the derivation extension over the pieces of pi."""
    pieces = pieces_of(pi)
    out = Series()
    for i, p in enumerate(pieces):
        others = pieces[:i] + pieces[i + 1:]
        for g, c in pre_lie(tau, p).terms.items():
            out._acc(forest_product(g, *others), c)
    return out


# ---------------------------------------------------------------------------
# BCK coproduct and composition

def bck_coproduct(f: Forest) -> TensorSeries:
    """Sum of (pruned part) (x) (successor-closed part); liana pairs and
    stolon pairs are never separated."""
    n = f.n
    out = TensorSeries()
    pairs = f.liana_pairs()
    stolons = [tuple(st) for st in f.stolons]
    for bits in itertools.product((False, True), repeat=n):
        w = {v for v in range(n) if bits[v]}
        ok = True
        for v in w:
            s = f.succ[v]
            if s is not None and s not in w:
                ok = False
                break
        if ok:
            for a, b in pairs + stolons:
                if (a in w) != (b in w):
                    ok = False
                    break
        if not ok:
            continue
        out.acc(f.restrict(set(range(n)) - w), f.restrict(w), 1)
    return out


def compose(a: Functional, b: Functional, truncation: int | None = None) -> Functional:
    """Composition law a * b = (a (x) b) o Delta_BCK."""
    from .series import convolve
    return convolve("bck", a, b, truncation)


# ---------------------------------------------------------------------------
# clump maps

def phi(cf: ClumpedForest) -> Forest:
    """Forget the clumping."""
    return cf.flatten()


def phi_star(f: Forest) -> Series:
    """Adjoint of phi: the sum over assignments of each free aroma piece
    to a rooted piece (Series over clumped forests)."""
    rooted, rootless = piece_split(f)
    out = Series()
    if not rooted:
        out._acc(ClumpedForest.of(*rootless) if rootless else EMPTY_CLUMPED, Q(1))
        return out
    for assign in itertools.product(range(len(rooted)), repeat=len(rootless)):
        groups: list[list[Forest]] = [[t] for t in rooted]
        for aroma, i in zip(rootless, assign):
            groups[i].append(aroma)
        out._acc(ClumpedForest.of(*(forest_product(*g) for g in groups)), Q(1))
    return out


def clumping_weight(cf: ClumpedForest) -> int:
    """n**m with n the number of rooted clumps and m the number of aroma
    pieces; 1 when nothing is assignable (pure-aroma monomials)."""
    n = m = 0
    for c in cf.clumps:
        rooted, rootless = piece_split(c)
        m += len(rootless)
        if rooted:
            n += 1
    return n ** m if n and m else 1


class ClumpedFunctional:
    """a_C(pi) = a(phi(pi)) / n**m, the clumped form of a functional."""

    def __init__(self, a: Functional):
        self.a = a

    def __call__(self, cf: ClumpedForest) -> Fraction:
        v = self.a(phi(cf))
        if not v:
            return Q(0)
        return v / clumping_weight(cf)


def to_clumped(a: Functional) -> ClumpedFunctional:
    return ClumpedFunctional(a)


# ---------------------------------------------------------------------------
# CEM coaction

def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1:]
        yield part + [[first]]


def _clump_structures(f: Forest, block: set[int]):
    """Yield (root, dropped_edge or None) choices making ``block`` an
    exotic aromatic tree once internal edges (minus the dropped one) and
    internal stolons are kept."""
    internal_stolon = {v for st in f.stolons if st <= block for v in st}
    free = [v for v in block
            if (f.succ[v] is None or f.succ[v] not in block)
            and v not in internal_stolon]
    if len(free) == 1:
        yield free[0], None
    elif len(free) == 0:
        for r in sorted(block):
            s = f.succ[r]
            if s is not None and s in block:
                yield r, (r, s)


def _build_clump(f: Forest, block: set[int], dropped) -> Forest:
    raw = RawForest()
    idx = {v: raw.add_vertex(f.dec[v]) for v in sorted(block)}
    for v in block:
        s = f.succ[v]
        if s is not None and s in block and (v, s) != dropped:
            raw.add_edge(idx[v], idx[s])
    for st in f.stolons:
        if st <= block:
            u, v = tuple(st)
            raw.add_stolon(idx[u], idx[v])
    clump = raw.canonical()
    if clump.num_roots != 1:
        raise ForestError("internal error: clump is not single-rooted")
    return clump


def _contract(f: Forest, blocks: list[set[int]], dropped_edges: list,
              tags: list[str] | None = None,
              cut_edges: set[tuple[int, int]] | None = None,
              extra_stolons: list[tuple[int, int]] | None = None) -> Forest:
    block_of: dict[int, int] = {}
    for i, b in enumerate(blocks):
        for v in b:
            block_of[v] = i
    raw = RawForest()
    reps = [raw.add_vertex(BLACK if tags is None else tags[i])
            for i in range(len(blocks))]
    outside = {v: raw.add_vertex(f.dec[v]) for v in f.vertices() if v not in block_of}
    dropped_set = {e for e in dropped_edges if e is not None}
    cut = cut_edges or set()

    def image(v: int) -> int:
        return reps[block_of[v]] if v in block_of else outside[v]

    for v in f.vertices():
        s = f.succ[v]
        if s is None or (v, s) in cut:
            continue
        if v in block_of and s in block_of and block_of[v] == block_of[s]:
            if (v, s) in dropped_set:
                raw.succ[image(v)] = image(s)  # self-loop on the rep
            continue
        if v in block_of:
            # only the clump root exits its block
            raw.succ[image(v)] = image(s)
        else:
            raw.add_edge(image(v), image(s))
    for st in f.stolons:
        u, v = tuple(st)
        if u in block_of and v in block_of and block_of[u] == block_of[v]:
            continue
        raw.add_stolon(image(u), image(v))
    for i, j in extra_stolons or ():
        raw.add_stolon(reps[i], reps[j])
    return raw.canonical()


def _block_free(f: Forest, content: set[int], n_added: int) -> list[int] | None:
    """Free vertices of a block (candidates forced to be the root); None
    signals an invalid block."""
    internal_stolon = {v for st in f.stolons if st <= content for v in st}
    free = [v for v in content
            if (f.succ[v] is None or f.succ[v] not in content)
            and v not in internal_stolon]
    if len(free) + n_added > 1:
        return None
    return free


def _build_clump_ex(f: Forest, content: set[int], dropped,
                    relabel: dict[int, int], added: list[tuple]) -> Forest:
    """Clump on ``content`` plus splice-restored vertices.  ``added``
    entries: ('single', lab) or ('leaf', parent_vertex, lab)."""
    raw = RawForest()
    idx = {v: raw.add_vertex(relabel.get(v, f.dec[v])) for v in sorted(content)}
    for v in content:
        s = f.succ[v]
        if s is not None and s in content and (v, s) != dropped:
            raw.add_edge(idx[v], idx[s])
    for st in f.stolons:
        if st <= content:
            u, v = tuple(st)
            raw.add_stolon(idx[u], idx[v])
    for entry in added:
        if entry[0] == "single":
            raw.add_vertex(entry[1])
        else:
            _, parent, lab = entry
            raw.add_edge(raw.add_vertex(lab), idx[parent])
    clump = raw.canonical()
    if clump.num_roots != 1:
        raise ForestError("internal error: clump is not single-rooted")
    return clump


def cem_coaction(f: Forest) -> TensorSeries:
    """CEM coaction on exotic forests: left factors are clumped monomials
    of single-root exotic trees covering every black vertex; the right
    factor contracts each clump to a black vertex.  Liana pairs sit inside
    one clump or entirely outside, except that a pair or an edge crossing
    two clumps may splice into a stolon of the contracted forest (the dual
    of inserting liana-rooted clumps at stolon ends).  Forests without
    black vertices get the fallback term 1 (x) pi."""
    if not f.is_exotic():
        raise ForestError("cem_coaction expects an exotic forest")
    blacks = f.black_vertices()
    out = TensorSeries()
    if not blacks:
        out.acc(EMPTY_CLUMPED, f, 1)
        return out
    pairs = f.liana_pairs()
    for partition in _set_partitions(blacks):
        nb = len(partition)
        block_of = {v: i for i, b in enumerate(partition) for v in b}
        pair_opts = []
        for x, y in pairs:
            opts: list[int] = [-1] + list(range(nb))
            sx, sy = f.succ[x], f.succ[y]
            if sx is not None and sy is not None and block_of[sx] != block_of[sy]:
                opts.append(-2)  # split into a stolon of the contraction
            pair_opts.append(opts)
        for pchoice in itertools.product(*pair_opts):
            contents = [set(b) for b in partition]
            added: list[list[tuple]] = [[] for _ in range(nb)]
            relabel: dict[int, int] = {}
            extra_stolons: list[tuple[int, int]] = []
            fresh = 9000
            for (x, y), ch in zip(pairs, pchoice):
                if ch == -1:
                    continue
                if ch >= 0:
                    contents[ch].add(x)
                    contents[ch].add(y)
                else:
                    bi, bj = block_of[f.succ[x]], block_of[f.succ[y]]
                    contents[bi].add(x)
                    contents[bj].add(y)
                    fresh += 1
                    relabel[x] = fresh
                    added[bi].append(("single", fresh))
                    fresh += 1
                    relabel[y] = fresh
                    added[bj].append(("single", fresh))
                    extra_stolons.append((bi, bj))
            # cross edges from a black source may splice instead of contract
            cross = []
            for j in range(nb):
                for u in contents[j]:
                    s = f.succ[u]
                    if s is None or f.dec[u] != BLACK:
                        continue
                    i = block_of[s]
                    if i != j:
                        cross.append((u, s, j, i))
            for cut_bits in itertools.product((False, True), repeat=len(cross)):
                contents2 = [set(c) for c in contents]
                added2 = [list(a) for a in added]
                stolons2 = list(extra_stolons)
                cut_edges: set[tuple[int, int]] = set()
                fresh2 = fresh
                for (u, s, j, i), cut in zip(cross, cut_bits):
                    if not cut:
                        continue
                    fresh2 += 1
                    added2[i].append(("single", fresh2))
                    added2[i].append(("leaf", s, fresh2))
                    stolons2.append((i, j))
                    cut_edges.add((u, s))
                frees = [_block_free(f, c, len([e for e in a if e[0] == "single"]))
                         for c, a in zip(contents2, added2)]
                if any(fr is None for fr in frees):
                    continue
                struct_opts = []
                bad = False
                for c, a, fr in zip(contents2, added2, frees):
                    n_single = len([e for e in a if e[0] == "single"])
                    if len(fr) + n_single == 1:
                        struct_opts.append([None])  # keep all edges
                    else:  # 0 free, 0 added: need an internal edge drop
                        drops = [(r, f.succ[r]) for r in sorted(c)
                                 if f.succ[r] is not None and f.succ[r] in c]
                        if not drops:
                            bad = True
                            break
                        struct_opts.append(drops)
                if bad:
                    continue
                for combo in itertools.product(*struct_opts):
                    clumps = [_build_clump_ex(f, c, dr, relabel, a)
                              for c, a, dr in zip(contents2, added2, combo)]
                    right = _contract(f, contents2, list(combo),
                                      cut_edges=cut_edges,
                                      extra_stolons=stolons2)
                    out.acc(ClumpedForest.of(*clumps), right, 1)
    return out


def cem_coaction_reduced(f: Forest) -> TensorSeries:
    """Delta_CEM minus (single black vertex) (x) pi minus pi (x) (single
    black vertex), applied only when the order exceeds one."""
    full = cem_coaction(f)
    if f.order <= 1:
        return full
    single = ClumpedForest.of(_BULLET)
    out = TensorSeries()
    for (left, right), c in full.terms.items():
        out.acc(left, right, c)
    out.acc(single, f, -1)
    if f.num_roots == 1:
        whole = _clump_of_whole(f)
        if whole is not None:
            out.acc(whole, _BULLET, -1)
    return out


def _clump_of_whole(f: Forest) -> ClumpedForest | None:
    if f.num_roots != 1:
        return None
    return ClumpedForest.of(f)


_BULLET = Forest(key=BLACK, dec=(BLACK,), succ=(None,), stolons=frozenset())


def cem_coaction_decorated(f: Forest, substitutable: tuple[str, ...] = (BLACK, "w"),
                           tags: tuple[str, ...] = (BLACK, "w")) -> TensorSeries:
    """Two-colour CEM coaction.  Vertices whose decoration is listed in
    ``substitutable`` are partitioned into clumps, each clump tagged with
    the decoration its contracted vertex receives.  With
    ``substitutable=('b',)`` this is the black-only specialization: other
    letters pass through to the right factor unchanged."""
    subs = [v for v in f.vertices()
            if isinstance(f.dec[v], str) and f.dec[v] in substitutable]
    others_absorbable = [v for v in f.vertices()
                         if isinstance(f.dec[v], str) and f.dec[v] not in substitutable]
    out = TensorSeries()
    if not subs:
        out.acc(TaggedClumps(()), f, 1)
        return out
    pairs = f.liana_pairs()
    for partition in _set_partitions(subs):
        choice_sets = [range(-1, len(partition))] * (len(pairs) + len(others_absorbable))
        for assignment in itertools.product(*choice_sets):
            blocks = [set(b) for b in partition]
            for (a, b), tgt in zip(pairs, assignment[:len(pairs)]):
                if tgt >= 0:
                    blocks[tgt].add(a)
                    blocks[tgt].add(b)
            for v, tgt in zip(others_absorbable, assignment[len(pairs):]):
                if tgt >= 0:
                    blocks[tgt].add(v)
            structs = [list(_clump_structures(f, b)) for b in blocks]
            for combo in itertools.product(*structs):
                clumps = [_build_clump(f, b, dr) for b, (_, dr) in zip(blocks, combo)]
                dropped = [dr for _, dr in combo]
                for tag_choice in itertools.product(tags, repeat=len(blocks)):
                    right = _contract(f, blocks, dropped, tags=list(tag_choice))
                    out.acc(TaggedClumps.of(zip(clumps, tag_choice)), right, 1)
    return out


# ---------------------------------------------------------------------------
# substitution law

def substitute(b0: Functional, a: Functional,
               truncation: int | None = None) -> Functional:
    """b_c * a with b_c the character of the clumped algebra extending the
    single-root-supported infinitesimal ``b0``."""
    from .forests import enumerate_forests
    from .series import _min_trunc
    for k in b0.terms:
        if not isinstance(k, Forest) or k.num_roots != 1:
            raise ForestError("substitute needs single-root support")
    trunc = _min_trunc(truncation, _min_trunc(a.truncation, b0.truncation))
    if trunc is None:
        raise ValueError("substitute needs a truncation order")
    out = Functional(truncation=trunc)
    for pi in enumerate_forests(trunc):
        total = Q(0)
        for (left, right), c in cem_coaction(pi).terms.items():
            bv = character_value_clumped(b0, left)
            if bv:
                av = a(right)
                if av:
                    total += c * bv * av
        if total:
            out.terms[pi] = total
    return out


def coproduct_fn(kind: str):
    """Coproduct expansions as lists of (left, right, coeff)."""
    table = {
        "bck": bck_coproduct,
        "deshuffle": deshuffle,
        "deshuffle-aroma-linear": deshuffle_aroma_left,
        "cem": cem_coaction,
        "cem-reduced": cem_coaction_reduced,
    }
    if kind not in table:
        raise ValueError(f"unknown coproduct {kind!r}")
    fn = table[kind]

    def expand(pi: Forest):
        return [(left, right, c) for (left, right), c in fn(pi).terms.items()]

    return expand


# ---------------------------------------------------------------------------
# explicit substitution action (the oracle dual to the CEM coaction)

def _raw_delete(raw: RawForest, dead: set[int]) -> RawForest:
    keep = [v for v in range(len(raw.dec)) if v not in dead]
    idx = {v: i for i, v in enumerate(keep)}
    out = RawForest()
    for v in keep:
        out.add_vertex(raw.dec[v])
    for v in keep:
        s = raw.succ[v]
        if s is not None:
            if s in dead:
                raise ForestError("deleting a vertex with predecessors")
            out.succ[idx[v]] = idx[s]
    for st in raw.stolons:
        u, v = tuple(st)
        if u in dead or v in dead:
            continue
        out.add_stolon(idx[u], idx[v])
    return out


def _splice_stolon(raw: RawForest, ru: int, rv: int, dead: set[int]) -> None:
    """Contract a stolon between two inserted clump roots.  A black/black
    stolon stays; a numbered root dissolves: its wire index is carried by
    its liana partner, so the partner re-pairs with the other side."""
    nu = isinstance(raw.dec[ru], int)
    nv = isinstance(raw.dec[rv], int)
    if not nu and not nv:
        raw.add_stolon(ru, rv)
        return
    if nu and nv:
        pu = _partner_in_raw(raw, ru, dead)
        pv = _partner_in_raw(raw, rv, dead)
        raw.dec[pv] = raw.dec[pu]
        dead.add(ru)
        dead.add(rv)
        return
    if nv:  # normalize: ru numbered, rv black
        ru, rv = rv, ru
    p = _partner_in_raw(raw, ru, dead)
    parent = raw.succ[p]
    dead.add(ru)
    dead.add(p)
    raw.add_edge(rv, parent)


def _partner_in_raw(raw: RawForest, half: int, dead: set[int]) -> int:
    lab = raw.dec[half]
    for v in range(len(raw.dec)):
        if v != half and v not in dead and raw.dec[v] == lab:
            return v
    raise ForestError("liana partner not found")


def _insertion_results(clump_at: dict[int, Forest], f: Forest) -> Series:
    """All forests obtained by replacing each substituted vertex of ``f``
    by its assigned clump: outgoing edges leave from the clump root,
    incoming edges attach to any non-numbered clump vertex, stolons
    contract the two clump roots (splicing through numbered roots)."""
    out = Series()
    raw0 = RawForest()
    copy_of: dict[int, int] = {}
    clump_vertices: dict[int, list[int]] = {}
    clump_root: dict[int, int] = {}
    for v in f.vertices():
        if v not in clump_at:
            copy_of[v] = raw0.add_vertex(f.dec[v])
    for v in f.vertices():
        if v in clump_at:
            idxs = raw0.merge(clump_at[v].raw())
            clump_vertices[v] = idxs
            clump_root[v] = next(i for i in idxs if raw0.succ[i] is None and
                                 not any(i in st for st in raw0.stolons))

    def src(v: int) -> int:
        return clump_root[v] if v in clump_at else copy_of[v]

    edge_choices: list[tuple[int, list[int]]] = []
    for v in f.vertices():
        s = f.succ[v]
        if s is None:
            continue
        if s in clump_at:
            targets = [i for i in clump_vertices[s]
                       if not isinstance(raw0.dec[i], int)]
            if not targets:
                return out
            edge_choices.append((src(v), targets))
        else:
            edge_choices.append((src(v), [copy_of[s]]))
    stolon_pairs = [(src(u), src(v)) for st in f.stolons for u, v in [tuple(st)]]
    for choice in itertools.product(*(t for _, t in edge_choices)):
        raw = raw0.copy()
        for (s_vertex, _), tgt in zip(edge_choices, choice):
            raw.add_edge(s_vertex, tgt)
        dead: set[int] = set()
        for u, v in stolon_pairs:
            _splice_stolon(raw, u, v, dead)
        out._acc(_raw_delete(raw, dead).canonical(), Q(1))
    return out


def substitute_action(p: ClumpedForest, f: Forest) -> Series:
    """p |> f: substitute the black vertices of ``f`` by the clumps of
    ``p`` in all ways (zero unless the counts match)."""
    blacks = [v for v in f.vertices() if f.dec[v] == BLACK]
    out = Series()
    if len(p.clumps) != len(blacks):
        return out
    for perm in itertools.permutations(range(len(p.clumps))):
        clump_at = {v: p.clumps[perm[i]] for i, v in enumerate(blacks)}
        for g, c in _insertion_results(clump_at, f).terms.items():
            out._acc(g, c)
    return out


def substitute_action_decorated(p: TaggedClumps, f: Forest) -> Series:
    """Tagged substitution: clumps tagged d replace the d-decorated
    vertices of ``f``."""
    by_tag: dict[str, list[Forest]] = {}
    for clump, tag in p.items:
        by_tag.setdefault(tag, []).append(clump)
    slots: dict[str, list[int]] = {}
    for v in f.vertices():
        d = f.dec[v]
        if isinstance(d, str):
            slots.setdefault(d, []).append(v)
    out = Series()
    if set(by_tag) != {d for d, vs in slots.items() if vs} or any(
            len(by_tag.get(d, [])) != len(vs) for d, vs in slots.items()):
        return out
    tag_list = sorted(slots)
    perm_sets = [itertools.permutations(range(len(slots[d]))) for d in tag_list]
    for perms in itertools.product(*[list(x) for x in perm_sets]):
        clump_at: dict[int, Forest] = {}
        for d, perm in zip(tag_list, perms):
            for i, v in enumerate(slots[d]):
                clump_at[v] = by_tag[d][perm[i]]
        for g, c in _insertion_results(clump_at, f).terms.items():
            out._acc(g, c)
    return out


# ---------------------------------------------------------------------------
# coproduct table helper (appendix-style listings)

def coproduct_table(kind: str, max_order: int) -> list[tuple[Forest, TensorSeries]]:
    from .forests import enumerate_forests
    fn = {"bck": bck_coproduct, "cem": cem_coaction, "deshuffle": deshuffle}[kind]
    rows = []
    for f in enumerate_forests(max_order, "connected"):
        rows.append((f, fn(f)))
    return rows
