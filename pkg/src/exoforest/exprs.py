"""Exact trigonometric-polynomial expressions on the torus and the
evaluation of elementary differentials.

An ``Expr`` is a finite sum of terms ``c * x^m * exp(i k.x)`` with
Gaussian-rational coefficients ``c``, monomial exponents ``m`` and
integer frequency vectors ``k``.  The set is closed under +, *, and
partial differentiation, and equality of normal forms is plain dict
equality, so algebraic identities between elementary differentials can
be checked exactly.  Real expressions keep the conjugate symmetry
``c(-k) = conj(c(k))`` automatically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .forests import BLACK, Forest, ForestError

Q = Fraction

Coeff = tuple[Fraction, Fraction]  # re + im*i
TermKey = tuple[tuple[int, ...], tuple[int, ...]]  # (poly exponents, frequencies)


def _cmul(a: Coeff, b: Coeff) -> Coeff:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cadd(a: Coeff, b: Coeff) -> Coeff:
    return (a[0] + b[0], a[1] + b[1])


class Expr:
    """Trigonometric polynomial in x1..xd, exact normal form."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict[TermKey, Coeff] | None = None):
        self.dim = dim
        self.terms: dict[TermKey, Coeff] = {}
        if terms:
            for k, c in terms.items():
                self._acc(k, c)

    def _acc(self, key: TermKey, c: Coeff) -> None:
        cur = self.terms.get(key, (Q(0), Q(0)))
        new = _cadd(cur, c)
        if new[0] or new[1]:
            self.terms[key] = new
        else:
            self.terms.pop(key, None)

    # -- constructors -------------------------------------------------------
    @staticmethod
    def const(dim: int, value) -> "Expr":
        e = Expr(dim)
        v = Q(value)
        if v:
            e.terms[((0,) * dim, (0,) * dim)] = (v, Q(0))
        return e

    @staticmethod
    def var(dim: int, i: int) -> "Expr":
        e = Expr(dim)
        m = [0] * dim
        m[i] = 1
        e.terms[(tuple(m), (0,) * dim)] = (Q(1), Q(0))
        return e

    @staticmethod
    def _wave(dim: int, i: int, k: int, coeffs: list[tuple[int, Coeff]]) -> "Expr":
        e = Expr(dim)
        for mult, c in coeffs:
            f = [0] * dim
            f[i] = mult * k
            e._acc(((0,) * dim, tuple(f)), c)
        return e

    @staticmethod
    def sin(dim: int, i: int, k: int = 1) -> "Expr":
        # sin = (e^{ikx} - e^{-ikx}) / 2i
        return Expr._wave(dim, i, k, [(1, (Q(0), Q(-1, 2))), (-1, (Q(0), Q(1, 2)))])

    @staticmethod
    def cos(dim: int, i: int, k: int = 1) -> "Expr":
        return Expr._wave(dim, i, k, [(1, (Q(1, 2), Q(0))), (-1, (Q(1, 2), Q(0)))])

    # -- algebra --------------------------------------------------------------
    def __add__(self, other: "Expr") -> "Expr":
        out = Expr(self.dim, dict(self.terms))
        for k, c in other.terms.items():
            out._acc(k, c)
        return out

    def __sub__(self, other: "Expr") -> "Expr":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "Expr":
        c = Q(scalar)
        out = Expr(self.dim)
        if c:
            for k, (re, im) in self.terms.items():
                out.terms[k] = (re * c, im * c)
        return out

    def __neg__(self) -> "Expr":
        return -1 * self

    def __mul__(self, other: "Expr") -> "Expr":
        out = Expr(self.dim)
        for (m1, f1), c1 in self.terms.items():
            for (m2, f2), c2 in other.terms.items():
                key = (tuple(a + b for a, b in zip(m1, m2)),
                       tuple(a + b for a, b in zip(f1, f2)))
                out._acc(key, _cmul(c1, c2))
        return out

    def __eq__(self, other):
        return isinstance(other, Expr) and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_periodic(self) -> bool:
        return all(not any(m) for m, _ in self.terms)

    def partial(self, i: int, k: int = 1) -> "Expr":
        out = self
        for _ in range(k):
            nxt = Expr(out.dim)
            for (m, f), c in out.terms.items():
                if m[i]:
                    m2 = list(m)
                    m2[i] -= 1
                    nxt._acc((tuple(m2), f), (c[0] * m[i], c[1] * m[i]))
                if f[i]:
                    # d/dx e^{ikx} = ik e^{ikx}
                    nxt._acc((m, f), _cmul(c, (Q(0), Q(f[i]))))
            out = nxt
        return out

    def eval_at(self, point):
        """Float value (exact Fraction for polynomial expressions at
        rational points)."""
        if all(not any(f) for _, f in self.terms):
            total = Q(0)
            for (m, _), (re, im) in self.terms.items():
                mono = Q(1)
                for i, e in enumerate(m):
                    mono *= Q(point[i]) ** e
                total += re * mono
            return total
        import math
        total = 0.0
        for (m, f), (re, im) in self.terms.items():
            mono = 1.0
            for i, e in enumerate(m):
                mono *= float(point[i]) ** e
            phase = sum(f[i] * float(point[i]) for i in range(self.dim))
            total += mono * (float(re) * math.cos(phase) - float(im) * math.sin(phase))
        return total

    def eval_grid(self, grids):
        """Vectorised evaluation on numpy coordinate arrays (one per
        variable, broadcastable)."""
        import numpy as np
        total = None
        for (m, f), (re, im) in self.terms.items():
            mono = 1.0
            for i, e in enumerate(m):
                if e:
                    mono = mono * grids[i] ** e
            phase = 0.0
            for i in range(self.dim):
                if f[i]:
                    phase = phase + f[i] * grids[i]
            term = mono * (float(re) * np.cos(phase) - float(im) * np.sin(phase))
            total = term if total is None else total + term
        if total is None:
            return np.zeros_like(grids[0])
        return total

    def __repr__(self):
        if not self.terms:
            return "Expr(0)"
        bits = []
        for (m, f), (re, im) in sorted(self.terms.items()):
            c = f"({re}{'+' if im >= 0 else ''}{im}i)" if im else str(re)
            mono = "".join(f"*x{i+1}^{e}" for i, e in enumerate(m) if e)
            wave = "+".join(f"{k}x{i+1}" for i, k in enumerate(f) if k)
            bits.append(c + mono + (f"*e^(i({wave}))" if wave else ""))
        return "Expr(" + " + ".join(bits) + ")"


# ---------------------------------------------------------------------------
# expression text parser

def parse_expr(text: str, dim: int) -> Expr:
    """Parse the config syntax: rationals, x1..x3, sin(), cos(), + - * /
    and integer powers with ^."""
    s = text.replace(" ", "")
    pos = 0

    def peek() -> str:
        return s[pos] if pos < len(s) else ""

    def fail(msg: str):
        raise ValueError(f"{msg} at position {pos} in {text!r}")

    def parse_sum() -> Expr:
        nonlocal pos
        sign = 1
        if peek() in ("+", "-"):
            sign = -1 if peek() == "-" else 1
            pos += 1
        e = sign * parse_term()
        while peek() in ("+", "-"):
            op = peek()
            pos += 1
            t = parse_term()
            e = e + t if op == "+" else e - t
        return e

    def parse_term() -> Expr:
        nonlocal pos
        e = parse_power()
        while peek() in ("*", "/"):
            op = peek()
            pos += 1
            t = parse_power()
            if op == "*":
                e = e * t
            else:
                c = _as_constant(t)
                if c is None or c == 0:
                    fail("division only by nonzero constants")
                e = (1 / c) * e
        return e

    def parse_power() -> Expr:
        nonlocal pos
        e = parse_base()
        if peek() == "^":
            pos += 1
            start = pos
            while pos < len(s) and s[pos].isdigit():
                pos += 1
            if start == pos:
                fail("expected integer exponent")
            n = int(s[start:pos])
            out = Expr.const(dim, 1)
            for _ in range(n):
                out = out * e
            return out
        return e

    def parse_base() -> Expr:
        nonlocal pos
        ch = peek()
        if ch == "(":
            pos += 1
            e = parse_sum()
            if peek() != ")":
                fail("expected ')'")
            pos += 1
            return e
        if ch == "-":
            pos += 1
            return -1 * parse_base()
        if ch.isdigit():
            start = pos
            while pos < len(s) and s[pos].isdigit():
                pos += 1
            return Expr.const(dim, int(s[start:pos]))
        if ch == "x":
            pos += 1
            start = pos
            while pos < len(s) and s[pos].isdigit():
                pos += 1
            if start == pos:
                fail("expected variable index")
            i = int(s[start:pos])
            if not (1 <= i <= dim):
                fail(f"variable x{i} outside dimension {dim}")
            return Expr.var(dim, i - 1)
        for name, ctor in (("sin", Expr.sin), ("cos", Expr.cos)):
            if s.startswith(name, pos):
                pos += len(name)
                if peek() != "(":
                    fail(f"expected '(' after {name}")
                pos += 1
                arg = parse_sum()
                if peek() != ")":
                    fail("expected ')'")
                pos += 1
                i, k = _linear_arg(arg)
                return ctor(dim, i, k)
        fail("unexpected input")

    def _as_constant(e: Expr) -> Fraction | None:
        if not e.terms:
            return Q(0)
        if len(e.terms) == 1:
            (m, f), (re, im) = next(iter(e.terms.items()))
            if not any(m) and not any(f) and not im:
                return re
        return None

    def _linear_arg(e: Expr) -> tuple[int, int]:
        # argument of sin/cos must be an integer multiple of one variable
        if len(e.terms) != 1:
            fail("sin/cos argument must be k*xi")
        (m, f), (re, im) = next(iter(e.terms.items()))
        if any(f) or im or sum(m) != 1:
            fail("sin/cos argument must be k*xi")
        i = next(j for j, v in enumerate(m) if v)
        if re.denominator != 1:
            fail("sin/cos frequency must be an integer")
        return i, int(re)

    e = parse_sum()
    if pos != len(s):
        fail("trailing input")
    return e


# ---------------------------------------------------------------------------
# vector fields

@dataclass(frozen=True)
class VectorField:
    components: tuple[Expr, ...]
    is_gradient: bool = False
    potential: Expr | None = None

    @property
    def dim(self) -> int:
        return len(self.components)

    @staticmethod
    def from_potential(v: Expr) -> "VectorField":
        comps = tuple(-1 * v.partial(i) for i in range(v.dim))
        return VectorField(comps, is_gradient=True, potential=v)

    def __getitem__(self, i: int) -> Expr:
        return self.components[i]


def partial(e: Expr, i: int, k: int = 1) -> Expr:
    return e.partial(i, k)


# ---------------------------------------------------------------------------
# elementary differentials

def _index_classes(f: Forest) -> tuple[dict[int, int], int]:
    """Map each vertex to a free-index class: lianas share a class with
    their partner, stolon endpoints share a class."""
    parent = list(range(f.n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(a: int, b: int) -> None:
        parent[find(a)] = find(b)

    for a, b in f.liana_pairs():
        union(a, b)
    for st in f.stolons:
        u, v = tuple(st)
        union(u, v)
    classes: dict[int, int] = {}
    cls_of: dict[int, int] = {}
    for v in f.vertices():
        r = find(v)
        if r not in classes:
            classes[r] = len(classes)
        cls_of[v] = classes[r]
    return cls_of, len(classes)


def _diff_multi(e: Expr, indices: tuple[int, ...]) -> Expr:
    for i in indices:
        e = e.partial(i)
    return e


class _DerivCache:
    def __init__(self, base: Expr):
        self.base = base
        self.cache: dict[tuple[int, ...], Expr] = {(): base}

    def get(self, indices: tuple[int, ...]) -> Expr:
        key = tuple(sorted(indices))
        if key not in self.cache:
            self.cache[key] = _diff_multi(self.base, key)
        return self.cache[key]


def elementary(pi: Forest, field: VectorField, phi: Expr, dim: int) -> Expr:
    """F(pi)[phi]: sum over index assignments of the product of partial
    derivatives of the field components encoded by the forest, times the
    root-differentiated test function."""
    if not pi.is_exotic():
        raise ForestError("elementary differentials need exotic forests")
    if field.dim != dim or phi.dim != dim:
        raise ValueError("dimension mismatch")
    graded = {v: field for v in pi.black_vertices()}
    parts = _elementary_core(pi, {0: field}, {v: 0 for v in pi.black_vertices()},
                             phi, dim)
    return parts


def _elementary_core(pi: Forest, fields: dict[int, VectorField],
                     grade_of: dict[int, int], phi: Expr, dim: int) -> Expr:
    cls_of, n_cls = _index_classes(pi)
    blacks = pi.black_vertices()
    preds: dict[int, list[int]] = {v: [] for v in pi.vertices()}
    for v in pi.vertices():
        s = pi.succ[v]
        if s is not None:
            preds[s].append(v)
    roots = pi.roots
    phi_cache = _DerivCache(phi)
    field_caches: dict[tuple[int, int], _DerivCache] = {}
    for g, fld in fields.items():
        for comp in range(dim):
            field_caches[(g, comp)] = _DerivCache(fld[comp])
    total = Expr(dim)
    for assign in itertools.product(range(dim), repeat=n_cls):
        term = phi_cache.get(tuple(assign[cls_of[r]] for r in roots))
        if term.is_zero():
            continue
        for v in blacks:
            idxs = tuple(assign[cls_of[u]] for u in preds[v])
            fac = field_caches[(grade_of[v], assign[cls_of[v]])].get(idxs)
            if fac.is_zero():
                term = Expr(dim)
                break
            term = term * fac
        total = total + term
    return total


def elementary_field(tau: Forest, field: VectorField, dim: int) -> VectorField:
    """F(tau) as a vector field for a single-root forest: the root index
    becomes the free component index."""
    if tau.num_roots != 1:
        raise ForestError("elementary_field needs a single-root forest")
    root = tau.roots[0]
    cls_of, n_cls = _index_classes(tau)
    blacks = tau.black_vertices()
    preds: dict[int, list[int]] = {v: [] for v in tau.vertices()}
    for v in tau.vertices():
        s = tau.succ[v]
        if s is not None:
            preds[s].append(v)
    caches = {comp: _DerivCache(field[comp]) for comp in range(dim)}
    comps = []
    for out_idx in range(dim):
        total = Expr(dim)
        for assign in itertools.product(range(dim), repeat=n_cls):
            if assign[cls_of[root]] != out_idx:
                continue
            term = Expr.const(dim, 1)
            for v in blacks:
                idxs = tuple(assign[cls_of[u]] for u in preds[v])
                fac = caches[assign[cls_of[v]]].get(idxs)
                if fac.is_zero():
                    term = Expr(dim)
                    break
                term = term * fac
            total = total + term
        comps.append(total)
    return VectorField(tuple(comps))


def eval_series(series, field: VectorField, phi: Expr, dim: int) -> Expr:
    """F(S)[phi] for a delta_sigma-weighted Series over forests."""
    total = Expr(dim)
    for f, c in series.terms.items():
        total = total + c * elementary(f, field, phi, dim)
    return total


def eval_series_graded(series, graded_fields: dict[int, VectorField],
                       phi: Expr, dim: int, max_order: int) -> dict[int, Expr]:
    """F(S)[phi] with an h-graded field: each black vertex independently
    takes a graded part; returns the expansion by total h-order."""
    out: dict[int, Expr] = {q: Expr(dim) for q in range(max_order + 1)}
    grades = sorted(graded_fields)
    for f, c in series.terms.items():
        blacks = f.black_vertices()
        base = f.num_lianas - f.num_stolons
        for combo in itertools.product(grades, repeat=len(blacks)):
            total_order = base + sum(combo)
            if total_order > max_order:
                continue
            grade_of = dict(zip(blacks, combo))
            e = _elementary_core(f, graded_fields, grade_of, phi, dim)
            out[total_order] = out[total_order] + c * e
    return out
