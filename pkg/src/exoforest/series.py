"""Exact-rational formal series and functionals over canonical forests.

``Series`` is a finite linear combination of basis elements (forests or
clumped forests) with ``Fraction`` coefficients and a truncation order;
``Functional`` stores dual coefficients ``a(pi)``.  The two sides are
exchanged by ``delta_sigma``: the series coefficient of ``pi`` is
``a(pi)/sigma(pi)``.  Truncations are carried by value and intersected
by binary operations.  No zero coefficients are stored.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Callable, Iterable

from .forests import (ClumpedForest, Forest, parse, parse_clumped, render,
                      render_clumped, sigma, sigma_clumped)

Key = Forest | ClumpedForest

Q = Fraction


def _min_trunc(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _key_order(k: Key) -> int:
    return k.order


def _key_sigma(k: Key) -> int:
    return sigma_clumped(k) if isinstance(k, ClumpedForest) else sigma(k)


class LinearCombination:
    """Shared container: finite map key -> Fraction, truncation-aware."""

    __slots__ = ("terms", "truncation")

    def __init__(self, terms: dict[Key, Fraction] | None = None,
                 truncation: int | None = None):
        self.truncation = truncation
        self.terms: dict[Key, Fraction] = {}
        if terms:
            for k, c in terms.items():
                self._acc(k, Q(c))

    def _acc(self, k: Key, c: Fraction) -> None:
        if self.truncation is not None and k.order > self.truncation:
            return
        new = self.terms.get(k, Q(0)) + c
        if new:
            self.terms[k] = new
        else:
            self.terms.pop(k, None)

    # -- algebra -----------------------------------------------------------
    def __add__(self, other):
        out = type(self)(dict(self.terms), _min_trunc(self.truncation, other.truncation))
        out._retrunc()
        for k, c in other.terms.items():
            out._acc(k, c)
        return out

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        c = Q(scalar)
        out = type(self)(truncation=self.truncation)
        if c:
            for k, v in self.terms.items():
                out.terms[k] = v * c
        return out

    def __neg__(self):
        return -1 * self

    def _retrunc(self):
        if self.truncation is not None:
            for k in [k for k in self.terms if k.order > self.truncation]:
                del self.terms[k]

    def __call__(self, k: Key) -> Fraction:
        return self.terms.get(k, Q(0))

    def __eq__(self, other):
        return isinstance(other, LinearCombination) and self.terms == other.terms

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda t: (t[0].order, _render_key(t[0]))))

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def max_order(self) -> int:
        return max((k.order for k in self.terms), default=0)

    def graded_part(self, order: int):
        out = type(self)(truncation=self.truncation)
        out.terms = {k: c for k, c in self.terms.items() if k.order == order}
        return out

    def filtered(self, pred: Callable[[Key], bool]):
        out = type(self)(truncation=self.truncation)
        out.terms = {k: c for k, c in self.terms.items() if pred(k)}
        return out

    def truncated(self, order: int):
        out = type(self)(truncation=order if self.truncation is None
                         else min(order, self.truncation))
        out.terms = {k: c for k, c in self.terms.items() if k.order <= order}
        return out

    def support(self) -> list[Key]:
        return [k for k, _ in self]


def _render_key(k: Key) -> str:
    return render_clumped(k) if isinstance(k, ClumpedForest) else render(k)


class Series(LinearCombination):
    """delta_sigma-weighted formal sum: the coefficient multiplies F(pi)."""

    def __repr__(self):
        return f"Series({format_terms(self)!r})"


class Functional(LinearCombination):
    """Dual coefficients a(pi); optionally flagged as a character."""

    def __repr__(self):
        return f"Functional({format_terms(self)!r})"


def format_terms(lc: LinearCombination) -> str:
    if not lc.terms:
        return "0"
    bits = []
    for k, c in lc:
        txt = _render_key(k) or "{}"
        bits.append(f"{c}*{txt}" if c != 1 else txt)
    return " + ".join(bits)


def delta_sigma(a: Functional) -> Series:
    """Sum of a(pi)/sigma(pi) * pi."""
    out = Series(truncation=a.truncation)
    for k, c in a.terms.items():
        out._acc(k, c / _key_sigma(k))
    return out


def delta_sigma_inv(s: Series) -> Functional:
    out = Functional(truncation=s.truncation)
    for k, c in s.terms.items():
        out._acc(k, c * _key_sigma(k))
    return out


def functional(pairs: Iterable[tuple[Key, Fraction | int]],
               truncation: int | None = None) -> Functional:
    return Functional({k: Q(c) for k, c in pairs}, truncation)


def unit_functional(truncation: int | None = None) -> Functional:
    """delta_1: value 1 on the empty forest."""
    from .forests import EMPTY
    return Functional({EMPTY: Q(1)}, truncation)


# ---------------------------------------------------------------------------
# convolution machinery

CoproductFn = Callable[[Forest], list[tuple[Key, Forest, Fraction]]]


def convolve_with(coproduct: CoproductFn, a: Functional, b: Functional,
                  domain: Iterable[Forest]) -> Functional:
    """(a (x) b) o Delta evaluated eagerly over ``domain``."""
    trunc = _min_trunc(a.truncation, b.truncation)
    out = Functional(truncation=trunc)
    for pi in domain:
        if trunc is not None and pi.order > trunc:
            continue
        total = Q(0)
        for left, right, coeff in coproduct(pi):
            av = a(left)
            if av:
                bv = b(right)
                if bv:
                    total += coeff * av * bv
        if total:
            out.terms[pi] = total
    return out


def convolve(kind: str, a: Functional, b: Functional,
             truncation: int | None = None) -> Functional:
    """Convolution by coproduct id: deshuffle, deshuffle-aroma-linear,
    bck, cem, cem-reduced."""
    from . import hopf
    from .forests import enumerate_forests
    trunc = _min_trunc(truncation, _min_trunc(a.truncation, b.truncation))
    if trunc is None:
        raise ValueError("convolve needs a truncation order")
    cop = hopf.coproduct_fn(kind)
    out = convolve_with(cop, a, b, enumerate_forests(trunc))
    out.truncation = trunc
    return out


def exp_conv(kind: str, a0: Functional, truncation: int | None = None) -> Functional:
    """exp with respect to the ``kind`` convolution; a0 must kill 1."""
    from .forests import EMPTY
    trunc = _min_trunc(truncation, a0.truncation)
    if trunc is None:
        raise ValueError("exp_conv needs a truncation order")
    if a0(EMPTY):
        raise ValueError("exp requires a vanishing constant term")
    term = Functional(dict(a0.terms), trunc)
    out = unit_functional(trunc) + term
    k = 1
    while term and k <= trunc:
        k += 1
        term = Q(1, k) * convolve(kind, term, a0, trunc)
        out = out + term
    return out


def log_conv(kind: str, a: Functional, truncation: int | None = None) -> Functional:
    """log with respect to the ``kind`` convolution; a(1) must be 1."""
    from .forests import EMPTY
    trunc = _min_trunc(truncation, a.truncation)
    if trunc is None:
        raise ValueError("log_conv needs a truncation order")
    if a(EMPTY) != 1:
        raise ValueError("log requires constant term 1")
    x = a - unit_functional(trunc)
    x.truncation = trunc
    out = Functional(dict(x.terms), trunc)
    power = x
    sign = 1
    for k in range(2, trunc + 1):
        power = convolve(kind, power, x, trunc)
        sign = -sign
        out = out + Q(sign, k) * power
    return out


def scale_step(a: Functional, s: Fraction | int) -> Functional:
    """a_s(pi) = a(pi) * s**order(pi) (stepsize h -> s*h)."""
    s = Q(s)
    out = Functional(truncation=a.truncation)
    for k, c in a.terms.items():
        v = c * s ** k.order
        if v:
            out.terms[k] = v
    return out


# ---------------------------------------------------------------------------
# characters

def character_extend(gen_values: dict[Forest, Fraction],
                     truncation: int) -> Functional:
    """Multiplicative extension of values on connected generators to all
    enumerated forests up to the truncation order."""
    from .forests import enumerate_forests
    out = Functional(truncation=truncation)
    for f in enumerate_forests(truncation):
        v = Q(1)
        for piece_vertices in f.connected_pieces():
            piece = f.restrict(set(piece_vertices))
            v *= Q(gen_values.get(piece, 0))
            if not v:
                break
        if v:
            out.terms[f] = v
    return out


def is_character(a: Functional, max_order: int | None = None) -> bool:
    """Check a(pi1 . pi2) = a(pi1) a(pi2) on all stored splittings."""
    from .forests import RawForest
    limit = a.truncation if max_order is None else max_order
    for f in list(a.terms) + [k for k in _zero_probe(a, limit)]:
        pieces = f.connected_pieces()
        if len(pieces) < 2:
            continue
        v = Q(1)
        for pv in pieces:
            v *= a(f.restrict(set(pv)))
        if v != a(f):
            return False
    return True


def _zero_probe(a: Functional, limit: int | None) -> list[Forest]:
    """Products of stored pieces whose value should also match (catching
    zeros that are absent from the stored support)."""
    from .forests import RawForest
    if limit is None:
        return []
    out = []
    keys = [k for k in a.terms if isinstance(k, Forest) and 0 < k.order]
    for i, f in enumerate(keys):
        for g in keys[i:]:
            if f.order + g.order <= limit:
                raw = RawForest()
                raw.merge(f.raw())
                raw.merge(g.raw())
                out.append(raw.canonical())
    return out


def character_value_clumped(a_on_pieces: Functional, cf: ClumpedForest) -> Fraction:
    """Value of the character of (CEF, .) extending ``a_on_pieces`` on a
    clumped monomial: the product over clumps."""
    v = Q(1)
    for c in cf.clumps:
        v *= a_on_pieces(c)
        if not v:
            return Q(0)
    return v


# ---------------------------------------------------------------------------
# serialization

def series_to_json(lc: LinearCombination, basis: str = "aromatic-forest") -> str:
    payload = {
        "basis": basis,
        "truncation": lc.truncation,
        "terms": [{"forest": _render_key(k), "coeff": str(c)} for k, c in lc],
    }
    return json.dumps(payload, indent=2)


def series_from_json(text: str) -> tuple[LinearCombination, str]:
    payload = json.loads(text)
    basis = payload.get("basis", "aromatic-forest")
    lc = Series(truncation=payload.get("truncation"))
    for item in payload["terms"]:
        key: Key
        if basis == "clumped-forest":
            key = parse_clumped(item["forest"])
        else:
            key = parse(item["forest"])
        lc._acc(key, Q(item["coeff"]))
    return lc, basis


def _latex_frac(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    sign = "-" if c < 0 else ""
    return f"{sign}\\frac{{{abs(c.numerator)}}}{{{c.denominator}}}"


def to_latex(lc: LinearCombination) -> str:
    """Emit a display-style sum with \\forest{...} term macros."""
    if not lc.terms:
        return "0"
    bits = []
    for k, c in lc:
        txt = _render_key(k)
        body = ("\\mathbf{1}" if not txt or txt == "{}" else
                " \\cdot ".join(f"\\forest{{{p}}}" for p in txt.split(" . ")))
        if c == 1:
            bits.append("+" + body)
        elif c == -1:
            bits.append("-" + body)
        else:
            frac = _latex_frac(abs(c))
            bits.append(("-" if c < 0 else "+") + frac + body)
    out = " ".join(bits)
    return out[1:] if out.startswith("+") else out
