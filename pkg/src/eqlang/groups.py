"""Group backends and normal forms.

Each context bundles a generating set with normalize/multiply, where
normalize maps any word over the generators and their inverses to the
group's canonical representative word.  Contexts also enumerate elements by
normal-form length, which is what the brute-force solvers iterate over.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

from .words import Word, free_reduce, inverse_letter, inverse_word, power


class GroupError(ValueError):
    pass


class GroupContext:
    """Base behaviour shared by the concrete group backends."""

    name: str = "group"
    generators: tuple[str, ...] = ()

    def normalize(self, word: Sequence[str]) -> Word:
        raise NotImplementedError

    def multiply(self, u: Sequence[str], v: Sequence[str]) -> Word:
        return self.normalize(tuple(u) + tuple(v))

    def invert(self, word: Sequence[str]) -> Word:
        return self.normalize(inverse_word(word))

    def identity(self) -> Word:
        return ()

    def is_identity(self, word: Sequence[str]) -> bool:
        return self.normalize(word) == ()

    def elements(self, max_len: int) -> Iterator[Word]:
        """All normal forms of length <= max_len, deterministic order."""
        raise NotImplementedError

    def letters(self) -> tuple[str, ...]:
        out = []
        for g in self.generators:
            out.append(g)
            out.append(inverse_letter(g))
        return tuple(out)


def _default_names(k: int) -> tuple[str, ...]:
    if k <= 26:
        return tuple("abcdefghijklmnopqrstuvwxyz"[:k])
    return tuple(f"a{i + 1}" for i in range(k))


def _signed_sums(dim: int, max_norm: int) -> Iterator[tuple[int, ...]]:
    """Integer vectors with |.|_1 <= max_norm, by norm then lexicographic."""
    for norm in range(max_norm + 1):
        for vec in itertools.product(range(-norm, norm + 1), repeat=dim):
            if sum(abs(c) for c in vec) == norm:
                yield vec


class ZkContext(GroupContext):
    """Free abelian group of rank k, normal form a1^e1 ... ak^ek."""

    def __init__(self, k: int, names: Sequence[str] | None = None):
        if k < 1:
            raise GroupError("rank must be positive")
        self.k = k
        self.generators = tuple(names) if names else _default_names(k)
        if len(self.generators) != k:
            raise GroupError("need one name per generator")
        self.name = f"zk:{k}"
        self._index = {g: i for i, g in enumerate(self.generators)}

    def exponents(self, word: Sequence[str]) -> tuple[int, ...]:
        out = [0] * self.k
        for x in word:
            base, sign = (x[:-3], -1) if x.endswith("^-1") else (x, 1)
            if base not in self._index:
                raise GroupError(f"letter {x!r} is not a generator of {self.name}")
            out[self._index[base]] += sign
        return tuple(out)

    def from_exponents(self, exps: Sequence[int]) -> Word:
        word: list[str] = []
        for g, e in zip(self.generators, exps):
            word.extend(power(g, e))
        return tuple(word)

    def normalize(self, word: Sequence[str]) -> Word:
        return self.from_exponents(self.exponents(word))

    def elements(self, max_len: int) -> Iterator[Word]:
        for vec in _signed_sums(self.k, max_len):
            yield self.from_exponents(vec)


class FreeGroupContext(GroupContext):
    """Free group; normal forms are the freely reduced words."""

    def __init__(self, rank: int, names: Sequence[str] | None = None):
        if rank < 1:
            raise GroupError("rank must be positive")
        self.rank = rank
        self.generators = tuple(names) if names else _default_names(rank)
        self.name = f"free:{rank}"

    def normalize(self, word: Sequence[str]) -> Word:
        alphabet = set(self.letters())
        for x in word:
            if x not in alphabet:
                raise GroupError(f"letter {x!r} is not a generator of {self.name}")
        return free_reduce(word)

    def elements(self, max_len: int) -> Iterator[Word]:
        letters = self.letters()
        layer: list[Word] = [()]
        yield ()
        for _ in range(max_len):
            nxt = []
            for w in layer:
                for x in letters:
                    if w and x == inverse_letter(w[-1]):
                        continue
                    nxt.append(w + (x,))
            layer = nxt
            yield from layer


# ---------------------------------------------------------------------------
# Heisenberg group, Mal'cev coordinates

HeisTriple = tuple[int, int, int]

_HEIS_GEN: Mapping[str, HeisTriple] = {
    "a": (1, 0, 0), "a^-1": (-1, 0, 0),
    "b": (0, 1, 0), "b^-1": (0, -1, 0),
    "c": (0, 0, 1), "c^-1": (0, 0, -1),
}


def heis_mul(p: HeisTriple, q: HeisTriple) -> HeisTriple:
    """Product in Mal'cev coordinates, convention c = a^-1 b^-1 a b."""
    i, j, k = p
    i2, j2, k2 = q
    return (i + i2, j + j2, k + k2 - j * i2)


def heis_inverse(p: HeisTriple) -> HeisTriple:
    i, j, k = p
    return (-i, -j, -k - i * j)


def heis_normalize(word: Sequence[str]) -> HeisTriple:
    acc: HeisTriple = (0, 0, 0)
    for x in word:
        if x not in _HEIS_GEN:
            raise GroupError(f"letter {x!r} is not a Heisenberg generator")
        acc = heis_mul(acc, _HEIS_GEN[x])
    return acc


def heis_matrix(p: HeisTriple) -> tuple[tuple[int, int, int], ...]:
    """Upper unitriangular image of a^i b^j c^k; ground truth for heis_mul."""
    i, j, k = p
    return ((1, i, i * j + k), (0, 1, j), (0, 0, 1))


def mat_mul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    n = len(a)
    return tuple(tuple(sum(a[r][t] * b[t][c] for t in range(n)) for c in range(n))
                 for r in range(n))


class HeisenbergContext(GroupContext):
    def __init__(self):
        self.generators = ("a", "b", "c")
        self.name = "heisenberg"

    def normalize(self, word: Sequence[str]) -> Word:
        i, j, k = heis_normalize(word)
        return power("a", i) + power("b", j) + power("c", k)

    def elements(self, max_len: int) -> Iterator[Word]:
        for i, j, k in _signed_sums(3, max_len):
            yield power("a", i) + power("b", j) + power("c", k)


# ---------------------------------------------------------------------------
# Soluble Baumslag-Solitar groups BS(1,k), k >= 2

@dataclass(frozen=True)
class BsNormalForm:
    """b^t a^(i_m) b^-1 ... a^(i_1) b^-1 a^s with digits i_m..i_1 in [0,k).

    The trailing exponent s may be negative; positivity would leave inverse
    elements unrepresentable.  i_m is nonzero whenever digits are present.
    """

    t: int
    digits: tuple[int, ...]
    s: int


def _bs_check_k(k: int):
    if k < 2:
        raise GroupError("BS(1,k) backend requires k >= 2")


def bs_eval(word: Sequence[str], k: int) -> tuple[int, Fraction]:
    """Affine value (t, q): the element acts as x -> x/k^t + ... with b
    scaling by 1/k and a translating by 1; fixed so that b^-1 a b = a^k."""
    _bs_check_k(k)
    t, q = 0, Fraction(0)
    for x in word:
        if x == "b":
            t += 1
        elif x == "b^-1":
            t -= 1
        elif x == "a":
            q += Fraction(1, k ** t) if t >= 0 else Fraction(k ** (-t))
        elif x == "a^-1":
            q -= Fraction(1, k ** t) if t >= 0 else Fraction(k ** (-t))
        else:
            raise GroupError(f"letter {x!r} is not a BS(1,k) generator")
    return t, q


def bs_normalize(word: Sequence[str], k: int) -> BsNormalForm:
    """Unique digit form of the element the word represents."""
    u, q = bs_eval(word, k)
    m = 0
    while (q * Fraction(k) ** (u + m)).denominator != 1:
        m += 1
    t = u + m
    n = int(q * Fraction(k) ** t)
    digits = []
    for _ in range(m):
        digits.append(n % k)
        n //= k
    if digits and digits[0] == 0:
        raise GroupError("digit decomposition failed")  # minimal m prevents this
    return BsNormalForm(t, tuple(digits), n)


def bs_render(nf: BsNormalForm, k: int) -> Word:
    word: list[str] = list(power("b", nf.t))
    for d in nf.digits:
        word.extend(power("a", d))
        word.append("b^-1")
    word.extend(power("a", nf.s))
    return tuple(word)


def bs_conjecture_language(k: int, r_max: int, n_max: int) -> tuple[Word, ...]:
    """Commutation-witness words b^r a # b^(rn) a^((k^rn - 1)/(k^r - 1)).

    r starts at 1: at r = 0 the exponent degenerates to 0/0.
    """
    _bs_check_k(k)
    out: list[Word] = []
    for r in range(1, r_max + 1):
        for n in range(n_max + 1):
            e = (k ** (r * n) - 1) // (k ** r - 1)
            out.append(power("b", r) + ("a", "#") + power("b", r * n) + power("a", e))
    return tuple(out)


class BsContext(GroupContext):
    def __init__(self, k: int):
        _bs_check_k(k)
        self.k = k
        self.generators = ("a", "b")
        self.name = f"bs:{k}"
        # orientation self-test: b^-1 a b must equal a^k
        conj = bs_eval(("b^-1", "a", "b"), k)
        if conj != bs_eval(("a",) * k, k):
            raise GroupError("affine orientation broken")

    def normalize(self, word: Sequence[str]) -> Word:
        return bs_render(bs_normalize(word, self.k), self.k)

    def elements(self, max_len: int) -> Iterator[Word]:
        k = self.k
        for total in range(max_len + 1):
            for t in range(-total, total + 1):
                rest = total - abs(t)
                for m in range(rest + 1):
                    digit_budget = rest - m
                    for digits in _bs_digit_tuples(k, m, digit_budget):
                        s_budget = digit_budget - sum(digits)
                        for s in (range(-s_budget, s_budget + 1)):
                            if abs(s) == s_budget:
                                yield bs_render(BsNormalForm(t, digits, s), k)


def _bs_digit_tuples(k: int, m: int, budget: int) -> Iterator[tuple[int, ...]]:
    if m == 0:
        yield ()
        return
    for digits in itertools.product(range(k), repeat=m):
        if digits[0] != 0 and sum(digits) <= budget:
            yield digits


# ---------------------------------------------------------------------------
# Schreier data for finite-index subgroups

@dataclass(frozen=True)
class SchreierData:
    transversal: tuple[Word, ...]
    barmap: Mapping[tuple[Word, str], Word]
    generators: tuple[Word, ...]


def schreier_generators(ctx: GroupContext, member: Callable[[Word], bool],
                        sigma: Sequence[str] | None = None,
                        transversal: Sequence[Sequence[str]] | None = None,
                        index_budget: int = 256) -> SchreierData:
    """Transversal, bar map and generators tx(bar(tx))^-1 of a subgroup.

    The transversal is found by coset search using the membership predicate
    unless one is supplied; the identity coset representative is the empty
    word.  Every generator is checked against the predicate.
    """
    sigma = tuple(sigma) if sigma is not None else ctx.generators
    step_letters = []
    for x in sigma:
        step_letters.append(x)
        step_letters.append(inverse_letter(x))

    def same_coset(u: Word, v: Word) -> bool:
        return member(ctx.multiply(u, ctx.invert(v)))

    if transversal is not None:
        reps = [ctx.normalize(t) for t in transversal]
        if not any(r == () for r in reps):
            raise GroupError("transversal must represent the subgroup by the empty word")
        for i, r in enumerate(reps):
            for r2 in reps[:i]:
                if same_coset(r, r2):
                    raise GroupError("transversal has two words in one coset")
    else:
        reps = [()]
        frontier = [()]
        while frontier:
            nxt = []
            for rep in frontier:
                for x in step_letters:
                    candidate = ctx.normalize(rep + (x,))
                    if not any(same_coset(candidate, r) for r in reps):
                        if len(reps) >= index_budget:
                            raise GroupError(
                                f"coset search exceeded index budget {index_budget}")
                        reps.append(candidate)
                        nxt.append(candidate)
            frontier = nxt

    def rep_of(word: Word) -> Word:
        for r in reps:
            if same_coset(word, r):
                return r
        raise GroupError("word escapes the computed transversal")

    barmap: dict[tuple[Word, str], Word] = {}
    for t in reps:
        for x in step_letters:
            barmap[(t, x)] = rep_of(ctx.multiply(t, (x,)))

    generators: list[Word] = []
    for t in reps:
        for x in sigma:
            z = ctx.normalize(t + (x,) + tuple(inverse_word(barmap[(t, x)])))
            if not member(z):
                raise GroupError(f"generator {z!r} fails the membership predicate")
            if z and z not in generators:
                generators.append(z)
    return SchreierData(tuple(reps), barmap, tuple(sorted(generators, key=lambda w: (len(w), w))))


def schreier_normal_form(h: Sequence[str], data: SchreierData, ctx: GroupContext,
                         member: Callable[[Word], bool]) -> tuple[str, ...]:
    """Factor a subgroup element over the Schreier generators.

    Walks the normal form of h through the coset graph, emitting the factor
    t(letter)(bar)^-1 at each step; identity factors are dropped.  The
    result is a word over z0, z1, ... naming data.generators.
    """
    nf = ctx.normalize(h)
    if not member(nf):
        raise GroupError("word does not represent a subgroup element")
    names: dict[Word, str] = {}
    for i, z in enumerate(data.generators):
        names[z] = f"z{i}"
    out: list[str] = []
    t: Word = ()
    for x in nf:
        bar = data.barmap[(t, x)]
        factor = ctx.normalize(t + (x,) + tuple(inverse_word(bar)))
        if not member(factor):
            raise GroupError("factor escapes the subgroup")
        if factor:
            if factor in names:
                out.append(names[factor])
            else:
                inv = ctx.invert(factor)
                if inv not in names:
                    raise GroupError(f"factor {factor!r} is not a Schreier generator")
                out.append(inverse_letter(names[inv]))
        t = bar
    if t != ():
        raise GroupError("walk did not return to the identity coset")
    return tuple(out)


def schreier_factor_words(zeta: Sequence[str], data: SchreierData) -> list[Word]:
    """Expand z-names back into ambient words."""
    out = []
    for z in zeta:
        if z.endswith("^-1"):
            index = int(z[1:-3])
            out.append(inverse_word(data.generators[index]))
        else:
            out.append(data.generators[int(z[1:])])
    return out


def context_from_spec(spec: str) -> GroupContext:
    """Parse zk:k | free:rank | heisenberg | bs:k."""
    if spec == "heisenberg":
        return HeisenbergContext()
    kind, _, arg = spec.partition(":")
    if kind == "zk" and arg:
        return ZkContext(int(arg))
    if kind == "free" and arg:
        return FreeGroupContext(int(arg))
    if kind == "bs" and arg:
        return BsContext(int(arg))
    raise GroupError(f"unknown group spec {spec!r}")
