"""Word equations in free groups via free monoids with involution.

The pipeline: triangulate the group equation, split each triangle into
cancellation-free monoid equations, pack the system into a single
hash-delimited template word, then search the space of pop / compress
transformations of that word.  Accepting vertices are constant words equal
to their own involution mirror; walking the graph backwards from them and
undoing the compressions spells out the solutions, which is packaged as an
EDT0L system whose control is the reversed graph.

Solutions are enforced to be freely reduced by a single local invariant: no
constant ever stands next to its inverse inside a hash slot.  That check
subsumes both the reduced-word constraint and the no-cancellation seams of
the triangle splitting, so no finite-monoid constraint machinery is needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .edt0l import Edt0lSystem, SystemBuilder
from .words import HASH, Word, free_reduce, inverse_letter, inverse_word


class WordEqError(ValueError):
    pass


@dataclass(frozen=True)
class GroupEquation:
    """Left-hand side of U = 1 over constants and variables with inverses."""

    word: Word
    variables: tuple[str, ...]

    def __post_init__(self):
        bases = {v for v in self.variables}
        for v in bases:
            if v.endswith("^-1"):
                raise WordEqError("declare variables by their base name")
        for x in self.word:
            base = x[:-3] if x.endswith("^-1") else x
            if base in bases and x == HASH:
                raise WordEqError("hash cannot appear in an equation")


def equation_symbols(eq: GroupEquation) -> tuple[set[str], set[str]]:
    """(constants, variables-with-inverses) occurring in the word."""
    variables = set(eq.variables) | {inverse_letter(v) for v in eq.variables}
    consts = {x for x in eq.word if x not in variables}
    return consts, variables


@dataclass(frozen=True)
class TriangularSystem:
    """Equations (two symbols) = (one symbol), plus the fresh chain variables.

    Equations of length at most two skip the chain and go straight to a
    one-symbol-per-side monoid pair, kept in direct_pairs.
    """

    triangles: tuple[tuple[tuple[str, str], str], ...]
    direct_pairs: tuple[tuple[Word, Word], ...]
    variables: tuple[str, ...]
    original_variables: tuple[str, ...]


def triangulate(eq: GroupEquation) -> TriangularSystem:
    """Chain an arbitrary equation into triangles with fresh variables.

    The solutions restricted to the original variables are unchanged: each
    fresh variable is forced to equal a prefix of the folded word.
    """
    word = free_reduce(eq.word)
    fresh: list[str] = []
    triangles: list[tuple[tuple[str, str], str]] = []
    direct: list[tuple[Word, Word]] = []

    def new_var() -> str:
        name = f"Z{len(fresh) + 1}"
        fresh.append(name)
        return name

    if len(word) == 1:
        direct.append(((word[0],), ()))
    elif len(word) == 2:
        direct.append(((word[0],), (inverse_letter(word[1]),)))
    elif len(word) >= 3:
        prev = word[0]
        for i in range(1, len(word) - 2):
            z = new_var()
            triangles.append(((prev, word[i]), z))
            prev = z
        triangles.append(((prev, word[-2]), inverse_letter(word[-1])))
    return TriangularSystem(tuple(triangles), tuple(direct),
                            tuple(eq.variables) + tuple(fresh),
                            tuple(eq.variables))


@dataclass(frozen=True)
class MonoidSystem:
    """Cancellation-free word equations over the free monoid with involution."""

    pairs: tuple[tuple[Word, Word], ...]
    variables: tuple[str, ...]
    original_variables: tuple[str, ...]
    alphabet: tuple[str, ...]


def to_monoid_system(tri: TriangularSystem, alphabet: Sequence[str]) -> MonoidSystem:
    """Split every triangle xy = z into x = PQ, y = Q^-1 R, z = PR.

    The three juxtapositions P.Q, Q^-1.R and P.R sit literally inside the
    produced equations, so the no-adjacent-inverses invariant of the search
    enforces exactly the non-cancellation the splitting requires.
    """
    pairs: list[tuple[Word, Word]] = list(tri.direct_pairs)
    fresh: list[str] = []
    for idx, ((x, y), z) in enumerate(tri.triangles, start=1):
        p, q, r = f"P{idx}", f"Q{idx}", f"R{idx}"
        fresh.extend((p, q, r))
        pairs.append(((x,), (p, q)))
        pairs.append(((y,), (inverse_letter(q), r)))
        pairs.append(((z,), (p, r)))
    return MonoidSystem(tuple(pairs),
                        tri.variables + tuple(fresh),
                        tri.original_variables,
                        tuple(alphabet))


@dataclass(frozen=True)
class WInit:
    """The hash-delimited template word packaging a monoid system."""

    word: Word
    variables: tuple[str, ...]
    original_variables: tuple[str, ...]
    alphabet: tuple[str, ...]
    pair_count: int


def build_winit(msys: MonoidSystem) -> WInit:
    lhs: list[str] = []
    rhs: list[str] = []
    for i, (u, v) in enumerate(msys.pairs):
        if i:
            lhs.append(HASH)
            rhs.append(HASH)
        lhs.extend(u)
        rhs.extend(v)
    parts: list[str] = [HASH]
    for x in msys.variables:
        parts.append(x)
        parts.append(HASH)
    parts.extend(lhs)
    parts.append(HASH)
    parts.extend(rhs)
    parts.append(HASH)
    parts.extend(inverse_word(lhs))
    parts.append(HASH)
    parts.extend(inverse_word(rhs))
    parts.append(HASH)
    for x in reversed(msys.variables):
        parts.append(inverse_letter(x))
        parts.append(HASH)
    return WInit(tuple(parts), msys.variables, msys.original_variables,
                 tuple(msys.alphabet), len(msys.pairs))


@dataclass(frozen=True)
class Caps:
    """Search bounds; every produced artifact carries a completeness flag.

    max_component_len bounds the accumulated value of every variable slot,
    which is the practical knob for bounded-completeness runs: the graph
    then covers exactly the solutions whose components fit the bound.
    """

    max_word_len: int | None = None   # default 40 * |W_init|
    max_vertices: int = 1_000_000
    max_alphabet: int | None = None
    max_component_len: int | None = None


@dataclass
class SolutionGraph:
    winit: WInit
    vertices: list[Word]
    edges: list[tuple[int, int, str, "int | None"]]
    reverse_tables: list[dict[str, Word]]
    accepting: list[int]
    complete: bool
    constraints: list[dict[str, dict[str, list[str]]]] = field(default_factory=list)

    @property
    def initial(self) -> int:
        return 0


def _is_var(symbol: str, variables: frozenset[str]) -> bool:
    base = symbol[:-3] if symbol.endswith("^-1") else symbol
    return base in variables


def _split_slots(word: Word) -> list[Word]:
    slots: list[list[str]] = [[]]
    for x in word:
        if x == HASH:
            slots.append([])
        else:
            slots[-1].append(x)
    return [tuple(s) for s in slots]


def _reduced_everywhere(word: Word, variables: frozenset[str]) -> bool:
    """No constant is adjacent to its inverse inside a slot."""
    for prev, cur in zip(word, word[1:]):
        if prev == HASH or cur == HASH:
            continue
        if _is_var(prev, variables) or _is_var(cur, variables):
            continue
        if cur == inverse_letter(prev):
            return False
    return True


def _apply_substitution(word: Word, subst: Mapping[str, Word]) -> Word:
    out: list[str] = []
    for x in word:
        out.extend(subst.get(x, (x,)))
    return tuple(out)


def _vertex_constraints(word: Word, variables: frozenset[str]) -> dict[str, dict[str, list[str]]]:
    """Banned first/last letters per variable, read off the template word."""
    banned: dict[str, dict[str, set[str]]] = {}
    for idx, x in enumerate(word):
        if not _is_var(x, variables):
            continue
        entry = banned.setdefault(x, {"banned_first": set(), "banned_last": set()})
        if idx > 0 and word[idx - 1] != HASH and not _is_var(word[idx - 1], variables):
            entry["banned_first"].add(inverse_letter(word[idx - 1]))
        if idx + 1 < len(word) and word[idx + 1] != HASH \
                and not _is_var(word[idx + 1], variables):
            entry["banned_last"].add(inverse_letter(word[idx + 1]))
    return {v: {k: sorted(s) for k, s in e.items()} for v, e in sorted(banned.items())}


def build_solution_graph(winit: WInit, caps: Caps | None = None) -> SolutionGraph:
    """Depth-first closure of the pop / drop / compress moves.

    Equation pairs are resolved two-pointer style, always working on the
    pair with the fewest admissible moves; once every pair matches, leftover
    variables take free pops, and fully constant vertices (the accepting
    ones) additionally offer pair and block compressions.  Depth-first order
    drives complete derivations out early, so truncated runs still carry
    the小 solutions; exhaustive runs are order-independent anyway.
    """
    search = _GraphSearch(winit, caps or Caps())
    search.run()
    graph = SolutionGraph(winit, [search.coder.decode(w) for w in search.vertices],
                          search.edges, search.reverse_tables,
                          sorted(set(search.accepting)), search.complete)
    variables = frozenset(winit.variables)
    graph.constraints = [_vertex_constraints(w, variables) for w in graph.vertices]
    return graph


class _GraphSearch:
    """Char-coded worker behind build_solution_graph."""

    def __init__(self, winit: WInit, caps: Caps):
        from .words import LetterCoder

        self.winit = winit
        self.caps = caps
        self.max_len = caps.max_word_len if caps.max_word_len is not None \
            else 40 * len(winit.word)
        self.variables = frozenset(winit.variables)
        base = [HASH]
        base += list(winit.alphabet)
        for v in winit.variables:
            base.append(v)
            base.append(inverse_letter(v))
        self.coder = LetterCoder(base)
        self.hash_c = self.coder.char(HASH)
        self.alpha_c = [self.coder.char(a) for a in winit.alphabet]
        self.inv_c: dict[str, str] = {}
        for x in list(self.coder._to_char):
            self.inv_c[self.coder.char(x)] = self.coder.char(inverse_letter(x))
        self.var_c = {self.coder.char(v) for v in winit.variables} \
            | {self.coder.char(inverse_letter(v)) for v in winit.variables}
        self.original_c = {self.coder.char(v) for v in winit.original_variables} \
            | {self.coder.char(inverse_letter(v)) for v in winit.original_variables}
        self.const_c = set(self.inv_c) - self.var_c - {self.hash_c}
        self.n_vars = len(winit.variables)
        self.n_pairs = winit.pair_count
        self.start = self.coder.encode(winit.word)
        self.vertices: list[str] = [self.start]
        self.index: dict[str, int] = {self.start: 0}
        self.edges: list[tuple[int, int, str, int | None]] = []
        self.reverse_tables: list[dict[str, Word]] = []
        self.accepting: list[int] = []
        self.complete = True
        self._bad_pairs: "set[str] | None" = None

    # -- alphabet bookkeeping -------------------------------------------
    def fresh_letter(self, word: str) -> tuple[str, str]:
        n = 1
        while True:
            name = f"c{n}"
            if not self.coder.known(name) or self.coder.char(name) not in word:
                if self.caps.max_alphabet is not None and n > self.caps.max_alphabet:
                    self.complete = False
                    return "", ""
                c = self.coder.char(name)
                ci = self.coder.char(inverse_letter(name))
                self.inv_c[c] = ci
                self.inv_c[ci] = c
                self.const_c.update((c, ci))
                self._bad_pairs = None
                return c, ci
            n += 1

    def bad_pairs(self) -> set[str]:
        if self._bad_pairs is None:
            self._bad_pairs = {c + self.inv_c[c] for c in self.const_c}
        return self._bad_pairs

    def reduced(self, word: str) -> bool:
        return not any(p in word for p in self.bad_pairs())

    # -- vertex bookkeeping ---------------------------------------------
    def add_vertex(self, word: str) -> "int | None":
        got = self.index.get(word)
        if got is not None:
            return got
        if len(word) > self.max_len or len(self.vertices) >= self.caps.max_vertices \
                or not self.slots_fit(word):
            self.complete = False
            return None
        vid = len(self.vertices)
        self.index[word] = vid
        self.vertices.append(word)
        return vid

    def slots_fit(self, word: str) -> bool:
        """Original variables obey the component cap directly; fresh chain
        variables hold prefix products, so they get the derived bound of one
        full substituted equation."""
        if self.caps.max_component_len is None:
            return True
        limit = self.caps.max_component_len + 1
        parts = word.split(self.hash_c)
        n_orig = len(self.winit.original_variables)
        if any(len(s) > limit for s in parts[1:1 + n_orig]):
            return False
        fresh_limit = self._fresh_limit
        return all(len(s) <= fresh_limit for s in parts[1 + n_orig:1 + self.n_vars])

    def pairs_of(self, word: str) -> list[tuple[str, str]]:
        parts = word.split(self.hash_c)
        lo = 1 + self.n_vars
        return list(zip(parts[lo:lo + self.n_pairs],
                        parts[lo + self.n_pairs:lo + 2 * self.n_pairs]))

    # -- move machinery ---------------------------------------------------
    def menu_for(self, word: str) -> "list[tuple] | None":
        """Moves for the most constrained unresolved pair; None = dead.

        Menus are ranked: mismatches against constants are forced and go
        first; letter guessing is reserved for the original variables, whose
        values are the actual enumeration axis.  Fresh variables pick their
        letters up from forced matches as the triangle chain grounds them,
        so a mismatch between two fresh variables only offers the drops.
        """
        forced: list[list[tuple]] = []
        original: list[list[tuple]] = []
        fresh: list[list[tuple]] = []
        for u, v in self.pairs_of(word):
            ranked = self.pair_menu(u, v)
            if ranked is None:
                continue
            rank, menu = ranked
            if not menu:
                return None
            (forced, original, fresh)[rank].append(menu)
            if rank == 0 and len(menu) == 1:
                break
        for menus in (forced, original, fresh):
            if menus:
                return min(menus, key=len)
        leftover = sorted({c for c in word if c in self.var_c})
        if leftover:
            originals = [c for c in leftover if c in self.original_c]
            x = min(originals) if originals else min(leftover)
            return [("drop", x)] + [("pop_left", x, c) for c in self.alpha_c]
        return self.compression_moves(word)

    def pair_menu(self, u: str, v: str) -> "tuple[int, list[tuple]] | None":
        """(rank, moves) for one equation pair; rank 0 = forced by constants
        or exhaustion, 1 = guessing an original variable, 2 = fresh-only."""
        i = 0
        limit = min(len(u), len(v))
        while i < limit and u[i] == v[i]:
            i += 1
        ei, ej = len(u), len(v)
        while ei > i and ej > i and u[ei - 1] == v[ej - 1]:
            ei -= 1
            ej -= 1
        if i == ei and i == ej:
            return None
        moves: list[tuple] = []
        rank = 0
        var_c = self.var_c

        def ends(a: "str | None", b: "str | None", side: str):
            nonlocal rank
            if a is None and b is None:
                return
            if a is None or b is None:
                other = a if b is None else b
                if other in var_c:
                    moves.append(("drop", other))
                return
            a_var, b_var = a in var_c, b in var_c
            if not a_var and not b_var:
                return
            pop = "pop_left" if side == "L" else "pop_right"
            if a_var and b_var:
                moves.append(("drop", a))
                moves.append(("drop", b))
                subject = None
                if a in self.original_c:
                    subject = a
                elif b in self.original_c:
                    subject = b
                if subject is not None:
                    rank = max(rank, 1)
                    for c in self.alpha_c:
                        moves.append((pop, subject, c))
                else:
                    rank = max(rank, 2)
            elif a_var:
                moves.append(("drop", a))
                moves.append((pop, a, b))
            else:
                moves.append(("drop", b))
                moves.append((pop, b, a))

        ends(u[i] if i < ei else None, v[i] if i < ej else None, "L")
        ends(u[ei - 1] if ei > i else None, v[ej - 1] if ej > i else None, "R")
        out: list[tuple] = []
        for m in moves:
            if m not in out:
                out.append(m)
        return rank, out

    def compression_moves(self, word: str) -> list[tuple]:
        moves: list[tuple] = []
        seen: set[str] = set()
        for a, b in zip(word, word[1:]):
            if self.hash_c in (a, b) or a == b or b == self.inv_c[a]:
                continue
            if a + b in seen or self.inv_c[b] + self.inv_c[a] in seen:
                continue
            seen.add(a + b)
            moves.append(("cpair", a, b))
        run_letter, run_len = "", 0
        runs: set[tuple[str, int]] = set()
        for c in word + self.hash_c:
            if c == run_letter:
                run_len += 1
            else:
                if run_letter and run_letter != self.hash_c and run_len >= 2:
                    runs.add((min(run_letter, self.inv_c[run_letter]), run_len))
                run_letter, run_len = c, 1
        moves.extend(("cblock", a, m) for a, m in sorted(runs))
        return moves

    def apply_move(self, vid: int, word: str, move: tuple):
        kind = move[0]
        reverse: dict[str, Word] | None = None
        if kind == "pop_left":
            _, x, c = move
            xi = self.inv_c[x]
            new = word.translate({ord(x): c + x, ord(xi): xi + self.inv_c[c]})
            tag = f"pop:{self.coder.decode(x)[0]}->{' '.join(self.coder.decode(c + x))}"
        elif kind == "pop_right":
            _, x, c = move
            xi = self.inv_c[x]
            new = word.translate({ord(x): x + c, ord(xi): self.inv_c[c] + xi})
            tag = f"pop:{self.coder.decode(x)[0]}->{' '.join(self.coder.decode(x + c))}"
        elif kind == "drop":
            _, x = move
            new = word.translate({ord(x): "", ord(self.inv_c[x]): ""})
            tag = f"drop:{self.coder.decode(x)[0]}"
        elif kind == "cpair":
            _, a, b = move
            f, fi = self.fresh_letter(word)
            if not f:
                return None
            new = word.replace(a + b, f).replace(self.inv_c[b] + self.inv_c[a], fi)
            tag = (f"pair:{self.coder.decode(a)[0]}.{self.coder.decode(b)[0]}"
                   f"->{self.coder.decode(f)[0]}")
            reverse = {self.coder.decode(f)[0]: tuple(self.coder.decode(a + b)),
                       self.coder.decode(fi)[0]: tuple(self.coder.decode(self.inv_c[b] + self.inv_c[a]))}
        elif kind == "cblock":
            _, a, m = move
            f, fi = self.fresh_letter(word)
            if not f:
                return None
            ai = self.inv_c[a]
            new = _replace_exact_runs(word, a, m, f)
            new = _replace_exact_runs(new, ai, m, fi)
            tag = (f"block:{self.coder.decode(a)[0]}^{m}->{self.coder.decode(f)[0]}")
            reverse = {self.coder.decode(f)[0]: tuple(self.coder.decode(a * m)),
                       self.coder.decode(fi)[0]: tuple(self.coder.decode(ai * m))}
        else:
            raise WordEqError(f"unknown move {move!r}")
        if new == word or not self.reduced(new):
            return None
        dst = self.add_vertex(new)
        if dst is None:
            return None
        rid = None
        if reverse:
            rid = len(self.reverse_tables)
            self.reverse_tables.append(reverse)
        self.edges.append((vid, dst, tag, rid))
        return dst if dst == len(self.vertices) - 1 else None

    def run(self):
        stack = [0]
        expanded = [False]
        while stack:
            vid = stack.pop()
            if expanded[vid]:
                continue
            expanded[vid] = True
            word = self.vertices[vid]
            moves = self.menu_for(word)
            if moves is None:
                continue
            if word == _string_involution(word, self.inv_c) \
                    and not any(c in self.var_c for c in word):
                self.accepting.append(vid)
            for move in sorted(moves, key=repr):
                created = self.apply_move(vid, word, move)
                if created is not None:
                    stack.append(created)
                    while len(expanded) < len(self.vertices):
                        expanded.append(False)


def _string_involution(word: str, inv_c: Mapping[str, str]) -> str:
    return "".join(inv_c.get(c, c) for c in reversed(word))


def _replace_exact_runs(word: str, letter: str, m: int, fresh: str) -> str:
    out: list[str] = []
    i = 0
    n = len(word)
    while i < n:
        if word[i] == letter:
            j = i
            while j < n and word[j] == letter:
                j += 1
            if j - i == m:
                out.append(fresh)
            else:
                out.append(word[i:j])
            i = j
        else:
            out.append(word[i])
            i += 1
    return "".join(out)


def extract_solutions(graph: SolutionGraph) -> Edt0lSystem:
    """EDT0L system reading solutions off the reversed graph.

    Seeds are the original-variable slots of accepting vertices (still in
    compressed letters); reverse edges undo compressions on the way back to
    the initial vertex, and only fully expanded words over the base alphabet
    survive the terminal filter.
    """
    winit = graph.winit
    sigma = set(winit.alphabet) | {HASH}
    letters: set[str] = set(sigma) | {"@seed"}
    for table in graph.reverse_tables:
        for x, image in table.items():
            letters.add(x)
            letters.update(image)
    for v in graph.accepting:
        letters.update(x for x in graph.vertices[v] if x != HASH)
    builder = SystemBuilder(sigma, letters)
    states = {vid: builder.state() for vid in range(len(graph.vertices))}
    start = builder.state()
    n_vars = len(winit.variables)
    keep = len(winit.original_variables)
    for vid in graph.accepting:
        slots = _split_slots(graph.vertices[vid])[1:1 + n_vars]
        seed: list[str] = []
        for i in range(keep):
            if i:
                seed.append(HASH)
            seed.extend(slots[i])
        builder.edge(start, {"@seed": tuple(seed)}, states[vid])
    for src, dst, _tag, rid in graph.edges:
        table = graph.reverse_tables[rid] if rid is not None else None
        builder.edge(states[dst], table, states[src])
    return builder.finish(("@seed",), start, {states[graph.initial]})


@dataclass(frozen=True)
class SolveResult:
    system: Edt0lSystem
    graph: SolutionGraph
    complete: bool


def solve_free_group(eq: GroupEquation, generators: Sequence[str],
                     caps: Caps | None = None) -> SolveResult:
    """Full pipeline from a group equation to its solution language."""
    alphabet = []
    for g in generators:
        alphabet.append(g)
        alphabet.append(inverse_letter(g))
    tri = triangulate(eq)
    msys = to_monoid_system(tri, alphabet)
    winit = build_winit(msys)
    graph = build_solution_graph(winit, caps)
    return SolveResult(extract_solutions(graph), graph, graph.complete)


# ---------------------------------------------------------------------------
# Serialization

def graph_to_json(graph: SolutionGraph) -> str:
    doc = {
        "alphabet": list(graph.winit.alphabet),
        "variables": list(graph.winit.variables),
        "original_variables": list(graph.winit.original_variables),
        "vertices": [" ".join(w) for w in graph.vertices],
        "constraints": graph.constraints,
        "edges": [[src, dst, tag,
                   None if rid is None else
                   {x: list(img) for x, img in sorted(graph.reverse_tables[rid].items())}]
                  for src, dst, tag, rid in graph.edges],
        "accepting": graph.accepting,
        "complete": graph.complete,
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def graph_to_dot(graph: SolutionGraph, name: str = "solution_graph") -> str:
    lines = [f"digraph {name} {{"]
    for vid, word in enumerate(graph.vertices):
        shape = "doublecircle" if vid in set(graph.accepting) else "circle"
        lines.append(f'  {vid} [shape={shape}];')
    for src, dst, tag, _rid in sorted(graph.edges):
        lines.append(f'  {src} -> {dst} [label="{tag}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
