"""EDT0L systems: endomorphism tables driven by a rational control.

A system holds a terminal alphabet, an extended alphabet, a seed word, and a
finite automaton whose edge labels name endomorphism tables.  The accepted
language is the set of terminal words obtained by applying the tables along
accepted control paths to the seed.

Membership and language listing are bounded searches: tables may erase, so a
short word can need long intermediate forms.  Every result therefore carries
a completeness flag tied to an explicit budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .automata import Fsa, fsa_from_json, fsa_to_json
from .words import Word, check_letter

MEMBER_YES = "yes"
MEMBER_UNKNOWN = "no-within-budget"


class Edt0lError(ValueError):
    pass


@dataclass(frozen=True)
class EndoTable:
    """Total letter-to-word map, applied letter-wise as an endomorphism.

    Stored sparsely: `moved` holds only letters whose image differs from
    themselves; everything else in the domain is fixed.
    """

    domain: frozenset[str]
    moved: Mapping[str, Word]

    def __post_init__(self):
        for x, image in self.moved.items():
            if x not in self.domain:
                raise Edt0lError(f"table maps foreign letter {x!r}")
            for y in image:
                if y not in self.domain:
                    raise Edt0lError(f"image letter {y!r} outside domain")

    @staticmethod
    def make(domain: Iterable[str], assignments: Mapping[str, Sequence[str]]) -> "EndoTable":
        """Letters without an explicit assignment are fixed."""
        dom = frozenset(domain)
        moved = {x: tuple(w) for x, w in assignments.items() if tuple(w) != (x,)}
        return EndoTable(dom, moved)

    def image_of(self, letter: str) -> Word:
        if letter not in self.domain:
            raise Edt0lError(f"letter {letter!r} outside table domain")
        return self.moved.get(letter, (letter,))

    def key(self) -> tuple:
        return tuple(sorted(self.moved.items()))


def apply(table: EndoTable, word: Sequence[str]) -> Word:
    """Image of a word: concatenation of the letter images."""
    out: list[str] = []
    for x in word:
        out.extend(table.image_of(x))
    return tuple(out)


def identity_table(domain: Iterable[str]) -> EndoTable:
    return EndoTable.make(domain, {})


@dataclass(frozen=True)
class Edt0lSystem:
    """(terminals, extended alphabet, seed, rational control over tables)."""

    sigma: frozenset[str]
    extended: frozenset[str]
    seed: Word
    control: Fsa
    tables: Mapping[str, EndoTable]

    def __post_init__(self):
        for x in self.sigma | self.extended:
            check_letter(x)
        if not self.sigma <= self.extended:
            raise Edt0lError("terminal alphabet must lie inside the extended one")
        for x in self.seed:
            if x not in self.extended:
                raise Edt0lError(f"seed letter {x!r} outside extended alphabet")
        for label in {e[1] for e in self.control.edges}:
            if label is not None and label not in self.tables:
                raise Edt0lError(f"control edge names unknown table {label!r}")
        for tid, table in self.tables.items():
            if table.domain != self.extended:
                raise Edt0lError(f"table {tid!r} domain differs from extended alphabet")


@dataclass(frozen=True)
class Budget:
    """Bounds on the derivation search, not on the language itself."""

    max_form_len: int = 10_000
    max_visited: int = 200_000


@dataclass(frozen=True)
class EnumerationResult:
    words: tuple[Word, ...]
    complete: bool

    def as_set(self) -> set[Word]:
        return set(self.words)


def _sorted_out_edges(system: Edt0lSystem) -> dict[int, list[tuple[str | None, int]]]:
    by_state: dict[int, list[tuple[str | None, int]]] = {}
    for src, label, dst in system.control.edges:
        by_state.setdefault(src, []).append((label, dst))
    for lst in by_state.values():
        lst.sort(key=lambda e: (e[0] is None, e[0] or "", e[1]))
    return by_state


class _Runner:
    """Char-coded evaluator for one system; forms are plain strings."""

    def __init__(self, system: Edt0lSystem):
        self.system = system
        letters = sorted(system.extended)
        self.char = {x: chr(0xE000 + i) for i, x in enumerate(letters)}
        self.letter = {ch: x for x, ch in self.char.items()}
        self.terminal_chars = {self.char[x] for x in system.sigma}
        self.trans: dict[str | None, dict[int, str]] = {None: {}}
        for tid, table in system.tables.items():
            self.trans[tid] = {
                ord(self.char[x]): "".join(self.char[y] for y in image)
                for x, image in table.moved.items()
            }
        self.out_edges = _sorted_out_edges(system)
        self.min_len = self._min_lengths()

    def _min_lengths(self) -> dict[str, float]:
        """Per letter, a lower bound on the length of any terminal word it can
        still contribute, minimizing freely over the table pool.  Used only to
        prune forms that provably exceed the requested word length."""
        bound = {x: (1.0 if x in self.system.sigma else float("inf"))
                 for x in self.system.extended}
        changed = True
        while changed:
            changed = False
            for table in self.system.tables.values():
                for x, image in table.moved.items():
                    value = sum(bound[y] for y in image) if image else 0.0
                    if value < bound[x]:
                        bound[x] = value
                        changed = True
        return {self.char[x]: v for x, v in bound.items()}

    def lower_bound(self, form: str) -> float:
        ml = self.min_len
        return sum(ml[ch] for ch in form)

    def encode(self, word: Sequence[str]) -> str:
        return "".join(self.char[x] for x in word)

    def decode(self, packed: str) -> Word:
        return tuple(self.letter[ch] for ch in packed)

    def is_terminal(self, packed: str) -> bool:
        return all(ch in self.terminal_chars for ch in packed)


def _search(system: Edt0lSystem, budget: Budget, max_word_len: int,
            target: str | None) -> tuple[set[str], bool, _Runner]:
    """Shared bounded BFS over (control state, sentential form) pairs.

    Forms whose length lower bound already exceeds max_word_len are dropped
    without affecting completeness; budget prunes do affect it.
    """
    runner = _Runner(system)
    start = (system.control.start, runner.encode(system.seed))
    seen: set[tuple[int, str]] = set()
    frontier: list[tuple[int, str]] = []
    complete = True
    hits: set[str] = set()
    if runner.lower_bound(start[1]) <= max_word_len:
        if len(start[1]) <= budget.max_form_len:
            seen.add(start)
            frontier.append(start)
        else:
            complete = False
    while frontier:
        nxt: list[tuple[int, str]] = []
        for state, form in frontier:
            if state in system.control.accepting and runner.is_terminal(form):
                if len(form) <= max_word_len:
                    if target is None:
                        hits.add(form)
                    elif form == target:
                        return {form}, True, runner
            for label, dst in runner.out_edges.get(state, ()):
                new_form = form.translate(runner.trans[label]) if label is not None else form
                item = (dst, new_form)
                if item in seen:
                    continue
                if runner.lower_bound(new_form) > max_word_len:
                    continue
                if len(new_form) > budget.max_form_len or len(seen) >= budget.max_visited:
                    complete = False
                    continue
                seen.add(item)
                nxt.append(item)
        frontier = nxt
    return hits, complete, runner


def enumerate_language(system: Edt0lSystem, max_len: int,
                       budget: Budget | None = None) -> EnumerationResult:
    """Accepted words of length <= max_len reachable within the budget.

    The result is flagged complete when the search closed without pruning,
    so the listing is then exactly the language cut at max_len.
    """
    if max_len < 0:
        raise Edt0lError("max_len must be non-negative")
    budget = budget or Budget()
    hits, complete, runner = _search(system, budget, max_len, None)
    words = sorted((runner.decode(h) for h in hits), key=lambda w: (len(w), w))
    return EnumerationResult(tuple(words), complete)


def derives_empty_only(system: Edt0lSystem, budget: Budget | None = None) -> bool:
    """True when the bounded search proves the language empty at length 0."""
    result = enumerate_language(system, 0, budget)
    return result.complete and not result.words


def member_bounded(system: Edt0lSystem, word: Sequence[str],
                   budget: Budget | None = None) -> str:
    """'yes' is definitive; 'no-within-budget' only exhausts the search."""
    for x in word:
        if x not in system.sigma:
            raise Edt0lError(f"word letter {x!r} outside terminal alphabet")
    budget = budget or Budget()
    runner = _Runner(system)
    target = runner.encode(word)
    hits, _complete, _ = _search(system, budget, len(target), target)
    return MEMBER_YES if hits else MEMBER_UNKNOWN


# ---------------------------------------------------------------------------
# Construction helper

class SystemBuilder:
    """Accumulates states, edges and a deduplicated table pool."""

    def __init__(self, sigma: Iterable[str], extended: Iterable[str]):
        self.sigma = frozenset(sigma)
        self.extended = frozenset(extended)
        self._tables: dict[tuple, str] = {}
        self.tables: dict[str, EndoTable] = {}
        self.edges: set[tuple[int, str | None, int]] = set()
        self.states: set[int] = set()
        self._next_state = 0

    def state(self) -> int:
        s = self._next_state
        self._next_state += 1
        self.states.add(s)
        return s

    def table_id(self, assignments: Mapping[str, Sequence[str]]) -> str:
        table = EndoTable.make(self.extended, assignments)
        key = table.key()
        tid = self._tables.get(key)
        if tid is None:
            tid = f"t{len(self._tables)}"
            self._tables[key] = tid
            self.tables[tid] = table
        return tid

    def edge(self, src: int, assignments: Mapping[str, Sequence[str]] | None, dst: int):
        label = None if assignments is None else self.table_id(assignments)
        self.edges.add((src, label, dst))

    def finish(self, seed: Sequence[str], start: int, accepting: Iterable[int]) -> Edt0lSystem:
        control = Fsa.make(self.states, set(self.tables), self.edges, start, accepting)
        return Edt0lSystem(self.sigma, self.extended, tuple(seed), control,
                           dict(sorted(self.tables.items())))


# ---------------------------------------------------------------------------
# Serialization

def system_to_json(system: Edt0lSystem) -> str:
    doc = {
        "sigma": sorted(system.sigma),
        "extended": sorted(system.extended),
        "seed": list(system.seed),
        "tables": {
            tid: {x: list(w) for x, w in sorted(table.moved.items())}
            for tid, table in sorted(system.tables.items())
        },
        "control": json.loads(fsa_to_json(system.control)),
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def system_from_json(text: str) -> Edt0lSystem:
    doc = json.loads(text)
    extended = [check_letter(x) for x in doc["extended"]]
    tables = {tid: EndoTable.make(extended, {x: tuple(w) for x, w in imgs.items()})
              for tid, imgs in doc["tables"].items()}
    control = fsa_from_json(json.dumps(doc["control"]))
    return Edt0lSystem(frozenset(doc["sigma"]), frozenset(extended),
                       tuple(doc["seed"]), control, tables)


def system_to_dot(system: Edt0lSystem, name: str = "edt0l") -> str:
    lines = [f"digraph {name} {{"]
    lines.append("  // legend")
    for tid, table in sorted(system.tables.items()):
        moved = dict(sorted(table.moved.items()))
        body = "; ".join(f"{x} -> {' '.join(w) if w else 'ε'}" for x, w in moved.items())
        lines.append(f"  // {tid}: {body if body else 'identity'}")
    lines.append(f'  __start [shape=point]; __start -> {system.control.start};')
    for s in sorted(system.control.states):
        shape = "doublecircle" if s in system.control.accepting else "circle"
        lines.append(f'  {s} [shape={shape}];')
    for src, label, dst in sorted(system.control.edges,
                                  key=lambda e: (e[0], e[1] or "", e[2])):
        lines.append(f'  {src} -> {dst} [label="{label if label else "ε"}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
