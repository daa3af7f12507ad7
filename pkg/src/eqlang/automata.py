"""Finite-state automata over labelled edges, plus asynchronous n-variable FSAs.

Automata here are non-deterministic, allow epsilon edges everywhere, and are
immutable once built.  They serve both as word acceptors and as the rational
controls of EDT0L systems (with table ids as edge labels).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .words import Word, check_letter

Edge = tuple[int, "str | None", int]


class AutomatonError(ValueError):
    pass


@dataclass(frozen=True)
class Fsa:
    """Finite-state automaton; edge label None means epsilon."""

    states: frozenset[int]
    alphabet: frozenset[str]
    edges: frozenset[Edge]
    start: int
    accepting: frozenset[int]

    def __post_init__(self):
        if self.start not in self.states:
            raise AutomatonError(f"start state {self.start} not a state")
        if not self.accepting <= self.states:
            raise AutomatonError("accepting states must be states")
        for src, label, dst in self.edges:
            if src not in self.states or dst not in self.states:
                raise AutomatonError(f"edge ({src},{label},{dst}) leaves state set")
            if label is not None and label not in self.alphabet:
                raise AutomatonError(f"edge label {label!r} outside alphabet")

    @staticmethod
    def make(states: Iterable[int], alphabet: Iterable[str], edges: Iterable[Edge],
             start: int, accepting: Iterable[int]) -> "Fsa":
        return Fsa(frozenset(states), frozenset(alphabet), frozenset(edges),
                   start, frozenset(accepting))

    def out_edges(self, state: int) -> list[Edge]:
        return sorted((e for e in self.edges if e[0] == state),
                      key=lambda e: (e[1] is None, e[1] or "", e[2]))

    def relabel(self, offset: int) -> "Fsa":
        """Shift all state ids by a fixed offset."""
        return Fsa.make({s + offset for s in self.states}, self.alphabet,
                        {(s + offset, a, t + offset) for s, a, t in self.edges},
                        self.start + offset, {s + offset for s in self.accepting})


def _epsilon_closure(fsa: Fsa, states: set[int]) -> frozenset[int]:
    seen = set(states)
    stack = list(states)
    while stack:
        s = stack.pop()
        for src, label, dst in fsa.edges:
            if src == s and label is None and dst not in seen:
                seen.add(dst)
                stack.append(dst)
    return frozenset(seen)


def accepts(fsa: Fsa, word: Sequence[str]) -> bool:
    """True iff some start-to-accepting path spells the word."""
    for x in word:
        if x not in fsa.alphabet:
            raise AutomatonError(f"input letter {x!r} outside alphabet")
    current = _epsilon_closure(fsa, {fsa.start})
    for x in word:
        step = {dst for src, label, dst in fsa.edges if src in current and label == x}
        if not step:
            return False
        current = _epsilon_closure(fsa, step)
    return bool(current & fsa.accepting)


def intersect(a: Fsa, b: Fsa) -> Fsa:
    """Product automaton; epsilon edges advance one operand at a time."""
    if a.alphabet != b.alphabet:
        raise AutomatonError("intersect requires a shared alphabet")
    pairs = sorted((p, q) for p in sorted(a.states) for q in sorted(b.states))
    index = {pq: i for i, pq in enumerate(pairs)}
    edges: set[Edge] = set()
    for p, x, p2 in a.edges:
        if x is None:
            for q in b.states:
                edges.add((index[(p, q)], None, index[(p2, q)]))
        else:
            for q, y, q2 in b.edges:
                if y == x:
                    edges.add((index[(p, q)], x, index[(p2, q2)]))
    for q, y, q2 in b.edges:
        if y is None:
            for p in a.states:
                edges.add((index[(p, q)], None, index[(p, q2)]))
    accepting = {index[(p, q)] for p in a.accepting for q in b.accepting}
    return Fsa.make(range(len(pairs)), a.alphabet, edges,
                    index[(a.start, b.start)], accepting)


def enumerate_words(fsa: Fsa, max_len: int) -> list[Word]:
    """Accepted words of length <= max_len, by length then alphabet order.

    Breadth-first over words (not paths), so epsilon cycles are harmless.
    """
    order = sorted(fsa.alphabet)
    found: set[Word] = set()
    layer: dict[frozenset[int], set[Word]] = {_epsilon_closure(fsa, {fsa.start}): {()}}
    for length in range(max_len + 1):
        for states, wset in layer.items():
            if states & fsa.accepting:
                found.update(wset)
        if length == max_len:
            break
        nxt: dict[frozenset[int], set[Word]] = {}
        for states, wset in layer.items():
            for x in order:
                step = {dst for src, label, dst in fsa.edges
                        if src in states and label == x}
                if not step:
                    continue
                closed = _epsilon_closure(fsa, step)
                nxt.setdefault(closed, set()).update(w + (x,) for w in wset)
        layer = nxt
    return sorted(found, key=lambda w: (len(w), w))


# ---------------------------------------------------------------------------
# Asynchronous n-variable automata

TupleLabel = tuple["str | None", ...]


@dataclass(frozen=True)
class TupleFsa:
    """n-variable FSA: labels are n-tuples with at most one non-epsilon entry."""

    arity: int
    states: frozenset[int]
    alphabet: frozenset[str]
    edges: frozenset[tuple[int, TupleLabel, int]]
    start: int
    accepting: frozenset[int]

    def __post_init__(self):
        if self.arity < 1:
            raise AutomatonError("arity must be positive")
        if self.start not in self.states or not self.accepting <= self.states:
            raise AutomatonError("bad start/accepting states")
        for src, label, dst in self.edges:
            if len(label) != self.arity:
                raise AutomatonError(f"label {label} has wrong arity")
            filled = [x for x in label if x is not None]
            if len(filled) > 1:
                raise AutomatonError(f"label {label} has two non-epsilon entries")
            for x in filled:
                if x not in self.alphabet:
                    raise AutomatonError(f"label letter {x!r} outside alphabet")
            if src not in self.states or dst not in self.states:
                raise AutomatonError("edge endpoint outside state set")

    @staticmethod
    def make(arity: int, states: Iterable[int], alphabet: Iterable[str],
             edges: Iterable[tuple[int, TupleLabel, int]], start: int,
             accepting: Iterable[int]) -> "TupleFsa":
        return TupleFsa(arity, frozenset(states), frozenset(alphabet),
                        frozenset(edges), start, frozenset(accepting))


def tuple_accepts(m: TupleFsa, tup: Sequence[Sequence[str]]) -> bool:
    """True iff some accepting path spells the tuple coordinate-wise."""
    if len(tup) != m.arity:
        raise AutomatonError(f"expected {m.arity} words, got {len(tup)}")
    words = [tuple(w) for w in tup]
    start = (m.start,) + (0,) * m.arity
    seen = {start}
    stack = [start]
    while stack:
        state, *pos = stack.pop()
        if state in m.accepting and all(p == len(w) for p, w in zip(pos, words)):
            return True
        for src, label, dst in m.edges:
            if src != state:
                continue
            npos = list(pos)
            ok = True
            for i, x in enumerate(label):
                if x is None:
                    continue
                if npos[i] < len(words[i]) and words[i][npos[i]] == x:
                    npos[i] += 1
                else:
                    ok = False
                break
            if ok:
                nxt = (dst, *npos)
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return False


def tuple_enumerate(m: TupleFsa, max_total_len: int) -> list[tuple[Word, ...]]:
    """Accepted tuples whose total length is <= max_total_len, sorted."""
    found: set[tuple[Word, ...]] = set()
    frontier: set[tuple[int, tuple[Word, ...]]] = {(m.start, ((),) * m.arity)}
    seen = set(frontier)
    while frontier:
        nxt: set[tuple[int, tuple[Word, ...]]] = set()
        for state, parts in frontier:
            if state in m.accepting:
                found.add(parts)
            for src, label, dst in m.edges:
                if src != state:
                    continue
                new_parts = list(parts)
                total = sum(len(p) for p in parts)
                for i, x in enumerate(label):
                    if x is not None:
                        if total + 1 > max_total_len:
                            new_parts = None
                            break
                        new_parts[i] = new_parts[i] + (x,)
                if new_parts is None:
                    continue
                item = (dst, tuple(new_parts))
                if item not in seen:
                    seen.add(item)
                    nxt.add(item)
        frontier = nxt
    return sorted(found, key=lambda t: (sum(map(len, t)), t))


# ---------------------------------------------------------------------------
# Serialization

def fsa_to_json(fsa: Fsa) -> str:
    doc = {
        "accepting": sorted(fsa.accepting),
        "alphabet": sorted(fsa.alphabet),
        "edges": [list(e) for e in
                  sorted(fsa.edges, key=lambda e: (e[0], e[1] is None, e[1] or "", e[2]))],
        "start": fsa.start,
        "states": sorted(fsa.states),
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def fsa_from_json(text: str) -> Fsa:
    doc = json.loads(text)
    return Fsa.make(doc["states"], map(check_letter, doc["alphabet"]),
                    {(s, a, t) for s, a, t in doc["edges"]},
                    doc["start"], doc["accepting"])


def fsa_to_dot(fsa: Fsa, name: str = "fsa") -> str:
    lines = [f"digraph {name} {{"]
    lines.append(f'  __start [shape=point]; __start -> {fsa.start};')
    for s in sorted(fsa.states):
        shape = "doublecircle" if s in fsa.accepting else "circle"
        lines.append(f'  {s} [shape={shape}];')
    for src, label, dst in sorted(fsa.edges, key=lambda e: (e[0], e[1] or "", e[2])):
        text = label if label is not None else "ε"
        lines.append(f'  {src} -> {dst} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
