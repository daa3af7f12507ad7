"""Small reference systems used throughout the tests and the selftest."""

from __future__ import annotations

from .automata import Fsa
from .edt0l import Edt0lSystem, SystemBuilder
from .words import HASH, inverse_letter


def square_powers_system() -> Edt0lSystem:
    """Language {a^(n^2) : n > 0} over {a}.

    Seed ⊥; one loop doubles the growth bookkeeping: ⊥ -> tsa, then
    alternately s -> su and (t -> at, u -> uaa), and an exit erasing s,t,u.
    """
    b = SystemBuilder({"a"}, {"a", "bot", "s", "t", "u"})
    q0, q1, q2, q3 = (b.state() for _ in range(4))
    b.edge(q0, {"bot": ("t", "s", "a")}, q1)
    b.edge(q1, {"s": ("s", "u")}, q2)
    b.edge(q2, {"t": ("a", "t"), "u": ("u", "a", "a")}, q1)
    b.edge(q1, {"s": (), "t": (), "u": ()}, q3)
    return b.finish(("bot",), q0, {q3})


def mirrored_powers_system() -> Edt0lSystem:
    """Language {a^n # a^n : n in Z} over {a, a^-1, #}."""
    a, ai = "a", inverse_letter("a")
    b = SystemBuilder({a, ai, HASH}, {a, ai, HASH, "bot"})
    q0, q1, q2, q3 = (b.state() for _ in range(4))
    b.edge(q0, None, q1)
    b.edge(q0, None, q2)
    b.edge(q1, {"bot": ("bot", a)}, q1)
    b.edge(q2, {"bot": ("bot", ai)}, q2)
    erase = {"bot": ()}
    b.edge(q1, erase, q3)
    b.edge(q2, erase, q3)
    return b.finish(("bot", HASH, "bot"), q0, {q3})


def free_reduced_fsa(rank: int = 2) -> Fsa:
    """Acceptor of freely reduced words over rank standard generators."""
    names = ["a", "b", "c", "d"][:rank] if rank <= 4 else [f"x{i}" for i in range(rank)]
    letters = []
    for name in names:
        letters.append(name)
        letters.append(inverse_letter(name))
    # state 0 = empty word, state i+1 = last letter was letters[i]
    edges = set()
    for i, x in enumerate(letters):
        edges.add((0, x, i + 1))
        for j, y in enumerate(letters):
            if y != inverse_letter(x):
                edges.add((i + 1, y, j + 1))
    states = range(len(letters) + 1)
    return Fsa.make(states, letters, edges, 0, states)


def mirrored_words_system(rank: int = 2) -> Edt0lSystem:
    """Language {w # w : w freely reduced} over rank standard generators.

    The control is the freely-reduced-word acceptor with each letter x
    replaced by the table ⊥ -> x⊥, then an erasing exit.
    """
    acceptor = free_reduced_fsa(rank)
    letters = sorted(acceptor.alphabet)
    b = SystemBuilder(set(letters) | {HASH}, set(letters) | {HASH, "bot"})
    states = {s: b.state() for s in sorted(acceptor.states)}
    final = b.state()
    for src, x, dst in sorted(acceptor.edges, key=lambda e: (e[0], e[1] or "", e[2])):
        b.edge(states[src], {"bot": (x, "bot")}, states[dst])
    for s in sorted(acceptor.accepting):
        b.edge(states[s], {"bot": ()}, final)
    return b.finish(("bot", HASH, "bot"), states[acceptor.start], {final})
