"""Closure constructions on EDT0L systems.

Union, concatenation, Kleene star and homomorphic image work by tagging the
operand alphabets apart, running the operand controls in sequence, and
untagging terminals at the end; stray non-terminals are sent to a poison
letter that no table removes, so unfinished derivations can never surface.

Intersection with a regular language and hash-separation both work by
annotating letters with guessed bookkeeping (automaton state pairs, or hash
intervals and slots) whose wrong guesses die before reaching a terminal
word.  A guessed annotation of one letter is independent of every other
letter: the per-edge gadget applies one original table as a chain of
micro-steps, one reachable letter at a time.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Sequence

from .automata import Fsa, TupleFsa
from .edt0l import Budget, Edt0lError, Edt0lSystem, SystemBuilder, enumerate_language
from .words import HASH, Word

POISON = "@poison"
SEED = "@seed"


def _tag(ns: str, letter: str) -> str:
    return f"{ns}|{letter}"


def _tag_word(ns: str, word: Sequence[str]) -> Word:
    return tuple(_tag(ns, x) for x in word)


class _Embedding:
    """One operand's control re-homed into a builder under a namespace."""

    def __init__(self, b: SystemBuilder, system: Edt0lSystem, ns: str):
        self.system = system
        self.ns = ns
        self.states = {s: b.state() for s in sorted(system.control.states)}
        edges = sorted(system.control.edges,
                       key=lambda e: (e[0], e[1] is None, e[1] or "", e[2]))
        for src, label, dst in edges:
            if label is None:
                b.edge(self.states[src], None, self.states[dst])
            else:
                table = system.tables[label]
                assignments = {_tag(ns, x): _tag_word(ns, image)
                               for x, image in table.moved.items()}
                b.edge(self.states[src], assignments, self.states[dst])
        self.start = self.states[system.control.start]
        self.accepting = [self.states[s] for s in sorted(system.control.accepting)]

    def untag(self) -> dict[str, Word]:
        """Tagged terminals become plain; tagged leftovers become poison."""
        out: dict[str, Word] = {}
        for x in self.system.extended:
            out[_tag(self.ns, x)] = (x,) if x in self.system.sigma else (POISON,)
        return out


def _tagged_letters(system: Edt0lSystem, ns: str) -> set[str]:
    return {_tag(ns, x) for x in system.extended}


def union(a: Edt0lSystem, b: Edt0lSystem) -> Edt0lSystem:
    sigma = a.sigma | b.sigma
    extended = sigma | _tagged_letters(a, "u0") | _tagged_letters(b, "u1") | {SEED, POISON}
    builder = SystemBuilder(sigma, extended)
    start, final = builder.state(), builder.state()
    for ns, system in (("u0", a), ("u1", b)):
        emb = _Embedding(builder, system, ns)
        builder.edge(start, {SEED: _tag_word(ns, system.seed)}, emb.start)
        for q in emb.accepting:
            builder.edge(q, emb.untag(), final)
    return builder.finish((SEED,), start, {final})


def concat(a: Edt0lSystem, b: Edt0lSystem) -> Edt0lSystem:
    sigma = a.sigma | b.sigma
    extended = sigma | _tagged_letters(a, "c0") | _tagged_letters(b, "c1") | {POISON}
    builder = SystemBuilder(sigma, extended)
    emb_a = _Embedding(builder, a, "c0")
    emb_b = _Embedding(builder, b, "c1")
    final = builder.state()
    for q in emb_a.accepting:
        builder.edge(q, emb_a.untag(), emb_b.start)
    for q in emb_b.accepting:
        builder.edge(q, emb_b.untag(), final)
    seed = _tag_word("c0", a.seed) + _tag_word("c1", b.seed)
    return builder.finish(seed, emb_a.start, {final})


def star(a: Edt0lSystem) -> Edt0lSystem:
    extended = a.sigma | _tagged_letters(a, "s0") | {SEED, POISON}
    builder = SystemBuilder(a.sigma, extended)
    hub, final = builder.state(), builder.state()
    emb = _Embedding(builder, a, "s0")
    builder.edge(hub, {SEED: _tag_word("s0", a.seed) + (SEED,)}, emb.start)
    for q in emb.accepting:
        builder.edge(q, emb.untag(), hub)
    builder.edge(hub, {SEED: ()}, final)
    return builder.finish((SEED,), hub, {final})


def hom_image(a: Edt0lSystem, h: Mapping[str, Sequence[str]]) -> Edt0lSystem:
    """Image under the free-monoid homomorphism extending h on terminals."""
    missing = a.sigma - set(h)
    if missing:
        raise Edt0lError(f"homomorphism not defined on {sorted(missing)}")
    sigma = {y for x in sorted(a.sigma) for y in h[x]}
    extended = sigma | _tagged_letters(a, "h0") | {POISON}
    builder = SystemBuilder(sigma, extended)
    emb = _Embedding(builder, a, "h0")
    final = builder.state()
    project = {_tag("h0", x): (tuple(h[x]) if x in a.sigma else (POISON,))
               for x in a.extended}
    for q in emb.accepting:
        builder.edge(q, project, final)
    return builder.finish(_tag_word("h0", a.seed), emb.start, {final})


# ---------------------------------------------------------------------------
# Determinization (internal; used by the annotation constructions)

def _determinize(fsa: Fsa) -> tuple[int, dict[tuple[int, str], int], int, frozenset[int]]:
    """Subset construction; returns (state count, total delta, start, accepting)."""

    def closure(states: frozenset[int]) -> frozenset[int]:
        seen = set(states)
        stack = list(states)
        while stack:
            s = stack.pop()
            for src, label, dst in fsa.edges:
                if src == s and label is None and dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return frozenset(seen)

    order = sorted(fsa.alphabet)
    start = closure(frozenset({fsa.start}))
    index: dict[frozenset[int], int] = {start: 0}
    queue = [start]
    delta: dict[tuple[int, str], int] = {}
    while queue:
        current = queue.pop(0)
        for x in order:
            step = closure(frozenset(
                dst for src, label, dst in fsa.edges if src in current and label == x))
            if step not in index:
                index[step] = len(index)
                queue.append(step)
            delta[(index[current], x)] = index[step]
    accepting = frozenset(i for subset, i in index.items() if subset & fsa.accepting)
    return len(index), delta, 0, accepting


# ---------------------------------------------------------------------------
# Intersection with a regular language

def intersect_regular(a: Edt0lSystem, r: Fsa) -> Edt0lSystem:
    """System for L(a) ∩ L(r).

    Every extended letter is annotated with a pair (p, q) of states of the
    determinized acceptor, meaning "the terminal word this letter derives
    moves p to q".  Tables lift to per-letter chains of state guesses; a
    terminal letter keeps its annotation honest at the final projection and
    wrong guesses poison out.
    """
    if r.alphabet != a.sigma:
        raise Edt0lError("regular operand must be over the system's terminal alphabet")
    nstates, delta, dstart, daccept = _determinize(r)
    states = range(nstates)

    def ann(x: str, p: int, q: int) -> str:
        return f"r{p},{q}|{x}"

    def chains(p: int, q: int, length: int) -> list[tuple[int, ...]]:
        if length == 0:
            return [(p,)] if p == q else []
        out = []
        for mids in itertools.product(states, repeat=length - 1):
            out.append((p, *mids, q))
        return out

    # closure over annotated letters actually reachable from some seed guess
    table_items = sorted(a.tables.items())
    reachable: set[tuple[str, int, int]] = set()
    queue: list[tuple[str, int, int]] = []
    seed_variants: list[Word] = []
    for f in sorted(daccept):
        for chain in chains(dstart, f, len(a.seed)):
            seed_variants.append(tuple(
                ann(x, chain[i], chain[i + 1]) for i, x in enumerate(a.seed)))
            for i, x in enumerate(a.seed):
                item = (x, chain[i], chain[i + 1])
                if item not in reachable:
                    reachable.add(item)
                    queue.append(item)
    splits: dict[tuple[str, str, int, int], list[Word]] = {}
    while queue:
        x, p, q = queue.pop()
        for tid, table in table_items:
            image = table.image_of(x)
            variants: list[Word] = []
            for chain in chains(p, q, len(image)):
                variants.append(tuple(
                    ann(y, chain[i], chain[i + 1]) for i, y in enumerate(image)))
                for i, y in enumerate(image):
                    item = (y, chain[i], chain[i + 1])
                    if item not in reachable:
                        reachable.add(item)
                        queue.append(item)
            splits[(tid, x, p, q)] = variants

    letters = sorted(ann(x, p, q) for x, p, q in reachable)
    primed = {x: f"'{x}" for x in letters}
    extended = a.sigma | set(letters) | set(primed.values()) | {SEED, POISON}
    builder = SystemBuilder(a.sigma, extended)
    control_states = {s: builder.state() for s in sorted(a.control.states)}
    start, final = builder.state(), builder.state()

    for variant in sorted(seed_variants):
        builder.edge(start, {SEED: variant}, control_states[a.control.start])

    unprime = {pr: (x,) for x, pr in primed.items()}
    order = sorted(reachable)
    for src, label, dst in sorted(a.control.edges,
                                  key=lambda e: (e[0], e[1] is None, e[1] or "", e[2])):
        if label is None:
            builder.edge(control_states[src], None, control_states[dst])
            continue
        here = control_states[src]
        for item in order:
            x, p, q = item
            nxt = builder.state()
            variants = splits.get((label, x, p, q), [])
            if variants:
                for image in sorted(variants):
                    builder.edge(here, {ann(x, p, q): tuple(primed[y] for y in image)}, nxt)
            else:
                builder.edge(here, {ann(x, p, q): (POISON,)}, nxt)
            here = nxt
        builder.edge(here, unprime, control_states[dst])

    project = {}
    for x, p, q in order:
        ok = x in a.sigma and delta[(p, x)] == q
        project[ann(x, p, q)] = (x,) if ok else (POISON,)
    project[SEED] = (POISON,)
    for s in sorted(a.control.accepting):
        builder.edge(control_states[s], project, final)
    return builder.finish((SEED,), start, {final})


# ---------------------------------------------------------------------------
# Hash separation and parallel merge

def hash_count(word: Sequence[str]) -> int:
    return sum(1 for x in word if x == HASH)


def is_separated(system: Edt0lSystem) -> bool:
    """Start word carries the hashes; no table creates, moves or erases one."""
    for table in system.tables.values():
        if HASH in table.domain and table.image_of(HASH) != (HASH,):
            return False
        for x, image in table.moved.items():
            if x != HASH and HASH in image:
                return False
    return True


def to_separated(a: Edt0lSystem, n: int, audit_len: int = 10,
                 budget: Budget | None = None) -> Edt0lSystem:
    """Equivalent separated system, for a language whose words all carry
    exactly n hashes.

    Letters are annotated with the hash interval their subtree spans and
    split into one copy per separator slot; the hashes themselves move into
    the start word.  The audit enumerates the operand up to audit_len and
    rejects words with a different hash count.
    """
    if HASH not in a.sigma and n > 0:
        raise Edt0lError("operand terminal alphabet has no hash letter")
    probe = enumerate_language(a, audit_len, budget or Budget())
    bad = [w for w in probe.words if hash_count(w) != n]
    if bad:
        raise Edt0lError(
            f"hash-count audit failed: {len(bad)} word(s) with count != {n}, "
            f"first {bad[0]!r}")

    def ann(x: str, i: int, j: int, s: int) -> str:
        return f"s{i},{j},{s}|{x}"

    def interval_chains(i: int, j: int, image: Word) -> list[tuple[int, ...]]:
        """Monotone hash-interval assignments along an image; a literal hash
        consumes exactly one step."""
        chains: list[tuple[int, ...]] = [(i,)]
        for y in image:
            grown: list[tuple[int, ...]] = []
            for c in chains:
                last = c[-1]
                if y == HASH:
                    if last + 1 <= j:
                        grown.append(c + (last + 1,))
                else:
                    for nxt in range(last, j + 1):
                        grown.append(c + (nxt,))
            chains = grown
        return [c for c in chains if c[-1] == j]

    unresolved = [f"u{t}@{s}" for t in range(len(a.seed)) for s in range(n + 1)]

    reachable: set[tuple[str, int, int, int]] = set()
    queue: list[tuple[str, int, int, int]] = []

    def reach(item: tuple[str, int, int, int]) -> str:
        if item not in reachable:
            reachable.add(item)
            queue.append(item)
        return ann(*item)

    def slot_image(image: Word, chain: tuple[int, ...], s: int) -> Word:
        out = []
        for t, y in enumerate(image):
            lo, hi = chain[t], chain[t + 1]
            if y != HASH and lo <= s <= hi:
                out.append(reach((y, lo, hi, s)))
        return tuple(out)

    # resolver tables: one per interval chain of the seed, assigning every
    # slot copy its piece of the seed
    resolver_tables: list[dict[str, Word]] = []
    for chain in interval_chains(0, n, tuple(a.seed)):
        assignment: dict[str, Word] = {}
        for t, x in enumerate(a.seed):
            lo, hi = chain[t], chain[t + 1]
            for s in range(n + 1):
                if x == HASH or not (lo <= s <= hi):
                    assignment[f"u{t}@{s}"] = ()
                else:
                    assignment[f"u{t}@{s}"] = (reach((x, lo, hi, s)),)
        resolver_tables.append(assignment)

    table_items = sorted(a.tables.items())
    splits: dict[tuple[str, str, int, int, int], list[Word]] = {}
    while queue:
        x, i, j, s = queue.pop()
        for tid, table in table_items:
            image = table.image_of(x)
            variants = [slot_image(image, chain, s)
                        for chain in interval_chains(i, j, image)]
            splits[(tid, x, i, j, s)] = variants

    letters = sorted(ann(*item) for item in reachable)
    primed = {x: f"'{x}" for x in letters}
    extended = (a.sigma | set(letters) | set(primed.values())
                | set(unresolved) | {POISON, HASH})
    builder = SystemBuilder(a.sigma, extended)
    control_states = {s: builder.state() for s in sorted(a.control.states)}
    start, final = builder.state(), builder.state()

    for assignment in resolver_tables:
        builder.edge(start, assignment, control_states[a.control.start])

    unprime = {pr: (x,) for x, pr in primed.items()}
    order = sorted(reachable)
    for src, label, dst in sorted(a.control.edges,
                                  key=lambda e: (e[0], e[1] is None, e[1] or "", e[2])):
        if label is None:
            builder.edge(control_states[src], None, control_states[dst])
            continue
        here = control_states[src]
        for item in order:
            x, i, j, s = item
            nxt = builder.state()
            variants = splits.get((label, x, i, j, s), [])
            if variants:
                for image in sorted(variants):
                    builder.edge(here, {ann(x, i, j, s): tuple(primed[y] for y in image)},
                                 nxt)
            else:
                builder.edge(here, {ann(x, i, j, s): (POISON,)}, nxt)
            here = nxt
        builder.edge(here, unprime, control_states[dst])

    project = {}
    for x, i, j, s in order:
        ok = x in a.sigma and x != HASH and i == j == s
        project[ann(x, i, j, s)] = (x,) if ok else (POISON,)
    for s in sorted(a.control.accepting):
        builder.edge(control_states[s], project, final)

    seed = []
    for s in range(n + 1):
        if s:
            seed.append(HASH)
        seed.extend(f"u{t}@{s}" for t in range(len(a.seed)))
    return builder.finish(tuple(seed), start, {final})


def merge_parallel(a: Edt0lSystem, b: Edt0lSystem) -> Edt0lSystem:
    """Slot-wise concatenation {u0 v0 # ... # un vn} of two separated systems."""
    if not is_separated(a) or not is_separated(b):
        raise Edt0lError("merge_parallel requires separated operands")
    n = hash_count(a.seed)
    if hash_count(b.seed) != n:
        raise Edt0lError(
            f"hash-count mismatch: {n} vs {hash_count(b.seed)}")
    sigma = a.sigma | b.sigma | ({HASH} if n else set())
    extended = sigma | _tagged_letters(a, "m0") | _tagged_letters(b, "m1") | {POISON}
    builder = SystemBuilder(sigma, extended)
    emb_a = _Embedding(builder, a, "m0")
    emb_b = _Embedding(builder, b, "m1")
    final = builder.state()
    for q in emb_a.accepting:
        builder.edge(q, None, emb_b.start)
    untag = emb_a.untag() | emb_b.untag()
    untag[_tag("m0", HASH)] = ()
    untag[_tag("m1", HASH)] = ()
    for q in emb_b.accepting:
        builder.edge(q, untag, final)

    def segments(word: Word, ns: str) -> list[Word]:
        parts: list[Word] = []
        current: list[str] = []
        for x in word:
            if x == HASH:
                parts.append(tuple(current))
                current = []
            else:
                current.append(_tag(ns, x))
        parts.append(tuple(current))
        return parts

    seg_a = segments(a.seed, "m0")
    seg_b = segments(b.seed, "m1")
    seed: list[str] = []
    for s in range(n + 1):
        if s:
            seed.append(HASH)
        seed.extend(seg_a[s])
        seed.extend(seg_b[s])
    return builder.finish(tuple(seed), emb_a.start, {final})


def tuple_to_edt0l(m: TupleFsa, hash_positions: Iterable[int]) -> Edt0lSystem:
    """Image of an n-variable FSA language under the hash-inserting map.

    hash_positions selects gaps (1..n-1) that receive a separator; the i-th
    coordinate accumulates at a placeholder letter that an exit table erases.
    """
    gaps = set(hash_positions)
    if not gaps <= set(range(1, m.arity)):
        raise Edt0lError(f"hash positions must lie in 1..{m.arity - 1}")
    anchors = [f"@w{i}" for i in range(m.arity)]
    sigma = set(m.alphabet) | ({HASH} if gaps else set())
    extended = sigma | set(anchors) | {HASH}
    builder = SystemBuilder(sigma, extended)
    states = {s: builder.state() for s in sorted(m.states)}
    final = builder.state()
    for src, label, dst in sorted(m.edges, key=lambda e: (e[0], tuple(x or "" for x in e[1]), e[2])):
        assignment: dict[str, Word] = {}
        for i, x in enumerate(label):
            if x is not None:
                assignment[anchors[i]] = (x, anchors[i])
        builder.edge(states[src], assignment or None, states[dst])
    erase = {anchor: () for anchor in anchors}
    for s in sorted(m.accepting):
        builder.edge(states[s], erase, final)
    seed: list[str] = []
    for i in range(m.arity):
        if i in gaps:
            seed.append(HASH)
        seed.append(anchors[i])
    return builder.finish(tuple(seed), states[m.start], {final})
