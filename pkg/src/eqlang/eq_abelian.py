"""Equations in free abelian groups: abelianization, integer lattice
solving, and emission of the solution language as an EDT0L system.

Solution sets are affine lattices p + L.  Turning them into words in the
standard normal form a1^e1 ... ak^ek needs sign-uniform letter blocks, so
each construction first splits the lattice by sign orthant and rewrites the
orthant piece as (minimal points) + N-spans of a Hilbert basis.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

from .automata import TupleFsa
from .edt0l import Edt0lSystem, SystemBuilder
from .groups import ZkContext, _default_names
from .words import HASH, Word, power

Vec = tuple[int, ...]


@dataclass(frozen=True)
class LinearSystem:
    """Integer system A x = b; for rank k each input equation owns k rows."""

    matrix: tuple[Vec, ...]
    rhs: Vec

    def __post_init__(self):
        widths = {len(row) for row in self.matrix}
        if len(widths) > 1 or len(self.matrix) != len(self.rhs):
            raise ValueError("inconsistent system dimensions")

    @property
    def unknowns(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0


@dataclass(frozen=True)
class LatticeCoset:
    """particular + integer span of basis; basis rows independent over Q."""

    particular: Vec
    basis: tuple[Vec, ...]


def abelianize(eqs: Sequence[Sequence[str]], k: int,
               variables: Sequence[str] | None = None,
               generator_names: Sequence[str] | None = None) -> tuple[LinearSystem, tuple[str, ...]]:
    """Exponent-sum image of word equations over rank-k abelian generators.

    Any letter whose base is not a generator counts as a variable; the
    detected variables are returned alongside the system.  Unknown order is
    variable-major, generator-minor.
    """
    ctx = ZkContext(k, generator_names)
    gens = set(ctx.generators)
    found: list[str] = [] if variables is None else list(variables)
    words = [tuple(w) for w in eqs]
    for word in words:
        for x in word:
            base = x[:-3] if x.endswith("^-1") else x
            if base in gens:
                continue
            if variables is None and base not in found:
                found.append(base)
            elif base not in found:
                raise ValueError(f"letter {x!r} is neither generator nor variable")
    rows: list[Vec] = []
    rhs: list[int] = []
    var_index = {v: j for j, v in enumerate(found)}
    for word in words:
        var_sum = [0] * len(found)
        const = [0] * k
        for x in word:
            base, sign = (x[:-3], -1) if x.endswith("^-1") else (x, 1)
            if base in gens:
                const[ctx.generators.index(base)] += sign
            else:
                var_sum[var_index[base]] += sign
        for i in range(k):
            row = [0] * (len(found) * k)
            for j in range(len(found)):
                row[j * k + i] = var_sum[j]
            rows.append(tuple(row))
            rhs.append(-const[i])
    return LinearSystem(tuple(rows), tuple(rhs)), tuple(found)


# ---------------------------------------------------------------------------
# Exact integer linear algebra

def _column_hnf(matrix: list[list[int]]) -> tuple[list[list[int]], list[list[int]], list[tuple[int, int]]]:
    """Column echelon form H = A U with U unimodular; returns H, U, pivots."""
    m = len(matrix)
    n = len(matrix[0]) if m else 0
    H = [list(row) for row in matrix]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap(i: int, j: int):
        for row in H:
            row[i], row[j] = row[j], row[i]
        for row in U:
            row[i], row[j] = row[j], row[i]

    def add_multiple(i: int, j: int, q: int):
        # column i -= q * column j
        for row in H:
            row[i] -= q * row[j]
        for row in U:
            row[i] -= q * row[j]

    pivots: list[tuple[int, int]] = []
    c = 0
    for r in range(m):
        if c >= n:
            break
        while True:
            nonzero = [j for j in range(c, n) if H[r][j] != 0]
            if not nonzero:
                break
            jmin = min(nonzero, key=lambda j: (abs(H[r][j]), j))
            if jmin != c:
                swap(c, jmin)
            finished = True
            for j in range(c + 1, n):
                if H[r][j] != 0:
                    add_multiple(j, c, H[r][j] // H[r][c])
                    if H[r][j] != 0:
                        finished = False
            if finished:
                break
        if c < n and H[r][c] != 0:
            if H[r][c] < 0:
                add_multiple(c, c, 2)  # negate column
            pivots.append((r, c))
            c += 1
    return H, U, pivots


def solve_lattice(system: LinearSystem) -> LatticeCoset | None:
    """Exact integer solution set of A x = b, or None when empty."""
    m = len(system.matrix)
    n = system.unknowns
    if m == 0:
        return LatticeCoset((0,) * n, tuple(_unit(n, i) for i in range(n)))
    H, U, pivots = _column_hnf([list(r) for r in system.matrix])
    y = [0] * n
    residual = list(system.rhs)
    for r, c in pivots:
        if residual[r] % H[r][c] != 0:
            return None
        y[c] = residual[r] // H[r][c]
        for i in range(m):
            residual[i] -= y[c] * H[i][c]
    if any(residual):
        return None
    particular = tuple(sum(U[i][j] * y[j] for j in range(n)) for i in range(n))
    free = [c for c in range(len(pivots), n)]
    basis = tuple(tuple(U[i][c] for i in range(n)) for c in free)
    return LatticeCoset(particular, basis)


def _unit(n: int, i: int) -> Vec:
    return tuple(int(j == i) for j in range(n))


def _row_hnf(rows: Sequence[Vec]) -> tuple[Vec, ...]:
    """Canonical row form of the lattice spanned by rows (for equality tests)."""
    if not rows:
        return ()
    work = [list(r) for r in rows if any(r)]
    n = len(rows[0])
    out: list[list[int]] = []
    col = 0
    while work and col < n:
        nonzero = [r for r in work if r[col] != 0]
        if not nonzero:
            col += 1
            continue
        while True:
            nonzero.sort(key=lambda r: abs(r[col]))
            pivot = nonzero[0]
            done = True
            for r in nonzero[1:]:
                q = r[col] // pivot[col]
                for i in range(n):
                    r[i] -= q * pivot[i]
                if r[col] != 0:
                    done = False
            nonzero = [r for r in nonzero if r[col] != 0]
            if done or len(nonzero) <= 1:
                break
        pivot = nonzero[0]
        if pivot[col] < 0:
            for i in range(n):
                pivot[i] = -pivot[i]
        out.append(pivot)
        work = [r for r in work if r is not pivot and any(r)]
        for r in work:
            q = r[col] // pivot[col]
            if q:
                for i in range(n):
                    r[i] -= q * pivot[i]
        col += 1
    # reduce entries above pivots for canonicity
    for idx in range(len(out) - 1, -1, -1):
        pcol = next(i for i in range(n) if out[idx][i] != 0)
        for above in out[:idx]:
            q = above[pcol] // out[idx][pcol]
            if q:
                for i in range(n):
                    above[i] -= q * out[idx][i]
    return tuple(tuple(r) for r in out)


# ---------------------------------------------------------------------------
# Nonnegative integer solutions (Contejean-Devie completion)

def nonneg_solutions(matrix: Sequence[Vec], rhs: Vec) -> tuple[list[Vec], list[Vec]]:
    """Minimal solutions of A x = b, x >= 0, plus the Hilbert basis of the
    homogeneous system.

    Works on the homogenized system A x - b x0 = 0: minimal solutions with
    x0 = 1 are the inhomogeneous minima, those with x0 = 0 the Hilbert
    basis.  Every nonnegative solution is one minimal solution plus an
    N-combination of Hilbert elements.
    """
    m = len(matrix)
    if m == 0:
        raise ValueError("empty system")
    n = len(matrix[0])
    cols = n + 1
    ext = [list(matrix[r]) + [-rhs[r]] for r in range(m)]

    def image(vec: Sequence[int]) -> Vec:
        return tuple(sum(ext[r][i] * vec[i] for i in range(cols)) for r in range(m))

    def leq(u: Sequence[int], v: Sequence[int]) -> bool:
        return all(a <= b for a, b in zip(u, v))

    unit_images = [image(_unit(cols, i)) for i in range(cols)]
    frontier: list[tuple[Vec, Vec]] = []
    minimal: list[Vec] = []
    for i in range(cols):
        vec = _unit(cols, i)
        frontier.append((vec, unit_images[i]))
    seen = {v for v, _ in frontier}
    while frontier:
        nxt: list[tuple[Vec, Vec]] = []
        for vec, img in frontier:
            if not any(img):
                if vec[n] <= 1 and not any(leq(b, vec) for b in minimal):
                    minimal.append(vec)
                continue
            for i in range(cols):
                if sum(a * b for a, b in zip(img, unit_images[i])) < 0:
                    cand = tuple(vec[j] + (j == i) for j in range(cols))
                    if cand[n] > 1 or cand in seen:
                        continue
                    if any(leq(b, cand) for b in minimal):
                        continue
                    seen.add(cand)
                    nxt.append((cand, image(cand)))
        frontier = nxt
    minimal = [v for v in minimal if not any(leq(b, v) for b in minimal if b != v)]
    inhomogeneous = sorted(v[:n] for v in minimal if v[n] == 1)
    hilbert = sorted(v[:n] for v in minimal if v[n] == 0)
    return inhomogeneous, hilbert


def orthant_families(coset: LatticeCoset) -> list[tuple[Vec, tuple[Vec, ...]]]:
    """Decompose a coset into families (base point, pump vectors) whose
    N-spans cover it exactly, with every family sign-uniform per coordinate:
    pumping never crosses zero, so letter blocks stay normal-form clean."""
    dim = len(coset.particular)
    d = len(coset.basis)
    families: dict[tuple[Vec, tuple[Vec, ...]], None] = {}
    for signs in itertools.product((1, -1), repeat=dim):
        # unknowns: c+ (d), c- (d), slack y (dim); equations:
        # sign_i * (p + B(c+ - c-))_i - y_i = 0
        rows: list[Vec] = []
        rhs: list[int] = []
        for i in range(dim):
            row = [signs[i] * coset.basis[j][i] for j in range(d)]
            row += [-signs[i] * coset.basis[j][i] for j in range(d)]
            row += [-int(i == t) for t in range(dim)]
            rows.append(tuple(row))
            rhs.append(-signs[i] * coset.particular[i])
        minima, hilbert = nonneg_solutions(tuple(rows), tuple(rhs))

        def x_of(vec: Sequence[int]) -> Vec:
            return tuple(
                sum(coset.basis[j][i] * (vec[j] - vec[d + j]) for j in range(d))
                for i in range(dim))

        pumps = []
        for h in hilbert:
            effect = x_of(h)
            if any(effect):
                pumps.append(effect)
        pumps_t = tuple(sorted(set(pumps)))
        for msol in minima:
            point = tuple(p + e for p, e in zip(coset.particular, x_of(msol)))
            families[(point, pumps_t)] = None
    return sorted(families)


# ---------------------------------------------------------------------------
# EDT0L and tuple-automaton emission

def empty_solution_system(k: int, n: int,
                          generator_names: Sequence[str] | None = None) -> Edt0lSystem:
    names = tuple(generator_names) if generator_names else _default_names(k)
    sigma = {x for g in names for x in (g, g + "^-1")}
    if n > 1:
        sigma.add(HASH)
    builder = SystemBuilder(sigma, sigma | {"@stuck"})
    start = builder.state()
    return builder.finish(("@stuck",), start, set())


def coset_to_edt0l(coset: LatticeCoset | None, k: int, n: int,
                   generator_names: Sequence[str] | None = None) -> Edt0lSystem:
    """Language {(g1 eta) # ... # (gn eta)} of an affine lattice over Z^(k*n).

    Seed holds one placeholder per variable-generator pair; each sign-uniform
    family contributes an entry table (base point) and one pump loop per
    Hilbert direction, then an exit erases the placeholders.
    """
    names = tuple(generator_names) if generator_names else _default_names(k)
    if coset is None:
        return empty_solution_system(k, n, names)
    dim = k * n
    if len(coset.particular) != dim:
        raise ValueError(f"coset dimension {len(coset.particular)} != k*n = {dim}")
    sigma = {x for g in names for x in (g, g + "^-1")}
    if n > 1:
        sigma.add(HASH)
    anchors = [f"@v{j}g{i}" for j in range(n) for i in range(k)]
    builder = SystemBuilder(sigma, sigma | set(anchors) | {HASH})
    start, final = builder.state(), builder.state()
    erase = {anchor: () for anchor in anchors}
    for point, pumps in orthant_families(coset):
        hub = builder.state()
        entry = {anchors[t]: (anchors[t],) + power(names[t % k], point[t])
                 for t in range(dim)}
        builder.edge(start, entry, hub)
        for pump in pumps:
            table = {anchors[t]: (anchors[t],) + power(names[t % k], pump[t])
                     for t in range(dim)}
            builder.edge(hub, table, hub)
        builder.edge(hub, erase, final)
    seed: list[str] = []
    for j in range(n):
        if j:
            seed.append(HASH)
        seed.extend(anchors[j * k:(j + 1) * k])
    return builder.finish(tuple(seed), start, {final})


def decode_solution_word(word: Sequence[str], k: int, n: int,
                         generator_names: Sequence[str] | None = None) -> tuple[Vec, ...]:
    """Parse (g1 eta)#...#(gn eta) back into exponent vectors; strict about
    normal-form shape."""
    names = tuple(generator_names) if generator_names else _default_names(k)
    ctx = ZkContext(k, names)
    segments: list[list[str]] = [[]]
    for x in word:
        if x == HASH:
            segments.append([])
        else:
            segments[-1].append(x)
    if len(segments) != n:
        raise ValueError(f"expected {n} components, found {len(segments)}")
    out = []
    for seg in segments:
        exps = ctx.exponents(seg)
        if ctx.from_exponents(exps) != tuple(seg):
            raise ValueError(f"component {seg!r} is not in normal form")
        out.append(exps)
    return tuple(out)


def _factor_slices(coset: LatticeCoset, k: int, n: int) -> list[LatticeCoset] | None:
    """Per-generator sub-cosets when the lattice splits as a direct sum of
    generator-index slices (always true for abelianized equation systems)."""
    dim = k * n
    d = len(coset.basis)
    slices: list[LatticeCoset] = []
    all_rows: list[Vec] = []
    for i in range(k):
        outside = [r for r in range(dim) if r % k != i]
        if d:
            rows = [tuple(coset.basis[j][r] for j in range(d)) for r in outside]
            if rows:
                _, U, pivots = _column_hnf([list(r) for r in rows])
                free_cols = range(len(pivots), d)
                combos = [tuple(U[t][c] for t in range(d)) for c in free_cols]
            else:
                combos = [_unit(d, j) for j in range(d)]
        else:
            combos = []
        vectors = []
        for combo in combos:
            full = tuple(sum(coset.basis[j][r] * combo[j] for j in range(d))
                         for r in range(dim))
            if any(full):
                vectors.append(full)
                all_rows.append(full)
        projected = tuple(tuple(v[j * k + i] for j in range(n)) for v in vectors)
        particular = tuple(coset.particular[j * k + i] for j in range(n))
        slices.append(LatticeCoset(particular, projected))
    if _row_hnf(tuple(all_rows)) != _row_hnf(coset.basis):
        return None
    return slices


def coset_tuple_fsa(coset: LatticeCoset, k: int, n: int,
                    generator_names: Sequence[str] | None = None) -> TupleFsa:
    """n-variable automaton for the same solution language, one writing phase
    per generator index.  Only defined when the lattice factors through the
    generator indices; abelianized equation systems always do."""
    names = tuple(generator_names) if generator_names else _default_names(k)
    slices = _factor_slices(coset, k, n)
    if slices is None:
        raise ValueError("coset does not factor by generator index; no tuple automaton")
    alphabet = {x for g in names for x in (g, g + "^-1")}
    states: list[int] = []
    edges: set[tuple[int, tuple[str | None, ...], int]] = set()
    counter = itertools.count()

    def new_state() -> int:
        s = next(counter)
        states.append(s)
        return s

    def blank(coord: int, letter: str) -> tuple[str | None, ...]:
        return tuple(letter if t == coord else None for t in range(n))

    def write_path(src: int, vector: Vec, letter_base: str) -> int:
        here = src
        for j in range(n):
            for _ in range(abs(vector[j])):
                nxt = new_state()
                letter = letter_base if vector[j] > 0 else letter_base + "^-1"
                edges.add((here, blank(j, letter), nxt))
                here = nxt
        return here

    phase_entry = new_state()
    start = phase_entry
    for i in range(k):
        phase_exit = new_state()
        for point, pumps in orthant_families(slices[i]):
            family_entry = new_state()
            edges.add((phase_entry, (None,) * n, family_entry))
            hub = write_path(family_entry, point, names[i])
            for pump in pumps:
                # loop writing the pump, closing back at the hub
                here = hub
                flat: list[tuple[int, str]] = []
                for j in range(n):
                    letter = names[i] if pump[j] > 0 else names[i] + "^-1"
                    flat.extend((j, letter) for _ in range(abs(pump[j])))
                for idx, (j, letter) in enumerate(flat):
                    nxt = hub if idx == len(flat) - 1 else new_state()
                    edges.add((here, blank(j, letter), nxt))
                    here = nxt
            edges.add((hub, (None,) * n, phase_exit))
        phase_entry = phase_exit
    return TupleFsa.make(n, states, alphabet, edges, start, {phase_entry})


def coset_to_json(coset: LatticeCoset | None) -> str:
    if coset is None:
        return json.dumps({"empty": True})
    return json.dumps({"p": list(coset.particular),
                       "basis": [list(b) for b in coset.basis]}, sort_keys=True)


def coset_from_json(text: str) -> LatticeCoset | None:
    doc = json.loads(text)
    if doc.get("empty"):
        return None
    return LatticeCoset(tuple(doc["p"]), tuple(tuple(b) for b in doc["basis"]))
