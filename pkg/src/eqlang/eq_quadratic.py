"""Two-variable quadratic Diophantine equations and their solution languages.

The hyperbolic case reduces to the generalized Pell equation v^2 - D u^2 = N
by completing the square twice; solutions of the original equation are the
images of Pell solutions under an affine backmap with two divisibility
conditions.  Degenerate discriminants route to dedicated finite or
linear-family solvers (linear, parabolic, elliptic, factorable).

Every reduction is accepted only after an exact equivalence audit against a
grid search, so a formula slip cannot survive construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import Iterator, Sequence

import numpy as np

from .edt0l import Edt0lSystem, SystemBuilder
from .eq_abelian import LatticeCoset, LinearSystem, coset_to_edt0l, orthant_families, solve_lattice
from .words import HASH, Word, power


class QuadraticError(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticEq:
    """alpha X^2 + beta XY + gamma Y^2 + delta X + epsilon Y + zeta = 0."""

    alpha: int
    beta: int
    gamma: int
    delta: int
    epsilon: int
    zeta: int

    def __post_init__(self):
        if not any((self.alpha, self.beta, self.gamma, self.delta, self.epsilon)):
            raise QuadraticError("all variable coefficients vanish")

    def value(self, x: int, y: int) -> int:
        return (self.alpha * x * x + self.beta * x * y + self.gamma * y * y
                + self.delta * x + self.epsilon * y + self.zeta)

    def coefficients(self) -> tuple[int, int, int, int, int, int]:
        return (self.alpha, self.beta, self.gamma, self.delta, self.epsilon, self.zeta)


@dataclass(frozen=True)
class PellData:
    d: int
    n: int
    fundamental: tuple[int, int]
    class_reps: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class LagrangeReduction:
    """x = (alpha_p v + beta_p u + gamma_p)/delta_p, y = (v - lam)/mu over
    the solutions of v^2 - d u^2 = n."""

    d: int
    n: int
    alpha_p: int
    beta_p: int
    gamma_p: int
    delta_p: int
    lam: int
    mu: int

    def backmap(self, v: int, u: int) -> tuple[int, int] | None:
        xn = self.alpha_p * v + self.beta_p * u + self.gamma_p
        yn = v - self.lam
        if xn % self.delta_p or yn % self.mu:
            return None
        return xn // self.delta_p, yn // self.mu


@dataclass(frozen=True)
class DegenerateQuadratic:
    kind: str  # linear | parabolic | elliptic | factorable


# ---------------------------------------------------------------------------
# Pell machinery

def _check_pell_d(d: int):
    if d <= 0 or isqrt(d) ** 2 == d:
        raise QuadraticError(f"Pell coefficient must be positive and nonsquare, got {d}")


@lru_cache(maxsize=None)
def pell_fundamental(d: int) -> tuple[int, int]:
    """Least positive solution of x^2 - d y^2 = 1, via the continued
    fraction of sqrt(d) with the odd-period doubling rule."""
    _check_pell_d(d)
    a0 = isqrt(d)
    m, den, a = 0, 1, a0
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    while True:
        m = den * a - m
        den = (d - m * m) // den
        a = (a0 + m) // den
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if a == 2 * a0:
            x, y = h_prev, k_prev
            break
    if x * x - d * y * y != 1:
        x, y = x * x + d * y * y, 2 * x * y
    if x * x - d * y * y != 1:
        raise QuadraticError(f"continued fraction failed for d={d}")
    return x, y


def pell_solutions(d: int, count: int) -> list[tuple[int, int]]:
    """First count non-negative solutions, starting from (1, 0)."""
    _check_pell_d(d)
    x1, y1 = pell_fundamental(d)
    out = []
    x, y = 1, 0
    for _ in range(max(0, count)):
        out.append((x, y))
        x, y = x1 * x + d * y1 * y, y1 * x + x1 * y
    return out


def pell_edt0l(d: int) -> Edt0lSystem:
    """System for {a^x # a^y : x^2 - d y^2 = 1}, all four sign quadrants.

    Counting letters mirror the solution recursion on each side of the hash;
    four exit tables realize the sign homomorphisms.
    """
    _check_pell_d(d)
    x1, y1 = pell_fundamental(d)
    ai = "a^-1"
    letters = {"a", ai, HASH, "ax", "ay", "bx", "by"}
    builder = SystemBuilder({"a", ai, HASH}, letters)
    loop, final = builder.state(), builder.state()
    builder.edge(loop, {
        "ax": ("ax",) * x1 + ("ay",) * (d * y1),
        "ay": ("ax",) * y1 + ("ay",) * x1,
        "bx": ("bx",) * x1 + ("by",) * y1,
        "by": ("bx",) * (d * y1) + ("by",) * x1,
    }, loop)
    for sx in ("a", ai):
        for sy in ("a", ai):
            builder.edge(loop, {"ax": (sx,), "ay": (), "bx": (), "by": (sy,)}, final)
    return builder.finish(("ax", HASH, "bx"), loop, {final})


_UNIT_WALK_LIMIT = 10_000


def _unit_step(d: int, point: tuple[int, int], direction: int) -> tuple[int, int]:
    x1, y1 = pell_fundamental(d)
    v, u = point
    if direction >= 0:
        return x1 * v + d * y1 * u, y1 * v + x1 * u
    return x1 * v - d * y1 * u, -y1 * v + x1 * u


def _orbit_min(d: int, point: tuple[int, int]) -> tuple[int, int]:
    """Deterministic orbit representative: walk |u| downhill, then take the
    least key in a small window around the local minimum."""
    current = point
    for _ in range(_UNIT_WALK_LIMIT):
        fwd = _unit_step(d, current, +1)
        bwd = _unit_step(d, current, -1)
        best = min((fwd, bwd), key=lambda p: (abs(p[1]), abs(p[0])))
        if (abs(best[1]), abs(best[0])) < (abs(current[1]), abs(current[0])):
            current = best
        else:
            break
    window = [current]
    fwd = bwd = current
    for _ in range(2):
        fwd = _unit_step(d, fwd, +1)
        bwd = _unit_step(d, bwd, -1)
        window.extend((fwd, bwd))
    return min(window, key=lambda p: (abs(p[1]), abs(p[0]), p[0], p[1]))


def _class_canonical(d: int, point: tuple[int, int]) -> tuple[int, int]:
    """Invariant of the equivalence p ~ +-(p . unit^n)."""
    return min(_orbit_min(d, point), _orbit_min(d, (-point[0], -point[1])))


def _pell_brute(d: int, n: int, bound: int) -> list[tuple[int, int]]:
    """All solutions of v^2 - d u^2 = n with |u| <= bound, via vectorized scan."""
    sols = []
    chunk = 1 << 20
    for lo in range(0, bound + 1, chunk):
        hi = min(bound, lo + chunk - 1)
        us = np.arange(lo, hi + 1, dtype=np.int64)
        t = n + d * us * us
        mask = t >= 0
        roots = np.zeros_like(t)
        roots[mask] = np.sqrt(t[mask].astype(np.float64)).astype(np.int64)
        for r in (roots - 1, roots, roots + 1):
            ok = mask & (r >= 0) & (r * r == t)
            for u, v in zip(us[ok], r[ok]):
                u, v = int(u), int(v)
                if v * v - d * u * u == n:
                    for sv, su in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                        sols.append((sv * v, su * u))
    return sorted(set(sols))


@lru_cache(maxsize=None)
def gen_pell_classes(d: int, n: int) -> PellData:
    """Class representatives of v^2 - d u^2 = n: every solution is plus or
    minus a representative moved by a power of the fundamental unit.

    The initial scan window is the classical per-class bound (each class has
    a representative with u <= y1 sqrt(|n| / (2(x1 -+ 1)))); an audit scan at
    twice the window must find no uncovered solution, else the window
    doubles and the search retries.
    """
    _check_pell_d(d)
    if n == 0:
        raise QuadraticError("n must be nonzero; v^2 - d u^2 = 0 has only the origin")
    x1, y1 = pell_fundamental(d)
    if n == 1:
        return PellData(d, n, (x1, y1), ((1, 0),))
    if n > 0:
        nagell = isqrt((y1 * y1 * n) // (2 * (x1 + 1))) + 1
    else:
        nagell = isqrt((y1 * y1 * (-n)) // (2 * (x1 - 1))) + 1
    bound = max(4, min(nagell, y1 * (isqrt(abs(n)) + 1)))
    for _ in range(8):
        found = _pell_brute(d, n, bound)
        reps = sorted({_class_canonical(d, p) for p in found})
        audit = _pell_brute(d, n, 2 * bound)
        covered = all(_class_canonical(d, p) in reps for p in audit)
        if covered and (found or not audit):
            return PellData(d, n, (x1, y1), tuple(reps))
        bound *= 2
    raise QuadraticError(f"class search failed to stabilize for d={d}, n={n}")


# ---------------------------------------------------------------------------
# Lagrange reduction

def brute_quadratic_solutions(eq: QuadraticEq, radius: int) -> set[tuple[int, int]]:
    """Grid oracle: all integer solutions with |x|, |y| <= radius."""
    a, b, c, d, e, f = eq.coefficients()
    xs = np.arange(-radius, radius + 1, dtype=np.int64)
    out: set[tuple[int, int]] = set()
    for y in range(-radius, radius + 1):
        vals = (a * xs + (b * y + d)) * xs + (c * y * y + e * y + f)
        for x in xs[vals == 0]:
            out.add((int(x), y))
    return out


def _simplify_backmap(alpha_p: int, beta_p: int, gamma_p: int, delta_p: int) -> tuple[int, int, int, int]:
    g = gcd(gcd(abs(alpha_p), abs(beta_p)), gcd(abs(gamma_p), abs(delta_p)))
    if g > 1:
        return alpha_p // g, beta_p // g, gamma_p // g, delta_p // g
    return alpha_p, beta_p, gamma_p, delta_p


def discriminant(eq: QuadraticEq) -> int:
    return eq.beta ** 2 - 4 * eq.alpha * eq.gamma


def lagrange_reduce(eq: QuadraticEq, audit_radius: int = 1000) -> "LagrangeReduction | DegenerateQuadratic":
    """Classify the equation; in the hyperbolic nonsquare case return the
    audited Pell reduction, otherwise a degenerate-case tag."""
    a, b, c, d, e, f = eq.coefficients()
    if a == 0 and b == 0 and c == 0:
        return DegenerateQuadratic("linear")
    disc = discriminant(eq)
    if disc < 0:
        return DegenerateQuadratic("elliptic")
    if disc == 0:
        return DegenerateQuadratic("parabolic")
    if isqrt(disc) ** 2 == disc:
        return DegenerateQuadratic("factorable")
    # nonsquare discriminant forces alpha != 0 and gamma != 0
    n = (2 * a * e - b * d) ** 2 + disc * (4 * a * f - d * d)
    alpha_p, beta_p, gamma_p, delta_p = _simplify_backmap(
        -b, disc, -(disc * d + b * (2 * a * e - b * d)), 2 * a * disc)
    red = LagrangeReduction(disc, n, alpha_p, beta_p, gamma_p, delta_p,
                            b * d - 2 * a * e, disc)
    got = {p for p in _reduction_solutions_in_box(eq, red, audit_radius)}
    want = brute_quadratic_solutions(eq, audit_radius)
    if got != want:
        raise QuadraticError(
            f"reduction audit failed for {eq}: {len(got)} mapped vs {len(want)} brute")
    return red


def _reduction_solutions_in_box(eq: QuadraticEq, red: LagrangeReduction,
                                radius: int) -> set[tuple[int, int]]:
    v_bound = abs(red.mu) * radius + abs(red.lam)
    out: set[tuple[int, int]] = set()
    if red.n == 0:
        pts: Iterator[tuple[int, int]] = iter([(0, 0)])
    else:
        data = gen_pell_classes(red.d, red.n)
        pts = iter(_pell_brute(red.d, red.n, _u_bound(red.d, red.n, v_bound)))
    for v, u in pts:
        if abs(v) > v_bound:
            continue
        mapped = red.backmap(v, u)
        if mapped and abs(mapped[0]) <= radius and abs(mapped[1]) <= radius:
            if eq.value(*mapped) != 0:
                raise QuadraticError("backmap produced a non-solution")
            out.add(mapped)
    return out


def _u_bound(d: int, n: int, v_bound: int) -> int:
    # v^2 - d u^2 = n and |v| <= v_bound  =>  u^2 <= (v_bound^2 - n)/d
    t = v_bound * v_bound - n
    return isqrt(t // d) + 1 if t > 0 else 1


# ---------------------------------------------------------------------------
# Branch descriptions for the assembled solution-language system

Mat2 = tuple[tuple[int, int], tuple[int, int]]


def _mat_mul2(a: Mat2, b: Mat2) -> Mat2:
    return ((a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
            (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]))


def _mat_vec2(a: Mat2, v: tuple[int, int]) -> tuple[int, int]:
    return (a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1])


def _mat_pow2(a: Mat2, k: int) -> Mat2:
    out: Mat2 = ((1, 0), (0, 1))
    base = a
    while k:
        if k & 1:
            out = _mat_mul2(out, base)
        base = _mat_mul2(base, base)
        k >>= 1
    return out


def _mat_inv2_det1(a: Mat2) -> Mat2:
    if a[0][0] * a[1][1] - a[0][1] * a[1][0] != 1:
        raise QuadraticError("matrix is not SL2")
    return ((a[1][1], -a[0][1]), (-a[1][0], a[0][0]))


@dataclass(frozen=True)
class FinitePair:
    x: int
    y: int


@dataclass(frozen=True)
class AffineFamily:
    """(x, y) = point + N-combinations of pumps, sign-uniform per coordinate."""

    point: tuple[int, int]
    pumps: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PolyTail:
    """(x, y) = (px(m), py(m)) for m >= 0, via cumulative delta emission.

    Each polynomial is stored as the absolute-value data (sign, A, B, C)
    with value sign*(A m^2 + B m + C), A >= 0, A+B >= 0, C >= 0, so the
    per-step deltas 2A m + (A+B) are non-negative counts.
    """

    x_sign: int
    x_abc: tuple[int, int, int]
    y_sign: int
    y_abc: tuple[int, int, int]


@dataclass(frozen=True)
class ConeBranch:
    """Pell orbit tail in cone coordinates: counts w evolve by a nonnegative
    affine map, outputs are nonnegative functionals of w."""

    w0: tuple[int, int]
    mat: Mat2
    drift: tuple[int, int]
    x_row: tuple[int, int]
    x_const: int
    x_sign: int
    y_row: tuple[int, int]
    y_const: int
    y_sign: int


Branch = "FinitePair | AffineFamily | PolyTail | ConeBranch"


def _pair_word(x: int, y: int) -> Word:
    return power("a", x) + (HASH,) + power("a", y)


_LITERAL_MAX = 4096
_ROW_ENTRY_MAX = 10 ** 6
_FACTOR_BUDGET = 50_000


def _doubling_chain(builder: SystemBuilder, src: int,
                    jobs: Sequence[tuple[str, str, int]]) -> int:
    """Build letter counts by most-significant-bit doubling.

    Each job (feeder, target, count) contributes count * multiplicity(feeder)
    to the target: every chain step doubles the target and feeders append
    one target per set bit.  Targets must start at multiplicity zero.
    Intermediate forms never exceed the value being built, so the
    enumerator's length bound still prunes.
    """
    width = max((c.bit_length() for _, _, c in jobs), default=0)
    here = src
    for i in range(width - 1, -1, -1):
        table: dict[str, Word] = {}
        for feeder, target, count in jobs:
            table[target] = (target, target)
            bit = (count >> i) & 1
            table.setdefault(feeder, (feeder,))
            if bit:
                table[feeder] = table[feeder] + (target,)
        nxt = builder.state()
        builder.edge(here, table, nxt)
        here = nxt
    return here


def _sl2_nonneg_factors(m: Mat2, cap: int = _LITERAL_MAX) -> list[Mat2]:
    """Factor a nonnegative SL2 matrix into nonnegative SL2 factors with
    entries <= cap (matrix continued fractions with capped quotients)."""
    if m[0][0] * m[1][1] - m[0][1] * m[1][0] != 1 or min(m[0] + m[1]) < 0:
        raise QuadraticError("pump matrix is not nonnegative SL2")
    identity: Mat2 = ((1, 0), (0, 1))
    factors: list[Mat2] = []
    cur = m
    while cur != identity:
        (a, b), (c, d) = cur
        if a >= c and b >= d and (c or d):
            q = min(a // c if c else 1 << 62, b // d if d else 1 << 62)
            q = max(1, min(q, cap))
            factors.append(((1, q), (0, 1)))
            cur = ((a - q * c, b - q * d), (c, d))
        elif c >= a and d >= b and (a or b):
            q = min(c // a if a else 1 << 62, d // b if b else 1 << 62)
            q = max(1, min(q, cap))
            factors.append(((1, 0), (q, 1)))
            cur = ((a, b), (c - q * a, d - q * b))
        else:
            raise QuadraticError("nonnegative SL2 factorization stuck")
        if len(factors) > _FACTOR_BUDGET:
            raise QuadraticError("orbit pump too large to factor")
    return factors


def assemble_pair_system(branches: Sequence[object]) -> Edt0lSystem:
    """One EDT0L system over {a, a^-1, #} realizing the union of branches."""
    sigma = {"a", "a^-1", HASH}
    extended = set(sigma) | {"@seed"}
    names: list[tuple[object, dict[str, str]]] = []
    for idx, br in enumerate(branches):
        local: dict[str, str] = {}
        if isinstance(br, FinitePair):
            if max(abs(br.x), abs(br.y)) > _LITERAL_MAX:
                local = {q: f"@q{idx}{q}" for q in ("Jx", "Px", "Jy", "Py")}
        elif isinstance(br, AffineFamily):
            local = {"Ax": f"@q{idx}Ax", "Ay": f"@q{idx}Ay"}
        elif isinstance(br, PolyTail):
            local = {q: f"@q{idx}{q}" for q in ("Kx", "Mx", "Ky", "My")}
        elif isinstance(br, ConeBranch):
            local = {q: f"@q{idx}{q}" for q in
                     ("Vx", "Wx", "Kx", "Vy", "Wy", "Ky", "Jx", "Jy", "Cx", "Cy",
                      "DVx", "DWx", "DVy", "DWy")}
        extended.update(local.values())
        names.append((br, local))
    builder = SystemBuilder(sigma, extended)
    start, final = builder.state(), builder.state()
    seen_pairs: set[tuple[int, int]] = set()
    for br, local in names:
        if isinstance(br, FinitePair):
            if (br.x, br.y) in seen_pairs:
                continue
            seen_pairs.add((br.x, br.y))
            if not local:
                builder.edge(start, {"@seed": _pair_word(br.x, br.y)}, final)
                continue
            jx, px, jy, py = (local[q] for q in ("Jx", "Px", "Jy", "Py"))
            lx = "a" if br.x >= 0 else "a^-1"
            ly = "a" if br.y >= 0 else "a^-1"
            entry = builder.state()
            builder.edge(start, {"@seed": (jx, HASH, jy)}, entry)
            done = _doubling_chain(builder, entry,
                                   [(jx, px, abs(br.x)), (jy, py, abs(br.y))])
            builder.edge(done, {jx: (), jy: (), px: (lx,), py: (ly,)}, final)
        elif isinstance(br, AffineFamily):
            ax, ay = local["Ax"], local["Ay"]
            hub = builder.state()
            seed = ((ax,) + power("a", br.point[0]) + (HASH,)
                    + (ay,) + power("a", br.point[1]))
            builder.edge(start, {"@seed": seed}, hub)
            for dx, dy in br.pumps:
                builder.edge(hub, {ax: (ax,) + power("a", dx),
                                   ay: (ay,) + power("a", dy)}, hub)
            builder.edge(hub, {ax: (), ay: ()}, final)
        elif isinstance(br, PolyTail):
            kx, mx, ky, my = (local[q] for q in ("Kx", "Mx", "Ky", "My"))
            ax0, bx0, cx0 = br.x_abc
            ay0, by0, cy0 = br.y_abc
            lx = "a" if br.x_sign >= 0 else "a^-1"
            ly = "a" if br.y_sign >= 0 else "a^-1"
            hub = builder.state()
            seed = ((lx,) * cx0 + (kx,) + (HASH,) + (ly,) * cy0 + (ky,))
            builder.edge(start, {"@seed": seed}, hub)
            builder.edge(hub, {
                mx: (mx,) + (lx,) * (2 * ax0),
                kx: (kx, mx) + (lx,) * (ax0 + bx0),
                my: (my,) + (ly,) * (2 * ay0),
                ky: (ky, my) + (ly,) * (ay0 + by0),
            }, hub)
            builder.edge(hub, {kx: (), mx: (), ky: (), my: ()}, final)
        elif isinstance(br, ConeBranch):
            vx, wx, kx, vy, wy, ky, jx, jy = (
                local[q] for q in ("Vx", "Wx", "Kx", "Vy", "Wy", "Ky", "Jx", "Jy"))
            lx = "a" if br.x_sign >= 0 else "a^-1"
            ly = "a" if br.y_sign >= 0 else "a^-1"
            if max(br.x_row + br.y_row) > _ROW_ENTRY_MAX:
                raise QuadraticError("projection row too large")
            hub = builder.state()
            if max(br.w0) > _LITERAL_MAX:
                entry = builder.state()
                builder.edge(start, {"@seed": (jx, kx, HASH, jy, ky)}, entry)
                done = _doubling_chain(builder, entry,
                                       [(jx, vx, br.w0[0]), (jx, wx, br.w0[1]),
                                        (jy, vy, br.w0[0]), (jy, wy, br.w0[1])])
                builder.edge(done, {jx: (), jy: ()}, hub)
            else:
                seed = ((vx,) * br.w0[0] + (wx,) * br.w0[1] + (kx,) + (HASH,)
                        + (vy,) * br.w0[0] + (wy,) * br.w0[1] + (ky,))
                builder.edge(start, {"@seed": seed}, hub)
            # pump cycle: factored linear map, then the affine drift
            here = hub
            for factor in reversed(_sl2_nonneg_factors(br.mat)):
                table = {}
                for v, w in ((vx, wx), (vy, wy)):
                    table[v] = (v,) * factor[0][0] + (w,) * factor[1][0]
                    table[w] = (v,) * factor[0][1] + (w,) * factor[1][1]
                nxt = builder.state()
                builder.edge(here, table, nxt)
                here = nxt
            if max(br.drift) > _LITERAL_MAX:
                dvx, dwx, dvy, dwy = (local[q] for q in ("DVx", "DWx", "DVy", "DWy"))
                done = _doubling_chain(builder, here,
                                       [(kx, dvx, br.drift[0]), (kx, dwx, br.drift[1]),
                                        (ky, dvy, br.drift[0]), (ky, dwy, br.drift[1])])
                builder.edge(done, {dvx: (vx,), dwx: (wx,), dvy: (vy,), dwy: (wy,)}, hub)
            else:
                table = {}
                for v, w, k in ((vx, wx, kx), (vy, wy, ky)):
                    table[k] = (k,) + (v,) * br.drift[0] + (w,) * br.drift[1]
                builder.edge(here, table, hub)
            # exit projection; oversized constants accumulate through a chain
            exit_state = hub
            exit_table = {
                vx: (lx,) * br.x_row[0], wx: (lx,) * br.x_row[1],
                vy: (ly,) * br.y_row[0], wy: (ly,) * br.y_row[1],
            }
            if max(br.x_const, br.y_const) > _LITERAL_MAX:
                cx_l, cy_l = local["Cx"], local["Cy"]
                exit_state = _doubling_chain(builder, hub,
                                             [(kx, cx_l, br.x_const),
                                              (ky, cy_l, br.y_const)])
                exit_table |= {cx_l: (lx,), cy_l: (ly,), kx: (), ky: ()}
            else:
                exit_table |= {kx: (lx,) * br.x_const, ky: (ly,) * br.y_const}
            builder.edge(exit_state, exit_table, final)
        else:
            raise QuadraticError(f"unknown branch {br!r}")
    return builder.finish(("@seed",), start, {final})


# ---------------------------------------------------------------------------
# Hyperbolic branches: orbit tails in cone coordinates

_CERT_LIMIT = 400
_CONE_K_MAX = 64
_CONE_SHIFT_MAX = 200


def _sign_or(v: int, default: int) -> int:
    return default if v == 0 else (1 if v > 0 else -1)


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _probe_sign(red: LagrangeReduction, point: tuple[int, int], step: Mat2,
                which: int) -> int:
    z = point
    value = 0
    for _ in range(12):
        mapped = red.backmap(*z)
        if mapped is not None:
            value = mapped[which]
        z = _mat_vec2(step, z)
    return 1 if value >= 0 else -1


def _tail_cone_branch(red: LagrangeReduction, start_point: tuple[int, int],
                      step: Mat2, direction: int) -> tuple[int, ConeBranch]:
    """Cone branch for the progression start_point, step(start), step^2(...).

    Returns (burn_in, branch): the branch realizes the progression from
    index burn_in on; earlier points are the caller's to emit explicitly.
    The burn-in both stabilizes coordinate signs and pushes the start deep
    enough into the fitted cone.
    """
    big_l = abs(red.delta_p) * abs(red.mu) // gcd(abs(red.delta_p), abs(red.mu))
    point = start_point
    for burn_in in range(_CERT_LIMIT):
        branch = _cone_fit_at(red, point, step, direction, big_l)
        if branch is not None and _verify_cone(red, point, step, branch):
            return burn_in, branch
        point = _mat_vec2(step, point)
    raise QuadraticError("tail certification did not stabilize")


def _cone_fit_at(red: LagrangeReduction, point: tuple[int, int], step: Mat2,
                 direction: int, big_l: int) -> ConeBranch | None:
    v0, u0 = point
    su = _sign_or(u0, 1)
    sv = _sign_or(v0, su * direction)
    if sv * su != direction or sv * v0 < 0 or su * u0 < 0:
        return None
    conj: Mat2 = ((step[0][0], sv * su * step[0][1]),
                  (su * sv * step[1][0], step[1][1]))
    if min(conj[0] + conj[1]) < 0:
        return None
    tv, tu = sv * v0, su * u0
    r_v, r_u = tv % big_l, tu % big_l
    cp_num = conj[0][0] * r_v + conj[0][1] * r_u - r_v
    cq_num = conj[1][0] * r_v + conj[1][1] * r_u - r_u
    if cp_num % big_l or cq_num % big_l or cp_num < 0 or cq_num < 0:
        return None
    drift = (cp_num // big_l, cq_num // big_l)

    sx = _probe_sign(red, point, step, 0)
    sy = _probe_sign(red, point, step, 1)
    scale_x = big_l // red.delta_p
    scale_y = big_l // red.mu
    fx = (sx * red.alpha_p * sv * scale_x, sx * red.beta_p * su * scale_x)
    cx_num = red.alpha_p * sv * r_v + red.beta_p * su * r_u + red.gamma_p
    cy_num = sv * r_v - red.lam
    if cx_num % red.delta_p or cy_num % red.mu:
        return None
    cx = sx * (cx_num // red.delta_p)
    fy = (sy * sv * scale_y, 0)
    cy = sy * (cy_num // red.mu)

    z = ((tv - r_v) // big_l, (tu - r_u) // big_l)
    for basis in _cone_bases(conj):
        e_inv = ((basis[1][1], -basis[0][1]), (-basis[1][0], basis[0][0]))
        det = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0]
        if det == -1:
            basis = ((basis[0][1], basis[0][0]), (basis[1][1], basis[1][0]))
            e_inv = ((basis[1][1], -basis[0][1]), (-basis[1][0], basis[0][0]))
        n_mat = _mat_mul2(e_inv, _mat_mul2(conj, basis))
        if min(n_mat[0] + n_mat[1]) < 0:
            continue
        fx_e = (fx[0] * basis[0][0] + fx[1] * basis[1][0],
                fx[0] * basis[0][1] + fx[1] * basis[1][1])
        fy_e = (fy[0] * basis[0][0] + fy[1] * basis[1][0],
                fy[0] * basis[0][1] + fy[1] * basis[1][1])
        if min(fx_e) < 0 or min(fy_e) < 0:
            continue
        coef = (n_mat[0][0] + n_mat[0][1] - 1, n_mat[1][0] + n_mat[1][1] - 1)
        if min(coef) < 1:
            continue
        base = _mat_vec2(e_inv, drift)
        h = max(0, _ceil_div(-base[0], coef[0]), _ceil_div(-base[1], coef[1]))
        feasible = True
        for s_row, s_const in ((fx_e, cx), (fy_e, cy)):
            total = s_row[0] + s_row[1]
            if total > 0 and s_const < 0:
                h = max(h, _ceil_div(-s_const, total))
            elif total == 0 and s_const < 0:
                feasible = False
        if not feasible:
            return None
        dd = (coef[0] * h + base[0], coef[1] * h + base[1])
        w0 = (_mat_vec2(e_inv, z)[0] - h, _mat_vec2(e_inv, z)[1] - h)
        if min(w0) < 0:
            continue
        return ConeBranch(
            w0=w0, mat=n_mat, drift=dd,
            x_row=fx_e, x_const=(fx_e[0] + fx_e[1]) * h + cx, x_sign=sx,
            y_row=fy_e, y_const=(fy_e[0] + fy_e[1]) * h + cy, y_sign=sy)
    return None


def _surd_convergents(p0: int, s: int, q0: int, count: int) -> list[tuple[int, int]]:
    """Continued-fraction convergents (num, den) of (p0 + sqrt(s))/q0, s nonsquare."""
    if q0 <= 0:
        raise QuadraticError("surd denominator must be positive")
    if (s - p0 * p0) % q0:
        p0, s, q0 = p0 * abs(q0), s * q0 * q0, q0 * abs(q0)
    root = isqrt(s)
    if root * root == s:
        raise QuadraticError("surd is rational")
    p, q = p0, q0
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    out = []
    for _ in range(count):
        a = (p + root) // q
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        out.append((h, k))
        p = a * q - p
        q = (s - p * p) // q
    return out


def _cone_bases(n_mat: Mat2) -> Iterator[Mat2]:
    """Unimodular bases whose columns are consecutive convergents to the
    expanding eigendirection of a positive matrix; the enclosed cones narrow
    onto the direction, so every open condition holds at some depth."""
    (a11, a12), (a21, a22) = n_mat
    delta = (a11 - a22) ** 2 + 4 * a12 * a21
    # direction (v1, v2) with v2/v1 = ((a22 - a11) + sqrt(delta)) / (2 a12)
    convergents = _surd_convergents(a22 - a11, delta, 2 * a12, 40)
    for (p1, q1), (p2, q2) in zip(convergents, convergents[1:]):
        if min(p1, q1, p2, q2) < 0:
            continue
        yield ((q1, q2), (p1, p2))


def _verify_cone(red: LagrangeReduction, point: tuple[int, int], step: Mat2,
                 branch: ConeBranch) -> bool:
    """Exact check of the cone data on leading points; three points of a
    nondegenerate conic are affinely independent, so agreement there forces
    agreement along the entire tail."""
    w = branch.w0
    for _ in range(4):
        mapped = red.backmap(*point)
        if mapped is None:
            return False
        got_x = branch.x_row[0] * w[0] + branch.x_row[1] * w[1] + branch.x_const
        got_y = branch.y_row[0] * w[0] + branch.y_row[1] * w[1] + branch.y_const
        if (branch.x_sign * mapped[0], branch.y_sign * mapped[1]) != (got_x, got_y):
            return False
        if min(w) < 0 or got_x < 0 or got_y < 0:
            return False
        point = _mat_vec2(step, point)
        w = (branch.mat[0][0] * w[0] + branch.mat[0][1] * w[1] + branch.drift[0],
             branch.mat[1][0] * w[0] + branch.mat[1][1] * w[1] + branch.drift[1])
    return True


def _hyperbolic_branches(red: LagrangeReduction) -> list[object]:
    """Branches covering every backmapped solution of v^2 - d u^2 = n.

    Each unit orbit is cut by the residue period of (v, u) modulo
    lcm(delta_p, mu) into progressions with constant divisibility; every
    admissible progression contributes two cone tails and finitely many
    explicit middle points.
    """
    branches: list[object] = []
    if red.n == 0:
        mapped = red.backmap(0, 0)
        if mapped is not None:
            branches.append(FinitePair(*mapped))
        return branches
    data = gen_pell_classes(red.d, red.n)
    d = red.d
    x1, y1 = data.fundamental
    unit: Mat2 = ((x1, d * y1), (y1, x1))
    unit_inv = _mat_inv2_det1(unit)
    big_l = abs(red.delta_p) * abs(red.mu) // gcd(abs(red.delta_p), abs(red.mu))

    bases = []
    seen_orbits: set[tuple[int, int]] = set()
    for rep in data.class_reps:
        for base in (rep, (-rep[0], -rep[1])):
            key = _orbit_min(d, base)
            if key not in seen_orbits:
                seen_orbits.add(key)
                bases.append(key)

    for base in sorted(bases):
        state0 = (base[0] % big_l, base[1] % big_l)
        point = base
        period = 0
        while True:
            point = _mat_vec2(unit, point)
            period += 1
            if (point[0] % big_l, point[1] % big_l) == state0:
                break
            if period > 4 * big_l * big_l:
                raise QuadraticError("residue period search overran its bound")
        step_pos = _mat_pow2(unit, period)
        step_neg = _mat_pow2(unit_inv, period)
        start = base
        for _ in range(period):
            if red.backmap(*start) is not None:
                bp, tail_pos = _tail_cone_branch(red, start, step_pos, +1)
                neg_start = _mat_vec2(step_neg, start)
                bn, tail_neg = _tail_cone_branch(red, neg_start, step_neg, -1)
                branches.extend((tail_pos, tail_neg))
                middle = start
                for _ in range(bp):
                    mapped = red.backmap(*middle)
                    if mapped is None:
                        raise QuadraticError("middle point lost divisibility")
                    branches.append(FinitePair(*mapped))
                    middle = _mat_vec2(step_pos, middle)
                middle = neg_start
                for _ in range(bn):
                    mapped = red.backmap(*middle)
                    if mapped is None:
                        raise QuadraticError("middle point lost divisibility")
                    branches.append(FinitePair(*mapped))
                    middle = _mat_vec2(step_neg, middle)
            start = _mat_vec2(unit, start)
    return branches


# ---------------------------------------------------------------------------
# Degenerate cases

def _coset_families(matrix: Sequence[Sequence[int]], rhs: Sequence[int]) -> list[object]:
    coset = solve_lattice(LinearSystem(tuple(tuple(r) for r in matrix), tuple(rhs)))
    if coset is None:
        return []
    return [AffineFamily(tuple(point), tuple(pumps))
            for point, pumps in orthant_families(coset)]


def _linear_branches(eq: QuadraticEq) -> list[object]:
    d, e, f = eq.delta, eq.epsilon, eq.zeta
    return _coset_families([[d, e]], [-f])


def _completion(eq: QuadraticEq) -> LagrangeReduction:
    """Square completion for alpha != 0, D != 0; no audit, used internally."""
    a, b, c, d, e, f = eq.coefficients()
    disc = discriminant(eq)
    n = (2 * a * e - b * d) ** 2 + disc * (4 * a * f - d * d)
    alpha_p, beta_p, gamma_p, delta_p = _simplify_backmap(
        -b, disc, -(disc * d + b * (2 * a * e - b * d)), 2 * a * disc)
    return LagrangeReduction(disc, n, alpha_p, beta_p, gamma_p, delta_p,
                             b * d - 2 * a * e, disc)


def _elliptic_branches(eq: QuadraticEq) -> list[object]:
    red = _completion(eq)
    branches: list[object] = []
    if red.n < 0:
        return branches
    bound = isqrt(red.n // (-red.d)) if red.d < 0 else 0
    for u in range(0, bound + 1):
        t = red.n + red.d * u * u
        if t < 0:
            continue
        v = isqrt(t)
        if v * v != t:
            continue
        for sv in (1, -1) if v else (1,):
            for su in (1, -1) if u else (1,):
                mapped = red.backmap(sv * v, su * u)
                if mapped is not None:
                    if eq.value(*mapped) != 0:
                        raise QuadraticError("elliptic backmap broke")
                    branches.append(FinitePair(*mapped))
    return branches


def _swap_xy(eq: QuadraticEq) -> QuadraticEq:
    return QuadraticEq(eq.gamma, eq.beta, eq.alpha, eq.epsilon, eq.delta, eq.zeta)


def _swap_branch(br: object) -> object:
    if isinstance(br, FinitePair):
        return FinitePair(br.y, br.x)
    if isinstance(br, AffineFamily):
        return AffineFamily((br.point[1], br.point[0]),
                            tuple((q, p) for p, q in br.pumps))
    if isinstance(br, PolyTail):
        return PolyTail(br.y_sign, br.y_abc, br.x_sign, br.x_abc)
    raise QuadraticError(f"cannot swap branch {br!r}")


def _poly_eval(abc: tuple[int, int, int], t: int) -> int:
    return abc[0] * t * t + abc[1] * t + abc[2]


def _eventual_sign(abc: tuple[int, int, int]) -> int:
    for coef in abc:
        if coef:
            return 1 if coef > 0 else -1
    return 1


def _tail_ready(abc: tuple[int, int, int], sign: int) -> bool:
    a2, b1, c0 = (sign * c for c in abc)
    return a2 >= 0 and a2 + b1 >= 0 and c0 >= 0


def _shift_poly(abc: tuple[int, int, int], t0: int) -> tuple[int, int, int]:
    a2, b1, c0 = abc
    return (a2, 2 * a2 * t0 + b1, _poly_eval(abc, t0))


def _reflect_poly(abc: tuple[int, int, int], t0: int) -> tuple[int, int, int]:
    # p(-t0 - m) as a polynomial in m
    a2, b1, c0 = abc
    return (a2, 2 * a2 * t0 - b1, _poly_eval(abc, -t0))


def _poly_pair_branches(x_abc: tuple[int, int, int],
                        y_abc: tuple[int, int, int]) -> list[object]:
    """Cover {(x(t), y(t)) : t in Z} by two delta-emission tails plus
    explicit middle points."""
    branches: list[object] = []

    def fit(shifter) -> tuple[int, PolyTail]:
        t0 = 0
        while t0 < 10 ** 6:
            xs = shifter(x_abc, t0)
            ys = shifter(y_abc, t0)
            sx = _eventual_sign(xs)
            sy = _eventual_sign(ys)
            if _tail_ready(xs, sx) and _tail_ready(ys, sy):
                return t0, PolyTail(sx, tuple(sx * c for c in xs),
                                    sy, tuple(sy * c for c in ys))
            t0 += 1
        raise QuadraticError("polynomial tail failed to stabilize")

    t_pos, tail_pos = fit(_shift_poly)
    t_neg, tail_neg = fit(_reflect_poly)
    branches.extend((tail_pos, tail_neg))
    for t in range(-t_neg + 1, t_pos):
        branches.append(FinitePair(_poly_eval(x_abc, t), _poly_eval(y_abc, t)))
    return branches


def _parabolic_branches(eq: QuadraticEq) -> list[object]:
    a, b, c, d, e, f = eq.coefficients()
    if a == 0:
        # discriminant zero with alpha = 0 forces beta = 0 and gamma != 0
        return [_swap_branch(br) for br in _parabolic_branches(_swap_xy(eq))]
    g = 4 * a * e - 2 * b * d
    k0 = 4 * a * f - d * d
    branches: list[object] = []
    if g == 0:
        if -k0 < 0:
            return branches
        root = isqrt(-k0)
        if root * root != -k0:
            return branches
        for u0 in sorted({root, -root}):
            branches.extend(_coset_families([[2 * a, b]], [u0 - d]))
        return branches
    pi = 2 * abs(a * g)
    for r in range(pi):
        if (r * r + k0) % g:
            continue
        y0 = -((r * r + k0) // g)
        if (r - b * y0 - d) % (2 * a):
            continue
        ay = -(pi * pi) // g
        by = -(2 * r * pi) // g
        cy = y0
        assert pi * pi % g == 0 and (2 * r * pi) % g == 0
        num_a = -b * ay
        num_b = pi - b * by
        num_c = r - b * cy - d
        assert num_a % (2 * a) == 0 and num_b % (2 * a) == 0 and num_c % (2 * a) == 0
        x_abc = (num_a // (2 * a), num_b // (2 * a), num_c // (2 * a))
        branches.extend(_poly_pair_branches(x_abc, (ay, by, cy)))
    return branches


def _divisor_pairs(nu: int) -> list[tuple[int, int]]:
    out = []
    for t in range(1, isqrt(abs(nu)) + 1):
        if nu % t == 0:
            out.append(t)
            out.append(abs(nu) // t)
    divisors = sorted(set(out))
    pairs = []
    for d1 in divisors:
        for s in (1, -1):
            pairs.append((s * d1, nu // (s * d1)))
    return sorted(set(pairs))


def _factorable_branches(eq: QuadraticEq) -> list[object]:
    a, b, c, d, e, f = eq.coefficients()
    if a == 0 and c == 0:
        nu = e * d - b * f
        branches: list[object] = []
        if nu != 0:
            for d1, d2 in _divisor_pairs(nu):
                if (d1 - e) % b == 0 and (d2 - d) % b == 0:
                    x, y = (d1 - e) // b, (d2 - d) // b
                    if eq.value(x, y) != 0:
                        raise QuadraticError("divisor solution failed recheck")
                    branches.append(FinitePair(x, y))
            return branches
        branches.extend(_coset_families([[b, 0]], [-e]))
        branches.extend(_coset_families([[0, b]], [-d]))
        return branches
    if a == 0:
        return [_swap_branch(br) for br in _factorable_branches(_swap_xy(eq))]
    s = isqrt(discriminant(eq))
    p_hat = d * s + b * d - 2 * a * e
    q_hat = d * s - b * d + 2 * a * e
    nu = p_hat * q_hat - 4 * a * f * s * s
    for x, y in ((0, 0), (1, 2), (-3, 5)):
        f1 = 2 * a * s * x + s * (b - s) * y + q_hat
        f2 = 2 * a * s * x + s * (b + s) * y + p_hat
        if f1 * f2 - nu != 4 * a * s * s * eq.value(x, y):
            raise QuadraticError("factorization identity failed")
    branches = []
    if nu != 0:
        for d1, d2 in _divisor_pairs(nu):
            num_y = d2 - d1 - p_hat + q_hat
            if num_y % (2 * s * s):
                continue
            y = num_y // (2 * s * s)
            num_x = d1 - q_hat - s * (b - s) * y
            if num_x % (2 * a * s):
                continue
            x = num_x // (2 * a * s)
            if eq.value(x, y) == 0:
                branches.append(FinitePair(x, y))
        return branches
    branches.extend(_coset_families([[2 * a * s, s * (b - s)]], [-q_hat]))
    branches.extend(_coset_families([[2 * a * s, s * (b + s)]], [-p_hat]))
    return branches


def quadratic_solution_language(eq: QuadraticEq, audit_radius: int = 1000) -> Edt0lSystem:
    """EDT0L system for {a^x # a^y : (x, y) solves the equation}."""
    route = lagrange_reduce(eq, audit_radius)
    if isinstance(route, LagrangeReduction):
        branches = _hyperbolic_branches(route)
    elif route.kind == "linear":
        branches = _linear_branches(eq)
    elif route.kind == "elliptic":
        branches = _elliptic_branches(eq)
    elif route.kind == "parabolic":
        branches = _parabolic_branches(eq)
    elif route.kind == "factorable":
        branches = _factorable_branches(eq)
    else:
        raise QuadraticError(f"unroutable case {route!r}")
    return assemble_pair_system(branches)


def decode_pair_word(word: Sequence[str]) -> tuple[int, int]:
    """Parse a^x # a^y (inverse letters for negatives) back to integers."""
    if HASH not in word:
        raise QuadraticError("missing separator")
    cut = list(word).index(HASH)
    sides = (word[:cut], word[cut + 1:])
    out = []
    for side in sides:
        letters = set(side)
        if letters - {"a", "a^-1"} or len(letters) > 1:
            if letters - {"a"} and letters - {"a^-1"}:
                raise QuadraticError(f"mixed letters in {side!r}")
        out.append(len(side) if "a^-1" not in letters else -len(side))
    return out[0], out[1]


def pell_data_to_json(data: PellData) -> str:
    import json
    return json.dumps({"d": data.d, "n": data.n,
                       "fundamental": list(data.fundamental),
                       "class_reps": [list(r) for r in data.class_reps]},
                      sort_keys=True)


def reduction_to_json(red: LagrangeReduction) -> str:
    import json
    return json.dumps({"d": red.d, "n": red.n,
                       "backmap": {"alpha": red.alpha_p, "beta": red.beta_p,
                                   "gamma": red.gamma_p, "delta": red.delta_p,
                                   "lambda": red.lam, "mu": red.mu}},
                      sort_keys=True)
