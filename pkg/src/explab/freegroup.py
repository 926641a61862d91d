"""Exact combinatorics of the free group F_k.

Words are kept freely reduced at all times and carry no floating point.
Letters are encoded as small ints: generator j -> code 2j, its inverse ->
code 2j+1, so the fixed enumeration order a < a^-1 < b < b^-1 < ... is just
integer order and inversion is ``code ^ 1``.  ASCII form uses lower case for
generators and upper case for inverses ("abAB"); "1" is the identity.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class RewritingError(Exception):
    """Tracing or rewriting through a subgroup graph failed unexpectedly."""


def inverse_code(code: int) -> int:
    return code ^ 1


@dataclass(frozen=True, slots=True)
class Letter:
    """A single generator or inverse generator: gen index plus sign."""

    gen: int
    sign: int

    def __post_init__(self):
        if self.gen < 0:
            raise ValueError(f"generator index must be >= 0, got {self.gen}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def code(self) -> int:
        return 2 * self.gen + (self.sign < 0)

    @classmethod
    def from_code(cls, code: int) -> "Letter":
        return cls(code >> 1, -1 if code & 1 else 1)

    def inverse(self) -> "Letter":
        return Letter(self.gen, -self.sign)

    def __str__(self) -> str:
        ch = chr(ord("a") + self.gen)
        return ch.upper() if self.sign < 0 else ch


def _check_reduced(codes: Sequence[int]) -> None:
    for x, y in zip(codes, codes[1:]):
        if x == y ^ 1:
            raise ValueError(f"word is not freely reduced at pair {x},{y}")


@dataclass(frozen=True, slots=True)
class ReducedWord:
    """A freely reduced word; the exact symbolic form of a group element."""

    codes: tuple[int, ...] = ()

    def __post_init__(self):
        _check_reduced(self.codes)

    # -- constructors -------------------------------------------------

    @classmethod
    def _trusted(cls, codes: tuple[int, ...]) -> "ReducedWord":
        # fast path for codes already known to be reduced (internal use)
        obj = object.__new__(cls)
        object.__setattr__(obj, "codes", codes)
        return obj

    @classmethod
    def identity(cls) -> "ReducedWord":
        return cls(())

    @classmethod
    def from_letters(cls, letters: Iterable[Letter]) -> "ReducedWord":
        return cls(tuple(l.code for l in letters))

    @classmethod
    def from_str(cls, text: str) -> "ReducedWord":
        """Parse ASCII form: 'a'..'z' generators, 'A'..'Z' inverses, '1' identity."""
        if text == "1" or text == "":
            return cls(())
        codes = []
        for ch in text:
            if "a" <= ch <= "z":
                codes.append(2 * (ord(ch) - ord("a")))
            elif "A" <= ch <= "Z":
                codes.append(2 * (ord(ch) - ord("A")) + 1)
            else:
                raise ValueError(f"invalid word character {ch!r}")
        return cls(tuple(codes))

    # -- basic queries ------------------------------------------------

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self) -> Iterator[Letter]:
        return (Letter.from_code(c) for c in self.codes)

    def __bool__(self) -> bool:
        return bool(self.codes)

    @property
    def letters(self) -> tuple[Letter, ...]:
        return tuple(self)

    def max_generator(self) -> int:
        """Largest generator index used; -1 for the identity."""
        return max((c >> 1 for c in self.codes), default=-1)

    def shortlex_key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.codes), self.codes)

    def __str__(self) -> str:
        if not self.codes:
            return "1"
        return "".join(str(Letter.from_code(c)) for c in self.codes)

    def __repr__(self) -> str:
        return f"ReducedWord({str(self)!r})"

    # -- group operations ----------------------------------------------

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        return concat(self, other)

    def __invert__(self) -> "ReducedWord":
        return invert(self)

    def __pow__(self, n: int) -> "ReducedWord":
        return power(self, n)

    def conjugated_by(self, g: "ReducedWord") -> "ReducedWord":
        """g^-1 * self * g."""
        return concat(concat(invert(g), self), g)


IDENTITY = ReducedWord.identity()


def _concat_codes(c1: tuple[int, ...], c2: tuple[int, ...]) -> tuple[int, ...]:
    i, j = len(c1), 0
    n2 = len(c2)
    while i > 0 and j < n2 and c1[i - 1] == c2[j] ^ 1:
        i -= 1
        j += 1
    return c1[:i] + c2[j:]


def concat(w1: ReducedWord, w2: ReducedWord) -> ReducedWord:
    """Freely reduced product w1 * w2."""
    return ReducedWord._trusted(_concat_codes(w1.codes, w2.codes))


def invert(w: ReducedWord) -> ReducedWord:
    """Inverse word: reversed letters with flipped signs."""
    return ReducedWord._trusted(tuple(c ^ 1 for c in reversed(w.codes)))


def power(w: ReducedWord, n: int) -> ReducedWord:
    if n < 0:
        return power(invert(w), -n)
    out = IDENTITY
    for _ in range(n):
        out = concat(out, w)
    return out


def cyclic_reduce(w: ReducedWord) -> tuple[ReducedWord, ReducedWord]:
    """Split w = conjugator * core * conjugator^-1 with core cyclically reduced.

    Peels matching inverse first/last pairs until the first letter is no
    longer the inverse of the last.
    """
    codes = w.codes
    i, j = 0, len(codes)
    while j - i >= 2 and codes[i] == codes[j - 1] ^ 1:
        i += 1
        j -= 1
    return ReducedWord._trusted(codes[i:j]), ReducedWord._trusted(codes[:i])


def primitive_root(w: ReducedWord) -> tuple[ReducedWord, int]:
    """Maximal decomposition w = root**exponent; root is not a proper power.

    Powers of a cyclically reduced word are literal letter repetitions, so
    after cyclic reduction it suffices to test divisors of the core length.
    """
    if not w:
        raise ValueError("identity has no primitive root")
    core, conj = cyclic_reduce(w)
    n = len(core)
    exponent = 1
    root_codes = core.codes
    for e in range(n, 1, -1):
        if n % e:
            continue
        block = core.codes[: n // e]
        if block * e == core.codes:
            exponent = e
            root_codes = block
            break
    root = concat(concat(conj, ReducedWord(root_codes)), invert(conj))
    return root, exponent


def words_of_length(k: int, length: int) -> Iterator[ReducedWord]:
    """All reduced words of exactly the given length, in lexicographic order."""
    if k < 1:
        raise ValueError("rank must be >= 1")
    if length == 0:
        yield IDENTITY
        return
    ncodes = 2 * k
    stack: list[int] = []

    def rec(depth: int) -> Iterator[ReducedWord]:
        forbidden = stack[-1] ^ 1 if stack else -1
        for c in range(ncodes):
            if c == forbidden:
                continue
            stack.append(c)
            if depth == length:
                yield ReducedWord._trusted(tuple(stack))
            else:
                yield from rec(depth + 1)
            stack.pop()

    yield from rec(1)


def enumerate_words(k: int, max_length: int) -> Iterator[ReducedWord]:
    """Every reduced word of length <= max_length exactly once, shortlex order.

    Count at length l is 2k * (2k-1)**(l-1) for l >= 1.
    """
    if k < 2:
        raise ValueError("rank must be >= 2")
    if max_length < 0:
        raise ValueError("max length must be >= 0")
    for l in range(max_length + 1):
        yield from words_of_length(k, l)


def count_words(k: int, length: int) -> int:
    """Closed-form number of reduced words of exactly the given length."""
    if length == 0:
        return 1
    return 2 * k * (2 * k - 1) ** (length - 1)


# ----------------------------------------------------------------------
# Homomorphisms onto small quotients; kernels model normal subgroups.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteTarget:
    """Finite group given by its multiplication table.

    ``table[x][y]`` is the product xy; ``identity`` indexes the neutral
    element.  Well-formedness (identity row/column, inverses, associativity)
    is checked on construction -- targets here are tiny.
    """

    table: tuple[tuple[int, ...], ...]
    identity: int = 0

    def __post_init__(self):
        n = len(self.table)
        e = self.identity
        if not 0 <= e < n:
            raise ValueError("identity index out of range")
        for row in self.table:
            if len(row) != n or any(not 0 <= x < n for x in row):
                raise ValueError("multiplication table is not square over 0..n-1")
        if any(self.table[e][x] != x or self.table[x][e] != x for x in range(n)):
            raise ValueError("identity row/column mismatch")
        for x in range(n):
            if all(self.table[x][y] != e for y in range(n)):
                raise ValueError(f"element {x} has no inverse")
        for x, y, z in itertools.product(range(n), repeat=3):
            if self.table[self.table[x][y]][z] != self.table[x][self.table[y][z]]:
                raise ValueError("multiplication table is not associative")

    @property
    def size(self) -> int:
        return len(self.table)

    def mul(self, x: int, y: int) -> int:
        return self.table[x][y]

    def inv(self, x: int) -> int:
        e = self.identity
        return next(y for y in range(self.size) if self.table[x][y] == e)


@dataclass(frozen=True)
class FreeAbelianTarget:
    """Free-abelian group Z^rank; elements are integer tuples."""

    rank: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be >= 0")

    def mul(self, x: tuple, y: tuple) -> tuple:
        return tuple(a + b for a, b in zip(x, y))

    def inv(self, x: tuple) -> tuple:
        return tuple(-a for a in x)

    @property
    def identity(self) -> tuple:
        return (0,) * self.rank


@dataclass(frozen=True)
class QuotientHom:
    """Homomorphism from F_k onto a small quotient; the kernel is the
    normal subgroup under study."""

    k: int
    target: FiniteTarget | FreeAbelianTarget
    images: tuple

    def __post_init__(self):
        if len(self.images) != self.k:
            raise ValueError("need one image per generator")
        if isinstance(self.target, FiniteTarget):
            for img in self.images:
                if not 0 <= img < self.target.size:
                    raise ValueError(f"image {img} outside target")
        else:
            for img in self.images:
                if len(tuple(img)) != self.target.rank:
                    raise ValueError("abelian image has wrong rank")

    def image_of_code(self, code: int):
        img = self.images[code >> 1]
        return self.target.inv(img) if code & 1 else img

    def image(self, w: ReducedWord):
        out = self.target.identity
        mul = self.target.mul
        for c in w.codes:
            out = mul(out, self.image_of_code(c))
        return out

    def is_kernel_member(self, w: ReducedWord) -> bool:
        return self.image(w) == self.target.identity

    # -- standard constructions ---------------------------------------

    @classmethod
    def abelianization(cls, k: int) -> "QuotientHom":
        """F_k -> Z^k; kernel is the commutator subgroup."""
        target = FreeAbelianTarget(k)
        unit = lambda j: tuple(1 if i == j else 0 for i in range(k))
        return cls(k, target, tuple(unit(j) for j in range(k)))

    @classmethod
    def mod_cyclic(cls, k: int, modulus: int, images: Sequence[int]) -> "QuotientHom":
        """F_k -> Z/modulus with the given generator images."""
        if modulus < 1:
            raise ValueError("modulus must be >= 1")
        table = tuple(
            tuple((x + y) % modulus for y in range(modulus)) for x in range(modulus)
        )
        return cls(k, FiniteTarget(table, 0), tuple(i % modulus for i in images))

    @classmethod
    def trivial(cls, k: int) -> "QuotientHom":
        """F_k -> 1; the kernel is the whole group."""
        return cls.mod_cyclic(k, 1, [0] * k)


def hom_image(w: ReducedWord, hom: QuotientHom):
    """Image of w under the homomorphism plus a kernel-membership flag."""
    img = hom.image(w)
    return img, img == hom.target.identity


# ----------------------------------------------------------------------
# Stallings graphs: membership and coset machinery for f.g. subgroups.
# ----------------------------------------------------------------------


class SubgroupGraph:
    """Folded labeled graph recognizing membership in H = <generators>.

    States are ints with base state 0; ``delta[(state, code)]`` is the
    deterministic transition.  The base loop language is exactly H.
    """

    def __init__(self, generators: Sequence[ReducedWord]):
        if not generators:
            raise ValueError("generator list must be nonempty")
        self.generators = tuple(generators)
        self._build()
        self._rep_cache: dict[tuple[int, int | None], tuple[int, ...]] = {}
        self._gen_edge_map: dict[int, tuple[int, int]] | None = None

    # -- construction ---------------------------------------------------

    def _build(self) -> None:
        # wedge of loops, then fold until deterministic
        adj: list[dict[int, set[int]]] = [dict()]

        def new_state() -> int:
            adj.append(dict())
            return len(adj) - 1

        def add_edge(u: int, c: int, v: int) -> None:
            adj[u].setdefault(c, set()).add(v)
            adj[v].setdefault(c ^ 1, set()).add(u)

        for g in self.generators:
            cur = 0
            codes = g.codes
            for i, c in enumerate(codes):
                nxt = 0 if i == len(codes) - 1 else new_state()
                add_edge(cur, c, nxt)
                cur = nxt

        def merge(keep: int, drop: int) -> None:
            if keep == drop:
                return
            edges = [(c, v) for c, vs in adj[drop].items() for v in vs]
            for c, v in edges:
                adj[v][c ^ 1].discard(drop)
            adj[drop] = {}
            for c, v in edges:
                add_edge(keep, c, keep if v == drop else v)

        folded = False
        while not folded:
            folded = True
            for u in range(len(adj)):
                for c, vs in adj[u].items():
                    if len(vs) > 1:
                        it = sorted(vs)
                        for other in it[1:]:
                            merge(it[0], other)
                        folded = False
                        break
                if not folded:
                    break

        # compact live states; 0 (the base) stays first
        live = [u for u in range(len(adj)) if adj[u]]
        if not live or live[0] != 0:
            live = [0] + [u for u in live if u != 0]
        index = {u: i for i, u in enumerate(live)}
        self.n_states = len(live)
        self.delta: dict[tuple[int, int], int] = {}
        for u in live:
            for c, vs in adj[u].items():
                (v,) = vs
                self.delta[(index[u], c)] = index[v]

        self._build_tree()

    def _build_tree(self) -> None:
        # BFS spanning tree from base, children in code order; deterministic.
        parent: dict[int, tuple[int, int]] = {}
        seen = {0}
        tree_edges: set[tuple[int, int]] = set()
        codes_present = sorted({c for (_, c) in self.delta})
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for c in codes_present:
                v = self.delta.get((u, c))
                if v is not None and v not in seen:
                    seen.add(v)
                    parent[v] = (u, c)
                    tree_edges.add((u, c))
                    tree_edges.add((v, c ^ 1))
                    queue.append(v)
        self._tree_parent = parent
        # canonical directed form of each non-tree edge: smaller (state, code) end
        nontree = []
        for (u, c), v in sorted(self.delta.items()):
            if (u, c) in tree_edges:
                continue
            if (u, c) <= (v, c ^ 1):
                nontree.append((u, c))
        self.nontree_edges = tuple(nontree)

    @property
    def rank(self) -> int:
        """First Betti number of the graph = rank of H when the generators
        are independent."""
        return len(self.nontree_edges)

    # -- membership -----------------------------------------------------

    def trace(self, w: ReducedWord, start: int = 0) -> int | None:
        s: int | None = start
        for c in w.codes:
            s = self.delta.get((s, c))
            if s is None:
                return None
        return s

    def is_member(self, w: ReducedWord) -> bool:
        return self.trace(w) == 0

    # -- coset keys and canonical representatives ------------------------

    def right_coset_key(self, w: ReducedWord) -> tuple[int, tuple[int, ...]]:
        """Stable key identifying the right coset Hw: the state where the
        trace of w leaves the graph plus the untraced tail (state of the
        completed Schreier automaton)."""
        s = 0
        codes = w.codes
        for i, c in enumerate(codes):
            nxt = self.delta.get((s, c))
            if nxt is None:
                return (s, codes[i:])
            s = nxt
        return (s, ())

    def left_coset_key(self, w: ReducedWord) -> tuple[int, tuple[int, ...]]:
        """Key identifying the left coset wH (= right coset key of w^-1)."""
        return self.right_coset_key(invert(w))

    def _least_path_word(self, start: int, forbidden_first: int | None) -> tuple[int, ...]:
        """Shortlex-least reduced word read along a path start -> base,
        with a constrained first letter.  BFS over (state, last code)."""
        key = (start, forbidden_first)
        if key in self._rep_cache:
            return self._rep_cache[key]
        if start == 0:
            # the empty path is valid regardless of the first-letter bound
            self._rep_cache[key] = ()
            return ()
        codes = sorted({c for (_, c) in self.delta})
        # frontier in shortlex order of accumulated words
        frontier: list[tuple[int, int, tuple[int, ...]]] = []
        seen: set[tuple[int, int]] = set()
        for c in codes:
            if c == forbidden_first:
                continue
            v = self.delta.get((start, c))
            if v is None:
                continue
            if v == 0:
                self._rep_cache[key] = (c,)
                return (c,)
            if (v, c) not in seen:
                seen.add((v, c))
                frontier.append((v, c, (c,)))
        while frontier:
            nxt: list[tuple[int, int, tuple[int, ...]]] = []
            for state, last, word in frontier:
                for c in codes:
                    if c == last ^ 1:
                        continue
                    v = self.delta.get((state, c))
                    if v is None:
                        continue
                    if v == 0:
                        result = word + (c,)
                        self._rep_cache[key] = result
                        return result
                    if (v, c) not in seen:
                        seen.add((v, c))
                        nxt.append((v, c, word + (c,)))
            frontier = nxt
        raise RewritingError("graph has no path back to base state")

    def coset_canonical_rep(self, g: ReducedWord) -> ReducedWord:
        """Shortlex-least w with w^-1 g in H (canonical choice for gH)."""
        sigma, tail = self.left_coset_key(g)
        # coset elements are tail^-1 * (path sigma -> base); the tail prefix
        # is shared, so minimizing the path word minimizes the element.
        forbidden = tail[0] if tail else None
        path = self._least_path_word(sigma, forbidden)
        inv_tail = tuple(c ^ 1 for c in reversed(tail))
        return ReducedWord(inv_tail + path)

    # -- rewriting over the given generators ------------------------------

    def _generator_edge_map(self) -> dict[int, tuple[int, int]]:
        """Map non-tree edge index -> (generator index, sign), requiring each
        generator to cross exactly one distinct non-tree edge once."""
        if self._gen_edge_map is not None:
            return self._gen_edge_map
        edge_index = {e: i for i, e in enumerate(self.nontree_edges)}
        mapping: dict[int, tuple[int, int]] = {}
        for gi, g in enumerate(self.generators):
            crossings = self._nontree_crossings(g, edge_index)
            if len(crossings) != 1:
                raise RewritingError(
                    f"generator {g} crosses {len(crossings)} non-tree edges; "
                    "rewriting needs exactly one per generator"
                )
            ei, sign = crossings[0]
            if ei in mapping:
                raise RewritingError(
                    "two generators cross the same non-tree edge; cannot rewrite"
                )
            mapping[ei] = (gi, sign)
        if len(mapping) != len(self.nontree_edges):
            raise RewritingError("some non-tree edge is not hit by any generator")
        self._gen_edge_map = mapping
        return mapping

    def _nontree_crossings(
        self, w: ReducedWord, edge_index: dict[tuple[int, int], int]
    ) -> list[tuple[int, int]]:
        out = []
        s = 0
        for c in w.codes:
            v = self.delta.get((s, c))
            if v is None:
                raise RewritingError(f"word {w} is not in the subgroup")
            if (s, c) in edge_index:
                out.append((edge_index[(s, c)], 1))
            elif (v, c ^ 1) in edge_index:
                out.append((edge_index[(v, c ^ 1)], -1))
            s = v
        if s != 0:
            raise RewritingError(f"word {w} is not in the subgroup")
        return out

    def rewrite_in_generators(self, w: ReducedWord) -> list[tuple[int, int]]:
        """Express w in H as a reduced sequence of (generator index, sign).

        The loop of w is immersed, so the resulting sequence is reduced as a
        word over the generators.
        """
        mapping = self._generator_edge_map()
        edge_index = {e: i for i, e in enumerate(self.nontree_edges)}
        crossings = self._nontree_crossings(w, edge_index)
        letters = []
        for ei, sign in crossings:
            gi, gsign = mapping[ei]
            letters.append((gi, sign * gsign))
        for (g1, s1), (g2, s2) in zip(letters, letters[1:]):
            if g1 == g2 and s1 == -s2:
                raise RewritingError("traced generator word is not reduced")
        return letters

    def expand_generator_word(self, letters: Sequence[tuple[int, int]]) -> ReducedWord:
        """Multiply out a sequence of (generator index, sign) into F_k."""
        out = IDENTITY
        for gi, sign in letters:
            g = self.generators[gi]
            out = concat(out, g if sign > 0 else invert(g))
        return out


def stallings_build(generators: Sequence[ReducedWord]) -> SubgroupGraph:
    """Folded subgroup graph for H = <generators>."""
    return SubgroupGraph(generators)


def subgroup_member(w: ReducedWord, graph: SubgroupGraph) -> bool:
    return graph.is_member(w)


def coset_canonical_rep(g: ReducedWord, graph: SubgroupGraph) -> ReducedWord:
    return graph.coset_canonical_rep(g)


def malnormal_violations(
    graph: SubgroupGraph, bound: int, k: int | None = None
) -> list[tuple[ReducedWord, ReducedWord]]:
    """All pairs (g, h) with |g|,|h| <= bound, g not in H, h != 1 in H and
    g h g^-1 in H.  An empty list is a bounded certificate only.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if k is None:
        k = max(2, max(g.max_generator() for g in graph.generators) + 1)
    members = [
        h for h in enumerate_words(k, bound) if h and graph.is_member(h)
    ]
    out = []
    for g in enumerate_words(k, bound):
        if graph.is_member(g):
            continue
        gi = invert(g)
        for h in members:
            if graph.is_member(concat(concat(g, h), gi)):
                out.append((g, h))
    return out
