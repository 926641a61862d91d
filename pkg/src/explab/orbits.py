"""Bulk orbit enumeration: tight-loop tree walks with process-level
parallelism.

The shortlex tree is partitioned into the subtrees below every reduced
prefix of a fixed depth; each subtree is one task.  Partial results merge
in prefix order, so every aggregate is bit-identical for any worker count.
Worker payloads are plain tuples (codes, complex pairs) to stay picklable
under any multiprocessing start method.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .freegroup import QuotientHom, ReducedWord, FiniteTarget
from .schottky import MarkedGroup

DEFAULT_PARTITION_DEPTH = 2


def resolve_workers(workers: int | None) -> int:
    """Explicit count, else the EXPLAB_WORKERS env var, else 1."""
    if workers is None:
        env = os.environ.get("EXPLAB_WORKERS", "").strip()
        workers = int(env) if env else 1
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return workers


def _prefixes(k: int, depth: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = [()]
    for _ in range(depth):
        nxt = []
        for p in out:
            forbidden = p[-1] ^ 1 if p else -1
            for c in range(2 * k):
                if c != forbidden:
                    nxt.append(p + (c,))
        out = nxt
    return out


def _hom_payload(hom: QuotientHom):
    if isinstance(hom.target, FiniteTarget):
        img_by_code = tuple(hom.image_of_code(c) for c in range(2 * hom.k))
        return ("finite", hom.target.table, hom.target.identity, img_by_code)
    deltas = []
    for j in range(hom.k):
        img = tuple(hom.images[j])
        deltas.append(img)
        deltas.append(tuple(-x for x in img))
    return ("abelian", hom.target.rank, tuple(deltas))


def _prefix_matrix(mats, prefix):
    a, b = 1 + 0j, 0j
    for c in prefix:
        ga, gb = mats[c]
        a, b = a * ga + b * gb.conjugate(), a * gb + b * ga.conjugate()
    return a, b


def _prefix_hom_state(payload, prefix):
    if payload[0] == "finite":
        _, table, ident, img = payload
        st = ident
        for c in prefix:
            st = table[st][img[c]]
        return st
    _, rank, deltas = payload
    st = [0] * rank
    for c in prefix:
        d = deltas[c]
        for i in range(rank):
            st[i] += d[i]
    return st


# ----------------------------------------------------------------------
# task bodies (top level, picklable)
# ----------------------------------------------------------------------


def _task_collect(args):
    """Per-length displacement arrays for one subtree (prefix included)."""
    mats, k, prefix, L, frame = args
    p = len(prefix)
    sizes = [1] + [(2 * k - 1) ** (l - p) for l in range(p + 1, L + 1)]
    arrs = [np.empty(s) for s in sizes]
    idx = [0] * (L - p + 1)
    log = math.log
    ncodes = 2 * k
    ga = [m[0] for m in mats]
    gb = [m[1] for m in mats]

    if frame is None:
        a0, b0 = _prefix_matrix(mats, prefix)
        arrs[0][0] = 2.0 * log(abs(a0) + abs(b0))
        fa = fb = None
    else:
        fa, fb = frame
        fia, fib = fa.conjugate(), -fb
        a0, b0 = _prefix_matrix(mats, prefix)
        # maintain U = frame * M; displacement read off U * frame^-1
        a0, b0 = fa * a0 + fb * b0.conjugate(), fa * b0 + fb * a0.conjugate()
        va = a0 * fia + b0 * fib.conjugate()
        vb = a0 * fib + b0 * fia.conjugate()
        arrs[0][0] = 2.0 * log(abs(va) + abs(vb))

    def rec(a, b, forbidden, depth):
        rel = depth - p + 1
        arr = arrs[rel]
        i = idx[rel]
        deeper = depth + 1 < L
        for c in range(ncodes):
            if c == forbidden:
                continue
            ga_, gb_ = ga[c], gb[c]
            a2 = a * ga_ + b * gb_.conjugate()
            b2 = a * gb_ + b * ga_.conjugate()
            if frame is None:
                arr[i] = 2.0 * log(abs(a2) + abs(b2))
            else:
                va = a2 * fia + b2 * fib.conjugate()
                vb = a2 * fib + b2 * fia.conjugate()
                arr[i] = 2.0 * log(abs(va) + abs(vb))
            i += 1
            if deeper:
                idx[rel] = i
                rec(a2, b2, c ^ 1, depth + 1)
                i = idx[rel]
        idx[rel] = i

    if L > p:
        forbidden = prefix[-1] ^ 1 if prefix else -1
        rec(a0, b0, forbidden, p)
    return arrs


def _task_kernel(args):
    """Kernel-filtered displacement lists for one subtree."""
    mats, k, prefix, L, payload = args
    p = len(prefix)
    per = [[] for _ in range(L - p + 1)]
    appends = [x.append for x in per]
    log = math.log
    ncodes = 2 * k
    ga = [m[0] for m in mats]
    gb = [m[1] for m in mats]
    a0, b0 = _prefix_matrix(mats, prefix)
    st0 = _prefix_hom_state(payload, prefix)

    finite = payload[0] == "finite"
    if finite:
        _, table, ident, img = payload
        if st0 == ident:
            appends[0](2.0 * log(abs(a0) + abs(b0)))

        def rec(a, b, forbidden, depth, st):
            rel = depth - p + 1
            app = appends[rel]
            deeper = depth + 1 < L
            for c in range(ncodes):
                if c == forbidden:
                    continue
                a2 = a * ga[c] + b * gb[c].conjugate()
                b2 = a * gb[c] + b * ga[c].conjugate()
                st2 = table[st][img[c]]
                if st2 == ident:
                    app(2.0 * log(abs(a2) + abs(b2)))
                if deeper:
                    rec(a2, b2, c ^ 1, depth + 1, st2)

        if L > p:
            rec(a0, b0, prefix[-1] ^ 1 if prefix else -1, p, st0)
    else:
        _, rank, deltas = payload
        st = st0
        rng = range(rank)
        if not any(st):
            appends[0](2.0 * log(abs(a0) + abs(b0)))

        def rec(a, b, forbidden, depth):
            rel = depth - p + 1
            app = appends[rel]
            deeper = depth + 1 < L
            for c in range(ncodes):
                if c == forbidden:
                    continue
                a2 = a * ga[c] + b * gb[c].conjugate()
                b2 = a * gb[c] + b * ga[c].conjugate()
                d = deltas[c]
                for i in rng:
                    st[i] += d[i]
                if not any(st):
                    app(2.0 * log(abs(a2) + abs(b2)))
                if deeper:
                    rec(a2, b2, c ^ 1, depth + 1)
                for i in rng:
                    st[i] -= d[i]

        if L > p:
            rec(a0, b0, prefix[-1] ^ 1 if prefix else -1, p)
    return [np.asarray(x) for x in per]


def _task_triangle(args):
    """Worst signed slack of d(g^-1 h g) <= 2 d(g) + d(h) over a subtree."""
    mats, k, prefix, L, (ha, hb) = args
    p = len(prefix)
    log = math.log
    ncodes = 2 * k
    ga = [m[0] for m in mats]
    gb = [m[1] for m in mats]
    d_h = 2.0 * log(abs(ha) + abs(hb))

    a0, b0 = _prefix_matrix(mats, prefix)
    # maintain M and H*M along the tree; slack needs M^-1 * (H M)
    hma0 = ha * a0 + hb * b0.conjugate()
    hmb0 = ha * b0 + hb * a0.conjugate()

    def slack_of(a, b, hma, hmb):
        ia, ib = a.conjugate(), -b
        ta = ia * hma + ib * hmb.conjugate()
        tb = ia * hmb + ib * hma.conjugate()
        d_g = 2.0 * log(abs(a) + abs(b))
        d_t = 2.0 * log(abs(ta) + abs(tb))
        return 2.0 * d_g + d_h - d_t

    worst = slack_of(a0, b0, hma0, hmb0)
    witness = prefix
    count = 1
    stack = list(prefix)

    def rec(a, b, hma, hmb, forbidden, depth):
        nonlocal worst, witness, count
        deeper = depth + 1 < L
        for c in range(ncodes):
            if c == forbidden:
                continue
            ga_, gb_ = ga[c], gb[c]
            gac = ga_.conjugate()
            a2 = a * ga_ + b * gb_.conjugate()
            b2 = a * gb_ + b * gac
            hma2 = hma * ga_ + hmb * gb_.conjugate()
            hmb2 = hma * gb_ + hmb * gac
            s = slack_of(a2, b2, hma2, hmb2)
            count += 1
            if s < worst:
                stack.append(c)
                worst = s
                witness = tuple(stack)
                stack.pop()
            if deeper:
                stack.append(c)
                rec(a2, b2, hma2, hmb2, c ^ 1, depth + 1)
                stack.pop()

    if L > p:
        rec(a0, b0, hma0, hmb0, prefix[-1] ^ 1 if prefix else -1, p)
    return worst, witness, count


def _task_bench(args):
    """Exact per-length count / sum / min / max for one subtree."""
    mats, k, prefix, L = args
    p = len(prefix)
    n = L - p + 1
    counts = [0] * n
    sums = [0.0] * n
    mins = [math.inf] * n
    maxs = [-math.inf] * n
    log = math.log
    ncodes = 2 * k
    ga = [m[0] for m in mats]
    gb = [m[1] for m in mats]
    a0, b0 = _prefix_matrix(mats, prefix)
    d0 = 2.0 * log(abs(a0) + abs(b0))
    counts[0], sums[0], mins[0], maxs[0] = 1, d0, d0, d0

    def rec(a, b, forbidden, depth):
        rel = depth - p + 1
        deeper = depth + 1 < L
        for c in range(ncodes):
            if c == forbidden:
                continue
            ga_, gb_ = ga[c], gb[c]
            a2 = a * ga_ + b * gb_.conjugate()
            b2 = a * gb_ + b * ga_.conjugate()
            d = 2.0 * log(abs(a2) + abs(b2))
            counts[rel] += 1
            sums[rel] += d
            if d < mins[rel]:
                mins[rel] = d
            if d > maxs[rel]:
                maxs[rel] = d
            if deeper:
                rec(a2, b2, c ^ 1, depth + 1)

    if L > p:
        rec(a0, b0, prefix[-1] ^ 1 if prefix else -1, p)
    return counts, sums, mins, maxs


_TASK_FNS = {
    "collect": _task_collect,
    "kernel": _task_kernel,
    "triangle": _task_triangle,
    "bench": _task_bench,
}


def _run_task(spec):
    name, args = spec
    return _TASK_FNS[name](args)


# ----------------------------------------------------------------------
# drivers
# ----------------------------------------------------------------------


def _run_partitioned(name: str, make_args, group: MarkedGroup, L: int, workers, depth):
    """Execute one task per short word / subtree prefix; results in a fixed
    order independent of the worker count."""
    n_workers = resolve_workers(workers)
    depth = max(0, min(depth, L))
    mats = group.code_matrices()
    k = group.k
    shorts = [p for d in range(depth) for p in _prefixes(k, d)]
    subtrees = _prefixes(k, depth)

    short_specs = [(name, make_args(mats, k, p, len(p))) for p in shorts]
    sub_specs = [(name, make_args(mats, k, p, L)) for p in subtrees]

    short_results = [_run_task(s) for s in short_specs]
    if n_workers == 1 or len(sub_specs) <= 1:
        sub_results = [_run_task(s) for s in sub_specs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            sub_results = list(pool.map(_run_task, sub_specs, chunksize=1))
    return shorts, short_results, subtrees, sub_results


def collect_displacements(
    group: MarkedGroup,
    L: int,
    *,
    frame=None,
    workers: int | None = None,
    depth: int = DEFAULT_PARTITION_DEPTH,
) -> list[np.ndarray]:
    """Per-length displacement arrays for the full ball of radius L.

    Within each length the entries appear in lexicographic word order.
    ``frame`` (an Isometry) conjugates every matrix before the displacement
    is taken, i.e. it evaluates d(0, f w f^-1 (0)).
    """
    fr = (frame.a, frame.b) if frame is not None else None
    make = lambda mats, k, p, l: (mats, k, p, l, fr)
    shorts, short_res, subtrees, sub_res = _run_partitioned(
        "collect", make, group, L, workers, depth
    )
    out = []
    for l in range(L + 1):
        parts = []
        for p, res in zip(shorts, short_res):
            if len(p) == l:
                parts.append(res[0])
        for p, res in zip(subtrees, sub_res):
            if len(p) <= l <= L:
                parts.append(res[l - len(p)])
        out.append(np.concatenate(parts) if parts else np.empty(0))
    return out


def collect_kernel_displacements(
    group: MarkedGroup,
    hom: QuotientHom,
    L: int,
    *,
    workers: int | None = None,
    depth: int = DEFAULT_PARTITION_DEPTH,
) -> list[np.ndarray]:
    """Per-length displacement arrays restricted to kernel members."""
    if hom.k != group.k:
        raise ValueError("homomorphism rank does not match the group")
    payload = _hom_payload(hom)
    make = lambda mats, k, p, l: (mats, k, p, l, payload)
    shorts, short_res, subtrees, sub_res = _run_partitioned(
        "kernel", make, group, L, workers, depth
    )
    out = []
    for l in range(L + 1):
        parts = []
        for p, res in zip(shorts, short_res):
            if len(p) == l:
                parts.append(res[0])
        for p, res in zip(subtrees, sub_res):
            if len(p) <= l <= L:
                parts.append(res[l - len(p)])
        good = [x for x in parts if x.size]
        out.append(np.concatenate(good) if good else np.empty(0))
    return out


def triangle_audit(
    group: MarkedGroup,
    h: ReducedWord,
    L: int,
    *,
    workers: int | None = None,
    depth: int = DEFAULT_PARTITION_DEPTH,
) -> tuple[float, ReducedWord, int]:
    """Worst slack of d(0, g^-1 h g(0)) <= 2 d(0, g(0)) + d(0, h(0)) over
    all |g| <= L; returns (worst slack, witness word, cases)."""
    from .schottky import evaluate

    hm = evaluate(group, h)
    make = lambda mats, k, p, l: (mats, k, p, l, (hm.a, hm.b))
    shorts, short_res, subtrees, sub_res = _run_partitioned(
        "triangle", make, group, L, workers, depth
    )
    worst, witness, total = math.inf, (), 0
    for _, (w, wit, n) in zip(shorts + subtrees, short_res + sub_res):
        total += n
        if w < worst:
            worst, witness = w, wit
    return worst, ReducedWord(witness), total


@dataclass(frozen=True)
class BenchStats:
    """Deterministic per-length enumeration aggregates."""

    L: int
    counts: tuple[int, ...]
    sums: tuple[float, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    @property
    def total_words(self) -> int:
        return sum(self.counts)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "counts": list(self.counts),
            "sums": list(self.sums),
            "mins": list(self.mins),
            "maxs": list(self.maxs),
        }


def bench_enumerate(
    group: MarkedGroup,
    L: int,
    *,
    workers: int | None = None,
    depth: int = DEFAULT_PARTITION_DEPTH,
) -> BenchStats:
    """Walk the whole ball once, returning exact aggregates; the workhorse
    for the performance/determinism benchmark."""
    make = lambda mats, k, p, l: (mats, k, p, l)
    shorts, short_res, subtrees, sub_res = _run_partitioned(
        "bench", make, group, L, workers, depth
    )
    counts = [0] * (L + 1)
    sums = [0.0] * (L + 1)
    mins = [math.inf] * (L + 1)
    maxs = [-math.inf] * (L + 1)
    for p, (cs, ss, mn, mx) in zip(shorts + subtrees, short_res + sub_res):
        base = len(p)
        for rel in range(len(cs)):
            l = base + rel
            counts[l] += cs[rel]
            sums[l] += ss[rel]
            if mn[rel] < mins[l]:
                mins[l] = mn[rel]
            if mx[rel] > maxs[l]:
                maxs[l] = mx[rel]
    return BenchStats(L, tuple(counts), tuple(sums), tuple(mins), tuple(maxs))
