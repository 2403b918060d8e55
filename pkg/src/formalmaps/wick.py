"""Pairing sums for the formal matrix integral.

Two interchangeable engines evaluate the same sum over half edge
pairings.  The sweep engine walks all (2E-1)!! complete matchings,
optionally partitioned across worker processes, and checks the surface
identity on every single diagram.  The aggregated engine runs over
isomorphism classes of partial matchings with integer weights counting
raw matchings per class; it reaches sums far beyond the sweep and hands
out the gluing census with automorphism orders as a byproduct.

Conventions.  A complete pairing of an invariant product with E edges
and R trace factors contributes

    t^E * N^(loops - E - R) * prod over pairs of Cinv[color, color],

where loops counts the cycles of (cyclic successor) o (pairing).  Each
interaction factor Q drawn from the potential adds a prefactor
N^2 / t * t_Q, and a multiset with m copies of Q divides by
m! * aut(Q).  The exponent of the size symbol on a connected piece is
then its Euler characteristic (vertices - edges + faces minus twice the
trace crossings of multi trace interactions), which is what the per
diagram check asserts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import factorial

from .invariants import CouplingPoly, Invariant
from .series import LSeries, LaurentPolyN, TruncatedSeries

__all__ = [
    "Budget",
    "BudgetExceeded",
    "PairingProblem",
    "CensusEntry",
    "FreeEnergyTable",
    "euler_characteristic",
    "pairing_count",
    "gaussian_moment",
    "formal_expectation",
    "expectation_series",
    "compute_A",
    "compute_Z",
    "compute_F",
    "free_energy_table",
    "map_census",
]


def pairing_count(edges):
    """(2E - 1)!!, the number of complete matchings on 2E half edges."""
    out = 1
    for m in range(1, 2 * edges, 2):
        out *= m
    return out


def euler_characteristic(vertices, edges, faces, crossings=0):
    return vertices - edges + faces - 2 * crossings


@dataclass(frozen=True)
class Budget:
    """Work limits: sweep size in pairings, aggregation size in classes."""

    pairings: int = 4_000_000
    dp_states: int = 500_000


class BudgetExceeded(RuntimeError):
    def __init__(self, kind, required, limit):
        super().__init__(
            f"{kind} budget exceeded: needs about {required}, limit {limit}")
        self.kind = kind
        self.required = required
        self.limit = limit


def _resolve_workers(workers):
    if workers is None:
        raw = os.environ.get("FORMALMAPS_WORKERS", "").strip()
        workers = int(raw) if raw else 1
    return max(1, workers)


class PairingProblem:
    """All half edge pairings of a fixed multiset of trace invariants.

    Flattens the words of the given factors into one half edge table
    with a cyclic successor map.  The symmetry group used to aggregate
    matchings permutes equal factors, permutes equal words inside a
    factor and rotates every word; its order is the product of
    m! * aut(Q)^m over distinct factors Q.
    """

    def __init__(self, factors, cinv):
        factors = sorted(factors, key=lambda inv: inv.words)
        self.factors = tuple(factors)
        self.cinv = tuple(tuple(Fraction(x) for x in row) for row in cinv)
        word_colors = []
        word_factor = []
        for fi, inv in enumerate(factors):
            for w in inv.words:
                word_colors.append(w.colors)
                word_factor.append(fi)
        self.word_colors = tuple(word_colors)
        self.word_factor = tuple(word_factor)
        self.R = len(word_colors)
        starts = []
        pos = 0
        for colors in word_colors:
            starts.append(pos)
            pos += len(colors)
        self.word_start = tuple(starts)
        self.size = pos
        if pos % 2:
            raise ValueError("odd number of half edges, the pairing sum is empty")
        self.E = pos // 2
        gamma = []
        he_color = []
        he_word = []
        for wi, colors in enumerate(word_colors):
            d = len(colors)
            s = starts[wi]
            for p in range(d):
                gamma.append(s + (p + 1) % d)
                he_color.append(colors[p])
                he_word.append(wi)
        self.gamma = tuple(gamma)
        self.he_color = tuple(he_color)
        self.he_word = tuple(he_word)
        self._trivial_cinv = all(x == 1 for row in self.cinv for x in row)
        mult = {}
        for inv in factors:
            mult[inv] = mult.get(inv, 0) + 1
        order = 1
        for inv, m in mult.items():
            order *= factorial(m) * inv.aut_order() ** m
        self.group_order = order
        self._canon_memo = {}
        self._build_blocks()

    def _build_blocks(self):
        blocks = []
        i = 0
        while i < len(self.factors):
            j = i
            while j < len(self.factors) and self.factors[j] == self.factors[i]:
                j += 1
            blocks.append(tuple(range(i, j)))
            i = j
        self.type_blocks = tuple(blocks)
        step_block = []
        for bi, b in enumerate(self.type_blocks):
            step_block += [bi] * len(b)
        self.step_block = tuple(step_block)
        factor_words = [[] for _ in self.factors]
        for wi, fi in enumerate(self.word_factor):
            factor_words[fi].append(wi)
        self.factor_words = tuple(tuple(ws) for ws in factor_words)
        factor_start = []
        for ws in self.factor_words:
            factor_start.append(self.word_start[ws[0]])
        self.factor_start = tuple(factor_start)
        # per factor: every admissible serialization of its slots, i.e.
        # permutations exchanging equal words crossed with one color
        # preserving rotation per word; color changing rotations are NOT
        # symmetries, they break the Cinv pair weights
        slot_choices = []
        for ws in self.factor_words:
            groups = {}
            for w in ws:
                groups.setdefault(self.word_colors[w], []).append(w)
            orders = [[]]
            for colors in sorted(groups):
                orders = [o + list(p) for o in orders
                          for p in permutations(groups[colors])]
            choices = []
            for order in orders:
                rot_options = []
                for w in order:
                    colors = self.word_colors[w]
                    rot_options.append([
                        r for r in range(len(colors))
                        if colors[r:] + colors[:r] == colors])
                for rots in product(*rot_options):
                    choices.append((tuple(order), rots))
            slot_choices.append(tuple(choices))
        self.slot_choices = tuple(slot_choices)
        # flattened half edge sequences per choice, plus position maps,
        # for the canonical form search
        he_factor = []
        for wi, fi in enumerate(self.word_factor):
            he_factor += [fi] * len(self.word_colors[wi])
        self._he_factor = tuple(he_factor)
        seqs = []
        posmaps = []
        for fi, choices in enumerate(self.slot_choices):
            fseqs = []
            fmaps = []
            for order, rots in choices:
                seq = []
                for wi, r in zip(order, rots):
                    d = len(self.word_colors[wi])
                    s0 = self.word_start[wi]
                    seq += [s0 + (p + r) % d for p in range(d)]
                fseqs.append(tuple(seq))
                fmaps.append({h: pos for pos, h in enumerate(seq)})
            seqs.append(tuple(fseqs))
            posmaps.append(tuple(fmaps))
        self._choice_seqs = tuple(seqs)
        self._choice_posmaps = tuple(posmaps)
        self._factor_size = tuple(inv.degree for inv in self.factors)
        self._all_mask = (1 << len(self.factors)) - 1
        self._memo_cap = 300_000

    # -- canonical forms -------------------------------------------------

    def _residual_key(self, partner, placed_mask, serial_of):
        """State signature determining the minimal remaining suffix.

        Flat integer codes per half edge of the unplaced factors, in id
        order: -1 unmatched, 2s for a partner already at serial s, and
        2(rel*size + offset)+1 for a partner in the rel-th unplaced
        factor at that intrinsic offset.  The per block remaining counts
        disambiguate equal length code runs across block boundaries.
        """
        nfac = len(self.factors)
        size = self.size
        fstart = self.factor_start
        he_factor = self._he_factor
        rel = {}
        unplaced = []
        for fi in range(nfac):
            if not placed_mask >> fi & 1:
                rel[fi] = len(unplaced)
                unplaced.append(fi)
        codes = []
        for fi in unplaced:
            for h in range(fstart[fi], fstart[fi] + self._factor_size[fi]):
                p = partner[h]
                if p < 0:
                    codes.append(-1)
                else:
                    s = serial_of[p]
                    if s >= 0:
                        codes.append(2 * s)
                    else:
                        pfi = he_factor[p]
                        codes.append(2 * (rel[pfi] * size + p - fstart[pfi]) + 1)
        left = tuple(sum(1 for fi in block if not placed_mask >> fi & 1)
                     for block in self.type_blocks)
        return left + (-2,) + tuple(codes)

    def canonical_key(self, matching):
        """Lexicographically minimal serialization of a partial matching.

        The minimum runs over the full symmetry group: block order of
        equal factors, equal word exchanges and color preserving word
        rotations.  Each factor contributes one integer code per half
        edge in serialization order: 0 unmatched, 1 matched into a not
        yet serialized factor, 2+s matched to global serial position s.
        Deferred codes lose nothing, the later endpoint pins the pair,
        so the full string determines the matching up to symmetry.

        The suffix below any placed prefix only depends on the residual
        key, so suffixes are memoized per problem across calls (with a
        size cap, the memo is a cache, not state).
        """
        if isinstance(matching, dict):
            partner = [-1] * self.size
            for a, b in matching.items():
                partner[a] = b
        else:
            partner = matching
        nfac = len(self.factors)
        memo = self._canon_memo
        serial_of = [-1] * self.size
        step_block = self.step_block
        type_blocks = self.type_blocks
        choice_seqs = self._choice_seqs
        choice_posmaps = self._choice_posmaps

        def rec(placed_mask, step, base):
            if step == nfac:
                return ()
            rkey = self._residual_key(partner, placed_mask, serial_of)
            got = memo.get(rkey)
            if got is not None:
                return got
            best_codes = None
            best = []
            for fi in type_blocks[step_block[step]]:
                if placed_mask >> fi & 1:
                    continue
                seqs = choice_seqs[fi]
                maps = choice_posmaps[fi]
                for ci in range(len(seqs)):
                    seq = seqs[ci]
                    posmap = maps[ci]
                    codes = []
                    for h in seq:
                        p = partner[h]
                        if p < 0:
                            codes.append(0)
                            continue
                        s = serial_of[p]
                        if s >= 0:
                            codes.append(2 + s)
                            continue
                        pos = posmap.get(p)
                        codes.append(1 if pos is None else 2 + base + pos)
                    codes = tuple(codes)
                    if best_codes is None or codes < best_codes:
                        best_codes = codes
                        best = [(fi, seq)]
                    elif codes == best_codes:
                        best.append((fi, seq))
            suffix = None
            seen = set()
            for fi, seq in best:
                mask2 = placed_mask | 1 << fi
                for pos, h in enumerate(seq):
                    serial_of[h] = base + pos
                rk2 = self._residual_key(partner, mask2, serial_of)
                if rk2 not in seen:
                    seen.add(rk2)
                    tail = rec(mask2, step + 1, base + len(seq))
                    if suffix is None or tail < suffix:
                        suffix = tail
                for h in seq:
                    serial_of[h] = -1
            out = best_codes + suffix
            if len(memo) >= self._memo_cap:
                memo.clear()
            memo[rkey] = out
            return out

        return rec(0, 0, 0)

    # -- complete matchings ----------------------------------------------

    def iter_pairings(self, first_partner=None):
        """Yield complete matchings as tuples of (a, b) pairs, a < b.

        With first_partner set, only the branch pairing half edge 0
        with that partner is walked (the partition unit for workers).
        """
        out = []

        def rec(avail):
            if not avail:
                yield tuple(out)
                return
            a = avail[0]
            rest = avail[1:]
            for i in range(len(rest)):
                out.append((a, rest[i]))
                yield from rec(rest[:i] + rest[i + 1:])
                out.pop()

        avail = list(range(self.size))
        if first_partner is None:
            yield from rec(avail)
        else:
            out.append((0, first_partner))
            rest = [h for h in avail[1:] if h != first_partner]
            yield from rec(rest)

    def pairing_exponent(self, pairs, check=True):
        """Size symbol exponent loops - E - R and the Cinv product.

        With check on, every connected component (components tie factors
        together, so a multi trace factor is one node) must satisfy the
        surface identity: its exponent contribution plus 2 per factor is
        an even number at most 2.
        """
        size = self.size
        gamma = self.gamma
        alpha = [0] * size
        for a, b in pairs:
            alpha[a] = b
            alpha[b] = a
        visited = bytearray(size)
        loops = 0
        cycle_comp = []
        for h0 in range(size):
            if visited[h0]:
                continue
            loops += 1
            h = h0
            while not visited[h]:
                visited[h] = 1
                h = gamma[alpha[h]]
            cycle_comp.append(h0)
        if self._trivial_cinv:
            coeff = Fraction(1)
        else:
            coeff = Fraction(1)
            cinv = self.cinv
            col = self.he_color
            for a, b in pairs:
                coeff *= cinv[col[a] - 1][col[b] - 1]
        if check:
            self._check_components(pairs, cycle_comp)
        return loops - self.E - self.R, coeff

    def _check_components(self, pairs, cycle_heads):
        nfac = len(self.factors)
        parent = list(range(nfac))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        fac_of_he = [self.word_factor[w] for w in self.he_word]
        for a, b in pairs:
            ra, rb = find(fac_of_he[a]), find(fac_of_he[b])
            if ra != rb:
                parent[ra] = rb
        k_c = {}
        r_c = {}
        e_c = {}
        p_c = {}
        for fi in range(nfac):
            root = find(fi)
            k_c[root] = k_c.get(root, 0) + 1
            r_c[root] = r_c.get(root, 0) + len(self.factor_words[fi])
        for a, _ in pairs:
            root = find(fac_of_he[a])
            e_c[root] = e_c.get(root, 0) + 1
        for h in cycle_heads:
            root = find(fac_of_he[h])
            p_c[root] = p_c.get(root, 0) + 1
        for root, k in k_c.items():
            chi = 2 * k + p_c.get(root, 0) - e_c.get(root, 0) - r_c[root]
            if chi % 2 or chi > 2:
                raise ArithmeticError(
                    f"component violates the surface identity: exponent {chi}")

    def is_connected(self, pairs):
        nfac = len(self.factors)
        if nfac <= 1:
            return True
        parent = list(range(nfac))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in pairs:
            fa = self.word_factor[self.he_word[a]]
            fb = self.word_factor[self.he_word[b]]
            ra, rb = find(fa), find(fb)
            if ra != rb:
                parent[ra] = rb
        return len({find(fi) for fi in range(nfac)}) == 1

    # -- symmetry group actions ------------------------------------------

    def group_generators(self):
        """Half edge permutations generating the symmetry group.

        Color preserving rotations of each trace word, swaps of equal
        words inside a factor, and swaps of equal factors.  The group
        they generate has order group_order.
        """
        gens = []
        ident = list(range(self.size))
        for w in range(self.R):
            colors = self.word_colors[w]
            d = len(colors)
            base = self.word_start[w]
            for r in range(1, d):
                if colors[r:] + colors[:r] != colors:
                    continue
                g = ident[:]
                for i in range(d):
                    g[base + i] = base + (i + r) % d
                gens.append(tuple(g))
                break
        wi = 0
        for inv in self.factors:
            words = inv.words
            for j in range(len(words) - 1):
                if words[j] == words[j + 1]:
                    a = self.word_start[wi + j]
                    b = self.word_start[wi + j + 1]
                    d = len(words[j].colors)
                    g = ident[:]
                    for i in range(d):
                        g[a + i] = b + i
                        g[b + i] = a + i
                    gens.append(tuple(g))
            wi += len(words)
        fstart = [0]
        for inv in self.factors:
            fstart.append(fstart[-1] + inv.degree)
        for fi in range(len(self.factors) - 1):
            if self.factors[fi].words == self.factors[fi + 1].words:
                a, b = fstart[fi], fstart[fi + 1]
                d = fstart[fi + 1] - fstart[fi]
                g = ident[:]
                for i in range(d):
                    g[a + i] = b + i
                    g[b + i] = a + i
                gens.append(tuple(g))
        return gens

    def automorphism_order(self, pairs):
        """Symmetries of one complete gluing, group_order / orbit size."""
        if isinstance(pairs, dict):
            pairs = list(pairs.items())
        start = frozenset((a, b) if a < b else (b, a) for a, b in pairs)
        if 2 * len(start) != self.size:
            raise ValueError("gluing does not match every half edge")
        gens = self.group_generators()
        orbit = {start}
        queue = [start]
        while queue:
            cur = queue.pop()
            for g in gens:
                img = frozenset((g[a], g[b]) if g[a] < g[b] else (g[b], g[a])
                                for a, b in cur)
                if img not in orbit:
                    orbit.add(img)
                    queue.append(img)
        if self.group_order % len(orbit):
            raise ArithmeticError("orbit size does not divide the group order")
        return self.group_order // len(orbit)

    # -- the value engines -----------------------------------------------

    def sweep_value(self, check=True, workers=None):
        workers = _resolve_workers(workers)
        if workers > 1 and self.size >= 8:
            return self._sweep_parallel(check, workers)
        acc = {}
        for pairs in self.iter_pairings():
            expo, coeff = self.pairing_exponent(pairs, check)
            acc[expo] = acc.get(expo, 0) + coeff
        return LaurentPolyN(acc)

    def _spec(self):
        return (tuple(inv.format() for inv in self.factors),
                tuple(tuple(str(x) for x in row) for row in self.cinv))

    def _sweep_partial(self, first_partner, check):
        acc = {}
        for pairs in self.iter_pairings(first_partner):
            expo, coeff = self.pairing_exponent(pairs, check)
            acc[expo] = acc.get(expo, 0) + coeff
        return acc

    def _sweep_parallel(self, check, workers):
        from multiprocessing import Pool

        spec = self._spec()
        jobs = [(spec, b, check) for b in range(1, self.size)]
        acc = {}
        with Pool(workers) as pool:
            for part in pool.imap_unordered(_sweep_worker, jobs):
                for expo, coeff in part.items():
                    acc[expo] = acc.get(expo, 0) + coeff
        return LaurentPolyN(acc)

    def aggregated_classes(self, state_budget=None):
        """Complete matching classes as {canonical key: (raw count, rep)}.

        Level j+1 weights come from extending every class representative
        by every unmatched pair and dividing the accumulated weight by
        j+1, which is exact because a matching with j+1 pairs has j+1
        parents; the divisibility check would catch any aggregation bug.
        """
        cur = {self.canonical_key({}): (1, ())}
        seen_states = 1
        for j in range(self.E):
            acc = {}
            reps = {}
            for _key, (w, rep) in cur.items():
                partner = [-1] * self.size
                for a, b in rep:
                    partner[a] = b
                    partner[b] = a
                avail = [h for h in range(self.size) if partner[h] < 0]
                for i in range(len(avail)):
                    a = avail[i]
                    for p in range(i + 1, len(avail)):
                        b = avail[p]
                        partner[a] = b
                        partner[b] = a
                        ck = self.canonical_key(partner)
                        acc[ck] = acc.get(ck, 0) + w
                        if ck not in reps:
                            reps[ck] = rep + ((a, b),)
                        partner[a] = -1
                        partner[b] = -1
            cur = {}
            for ck, total in acc.items():
                if total % (j + 1):
                    raise ArithmeticError("aggregation weight is not divisible "
                                          "by the parent count")
                cur[ck] = (total // (j + 1), reps[ck])
            seen_states += len(cur)
            if state_budget is not None and seen_states > state_budget:
                raise BudgetExceeded("class", seen_states, state_budget)
        return cur

    def aggregated_value(self, state_budget=None, check=True):
        acc = {}
        for _key, (w, rep) in self.aggregated_classes(state_budget).items():
            expo, coeff = self.pairing_exponent(rep, check)
            acc[expo] = acc.get(expo, 0) + coeff * w
        return LaurentPolyN(acc)

    def boundary_value(self, state_budget=None):
        """Pairing sum organized by open boundary words.

        Each partial gluing leaves a multiset of open boundary words (the
        unmatched half edge colors read around each face under construction),
        and that multiset determines every future contribution.  One step
        glues the fixed half edge, position 0 of the first word, to every
        available partner: a partner inside the same word splits it in two,
        a partner in another word splices the two, and empty remainders are
        finished faces worth one power of the size each.  Pooling partial
        gluings with equal boundary multisets gives the same total as the
        sweep with exponentially fewer states.
        """
        rot_cache = {}

        def canon(word):
            got = rot_cache.get(word)
            if got is None:
                got = min(word[i:] + word[:i] for i in range(len(word)))
                rot_cache[word] = got
            return got

        start = tuple(sorted(canon(self.word_colors[w])
                             for w in range(self.R)))
        states = {start: {0: Fraction(1)}}
        cinv = self.cinv
        seen_states = 1

        def add(dst, key, wt, shift):
            slot = dst.get(key)
            if slot is None:
                slot = dst[key] = {}
            for expo, coeff in wt.items():
                e = expo + shift
                slot[e] = slot.get(e, 0) + coeff

        for _step in range(self.E):
            nxt = {}
            for words, wt in states.items():
                w0 = words[0]
                rest = words[1:]
                c0 = w0[0]
                m = len(w0)
                for d in range(1, m):
                    cf = cinv[c0 - 1][w0[d] - 1]
                    if not cf:
                        continue
                    arcs = [a for a in (w0[1:d], w0[d + 1:]) if a]
                    key = tuple(sorted([canon(a) for a in arcs]
                                       + list(rest)))
                    swt = {e: c * cf for e, c in wt.items()}
                    add(nxt, key, swt, 2 - len(arcs))
                for i, w1 in enumerate(rest):
                    others = rest[:i] + rest[i + 1:]
                    for e in range(len(w1)):
                        cf = cinv[c0 - 1][w1[e] - 1]
                        if not cf:
                            continue
                        merged = w0[1:] + w1[e + 1:] + w1[:e]
                        if merged:
                            key = tuple(sorted(others + (canon(merged),)))
                            shift = 0
                        else:
                            key = others
                            shift = 1
                        swt = {ex: c * cf for ex, c in wt.items()}
                        add(nxt, key, swt, shift)
            states = nxt
            seen_states += len(states)
            if state_budget is not None and seen_states > state_budget:
                raise BudgetExceeded("state", seen_states, state_budget)
        done = states.get((), {})
        shift = -self.E - self.R
        return LaurentPolyN({e + shift: c for e, c in done.items() if c})

    def wick_value(self, method="auto", budget=None, check=True, workers=None):
        """(t power, value): t^E and the Laurent polynomial in the size."""
        budget = budget or Budget()
        est = pairing_count(self.E)
        if method == "auto":
            method = "sweep" if est <= budget.pairings else "boundary"
        if method == "sweep":
            if est > budget.pairings:
                raise BudgetExceeded("pairing", est, budget.pairings)
            value = self.sweep_value(check=check, workers=workers)
        elif method == "classes":
            value = self.aggregated_value(budget.dp_states, check=check)
        elif method == "boundary":
            value = self.boundary_value(budget.dp_states)
        else:
            raise ValueError(f"unknown engine {method!r}")
        return self.E, value


def _sweep_worker(args):
    spec, first_partner, check = args
    factors, cinv = spec
    prob = PairingProblem([Invariant.parse(s) for s in factors],
                          [[Fraction(x) for x in row] for row in cinv])
    return prob._sweep_partial(first_partner, check)


# -- moments and expectations -------------------------------------------


def formal_expectation(model, invariant, method="auto", budget=None,
                       check=True, workers=None):
    """Quadratic theory average with every trace divided by the size.

    Returns (t power E, Laurent polynomial), the sum over pairings of
    N^(loops - E - R) prod Cinv.
    """
    prob = PairingProblem([invariant], model.cinv())
    return prob.wick_value(method=method, budget=budget, check=check,
                           workers=workers)


def gaussian_moment(model, invariant, method="auto", budget=None,
                    check=True, workers=None):
    """Unnormalized quadratic theory moment of a product of traces.

    Same as formal_expectation but keeping one factor of the size per
    trace, i.e. t^E times N^(loops - E).
    """
    prob = PairingProblem([invariant], model.cinv())
    tpow, poly = prob.wick_value(method=method, budget=budget, check=check,
                                 workers=workers)
    return tpow, poly * LaurentPolyN({prob.R: Fraction(1)})


# -- the partition function and free energies ---------------------------


def _iter_multisets(model, max_twoj, include_empty=False):
    """Multisets of interaction factors with sum of (deg - 2) bounded.

    Yields (counts aligned with model.potential, twoj) where twoj is
    sum count * (degree - 2), twice the t power the multiset occupies
    in the partition function once its own 1/t per factor is applied.
    """
    items = model.potential
    steps = [inv.degree - 2 for inv, _ in items]

    def rec(idx, twoj, counts):
        if idx == len(items):
            if any(counts) or include_empty:
                yield tuple(counts), twoj
            return
        c = 0
        while twoj + c * steps[idx] <= max_twoj:
            yield from rec(idx + 1, twoj + c * steps[idx], counts + [c])
            c += 1

    yield from rec(0, 0, [])


def _multiset_factors(model, counts):
    factors = []
    coupling = Fraction(1)
    denom = 1
    degree = 0
    for (inv, val), c in zip(model.potential, counts):
        if not c:
            continue
        factors += [inv] * c
        denom *= factorial(c) * inv.aut_order() ** c
        coupling = coupling * val ** c
        degree += c * inv.degree
    return factors, coupling, denom, degree


def _multiset_value(model, counts, method, budget, check, workers):
    """Contribution of one interaction multiset, as (t power, polynomial)."""
    factors, coupling, denom, degree = _multiset_factors(model, counts)
    k = sum(counts)
    prob = PairingProblem(factors, model.cinv())
    tpow, poly = prob.wick_value(method=method, budget=budget, check=check,
                                 workers=workers)
    scaled = poly * (coupling * Fraction(1, denom))
    shifted = scaled * LaurentPolyN({2 * k: Fraction(1)})
    return tpow - k, shifted


def compute_A(model, k, max_l, method="auto", budget=None, check=True,
              workers=None):
    """Order k piece of the partition function as a t series.

    Collects every interaction multiset of exactly k factors whose t
    power stays at or below max_l.
    """
    coeffs = [0] * (max_l + 1)
    if k == 0:
        coeffs[0] = LaurentPolyN({0: Fraction(1)})
    for counts, twoj in _iter_multisets(model, 2 * max_l):
        if sum(counts) != k or twoj % 2:
            continue
        tpow, poly = _multiset_value(model, counts, method, budget, check,
                                     workers)
        if tpow <= max_l:
            coeffs[tpow] = coeffs[tpow] + poly
    return TruncatedSeries(coeffs, max_l + 1)


def compute_Z(model, max_l, method="auto", budget=None, check=True,
              workers=None):
    """Partition function through t^max_l, coefficients Laurent in the size."""
    coeffs = [0] * (max_l + 1)
    coeffs[0] = LaurentPolyN({0: Fraction(1)})
    for counts, twoj in _iter_multisets(model, 2 * max_l):
        if twoj % 2:
            continue
        tpow, poly = _multiset_value(model, counts, method, budget, check,
                                     workers)
        if tpow <= max_l:
            coeffs[tpow] = coeffs[tpow] + poly
    return TruncatedSeries(coeffs, max_l + 1)


def compute_F(model, max_l, method="auto", budget=None, check=True,
              workers=None):
    """log of the partition function; only connected gluings survive."""
    return compute_Z(model, max_l, method=method, budget=budget, check=check,
                     workers=workers).log()


def expectation_series(model, invariant, max_l, method="auto", budget=None,
                       check=True, workers=None):
    """t series of the unnormalized interacting moment of a trace product.

    Sums the quadratic theory moments with every interaction multiset
    inserted, through t^max_l.  Unnormalized means: no division by the
    partition function and one factor of the size per observable trace.
    """
    deg_w = invariant.degree
    r_w = invariant.trace_count
    by_power = {}
    for counts, _twoj in _iter_multisets(model, max(0, 2 * max_l - deg_w),
                                         include_empty=True):
        factors, coupling, denom, degree = _multiset_factors(model, counts)
        if (degree + deg_w) % 2:
            continue
        k = sum(counts)
        tpow = (degree + deg_w) // 2 - k
        if tpow > max_l:
            continue
        prob = PairingProblem(factors + [invariant], model.cinv())
        _, poly = prob.wick_value(method=method, budget=budget, check=check,
                                  workers=workers)
        shifted = poly * (coupling * Fraction(1, denom)) \
            * LaurentPolyN({2 * k + r_w: Fraction(1)})
        by_power[tpow] = by_power.get(tpow, 0) + shifted
    if not by_power:
        return LSeries.zero(max_l + 1)
    val = min(by_power)
    coeffs = [by_power.get(p, 0) for p in range(val, max_l + 1)]
    return LSeries(val, coeffs, max_l + 1)


class FreeEnergyTable:
    """Connected map counts indexed by (t power, genus).

    Built from the log of the partition function by reading off the
    size exponent 2 - 2g of every t coefficient.  Values are Fractions,
    or coupling polynomials when the model keeps couplings symbolic.
    """

    def __init__(self, entries, max_l):
        self.entries = dict(entries)
        self.max_l = max_l

    @classmethod
    def from_log_series(cls, f):
        entries = {}
        for l in range(1, f.order):
            poly = f.coefficient(l)
            if poly == 0:
                continue
            for p in poly.powers():
                if p > 2 or (2 - p) % 2:
                    raise ArithmeticError(
                        f"size exponent {p} at t^{l} is not of the form 2 - 2g")
                entries[(l, (2 - p) // 2)] = poly.coefficient(p)
        return cls(entries, f.order - 1)

    def value(self, l, genus):
        return self.entries.get((l, genus), Fraction(0))

    def cells(self):
        return sorted(self.entries)

    def to_json(self):
        rows = []
        for (l, g) in self.cells():
            v = self.entries[(l, g)]
            rows.append({"l": l, "genus": g, "value": _value_str(v)})
        return {"max_l": self.max_l, "entries": rows}

    @classmethod
    def from_json(cls, data):
        entries = {}
        for row in data["entries"]:
            entries[(int(row["l"]), int(row["genus"]))] = Fraction(row["value"])
        return cls(entries, int(data["max_l"]))

    def __eq__(self, other):
        if not isinstance(other, FreeEnergyTable):
            return NotImplemented
        mine = {k: v for k, v in self.entries.items() if not v == 0}
        theirs = {k: v for k, v in other.entries.items() if not v == 0}
        if set(mine) != set(theirs):
            return False
        return all(mine[k] == theirs[k] for k in mine)


def _value_str(v):
    if isinstance(v, CouplingPoly):
        bits = []
        for mono in sorted(v.terms):
            c = v.terms[mono]
            sym = "*".join(f"{n}^{p}" if p != 1 else n for n, p in mono)
            bits.append(f"{c}" + (f"*{sym}" if sym else ""))
        return " + ".join(bits) if bits else "0"
    return str(v)


def free_energy_table(model, max_l, method="auto", budget=None, check=True,
                      workers=None):
    return FreeEnergyTable.from_log_series(
        compute_F(model, max_l, method=method, budget=budget, check=check,
                  workers=workers))


# -- the census ---------------------------------------------------------


@dataclass(frozen=True)
class CensusEntry:
    """One isomorphism class of connected gluings.

    vertices, edges and faces describe the glued surface; crossings
    counts the extra trace factors of multi trace interactions, which
    depress the size exponent by 2 each.  class_size is the raw number
    of matchings in the class, aut_order the stabilizer order, and
    their product is the symmetry group order of the factor multiset.
    """

    factors: tuple
    genus: int
    vertices: int
    edges: int
    faces: int
    crossings: int
    aut_order: int
    class_size: int
    rep: tuple
    coupling: object = field(compare=False, default=None)

    def weight(self):
        return Fraction(1, self.aut_order)


def map_census(model, l, genus=None, budget=None, check=True):
    """Connected gluing classes at t power l, optionally one genus only."""
    budget = budget or Budget()
    out = []
    for counts, twoj in _iter_multisets(model, 2 * l):
        if twoj != 2 * l:
            continue
        factors, coupling, _denom, degree = _multiset_factors(model, counts)
        if degree % 2:
            continue
        prob = PairingProblem(factors, model.cinv())
        classes = prob.aggregated_classes(budget.dp_states)
        names = tuple(sorted(inv.format() for inv in factors))
        crossings = sum(inv.trace_count - 1 for inv in factors)
        for key in sorted(classes):
            size, rep = classes[key]
            if not prob.is_connected(rep):
                continue
            expo, _coeff = prob.pairing_exponent(rep, check=check)
            chi = expo + 2 * len(factors)
            if chi % 2 or chi > 2:
                raise ArithmeticError("census class violates the surface identity")
            g = (2 - chi) // 2
            if genus is not None and g != genus:
                continue
            if prob.group_order % size:
                raise ArithmeticError("class size does not divide the group order")
            loops = expo + prob.E + prob.R
            out.append(CensusEntry(
                factors=names,
                genus=g,
                vertices=prob.R,
                edges=prob.E,
                faces=loops,
                crossings=crossings,
                aut_order=prob.group_order // size,
                class_size=size,
                rep=rep,
                coupling=coupling,
            ))
    out.sort(key=lambda e: (e.factors, e.genus, e.rep))
    return out
