"""Layered counting engine for series helpmates.

Counts (series, mating move) pairs by a forward dynamic program: layer d
holds every position reachable after d Black series moves together with
the exact number of move sequences reaching it, so identical positions
are merged once per depth (the layered form of memoizing on
(position, remaining)).  The hot loops are JIT-compiled with numba and
operate on raw 64-byte boards.

The optional "mate-distance" pruning rule discards positions that
provably cannot reach any mate-in-one position within the remaining
moves.  Once per problem it enumerates every way White could conceivably
mate -- a final black-king square s, a White move giving check there --
and derives the squares Black must plug (with the piece kinds each plug
may be) and the squares that must be empty.  Distances to those targets
come from per-scenario route tables over the actual board: men that can
never move act as walls, a journey may not stop where it would give an
unblockable check (only a final move may), and a White man is treated as
capturable only when some affordable completion could actually take it,
iterated to a fixpoint.  Per position the rule charges the king's route
plus a minimum-cost assignment of distinct men to the still-empty plugs
and keeps the position if any scenario fits the remaining budget.  All
approximations widen feasibility, so dropping or enabling the rule never
changes a count, only the work done.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .board import (BLACK, WHITE, WP, KNIGHT_TO, KING_TO, PAWN_ATT, RAYS,
                    Position, apply, legal_moves, pass_turn)

__all__ = ["count_series_layered", "LayeredStats"]

_OVERFLOW_GUARD = 1 << 55


# ---------------------------------------------------------------------------
# Geometry tables in numpy form for the kernels

def _np_tables():
    kn = np.full((64, 9), -1, dtype=np.int8)
    kg = np.full((64, 9), -1, dtype=np.int8)
    ray = np.full((64, 8, 8), -1, dtype=np.int8)
    for s in range(64):
        for i, t in enumerate(KNIGHT_TO[s]):
            kn[s, i] = t
        for i, t in enumerate(KING_TO[s]):
            kg[s, i] = t
        for d in range(8):
            for i, t in enumerate(RAYS[s][d]):
                ray[s, d, i] = t
    dirs = np.full((64, 64), -1, dtype=np.int8)
    for s in range(64):
        for d in range(8):
            for t in RAYS[s][d]:
                dirs[s, t] = d
    cheb = np.zeros((64, 64), dtype=np.uint8)
    for a in range(64):
        for b in range(64):
            cheb[a, b] = max(abs((a & 7) - (b & 7)), abs((a >> 3) - (b >> 3)))
    return kn, kg, ray, dirs, cheb


_KN, _KG, _RAY, _DIR, _CHEB = _np_tables()


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + \
        ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True)
def _attacked_by_white(b, sq, skip, kn, kg, ray):
    """Is sq attacked by White, with square `skip` treated as empty?"""
    for i in range(9):
        j = kn[sq, i]
        if j < 0:
            break
        if b[j] == 2:
            return True
    for i in range(9):
        j = kg[sq, i]
        if j < 0:
            break
        if b[j] == 6:
            return True
    f = sq & 7
    if sq >= 9 and f > 0 and b[sq - 9] == 1:
        return True
    if sq >= 8 and f < 7 and b[sq - 7] == 1:
        return True
    for d in range(8):
        for i in range(8):
            s2 = ray[sq, d, i]
            if s2 < 0:
                break
            c = 0 if s2 == skip else b[s2]
            if c == 0:
                continue
            if c <= 6:
                if d < 4:
                    if c == 4 or c == 5:
                        return True
                else:
                    if c == 3 or c == 5:
                        return True
            break
    return False


@njit(cache=True)
def _gives_check(b, f, to, newp, kw, kn, ray, dirs):
    """Would the Black move f->to (piece becoming newp) check White's king?"""
    kind = newp - 6
    if kind == 1:
        if to >= 8:
            if (to & 7) < 7 and to - 7 == kw:
                return True
            if (to & 7) > 0 and to - 9 == kw:
                return True
    elif kind == 2:
        for i in range(9):
            j = kn[to, i]
            if j < 0:
                break
            if j == kw:
                return True
    elif kind != 6:
        d = dirs[to, kw]
        ok = (d >= 0 and ((d < 4 and (kind == 4 or kind == 5))
                          or (d >= 4 and (kind == 3 or kind == 5))))
        if ok:
            for i in range(8):
                s2 = ray[to, d, i]
                if s2 == kw:
                    return True
                c = 0 if s2 == f else b[s2]
                if c != 0:
                    break
    # discovered check through the vacated square
    d = dirs[kw, f]
    if d >= 0:
        for i in range(8):
            s2 = ray[kw, d, i]
            if s2 < 0 or s2 == to:
                break
            if s2 == f:
                continue
            c = b[s2]
            if c == 0:
                continue
            if d < 4:
                if c == 10 or c == 11:
                    return True
            else:
                if c == 9 or c == 11:
                    return True
            break
    return False


@njit(cache=True)
def _expand(boards, counts, reject_check, final_layer, kw, kn, kg, ray, dirs):
    """One layer of Black series moves; returns deduplicated children.

    Children are keyed by the 64 board bytes packed into 8 words plus an
    en-passant word that is only set on the final layer (the only time a
    double-push square can matter, for White's mating move).
    """
    n = boards.shape[0]
    cap = _count_pseudo(boards, kn, kg, ray)
    rows = np.empty((cap, 9), dtype=np.uint64)
    cnts = np.empty(cap, dtype=np.int64)
    pos = 0
    pin_dir = np.empty(64, dtype=np.int8)
    pin_sq = np.empty(64, dtype=np.int8)
    pw = np.empty(8, dtype=np.uint64)
    for idx in range(n):
        b = boards[idx]
        cnt = counts[idx]
        kb = -1
        for sq in range(64):
            if b[sq] == 12:
                kb = sq
                break
        for w in range(8):
            v = np.uint64(0)
            for j in range(8):
                v |= np.uint64(b[w * 8 + j]) << np.uint64(8 * j)
            pw[w] = v
        for sq in range(64):
            pin_dir[sq] = -1
        if kb >= 0:
            for d in range(8):
                blocker = -1
                for i in range(8):
                    s2 = ray[kb, d, i]
                    if s2 < 0:
                        break
                    c = b[s2]
                    if c == 0:
                        continue
                    if blocker < 0:
                        if c >= 7:
                            blocker = s2
                            continue
                        break
                    if c >= 7:
                        break
                    if (d < 4 and (c == 4 or c == 5)) or \
                       (d >= 4 and (c == 3 or c == 5)):
                        pin_dir[blocker] = d
                        pin_sq[blocker] = s2
                    break
        for f in range(64):
            p = b[f]
            if p < 7:
                continue
            if p == 7:
                fl = f & 7
                to1 = f - 8
                if b[to1] == 0:
                    pos += _emit_pawn(rows, cnts, pos, pw, b, cnt, f, to1, False,
                                      reject_check, final_layer, kw, kb,
                                      pin_dir, pin_sq, kn, ray, dirs)
                    if (f >> 3) == 6 and b[f - 16] == 0:
                        pos += _emit_pawn(rows, cnts, pos, pw, b, cnt, f, f - 16,
                                          True, reject_check, final_layer,
                                          kw, kb, pin_dir, pin_sq, kn, ray, dirs)
                if fl > 0 and 1 <= b[f - 9] <= 5:
                    pos += _emit_pawn(rows, cnts, pos, pw, b, cnt, f, f - 9, False,
                                      reject_check, final_layer, kw, kb,
                                      pin_dir, pin_sq, kn, ray, dirs)
                if fl < 7 and 1 <= b[f - 7] <= 5:
                    pos += _emit_pawn(rows, cnts, pos, pw, b, cnt, f, f - 7, False,
                                      reject_check, final_layer, kw, kb,
                                      pin_dir, pin_sq, kn, ray, dirs)
            elif p == 8 or p == 12:
                tbl = kn if p == 8 else kg
                for i in range(9):
                    to = tbl[f, i]
                    if to < 0:
                        break
                    dest = b[to]
                    if dest >= 7 or dest == 6:
                        continue
                    pos += _emit(rows, cnts, pos, pw, b, cnt, f, to, p, 0,
                                     reject_check, kw, kb, pin_dir, pin_sq,
                                     kn, kg, ray, dirs)
            else:
                lo = 4 if p == 9 else 0
                hi = 4 if p == 10 else 8
                for d in range(lo, hi):
                    for i in range(8):
                        to = ray[f, d, i]
                        if to < 0:
                            break
                        dest = b[to]
                        if dest >= 7 or dest == 6:
                            break
                        pos += _emit(rows, cnts, pos, pw, b, cnt, f, to, p, 0,
                                     reject_check, kw, kb, pin_dir, pin_sq,
                                     kn, kg, ray, dirs)
                        if dest != 0:
                            break
    keys, vals = _merge_rows(rows, cnts, pos)
    return keys, vals, pos


@njit(cache=True)
def _count_pseudo(boards, kn, kg, ray):
    """Upper bound on the number of Black moves a layer can emit."""
    total = 0
    for idx in range(boards.shape[0]):
        b = boards[idx]
        for f in range(64):
            p = b[f]
            if p < 7:
                continue
            if p == 7:
                fl = f & 7
                w = 4 if f - 8 < 8 else 1
                if b[f - 8] == 0:
                    total += w
                    if (f >> 3) == 6 and b[f - 16] == 0:
                        total += 1
                if fl > 0 and 1 <= b[f - 9] <= 5:
                    total += w
                if fl < 7 and 1 <= b[f - 7] <= 5:
                    total += w
            elif p == 8 or p == 12:
                tbl = kn if p == 8 else kg
                for i in range(9):
                    to = tbl[f, i]
                    if to < 0:
                        break
                    dest = b[to]
                    if dest >= 7 or dest == 6:
                        continue
                    total += 1
            else:
                lo = 4 if p == 9 else 0
                hi = 4 if p == 10 else 8
                for d in range(lo, hi):
                    for i in range(8):
                        to = ray[f, d, i]
                        if to < 0:
                            break
                        dest = b[to]
                        if dest >= 7 or dest == 6:
                            break
                        total += 1
                        if dest != 0:
                            break
    return total


@njit(cache=True)
def _merge_rows(rows, cnts, pos):
    """Sum path counts of identical child keys (hash sort, exact compare)."""
    hashes = np.empty(pos, dtype=np.uint64)
    for i in range(pos):
        h = np.uint64(0x9E3779B97F4A7C15)
        for w in range(9):
            h ^= rows[i, w]
            h *= np.uint64(0xBF58476D1CE4E5B9)
            h ^= h >> np.uint64(29)
        hashes[i] = h
    order = np.argsort(hashes)
    out_rows = np.empty((pos, 9), dtype=np.uint64)
    out_cnts = np.empty(pos, dtype=np.int64)
    m = 0
    i = 0
    while i < pos:
        j = i
        h = hashes[order[i]]
        while j < pos and hashes[order[j]] == h:
            j += 1
        for a in range(i, j):
            ra = order[a]
            if cnts[ra] == 0:
                continue
            c = cnts[ra]
            for q in range(a + 1, j):
                rb = order[q]
                if cnts[rb] == 0:
                    continue
                same = True
                for w in range(9):
                    if rows[ra, w] != rows[rb, w]:
                        same = False
                        break
                if same:
                    c += cnts[rb]
                    cnts[rb] = 0
            for w in range(9):
                out_rows[m, w] = rows[ra, w]
            out_cnts[m] = c
            m += 1
        i = j
    return out_rows[:m].copy(), out_cnts[:m].copy()


@njit(cache=True, inline="always")
def _pack_row(rows, cnts, pos, pw, cnt, f, to, newp, epw):
    for w in range(8):
        rows[pos, w] = pw[w]
    sf = np.uint64((f & 7) * 8)
    st = np.uint64((to & 7) * 8)
    rows[pos, f >> 3] &= ~(np.uint64(0xFF) << sf)
    rows[pos, to >> 3] = (rows[pos, to >> 3] & ~(np.uint64(0xFF) << st)) | \
        (np.uint64(newp) << st)
    rows[pos, 8] = np.uint64(epw)
    cnts[pos] = cnt


@njit(cache=True, inline="always")
def _emit(rows, cnts, pos, pw, b, cnt, f, to, newp, epw, reject_check,
          kw, kb, pin_dir, pin_sq, kn, kg, ray, dirs):
    if newp == 12:
        if _attacked_by_white(b, to, f, kn, kg, ray):
            return 0
    elif kb >= 0 and pin_dir[f] >= 0:
        d = pin_dir[f]
        if not (dirs[kb, to] == d and (to == pin_sq[f] or dirs[to, pin_sq[f]] == d)):
            return 0
    if reject_check and kw >= 0:
        if _gives_check(b, f, to, newp, kw, kn, ray, dirs):
            return 0
    _pack_row(rows, cnts, pos, pw, cnt, f, to, newp, epw)
    return 1


@njit(cache=True, inline="always")
def _emit_pawn(rows, cnts, pos, pw, b, cnt, f, to, double, reject_check,
               final_layer, kw, kb, pin_dir, pin_sq, kn, ray, dirs):
    if kb >= 0 and pin_dir[f] >= 0:
        d = pin_dir[f]
        if not (dirs[kb, to] == d and (to == pin_sq[f] or dirs[to, pin_sq[f]] == d)):
            return 0
    emitted = 0
    if to < 8:
        for newp in range(8, 12):
            if reject_check and kw >= 0 and \
                    _gives_check(b, f, to, newp, kw, kn, ray, dirs):
                continue
            _pack_row(rows, cnts, pos + emitted, pw, cnt, f, to, newp, 0)
            emitted += 1
        return emitted
    if reject_check and kw >= 0:
        if _gives_check(b, f, to, 7, kw, kn, ray, dirs):
            return 0
    epw = 0
    if double and final_layer:
        # en passant can only matter if a white pawn stands beside the pawn
        if ((to & 7) > 0 and b[to - 1] == 1) or ((to & 7) < 7 and b[to + 1] == 1):
            epw = (f - 8) + 1
    _pack_row(rows, cnts, pos, pw, cnt, f, to, 7, epw)
    return 1


@njit(cache=True)
def _fill_dfs(sc, missing, mlen, fm, scratch, kn, ray):
    """Can some order of single-move placements put a black man on every
    square in `missing`?  `sc` is the board (king removed); men standing on
    required squares (`fm`) never move.  Board edits are undone on return."""
    if mlen == 0:
        return True
    for mi in range(mlen):
        t = missing[mi]
        occ = sc[t]  # a White man here is captured by the arriving man
        row = scratch[mlen]
        cnt = 0
        if occ == 0:
            if t + 8 < 64 and sc[t + 8] == 7:
                row[cnt] = t + 8
                cnt += 1
            if t + 16 < 64 and (t + 16) >> 3 == 6 and sc[t + 8] == 0 \
                    and sc[t + 16] == 7:
                row[cnt] = t + 16
                cnt += 1
        else:
            if (t & 7) > 0 and t + 7 < 64 and sc[t + 7] == 7:
                row[cnt] = t + 7
                cnt += 1
            if (t & 7) < 7 and t + 9 < 64 and sc[t + 9] == 7:
                row[cnt] = t + 9
                cnt += 1
        for i in range(9):
            j = kn[t, i]
            if j < 0:
                break
            if sc[j] == 8:
                row[cnt] = j
                cnt += 1
        for d in range(8):
            for i in range(8):
                s2 = ray[t, d, i]
                if s2 < 0:
                    break
                c = sc[s2]
                if c == 0:
                    continue
                if (d < 4 and (c == 10 or c == 11)) or \
                        (d >= 4 and (c == 9 or c == 11)):
                    row[cnt] = s2
                    cnt += 1
                break
        for oi in range(cnt):
            frm = row[oi]
            if (fm >> np.uint64(frm)) & np.uint64(1):
                continue
            c = sc[frm]
            sc[frm] = 0
            sc[t] = c
            missing[mi] = missing[mlen - 1]
            missing[mlen - 1] = t
            ok = _fill_dfs(sc, missing, mlen - 1, fm, scratch, kn, ray)
            missing[mlen - 1] = missing[mi]
            missing[mi] = t
            sc[t] = occ
            sc[frm] = c
            if ok:
                return True
    return False


@njit(cache=True)
def _assign_le(costm, ntarg, nmen, limit, tmin, asg):
    """Is there an assignment of distinct men to all targets with total
    cost <= limit?  Iterative branch and bound over targets; `tmin` holds
    each target's cheapest cost as an optimistic completion bound and
    `asg` is (4, n+1) scratch."""
    jidx = asg[0]
    jsel = asg[1]
    acc = asg[2]
    suffix = asg[3]
    suffix[ntarg] = 0
    for ti in range(ntarg - 1, -1, -1):
        suffix[ti] = suffix[ti + 1] + tmin[ti]
    acc[0] = 0
    jidx[0] = 0
    used = 0
    ti = 0
    while True:
        if ti == ntarg:
            return True
        advanced = False
        j = jidx[ti]
        while j < nmen:
            if not (used >> j) & 1:
                c = costm[ti, j]
                if acc[ti] + c + suffix[ti + 1] <= limit:
                    jidx[ti] = j + 1
                    jsel[ti] = j
                    used |= 1 << j
                    acc[ti + 1] = acc[ti] + c
                    advanced = True
                    break
            j += 1
        if advanced:
            ti += 1
            if ti < ntarg:
                jidx[ti] = 0
            continue
        ti -= 1
        if ti < 0:
            return False
        used &= ~(1 << jsel[ti])


@njit(cache=True, inline="always")
def _fill_cost(ftab, cls, kind, f, t, bits):
    """Cheapest route of one man (current square f, kind) to occupy t as a
    piece kind permitted by `bits` (bit 0 pawn .. bit 4 queen)."""
    best = 200
    if kind == 0:
        if bits & 1:
            best = ftab[cls, 8, f, t]
        for k in range(1, 5):
            if (bits >> k) & 1:
                d = ftab[cls, 3 + k, f, t]
                if d < best:
                    best = d
    else:
        if (bits >> kind) & 1:
            best = ftab[cls, kind - 1, f, t]
    return best


@njit(cache=True)
def _mate_test(b, kb, bocc, wocc, men_sq, men_k, nm, r, mask_data, mask_off,
               mask_clear, mask_wmust, mask_worig, mask_cls, mask_kinds,
               ftab, kn, ray, sc, missing, scratch, costm, tmin, asg):
    """Could this position still lead to a mate within r more Black moves?

    `bocc` and the men arrays describe the black men other than the king:
    the king never counts as a blocker, because at mate time it sits on
    the mated square, having vacated wherever it stands now.
    """
    if kb < 0:
        return True
    sc_ready = False
    kr = kb >> 3
    kf = kb & 7
    r0 = kr - r if kr > r else 0
    r1 = kr + r if kr + r < 7 else 7
    f0 = kf - r if kf > r else 0
    f1 = kf + r if kf + r < 7 else 7
    one = np.uint64(1)
    for sr in range(r0, r1 + 1):
        base = sr << 3
        for sf in range(f0, f1 + 1):
            s = base + sf
            for mi in range(mask_off[s], mask_off[s + 1]):
                worig = mask_worig[mi]
                if worig >= 0 and not (wocc >> np.uint64(worig)) & one:
                    continue  # the mating man has been captured
                wm = mask_wmust[mi] & wocc
                if wm != np.uint64(0) and int(_popcount(wm)) > r:
                    continue  # each White man in the way costs a capture
                cls = mask_cls[mi]
                kd = ftab[cls, 9, kb, s]
                if kd > r:
                    continue
                budget = r - kd
                if budget == 0:
                    # with no slack left, every square the mate needs free
                    # of Black men must already be free (the occupants
                    # would each need a move of their own to vacate), and
                    # every White man in the way must be gone already
                    if (bocc >> np.uint64(s)) & one:
                        continue
                    if mask_clear[mi] & bocc or wm != np.uint64(0):
                        continue
                fm = mask_data[mi]
                miss = fm & ~bocc
                npop = int(_popcount(miss))
                if npop > budget:
                    continue
                if npop == 0:
                    return True
                kinds = mask_kinds[mi]
                tot = 0
                ml = 0
                mm = miss
                ok = True
                while mm != np.uint64(0):
                    low = mm & (~mm + one)
                    t = int(_popcount(low - one))
                    mm &= mm - one
                    idx = int(_popcount(fm & (low - one)))
                    bits = int((kinds >> np.uint64(8 * idx)) & np.uint64(0xFF))
                    best = 200
                    for j in range(nm):
                        c = _fill_cost(ftab, cls, men_k[j], men_sq[j], t, bits)
                        costm[ml, j] = c
                        if c < best:
                            best = c
                    tmin[ml] = best
                    tot += best
                    if tot > budget:
                        ok = False
                        break
                    missing[ml] = t
                    ml += 1
                if not ok:
                    continue
                if ml >= 2 and ml <= 6:
                    if not _assign_le(costm, ml, nm, budget, tmin, asg):
                        continue
                if ml == budget and ml <= 4:
                    # no slack: every move must be a placement, so an
                    # executable placement order must exist right now
                    if not sc_ready:
                        for sq in range(64):
                            sc[sq] = b[sq]
                        sc[kb] = 0
                        sc_ready = True
                    if _fill_dfs(sc, missing, ml, fm, scratch, kn, ray):
                        return True
                else:
                    return True
    return False


@njit(cache=True)
def _mate_filter(boards, r, mask_data, mask_off, mask_clear, mask_wmust,
                 mask_worig, mask_cls, mask_kinds, ftab, frozen, kn, ray,
                 keep):
    kept = 0
    sc = np.empty(64, dtype=np.uint8)
    missing = np.empty(12, dtype=np.int64)
    scratch = np.empty((9, 24), dtype=np.int64)
    men_sq = np.empty(16, dtype=np.int64)
    men_k = np.empty(16, dtype=np.int64)
    costm = np.empty((12, 16), dtype=np.int64)
    tmin = np.empty(12, dtype=np.int64)
    asg = np.empty((4, 13), dtype=np.int64)
    for i in range(boards.shape[0]):
        b = boards[i]
        kb = -1
        nm = 0
        bocc = np.uint64(0)
        wocc = np.uint64(0)
        for sq in range(64):
            c = b[sq]
            if c == 0:
                continue
            if c >= 7:
                if c == 12:
                    kb = sq
                else:
                    bocc |= np.uint64(1) << np.uint64(sq)
                    if frozen[sq] == 0:
                        men_sq[nm] = sq
                        men_k[nm] = c - 7
                        nm += 1
            else:
                wocc |= np.uint64(1) << np.uint64(sq)
        ok = _mate_test(b, kb, bocc, wocc, men_sq, men_k, nm, r, mask_data,
                        mask_off, mask_clear, mask_wmust, mask_worig,
                        mask_cls, mask_kinds, ftab, kn, ray, sc, missing,
                        scratch, costm, tmin, asg)
        keep[i] = ok
        if ok:
            kept += 1
    return kept


@njit(cache=True)
def _attacked_by_black(b, sq, kn, kg, ray):
    """Is sq attacked by Black?"""
    for i in range(9):
        j = kn[sq, i]
        if j < 0:
            break
        if b[j] == 8:
            return True
    for i in range(9):
        j = kg[sq, i]
        if j < 0:
            break
        if b[j] == 12:
            return True
    f = sq & 7
    if sq + 7 < 64 and f > 0 and b[sq + 7] == 7:
        return True
    if sq + 9 < 64 and f < 7 and b[sq + 9] == 7:
        return True
    for d in range(8):
        for i in range(8):
            s2 = ray[sq, d, i]
            if s2 < 0:
                break
            c = b[s2]
            if c == 0:
                continue
            if c >= 7:
                if d < 4:
                    if c == 10 or c == 11:
                        return True
                else:
                    if c == 9 or c == 11:
                        return True
            break
    return False


@njit(cache=True)
def _try_black(b, f, to, kb, kn, kg, ray):
    """Play a non-king Black reply in place; True if it parries the check."""
    pf = b[f]
    pt = b[to]
    b[f] = 0
    b[to] = pf
    ok = not _attacked_by_white(b, kb, -1, kn, kg, ray)
    b[to] = pt
    b[f] = pf
    return ok


@njit(cache=True)
def _black_can_escape(b, ep_to, kn, kg, ray):
    """Black to move, in check: does any legal reply exist?  ep_to >= 0 is
    the square a black pawn could capture onto en passant."""
    kb = -1
    for sq in range(64):
        if b[sq] == 12:
            kb = sq
    if kb < 0:
        return True
    for i in range(9):
        to = kg[kb, i]
        if to < 0:
            break
        if b[to] >= 7 or b[to] == 6:
            continue
        pt = b[to]
        b[kb] = 0
        b[to] = 12
        ok = not _attacked_by_white(b, to, -1, kn, kg, ray)
        b[to] = pt
        b[kb] = 12
        if ok:
            return True
    for f in range(64):
        p = b[f]
        if p < 7 or p == 12:
            continue
        if p == 7:
            fl = f & 7
            if b[f - 8] == 0:
                if _try_black(b, f, f - 8, kb, kn, kg, ray):
                    return True
                if (f >> 3) == 6 and b[f - 16] == 0:
                    if _try_black(b, f, f - 16, kb, kn, kg, ray):
                        return True
            if fl > 0 and 1 <= b[f - 9] <= 5:
                if _try_black(b, f, f - 9, kb, kn, kg, ray):
                    return True
            if fl < 7 and 1 <= b[f - 7] <= 5:
                if _try_black(b, f, f - 7, kb, kn, kg, ray):
                    return True
            if ep_to >= 0 and ((fl > 0 and f - 9 == ep_to)
                               or (fl < 7 and f - 7 == ep_to)):
                cap = ep_to + 8
                pc = b[cap]
                b[cap] = 0
                b[f] = 0
                b[ep_to] = 7
                ok = not _attacked_by_white(b, kb, -1, kn, kg, ray)
                b[ep_to] = 0
                b[f] = 7
                b[cap] = pc
                if ok:
                    return True
        elif p == 8:
            for i in range(9):
                to = kn[f, i]
                if to < 0:
                    break
                if b[to] >= 7 or b[to] == 6:
                    continue
                if _try_black(b, f, to, kb, kn, kg, ray):
                    return True
        else:
            lo = 4 if p == 9 else 0
            hi = 4 if p == 10 else 8
            for d in range(lo, hi):
                for i in range(8):
                    to = ray[f, d, i]
                    if to < 0:
                        break
                    c = b[to]
                    if c >= 7 or c == 6:
                        break
                    if _try_black(b, f, to, kb, kn, kg, ray):
                        return True
                    if c != 0:
                        break
    return False


@njit(cache=True)
def _try_white(b, f, to, newp, black_ep, kb, kw, kn, kg, ray):
    """Play a White move in place; 1 if it is legal and checkmates."""
    pf = b[f]
    pt = b[to]
    b[f] = 0
    b[to] = newp if newp else pf
    ok = 0
    kws = to if pf == 6 else kw
    if kws < 0 or not _attacked_by_black(b, kws, kn, kg, ray):
        if _attacked_by_white(b, kb, -1, kn, kg, ray):
            if not _black_can_escape(b, black_ep, kn, kg, ray):
                ok = 1
    b[to] = pt
    b[f] = pf
    return ok


@njit(cache=True)
def _try_white_ep(b, f, ep, kb, kw, kn, kg, ray):
    cap = ep - 8
    pc = b[cap]
    pf = b[f]
    b[cap] = 0
    b[f] = 0
    b[ep] = 1
    ok = 0
    if kw < 0 or not _attacked_by_black(b, kw, kn, kg, ray):
        if _attacked_by_white(b, kb, -1, kn, kg, ray):
            if not _black_can_escape(b, -1, kn, kg, ray):
                ok = 1
    b[ep] = 0
    b[f] = pf
    b[cap] = pc
    return ok


@njit(cache=True)
def _mate_in_one_count(b, ep, kb, kw, kn, kg, ray):
    """Number of legal White moves that checkmate Black; no castling."""
    mates = 0
    for f in range(64):
        p = b[f]
        if p == 0 or p >= 7:
            continue
        if p == 1:
            fl = f & 7
            if b[f + 8] == 0:
                if f + 8 >= 56:
                    for pr in range(2, 6):
                        mates += _try_white(b, f, f + 8, pr, -1, kb, kw,
                                            kn, kg, ray)
                else:
                    mates += _try_white(b, f, f + 8, 0, -1, kb, kw,
                                        kn, kg, ray)
                    if (f >> 3) == 1 and b[f + 16] == 0:
                        mates += _try_white(b, f, f + 16, 0, f + 8, kb, kw,
                                            kn, kg, ray)
            for side in range(2):
                to = f + 7 if side == 0 else f + 9
                if (side == 0 and fl == 0) or (side == 1 and fl == 7):
                    continue
                if 7 <= b[to] <= 11:
                    if to >= 56:
                        for pr in range(2, 6):
                            mates += _try_white(b, f, to, pr, -1, kb, kw,
                                                kn, kg, ray)
                    else:
                        mates += _try_white(b, f, to, 0, -1, kb, kw,
                                            kn, kg, ray)
                elif to == ep:
                    mates += _try_white_ep(b, f, ep, kb, kw, kn, kg, ray)
        elif p == 2 or p == 6:
            tbl = kn if p == 2 else kg
            for i in range(9):
                to = tbl[f, i]
                if to < 0:
                    break
                c = b[to]
                if (1 <= c <= 6) or c == 12:
                    continue
                mates += _try_white(b, f, to, 0, -1, kb, kw, kn, kg, ray)
        else:
            lo = 4 if p == 3 else 0
            hi = 4 if p == 4 else 8
            for d in range(lo, hi):
                for i in range(8):
                    to = ray[f, d, i]
                    if to < 0:
                        break
                    c = b[to]
                    if (1 <= c <= 6) or c == 12:
                        break
                    mates += _try_white(b, f, to, 0, -1, kb, kw, kn, kg, ray)
                    if c != 0:
                        break
    return mates


@njit(cache=True)
def _mate_counts(boards, eps, kn, kg, ray):
    """Mating-move counts for each final-layer board (White to move)."""
    out = np.zeros(boards.shape[0], dtype=np.int64)
    b = np.empty(64, dtype=np.uint8)
    for i in range(boards.shape[0]):
        kb = -1
        kw = -1
        for sq in range(64):
            c = boards[i, sq]
            b[sq] = c
            if c == 12:
                kb = sq
            elif c == 6:
                kw = sq
        if kb < 0:
            continue  # no black king, so no checkmate
        out[i] = _mate_in_one_count(b, eps[i] - 1, kb, kw, kn, kg, ray)
    return out


# ---------------------------------------------------------------------------
# Route tables: how far can each black man actually travel?

@njit(cache=True, inline="always")
def _check_stand(k, sq, kw):
    """Would a black man of kind k (0 P .. 4 Q) on sq give the white king a
    check that no later interposition could block?"""
    if kw < 0:
        return False
    sf = sq & 7
    if k == 0:
        return sq >= 8 and ((sf < 7 and sq - 7 == kw) or
                            (sf > 0 and sq - 9 == kw))
    df = sf - (kw & 7)
    if df < 0:
        df = -df
    dr = (sq >> 3) - (kw >> 3)
    if dr < 0:
        dr = -dr
    if k == 1:
        return (df == 1 and dr == 2) or (df == 2 and dr == 1)
    if k == 2:
        return df == 1 and dr == 1
    if k == 3:
        return df + dr == 1
    return df <= 1 and dr <= 1 and df + dr >= 1


@njit(cache=True)
def _frozen_mask(b, kw, kn, ray):
    """Black men that provably can never move (the king is never frozen).

    White men never move during the series and black men are never
    captured, so a square emptied later must be vacated by a movable
    black man or a captured white one; only the white king and other
    frozen men block permanently.  Standing where the mover would give
    an unblockable check is excluded: such a move can only be Black's
    very last, so it cannot open a path for any other journey."""
    frozen = np.zeros(64, dtype=np.uint8)
    for sq in range(64):
        if 7 <= b[sq] <= 11:
            frozen[sq] = 1
    changed = True
    while changed:
        changed = False
        for f in range(64):
            if frozen[f] == 0:
                continue
            p = b[f]
            movable = False
            fl = f & 7
            if p == 7:
                t = f - 8
                if t >= 0 and t != kw and frozen[t] == 0:
                    if t < 8 or not _check_stand(0, t, kw):
                        movable = True
                if not movable and (f >> 3) == 6:
                    mid = f - 8
                    t2 = f - 16
                    if mid != kw and frozen[mid] == 0 and t2 != kw \
                            and frozen[t2] == 0 \
                            and not _check_stand(0, t2, kw):
                        movable = True
                if not movable and fl > 0 and 1 <= b[f - 9] <= 5:
                    if f - 9 < 8 or not _check_stand(0, f - 9, kw):
                        movable = True
                if not movable and fl < 7 and 1 <= b[f - 7] <= 5:
                    if f - 7 < 8 or not _check_stand(0, f - 7, kw):
                        movable = True
                if not movable and (f >> 3) == 3:
                    # a neighbouring white pawn might grant en passant
                    if (fl > 0 and b[f - 1] == 1) or \
                            (fl < 7 and b[f + 1] == 1):
                        movable = True
            elif p == 8:
                for i in range(9):
                    t = kn[f, i]
                    if t < 0:
                        break
                    if t == kw or frozen[t] == 1:
                        continue
                    if not _check_stand(1, t, kw):
                        movable = True
                        break
            else:
                kind = p - 7
                lo = 4 if p == 9 else 0
                hi = 4 if p == 10 else 8
                for d in range(lo, hi):
                    if movable:
                        break
                    for i in range(8):
                        t = ray[f, d, i]
                        if t < 0 or t == kw or frozen[t] == 1:
                            break
                        if not _check_stand(kind, t, kw):
                            movable = True
                            break
            if movable:
                frozen[f] = 0
                changed = True
    return frozen


@njit(cache=True)
def _metric_arrays(b, kw, worig, frozen, removable, kn):
    """Blockers and stand permissions for one metric class.

    block: squares no journey may pass or stop on.  stand[k]: squares a
    man of kind k may stop on mid-journey.  kstand: the same for the
    king, which additionally may never stand where a permanent White man
    attacks it (katt).  wcap: White men a journey may capture en route;
    wcapf: White men a journey's final move may capture."""
    block = np.zeros(64, dtype=np.uint8)
    wcap = np.zeros(64, dtype=np.uint8)
    wcapf = np.zeros(64, dtype=np.uint8)
    for sq in range(64):
        c = b[sq]
        if sq == kw or sq == worig:
            block[sq] = 1
        elif 7 <= c <= 11 and frozen[sq] == 1:
            block[sq] = 1
        elif 1 <= c <= 6:
            if removable[sq] == 1:
                wcap[sq] = 1
            else:
                block[sq] = 1
            wcapf[sq] = 1
    stand = np.zeros((5, 64), dtype=np.uint8)
    for k in range(5):
        for sq in range(64):
            if block[sq] == 0 and not _check_stand(k, sq, kw):
                stand[k, sq] = 1
    katt = np.zeros(64, dtype=np.uint8)
    for ws in range(64):
        c = b[ws]
        if not (1 <= c <= 6):
            continue
        if ws != kw and ws != worig and removable[ws] == 1:
            continue
        wf = ws & 7
        if c == 1:
            if wf > 0 and ws + 7 < 64:
                katt[ws + 7] = 1
            if wf < 7 and ws + 9 < 64:
                katt[ws + 9] = 1
        elif c == 2:
            for i in range(9):
                j = kn[ws, i]
                if j < 0:
                    break
                katt[j] = 1
        else:
            for x in range(64):
                df = (x & 7) - wf
                if df < 0:
                    df = -df
                dr = (x >> 3) - (ws >> 3)
                if dr < 0:
                    dr = -dr
                if df > 1 or dr > 1 or df + dr == 0:
                    continue
                diag = df == 1 and dr == 1
                if c == 5 or c == 6 or (c == 3 and diag) or \
                        (c == 4 and not diag):
                    katt[x] = 1
    kstand = np.zeros(64, dtype=np.uint8)
    for sq in range(64):
        if block[sq] == 0 and katt[sq] == 0:
            kstand[sq] = 1
    return block, stand, kstand, katt, wcap, wcapf


@njit(cache=True)
def _hop_dists(tbl, standrow):
    """All-pairs distances for a single-step leaper (knight or king table)
    whose every stop must satisfy `standrow`."""
    ds = np.full((64, 64), 200, dtype=np.uint8)
    queue = np.empty(64, dtype=np.int64)
    for f in range(64):
        ds[f, f] = 0
        head = 0
        tail = 1
        queue[0] = f
        while head < tail:
            x = queue[head]
            head += 1
            d = ds[f, x] + 1
            for i in range(9):
                t = tbl[x, i]
                if t < 0:
                    break
                if standrow[t] == 1 and ds[f, t] > d:
                    ds[f, t] = d
                    queue[tail] = t
                    tail += 1
    return ds


@njit(cache=True)
def _hop_final_into(ftab, cls, row, tbl, ds, standrow):
    """Write ds into the class table row, relaxing the last move: a journey may end on
    a square it could not stop on mid-route (a capture, or a stop that
    only the mating move itself makes legal)."""
    origs = np.empty(9, dtype=np.int64)
    for t in range(64):
        if standrow[t] == 1:
            for f in range(64):
                ftab[cls, row, f, t] = ds[f, t]
            continue
        cnt = 0
        for i in range(9):
            x = tbl[t, i]
            if x < 0:
                break
            if standrow[x] == 1:
                origs[cnt] = x
                cnt += 1
        for f in range(64):
            best = 200
            for i in range(cnt):
                v = ds[f, origs[i]]
                if v < best:
                    best = v
            v = best + 1 if best < 200 else 200
            if f == t:
                v = 0
            ftab[cls, row, f, t] = v


@njit(cache=True)
def _slide_dists(k, block, standrow, ray):
    """All-pairs slider distances (kind 2 B, 3 R, 4 Q): stops must satisfy
    `standrow` and rays stop at blocked squares."""
    lo = 4 if k == 2 else 0
    hi = 4 if k == 3 else 8
    ds = np.full((64, 64), 200, dtype=np.uint8)
    queue = np.empty(64, dtype=np.int64)
    for f in range(64):
        ds[f, f] = 0
        head = 0
        tail = 1
        queue[0] = f
        while head < tail:
            x = queue[head]
            head += 1
            d = ds[f, x] + 1
            for dd in range(lo, hi):
                for i in range(8):
                    t = ray[x, dd, i]
                    if t < 0 or block[t] == 1:
                        break
                    if standrow[t] == 1 and ds[f, t] > d:
                        ds[f, t] = d
                        queue[tail] = t
                        tail += 1
    return ds


@njit(cache=True)
def _slide_final_into(ftab, cls, row, k, ds, block, standrow, ray):
    """Slider version of the relaxed-last-move table."""
    lo = 4 if k == 2 else 0
    hi = 4 if k == 3 else 8
    origs = np.empty(28, dtype=np.int64)
    for t in range(64):
        if standrow[t] == 1:
            for f in range(64):
                ftab[cls, row, f, t] = ds[f, t]
            continue
        cnt = 0
        for dd in range(lo, hi):
            for i in range(8):
                x = ray[t, dd, i]
                if x < 0 or block[x] == 1:
                    break
                if standrow[x] == 1:
                    origs[cnt] = x
                    cnt += 1
        for f in range(64):
            best = 200
            for i in range(cnt):
                v = ds[f, origs[i]]
                if v < best:
                    best = v
            v = best + 1 if best < 200 else 200
            if f == t:
                v = 0
            ftab[cls, row, f, t] = v


@njit(cache=True)
def _pawn_tables(ftab, cls, block, stand, wcap, wcapf):
    """Rows 4..8 of D: pawn journeys.  Mid-route stops obey stand[0],
    diagonal steps need a capturable White man, and promotion arrivals
    chain into the promoted piece's relaxed tables (rows 0..3, which must
    already be filled).  Row 3+k promotes to kind k; row 8 stays a pawn."""
    dp = np.empty(64, dtype=np.int64)
    parr = np.empty(8, dtype=np.int64)
    parrf = np.empty(8, dtype=np.int64)
    queue = np.empty(64, dtype=np.int64)
    for f in range(64):
        if f < 8:
            for t in range(64):
                for row in range(4, 9):
                    ftab[cls, row, f, t] = 200
            continue
        for i in range(64):
            dp[i] = 200
        for i in range(8):
            parr[i] = 200
        dp[f] = 0
        head = 0
        tail = 1
        queue[0] = f
        while head < tail:
            x = queue[head]
            head += 1
            d = dp[x] + 1
            xf = x & 7
            t = x - 8
            if t >= 0 and block[t] == 0:
                if t < 8:
                    if d < parr[t]:
                        parr[t] = d
                elif stand[0, t] == 1 and d < dp[t]:
                    dp[t] = d
                    queue[tail] = t
                    tail += 1
            if (x >> 3) == 6:
                mid = x - 8
                t2 = x - 16
                if block[mid] == 0 and block[t2] == 0 and \
                        stand[0, t2] == 1 and d < dp[t2]:
                    dp[t2] = d
                    queue[tail] = t2
                    tail += 1
            for side in range(2):
                if side == 0:
                    if xf == 0:
                        continue
                    t = x - 9
                else:
                    if xf == 7:
                        continue
                    t = x - 7
                if wcap[t] == 0:
                    continue
                if t < 8:
                    if d < parr[t]:
                        parr[t] = d
                elif stand[0, t] == 1 and d < dp[t]:
                    dp[t] = d
                    queue[tail] = t
                    tail += 1
        # relaxed promotion arrivals: the promotion is the final move
        for t in range(8):
            v = parr[t]
            if block[t] == 0 and dp[t + 8] + 1 < v:
                v = dp[t + 8] + 1
            if wcapf[t] == 1:
                if (t & 7) < 7 and dp[t + 9] + 1 < v:
                    v = dp[t + 9] + 1
                if (t & 7) > 0 and dp[t + 7] + 1 < v:
                    v = dp[t + 7] + 1
            parrf[t] = v
        for t in range(8, 56):
            v = dp[t]
            if block[t] == 0:
                if dp[t + 8] + 1 < v:
                    v = dp[t + 8] + 1
                if (t >> 3) == 4 and block[t + 8] == 0 and \
                        dp[t + 16] + 1 < v:
                    v = dp[t + 16] + 1
            if wcapf[t] == 1:
                if (t & 7) < 7 and dp[t + 9] + 1 < v:
                    v = dp[t + 9] + 1
                if (t & 7) > 0 and dp[t + 7] + 1 < v:
                    v = dp[t + 7] + 1
            if f == t:
                v = 0
            ftab[cls, 8, f, t] = v if v < 200 else 200
        for t in range(56, 64):
            ftab[cls, 8, f, t] = 0 if f == t else 200  # pawns never move up
        for t in range(8):
            ftab[cls, 8, f, t] = 200  # a pawn reaching
        for k in range(1, 5):
            row = 3 + k
            for t in range(64):
                best = 200
                for pq in range(8):
                    a = parr[pq]
                    if a < 200 and stand[k, pq] == 1:
                        v = a + ftab[cls, k - 1, pq, t]
                        if v < best:
                            best = v
                    if pq == t and parrf[pq] < best:
                        best = parrf[pq]
                ftab[cls, row, f, t] = best if best < 200 else 200


@njit(cache=True)
def _fill_dist_tables(ftab, cls, block, stand, kstand, wcap, wcapf, kn, kg, ray):
    ds = _hop_dists(kn, stand[1])
    _hop_final_into(ftab, cls, 0, kn, ds, stand[1])
    for k in range(2, 5):
        dsl = _slide_dists(k, block, stand[k], ray)
        _slide_final_into(ftab, cls, k - 1, k, dsl, block, stand[k], ray)
    dsk = _hop_dists(kg, kstand)
    _hop_final_into(ftab, cls, 9, kg, dsk, kstand)
    _pawn_tables(ftab, cls, block, stand, wcap, wcapf)


@njit(cache=True)
def _removable_probe(w, ftab, cls, b, kw, fm, kindsw, msq, mk, nm, budget, kb0, katt):
    """Could some completion of this mask within `budget` Black moves also
    capture the White man on w?  One man's route is charged exactly; the
    other required squares are charged their cheapest fillers (second
    cheapest where the capturer was cheapest), so a False answer proves
    no completion ever captures w."""
    nt = 0
    tsq = np.empty(12, dtype=np.int64)
    tbits = np.empty(12, dtype=np.int64)
    best1 = np.empty(12, dtype=np.int64)
    best2 = np.empty(12, dtype=np.int64)
    bestj = np.empty(12, dtype=np.int64)
    one = np.uint64(1)
    mm = fm
    idx = -1
    while mm != np.uint64(0):
        low = mm & (~mm + one)
        t = int(_popcount(low - one))
        mm &= mm - one
        idx += 1
        if 7 <= b[t] <= 11:
            continue  # already plugged in the start position
        bits = int((kindsw >> np.uint64(8 * idx)) & np.uint64(0xFF))
        b1 = 200
        b2 = 200
        bj = -1
        for j in range(nm):
            c = _fill_cost(ftab, cls, mk[j], msq[j], t, bits)
            if c < b1:
                b2 = b1
                b1 = c
                bj = j
            elif c < b2:
                b2 = c
        tsq[nt] = t
        tbits[nt] = bits
        best1[nt] = b1
        best2[nt] = b2
        bestj[nt] = bj
        nt += 1
    base = 0
    for ti in range(nt):
        base += best1[ti]
    if kb0 >= 0 and katt[w] == 0:
        ck = ftab[cls, 9, kb0, w]
        if ck < 200 and ck + base <= budget:
            return True  # the king captures w, others fill
    for j in range(nm):
        k = mk[j]
        f = msq[j]
        capj = 200
        if k == 0:
            if w >= 8 and not _check_stand(0, w, kw):
                c = ftab[cls, 8, f, w]
                if c < capj:
                    capj = c
            for kk in range(1, 5):
                if not _check_stand(kk, w, kw):
                    c = ftab[cls, 3 + kk, f, w]
                    if c < capj:
                        capj = c
        else:
            if not _check_stand(k, w, kw):
                capj = ftab[cls, k - 1, f, w]
        if capj < 200:
            others = 0
            for ti in range(nt):
                others += best2[ti] if bestj[ti] == j else best1[ti]
            if capj + others <= budget:
                return True  # w is this man's journey terminus
        for ti in range(nt):
            t = tsq[ti]
            bits = tbits[ti]
            via = 100000
            if k == 0:
                if w >= 8 and not _check_stand(0, w, kw):
                    v = int(ftab[cls, 8, f, w]) + int(_fill_cost(ftab, cls, 0, w, t, bits))
                    if v < via:
                        via = v
                for kk in range(1, 5):
                    if _check_stand(kk, w, kw) or (bits >> kk) & 1 == 0:
                        continue
                    v = int(ftab[cls, 3 + kk, f, w]) + int(ftab[cls, kk - 1, w, t])
                    if v < via:
                        via = v
            else:
                if not _check_stand(k, w, kw) and (bits >> k) & 1:
                    via = int(ftab[cls, k - 1, f, w]) + int(ftab[cls, k - 1, w, t])
            if via > budget:
                continue
            others = 0
            for tj in range(nt):
                if tj == ti:
                    continue
                others += best2[tj] if bestj[tj] == j else best1[tj]
            if via + others <= budget:
                return True  # w falls to the man filling t, en route
    return False


@njit(cache=True)
def _route_tables(b, kw, budget, cls_worig, cls_fm, cls_kinds, cls_wmust,
                  kn, kg, ray):
    """One (10, 64, 64) distance table per metric class.

    Rows 0..3: knight/bishop/rook/queen with the last move relaxed;
    rows 4..7: a pawn promoting to that piece; row 8: a pawn staying a
    pawn; row 9: the king.  200 means unreachable.  Each class keeps the
    mating man's origin clear and grows the set of capturable White men
    to a fixpoint: a man is capturable only once `_removable_probe`
    shows some affordable completion could take it.  A class whose mate
    needs White men captured off their squares (`cls_wmust`) that the
    fixpoint proves uncapturable is marked nonviable."""
    ncls = cls_worig.shape[0]
    ftab = np.full((ncls, 10, 64, 64), 200, dtype=np.uint8)
    viable = np.ones(ncls, dtype=np.uint8)
    frozen = _frozen_mask(b, kw, kn, ray)
    msq = np.empty(16, dtype=np.int64)
    mk = np.empty(16, dtype=np.int64)
    nm = 0
    kb0 = -1
    for sq in range(64):
        c = b[sq]
        if c == 12:
            kb0 = sq
        elif 7 <= c <= 11 and frozen[sq] == 0:
            msq[nm] = sq
            mk[nm] = c - 7
            nm += 1
    removable = np.zeros(64, dtype=np.uint8)
    for cls in range(ncls):
        worig = cls_worig[cls]
        fm = cls_fm[cls]
        kindsw = cls_kinds[cls]
        for i in range(64):
            removable[i] = 0
        while True:
            block, stand, kstand, katt, wcap, wcapf = _metric_arrays(
                b, kw, worig, frozen, removable, kn)
            _fill_dist_tables(ftab, cls, block, stand, kstand, wcap,
                              wcapf, kn, kg, ray)
            changed = False
            for w in range(64):
                if not (1 <= b[w] <= 6) or w == kw or w == worig \
                        or removable[w] == 1:
                    continue
                if _removable_probe(w, ftab, cls, b, kw, fm, kindsw,
                                    msq, mk, nm, budget, kb0, katt):
                    removable[w] = 1
                    changed = True
            if not changed:
                break
        wmust = cls_wmust[cls]
        for x in range(64):
            if (wmust >> np.uint64(x)) & np.uint64(1) and removable[x] == 0:
                viable[cls] = 0
    return ftab, viable


# ---------------------------------------------------------------------------
# Mate-distance mask construction (plain Python, once per problem)

def _attack_mask(kind: int, sq: int) -> int:
    """Empty-board attack set of a white man of `kind` on `sq`, as a bitmask."""
    mask = 0
    if kind == 1:
        for t in PAWN_ATT[WHITE][sq]:
            mask |= 1 << t
    elif kind == 2:
        for t in KNIGHT_TO[sq]:
            mask |= 1 << t
    elif kind == 6:
        for t in KING_TO[sq]:
            mask |= 1 << t
    else:
        dirs = range(8) if kind == 5 else (range(4) if kind == 4 else range(4, 8))
        for d in dirs:
            for t in RAYS[sq][d]:
                mask |= 1 << t
    return mask


def _mating_move_candidates(board) -> list[tuple[int, int, int]]:
    """(kind, origin, destination) for every White move, ignoring occupancy."""
    men = [(board[sq], sq) for sq in range(64) if 1 <= board[sq] <= 6]
    out = []
    for kind, sq in men:
        if kind == 1:
            dests = []
            if sq + 8 < 64:
                dests.append(sq + 8)
            if sq >> 3 == 1:
                dests.append(sq + 16)
            for t in PAWN_ATT[WHITE][sq]:
                dests.append(t)
        elif kind == 2:
            dests = list(KNIGHT_TO[sq])
        elif kind == 6:
            dests = list(KING_TO[sq])
        else:
            dirs = range(8) if kind == 5 else (range(4) if kind == 4 else range(4, 8))
            dests = [t for d in dirs for t in RAYS[sq][d]]
        for d in dests:
            out.append((kind, sq, d))
    return out


def _black_unblock(kind: int, frm: int, to: int) -> bool:
    """Would a black man of `kind` (0 P .. 4 Q) on `frm` attack `to` with
    no square in between where a block could ever stand?"""
    df = abs((frm & 7) - (to & 7))
    dr = (frm >> 3) - (to >> 3)
    if kind == 0:
        return dr == 1 and df == 1
    adr = abs(dr)
    if kind == 1:
        return (df, adr) in ((1, 2), (2, 1))
    if kind == 2:
        return df == 1 and adr == 1
    if kind == 3:
        return df + adr == 1
    return max(df, adr) == 1


def _build_mate_masks(board, kw, n):
    """Mate requirements and per-class route tables, built once per problem.

    For every candidate final black-king square s and every White move
    that could conceivably deliver the mate there, record which squares
    around s Black must plug (`fm`, with the piece kinds each plug may
    be), which squares must be free of Black men when the mate fires
    (`clear`), and the mating man's origin (`worig`, -1 when any static
    cover makes the move checking).  Distinct (worig, fm, kinds) triples
    become metric classes whose route tables bound how fast Black men
    can actually travel on this board within the total budget `n`.
    Every approximation widens feasibility, so dropping a position here
    never loses a genuine solution.
    """
    white_occ = 0
    attacks = {}
    men = []
    sliders = []
    for sq in range(64):
        c = board[sq]
        if 1 <= c <= 6:
            white_occ |= 1 << sq
            attacks[sq] = _attack_mask(c, sq)
            men.append((c, sq))
            if c in (3, 4, 5):
                sliders.append((c, sq))
    nbr = [_attack_mask(6, s) for s in range(64)]
    barr = np.frombuffer(bytes(board), dtype=np.uint8)
    frozen_arr = _frozen_mask(barr, kw, _KN, _RAY)
    frozen_black = [sq for sq in range(64)
                    if 7 <= board[sq] <= 11 and frozen_arr[sq]]
    # entries per king square: (fm, clear, wmust, worig, kinds-tuple)
    per_s: list[list[tuple]] = [[] for _ in range(64)]

    def dominated(a, b):
        """True when keeping `a` makes `b` redundant: every completion
        satisfying b's requirements also satisfies a's."""
        fa, ca, ma, wa, ka = a
        fb, cb, mb, wb, kb_ = b
        if wa != wb or fa & ~fb or ca & ~cb or ma & ~mb:
            return False
        kmap = dict(kb_)
        return all(kmap.get(t, 0) & ~bits == 0 for t, bits in ka)

    for kind, origin, dest in _mating_move_candidates(board):
        path = 0
        if kind in (3, 4, 5):
            d = int(_DIR[origin][dest])
            for t in RAYS[origin][d]:
                if t == dest:
                    break
                path |= 1 << t
        pawn_push = kind == 1 and dest - origin in (8, 16)
        if kind == 1 and dest - origin == 16:
            path |= 1 << (origin + 8)
        # White men on the arrival square or in the way must first be
        # captured by Black; the route-table fixpoint later drops the
        # scenario when that is unaffordable
        wmust = (path | (1 << dest)) & white_occ
        clear = path
        if pawn_push:
            clear |= 1 << dest  # a push needs the arrival square empty too
        if kind == 1 and dest >= 56:
            # promotion: queen-plus-knight attacks cover every choice
            att = _attack_mask(5, dest) | _attack_mask(2, dest)
        else:
            att = _attack_mask(kind, dest)
        check_mask = 0 if kind == 6 else att
        disc = 0
        for sk, ssq in sliders:
            if ssq == origin:
                continue
            d = int(_DIR[ssq][origin])
            if d < 0:
                continue
            if (d < 4 and sk in (4, 5)) or (d >= 4 and sk in (3, 5)):
                past = False
                for t in RAYS[ssq][d]:
                    if past:
                        disc |= 1 << t
                    if t == origin:
                        past = True
        check_mask |= disc
        static_cover = disc  # cover that survives the mover leaving origin
        for _, sq2 in men:
            if sq2 != origin:
                static_cover |= attacks[sq2]
        cover = att | static_cover
        # a pawn capture needs a victim on the arrival square, unless an
        # en-passant capture is conceivable: that takes a black pawn still
        # able to double-push past the capturing pawn's rank
        ep_ok = (kind == 1 and not pawn_push and (origin >> 3) == 4
                 and board[48 + (dest & 7)] == 7
                 and not frozen_arr[48 + (dest & 7)])
        victim = kind == 1 and not pawn_push and not ep_ok
        m = check_mask
        while m:
            s = (m & -m).bit_length() - 1
            m &= m - 1
            if s == dest or (clear >> s) & 1:
                continue
            if kw >= 0 and max(abs((s & 7) - (kw & 7)),
                               abs((s >> 3) - (kw >> 3))) <= 1:
                continue  # the kings can never stand adjacent
            if 7 <= board[s] <= 11 and frozen_arr[s]:
                continue  # the square is occupied for good
            single = kind != 6 and (att >> s) & 1 and not (disc >> s) & 1
            if single:
                # a single check can be parried by capturing the checker
                if max(abs((s & 7) - (dest & 7)),
                       abs((s >> 3) - (dest >> 3))) == 1 and \
                        not (static_cover >> dest) & 1:
                    continue  # the king itself recaptures undefended
                refuted = False
                for fsq in frozen_black:
                    if fsq != dest and \
                            _black_unblock(board[fsq] - 7, fsq, dest) and \
                            not _pin_possible(board, s, fsq):
                        refuted = True  # an immovable man guards the square
                        break
                if refuted:
                    continue
            fm = nbr[s] & ~cover & ~(1 << dest)
            if victim:
                fm |= 1 << dest
            if fm & clear:
                continue  # a square cannot be both plugged and empty
            if bin(fm).count("1") > 8:
                fm &= ~(1 << dest)  # keep at most eight requirements
            # an undefended White man beside the king would simply be
            # captured, so the mate needs it gone and the square plugged
            wm = wmust | (fm & white_occ)
            kinds = []
            bb = fm
            while bb:
                t = (bb & -bb).bit_length() - 1
                bb &= bb - 1
                bits = 0x1F
                for bk in range(5):
                    if _black_unblock(bk, t, dest) and \
                            not _pin_possible(board, s, t):
                        # the plug would capture the mating man, unless
                        # a White slider behind it could pin it to s
                        bits &= ~(1 << bk)
                    elif kind != 6 and t != dest and kw >= 0 and \
                            _black_unblock(bk, t, kw):
                        # the plug would check White with no parry left
                        bits &= ~(1 << bk)
                kinds.append((t, bits))
            entry = (fm, clear, wm, origin, tuple(kinds))
            lst = per_s[s]
            if any(dominated(old, entry) for old in lst):
                continue
            per_s[s] = [old for old in lst
                        if not dominated(entry, old)] + [entry]

    cls_ids: dict = {}
    cls_worig, cls_fm, cls_kinds, cls_wmust = [], [], [], []
    for s in range(64):
        for fm, clear, wmust, worig, kinds in per_s[s]:
            key = (worig, fm, kinds, wmust)
            if key not in cls_ids:
                cls_ids[key] = len(cls_worig)
                cls_worig.append(worig)
                cls_fm.append(fm)
                kindsw = 0
                for i, (_, bits) in enumerate(kinds):
                    kindsw |= bits << (8 * i)
                cls_kinds.append(kindsw)
                cls_wmust.append(wmust)
    if not cls_worig:
        cls_worig, cls_fm, cls_kinds, cls_wmust = [-1], [0], [0], [0]
    ftab, viable = _route_tables(barr, kw, n,
                                 np.array(cls_worig, dtype=np.int64),
                                 np.array(cls_fm, dtype=np.uint64),
                                 np.array(cls_kinds, dtype=np.uint64),
                                 np.array(cls_wmust, dtype=np.uint64),
                                 _KN, _KG, _RAY)
    data, clears, wmusts, worigs, clss, kindss = [], [], [], [], [], []
    off = np.zeros(65, dtype=np.int64)
    for s in range(64):
        off[s] = len(data)
        for fm, clear, wmust, worig, kinds in per_s[s]:
            cid = cls_ids[(worig, fm, kinds, wmust)]
            if viable[cid] == 0:
                continue  # the mate needs captures Black cannot afford
            kindsw = 0
            for i, (_, bits) in enumerate(kinds):
                kindsw |= bits << (8 * i)
            data.append(fm)
            clears.append(clear)
            wmusts.append(wmust)
            worigs.append(worig)
            clss.append(cid)
            kindss.append(kindsw)
    off[64] = len(data)
    if not data:
        data, clears, wmusts, worigs, clss, kindss = \
            [0], [0], [0], [-1], [0], [0]
    return (np.array(data, dtype=np.uint64), off,
            np.array(clears, dtype=np.uint64),
            np.array(wmusts, dtype=np.uint64),
            np.array(worigs, dtype=np.int64),
            np.array(clss, dtype=np.int64),
            np.array(kindss, dtype=np.uint64), ftab, frozen_arr)


def _pin_possible(board, s, t) -> bool:
    """Could a White slider pin a man on t against a king on s?"""
    d = int(_DIR[s][t])
    if d < 0:
        return False
    behind = False
    for x in RAYS[s][d]:
        if behind:
            c = board[x]
            if (c == 5) or (d < 4 and c == 4) or (d >= 4 and c == 3):
                return True
        if x == t:
            behind = True
    return False


# ---------------------------------------------------------------------------
# Driver

class LayeredStats:
    def __init__(self):
        self.nodes = 0
        self.generated = 0
        self.pruned = 0
        self.peak_layer = 0
        self.distinct_finals = 0


def _boards_from_keys(keys: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(keys[:, :8]).view(np.uint8).reshape(-1, 64)


def _first_layer(start: Position, n: int, white_has_king: bool):
    """Expand the start with the full rules engine (handles a start that
    already has Black in check, or an en-passant right from the diagram)."""
    acc: dict[tuple[bytes, int], int] = {}
    for m in legal_moves(start):
        np_pos = apply(start, m, check_legal=False)
        if n > 1:
            if white_has_king and np_pos.in_check(WHITE):
                continue
            np_pos = pass_turn(np_pos)
            key = (bytes(np_pos.board), 0)
        else:
            ep = np_pos.ep if np_pos.ep is not None else -1
            keep_ep = False
            if ep >= 0:
                cap = ep - 8  # the pawn that just double-pushed sits below ep
                fl = cap & 7
                if (fl > 0 and np_pos.board[cap - 1] == WP) or \
                        (fl < 7 and np_pos.board[cap + 1] == WP):
                    keep_ep = True
            key = (bytes(np_pos.board), ep + 1 if keep_ep else 0)
        acc[key] = acc.get(key, 0) + 1
    boards = np.zeros((len(acc), 64), dtype=np.uint8)
    eps = np.zeros(len(acc), dtype=np.int64)
    counts = np.zeros(len(acc), dtype=np.int64)
    for i, ((bb, ep), c) in enumerate(acc.items()):
        boards[i] = np.frombuffer(bb, dtype=np.uint8)
        eps[i] = ep
        counts[i] = c
    return boards, eps, counts


def _position_from(board_bytes: bytes, ep: int, castling: int) -> Position:
    return Position(board_bytes, WHITE, castling, ep - 1 if ep > 0 else None)


def count_series_layered(p, pruning: frozenset, node_budget=None):
    """Exact (pairs, series, stats) for a series helpmate, or None if the
    position needs the generic search (castling rights present)."""
    start: Position = p.start
    n = p.stipulation.n
    if start.castling:
        return None
    stats = LayeredStats()
    white_has_king = start.king_square(WHITE) is not None
    kb0 = start.king_square(BLACK)
    kw = start.king_square(WHITE)
    kw = -1 if kw is None else kw

    use_filter = "mate-distance" in pruning and kb0 is not None
    if use_filter:
        masks = _build_mate_masks(start.board, kw, n)

    boards, eps, counts = _first_layer(start, n, white_has_king)
    # path counts are kept in two base-2**32 limbs so that layer sums may
    # exceed 64 bits; expansion is linear in the counts, so the limbs can
    # be pushed through the kernel separately and recombined at the end
    counts_hi = np.zeros_like(counts)
    stats.nodes += 1
    stats.generated += int(counts.sum())
    for depth in range(2, n + 1):
        if boards.shape[0] == 0:
            break
        if use_filter:
            r = n - depth + 1  # moves remaining including this layer's move
            keep = np.zeros(boards.shape[0], dtype=np.bool_)
            _mate_filter(boards, r, masks[0], masks[1], masks[2], masks[3],
                         masks[4], masks[5], masks[6], masks[7], masks[8],
                         _KN, _RAY, keep)
            stats.pruned += int(boards.shape[0] - keep.sum())
            boards = boards[keep]
            counts = counts[keep]
            counts_hi = counts_hi[keep]
        stats.nodes += boards.shape[0]
        stats.peak_layer = max(stats.peak_layer, boards.shape[0])
        if boards.shape[0] == 0:
            break
        if counts.size and int(counts.max()) > 1 << 48:
            # keep the low limb in [1, 2**32] so every path retains a
            # nonzero low part and the low expansion sees every child
            lo = ((counts - 1) & ((1 << 32) - 1)) + 1
            counts_hi += (counts - lo) >> 32
            counts = lo
        keys, counts2, gen = _expand(boards, counts, depth < n, depth == n, kw,
                                     _KN, _KG, _RAY, _DIR)
        if counts_hi.any():
            keys_hi, hi_cnts, _ = _expand(boards, counts_hi, depth < n,
                                          depth == n, kw,
                                          _KN, _KG, _RAY, _DIR)
            hmap = {keys_hi[i].tobytes(): int(hi_cnts[i])
                    for i in range(keys_hi.shape[0])}
            counts_hi = np.fromiter(
                (hmap.get(keys[i].tobytes(), 0)
                 for i in range(keys.shape[0])),
                dtype=np.int64, count=keys.shape[0])
        else:
            counts_hi = np.zeros(keys.shape[0], dtype=np.int64)
        counts = counts2
        stats.generated += int(gen)
        if node_budget is not None and stats.generated > node_budget:
            raise _BudgetSignal()
        boards = _boards_from_keys(keys)
        eps = keys[:, 8].astype(np.int64)

    # final layer: exact mate-in-one evaluation
    if boards.shape[0] and use_filter:
        keep = np.zeros(boards.shape[0], dtype=np.bool_)
        _mate_filter(boards, 0, masks[0], masks[1], masks[2], masks[3],
                     masks[4], masks[5], masks[6], masks[7], masks[8],
                     _KN, _RAY, keep)
        stats.pruned += int(boards.shape[0] - keep.sum())
        boards = boards[keep]
        eps = eps[keep]
        counts = counts[keep]
        counts_hi = counts_hi[keep]
    stats.distinct_finals = int(boards.shape[0])
    pairs = 0
    series = 0
    if boards.shape[0]:
        mates = _mate_counts(boards, eps.astype(np.int64), _KN, _KG, _RAY)
        for i in range(boards.shape[0]):
            m = int(mates[i])
            if m:
                c = (int(counts_hi[i]) << 32) + int(counts[i])
                pairs += c * m
                series += c
    return pairs, series, stats


class _BudgetSignal(Exception):
    pass


# ---------------------------------------------------------------------------
# Cooperative play: alternating-move expansion for helpmates

@njit(cache=True)
def _coop_bound(boards, white, kn, kg, ray):
    """Upper bound on the number of moves one side can emit in a layer."""
    total = 0
    for i in range(boards.shape[0]):
        for sq in range(64):
            c = boards[i, sq]
            if white == 1:
                if c == 0 or c > 6:
                    continue
                k = c
            else:
                if c < 7:
                    continue
                k = c - 6
            if k == 1:
                total += 16
            elif k == 2 or k == 6:
                total += 8
            elif k == 5:
                total += 28
            else:
                total += 14
    return total


@njit(cache=True, inline="always")
def _coop_move(rows, cnts, pos, b, cnt, f, to, newp, capsq, epw, white,
               sc, kn, kg, ray):
    """Apply f->to on a scratch copy of b; keep the child if the mover's
    own king is safe afterwards.  Returns 1 if a row was emitted."""
    for s in range(64):
        sc[s] = b[s]
    sc[f] = 0
    if capsq >= 0:
        sc[capsq] = 0
    sc[to] = newp
    kc = 6 if white == 1 else 12
    ksq = -1
    for s in range(64):
        if sc[s] == kc:
            ksq = s
            break
    if ksq >= 0:
        if white == 1:
            if _attacked_by_black(sc, ksq, kn, kg, ray):
                return 0
        else:
            if _attacked_by_white(sc, ksq, -1, kn, kg, ray):
                return 0
    for w in range(8):
        v = np.uint64(0)
        for j in range(8):
            v |= np.uint64(sc[w * 8 + j]) << np.uint64(8 * j)
        rows[pos, w] = v
    rows[pos, 8] = np.uint64(epw)
    cnts[pos] = cnt
    return 1


@njit(cache=True)
def _coop_expand(boards, eps, counts, white, kn, kg, ray):
    """One cooperative ply for the given side with full legality (castling
    excluded by the caller); children are deduplicated with summed counts."""
    n = boards.shape[0]
    cap = _coop_bound(boards, white, kn, kg, ray)
    rows = np.empty((cap, 9), dtype=np.uint64)
    cnts = np.empty(cap, dtype=np.int64)
    sc = np.empty(64, dtype=np.uint8)
    pos = 0
    lo_own = 1 if white == 1 else 7
    hi_own = 6 if white == 1 else 12
    ek = 12 if white == 1 else 6
    for idx in range(n):
        b = boards[idx]
        cnt = counts[idx]
        ep = int(eps[idx]) - 1  # ep destination square, or -1
        for f in range(64):
            p = b[f]
            if p < lo_own or p > hi_own:
                continue
            k = p - lo_own + 1
            if k == 1:
                fl = f & 7
                fwd = f + 8 if white == 1 else f - 8
                if b[fwd] == 0:
                    if fwd >= 56 or fwd < 8:
                        for pr in range(2, 6):
                            pos += _coop_move(rows, cnts, pos, b, cnt, f, fwd,
                                              lo_own - 1 + pr, -1, 0, white,
                                              sc, kn, kg, ray)
                    else:
                        pos += _coop_move(rows, cnts, pos, b, cnt, f, fwd, p,
                                          -1, 0, white, sc, kn, kg, ray)
                        if (f >> 3) == (1 if white == 1 else 6):
                            fwd2 = fwd + 8 if white == 1 else fwd - 8
                            if b[fwd2] == 0:
                                epw = 0
                                ap = 7 if white == 1 else 1
                                if (fl > 0 and b[fwd2 - 1] == ap) or \
                                        (fl < 7 and b[fwd2 + 1] == ap):
                                    epw = fwd + 1
                                pos += _coop_move(rows, cnts, pos, b, cnt, f,
                                                  fwd2, p, -1, epw, white,
                                                  sc, kn, kg, ray)
                for side in range(2):
                    if side == 0:
                        if fl == 0:
                            continue
                        to = fwd - 1
                    else:
                        if fl == 7:
                            continue
                        to = fwd + 1
                    c = b[to]
                    enemy = (7 <= c <= 11) if white == 1 else (1 <= c <= 5)
                    if enemy:
                        if to >= 56 or to < 8:
                            for pr in range(2, 6):
                                pos += _coop_move(rows, cnts, pos, b, cnt, f,
                                                  to, lo_own - 1 + pr, -1, 0,
                                                  white, sc, kn, kg, ray)
                        else:
                            pos += _coop_move(rows, cnts, pos, b, cnt, f, to,
                                              p, -1, 0, white, sc, kn, kg, ray)
                    elif to == ep:
                        capsq = ep - 8 if white == 1 else ep + 8
                        pos += _coop_move(rows, cnts, pos, b, cnt, f, to, p,
                                          capsq, 0, white, sc, kn, kg, ray)
            elif k == 2 or k == 6:
                tbl = kn if k == 2 else kg
                for i in range(9):
                    to = tbl[f, i]
                    if to < 0:
                        break
                    c = b[to]
                    if (lo_own <= c <= hi_own) or c == ek:
                        continue
                    pos += _coop_move(rows, cnts, pos, b, cnt, f, to, p, -1, 0,
                                      white, sc, kn, kg, ray)
            else:
                dlo = 4 if k == 3 else 0
                dhi = 4 if k == 4 else 8
                for d in range(dlo, dhi):
                    for i in range(8):
                        to = ray[f, d, i]
                        if to < 0:
                            break
                        c = b[to]
                        if (lo_own <= c <= hi_own) or c == ek:
                            break
                        pos += _coop_move(rows, cnts, pos, b, cnt, f, to, p,
                                          -1, 0, white, sc, kn, kg, ray)
                        if c != 0:
                            break
    keys, vals = _merge_rows(rows, cnts, pos)
    return keys, vals, pos


def _coop_first_layer(start: Position):
    """Expand the start with the full rules engine (handles castling moves
    being absent, pre-existing checks, and a diagram en-passant right)."""
    acc: dict[tuple[bytes, int], int] = {}
    for m in legal_moves(start):
        child = apply(start, m, check_legal=False)
        ep = child.ep if child.ep is not None else -1
        keep_ep = False
        if ep >= 0:
            pawn_sq = ep + 8 if child.stm == BLACK else ep - 8
            epp = 7 if child.stm == BLACK else 1
            fl = pawn_sq & 7
            if (fl > 0 and child.board[pawn_sq - 1] == epp) or \
                    (fl < 7 and child.board[pawn_sq + 1] == epp):
                keep_ep = True
        key = (bytes(child.board), ep + 1 if keep_ep else 0)
        acc[key] = acc.get(key, 0) + 1
    boards = np.zeros((len(acc), 64), dtype=np.uint8)
    eps = np.zeros(len(acc), dtype=np.int64)
    counts = np.zeros(len(acc), dtype=np.int64)
    for i, ((bb, ep), c) in enumerate(acc.items()):
        boards[i] = np.frombuffer(bb, dtype=np.uint8)
        eps[i] = ep
        counts[i] = c
    return boards, eps, counts


def count_helpmate_layered(p, node_budget=None):
    """Exact solution count for a helpmate, or None when the position is
    outside this engine's scope (castling rights, or a one-ply problem)."""
    return helpmate_core(p.start, p.stipulation.plies, node_budget)


def helpmate_core(start: Position, plies: int, node_budget=None):
    """Layered cooperative count: legal alternating play from `start` for
    `plies` plies with the last one a White checkmate."""
    if start.castling or plies < 2:
        return None
    stats = LayeredStats()
    boards, eps, counts = _coop_first_layer(start)
    stats.nodes += 1
    stats.generated += int(counts.sum())
    white = start.stm == BLACK  # side to move on the second ply
    level = 1  # plies already played
    while level < plies - 2 and boards.shape[0]:
        if (plies - level + 1) // 2 == 2:
            # exactly two White moves left: drop dead positions
            keep = _horizon_filter(boards, (plies - level) // 2)
            stats.pruned += int(boards.shape[0] - keep.sum())
            boards = boards[keep]
            eps = eps[keep]
            counts = counts[keep]
            if boards.shape[0] == 0:
                break
        stats.nodes += boards.shape[0]
        stats.peak_layer = max(stats.peak_layer, boards.shape[0])
        keys, counts, gen = _coop_expand(boards, eps, counts,
                                         1 if white else 0, _KN, _KG, _RAY)
        stats.generated += int(gen)
        if node_budget is not None and stats.generated > node_budget:
            raise _BudgetSignal()
        boards = _boards_from_keys(keys)
        eps = keys[:, 8].astype(np.int64)
        white = not white
        level += 1
    stats.distinct_finals = int(boards.shape[0])
    total = 0
    if boards.shape[0] == 0:
        return total, stats
    stats.nodes += boards.shape[0]
    stats.peak_layer = max(stats.peak_layer, boards.shape[0])
    if plies == 2:
        mates = _mate_counts(boards, eps, _KN, _KG, _RAY)
        for i in range(boards.shape[0]):
            total += int(counts[i]) * int(mates[i])
        return total, stats
    # fuse Black's final move with White's mating move
    configs, pair_cfg, pair_kb, slots = _white_config_pairs(boards)
    dat, ccnt, okn = _build_cands(configs, pair_cfg, pair_kb,
                                  _KN, _KG, _RAY, _DIR, _CHEB)
    total = int(_coop_final(boards, eps, counts, slots, dat, ccnt, okn,
                            _KN, _KG, _RAY, _DIR))
    return total, stats


@njit(cache=True)
def _find_black_kings(boards):
    out = np.zeros(boards.shape[0], dtype=np.int64)
    for i in range(boards.shape[0]):
        for s in range(64):
            if boards[i, s] == 12:
                out[i] = s
                break
    return out


def _white_config_pairs(boards):
    """Group boards by (white men only, black king square)."""
    wb = boards.copy()
    wb[wb >= 7] = 0
    rows = np.ascontiguousarray(wb).view(np.uint64).reshape(-1, 8)
    uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    configs = np.ascontiguousarray(uniq).view(np.uint8).reshape(-1, 64)
    keys = inv.astype(np.int64) * 64 + _find_black_kings(boards)
    pair_keys = np.unique(keys)
    slots = np.searchsorted(pair_keys, keys)
    pair_cfg = (pair_keys >> 6).astype(np.int64)
    pair_kb = (pair_keys & 63).astype(np.int64)
    return configs, pair_cfg, pair_kb, slots


def _horizon_filter(boards, rb):
    """Mask of boards where White can still check within two of its moves."""
    configs, pair_cfg, pair_kb, slots = _white_config_pairs(boards)
    ok = _check2_pairs(configs, pair_cfg, pair_kb, rb,
                       _KN, _KG, _RAY, _DIR, _CHEB)
    return ok[slots]


# ---------------------------------------------------------------------------
# Helpmate mate-horizon filtering.
#
# Near the end of a helpmate, a position is only alive if White can still
# deliver a check within the remaining White moves.  The tests below work
# on the white-men-only board (Black men are transparent: they may move
# away or be captured), and allow up to `rem` White men to be "ghosted",
# since each remaining Black move may capture one White man.  Both
# relaxations only add possibilities, so a failed test is a proof of death.

@njit(cache=True)
def _w_checks_from(wb, k, t, kb, f, rem, kn, ray, dirs):
    """Would a white piece of kind k on t check kb, with f vacated and up
    to `rem` white blockers ghosted?"""
    if k == 1:
        return (((t & 7) > 0 and t + 7 == kb)
                or ((t & 7) < 7 and t + 9 == kb))
    if k == 2:
        for i in range(9):
            j = kn[t, i]
            if j < 0:
                break
            if j == kb:
                return True
        return False
    if k == 6:
        return False
    d = dirs[t, kb]
    if d < 0:
        return False
    if d < 4:
        if k != 4 and k != 5:
            return False
    else:
        if k != 3 and k != 5:
            return False
    used = 0
    for i in range(8):
        s2 = ray[t, d, i]
        if s2 == kb:
            return True
        if s2 == f or wb[s2] == 0:
            continue
        used += 1
        if used > rem:
            return False
    return False


@njit(cache=True)
def _w_disc_check(wb, f, t, kb, rem, ray, dirs):
    """Discovered check on kb by vacating f (mover now on t), ghosts allowed."""
    d = dirs[kb, f]
    if d < 0:
        return False
    used = 0
    for i in range(8):
        s2 = ray[kb, d, i]
        if s2 < 0:
            return False
        if s2 == t:
            return False  # the mover blocks its own discovery
        if s2 == f:
            continue
        c = wb[s2]
        if c == 0:
            continue
        if (d < 4 and (c == 4 or c == 5)) or (d >= 4 and (c == 3 or c == 5)):
            return True
        used += 1
        if used > rem:
            return False
    return False


@njit(cache=True, inline="always")
def _cand_try(wb, kb, f, t, ka, mk, used, rem, out, cnt, collect, kn, ray, dirs):
    """Record (or just detect) the move f->t as a potential checker."""
    ok = _w_checks_from(wb, ka, t, kb, f, rem - used, kn, ray, dirs) or \
        _w_disc_check(wb, f, t, kb, rem - used, ray, dirs)
    if not ok:
        return cnt
    if collect == 0:
        return cnt + 1
    if cnt >= out.shape[0]:
        return -1000000  # overflow marker; caller falls back to full tests
    out[cnt, 0] = f
    out[cnt, 1] = t
    out[cnt, 2] = ka
    out[cnt, 3] = mk
    return cnt + 1


@njit(cache=True)
def _cands_for(wb, kb, rem, out, collect, kn, kg, ray, dirs):
    """Enumerate white moves on the white-only board that might check kb.

    Returns the number found (negative on overflow); in existence mode
    (collect=0) returns 1 as soon as any is found.
    """
    cnt = 0
    for f in range(64):
        p = wb[f]
        if p == 0 or p > 6:
            continue
        if p == 1:
            fl = f & 7
            t1 = f + 8
            g1 = 1 if wb[t1] != 0 else 0
            if g1 <= rem:
                if t1 >= 56:
                    for pr in range(2, 6):
                        cnt = _cand_try(wb, kb, f, t1, pr, 1, g1, rem, out,
                                        cnt, collect, kn, ray, dirs)
                        if cnt < 0 or (collect == 0 and cnt > 0):
                            return cnt
                else:
                    cnt = _cand_try(wb, kb, f, t1, 1, 1, g1, rem, out,
                                    cnt, collect, kn, ray, dirs)
                    if cnt < 0 or (collect == 0 and cnt > 0):
                        return cnt
                    if (f >> 3) == 1:
                        t2 = f + 16
                        g2 = g1 + (1 if wb[t2] != 0 else 0)
                        if g2 <= rem:
                            cnt = _cand_try(wb, kb, f, t2, 1, 1, g2, rem, out,
                                            cnt, collect, kn, ray, dirs)
                            if cnt < 0 or (collect == 0 and cnt > 0):
                                return cnt
            for side in range(2):
                if side == 0:
                    if fl == 0:
                        continue
                    t = f + 7
                else:
                    if fl == 7:
                        continue
                    t = f + 9
                if t >= 64:
                    continue
                g = 1 if wb[t] != 0 else 0
                if g > rem:
                    continue
                if t >= 56:
                    for pr in range(2, 6):
                        cnt = _cand_try(wb, kb, f, t, pr, 1, g, rem, out,
                                        cnt, collect, kn, ray, dirs)
                        if cnt < 0 or (collect == 0 and cnt > 0):
                            return cnt
                else:
                    cnt = _cand_try(wb, kb, f, t, 1, 1, g, rem, out,
                                    cnt, collect, kn, ray, dirs)
                    if cnt < 0 or (collect == 0 and cnt > 0):
                        return cnt
        elif p == 2 or p == 6:
            tbl = kn if p == 2 else kg
            for i in range(9):
                t = tbl[f, i]
                if t < 0:
                    break
                g = 1 if wb[t] != 0 else 0
                if g > rem:
                    continue
                cnt = _cand_try(wb, kb, f, t, p, p, g, rem, out,
                                cnt, collect, kn, ray, dirs)
                if cnt < 0 or (collect == 0 and cnt > 0):
                    return cnt
        else:
            for d in range(8):
                if p == 3 and d < 4:
                    continue
                if p == 4 and d >= 4:
                    continue
                used = 0
                for i in range(8):
                    t = ray[f, d, i]
                    if t < 0:
                        break
                    g = used + (1 if wb[t] != 0 else 0)
                    if g <= rem:
                        cnt = _cand_try(wb, kb, f, t, p, p, g, rem, out,
                                        cnt, collect, kn, ray, dirs)
                        if cnt < 0 or (collect == 0 and cnt > 0):
                            return cnt
                    if wb[t] != 0:
                        used += 1
                        if used > rem:
                            break
    return cnt


@njit(cache=True)
def _check2_exists(wb, kb, rb, dummy, kn, kg, ray, dirs, cheb):
    """Can White check within two of its own moves?  kb may wander up to
    rb king steps; up to rb white men may be ghosted by Black captures."""
    for kb2 in range(64):
        if cheb[kb, kb2] > rb:
            continue
        if _cands_for(wb, kb2, rb, dummy, 0, kn, kg, ray, dirs) > 0:
            return True
    # one preparatory white move, then a check
    for f in range(64):
        p = wb[f]
        if p == 0 or p > 6:
            continue
        if p == 1:
            tos = np.empty(4, dtype=np.int64)
            nt = 0
            if wb[f + 8] == 0:
                tos[nt] = f + 8
                nt += 1
                if (f >> 3) == 1 and wb[f + 16] == 0:
                    tos[nt] = f + 16
                    nt += 1
            if (f & 7) > 0 and f + 7 < 64 and wb[f + 7] == 0:
                tos[nt] = f + 7  # capture of a transparent black man
                nt += 1
            if (f & 7) < 7 and f + 9 < 64 and wb[f + 9] == 0:
                tos[nt] = f + 9
                nt += 1
            for j in range(nt):
                t = tos[j]
                if t >= 56:
                    for pr in range(2, 6):
                        wb[f] = 0
                        wb[t] = pr
                        hit = False
                        for kb2 in range(64):
                            if cheb[kb, kb2] > rb:
                                continue
                            if _cands_for(wb, kb2, rb, dummy, 0,
                                          kn, kg, ray, dirs) > 0:
                                hit = True
                                break
                        wb[t] = 0
                        wb[f] = p
                        if hit:
                            return True
                else:
                    wb[f] = 0
                    wb[t] = 1
                    hit = False
                    for kb2 in range(64):
                        if cheb[kb, kb2] > rb:
                            continue
                        if _cands_for(wb, kb2, rb, dummy, 0,
                                      kn, kg, ray, dirs) > 0:
                            hit = True
                            break
                    wb[t] = 0
                    wb[f] = p
                    if hit:
                        return True
        elif p == 2 or p == 6:
            tbl = kn if p == 2 else kg
            for i in range(9):
                t = tbl[f, i]
                if t < 0:
                    break
                if wb[t] != 0:
                    continue
                wb[f] = 0
                wb[t] = p
                hit = False
                for kb2 in range(64):
                    if cheb[kb, kb2] > rb:
                        continue
                    if _cands_for(wb, kb2, rb, dummy, 0,
                                  kn, kg, ray, dirs) > 0:
                        hit = True
                        break
                wb[t] = 0
                wb[f] = p
                if hit:
                    return True
        else:
            for d in range(8):
                if p == 3 and d < 4:
                    continue
                if p == 4 and d >= 4:
                    continue
                for i in range(8):
                    t = ray[f, d, i]
                    if t < 0 or wb[t] != 0:
                        break
                    wb[f] = 0
                    wb[t] = p
                    hit = False
                    for kb2 in range(64):
                        if cheb[kb, kb2] > rb:
                            continue
                        if _cands_for(wb, kb2, rb, dummy, 0,
                                      kn, kg, ray, dirs) > 0:
                            hit = True
                            break
                    wb[t] = 0
                    wb[f] = p
                    if hit:
                        return True
    return False


@njit(cache=True)
def _check2_pairs(configs, pair_cfg, pair_kb, rb, kn, kg, ray, dirs, cheb):
    out = np.zeros(pair_cfg.shape[0], dtype=np.bool_)
    dummy = np.empty((1, 4), dtype=np.int16)
    wb = np.empty(64, dtype=np.uint8)
    for p in range(pair_cfg.shape[0]):
        for s in range(64):
            wb[s] = configs[pair_cfg[p], s]
        out[p] = _check2_exists(wb, pair_kb[p], rb, dummy, kn, kg, ray,
                                dirs, cheb)
    return out


@njit(cache=True)
def _build_cands(configs, pair_cfg, pair_kb, kn, kg, ray, dirs, cheb):
    """Per (white config, black king) pair: the rem=1 candidate checker
    moves, plus a flag for checks against adjacent king squares."""
    npair = pair_cfg.shape[0]
    maxc = 128
    dat = np.zeros((npair, maxc, 4), dtype=np.int16)
    cnts = np.zeros(npair, dtype=np.int32)
    okn = np.zeros(npair, dtype=np.bool_)
    dummy = np.empty((1, 4), dtype=np.int16)
    wb = np.empty(64, dtype=np.uint8)
    for p in range(npair):
        for s in range(64):
            wb[s] = configs[pair_cfg[p], s]
        kb = pair_kb[p]
        cnts[p] = _cands_for(wb, kb, 1, dat[p], 1, kn, kg, ray, dirs)
        for i in range(9):
            kb2 = kg[kb, i]
            if kb2 < 0:
                break
            if _cands_for(wb, kb2, 1, dummy, 0, kn, kg, ray, dirs) > 0:
                okn[p] = True
                break
    return dat, cnts, okn


@njit(cache=True, inline="always")
def _delta(b, s, bf, bt, btp, capsq):
    """Board read with a black move (bf->bt, piece btp, capsq removed)
    overlaid on the parent board."""
    if s == bf:
        return 0
    if s == bt:
        return btp
    if s == capsq:
        return 0
    return b[s]


@njit(cache=True)
def _coop_final(boards, eps, counts, slots, cand_dat, cand_cnt, okn,
                kn, kg, ray, dirs):
    """Fused last two plies: for every board (Black to move), add up
    path-count times the number of (Black move, White mating move) pairs."""
    total = np.int64(0)
    sc = np.empty(64, dtype=np.uint8)
    pin_dir = np.empty(64, dtype=np.int8)
    pin_sq = np.empty(64, dtype=np.int8)
    n = boards.shape[0]
    for idx in range(n):
        b = boards[idx]
        cnt = counts[idx]
        ep = int(eps[idx]) - 1
        slot = slots[idx]
        nc = cand_cnt[slot]
        kb = -1
        kw = -1
        for s in range(64):
            c = b[s]
            if c == 12:
                kb = s
            elif c == 6:
                kw = s
        if kb < 0:
            continue
        # a black double push may enable an en-passant mate
        ep_possible = False
        for s in range(48, 56):
            if b[s] == 7 and b[s - 8] == 0 and b[s - 16] == 0:
                t = s - 16
                if ((t & 7) > 0 and b[t - 1] == 1) or \
                        ((t & 7) < 7 and b[t + 1] == 1):
                    ep_possible = True
                    break
        if nc == 0 and not okn[slot] and not ep_possible and ep < 0:
            continue
        incheck = _attacked_by_white(b, kb, -1, kn, kg, ray)
        # pin bookkeeping (valid while not in check)
        for s in range(64):
            pin_dir[s] = -1
        for d in range(8):
            blocker = -1
            for i in range(8):
                s2 = ray[kb, d, i]
                if s2 < 0:
                    break
                c = b[s2]
                if c == 0:
                    continue
                if blocker < 0:
                    if c >= 7:
                        blocker = s2
                        continue
                    break
                if c >= 7:
                    break
                if (d < 4 and (c == 4 or c == 5)) or \
                   (d >= 4 and (c == 3 or c == 5)):
                    pin_dir[blocker] = d
                    pin_sq[blocker] = s2
                break
        board_mates = np.int64(0)
        for f in range(64):
            p = b[f]
            if p < 7:
                continue
            if p == 7:
                fl = f & 7
                if b[f - 8] == 0:
                    board_mates += _final_child(
                        b, f, f - 8, -1, incheck, pin_dir, pin_sq, kb, kw,
                        sc, cand_dat, nc, slot, kn, kg, ray, dirs)
                    if (f >> 3) == 6 and b[f - 16] == 0:
                        board_mates += _final_child(
                            b, f, f - 16, -1, incheck, pin_dir, pin_sq,
                            kb, kw, sc, cand_dat, nc, slot, kn, kg, ray, dirs)
                if fl > 0 and 1 <= b[f - 9] <= 5:
                    board_mates += _final_child(
                        b, f, f - 9, -1, incheck, pin_dir, pin_sq, kb, kw,
                        sc, cand_dat, nc, slot, kn, kg, ray, dirs)
                if fl < 7 and 1 <= b[f - 7] <= 5:
                    board_mates += _final_child(
                        b, f, f - 7, -1, incheck, pin_dir, pin_sq, kb, kw,
                        sc, cand_dat, nc, slot, kn, kg, ray, dirs)
                if ep >= 0 and ((fl > 0 and f - 9 == ep)
                                or (fl < 7 and f - 7 == ep)):
                    board_mates += _final_child(
                        b, f, ep, ep + 8, incheck, pin_dir, pin_sq, kb, kw,
                        sc, cand_dat, nc, slot, kn, kg, ray, dirs)
            elif p == 8 or p == 12:
                tbl = kn if p == 8 else kg
                for i in range(9):
                    to = tbl[f, i]
                    if to < 0:
                        break
                    c = b[to]
                    if c >= 7 or c == 6:
                        continue
                    board_mates += _final_child(
                        b, f, to, -1, incheck, pin_dir, pin_sq, kb, kw,
                        sc, cand_dat, nc, slot, kn, kg, ray, dirs)
            else:
                lo = 4 if p == 9 else 0
                hi = 4 if p == 10 else 8
                for d in range(lo, hi):
                    for i in range(8):
                        to = ray[f, d, i]
                        if to < 0:
                            break
                        c = b[to]
                        if c >= 7 or c == 6:
                            break
                        board_mates += _final_child(
                            b, f, to, -1, incheck, pin_dir, pin_sq, kb, kw,
                            sc, cand_dat, nc, slot, kn, kg, ray, dirs)
                        if c != 0:
                            break
        total += cnt * board_mates
    return total


@njit(cache=True)
def _final_child(b, f, to, capsq, incheck, pin_dir, pin_sq, kb, kw,
                 sc, cand_dat, nc, slot, kn, kg, ray, dirs):
    """Mating-move count after the Black move f->to (0 if the move is
    illegal).  Handles promotions internally."""
    p = b[f]
    king_move = p == 12
    promo = p == 7 and to < 8
    special = king_move or capsq >= 0 or (
        p == 7 and f - to == 16
        and (((to & 7) > 0 and b[to - 1] == 1)
             or ((to & 7) < 7 and b[to + 1] == 1)))
    if not king_move and not incheck and capsq < 0:
        if pin_dir[f] >= 0:
            d = pin_dir[f]
            if not (dirs[kb, to] == d
                    and (to == pin_sq[f] or dirs[to, pin_sq[f]] == d)):
                return 0
    mates = 0
    nprom = 4 if promo else 1
    for pi in range(nprom):
        newp = (8 + pi) if promo else p
        built = False
        if king_move or incheck or capsq >= 0 or special or nc < 0:
            for s in range(64):
                sc[s] = b[s]
            sc[f] = 0
            if capsq >= 0:
                sc[capsq] = 0
            sc[to] = newp
            built = True
            kb2 = to if king_move else kb
            if _attacked_by_white(sc, kb2, -1, kn, kg, ray) and \
                    (king_move or incheck or capsq >= 0):
                continue  # illegal: own king left in check
            if king_move or capsq >= 0 or special or nc < 0:
                wep = -1
                if p == 7 and f - to == 16:
                    wep = f - 8
                mates += _mate_in_one_count(sc, wep, kb2, kw, kn, kg, ray)
                continue
        # candidate-driven evaluation (king fixed, no en-passant subtleties)
        for j in range(nc):
            cf = int(cand_dat[slot, j, 0])
            ct = int(cand_dat[slot, j, 1])
            ka = int(cand_dat[slot, j, 2])
            mk = int(cand_dat[slot, j, 3])
            if _delta(b, cf, f, to, newp, capsq) != mk:
                continue
            tc = _delta(b, ct, f, to, newp, capsq)
            if 1 <= tc <= 6 or tc == 12:
                continue
            if mk == 1:
                if ct == cf + 8 or ct == cf + 16:
                    if tc != 0:
                        continue
                    if ct == cf + 16 and \
                            _delta(b, cf + 8, f, to, newp, capsq) != 0:
                        continue
                else:
                    if not 7 <= tc <= 11:
                        continue  # a pawn capture needs a victim
            elif mk == 3 or mk == 4 or mk == 5:
                d = dirs[cf, ct]
                blocked = False
                for i in range(8):
                    s2 = ray[cf, d, i]
                    if s2 == ct:
                        break
                    if _delta(b, s2, f, to, newp, capsq) != 0:
                        blocked = True
                        break
                if blocked:
                    continue
            if not built:
                for s in range(64):
                    sc[s] = b[s]
                sc[f] = 0
                if capsq >= 0:
                    sc[capsq] = 0
                sc[to] = newp
                built = True
            wep = cf + 8 if (mk == 1 and ct == cf + 16) else -1
            mates += _try_white(sc, cf, ct, ka if ka != mk else 0, wep,
                                kb, kw, kn, kg, ray)
    return mates
