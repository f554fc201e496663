"""Array-based engine used by the solver.

States are packed into int64 codes and moves into int32 codes so that
space enumeration and value iteration run as compiled loops.  The
semantics here mirror rules.py exactly; tests cross-check the two
implementations branch by branch.

State code layout (least significant first):
  bits 0-5    hp side0 slot0        bits 6-11   hp side0 slot1
  bits 12-17  hp side1 slot0        bits 18-23  hp side1 slot1
  bits 24-25  stun side0 (0 none, 1 slot0, 2 slot1)
  bits 26-27  stun side1
  bit  28     active side
  bits 29-30  chain (0 none, 1 slot0, 2 slot1 of the active side)

The canonical state order used for dense indexing is ascending code.

Move code layout:
  bit  0      actor slot            bits 1-2    target count
  bit  3      first target slot     bit 4       second target slot
  bits 5-6    heal recipient + 1 (0 when none)
  bit  8      set for Skip

Character kinds are canonical-order indices (0 Knight .. 7 Gunner).
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.typed import Dict

KIND_KNIGHT = 0
KIND_ARCHER = 1
KIND_HEALER = 2
KIND_ROGUE = 3
KIND_WIZARD = 4
KIND_BARBARIAN = 5
KIND_MONK = 6
KIND_GUNNER = 7

SKIP_CODE = 1 << 8
MAX_HP = 63


@njit(cache=True, inline="always")
def _hp(code, side, slot):
    return (code >> (6 * (2 * side + slot))) & 0x3F


@njit(cache=True, inline="always")
def _set_hp(code, side, slot, hp):
    shift = 6 * (2 * side + slot)
    return (code & ~(np.int64(0x3F) << shift)) | (np.int64(hp) << shift)


@njit(cache=True, inline="always")
def _stun(code, side):
    return (code >> (24 + 2 * side)) & 0x3


@njit(cache=True, inline="always")
def _set_stun(code, side, stun):
    shift = 24 + 2 * side
    return (code & ~(np.int64(0x3) << shift)) | (np.int64(stun) << shift)


@njit(cache=True, inline="always")
def _active(code):
    return (code >> 28) & 0x1


@njit(cache=True, inline="always")
def _chain(code):
    return (code >> 29) & 0x3


@njit(cache=True, inline="always")
def _with_active_chain(code, active, chain):
    return (code & np.int64(0x0FFFFFFF)) | (np.int64(active) << 28) | (np.int64(chain) << 29)


@njit(cache=True)
def encode_initial(hp00, hp01, hp10, hp11, first_mover):
    code = np.int64(0)
    code = _set_hp(code, 0, 0, hp00)
    code = _set_hp(code, 0, 1, hp01)
    code = _set_hp(code, 1, 0, hp10)
    code = _set_hp(code, 1, 1, hp11)
    return _with_active_chain(code, first_mover, 0)


@njit(cache=True, inline="always")
def winner_of(code):
    """-1 while running, else the winning side."""
    if _hp(code, 0, 0) == 0 and _hp(code, 0, 1) == 0:
        return 1
    if _hp(code, 1, 0) == 0 and _hp(code, 1, 1) == 0:
        return 0
    return -1


@njit(cache=True, inline="always")
def make_move(actor, nt, t0, t1, heal):
    return np.int32(actor | (nt << 1) | (t0 << 3) | (t1 << 4) | ((heal + 1) << 5))


@njit(cache=True)
def gen_moves(code, kindv, mhpv, out):
    """Legal solver moves (Forfeit excluded) in canonical order.

    Returns the move count; out must have room for 8.
    """
    s = _active(code)
    opp = 1 - s
    n = 0

    t_alive0 = _hp(code, opp, 0) > 0
    t_alive1 = _hp(code, opp, 1) > 0

    chain = _chain(code)
    if chain != 0:
        slot = chain - 1
        if t_alive0:
            out[n] = make_move(slot, 1, 0, 0, -1)
            n += 1
        if t_alive1:
            out[n] = make_move(slot, 1, 1, 0, -1)
            n += 1
        return n

    stun = _stun(code, s)
    for slot in range(2):
        if _hp(code, s, slot) == 0 or stun == slot + 1:
            continue
        kind = kindv[2 * s + slot]
        if kind == KIND_ARCHER:
            if t_alive0:
                out[n] = make_move(slot, 1, 0, 0, -1)
                n += 1
            if t_alive1:
                out[n] = make_move(slot, 1, 1, 0, -1)
                n += 1
            if t_alive0 and t_alive1:
                out[n] = make_move(slot, 2, 0, 1, -1)
                n += 1
        elif kind == KIND_HEALER:
            any_recipient = False
            for r in range(2):
                if 0 < _hp(code, s, r) < mhpv[2 * s + r]:
                    any_recipient = True
            for t in range(2):
                if (t == 0 and not t_alive0) or (t == 1 and not t_alive1):
                    continue
                if any_recipient:
                    for r in range(2):
                        if 0 < _hp(code, s, r) < mhpv[2 * s + r]:
                            out[n] = make_move(slot, 1, t, 0, r)
                            n += 1
                else:
                    out[n] = make_move(slot, 1, t, 0, -1)
                    n += 1
        else:
            if t_alive0:
                out[n] = make_move(slot, 1, 0, 0, -1)
                n += 1
            if t_alive1:
                out[n] = make_move(slot, 1, 1, 0, -1)
                n += 1
    out[n] = SKIP_CODE
    n += 1
    return n


@njit(cache=True, inline="always")
def _end_turn_code(code, mover):
    code = _set_stun(code, mover, 0)
    return _with_active_chain(code, 1 - mover, 0)


@njit(cache=True)
def _apply_hits(code, move, hit0, hit1, kindv, mhpv, dmgv, heal, er, rt, rd, gz):
    """Successor for fixed roll outcomes; mirrors rules.apply_rolls."""
    s = _active(code)
    opp = 1 - s
    actor = move & 0x1
    nt = (move >> 1) & 0x3
    t0 = (move >> 3) & 0x1
    t1 = (move >> 4) & 0x1
    heal_slot = ((move >> 5) & 0x3) - 1
    kind = kindv[2 * s + actor]
    raging = kind == KIND_BARBARIAN and _hp(code, s, actor) <= rt

    out = code
    for i in range(nt):
        t = t0 if i == 0 else t1
        hit = hit0 if i == 0 else hit1
        thp = _hp(out, opp, t)
        if hit:
            if kind == KIND_ROGUE and thp <= er:
                dealt = thp
            elif raging:
                dealt = min(thp, rd)
            else:
                dealt = min(thp, dmgv[2 * s + actor])
            nhp = thp - dealt
            out = _set_hp(out, opp, t, nhp)
            if kind == KIND_WIZARD and nhp > 0:
                out = _set_stun(out, opp, t + 1)
        else:
            if kind == KIND_GUNNER and gz > 0:
                out = _set_hp(out, opp, t, thp - min(thp, gz))

    if kind == KIND_HEALER and heal_slot >= 0 and hit0:
        rhp = _hp(out, s, heal_slot)
        amount = min(heal, mhpv[2 * s + heal_slot] - rhp)
        if amount > 0:
            out = _set_hp(out, s, heal_slot, rhp + amount)

    opponents_alive = _hp(out, opp, 0) > 0 or _hp(out, opp, 1) > 0
    if kind == KIND_MONK and hit0 and opponents_alive:
        return _with_active_chain(out, s, actor + 1)
    return _end_turn_code(out, s)


@njit(cache=True)
def gen_branches(code, move, kindv, accv, mhpv, dmgv, heal, er, rt, rd, gz,
                 out_prob, out_code):
    """Branches of one move; zero-probability outcomes omitted.

    Returns the branch count; out arrays must have room for 4.
    """
    s = _active(code)
    if move == SKIP_CODE:
        out_prob[0] = 1.0
        out_code[0] = _end_turn_code(code, s)
        return 1

    actor = move & 0x1
    nt = (move >> 1) & 0x3
    acc = accv[2 * s + actor]
    miss = 1.0 - acc
    n = 0
    if nt == 1:
        out_prob[n] = acc
        out_code[n] = _apply_hits(code, move, True, False, kindv, mhpv, dmgv, heal, er, rt, rd, gz)
        n += 1
        if miss > 0.0:
            out_prob[n] = miss
            out_code[n] = _apply_hits(code, move, False, False, kindv, mhpv, dmgv, heal, er, rt, rd, gz)
            n += 1
    else:
        # Generation order matches the hit-tuple order (TT, TF, FT, FF).
        combos = ((True, True), (True, False), (False, True), (False, False))
        for hit0, hit1 in combos:
            p = (acc if hit0 else miss) * (acc if hit1 else miss)
            if p == 0.0:
                continue
            out_prob[n] = p
            out_code[n] = _apply_hits(code, move, hit0, hit1, kindv, mhpv, dmgv, heal, er, rt, rd, gz)
            n += 1
    return n


@njit(cache=True)
def enumerate_space(init0, init1, kindv, accv, mhpv, dmgv, heal, er, rt, rd, gz, budget):
    """BFS closure from both initial states.

    Returns (codes ascending, ok flag); ok is False when the budget was
    exceeded.
    """
    seen = Dict.empty(types.int64, types.int8)
    cap = 1 << 16
    queue = np.empty(cap, np.int64)
    queue[0] = init0
    seen[init0] = 1
    size = 1
    if init1 != init0:
        queue[1] = init1
        seen[init1] = 1
        size = 2
    head = 0

    moves = np.empty(8, np.int32)
    probs = np.empty(4, np.float64)
    codes = np.empty(4, np.int64)

    while head < size:
        code = queue[head]
        head += 1
        if winner_of(code) >= 0:
            continue
        nm = gen_moves(code, kindv, mhpv, moves)
        for mi in range(nm):
            nb = gen_branches(code, moves[mi], kindv, accv, mhpv, dmgv,
                              heal, er, rt, rd, gz, probs, codes)
            for bi in range(nb):
                succ = codes[bi]
                if succ not in seen:
                    seen[succ] = 1
                    if size == cap:
                        cap *= 2
                        bigger = np.empty(cap, np.int64)
                        bigger[:size] = queue[:size]
                        queue = bigger
                    queue[size] = succ
                    size += 1
                    if size > budget:
                        return queue[:0], False

    out = queue[:size].copy()
    out.sort()
    return out, True


@njit(cache=True)
def build_tables(codes, kindv, accv, mhpv, dmgv, heal, er, rt, rd, gz):
    """Dense transition tables over the sorted code array.

    Returns (pair_start, pair_move, branch_start, branch_succ,
    branch_prob, terminal_winner, active_side).
    """
    n = codes.shape[0]
    index = Dict.empty(types.int64, types.int64)
    for i in range(n):
        index[codes[i]] = i

    terminal = np.empty(n, np.int8)
    active = np.empty(n, np.int8)
    moves = np.empty(8, np.int32)
    probs = np.empty(4, np.float64)
    succ_codes = np.empty(4, np.int64)

    n_pairs = 0
    n_branches = 0
    for i in range(n):
        code = codes[i]
        active[i] = _active(code)
        w = winner_of(code)
        terminal[i] = w
        if w >= 0:
            continue
        nm = gen_moves(code, kindv, mhpv, moves)
        n_pairs += nm
        for mi in range(nm):
            n_branches += gen_branches(code, moves[mi], kindv, accv, mhpv, dmgv,
                                       heal, er, rt, rd, gz, probs, succ_codes)

    pair_start = np.empty(n + 1, np.int64)
    pair_move = np.empty(n_pairs, np.int32)
    branch_start = np.empty(n_pairs + 1, np.int64)
    branch_succ = np.empty(n_branches, np.int32)
    branch_prob = np.empty(n_branches, np.float64)

    pi = 0
    bi = 0
    for i in range(n):
        pair_start[i] = pi
        if terminal[i] >= 0:
            continue
        code = codes[i]
        nm = gen_moves(code, kindv, mhpv, moves)
        for mi in range(nm):
            pair_move[pi] = moves[mi]
            branch_start[pi] = bi
            nb = gen_branches(code, moves[mi], kindv, accv, mhpv, dmgv,
                              heal, er, rt, rd, gz, probs, succ_codes)
            for k in range(nb):
                branch_succ[bi] = np.int32(index[succ_codes[k]])
                branch_prob[bi] = probs[k]
                bi += 1
            pi += 1
    pair_start[n] = pi
    branch_start[pi] = bi
    return pair_start, pair_move, branch_start, branch_succ, branch_prob, terminal, active


@njit(cache=True)
def minimax_sweep(v, vn, pair_start, branch_start, branch_succ, branch_prob,
                  terminal, active, maximize_side):
    """One Jacobi backup. Returns the sup-norm residual."""
    n = v.shape[0]
    residual = 0.0
    for s in range(n):
        if terminal[s] >= 0:
            continue
        maximize = active[s] == maximize_side
        best = -1.0 if maximize else 2.0
        for p in range(pair_start[s], pair_start[s + 1]):
            q = 0.0
            for b in range(branch_start[p], branch_start[p + 1]):
                q += branch_prob[b] * v[branch_succ[b]]
            if maximize:
                if q > best:
                    best = q
            else:
                if q < best:
                    best = q
        vn[s] = best
        diff = best - v[s]
        if diff < 0.0:
            diff = -diff
        if diff > residual:
            residual = diff
    return residual


@njit(cache=True)
def mdp_sweep(v, vn, pair_start, branch_start, branch_succ, branch_prob,
              scaled_prob, terminal, active, responder_side):
    """Backup where the responder maximizes and the other side follows
    a fixed mixture (scaled_prob carries policy-weighted branch
    probabilities)."""
    n = v.shape[0]
    residual = 0.0
    for s in range(n):
        if terminal[s] >= 0:
            continue
        if active[s] == responder_side:
            best = -1.0
            for p in range(pair_start[s], pair_start[s + 1]):
                q = 0.0
                for b in range(branch_start[p], branch_start[p + 1]):
                    q += branch_prob[b] * v[branch_succ[b]]
                if q > best:
                    best = q
            val = best
        else:
            acc = 0.0
            for b in range(branch_start[pair_start[s]], branch_start[pair_start[s + 1]]):
                acc += scaled_prob[b] * v[branch_succ[b]]
            val = acc
        vn[s] = val
        diff = val - v[s]
        if diff < 0.0:
            diff = -diff
        if diff > residual:
            residual = diff
    return residual


@njit(cache=True)
def dtmc_sweep(v, vn, pair_start, branch_start, branch_succ, scaled_prob, terminal):
    """Backup with both sides fixed (pure expectation)."""
    n = v.shape[0]
    residual = 0.0
    for s in range(n):
        if terminal[s] >= 0:
            continue
        acc = 0.0
        for b in range(branch_start[pair_start[s]], branch_start[pair_start[s + 1]]):
            acc += scaled_prob[b] * v[branch_succ[b]]
        vn[s] = acc
        diff = acc - v[s]
        if diff < 0.0:
            diff = -diff
        if diff > residual:
            residual = diff
    return residual


@njit(cache=True)
def extract_policy(v, pair_start, branch_start, branch_succ, branch_prob,
                   terminal, active, side, maximize):
    """First-extremal move index per decision state of ``side``.

    Returns an int32 array with -1 at non-decision states; entries are
    offsets into the state's own move list (canonical order).
    """
    n = v.shape[0]
    out = np.full(n, -1, np.int32)
    for s in range(n):
        if terminal[s] >= 0 or active[s] != side:
            continue
        best = -1.0 if maximize else 2.0
        best_i = -1
        for p in range(pair_start[s], pair_start[s + 1]):
            q = 0.0
            for b in range(branch_start[p], branch_start[p + 1]):
                q += branch_prob[b] * v[branch_succ[b]]
            if maximize:
                if q > best:
                    best = q
                    best_i = p - pair_start[s]
            else:
                if q < best:
                    best = q
                    best_i = p - pair_start[s]
        out[s] = best_i
    return out


@njit(cache=True)
def q_values_for_state(v, s, pair_start, branch_start, branch_succ, branch_prob):
    nm = pair_start[s + 1] - pair_start[s]
    out = np.empty(nm, np.float64)
    for i in range(nm):
        p = pair_start[s] + i
        q = 0.0
        for b in range(branch_start[p], branch_start[p + 1]):
            q += branch_prob[b] * v[branch_succ[b]]
        out[i] = q
    return out
