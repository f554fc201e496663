/**
 * Pure client-side state: consent gating for registration and the move
 * composer used on the game screen.
 *
 * The composer never invents legality. Every transition consults the
 * `legal_moves` list from the last server snapshot, so the only moves
 * that become submittable are ones the server itself offered.
 */

import { AttackPayload, GameView, MovePayload } from "./types.js";

export const USERNAME_RE = /^[A-Za-z0-9_\-]{3,20}$/;

export interface ConsentState {
    scrolled: boolean;
    research: boolean;
    terms: boolean;
}

export function emptyConsent(): ConsentState {
    return { scrolled: false, research: false, terms: false };
}

/** The register button unlocks only after the terms box has been read
 *  to the bottom, both boxes are ticked, and the credentials are
 *  plausible. The server re-checks all of it. */
export function canSubmitRegistration(
    consent: ConsentState,
    username: string,
    password: string,
): boolean {
    return (
        consent.scrolled &&
        consent.research &&
        consent.terms &&
        USERNAME_RE.test(username) &&
        password.length > 0
    );
}

export interface Composer {
    picks: string[];
    actorSlot: number | null;
    targets: number[];
    healSlot: number | null;
}

export function emptyComposer(): Composer {
    return { picks: [], actorSlot: null, targets: [], healSlot: null };
}

export function sameMove(a: MovePayload, b: MovePayload): boolean {
    if (a.kind !== b.kind) {
        return false;
    }
    if (a.kind !== "attack" || b.kind !== "attack") {
        return true;
    }
    if (a.actor_slot !== b.actor_slot) {
        return false;
    }
    if (a.targets.length !== b.targets.length) {
        return false;
    }
    for (let i = 0; i < a.targets.length; i++) {
        if (a.targets[i] !== b.targets[i]) {
            return false;
        }
    }
    return (a.heal_slot ?? null) === (b.heal_slot ?? null);
}

export function legalAttacks(view: GameView): AttackPayload[] {
    return view.legal_moves.filter((m): m is AttackPayload => m.kind === "attack");
}

/** Own slots that may act right now (mid Monk-chain this is one slot). */
export function candidateActors(view: GameView): number[] {
    const slots: number[] = [];
    for (const m of legalAttacks(view)) {
        if (!slots.includes(m.actor_slot)) {
            slots.push(m.actor_slot);
        }
    }
    return slots.sort((x, y) => x - y);
}

/** Enemy slots reachable by the chosen actor, given what is already
 *  selected. For a two-target attacker with one target picked this is
 *  the picked slot (to untoggle) plus any legal extension. */
export function targetOptions(view: GameView, composer: Composer): number[] {
    if (composer.actorSlot === null) {
        return [];
    }
    const opts = new Set<number>(composer.targets);
    for (const m of legalAttacks(view)) {
        if (m.actor_slot !== composer.actorSlot) {
            continue;
        }
        if (composer.targets.length === 0) {
            for (const t of m.targets) {
                opts.add(t);
            }
        } else if (composer.targets.length === 1) {
            if (m.targets.length === 2 && m.targets.includes(composer.targets[0])) {
                for (const t of m.targets) {
                    opts.add(t);
                }
            }
            if (m.targets.length === 1) {
                opts.add(m.targets[0]);
            }
        }
    }
    return Array.from(opts).sort((x, y) => x - y);
}

/** True when the chosen actor has a legal two-target volley. */
export function canVolley(view: GameView, actorSlot: number): boolean {
    return legalAttacks(view).some(
        (m) => m.actor_slot === actorSlot && m.targets.length === 2,
    );
}

/** Heal recipients that make the current actor+targets selection a
 *  legal move. Empty when no heal choice is required. */
export function healChoices(view: GameView, composer: Composer): number[] {
    if (composer.actorSlot === null || composer.targets.length === 0) {
        return [];
    }
    const out: number[] = [];
    for (const m of legalAttacks(view)) {
        if (m.actor_slot !== composer.actorSlot || m.heal_slot === undefined) {
            continue;
        }
        if (sameTargets(m.targets, composer.targets)) {
            out.push(m.heal_slot);
        }
    }
    return out.sort((x, y) => x - y);
}

function sameTargets(a: number[], b: number[]): boolean {
    return a.length === b.length && a.every((t, i) => t === b[i]);
}

export function tapPick(composer: Composer, name: string): Composer {
    const picks = composer.picks.includes(name)
        ? composer.picks.filter((p) => p !== name)
        : composer.picks.length < 2
          ? [...composer.picks, name]
          : composer.picks;
    return { ...composer, picks };
}

export function tapActor(composer: Composer, view: GameView, slot: number): Composer {
    if (!candidateActors(view).includes(slot)) {
        return composer;
    }
    if (composer.actorSlot === slot) {
        return { ...composer, actorSlot: null, targets: [], healSlot: null };
    }
    return { ...composer, actorSlot: slot, targets: [], healSlot: null };
}

export function tapTarget(composer: Composer, view: GameView, slot: number): Composer {
    if (composer.actorSlot === null) {
        return composer;
    }
    if (!targetOptions(view, composer).includes(slot)) {
        return composer;
    }
    let targets: number[];
    if (composer.targets.includes(slot)) {
        targets = composer.targets.filter((t) => t !== slot);
    } else if (composer.targets.length === 0) {
        targets = [slot];
    } else if (composer.targets.length === 1 && canVolley(view, composer.actorSlot)) {
        targets = [...composer.targets, slot].sort((x, y) => x - y);
    } else {
        targets = [slot];
    }
    return { ...composer, targets, healSlot: null };
}

export function tapHeal(composer: Composer, view: GameView, slot: number): Composer {
    if (!healChoices(view, composer).includes(slot)) {
        return composer;
    }
    return { ...composer, healSlot: composer.healSlot === slot ? null : slot };
}

/** The move the composer currently spells out, or null while the
 *  selection is incomplete. The result is always a member of the
 *  snapshot's legal_moves list. */
export function composedMove(view: GameView, composer: Composer): MovePayload | null {
    if (composer.actorSlot === null || composer.targets.length === 0) {
        return null;
    }
    const heals = healChoices(view, composer);
    if (heals.length > 0 && composer.healSlot === null) {
        return null;
    }
    const candidate: AttackPayload = {
        kind: "attack",
        actor_slot: composer.actorSlot,
        targets: [...composer.targets].sort((x, y) => x - y),
    };
    if (heals.length > 0 && composer.healSlot !== null) {
        candidate.heal_slot = composer.healSlot;
    }
    const match = view.legal_moves.find((m) => sameMove(m, candidate));
    return match ?? null;
}

/** Reconcile the composer with a fresh snapshot: any change in the
 *  sequence number or phase means the board moved on, so stale input
 *  is dropped. */
export function reconcileComposer(
    prev: GameView | null,
    next: GameView,
    composer: Composer,
): Composer {
    if (prev === null || prev.next_seq !== next.next_seq || prev.phase !== next.phase) {
        return emptyComposer();
    }
    return composer;
}
