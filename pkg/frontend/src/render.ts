/**
 * HTML renderers. Every function is a pure string builder over the last
 * server snapshot plus pending input, so screens can be asserted on in
 * tests without a DOM.
 *
 * Interactive elements carry data-action attributes; the bootstrap in
 * main.ts turns clicks on them into App calls.
 */

import {
    candidateActors,
    canSubmitRegistration,
    composedMove,
    Composer,
    healChoices,
    targetOptions,
} from "./state.js";
import { CardView, GameView, HintView, HomeView, LeaderboardView, MoveLogEntry, MovePayload } from "./types.js";

export function escapeHtml(raw: string): string {
    return raw
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;")
        .replace(/'/g, "&#39;");
}

export function formatCost(cost: number): string {
    return cost.toFixed(3);
}

export function formatSkill(skill: number): string {
    return skill.toFixed(0);
}

export function titleCase(name: string): string {
    return name.length === 0 ? name : name[0].toUpperCase() + name.slice(1);
}

export interface LoginScreen {
    kind: "login";
    mode: "register" | "login";
    consent: { scrolled: boolean; research: boolean; terms: boolean };
    username: string;
    password: string;
    error: string | null;
    busy: boolean;
}

export interface HomeScreen {
    kind: "home";
    home: HomeView | null;
    leaderboard: LeaderboardView | null;
    challengeName: string;
    error: string | null;
}

export interface GameScreen {
    kind: "game";
    gameId: string;
    view: GameView | null;
    composer: Composer;
    hint: HintView | null;
    error: string | null;
}

export type Screen = LoginScreen | HomeScreen | GameScreen;

export interface UiState {
    session: { username: string } | null;
    config: { characters: string[]; healthByChar: Record<string, number>; seasonId: string } | null;
    screen: Screen;
}

const TERMS_TEXT = [
    "This service hosts a two-player dueling game run for research on",
    "game balancing. Match records, move timings, and aggregate usage",
    "statistics are collected and analysed; published results only ever",
    "contain anonymised data. Accounts exist so you can resume your own",
    "games and appear on the leaderboard under the name you chose.",
    "Play fair: one account per person, no automation of ranked games.",
    "You can stop playing at any time. Scroll to the end to enable the",
    "registration form, then confirm both statements below.",
].join(" ");

export function renderApp(state: UiState): string {
    switch (state.screen.kind) {
        case "login":
            return renderLogin(state.screen);
        case "home":
            return renderHome(state.screen, state.config?.seasonId ?? "");
        case "game":
            return renderGame(state.screen, state.config?.healthByChar ?? {}, state.config?.characters ?? []);
    }
}

function errorBanner(error: string | null): string {
    return error === null ? "" : `<div class="error" role="alert">${escapeHtml(error)}</div>`;
}

export function renderLogin(screen: LoginScreen): string {
    const registering = screen.mode === "register";
    const ready = registering
        ? canSubmitRegistration(screen.consent, screen.username, screen.password)
        : screen.username.length > 0 && screen.password.length > 0;
    const submitLabel = registering ? "Create account" : "Log in";
    const consentBlock = registering
        ? `
    <div class="terms" data-action="terms-box" tabindex="0">${escapeHtml(TERMS_TEXT)}</div>
    <p class="muted">${screen.consent.scrolled ? "Thanks for reading." : "Scroll the terms to the bottom to continue."}</p>
    <label class="consent-line">
      <input type="checkbox" data-action="consent-research" ${screen.consent.research ? "checked" : ""}>
      I consent to my games being used for research.
    </label>
    <label class="consent-line">
      <input type="checkbox" data-action="consent-terms" ${screen.consent.terms ? "checked" : ""}>
      I accept the terms of play.
    </label>`
        : "";
    return `
<div class="screen login-screen">
  <h1>RPGLite</h1>
  <div class="tabs">
    <button data-action="mode-register" class="${registering ? "active" : ""}">Register</button>
    <button data-action="mode-login" class="${registering ? "" : "active"}">Log in</button>
  </div>
  ${consentBlock}
  <label>Username
    <input name="username" data-field="username" value="${escapeHtml(screen.username)}" autocomplete="username">
  </label>
  <label>Password
    <input name="password" data-field="password" type="password" value="${escapeHtml(screen.password)}" autocomplete="current-password">
  </label>
  <button class="primary" data-action="submit-auth" ${ready && !screen.busy ? "" : "disabled"}>${submitLabel}</button>
  ${errorBanner(screen.error)}
</div>`;
}

function renderSlot(slot: HomeView["slots"][number]): string {
    if (slot.empty) {
        return `
  <div class="slot empty" data-slot="${slot.slot}">
    <div class="slot-title">Slot ${slot.slot + 1}</div>
    <button data-action="queue-slot" data-slot="${slot.slot}">Find match</button>
    <button data-action="bot-slot" data-slot="${slot.slot}">Practice vs bot</button>
    <button data-action="coach-slot" data-slot="${slot.slot}">Practice with coach</button>
    <button data-action="challenge-slot" data-slot="${slot.slot}">Challenge</button>
  </div>`;
    }
    if (slot.queued) {
        return `
  <div class="slot queued" data-slot="${slot.slot}">
    <div class="slot-title">Slot ${slot.slot + 1}</div>
    <p>Waiting in the queue&hellip;</p>
  </div>`;
    }
    const badge = slot.phase === "finished"
        ? "finished"
        : slot.needs_pair
          ? "pick your pair"
          : slot.your_turn
            ? "your turn"
            : "waiting";
    return `
  <div class="slot busy" data-slot="${slot.slot}">
    <div class="slot-title">Slot ${slot.slot + 1}</div>
    <p>vs ${escapeHtml(slot.opponent ?? "?")} <span class="badge ${slot.your_turn ? "turn" : ""}">${badge}</span></p>
    <button data-action="open-game" data-game="${escapeHtml(slot.game_id ?? "")}">Open</button>
  </div>`;
}

export function renderHome(screen: HomeScreen, seasonId: string): string {
    const home = screen.home;
    if (home === null) {
        return `<div class="screen"><p class="muted">Loading&hellip;</p>${errorBanner(screen.error)}</div>`;
    }
    const rows = (screen.leaderboard?.rows ?? [])
        .slice(0, 10)
        .map(
            (r) => `
      <tr><td>${r.rank}</td><td>${escapeHtml(r.username)}</td><td>${formatSkill(r.skill)}</td><td>${r.games_won}/${r.games_played}</td></tr>`,
        )
        .join("");
    const medals = home.medals.length
        ? `<p>Medals: ${home.medals.map((m) => `<span class="medal">${escapeHtml(m)}</span>`).join(" ")}</p>`
        : "";
    return `
<div class="screen home-screen">
  <header>
    <h1>RPGLite <span class="muted">${escapeHtml(seasonId || home.season_id)}</span></h1>
    <div class="who">
      ${escapeHtml(home.username)} &middot; skill ${formatSkill(home.skill)} &middot; ${home.games_won}/${home.games_played} won
      <button data-action="logout">Log out</button>
    </div>
  </header>
  ${medals}
  <label class="challenge-line">Challenge a player:
    <input data-field="challengeName" value="${escapeHtml(screen.challengeName)}" placeholder="username">
  </label>
  <div class="slots">${home.slots.map(renderSlot).join("")}</div>
  <h2>Leaderboard</h2>
  <table class="leaderboard">
    <thead><tr><th>#</th><th>Player</th><th>Skill</th><th>Won/Played</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
  ${errorBanner(screen.error)}
</div>`;
}

export function renderCard(
    card: CardView,
    opts: {
        side: number;
        slot: number;
        maxHp: number;
        selected?: boolean;
        targeted?: boolean;
        selectable?: boolean;
        status?: string;
    },
): string {
    const maxHp = Math.max(opts.maxHp, card.hp, 1);
    const pct = Math.round((100 * card.hp) / maxHp);
    const classes = ["card"];
    if (card.hp <= 0) classes.push("dead");
    if (card.stunned) classes.push("stunned");
    if (opts.selected) classes.push("selected");
    if (opts.targeted) classes.push("targeted");
    if (opts.selectable) classes.push("selectable");
    const status = card.stunned
        ? `<div class="blackout" aria-label="stunned"></div>`
        : `<div class="card-status">${escapeHtml(opts.status ?? (card.hp <= 0 ? "down" : "ready"))}</div>`;
    return `
    <div class="${classes.join(" ")}" data-action="tap-card" data-side="${opts.side}" data-slot="${opts.slot}">
      <div class="card-name">${escapeHtml(titleCase(card.id))}</div>
      <div class="hpbar"><div class="hpfill" style="width:${pct}%"></div></div>
      <div class="hp-text">${card.hp}/${maxHp}</div>
      ${status}
    </div>`;
}

export function describeMove(move: MovePayload, view: GameView, side: number): string {
    if (move.kind === "skip") {
        return "Skip";
    }
    if (move.kind === "forfeit") {
        return "Forfeit";
    }
    const ownPair = view.pairs[side];
    const oppPair = view.pairs[1 - side];
    const actor = ownPair ? titleCase(ownPair[move.actor_slot] ?? "?") : `slot ${move.actor_slot}`;
    const targets = move.targets
        .map((t) => (oppPair ? titleCase(oppPair[t] ?? "?") : `slot ${t}`))
        .join(" and ");
    const heal =
        move.heal_slot !== undefined && ownPair
            ? `, healing ${titleCase(ownPair[move.heal_slot] ?? "?")}`
            : move.heal_slot !== undefined
              ? `, healing slot ${move.heal_slot}`
              : "";
    return `${actor} attacks ${targets}${heal}`;
}

function renderLogEntry(entry: MoveLogEntry, view: GameView): string {
    const who = entry.side === view.your_side ? "you" : "opponent";
    const hits =
        entry.move.kind === "attack"
            ? entry.hits.map((h) => (h ? "<span class=\"hit\">hit</span>" : "<span class=\"miss\">miss</span>")).join(" ")
            : "";
    const notes: string[] = [];
    if (entry.events.stun_slot !== null) notes.push("stunned");
    if (entry.events.execute) notes.push("executed");
    if (entry.events.rage) notes.push("raging");
    if (entry.events.graze) notes.push("grazed");
    if (entry.events.heal !== null) notes.push("healed");
    const cost =
        entry.cost === null || entry.cost === undefined
            ? ""
            : ` <span class="cost ${entry.cost <= 1e-12 ? "cost-zero" : "cost-pos"}">cost ${formatCost(entry.cost)}</span>`;
    return `<li><span class="log-who ${who}">${who}</span> ${escapeHtml(describeMove(entry.move, view, entry.side))} ${hits}${notes.length ? ` <em>${notes.join(", ")}</em>` : ""}${cost}</li>`;
}

function renderPairPicker(view: GameView, composer: Composer, roster: string[]): string {
    if (view.pairs[view.your_side] !== null) {
        return `<p class="muted">Pair locked in. Waiting for the opponent to choose&hellip;</p>`;
    }
    const buttons = roster
        .map((name) => {
            const picked = composer.picks.includes(name);
            return `<button class="char ${picked ? "picked" : ""}" data-action="pick-char" data-char="${escapeHtml(name)}">${escapeHtml(titleCase(name))}</button>`;
        })
        .join("");
    const ready = composer.picks.length === 2;
    return `
  <div class="pair-picker">
    <h2>Choose your pair</h2>
    <div class="roster">${buttons}</div>
    <button class="primary" data-action="submit-pair" ${ready ? "" : "disabled"}>Lock in ${
        composer.picks.map(titleCase).join(" + ") || "two characters"
    }</button>
    ${view.opponent_chosen ? `<p class="muted">The opponent has already chosen.</p>` : ""}
  </div>`;
}

function renderComposer(view: GameView, composer: Composer): string {
    const actors = candidateActors(view);
    const move = composedMove(view, composer);
    const heals = healChoices(view, composer);
    let prompt: string;
    if (composer.actorSlot === null) {
        prompt = "Tap one of your characters to act.";
    } else if (composer.targets.length === 0) {
        prompt = "Tap an enemy to target.";
    } else if (heals.length > 0 && composer.healSlot === null) {
        prompt = "Choose who receives the heal.";
    } else if (move !== null) {
        prompt = `Ready: ${describeMove(move, view, view.your_side)}.`;
    } else {
        prompt = "Add a second target or confirm.";
    }
    const healButtons = heals
        .map((slot) => {
            const pair = view.pairs[view.your_side];
            const label = pair ? titleCase(pair[slot] ?? `slot ${slot}`) : `slot ${slot}`;
            const active = composer.healSlot === slot;
            return `<button class="heal ${active ? "picked" : ""}" data-action="pick-heal" data-slot="${slot}">${escapeHtml(label)}</button>`;
        })
        .join("");
    return `
  <div class="composer">
    <p class="prompt">${escapeHtml(prompt)}</p>
    ${actors.length === 1 && composer.actorSlot === null ? `<p class="muted">Only one character can act.</p>` : ""}
    ${heals.length > 0 ? `<div class="heal-picker">Heal: ${healButtons}</div>` : ""}
    <div class="actions">
      <button class="primary" data-action="confirm-move" ${move !== null ? "" : "disabled"}>Confirm move</button>
      <button data-action="do-skip">Skip turn</button>
      <button class="danger" data-action="do-forfeit">Forfeit</button>
    </div>
  </div>`;
}

function renderCoach(view: GameView, hint: HintView | null): string {
    if (view.bot === null || !view.bot.coach) {
        return "";
    }
    const yourCosts = view.moves.filter(
        (m) => m.side === view.your_side && m.cost !== null && m.cost !== undefined,
    );
    const rows = yourCosts
        .map((m) => {
            const cost = m.cost as number;
            const cls = cost <= 1e-12 ? "cost-zero" : "cost-pos";
            return `<li>#${m.index} ${escapeHtml(describeMove(m.move, view, m.side))}: <span class="cost ${cls}">${formatCost(cost)}</span></li>`;
        })
        .join("");
    const hintBlock =
        hint === null
            ? ""
            : `<p class="hint">Suggested: <strong>${escapeHtml(describeMove(hint.move, view, view.your_side))}</strong> (win chance ${hint.value.toFixed(3)})</p>`;
    return `
  <aside class="coach">
    <h2>Coach</h2>
    <p class="muted">Cost is the win probability a move gave away; 0.000 is optimal.</p>
    ${view.your_turn && view.phase === "playing" ? `<button data-action="get-hint">Hint</button>` : ""}
    ${hintBlock}
    <ol class="costs">${rows}</ol>
  </aside>`;
}

function finishedBanner(view: GameView): string {
    if (view.phase !== "finished") {
        return "";
    }
    const verdict =
        view.winner === null ? "Draw" : view.winner === view.your_side ? "You won" : "You lost";
    return `<div class="banner ${view.winner === view.your_side ? "won" : "lost"}">${verdict} (${escapeHtml(
        view.end_reason ?? "",
    )})</div>`;
}

export function renderGame(
    screen: GameScreen,
    healthByChar: Record<string, number>,
    roster: string[],
): string {
    const view = screen.view;
    if (view === null) {
        return `<div class="screen"><p class="muted">Loading&hellip;</p>${errorBanner(screen.error)}</div>`;
    }
    const opponent = view.users[1 - view.your_side];
    const header = `
  <header>
    <button data-action="go-home">&larr; Home</button>
    <h1>vs ${escapeHtml(opponent)} <span class="muted">${escapeHtml(view.season_id)}</span></h1>
  </header>`;
    if (view.phase === "selecting") {
        return `
<div class="screen game-screen">
  ${header}
  ${renderPairPicker(view, screen.composer, roster)}
  ${errorBanner(screen.error)}
</div>`;
    }
    const state = view.state;
    if (state === null) {
        return `<div class="screen">${header}<p class="muted">Loading&hellip;</p></div>`;
    }
    const you = view.your_side;
    const actors = candidateActors(view);
    const targets = view.your_turn ? targetOptions(view, screen.composer) : [];
    const enemyCards = state.sides[1 - you]
        .map((card, slot) =>
            renderCard(card, {
                side: 1 - you,
                slot,
                maxHp: healthByChar[card.id] ?? card.hp,
                targeted: screen.composer.targets.includes(slot),
                selectable: view.your_turn && targets.includes(slot),
            }),
        )
        .join("");
    const ownCards = state.sides[you]
        .map((card, slot) =>
            renderCard(card, {
                side: you,
                slot,
                maxHp: healthByChar[card.id] ?? card.hp,
                selected: screen.composer.actorSlot === slot,
                selectable: view.your_turn && actors.includes(slot),
            }),
        )
        .join("");
    const turnArea =
        view.phase === "finished"
            ? ""
            : view.your_turn
              ? renderComposer(view, screen.composer)
              : `<p class="prompt muted">Waiting for ${escapeHtml(opponent)}&hellip;</p>`;
    return `
<div class="screen game-screen">
  ${header}
  ${finishedBanner(view)}
  <section class="board">
    <div class="row enemy"><h2>${escapeHtml(opponent)}</h2>${enemyCards}</div>
    <div class="row own"><h2>You</h2>${ownCards}</div>
  </section>
  ${turnArea}
  ${renderCoach(view, screen.hint)}
  <h2>Moves</h2>
  <ol class="log">${view.moves.map((m) => renderLogEntry(m, view)).join("")}</ol>
  ${errorBanner(screen.error)}
</div>`;
}
