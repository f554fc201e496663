/**
 * Browser bootstrap: builds the App, paints its HTML into #app, and
 * translates DOM events into App calls via data-action attributes.
 * All logic lives in app.ts/state.ts; this file is glue only.
 */

import { Client } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (root === null) {
    throw new Error("missing #app element");
}

const app = new App(new Client(window.location.origin), { onChange: paint });

function paint(): void {
    const active = document.activeElement;
    const focusField = active instanceof HTMLInputElement ? active.dataset.field : undefined;
    const caret = active instanceof HTMLInputElement ? active.selectionStart : null;
    root!.innerHTML = app.html();
    if (focusField !== undefined) {
        const again = root!.querySelector<HTMLInputElement>(`input[data-field="${focusField}"]`);
        if (again !== null) {
            again.focus();
            if (caret !== null) {
                again.setSelectionRange(caret, caret);
            }
        }
    }
}

function intAttr(el: HTMLElement, name: string): number {
    return parseInt(el.dataset[name] ?? "-1", 10);
}

root.addEventListener("click", (ev) => {
    const el = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (el === null) {
        return;
    }
    const action = el.dataset.action;
    switch (action) {
        case "mode-register":
            app.setMode("register");
            break;
        case "mode-login":
            app.setMode("login");
            break;
        case "consent-research":
            app.toggleConsent("research");
            break;
        case "consent-terms":
            app.toggleConsent("terms");
            break;
        case "submit-auth":
            void app.submitAuth();
            break;
        case "logout":
            app.logout();
            break;
        case "queue-slot":
            void app.queueForMatch(intAttr(el, "slot"));
            break;
        case "bot-slot":
            void app.startBotGame(intAttr(el, "slot"), false);
            break;
        case "coach-slot":
            void app.startBotGame(intAttr(el, "slot"), true);
            break;
        case "challenge-slot":
            void app.challenge(intAttr(el, "slot"));
            break;
        case "open-game":
            app.openGame(el.dataset.game ?? "");
            break;
        case "go-home":
            app.goHome();
            break;
        case "pick-char":
            app.pickCharacter(el.dataset.char ?? "");
            break;
        case "submit-pair":
            void app.submitPair();
            break;
        case "tap-card":
            app.tapCard(intAttr(el, "side"), intAttr(el, "slot"));
            break;
        case "pick-heal":
            app.pickHeal(intAttr(el, "slot"));
            break;
        case "confirm-move":
            void app.confirmMove();
            break;
        case "do-skip":
            void app.skipTurn();
            break;
        case "do-forfeit":
            if (window.confirm("Forfeit this game?")) {
                void app.forfeitGame();
            }
            break;
        case "get-hint":
            void app.requestHint();
            break;
        default:
            break;
    }
});

root.addEventListener("input", (ev) => {
    const el = ev.target as HTMLInputElement;
    if (el.dataset.field !== undefined) {
        app.setField(el.dataset.field, el.value);
    }
});

// scroll events do not bubble; capture them to watch the terms box
root.addEventListener(
    "scroll",
    (ev) => {
        const el = ev.target as HTMLElement;
        if (el.dataset?.action === "terms-box") {
            if (el.scrollTop + el.clientHeight >= el.scrollHeight - 4) {
                app.noteTermsScrolled();
            }
        }
    },
    true,
);

paint();
app.startPolling();
