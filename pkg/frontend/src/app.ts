/**
 * Screen controller: owns the UI state, talks to the service through a
 * Client, and re-renders by calling onChange.
 *
 * Two invariants live here. At most one mutation (POST) is in flight at
 * any time; taps and background polls never start a second one. And a
 * StaleSequence rejection is not an error the player sees: the app
 * silently re-fetches the game and carries on from the fresh snapshot.
 */

import { ApiError, ServiceApi } from "./api.js";
import { GameScreen, HomeScreen, LoginScreen, renderApp, Screen, UiState } from "./render.js";
import {
    composedMove,
    emptyComposer,
    emptyConsent,
    reconcileComposer,
    tapActor,
    tapHeal,
    tapPick,
    tapTarget,
} from "./state.js";
import { GameView, MovePayload } from "./types.js";

const POLL_MS = 2000;

function loginScreen(error: string | null = null): LoginScreen {
    return {
        kind: "login",
        mode: "register",
        consent: emptyConsent(),
        username: "",
        password: "",
        error,
        busy: false,
    };
}

function homeScreen(): HomeScreen {
    return { kind: "home", home: null, leaderboard: null, challengeName: "", error: null };
}

function gameScreen(gameId: string): GameScreen {
    return { kind: "game", gameId, view: null, composer: emptyComposer(), hint: null, error: null };
}

export interface AppOptions {
    pollMs?: number;
    onChange?: () => void;
}

export class App {
    readonly client: ServiceApi;
    state: UiState;
    private readonly pollMs: number;
    private readonly onChange: () => void;
    private busy = false;
    private refreshing = false;
    private timer: ReturnType<typeof setInterval> | null = null;

    constructor(client: ServiceApi, options: AppOptions = {}) {
        this.client = client;
        this.pollMs = options.pollMs ?? POLL_MS;
        this.onChange = options.onChange ?? (() => undefined);
        this.state = { session: null, config: null, screen: loginScreen() };
    }

    html(): string {
        return renderApp(this.state);
    }

    get mutationInFlight(): boolean {
        return this.busy;
    }

    private emit(): void {
        this.onChange();
    }

    private setError(message: string): void {
        this.state.screen.error = message;
    }

    /** Run one mutation; refuse to overlap another. Returns false when
     *  a mutation was already in flight and this one was dropped. */
    private async mutate(fn: () => Promise<void>): Promise<boolean> {
        if (this.busy) {
            return false;
        }
        this.busy = true;
        try {
            this.state.screen.error = null;
            await fn();
        } catch (err) {
            await this.absorb(err);
        } finally {
            this.busy = false;
            this.emit();
        }
        return true;
    }

    private async absorb(err: unknown): Promise<void> {
        if (err instanceof ApiError) {
            if (err.code === "StaleSequence") {
                // someone (a retry, another tab) already played this seq;
                // re-sync quietly instead of surfacing an error
                await this.refreshQuietly();
                return;
            }
            if (err.status === 401) {
                this.client.token = null;
                this.state = { session: null, config: null, screen: loginScreen("Session expired, log in again.") };
                return;
            }
            this.setError(err.message);
            return;
        }
        this.setError(err instanceof Error ? err.message : String(err));
    }

    private async refreshQuietly(): Promise<void> {
        try {
            await this.refresh();
        } catch {
            // the next poll will retry
        }
    }

    // -- auth ------------------------------------------------------------

    setMode(mode: "register" | "login"): void {
        if (this.state.screen.kind === "login") {
            this.state.screen.mode = mode;
            this.state.screen.error = null;
            this.emit();
        }
    }

    setField(field: string, value: string): void {
        const screen = this.state.screen;
        if (screen.kind === "login" && (field === "username" || field === "password")) {
            screen[field] = value;
        } else if (screen.kind === "home" && field === "challengeName") {
            screen.challengeName = value;
        }
        this.emit();
    }

    noteTermsScrolled(): void {
        if (this.state.screen.kind === "login" && !this.state.screen.consent.scrolled) {
            this.state.screen.consent.scrolled = true;
            this.emit();
        }
    }

    toggleConsent(which: "research" | "terms"): void {
        if (this.state.screen.kind === "login") {
            const consent = this.state.screen.consent;
            consent[which] = !consent[which];
            this.emit();
        }
    }

    async submitAuth(): Promise<void> {
        const screen = this.state.screen;
        if (screen.kind !== "login") {
            return;
        }
        await this.mutate(async () => {
            screen.busy = true;
            try {
                const creds =
                    screen.mode === "register"
                        ? await this.client.register(
                              screen.username,
                              screen.password,
                              screen.consent.research,
                              screen.consent.terms,
                          )
                        : await this.client.login(screen.username, screen.password);
                this.state.session = { username: creds.username };
                this.state.screen = homeScreen();
                await this.loadConfig();
                await this.refresh();
            } finally {
                screen.busy = false;
            }
        });
    }

    logout(): void {
        this.client.token = null;
        this.state = { session: null, config: null, screen: loginScreen() };
        this.emit();
    }

    private async loadConfig(): Promise<void> {
        if (this.state.config !== null) {
            return;
        }
        const info = await this.client.config();
        const healthByChar: Record<string, number> = {};
        for (const name of info.characters) {
            const hp = info.config[`${name}_health`];
            if (typeof hp === "number") {
                healthByChar[name] = hp;
            }
        }
        this.state.config = {
            characters: info.characters,
            healthByChar,
            seasonId: info.season_id,
        };
    }

    // -- navigation and polling -------------------------------------------

    openGame(gameId: string): void {
        this.state.screen = gameScreen(gameId);
        this.emit();
        void this.refreshQuietly();
    }

    goHome(): void {
        this.state.screen = homeScreen();
        this.emit();
        void this.refreshQuietly();
    }

    startPolling(): void {
        if (this.timer !== null) {
            return;
        }
        this.timer = setInterval(() => {
            void this.pollTick();
        }, this.pollMs);
    }

    stopPolling(): void {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }

    /** One poll: read-only, skipped while a previous poll is still
     *  running, allowed to overlap a mutation. */
    async pollTick(): Promise<void> {
        if (this.refreshing || this.state.session === null) {
            return;
        }
        await this.refreshQuietly();
    }

    async refresh(): Promise<void> {
        if (this.refreshing) {
            return;
        }
        this.refreshing = true;
        try {
            const screen = this.state.screen;
            if (screen.kind === "home") {
                const [home, leaderboard] = await Promise.all([
                    this.client.home(),
                    this.client.leaderboard(),
                ]);
                if (this.state.screen === screen) {
                    screen.home = home;
                    screen.leaderboard = leaderboard;
                }
            } else if (screen.kind === "game") {
                const view = await this.client.game(screen.gameId);
                if (this.state.screen === screen) {
                    this.applyView(screen, view);
                }
            }
            this.emit();
        } finally {
            this.refreshing = false;
        }
    }

    private applyView(screen: GameScreen, view: GameView): void {
        screen.composer = reconcileComposer(screen.view, view, screen.composer);
        if (screen.view !== null && screen.view.next_seq !== view.next_seq) {
            screen.hint = null;
        }
        screen.view = view;
    }

    // -- home actions -------------------------------------------------------

    async queueForMatch(slot: number): Promise<void> {
        await this.mutate(async () => {
            const out = await this.client.queue(slot);
            if (out.game_id !== null) {
                this.state.screen = gameScreen(out.game_id);
                const view = await this.client.game(out.game_id);
                this.applyView(this.state.screen as GameScreen, view);
            } else {
                await this.refresh();
            }
        });
    }

    async challenge(slot: number): Promise<void> {
        const screen = this.state.screen;
        if (screen.kind !== "home" || screen.challengeName === "") {
            return;
        }
        await this.mutate(async () => {
            const out = await this.client.challenge(screen.challengeName, slot);
            this.state.screen = gameScreen(out.game_id);
            const view = await this.client.game(out.game_id);
            this.applyView(this.state.screen as GameScreen, view);
        });
    }

    async startBotGame(slot: number, coach: boolean): Promise<void> {
        await this.mutate(async () => {
            const view = await this.client.botGame(slot, coach);
            this.state.screen = gameScreen(view.game_id);
            this.applyView(this.state.screen as GameScreen, view);
        });
    }

    // -- game input -----------------------------------------------------------

    private get game(): GameScreen | null {
        return this.state.screen.kind === "game" ? this.state.screen : null;
    }

    pickCharacter(name: string): void {
        const screen = this.game;
        if (screen !== null) {
            screen.composer = tapPick(screen.composer, name);
            this.emit();
        }
    }

    tapCard(side: number, slot: number): void {
        const screen = this.game;
        if (screen === null || screen.view === null || !screen.view.your_turn) {
            return;
        }
        const view = screen.view;
        screen.composer =
            side === view.your_side
                ? tapActor(screen.composer, view, slot)
                : tapTarget(screen.composer, view, slot);
        this.emit();
    }

    pickHeal(slot: number): void {
        const screen = this.game;
        if (screen === null || screen.view === null) {
            return;
        }
        screen.composer = tapHeal(screen.composer, screen.view, slot);
        this.emit();
    }

    async submitPair(): Promise<void> {
        const screen = this.game;
        if (screen === null || screen.composer.picks.length !== 2) {
            return;
        }
        await this.mutate(async () => {
            const view = await this.client.selectPair(screen.gameId, screen.composer.picks);
            this.applyView(screen, view);
        });
    }

    async confirmMove(): Promise<void> {
        const screen = this.game;
        if (screen === null || screen.view === null) {
            return;
        }
        const move = composedMove(screen.view, screen.composer);
        if (move === null) {
            return;
        }
        await this.submitMove(move);
    }

    async skipTurn(): Promise<void> {
        await this.submitMove({ kind: "skip" });
    }

    private async submitMove(move: MovePayload): Promise<void> {
        const screen = this.game;
        if (screen === null || screen.view === null) {
            return;
        }
        const view = screen.view;
        await this.mutate(async () => {
            const out = await this.client.move(screen.gameId, view.next_seq, move);
            this.applyView(screen, out.game);
            // the opponent (or bot) may have replied already; fetch once
            // instead of waiting for the next poll
            const fresh = await this.client.game(screen.gameId);
            this.applyView(screen, fresh);
        });
    }

    async forfeitGame(): Promise<void> {
        const screen = this.game;
        if (screen === null) {
            return;
        }
        await this.mutate(async () => {
            const view = await this.client.forfeit(screen.gameId);
            this.applyView(screen, view);
        });
    }

    async requestHint(): Promise<void> {
        const screen = this.game;
        if (screen === null) {
            return;
        }
        await this.mutate(async () => {
            screen.hint = await this.client.hint(screen.gameId);
        });
    }
}

export type { Screen, UiState };
