/**
 * Thin HTTP client for the game service.
 *
 * Every method maps to one endpoint and returns the parsed JSON body.
 * Failures surface as ApiError carrying the server's stable error code,
 * so callers can branch on codes like "StaleSequence" without string
 * matching on messages.
 */

import {
    ConfigInfo,
    Credentials,
    GameView,
    HintView,
    HomeView,
    LeaderboardView,
    MovePayload,
    MoveResponse,
    QueueResponse,
} from "./types.js";

export class ApiError extends Error {
    readonly status: number;
    readonly code: string;

    constructor(status: number, code: string, message: string) {
        super(message);
        this.name = "ApiError";
        this.status = status;
        this.code = code;
    }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** What the app needs from the service; Client is the real thing and
 *  tests substitute fakes. */
export interface ServiceApi {
    token: string | null;
    register(
        username: string,
        password: string,
        consentResearch: boolean,
        consentTerms: boolean,
    ): Promise<Credentials>;
    login(username: string, password: string): Promise<Credentials>;
    home(): Promise<HomeView>;
    queue(slot: number): Promise<QueueResponse>;
    challenge(username: string, slot: number): Promise<{ game_id: string; opponent: string }>;
    botGame(slot: number, coach: boolean, bot?: Record<string, unknown>): Promise<GameView>;
    game(gameId: string): Promise<GameView>;
    selectPair(gameId: string, characters: string[]): Promise<GameView>;
    move(gameId: string, seq: number, move: MovePayload): Promise<MoveResponse>;
    forfeit(gameId: string): Promise<GameView>;
    hint(gameId: string): Promise<HintView>;
    leaderboard(): Promise<LeaderboardView>;
    config(): Promise<ConfigInfo>;
}

export class Client implements ServiceApi {
    token: string | null = null;
    private readonly baseUrl: string;
    private readonly fetchFn: FetchLike;

    constructor(baseUrl: string, fetchFn?: FetchLike) {
        this.baseUrl = baseUrl.replace(/\/+$/, "");
        // wrap the global so it is not called with a bad `this`
        this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
    }

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const headers: Record<string, string> = {};
        if (body !== undefined) {
            headers["content-type"] = "application/json";
        }
        if (this.token !== null) {
            headers["authorization"] = `Bearer ${this.token}`;
        }
        const resp = await this.fetchFn(this.baseUrl + path, {
            method,
            headers,
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        const text = await resp.text();
        let data: unknown = null;
        if (text !== "") {
            try {
                data = JSON.parse(text);
            } catch {
                data = null;
            }
        }
        if (!resp.ok) {
            const env = (data as { error?: { code?: string; message?: string } } | null)?.error;
            throw new ApiError(
                resp.status,
                env?.code ?? "InternalError",
                env?.message ?? `http ${resp.status}`,
            );
        }
        return data as T;
    }

    async register(
        username: string,
        password: string,
        consentResearch: boolean,
        consentTerms: boolean,
    ): Promise<Credentials> {
        const creds = await this.request<Credentials>("POST", "/v1/register", {
            username,
            password,
            consent_research: consentResearch,
            consent_terms: consentTerms,
        });
        this.token = creds.token;
        return creds;
    }

    async login(username: string, password: string): Promise<Credentials> {
        const creds = await this.request<Credentials>("POST", "/v1/login", {
            username,
            password,
        });
        this.token = creds.token;
        return creds;
    }

    home(): Promise<HomeView> {
        return this.request("GET", "/v1/home");
    }

    queue(slot: number): Promise<QueueResponse> {
        return this.request("POST", "/v1/queue", { slot });
    }

    challenge(username: string, slot: number): Promise<{ game_id: string; opponent: string }> {
        return this.request("POST", "/v1/challenge", { username, slot });
    }

    botGame(slot: number, coach: boolean, bot?: Record<string, unknown>): Promise<GameView> {
        return this.request("POST", "/v1/games/bot", { slot, coach, bot });
    }

    game(gameId: string): Promise<GameView> {
        return this.request("GET", `/v1/games/${gameId}`);
    }

    selectPair(gameId: string, characters: string[]): Promise<GameView> {
        return this.request("POST", `/v1/games/${gameId}/pair`, { characters });
    }

    move(gameId: string, seq: number, move: MovePayload): Promise<MoveResponse> {
        return this.request("POST", `/v1/games/${gameId}/moves`, { seq, move });
    }

    forfeit(gameId: string): Promise<GameView> {
        return this.request("POST", `/v1/games/${gameId}/forfeit`);
    }

    hint(gameId: string): Promise<HintView> {
        return this.request("GET", `/v1/games/${gameId}/hint`);
    }

    record(gameId: string): Promise<Record<string, unknown>> {
        return this.request("GET", `/v1/games/${gameId}/record`);
    }

    leaderboard(): Promise<LeaderboardView> {
        return this.request("GET", "/v1/leaderboard");
    }

    profile(username: string): Promise<Record<string, unknown>> {
        return this.request("GET", `/v1/profile/${username}`);
    }

    config(): Promise<ConfigInfo> {
        return this.request("GET", "/v1/config");
    }

    health(): Promise<Record<string, unknown>> {
        return this.request("GET", "/v1/health");
    }
}
