/**
 * Payload shapes for the game service's v1 JSON API.
 *
 * These mirror what the server sends; the client renders them and never
 * derives game outcomes on its own.
 */

export type AttackPayload = {
    kind: "attack";
    actor_slot: number;
    targets: number[];
    heal_slot?: number;
};

export type MovePayload =
    | AttackPayload
    | { kind: "skip" }
    | { kind: "forfeit" };

export interface Credentials {
    username: string;
    token: string;
}

export interface CardView {
    id: string;
    hp: number;
    stunned: boolean;
}

export interface StateView {
    sides: CardView[][];
    active_side: number;
    chain: number | null;
    turn_count: number;
    forfeited: number | null;
}

export interface RollView {
    target_slot: number;
    hit: boolean;
    damage: number;
}

export interface MoveEvents {
    rolls: RollView[];
    heal: number[] | null;
    stun_slot: number | null;
    execute: boolean;
    rage: boolean;
    graze: boolean;
}

export interface MoveLogEntry {
    index: number;
    side: number;
    actor: string | null;
    move: MovePayload;
    hits: boolean[];
    events: MoveEvents;
    at: number;
    cost: number | null;
}

export interface BotInfo {
    side: number;
    kind: string;
    coach: boolean;
}

export type GamePhase = "selecting" | "playing" | "finished";

export interface GameView {
    game_id: string;
    phase: GamePhase;
    season_id: string;
    config_hash: string;
    origin: string;
    users: string[];
    your_side: number;
    bot: BotInfo | null;
    pairs: (string[] | null)[];
    opponent_chosen: boolean;
    first_mover: number | null;
    state: StateView | null;
    next_seq: number;
    your_turn: boolean;
    legal_moves: MovePayload[];
    moves: MoveLogEntry[];
    winner: number | null;
    end_reason: string | null;
    created_at: number;
    ended_at: number | null;
}

export interface MoveResponse {
    seq: number;
    hits: boolean[];
    cost: number | null;
    game: GameView;
}

export interface HomeSlot {
    slot: number;
    empty: boolean;
    queued?: boolean;
    game_id?: string;
    phase?: GamePhase;
    opponent?: string;
    your_turn?: boolean;
    needs_pair?: boolean;
}

export interface HomeView {
    username: string;
    season_id: string;
    skill: number;
    games_played: number;
    games_won: number;
    medals: string[];
    slots: HomeSlot[];
}

export interface QueueResponse {
    queued: boolean;
    slot: number;
    game_id: string | null;
    queue_length: number;
}

export interface LeaderboardRow {
    rank: number;
    username: string;
    skill: number;
    games_played: number;
    games_won: number;
    medals: number;
}

export interface LeaderboardView {
    season_id: string;
    rows: LeaderboardRow[];
}

export interface ConfigInfo {
    season_id: string;
    config_hash: string;
    config: Record<string, number | string>;
    move_cap: number;
    characters: string[];
}

export interface HintView {
    move: MovePayload;
    value: number;
    q_values: { move: MovePayload; q: number }[];
}
