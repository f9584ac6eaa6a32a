/* tslint:disable */
/* eslint-disable */

/**
 * Planted-partition graph, Louvain partition and a heatmap grouped by it.
 */
export function community_heatmap(blocks: number, block_size: number, p_in: number, p_out: number, seed: number): string;

/**
 * Out-strength CCDF of a synthetic corpus with Zipf activity.
 */
export function degree_plot(users: number, tweets: number, zipf_s: number, seed: number, hill: boolean): string;

/**
 * Synthetic corpus with one planted ring: heatmap ordered by activity
 * plus the rings found at default thresholds.
 */
export function ring_heatmap(users: number, tweets: number, ring_size: number, per_pair: number, noise: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly community_heatmap: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly degree_plot: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly ring_heatmap: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
