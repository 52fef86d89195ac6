/* tslint:disable */
/* eslint-disable */

/**
 * Relative error trajectories of momentum, VClip, CClip and Huber on a
 * 10-dimensional fixed vector, concatenated (`4 × iters` values).
 */
export function estimate_curves(alpha: number, tau: number, iters: number, seed: bigint): Float64Array;

/**
 * Loss curves of the seven least-squares methods (`7 × (iters + 1)` values,
 * in `ROSTER` order; `NaN` after divergence).
 */
export function least_squares_losses(setting: string, alpha: number, iters: number, seed: bigint): Float64Array;

/**
 * Empirical second moments of the sample median and sample mean for
 * `n ∈ {1, 3, 5, 9, 17, 33}`, as `[median, mean]` pairs.
 */
export function moment_table(alpha: number, trials: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly estimate_curves: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly least_squares_losses: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly moment_table: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
