/* tslint:disable */
/* eslint-disable */

/**
 * Full-batch Adam at `alpha = 1 − a·eta`, `beta = 1 − b·eta` on a small MLP.
 * Returns `{"losses": [...], "label": "...", "spikes": [...]}`.
 */
export function adam_regime(a: number, b: number, eta: number, n_iters: number, seed: number): string;

/**
 * Iterates of RMSprop on `f(x) = x²/2`.
 */
export function rmsprop_cycle(alpha: number, eta: number, x0: number, n_iters: number): Float64Array;

/**
 * signGD flow on a random quadratic next to the PL bound, sampled every `h`
 * up to 90% of the bound's hitting time (near the minimum the flow chatters).
 * Returns `{"t": [...], "f": [...], "bound": [...], "hitting_time": T}`.
 */
export function signgd_vs_bound(dim: number, seed: number, h: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly adam_regime: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly rmsprop_cycle: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly signgd_vs_bound: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
