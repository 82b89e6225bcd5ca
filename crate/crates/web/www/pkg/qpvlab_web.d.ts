/* tslint:disable */
/* eslint-disable */

/**
 * JSON summary of two projectors given by Bloch vectors.
 */
export function bloch_pair(p: Float64Array, l: Float64Array): string;

export function copy_channel_heatmap(basis: Float64Array, rows: number): Float64Array;

/**
 * JSON verdicts of all three criteria for the copy channel in `basis`.
 */
export function copy_channel_verdicts(basis: Float64Array, test: Float64Array): string;

export function lemma1_curve(samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bloch_pair: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly copy_channel_heatmap: (a: number, b: number, c: number) => [number, number, number, number];
    readonly copy_channel_verdicts: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly lemma1_curve: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
