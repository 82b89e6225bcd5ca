/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const bloch_pair: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const copy_channel_heatmap: (a: number, b: number, c: number) => [number, number, number, number];
export const copy_channel_verdicts: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const lemma1_curve: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
