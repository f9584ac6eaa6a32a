/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const community_heatmap: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const degree_plot: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const ring_heatmap: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
