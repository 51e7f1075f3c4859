/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const detuning_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const noise_spectrum: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const optimum: (a: number) => [number, number];
export const orientation_variance: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const tolerance: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
