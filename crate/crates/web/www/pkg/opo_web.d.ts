/* tslint:disable */
/* eslint-disable */

/**
 * Rows of `(beta_rad, epsilon, exact, approx)`: a tilt sweep up to
 * `beta_max_deg` followed by an ellipticity sweep up to `epsilon_max`,
 * for the standard near-confocal cavity with transmissivity `t`.
 */
export function detuning_curves(beta_max_deg: number, epsilon_max: number, t: number, steps: number): Float64Array;

/**
 * Rows of `(omega_tilde, V_matrix, V_closed)` on `(0, omega_max]`.
 */
export function noise_spectrum(delta_tilde: number, phi: number, omega_max: number, steps: number): Float64Array;

/**
 * `[omega_opt_tilde, V_opt]` of the phi = pi/2 quadrature.
 */
export function optimum(delta_tilde: number): Float64Array;

/**
 * Rows of `(t, var_theta, stderr, v_theta_inf_ref)` from the reduced
 * orientation system.
 */
export function orientation_variance(rho2: number, delta_tilde: number, n_traj: number, t_end: number, seed: bigint): Float64Array;

/**
 * `[delta_tilde_max, beta_max_rad, epsilon_max]` for a target optimum noise.
 */
export function tolerance(target_v: number, t: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly detuning_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly noise_spectrum: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly optimum: (a: number) => [number, number];
    readonly orientation_variance: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly tolerance: (a: number, b: number) => [number, number, number, number];
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
