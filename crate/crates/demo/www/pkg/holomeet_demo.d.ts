/* tslint:disable */
/* eslint-disable */

export class CallReport {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    frames_rendered: bigint;
    max_skew_ms: number;
    mean_delay_ms: number;
    mean_mbps: number;
    p95_delay_ms: number;
    stdv_delay_ms: number;
}

/**
 * A point cloud as flat arrays: `x0 y0 z0 x1 ...` and `r0 g0 b0 r1 ...`.
 */
export class Cloud {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    colors(): Uint8Array;
    isEmpty(): boolean;
    positions(): Float32Array;
    readonly len: number;
}

export class CodecReport {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    decoded(): Cloud;
    bits_per_voxel: number;
    bytes: number;
    color_bytes: number;
    geometry_bytes: number;
    input_points: number;
    max_color_error: number;
    mbps_at_15fps: number;
    voxels: number;
}

/**
 * Fused multi-camera capture of the subject at `t_ms` into the animation.
 */
export function capture(t_ms: number, target_points: number, cameras: number): Cloud;

/**
 * Encodes and decodes one captured frame with the given octree depth and
 * color quantization.
 */
export function codec_roundtrip(t_ms: number, target_points: number, octree_depth: number, luma_bits: number, chroma_bits: number): CodecReport;

/**
 * A virtual-clock call of `participants` over links with `link_delay_ms`
 * one-way latency each hop. `calibrated` swaps in the fitted stage
 * budgets.
 */
export function delay_scenario(participants: number, duration_s: number, link_delay_ms: number, calibrated: boolean, seed: bigint): CallReport;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_callreport_free: (a: number, b: number) => void;
    readonly __wbg_cloud_free: (a: number, b: number) => void;
    readonly __wbg_codecreport_free: (a: number, b: number) => void;
    readonly __wbg_get_callreport_frames_rendered: (a: number) => bigint;
    readonly __wbg_get_callreport_max_skew_ms: (a: number) => number;
    readonly __wbg_get_callreport_mean_delay_ms: (a: number) => number;
    readonly __wbg_get_callreport_mean_mbps: (a: number) => number;
    readonly __wbg_get_callreport_p95_delay_ms: (a: number) => number;
    readonly __wbg_get_callreport_stdv_delay_ms: (a: number) => number;
    readonly __wbg_get_codecreport_bits_per_voxel: (a: number) => number;
    readonly __wbg_get_codecreport_bytes: (a: number) => number;
    readonly __wbg_get_codecreport_color_bytes: (a: number) => number;
    readonly __wbg_get_codecreport_geometry_bytes: (a: number) => number;
    readonly __wbg_get_codecreport_input_points: (a: number) => number;
    readonly __wbg_get_codecreport_max_color_error: (a: number) => number;
    readonly __wbg_get_codecreport_mbps_at_15fps: (a: number) => number;
    readonly __wbg_get_codecreport_voxels: (a: number) => number;
    readonly __wbg_set_callreport_frames_rendered: (a: number, b: bigint) => void;
    readonly __wbg_set_callreport_max_skew_ms: (a: number, b: number) => void;
    readonly __wbg_set_callreport_mean_delay_ms: (a: number, b: number) => void;
    readonly __wbg_set_callreport_mean_mbps: (a: number, b: number) => void;
    readonly __wbg_set_callreport_p95_delay_ms: (a: number, b: number) => void;
    readonly __wbg_set_callreport_stdv_delay_ms: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_bits_per_voxel: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_bytes: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_color_bytes: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_geometry_bytes: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_input_points: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_max_color_error: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_mbps_at_15fps: (a: number, b: number) => void;
    readonly __wbg_set_codecreport_voxels: (a: number, b: number) => void;
    readonly capture: (a: number, b: number, c: number) => [number, number, number];
    readonly cloud_colors: (a: number) => [number, number];
    readonly cloud_isEmpty: (a: number) => number;
    readonly cloud_len: (a: number) => number;
    readonly cloud_positions: (a: number) => [number, number];
    readonly codec_roundtrip: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly codecreport_decoded: (a: number) => number;
    readonly delay_scenario: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
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
