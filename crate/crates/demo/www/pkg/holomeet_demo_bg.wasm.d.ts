/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_callreport_free: (a: number, b: number) => void;
export const __wbg_cloud_free: (a: number, b: number) => void;
export const __wbg_codecreport_free: (a: number, b: number) => void;
export const __wbg_get_callreport_frames_rendered: (a: number) => bigint;
export const __wbg_get_callreport_max_skew_ms: (a: number) => number;
export const __wbg_get_callreport_mean_delay_ms: (a: number) => number;
export const __wbg_get_callreport_mean_mbps: (a: number) => number;
export const __wbg_get_callreport_p95_delay_ms: (a: number) => number;
export const __wbg_get_callreport_stdv_delay_ms: (a: number) => number;
export const __wbg_get_codecreport_bits_per_voxel: (a: number) => number;
export const __wbg_get_codecreport_bytes: (a: number) => number;
export const __wbg_get_codecreport_color_bytes: (a: number) => number;
export const __wbg_get_codecreport_geometry_bytes: (a: number) => number;
export const __wbg_get_codecreport_input_points: (a: number) => number;
export const __wbg_get_codecreport_max_color_error: (a: number) => number;
export const __wbg_get_codecreport_mbps_at_15fps: (a: number) => number;
export const __wbg_get_codecreport_voxels: (a: number) => number;
export const __wbg_set_callreport_frames_rendered: (a: number, b: bigint) => void;
export const __wbg_set_callreport_max_skew_ms: (a: number, b: number) => void;
export const __wbg_set_callreport_mean_delay_ms: (a: number, b: number) => void;
export const __wbg_set_callreport_mean_mbps: (a: number, b: number) => void;
export const __wbg_set_callreport_p95_delay_ms: (a: number, b: number) => void;
export const __wbg_set_callreport_stdv_delay_ms: (a: number, b: number) => void;
export const __wbg_set_codecreport_bits_per_voxel: (a: number, b: number) => void;
export const __wbg_set_codecreport_bytes: (a: number, b: number) => void;
export const __wbg_set_codecreport_color_bytes: (a: number, b: number) => void;
export const __wbg_set_codecreport_geometry_bytes: (a: number, b: number) => void;
export const __wbg_set_codecreport_input_points: (a: number, b: number) => void;
export const __wbg_set_codecreport_max_color_error: (a: number, b: number) => void;
export const __wbg_set_codecreport_mbps_at_15fps: (a: number, b: number) => void;
export const __wbg_set_codecreport_voxels: (a: number, b: number) => void;
export const capture: (a: number, b: number, c: number) => [number, number, number];
export const cloud_colors: (a: number) => [number, number];
export const cloud_isEmpty: (a: number) => number;
export const cloud_len: (a: number) => number;
export const cloud_positions: (a: number) => [number, number];
export const codec_roundtrip: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const codecreport_decoded: (a: number) => number;
export const delay_scenario: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
