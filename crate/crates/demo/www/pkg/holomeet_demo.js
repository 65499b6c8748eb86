/* @ts-self-types="./holomeet_demo.d.ts" */

export class CallReport {
    static __wrap(ptr) {
        const obj = Object.create(CallReport.prototype);
        obj.__wbg_ptr = ptr;
        CallReportFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        CallReportFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_callreport_free(ptr, 0);
    }
    /**
     * @returns {bigint}
     */
    get frames_rendered() {
        const ret = wasm.__wbg_get_callreport_frames_rendered(this.__wbg_ptr);
        return BigInt.asUintN(64, ret);
    }
    /**
     * @returns {number}
     */
    get max_skew_ms() {
        const ret = wasm.__wbg_get_callreport_max_skew_ms(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mean_delay_ms() {
        const ret = wasm.__wbg_get_callreport_mean_delay_ms(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mean_mbps() {
        const ret = wasm.__wbg_get_callreport_mean_mbps(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get p95_delay_ms() {
        const ret = wasm.__wbg_get_callreport_p95_delay_ms(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get stdv_delay_ms() {
        const ret = wasm.__wbg_get_callreport_stdv_delay_ms(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {bigint} arg0
     */
    set frames_rendered(arg0) {
        wasm.__wbg_set_callreport_frames_rendered(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set max_skew_ms(arg0) {
        wasm.__wbg_set_callreport_max_skew_ms(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mean_delay_ms(arg0) {
        wasm.__wbg_set_callreport_mean_delay_ms(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mean_mbps(arg0) {
        wasm.__wbg_set_callreport_mean_mbps(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set p95_delay_ms(arg0) {
        wasm.__wbg_set_callreport_p95_delay_ms(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set stdv_delay_ms(arg0) {
        wasm.__wbg_set_callreport_stdv_delay_ms(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) CallReport.prototype[Symbol.dispose] = CallReport.prototype.free;

/**
 * A point cloud as flat arrays: `x0 y0 z0 x1 ...` and `r0 g0 b0 r1 ...`.
 */
export class Cloud {
    static __wrap(ptr) {
        const obj = Object.create(Cloud.prototype);
        obj.__wbg_ptr = ptr;
        CloudFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        CloudFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_cloud_free(ptr, 0);
    }
    /**
     * @returns {Uint8Array}
     */
    colors() {
        const ret = wasm.cloud_colors(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * @returns {boolean}
     */
    isEmpty() {
        const ret = wasm.cloud_isEmpty(this.__wbg_ptr);
        return ret !== 0;
    }
    /**
     * @returns {number}
     */
    get len() {
        const ret = wasm.cloud_len(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {Float32Array}
     */
    positions() {
        const ret = wasm.cloud_positions(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
}
if (Symbol.dispose) Cloud.prototype[Symbol.dispose] = Cloud.prototype.free;

export class CodecReport {
    static __wrap(ptr) {
        const obj = Object.create(CodecReport.prototype);
        obj.__wbg_ptr = ptr;
        CodecReportFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        CodecReportFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_codecreport_free(ptr, 0);
    }
    /**
     * @returns {Cloud}
     */
    decoded() {
        const ret = wasm.codecreport_decoded(this.__wbg_ptr);
        return Cloud.__wrap(ret);
    }
    /**
     * @returns {number}
     */
    get bits_per_voxel() {
        const ret = wasm.__wbg_get_codecreport_bits_per_voxel(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get bytes() {
        const ret = wasm.__wbg_get_codecreport_bytes(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get color_bytes() {
        const ret = wasm.__wbg_get_codecreport_color_bytes(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get geometry_bytes() {
        const ret = wasm.__wbg_get_codecreport_geometry_bytes(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get input_points() {
        const ret = wasm.__wbg_get_codecreport_input_points(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get max_color_error() {
        const ret = wasm.__wbg_get_codecreport_max_color_error(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mbps_at_15fps() {
        const ret = wasm.__wbg_get_codecreport_mbps_at_15fps(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get voxels() {
        const ret = wasm.__wbg_get_codecreport_voxels(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @param {number} arg0
     */
    set bits_per_voxel(arg0) {
        wasm.__wbg_set_codecreport_bits_per_voxel(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set bytes(arg0) {
        wasm.__wbg_set_codecreport_bytes(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set color_bytes(arg0) {
        wasm.__wbg_set_codecreport_color_bytes(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set geometry_bytes(arg0) {
        wasm.__wbg_set_codecreport_geometry_bytes(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set input_points(arg0) {
        wasm.__wbg_set_codecreport_input_points(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set max_color_error(arg0) {
        wasm.__wbg_set_codecreport_max_color_error(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mbps_at_15fps(arg0) {
        wasm.__wbg_set_codecreport_mbps_at_15fps(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set voxels(arg0) {
        wasm.__wbg_set_codecreport_voxels(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) CodecReport.prototype[Symbol.dispose] = CodecReport.prototype.free;

/**
 * Fused multi-camera capture of the subject at `t_ms` into the animation.
 * @param {number} t_ms
 * @param {number} target_points
 * @param {number} cameras
 * @returns {Cloud}
 */
export function capture(t_ms, target_points, cameras) {
    const ret = wasm.capture(t_ms, target_points, cameras);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Cloud.__wrap(ret[0]);
}

/**
 * Encodes and decodes one captured frame with the given octree depth and
 * color quantization.
 * @param {number} t_ms
 * @param {number} target_points
 * @param {number} octree_depth
 * @param {number} luma_bits
 * @param {number} chroma_bits
 * @returns {CodecReport}
 */
export function codec_roundtrip(t_ms, target_points, octree_depth, luma_bits, chroma_bits) {
    const ret = wasm.codec_roundtrip(t_ms, target_points, octree_depth, luma_bits, chroma_bits);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return CodecReport.__wrap(ret[0]);
}

/**
 * A virtual-clock call of `participants` over links with `link_delay_ms`
 * one-way latency each hop. `calibrated` swaps in the fitted stage
 * budgets.
 * @param {number} participants
 * @param {number} duration_s
 * @param {number} link_delay_ms
 * @param {boolean} calibrated
 * @param {bigint} seed
 * @returns {CallReport}
 */
export function delay_scenario(participants, duration_s, link_delay_ms, calibrated, seed) {
    const ret = wasm.delay_scenario(participants, duration_s, link_delay_ms, calibrated, seed);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return CallReport.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./holomeet_demo_bg.js": import0,
    };
}

const CallReportFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_callreport_free(ptr, 1));
const CloudFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_cloud_free(ptr, 1));
const CodecReportFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_codecreport_free(ptr, 1));

function getArrayF32FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat32ArrayMemory0().subarray(ptr / 4, ptr / 4 + len);
}

function getArrayU8FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint8ArrayMemory0().subarray(ptr / 1, ptr / 1 + len);
}

let cachedFloat32ArrayMemory0 = null;
function getFloat32ArrayMemory0() {
    if (cachedFloat32ArrayMemory0 === null || cachedFloat32ArrayMemory0.byteLength === 0) {
        cachedFloat32ArrayMemory0 = new Float32Array(wasm.memory.buffer);
    }
    return cachedFloat32ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat32ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('holomeet_demo_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
