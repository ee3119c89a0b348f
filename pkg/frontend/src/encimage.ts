// Parser for the encrypted image container the render server streams back:
// a plaintext header, one i32 exponent per channel, channel-major fixed-width
// big-endian mantissas, and a plaintext u32 per-pixel sample-count grid.

import { bytesToBigInt } from "./bigmath.js";

export interface EncImage {
    width: number;
    height: number;
    channels: number;
    base: number;
    gamma: number;
    modulusBits: number;
    keyFingerprint: string;
    exponents: number[];
    mantissas: bigint[][];
    sampleCounts: Uint32Array;
}

const MAGIC = 0x45494d47; // "EIMG"
const VERSION = 1;

export function parseEncImage(data: ArrayBuffer): EncImage {
    const view = new DataView(data);
    if (data.byteLength < 4 || view.getUint32(0) !== MAGIC) {
        throw new Error("not an encrypted image");
    }
    let offset = 4;
    const version = view.getUint8(offset);
    offset += 1;
    if (version !== VERSION) {
        throw new Error(`unsupported image version ${version}`);
    }
    const width = view.getUint32(offset);
    offset += 4;
    const height = view.getUint32(offset);
    offset += 4;
    const channels = view.getUint8(offset);
    offset += 1;
    const base = view.getUint16(offset);
    offset += 2;
    const gamma = view.getInt16(offset);
    offset += 2;
    const modulusBits = view.getUint32(offset);
    offset += 4;
    let fingerprint = "";
    for (let i = 0; i < 8; i++) {
        fingerprint += view.getUint8(offset + i).toString(16).padStart(2, "0");
    }
    offset += 8;

    const pixels = width * height;
    const cipherBytes = Math.ceil((2 * modulusBits) / 8);
    const expected = offset + channels * 4 + channels * pixels * cipherBytes + pixels * 4;
    if (data.byteLength !== expected) {
        throw new Error("image payload size mismatch");
    }

    const exponents: number[] = [];
    for (let ch = 0; ch < channels; ch++) {
        exponents.push(view.getInt32(offset));
        offset += 4;
    }
    const raw = new Uint8Array(data);
    const mantissas: bigint[][] = [];
    for (let ch = 0; ch < channels; ch++) {
        const grid: bigint[] = new Array(pixels);
        for (let i = 0; i < pixels; i++) {
            grid[i] = bytesToBigInt(raw.subarray(offset, offset + cipherBytes));
            offset += cipherBytes;
        }
        mantissas.push(grid);
    }
    const sampleCounts = new Uint32Array(pixels);
    for (let i = 0; i < pixels; i++) {
        sampleCounts[i] = view.getUint32(offset);
        offset += 4;
    }
    return {
        width,
        height,
        channels,
        base,
        gamma,
        modulusBits,
        keyFingerprint: fingerprint,
        exponents,
        mantissas,
        sampleCounts,
    };
}
