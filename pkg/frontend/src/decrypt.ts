// Per-pixel decryption and tone mapping.
//
// The arithmetic mirrors the command-line client exactly: signed decode
// against the positive/negative thirds of the field, dead-zone residues
// become labeled noise pixels, and the 8-bit tone map is evaluated in exact
// integer arithmetic so frames are byte-identical across implementations.

import type { EncImage } from "./encimage.js";
import type { SecureKey } from "./keys.js";
import { decrypt, maxPlain } from "./paillier.js";

export interface DecryptedFrame {
    width: number;
    height: number;
    channels: number;
    /** Tone-mapped 8-bit values, one grid per channel, row-major. */
    levels: Uint8Array[];
    /** Pixels whose mantissa fell in the overflow dead zone (wrong key or tampering). */
    warnings: number;
}

/** Tone-map value = mantissa * base^exponent from [0, 1] onto [0, 255].

    Computed as trunc(value * 255 + 1/2) in exact integer arithmetic, then
    clamped, matching the trusted client bit for bit. */
export function toneLevel(mantissa: bigint, exponent: number, base: number): number {
    const b = BigInt(base);
    let num: bigint;
    let den: bigint;
    if (exponent <= 0) {
        const scale = b ** BigInt(-exponent);
        num = 510n * mantissa + scale;
        den = 2n * scale;
    } else {
        num = 510n * mantissa * b ** BigInt(exponent) + 1n;
        den = 2n;
    }
    const level = num / den; // BigInt division truncates toward zero
    if (level < 0n) return 0;
    if (level > 255n) return 255;
    return Number(level);
}

export interface RangeResult {
    levels: Uint8Array;
    warnings: number;
}

/** Decrypt and tone-map pixels [start, end) of one channel. */
export function decryptRange(
    mantissas: bigint[],
    exponent: number,
    base: number,
    sk: SecureKey,
    start: number,
    end: number,
): RangeResult {
    const n = sk.publicKey.n;
    const positiveLimit = maxPlain(n);
    const negativeLimit = n - positiveLimit;
    const levels = new Uint8Array(end - start);
    let warnings = 0;
    for (let i = start; i < end; i++) {
        let residue: bigint;
        try {
            residue = decrypt(mantissas[i], sk);
        } catch {
            // not a ciphertext under this key at all: wrong key, noise pixel
            warnings += 1;
            levels[i - start] = Number(mantissas[i] % 256n);
            continue;
        }
        if (residue > positiveLimit && residue < negativeLimit) {
            warnings += 1;
            levels[i - start] = Number(residue % 256n);
        } else {
            const signed = residue > positiveLimit ? residue - n : residue;
            levels[i - start] = toneLevel(signed, exponent, base);
        }
    }
    return { levels, warnings };
}

/** Decrypt a whole frame synchronously (tests and small images). */
export function decryptImage(image: EncImage, sk: SecureKey): DecryptedFrame {
    const pixels = image.width * image.height;
    const levels: Uint8Array[] = [];
    let warnings = 0;
    for (let ch = 0; ch < image.channels; ch++) {
        const result = decryptRange(
            image.mantissas[ch],
            image.exponents[ch],
            image.base,
            sk,
            0,
            pixels,
        );
        levels.push(result.levels);
        warnings += result.warnings;
    }
    return { width: image.width, height: image.height, channels: image.channels, levels, warnings };
}

/** Interleave channel grids into RGBA bytes for a canvas ImageData. */
export function toRgba(frame: DecryptedFrame): Uint8ClampedArray<ArrayBuffer> {
    const pixels = frame.width * frame.height;
    const rgba = new Uint8ClampedArray(pixels * 4);
    for (let i = 0; i < pixels; i++) {
        const r = frame.levels[0][i];
        const g = frame.channels === 3 ? frame.levels[1][i] : r;
        const b = frame.channels === 3 ? frame.levels[2][i] : r;
        rgba[i * 4] = r;
        rgba[i * 4 + 1] = g;
        rgba[i * 4 + 2] = b;
        rgba[i * 4 + 3] = 255;
    }
    return rgba;
}
