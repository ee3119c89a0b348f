// BigInt number theory used by Paillier decryption.

export function mod(a: bigint, m: bigint): bigint {
    const r = a % m;
    return r < 0n ? r + m : r;
}

export function modPow(base: bigint, exponent: bigint, modulus: bigint): bigint {
    if (modulus === 1n) return 0n;
    if (exponent < 0n) {
        return modPow(modInverse(base, modulus), -exponent, modulus);
    }
    let result = 1n;
    let b = mod(base, modulus);
    let e = exponent;
    while (e > 0n) {
        if (e & 1n) result = (result * b) % modulus;
        b = (b * b) % modulus;
        e >>= 1n;
    }
    return result;
}

/** Multiplicative inverse of a modulo m (extended Euclid); throws if none. */
export function modInverse(a: bigint, m: bigint): bigint {
    let [old_r, r] = [mod(a, m), m];
    let [old_s, s] = [1n, 0n];
    while (r !== 0n) {
        const q = old_r / r;
        [old_r, r] = [r, old_r - q * r];
        [old_s, s] = [s, old_s - q * s];
    }
    if (old_r !== 1n) {
        throw new Error("value is not invertible under the modulus");
    }
    return mod(old_s, m);
}

export function gcd(a: bigint, b: bigint): bigint {
    a = a < 0n ? -a : a;
    b = b < 0n ? -b : b;
    while (b !== 0n) {
        [a, b] = [b, a % b];
    }
    return a;
}

export function bytesToBigInt(bytes: Uint8Array): bigint {
    let hex = "";
    for (const b of bytes) {
        hex += b.toString(16).padStart(2, "0");
    }
    return hex.length ? BigInt("0x" + hex) : 0n;
}

export function bigIntToBytes(value: bigint, length: number): Uint8Array<ArrayBuffer> {
    const out = new Uint8Array(length);
    let v = value;
    for (let i = length - 1; i >= 0; i--) {
        out[i] = Number(v & 0xffn);
        v >>= 8n;
    }
    return out;
}
