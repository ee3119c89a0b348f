// Decryption worker: receives a secure key once, then decrypts pixel ranges.
// BigInt values survive structured cloning, so ciphertexts travel as-is.

import { decryptRange } from "./decrypt.js";
import type { SecureKey } from "./keys.js";
import { modInverse, modPow } from "./bigmath.js";

interface InitMessage {
    type: "init";
    p: bigint;
    q: bigint;
}

interface DecryptMessage {
    type: "decrypt";
    id: number;
    mantissas: bigint[];
    exponent: number;
    base: number;
    start: number;
    end: number;
}

let key: SecureKey | null = null;

function crtL(x: bigint, y: bigint): bigint {
    return (x - 1n) / y;
}

function buildKey(p: bigint, q: bigint): SecureKey {
    const n = p * q;
    const g = n + 1n;
    return {
        p,
        q,
        hp: modInverse(crtL(modPow(g, p - 1n, p * p), p), p),
        hq: modInverse(crtL(modPow(g, q - 1n, q * q), q), q),
        pInvModQ: modInverse(p, q),
        publicKey: { n, g, nSquared: n * n },
    };
}

self.onmessage = (event: MessageEvent<InitMessage | DecryptMessage>) => {
    const message = event.data;
    if (message.type === "init") {
        key = buildKey(message.p, message.q);
        return;
    }
    if (!key) {
        (self as unknown as Worker).postMessage({ id: message.id, error: "worker has no key" });
        return;
    }
    try {
        const result = decryptRange(
            message.mantissas,
            message.exponent,
            message.base,
            key,
            message.start,
            message.end,
        );
        (self as unknown as Worker).postMessage(
            { id: message.id, levels: result.levels, warnings: result.warnings },
            { transfer: [result.levels.buffer] },
        );
    } catch (error) {
        (self as unknown as Worker).postMessage({ id: message.id, error: String(error) });
    }
};
