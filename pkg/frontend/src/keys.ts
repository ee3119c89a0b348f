// Key documents: JSON with lowercase-hex big-endian integer fields.
// Public keys carry {n, g}, secure keys carry {p, q}.

import { bigIntToBytes, modInverse, modPow } from "./bigmath.js";

export interface PublicKey {
    n: bigint;
    g: bigint;
    nSquared: bigint;
}

/** Secure key with the CRT constants precomputed once at load time. */
export interface SecureKey {
    p: bigint;
    q: bigint;
    hp: bigint;
    hq: bigint;
    pInvModQ: bigint;
    publicKey: PublicKey;
}

function parseHexField(doc: Record<string, unknown>, field: string): bigint {
    const raw = doc[field];
    if (typeof raw !== "string" || !/^[0-9a-f]+$/.test(raw)) {
        throw new Error(`key document field '${field}' is not lowercase hex`);
    }
    return BigInt("0x" + raw);
}

export function parsePublicKey(text: string): PublicKey {
    const doc = JSON.parse(text) as Record<string, unknown>;
    const n = parseHexField(doc, "n");
    const g = parseHexField(doc, "g");
    if (g !== n + 1n) {
        throw new Error("unsupported generator: expected g = n + 1");
    }
    return { n, g, nSquared: n * n };
}

function crtL(x: bigint, y: bigint): bigint {
    return (x - 1n) / y;
}

function crtH(prime: bigint, g: bigint): bigint {
    return modInverse(crtL(modPow(g, prime - 1n, prime * prime), prime), prime);
}

export function parseSecureKey(text: string): SecureKey {
    const doc = JSON.parse(text) as Record<string, unknown>;
    const p = parseHexField(doc, "p");
    const q = parseHexField(doc, "q");
    const n = p * q;
    const g = n + 1n;
    return {
        p,
        q,
        hp: crtH(p, g),
        hq: crtH(q, g),
        pInvModQ: modInverse(p, q),
        publicKey: { n, g, nSquared: n * n },
    };
}

/** First 8 bytes of SHA-256 over the big-endian modulus, as lowercase hex. */
export async function keyFingerprint(pk: PublicKey): Promise<string> {
    const byteLength = Math.ceil(pk.n.toString(2).length / 8);
    const digest = await crypto.subtle.digest("SHA-256", bigIntToBytes(pk.n, byteLength));
    return Array.from(new Uint8Array(digest).slice(0, 8))
        .map((b) => b.toString(16).padStart(2, "0"))
        .join("");
}
