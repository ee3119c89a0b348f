// Paillier decryption on the CRT residues of the two secret primes.
// Identical math to the trusted command-line client, so decrypted frames
// are byte-for-byte comparable across implementations.

import { gcd, mod, modPow } from "./bigmath.js";
import type { SecureKey } from "./keys.js";

function crtL(x: bigint, y: bigint): bigint {
    return (x - 1n) / y;
}

/** Decrypt a ciphertext to its residue in [0, n). */
export function decrypt(ciphertext: bigint, sk: SecureKey): bigint {
    const n = sk.publicKey.n;
    if (ciphertext < 0n || ciphertext >= sk.publicKey.nSquared) {
        throw new Error("ciphertext out of range");
    }
    if (gcd(ciphertext, n) !== 1n) {
        throw new Error("ciphertext shares a factor with the modulus");
    }
    const { p, q } = sk;
    const mp = mod(crtL(modPow(ciphertext, p - 1n, p * p), p) * sk.hp, p);
    const mq = mod(crtL(modPow(ciphertext, q - 1n, q * q), q) * sk.hq, q);
    return mp + mod((mq - mp) * sk.pInvModQ, q) * p;
}

export function maxPlain(n: bigint): bigint {
    return (n - 1n) / 3n;
}
