// Pool of decryption workers. Pixel ranges are dispatched round-robin and
// reassembled in order; a progress callback drives the UI progress bar,
// which matters because large keys make decryption take minutes.

import type { DecryptedFrame } from "./decrypt.js";
import type { EncImage } from "./encimage.js";
import type { SecureKey } from "./keys.js";

interface PendingChunk {
    resolve: (value: { levels: Uint8Array; warnings: number }) => void;
    reject: (reason: Error) => void;
}

export class DecryptPool {
    private workers: Worker[] = [];
    private pending = new Map<number, PendingChunk>();
    private nextId = 0;

    constructor(sk: SecureKey, size = Math.max(1, navigator.hardwareConcurrency - 1)) {
        for (let i = 0; i < size; i++) {
            const worker = new Worker(new URL("./worker.js", import.meta.url), { type: "module" });
            worker.onmessage = (event) => this.onMessage(event.data);
            worker.postMessage({ type: "init", p: sk.p, q: sk.q });
            this.workers.push(worker);
        }
    }

    private onMessage(data: { id: number; levels?: Uint8Array; warnings?: number; error?: string }) {
        const chunk = this.pending.get(data.id);
        if (!chunk) return;
        this.pending.delete(data.id);
        if (data.error !== undefined || data.levels === undefined) {
            chunk.reject(new Error(data.error ?? "worker failed"));
        } else {
            chunk.resolve({ levels: data.levels, warnings: data.warnings ?? 0 });
        }
    }

    private submit(
        worker: Worker,
        mantissas: bigint[],
        exponent: number,
        base: number,
        start: number,
        end: number,
    ): Promise<{ levels: Uint8Array; warnings: number }> {
        const id = this.nextId++;
        return new Promise((resolve, reject) => {
            this.pending.set(id, { resolve, reject });
            worker.postMessage({ type: "decrypt", id, mantissas, exponent, base, start, end });
        });
    }

    /** Decrypt a full frame, reporting fraction-complete after every chunk. */
    async decryptImage(
        image: EncImage,
        onProgress?: (fraction: number) => void,
    ): Promise<DecryptedFrame> {
        const pixels = image.width * image.height;
        const chunkSize = Math.max(64, Math.ceil(pixels / (this.workers.length * 4)));
        const jobs: Promise<void>[] = [];
        const levels = Array.from({ length: image.channels }, () => new Uint8Array(pixels));
        let warnings = 0;
        let done = 0;
        let total = 0;
        let next = 0;
        for (let ch = 0; ch < image.channels; ch++) {
            for (let start = 0; start < pixels; start += chunkSize) {
                const end = Math.min(start + chunkSize, pixels);
                const worker = this.workers[next++ % this.workers.length];
                total += 1;
                const channel = ch;
                jobs.push(
                    this.submit(
                        worker,
                        image.mantissas[ch].slice(start, end),
                        image.exponents[ch],
                        image.base,
                        0,
                        end - start,
                    ).then((result) => {
                        levels[channel].set(result.levels, start);
                        warnings += result.warnings;
                        done += 1;
                        onProgress?.(done / total);
                    }),
                );
            }
        }
        await Promise.all(jobs);
        return {
            width: image.width,
            height: image.height,
            channels: image.channels,
            levels,
            warnings,
        };
    }

    terminate(): void {
        for (const worker of this.workers) {
            worker.terminate();
        }
        this.workers = [];
    }
}
