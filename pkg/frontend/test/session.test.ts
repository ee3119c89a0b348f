import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { keyFingerprint, parsePublicKey } from "../src/keys.js";
import { rotate } from "../src/camera.js";
import {
    createSession,
    currentRequest,
    loadKeys,
    requestAndDecrypt,
    selectVolume,
    setEmphasizeDensity,
    setMode,
    updateOrbit,
    type VolumeRecord,
} from "../src/session.js";

const pkText = readFileSync(new URL("./fixtures/demo.pk", import.meta.url), "utf8");
const skText = readFileSync(new URL("./fixtures/demo.sk", import.meta.url), "utf8");
const grayFrame = readFileSync(new URL("./fixtures/frame_gray.eimg", import.meta.url));

async function readySession() {
    const session = createSession("http://server.test");
    await loadKeys(session, pkText, skText);
    const fingerprint = await keyFingerprint(session.publicKey!);
    const volume: VolumeRecord = {
        id: "vol-1",
        key_fingerprint: fingerprint,
        encoding_dim: 1,
        dims: [16, 16, 16],
    };
    await selectVolume(session, volume);
    return session;
}

describe("key loading", () => {
    it("valid pair reaches the ready state", async () => {
        const session = await readySession();
        expect(session.secureKey).not.toBeNull();
        expect(session.keyMismatch).toBe(false);
        expect(session.stale).toBe(true);
    });

    it("mismatched volume fingerprint raises a warning flag", async () => {
        const session = createSession("http://server.test");
        await loadKeys(session, pkText, skText);
        await selectVolume(session, {
            id: "vol-2",
            key_fingerprint: "00".repeat(8),
            encoding_dim: 1,
            dims: [16, 16, 16],
        });
        expect(session.keyMismatch).toBe(true);
    });

    it("rejects malformed documents and mismatched pairs", async () => {
        const session = createSession("http://server.test");
        await expect(loadKeys(session, "{not json", skText)).rejects.toThrow();
        await expect(loadKeys(session, '{"n": "zz", "g": "1"}', skText)).rejects.toThrow(/hex/);
        const foreign = parsePublicKey(pkText).n + 2n;
        await expect(
            loadKeys(session, `{"n": "${foreign.toString(16)}", "g": "${(foreign + 1n).toString(16)}"}`, skText),
        ).rejects.toThrow(/belong/);
    });
});

describe("draft editing marks the frame stale", () => {
    it("camera, mode, and slider changes set the flag", async () => {
        const session = await readySession();
        session.stale = false;
        updateOrbit(session, rotate(session.orbit, 15, 0));
        expect(session.stale).toBe(true);
        session.stale = false;
        setMode(session, "xray_trilinear");
        expect(session.stale).toBe(true);
        session.stale = false;
        setEmphasizeDensity(session, 0.7);
        expect(session.stale).toBe(true);
    });
});

describe("request and decrypt", () => {
    function fetchServing(body: Buffer, capture: { url?: string; body?: string }[]) {
        return async (url: string, init?: RequestInit) => {
            capture.push({ url, body: init?.body as string });
            return new Response(new Uint8Array(body), {
                status: 200,
                headers: { "content-type": "application/octet-stream" },
            });
        };
    }

    it("decrypts the streamed frame and clears staleness", async () => {
        const session = await readySession();
        session.resolution = [64, 64];
        const calls: { url?: string; body?: string }[] = [];
        const frame = await requestAndDecrypt(session, fetchServing(grayFrame, calls));
        expect(frame.width).toBe(64);
        expect(frame.warnings).toBe(0);
        expect(session.stale).toBe(false);
        expect(session.noiseSuspected).toBe(false);
        expect(calls[0].url).toBe("http://server.test/volumes/vol-1/render");
    });

    it("sends no secure-key material in any request", async () => {
        const session = await readySession();
        const calls: { url?: string; body?: string }[] = [];
        await requestAndDecrypt(session, fetchServing(grayFrame, calls));
        const sk = session.secureKey!;
        const secrets = [
            sk.p.toString(16),
            sk.q.toString(16),
            sk.p.toString(10),
            sk.q.toString(10),
        ];
        for (const call of calls) {
            const outbound = `${call.url ?? ""} ${call.body ?? ""}`.toLowerCase();
            for (const secret of secrets) {
                expect(outbound).not.toContain(secret);
            }
            // the body is a plain camera/transfer document
            const doc = JSON.parse(call.body!);
            expect(Object.keys(doc).sort()).toEqual(
                ["camera", "gamma", "mode", "step_size"].sort(),
            );
        }
    });

    it("propagates server errors", async () => {
        const session = await readySession();
        const failing = async () => new Response("nope", { status: 422 });
        await expect(requestAndDecrypt(session, failing)).rejects.toThrow(/422/);
    });

    it("requires keys and a volume", async () => {
        const bare = createSession("http://server.test");
        await expect(requestAndDecrypt(bare, async () => new Response())).rejects.toThrow(/keys/);
    });
});

describe("request document", () => {
    it("reflects the orbit pose", async () => {
        const session = await readySession();
        updateOrbit(session, rotate(session.orbit, 90, 0));
        const doc = currentRequest(session);
        // azimuth 90 puts the eye on the +x side of the target
        expect(doc.camera.eye[0]).toBeGreaterThan(doc.camera.look_at[0] + 1);
        expect(Math.abs(doc.camera.eye[2] - doc.camera.look_at[2])).toBeLessThan(1e-9);
    });
});
