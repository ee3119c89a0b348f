// Viewer session state: keys, selected volume, the render-request draft,
// and the last decrypted frame.
//
// The secure key lives only inside this object for the lifetime of the
// browser session; requests to the server carry nothing but plaintext
// camera and transfer-function parameters.

import type { OrbitState } from "./camera.js";
import { orbitForVolume, toCameraJson } from "./camera.js";
import type { DecryptedFrame } from "./decrypt.js";
import { decryptImage } from "./decrypt.js";
import { parseEncImage } from "./encimage.js";
import type { PublicKey, SecureKey } from "./keys.js";
import { keyFingerprint, parsePublicKey, parseSecureKey } from "./keys.js";
import type { RenderMode, RenderRequestJson } from "./request.js";
import { buildRenderRequest } from "./request.js";
import type { TransferNode } from "./tf.js";
import { clampDensity } from "./tf.js";

export interface VolumeRecord {
    id: string;
    key_fingerprint: string;
    encoding_dim: number;
    dims: [number, number, number];
}

export interface ViewerSession {
    serverUrl: string;
    publicKey: PublicKey | null;
    secureKey: SecureKey | null;
    volume: VolumeRecord | null;
    orbit: OrbitState;
    mode: RenderMode;
    emphasizeDensity: number;
    tfNodes: TransferNode[];
    resolution: [number, number];
    fov: number;
    stepSize: number;
    gamma: number;
    frame: DecryptedFrame | null;
    /** True whenever the draft changed after the displayed frame was made. */
    stale: boolean;
    /** Set when the loaded key does not match the selected volume. */
    keyMismatch: boolean;
    /** Set when the last frame decrypted with dead-zone noise (wrong key?). */
    noiseSuspected: boolean;
}

export function createSession(serverUrl: string): ViewerSession {
    return {
        serverUrl,
        publicKey: null,
        secureKey: null,
        volume: null,
        orbit: orbitForVolume([16, 16, 16]),
        mode: "xray_nn",
        emphasizeDensity: 0.5,
        tfNodes: [],
        resolution: [64, 64],
        fov: 45,
        stepSize: 0.5,
        gamma: 6,
        frame: null,
        stale: true,
        keyMismatch: false,
        noiseSuspected: false,
    };
}

/** Parse a .pk/.sk document pair into the session. */
export async function loadKeys(
    session: ViewerSession,
    publicKeyText: string,
    secureKeyText: string,
): Promise<void> {
    const pk = parsePublicKey(publicKeyText);
    const sk = parseSecureKey(secureKeyText);
    if (sk.publicKey.n !== pk.n) {
        throw new Error("secure key does not belong to the public key");
    }
    session.publicKey = pk;
    session.secureKey = sk;
    session.stale = true;
    await refreshKeyMismatch(session);
}

export async function selectVolume(session: ViewerSession, volume: VolumeRecord): Promise<void> {
    session.volume = volume;
    session.orbit = orbitForVolume(volume.dims);
    session.stale = true;
    await refreshKeyMismatch(session);
}

async function refreshKeyMismatch(session: ViewerSession): Promise<void> {
    if (session.publicKey && session.volume) {
        const fingerprint = await keyFingerprint(session.publicKey);
        session.keyMismatch = fingerprint !== session.volume.key_fingerprint;
    } else {
        session.keyMismatch = false;
    }
}

export function updateOrbit(session: ViewerSession, orbit: OrbitState): void {
    session.orbit = orbit;
    session.stale = true;
}

export function setMode(session: ViewerSession, mode: RenderMode): void {
    session.mode = mode;
    session.stale = true;
}

export function setEmphasizeDensity(session: ViewerSession, value: number): void {
    session.emphasizeDensity = clampDensity(value);
    session.stale = true;
}

export function setTransferNodes(session: ViewerSession, nodes: TransferNode[]): void {
    session.tfNodes = nodes;
    session.stale = true;
}

export function currentRequest(session: ViewerSession): RenderRequestJson {
    return buildRenderRequest({
        camera: toCameraJson(session.orbit, session.fov, session.resolution),
        mode: session.mode,
        emphasizeDensity: session.emphasizeDensity,
        tfNodes: session.tfNodes,
        stepSize: session.stepSize,
        gamma: session.gamma,
    });
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** POST the current request, decrypt the response, update the session.

    The render happens on ciphertexts server-side; the only secret material,
    the secure key, is used strictly locally after the response arrives. */
export async function requestAndDecrypt(
    session: ViewerSession,
    fetchImpl: FetchLike = fetch,
    decryptImpl: typeof decryptImage = decryptImage,
): Promise<DecryptedFrame> {
    if (!session.secureKey || !session.volume) {
        throw new Error("load keys and select a volume first");
    }
    const response = await fetchImpl(
        `${session.serverUrl}/volumes/${session.volume.id}/render`,
        {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(currentRequest(session)),
        },
    );
    if (!response.ok) {
        throw new Error(`render failed: ${response.status}`);
    }
    const image = parseEncImage(await response.arrayBuffer());
    const frame = decryptImpl(image, session.secureKey);
    session.frame = frame;
    session.stale = false;
    const pixels = frame.width * frame.height * frame.channels;
    session.noiseSuspected = frame.warnings > pixels / 16;
    return frame;
}
