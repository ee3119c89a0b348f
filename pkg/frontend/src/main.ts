// DOM wiring for the viewer page.
//
// The UI thread owns the session and the canvas; decryption runs in the
// worker pool. One render request is in flight at a time: newer requests
// abort the transfer and supersede the decryption of older ones.

import { rotate, zoom } from "./camera.js";
import { toRgba } from "./decrypt.js";
import { parseEncImage } from "./encimage.js";
import type { VolumeRecord } from "./session.js";
import {
    createSession,
    currentRequest,
    loadKeys,
    selectVolume,
    setEmphasizeDensity,
    setMode,
    setTransferNodes,
    updateOrbit,
} from "./session.js";
import type { RenderMode } from "./request.js";
import { addNode, removeNode } from "./tf.js";
import { DecryptPool } from "./workerpool.js";

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

const canvas = el<HTMLCanvasElement>("frame");
const context = canvas.getContext("2d")!;
const status = el<HTMLSpanElement>("status");
const staleBadge = el<HTMLSpanElement>("stale");
const banner = el<HTMLDivElement>("banner");
const progress = el<HTMLProgressElement>("progress");

const session = createSession(
    (document.location.origin.startsWith("http") ? document.location.origin : "http://127.0.0.1:8443"),
);
let pool: DecryptPool | null = null;
let inflight: AbortController | null = null;
let renderVersion = 0;

function markStale(): void {
    staleBadge.hidden = !session.stale;
}

function setStatus(text: string): void {
    status.textContent = text;
}

async function readFile(input: HTMLInputElement): Promise<string> {
    const file = input.files?.[0];
    if (!file) throw new Error("pick a file first");
    return file.text();
}

el<HTMLButtonElement>("load-keys").addEventListener("click", async () => {
    try {
        const pkText = await readFile(el<HTMLInputElement>("pk-file"));
        const skText = await readFile(el<HTMLInputElement>("sk-file"));
        await loadKeys(session, pkText, skText);
        pool?.terminate();
        pool = new DecryptPool(session.secureKey!);
        const bits = session.publicKey!.n.toString(2).length;
        banner.hidden = bits >= 2048;
        banner.textContent = `demo-strength ${bits}-bit key: fine for exploring, not for real data`;
        setStatus(`keys loaded (${bits}-bit modulus)`);
        markStale();
    } catch (error) {
        setStatus(String(error));
    }
});

el<HTMLButtonElement>("refresh-volumes").addEventListener("click", async () => {
    session.serverUrl = el<HTMLInputElement>("server-url").value.replace(/\/+$/, "");
    const response = await fetch(`${session.serverUrl}/volumes`);
    const records = (await response.json()) as VolumeRecord[];
    const select = el<HTMLSelectElement>("volume-select");
    select.innerHTML = "";
    for (const record of records) {
        const option = document.createElement("option");
        option.value = record.id;
        option.textContent = `${record.id.slice(0, 8)} (${record.dims.join("x")}, dim ${record.encoding_dim})`;
        select.appendChild(option);
    }
    select.onchange = async () => {
        const record = records.find((r) => r.id === select.value);
        if (record) {
            await selectVolume(session, record);
            setStatus(session.keyMismatch ? "warning: key does not match this volume" : "volume selected");
            markStale();
        }
    };
    if (records.length) {
        select.value = records[0].id;
        select.onchange(new Event("change"));
    }
});

// camera controls: drag to orbit, wheel to zoom
let dragging = false;
let lastX = 0;
let lastY = 0;
canvas.addEventListener("pointerdown", (event) => {
    dragging = true;
    lastX = event.clientX;
    lastY = event.clientY;
    canvas.setPointerCapture(event.pointerId);
});
canvas.addEventListener("pointermove", (event) => {
    if (!dragging) return;
    updateOrbit(session, rotate(session.orbit, (event.clientX - lastX) * 0.5, (event.clientY - lastY) * 0.5));
    lastX = event.clientX;
    lastY = event.clientY;
    markStale();
});
canvas.addEventListener("pointerup", () => {
    dragging = false;
    void renderNow();
});
canvas.addEventListener("wheel", (event) => {
    event.preventDefault();
    updateOrbit(session, zoom(session.orbit, event.deltaY > 0 ? 1.1 : 0.9));
    markStale();
});

el<HTMLSelectElement>("mode").addEventListener("change", (event) => {
    setMode(session, (event.target as HTMLSelectElement).value as RenderMode);
    markStale();
});

el<HTMLInputElement>("density").addEventListener("input", (event) => {
    setEmphasizeDensity(session, Number((event.target as HTMLInputElement).value));
    el<HTMLSpanElement>("density-value").textContent = session.emphasizeDensity.toFixed(3);
    markStale();
});

function renderNodeList(): void {
    const list = el<HTMLUListElement>("node-list");
    list.innerHTML = "";
    for (const node of session.tfNodes) {
        const item = document.createElement("li");
        item.textContent = `density ${node.density.toFixed(3)} rgb(${node.color.join(", ")}) `;
        const remove = document.createElement("button");
        remove.textContent = "remove";
        remove.onclick = () => {
            setTransferNodes(session, removeNode(session.tfNodes, node.density));
            renderNodeList();
            markStale();
        };
        item.appendChild(remove);
        list.appendChild(item);
    }
}

el<HTMLButtonElement>("add-node").addEventListener("click", () => {
    try {
        const density = Number(el<HTMLInputElement>("node-density").value);
        const hex = el<HTMLInputElement>("node-color").value;
        const color: [number, number, number] = [
            parseInt(hex.slice(1, 3), 16) / 255,
            parseInt(hex.slice(3, 5), 16) / 255,
            parseInt(hex.slice(5, 7), 16) / 255,
        ];
        setTransferNodes(session, addNode(session.tfNodes, { density, color }));
        renderNodeList();
        markStale();
    } catch (error) {
        setStatus(String(error));
    }
});

async function renderNow(): Promise<void> {
    if (!session.secureKey || !session.volume || !pool) {
        setStatus("load keys and select a volume first");
        return;
    }
    inflight?.abort();
    const controller = new AbortController();
    inflight = controller;
    const version = ++renderVersion;
    setStatus("rendering on the server...");
    progress.hidden = false;
    progress.value = 0;
    try {
        const response = await fetch(
            `${session.serverUrl}/volumes/${session.volume.id}/render`,
            {
                method: "POST",
                headers: { "content-type": "application/json" },
                body: JSON.stringify(currentRequest(session)),
                signal: controller.signal,
            },
        );
        if (!response.ok) {
            throw new Error(`render failed: ${response.status} ${await response.text()}`);
        }
        const image = parseEncImage(await response.arrayBuffer());
        setStatus("decrypting...");
        const frame = await pool.decryptImage(image, (fraction) => {
            if (version === renderVersion) progress.value = fraction;
        });
        if (version !== renderVersion) return; // superseded by a newer request
        session.frame = frame;
        session.stale = false;
        canvas.width = frame.width;
        canvas.height = frame.height;
        context.putImageData(new ImageData(toRgba(frame), frame.width, frame.height), 0, 0);
        const pixels = frame.width * frame.height * frame.channels;
        session.noiseSuspected = frame.warnings > pixels / 16;
        setStatus(
            session.noiseSuspected
                ? `decrypted, but ${frame.warnings} noise pixels suggest a wrong key`
                : `decrypted ${frame.width}x${frame.height} (${frame.channels} channel(s))`,
        );
    } catch (error) {
        if (!controller.signal.aborted) setStatus(String(error));
    } finally {
        if (version === renderVersion) {
            progress.hidden = true;
            markStale();
        }
    }
}

el<HTMLButtonElement>("render").addEventListener("click", () => void renderNow());
markStale();
