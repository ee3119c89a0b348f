// Render-request JSON exactly as the server's control plane expects it.

import type { CameraJson } from "./camera.js";
import type { TransferNode } from "./tf.js";

export type RenderMode = "xray_nn" | "xray_trilinear" | "emphasize" | "color_tf";

export interface RenderRequestJson {
    camera: CameraJson;
    mode: RenderMode;
    emphasize_density?: number;
    tf_nodes?: TransferNode[];
    step_size: number;
    gamma: number;
}

export function buildRenderRequest(options: {
    camera: CameraJson;
    mode: RenderMode;
    emphasizeDensity?: number;
    tfNodes?: TransferNode[];
    stepSize?: number;
    gamma?: number;
}): RenderRequestJson {
    const doc: RenderRequestJson = {
        camera: options.camera,
        mode: options.mode,
        step_size: options.stepSize ?? 0.5,
        gamma: options.gamma ?? 6,
    };
    if (options.mode === "emphasize") {
        if (options.emphasizeDensity === undefined) {
            throw new Error("emphasize mode needs a density");
        }
        doc.emphasize_density = options.emphasizeDensity;
    }
    if (options.mode === "color_tf") {
        if (!options.tfNodes || options.tfNodes.length === 0) {
            throw new Error("color_tf mode needs at least one node");
        }
        doc.tf_nodes = options.tfNodes;
    }
    return doc;
}
