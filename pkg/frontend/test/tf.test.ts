import { describe, expect, it } from "vitest";

import { addNode, clampDensity, recolorNode, removeNode } from "../src/tf.js";
import { buildRenderRequest } from "../src/request.js";

const red: [number, number, number] = [1, 0, 0];
const blue: [number, number, number] = [0, 0, 1];

describe("transfer node editing", () => {
    it("keeps nodes sorted by density", () => {
        let nodes = addNode([], { density: 0.8, color: red });
        nodes = addNode(nodes, { density: 0.2, color: blue });
        expect(nodes.map((n) => n.density)).toEqual([0.2, 0.8]);
    });

    it("rejects duplicate densities", () => {
        const nodes = addNode([], { density: 0.5, color: red });
        expect(() => addNode(nodes, { density: 0.5, color: blue })).toThrow(/already exists/);
    });

    it("rejects densities outside the unit range", () => {
        expect(() => addNode([], { density: 1.5, color: red })).toThrow();
    });

    it("removes and recolors by density", () => {
        let nodes = addNode([], { density: 0.5, color: red });
        nodes = recolorNode(nodes, 0.5, blue);
        expect(nodes[0].color).toEqual(blue);
        expect(removeNode(nodes, 0.5)).toEqual([]);
    });
});

describe("density slider", () => {
    it("clamps into [0, 1]", () => {
        expect(clampDensity(-0.5)).toBe(0);
        expect(clampDensity(0.31)).toBe(0.31);
        expect(clampDensity(7)).toBe(1);
        expect(clampDensity(NaN)).toBe(0);
    });
});

describe("request serialization", () => {
    const camera = {
        eye: [0, 0, 40] as [number, number, number],
        look_at: [0, 0, 0] as [number, number, number],
        up: [0, 1, 0] as [number, number, number],
        fov: 45,
        resolution: [64, 64] as [number, number],
    };

    it("nodes serialize into the server's wire shape", () => {
        const nodes = addNode([], { density: 0.45, color: blue });
        const doc = buildRenderRequest({ camera, mode: "color_tf", tfNodes: nodes });
        expect(JSON.parse(JSON.stringify(doc))).toEqual({
            camera: {
                eye: [0, 0, 40],
                look_at: [0, 0, 0],
                up: [0, 1, 0],
                fov: 45,
                resolution: [64, 64],
            },
            mode: "color_tf",
            tf_nodes: [{ density: 0.45, color: [0, 0, 1] }],
            step_size: 0.5,
            gamma: 6,
        });
    });

    it("emphasize carries its density, x-ray carries neither", () => {
        const emphasize = buildRenderRequest({ camera, mode: "emphasize", emphasizeDensity: 0.3 });
        expect(emphasize.emphasize_density).toBe(0.3);
        expect(emphasize.tf_nodes).toBeUndefined();
        const xray = buildRenderRequest({ camera, mode: "xray_nn" });
        expect(xray.emphasize_density).toBeUndefined();
        expect(xray.tf_nodes).toBeUndefined();
    });

    it("rejects incomplete mode parameters", () => {
        expect(() => buildRenderRequest({ camera, mode: "emphasize" })).toThrow(/density/);
        expect(() => buildRenderRequest({ camera, mode: "color_tf", tfNodes: [] })).toThrow(/node/);
    });
});
