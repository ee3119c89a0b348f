import { describe, expect, it } from "vitest";

import { eyePosition, orbitForVolume, rotate, toCameraJson, zoom } from "../src/camera.js";

describe("orbit camera", () => {
    it("a full 360-degree drag returns to the starting pose exactly", () => {
        let state = orbitForVolume([32, 32, 32]);
        const start = eyePosition(state);
        for (let i = 0; i < 36; i++) {
            state = rotate(state, 10, 0);
        }
        expect(state.azimuthDeg).toBe(0);
        expect(eyePosition(state)).toEqual(start);
    });

    it("elevation clamps short of the poles", () => {
        let state = orbitForVolume([32, 32, 32]);
        state = rotate(state, 0, 500);
        expect(state.elevationDeg).toBe(89);
        state = rotate(state, 0, -1000);
        expect(state.elevationDeg).toBe(-89);
    });

    it("zoom clamps to the volume bounds", () => {
        let state = orbitForVolume([32, 32, 32]);
        for (let i = 0; i < 50; i++) state = zoom(state, 0.5);
        expect(state.distance).toBe(state.minDistance);
        for (let i = 0; i < 50; i++) state = zoom(state, 2.0);
        expect(state.distance).toBe(state.maxDistance);
    });

    it("targets the volume center", () => {
        const state = orbitForVolume([16, 16, 16]);
        expect(state.target).toEqual([7.5, 7.5, 7.5]);
        const camera = toCameraJson(state, 45, [64, 64]);
        expect(camera.look_at).toEqual([7.5, 7.5, 7.5]);
        expect(camera.resolution).toEqual([64, 64]);
        // default pose looks down -z toward the target
        expect(camera.eye[2]).toBeGreaterThan(7.5);
    });
});
