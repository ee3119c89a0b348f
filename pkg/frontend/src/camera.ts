// Spherical-orbit camera around a fixed target.
//
// Azimuth is normalized into [0, 360) before any trigonometry, so a full
// 360-degree drag reproduces the starting pose exactly.

export type Vec3 = [number, number, number];

export interface OrbitState {
    target: Vec3;
    distance: number;
    azimuthDeg: number;
    elevationDeg: number;
    minDistance: number;
    maxDistance: number;
}

const ELEVATION_LIMIT = 89;

export function orbitForVolume(dims: [number, number, number]): OrbitState {
    const size = Math.max(...dims);
    const target: Vec3 = [(dims[0] - 1) / 2, (dims[1] - 1) / 2, (dims[2] - 1) / 2];
    return {
        target,
        distance: 2.5 * size,
        azimuthDeg: 0,
        elevationDeg: 0,
        // closer than the bounding sphere would clip into the volume
        minDistance: size,
        maxDistance: 10 * size,
    };
}

function normalizeAzimuth(deg: number): number {
    return ((deg % 360) + 360) % 360;
}

export function rotate(state: OrbitState, dxDeg: number, dyDeg: number): OrbitState {
    return {
        ...state,
        azimuthDeg: normalizeAzimuth(state.azimuthDeg + dxDeg),
        elevationDeg: Math.min(ELEVATION_LIMIT, Math.max(-ELEVATION_LIMIT, state.elevationDeg + dyDeg)),
    };
}

export function zoom(state: OrbitState, factor: number): OrbitState {
    const distance = Math.min(state.maxDistance, Math.max(state.minDistance, state.distance * factor));
    return { ...state, distance };
}

export function eyePosition(state: OrbitState): Vec3 {
    const az = (state.azimuthDeg * Math.PI) / 180;
    const el = (state.elevationDeg * Math.PI) / 180;
    const [tx, ty, tz] = state.target;
    return [
        tx + state.distance * Math.cos(el) * Math.sin(az),
        ty + state.distance * Math.sin(el),
        tz + state.distance * Math.cos(el) * Math.cos(az),
    ];
}

export interface CameraJson {
    eye: Vec3;
    look_at: Vec3;
    up: Vec3;
    fov: number;
    resolution: [number, number];
}

export function toCameraJson(
    state: OrbitState,
    fov: number,
    resolution: [number, number],
): CameraJson {
    return {
        eye: eyePosition(state),
        look_at: [...state.target] as Vec3,
        up: [0, 1, 0],
        fov,
        resolution,
    };
}
