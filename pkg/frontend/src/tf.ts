// Transfer-function editing: a list of (density, color) nodes plus the
// single-density emphasize slider.

export interface TransferNode {
    density: number;
    color: [number, number, number];
}

export function addNode(nodes: TransferNode[], node: TransferNode): TransferNode[] {
    if (node.density < 0 || node.density > 1) {
        throw new Error("node density must lie in [0, 1]");
    }
    if (nodes.some((existing) => existing.density === node.density)) {
        throw new Error(`a node at density ${node.density} already exists`);
    }
    return [...nodes, node].sort((a, b) => a.density - b.density);
}

export function removeNode(nodes: TransferNode[], density: number): TransferNode[] {
    return nodes.filter((node) => node.density !== density);
}

export function recolorNode(
    nodes: TransferNode[],
    density: number,
    color: [number, number, number],
): TransferNode[] {
    return nodes.map((node) => (node.density === density ? { ...node, color } : node));
}

/** Clamp the emphasize slider into the valid density range. */
export function clampDensity(value: number): number {
    if (Number.isNaN(value)) return 0;
    return Math.min(1, Math.max(0, value));
}
