// Risk-grid wire format: header {magic "LICM", version u8, width u16,
// height u16, resolution f32, origin 2xf32, tau f32} then width*height
// little-endian u16 values scaled by 65535, row-major.

export interface RiskGrid {
  width: number;
  height: number;
  resolution: number;
  originX: number;
  originY: number;
  tau: number;
  /** row-major probabilities in [0, 1]; index = row * width + col */
  values: Float64Array;
}

const MAGIC = "LICM";
const HEADER_BYTES = 25;

export function decodeGrid(payload: Uint8Array): RiskGrid {
  if (payload.length < HEADER_BYTES) {
    throw new Error("grid payload shorter than header");
  }
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const magic = String.fromCharCode(payload[0], payload[1], payload[2], payload[3]);
  if (magic !== MAGIC) throw new Error(`bad grid magic ${magic}`);
  const version = view.getUint8(4);
  if (version !== 1) throw new Error(`unsupported grid version ${version}`);
  const width = view.getUint16(5, true);
  const height = view.getUint16(7, true);
  const resolution = view.getFloat32(9, true);
  const originX = view.getFloat32(13, true);
  const originY = view.getFloat32(17, true);
  const tau = view.getFloat32(21, true);
  const count = width * height;
  if (payload.length !== HEADER_BYTES + 2 * count) {
    throw new Error(`grid payload length ${payload.length} inconsistent`);
  }
  const values = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = view.getUint16(HEADER_BYTES + 2 * i, true) / 65535;
  }
  return { width, height, resolution, originX, originY, tau, values };
}

/** Unsafe mask at threshold lambda: a cell is unsafe when value >= lambda.
 * Must match the risk engine's classification bit for bit. */
export function classifyGrid(grid: RiskGrid, lambda: number): Uint8Array {
  const out = new Uint8Array(grid.values.length);
  for (let i = 0; i < grid.values.length; i++) {
    out[i] = grid.values[i] >= lambda ? 1 : 0;
  }
  return out;
}

export interface CellColor {
  r: number;
  g: number;
  b: number;
  a: number;
}

/** Overlay color ramp: unsafe cells red (deeper with value), safe cells
 * green; lambda is the break. */
export function cellColor(value: number, lambda: number): CellColor {
  if (value >= lambda) {
    const ramp = lambda < 1 ? Math.min(1, (value - lambda) / (1 - lambda)) : 1;
    return { r: 140 + Math.round(115 * ramp), g: 0, b: 0, a: 0.55 };
  }
  const ramp = lambda > 0 ? Math.min(1, value / lambda) : 0;
  return { r: 0, g: 200 - Math.round(120 * ramp), b: 0, a: 0.3 };
}
