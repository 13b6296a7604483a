// Bird's-eye-view rendering on a 2D canvas: lane markings, the reference
// trajectory, ego and obstacle glyphs, and the translucent risk overlay.

import { cellColor, classifyGrid, RiskGrid } from "./grid.js";
import { FrameMessage } from "./protocol.js";

export interface Viewport {
  centerX: number;
  centerY: number;
  scale: number; // pixels per meter
  width: number;
  height: number;
}

export function worldToPixel(
  vp: Viewport,
  x: number,
  y: number,
): [number, number] {
  return [
    vp.width / 2 + (x - vp.centerX) * vp.scale,
    vp.height / 2 - (y - vp.centerY) * vp.scale,
  ];
}

function drawBox(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  x: number,
  y: number,
  theta: number,
  halfLength: number,
  halfWidth: number,
  fill: string,
): void {
  const [px, py] = worldToPixel(vp, x, y);
  ctx.save();
  ctx.translate(px, py);
  ctx.rotate(-theta);
  ctx.fillStyle = fill;
  ctx.fillRect(
    -halfLength * vp.scale,
    -halfWidth * vp.scale,
    2 * halfLength * vp.scale,
    2 * halfWidth * vp.scale,
  );
  ctx.restore();
}

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  grid: RiskGrid,
  lambda: number,
): void {
  const mask = classifyGrid(grid, lambda);
  const cell = grid.resolution * vp.scale;
  for (let row = 0; row < grid.height; row++) {
    for (let col = 0; col < grid.width; col++) {
      const v = grid.values[row * grid.width + col];
      if (v <= 0 && mask[row * grid.width + col] === 0) continue;
      const c = cellColor(v, lambda);
      const wx = grid.originX + col * grid.resolution;
      const wy = grid.originY + (row + 1) * grid.resolution;
      const [px, py] = worldToPixel(vp, wx, wy);
      ctx.fillStyle = `rgba(${c.r},${c.g},${c.b},${c.a})`;
      ctx.fillRect(px, py, cell + 0.5, cell + 0.5);
    }
  }
}

export function renderFrame(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  frame: FrameMessage,
  grid: RiskGrid | null,
  lambda: number,
): void {
  ctx.fillStyle = "#1b1e23";
  ctx.fillRect(0, 0, vp.width, vp.height);

  if (grid) drawOverlay(ctx, vp, grid, lambda);

  // reference trajectory
  ctx.strokeStyle = "rgba(130,170,255,0.9)";
  ctx.lineWidth = 2;
  ctx.beginPath();
  frame.trajectory.forEach(([x, y], i) => {
    const [px, py] = worldToPixel(vp, x, y);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();

  for (const obs of frame.obstacles) {
    drawBox(ctx, vp, obs.x, obs.y, obs.theta, obs.half_length, obs.half_width,
            "#d9923b");
  }
  // ego: distinct glyph (body plus heading wedge)
  drawBox(ctx, vp, frame.ego.x, frame.ego.y, frame.ego.theta, 2.25, 1.0,
          "#46c46e");
  const [hx, hy] = worldToPixel(
    vp,
    frame.ego.x + 2.8 * Math.cos(frame.ego.theta),
    frame.ego.y + 2.8 * Math.sin(frame.ego.theta),
  );
  ctx.fillStyle = "#46c46e";
  ctx.beginPath();
  ctx.arc(hx, hy, 3, 0, 2 * Math.PI);
  ctx.fill();
}
