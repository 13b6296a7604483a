// Browser entry: connect to the gateway's WebSocket bridge, keep the
// console state current, and drive the canvas + answer panel.

import { ConsoleState } from "./state.js";
import { GatewayMessage } from "./protocol.js";
import { renderFrame, Viewport } from "./render.js";

const LAMBDA = 0.3;

function main(): void {
  const canvas = document.getElementById("bev") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const panel = document.getElementById("panel")!;
  const status = document.getElementById("status")!;
  const slider = document.getElementById("whatif")!;

  const url = `ws://${location.host}/ws`;
  const socket = new WebSocket(url);
  const state = new ConsoleState((msg) => socket.send(JSON.stringify(msg)));

  socket.addEventListener("open", () => {
    socket.send(JSON.stringify({ type: "hello", version: 1 }));
    status.textContent = "connected";
  });
  socket.addEventListener("close", () => {
    status.textContent = "disconnected";
  });
  socket.addEventListener("message", (event) => {
    try {
      state.handle(JSON.parse(event.data as string) as GatewayMessage);
    } catch (err) {
      state.errors.push(String(err));
    }
    syncPanel();
  });

  function syncPanel(): void {
    if (state.ended) {
      panel.innerHTML = `<div class="done">session ended: ${JSON.stringify(
        state.ended,
      )}</div>`;
      return;
    }
    if (!state.query) {
      panel.innerHTML = '<div class="idle">no open query</div>';
      slider.innerHTML = "";
      return;
    }
    const q = state.query;
    if (!document.getElementById(`query-${q.id}`)) {
      panel.innerHTML =
        `<div class="question" id="query-${q.id}">${q.text}</div>` +
        `<div class="elapsed" id="elapsed"></div>` +
        q.options
          .map((o) => `<button data-option="${o}">${o}</button>`)
          .join(" ");
      panel.querySelectorAll("button").forEach((btn) => {
        btn.addEventListener("click", () => {
          if (state.submitAnswer(btn.dataset.option!)) {
            panel
              .querySelectorAll("button")
              .forEach((b) => b.setAttribute("disabled", "true"));
          }
        });
      });
      slider.innerHTML = state
        .availableTaus()
        .map(
          (t) =>
            `<label><input type="radio" name="tau" value="${t}" ` +
            `${state.selectedTau === t ? "checked" : ""}/>${t}s</label>`,
        )
        .join(" ");
      slider.querySelectorAll("input").forEach((inp) => {
        inp.addEventListener("change", () =>
          state.selectTau((inp as HTMLInputElement).value),
        );
      });
    }
  }

  const vp: Viewport = {
    centerX: 0,
    centerY: 0,
    scale: 6,
    width: canvas.width,
    height: canvas.height,
  };

  function paint(): void {
    if (state.frame) {
      vp.centerX = state.frame.ego.x;
      vp.centerY = state.frame.ego.y;
      renderFrame(ctx, vp, state.frame, state.activeGrid(), LAMBDA);
    }
    const elapsed = document.getElementById("elapsed");
    if (elapsed && state.query) {
      elapsed.textContent = `elapsed ${state.elapsed().toFixed(1)} s`;
    }
    requestAnimationFrame(paint);
  }
  requestAnimationFrame(paint);
}

window.addEventListener("load", main);
