// Mask-painting client: load an image, paint holes, submit, compare, iterate.
//
// The mask is edited at the image's native resolution; the canvases are
// scaled by CSS only, so exported masks never pass through resampling.

import { ApiError, health, inpaint } from "./api";
import { BrushState, MaskBuffer, clampRadius } from "./mask-buffer";
import { base64ToBytes, bytesToBase64 } from "./png";

interface HistoryEntry {
  mask: Uint8Array;
  resultB64: string;
  timingMs: number;
}

const app = {
  image: null as HTMLImageElement | null,
  imageB64: "", // encoded once per load so identical resubmits are identical requests
  mask: null as MaskBuffer | null,
  brush: { radius: 16, mode: "paint" } as BrushState,
  inflight: false,
  history: [] as HistoryEntry[],
  painting: false,
  last: null as { x: number; y: number } | null,
};

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const editCanvas = () => $<HTMLCanvasElement>("edit-canvas");
const resultCanvas = () => $<HTMLCanvasElement>("result-canvas");

function setStatus(text: string, isError = false) {
  const el = $("status");
  el.textContent = text;
  el.className = isError ? "status error" : "status";
}

function updateControls() {
  const ready = app.image !== null && app.mask !== null;
  ($("submit") as HTMLButtonElement).disabled = !ready || app.inflight;
  ($("undo") as HTMLButtonElement).disabled = !ready || !app.mask!.canUndo();
  ($("clear") as HTMLButtonElement).disabled = !ready;
  ($("export") as HTMLButtonElement).disabled = !ready;
}

function updateCoverage() {
  const pct = app.mask ? app.mask.coverage() * 100 : 0;
  $("coverage").textContent = `coverage: ${pct.toFixed(1)}%`;
}

function redraw() {
  if (!app.image || !app.mask) return;
  const canvas = editCanvas();
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(app.image, 0, 0);
  const overlay = new ImageData(app.mask.toOverlayRGBA(), app.mask.width, app.mask.height);
  const scratch = document.createElement("canvas");
  scratch.width = app.mask.width;
  scratch.height = app.mask.height;
  scratch.getContext("2d")!.putImageData(overlay, 0, 0);
  ctx.drawImage(scratch, 0, 0);
}

function canvasPoint(ev: PointerEvent): { x: number; y: number } {
  const canvas = editCanvas();
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * canvas.width,
    y: ((ev.clientY - rect.top) / rect.height) * canvas.height,
  };
}

async function loadImageFile(file: File) {
  const url = URL.createObjectURL(file);
  const img = new Image();
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error("could not decode image"));
    img.src = url;
  });
  URL.revokeObjectURL(url);

  app.image = img;
  app.mask = new MaskBuffer(img.naturalWidth, img.naturalHeight);
  app.history = [];
  renderHistory();

  const canvas = editCanvas();
  canvas.width = img.naturalWidth;
  canvas.height = img.naturalHeight;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(img, 0, 0);
  // Re-encode once at native resolution; PNG is the only wire codec.
  const blob: Blob = await new Promise((resolve, reject) =>
    canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("PNG encode failed"))), "image/png"),
  );
  app.imageB64 = bytesToBase64(new Uint8Array(await blob.arrayBuffer()));

  const result = resultCanvas();
  result.width = img.naturalWidth;
  result.height = img.naturalHeight;
  result.getContext("2d")!.clearRect(0, 0, result.width, result.height);

  redraw();
  updateCoverage();
  updateControls();
  setStatus(`loaded ${file.name} (${img.naturalWidth}x${img.naturalHeight})`);
}

async function submit() {
  if (!app.mask || app.inflight) return;
  app.inflight = true;
  updateControls();
  setStatus("inpainting...");
  const maskSnapshot = app.mask.snapshot();
  try {
    const res = await inpaint({
      image: app.imageB64,
      mask: bytesToBase64(app.mask.exportPng()),
    });
    await renderResult(res.image);
    app.history.push({ mask: maskSnapshot, resultB64: res.image, timingMs: res.timing_ms });
    renderHistory();
    setStatus(`done in ${res.timing_ms.toFixed(0)} ms (model ${res.model})`);
  } catch (err) {
    const msg = err instanceof ApiError ? `server: ${err.message}` : String(err);
    setStatus(msg, true); // history stays intact
  } finally {
    app.inflight = false;
    updateControls();
  }
}

async function renderResult(b64: string) {
  const bytes = base64ToBytes(b64);
  const blob = new Blob([bytes.buffer as ArrayBuffer], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  const canvas = resultCanvas();
  canvas.getContext("2d")!.drawImage(bitmap, 0, 0);
}

function renderHistory() {
  const list = $("history");
  list.innerHTML = "";
  app.history.forEach((entry, i) => {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = `#${i + 1} — mask ${(countHoles(entry.mask) / entry.mask.length * 100).toFixed(1)}%`;
    button.onclick = async () => {
      if (!app.mask) return;
      app.mask.beginStroke();
      app.mask.restore(entry.mask);
      app.mask.endStroke();
      await renderResult(entry.resultB64);
      redraw();
      updateCoverage();
      updateControls();
    };
    item.appendChild(button);
    list.appendChild(item);
  });
}

function countHoles(bytes: Uint8Array): number {
  let n = 0;
  for (const v of bytes) if (v === 0) n++;
  return n;
}

function exportMask() {
  if (!app.mask) return;
  const bytes = app.mask.exportPng();
  const blob = new Blob([bytes.buffer as ArrayBuffer], { type: "image/png" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "mask.png";
  a.click();
  URL.revokeObjectURL(a.href);
}

function wireEvents() {
  $("file").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.files && input.files[0]) {
      loadImageFile(input.files[0]).catch((e) => setStatus(String(e), true));
    }
  });

  const radius = $("radius") as HTMLInputElement;
  radius.addEventListener("input", () => {
    app.brush.radius = clampRadius(Number(radius.value));
    $("radius-label").textContent = `${app.brush.radius}px`;
  });

  for (const mode of ["paint", "erase"] as const) {
    $(`mode-${mode}`).addEventListener("click", () => {
      app.brush.mode = mode;
      $("mode-paint").classList.toggle("active", mode === "paint");
      $("mode-erase").classList.toggle("active", mode === "erase");
    });
  }

  const canvas = editCanvas();
  canvas.addEventListener("pointerdown", (ev) => {
    if (!app.mask) return;
    canvas.setPointerCapture(ev.pointerId);
    app.painting = true;
    app.mask.beginStroke();
    const p = canvasPoint(ev);
    app.mask.paintDisc(p.x, p.y, app.brush.radius, app.brush.mode);
    app.last = p;
    redraw();
    updateCoverage();
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!app.painting || !app.mask || !app.last) return;
    const p = canvasPoint(ev);
    app.mask.paintLine(app.last.x, app.last.y, p.x, p.y, app.brush.radius, app.brush.mode);
    app.last = p;
    redraw();
    updateCoverage();
  });
  const finish = () => {
    if (!app.painting || !app.mask) return;
    app.painting = false;
    app.last = null;
    app.mask.endStroke();
    updateCoverage();
    updateControls();
  };
  canvas.addEventListener("pointerup", finish);
  canvas.addEventListener("pointercancel", finish);

  $("undo").addEventListener("click", () => {
    if (app.mask && app.mask.undo()) {
      redraw();
      updateCoverage();
      updateControls();
    }
  });
  $("clear").addEventListener("click", () => {
    if (!app.mask) return;
    app.mask.beginStroke();
    app.mask.fillAll("erase");
    app.mask.endStroke();
    redraw();
    updateCoverage();
    updateControls();
  });
  $("export").addEventListener("click", exportMask);
  $("submit").addEventListener("click", () => void submit());
}

async function init() {
  wireEvents();
  updateControls();
  updateCoverage();
  try {
    const h = await health();
    setStatus(`connected to model ${h.model}`);
  } catch (err) {
    const msg = err instanceof ApiError ? err.message : String(err);
    setStatus(`service unavailable: ${msg}`, true);
  }
}

void init();
