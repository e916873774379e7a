// Drawing-flow state: record num_images_per_digit stroke sets for each of
// the two endpoint digits. "Finish" freezes the current drawing and advances;
// "clear" wipes only the drawing in progress. The submission payload is the
// recorded stroke sets verbatim, untouched by any client-side processing.

import type { Point, StrokeSetPayload } from "./types.js";

export const DEFAULT_CANVAS_SIZE = 280;
export const DEFAULT_PEN_WIDTH = 18;

export type DigitName = "digit_a" | "digit_b";

export class DrawFlow {
  readonly recorded: { digit_a: StrokeSetPayload[]; digit_b: StrokeSetPayload[] } = {
    digit_a: [],
    digit_b: [],
  };
  private current: Point[][] = [];
  private active: Point[] | null = null;

  constructor(
    readonly numImagesPerDigit: number,
    readonly canvasSize: number = DEFAULT_CANVAS_SIZE,
    readonly penWidth: number = DEFAULT_PEN_WIDTH,
  ) {
    if (numImagesPerDigit < 1) throw new Error("numImagesPerDigit must be >= 1");
  }

  /** Which digit the next Finish will record, or null when both are done. */
  get currentDigit(): DigitName | null {
    if (this.recorded.digit_a.length < this.numImagesPerDigit) return "digit_a";
    if (this.recorded.digit_b.length < this.numImagesPerDigit) return "digit_b";
    return null;
  }

  get done(): boolean {
    return this.currentDigit === null;
  }

  /** Count of finished drawings for the digit currently being collected. */
  get progress(): { digit: DigitName | null; index: number; total: number } {
    const digit = this.currentDigit;
    const index = digit === null ? this.numImagesPerDigit : this.recorded[digit].length;
    return { digit, index, total: this.numImagesPerDigit };
  }

  get currentStrokes(): Point[][] {
    return this.current.map((s) => [...s]);
  }

  private clamp(p: Point): Point {
    const clip = (v: number) => Math.min(Math.max(v, 0), this.canvasSize);
    return [clip(p[0]), clip(p[1])];
  }

  penDown(p: Point): void {
    if (this.done) return;
    this.active = [this.clamp(p)];
    this.current.push(this.active);
  }

  penMove(p: Point): void {
    this.active?.push(this.clamp(p));
  }

  penUp(): void {
    this.active = null;
  }

  /** Erase the in-progress drawing only; finished recordings are untouched. */
  clear(): void {
    this.current = [];
    this.active = null;
  }

  /** Record the current drawing and advance to the next slot. */
  finish(): boolean {
    const digit = this.currentDigit;
    if (digit === null || this.current.length === 0) return false;
    this.recorded[digit].push({
      canvas_size: this.canvasSize,
      pen_width: this.penWidth,
      strokes: this.current.map((s) => s.map((p) => [...p] as Point)),
    });
    this.clear();
    return true;
  }

  /** The exact recorded stroke sets, ready for POST /datasets. */
  payload(): { digit_a: StrokeSetPayload[]; digit_b: StrokeSetPayload[] } {
    if (!this.done) {
      throw new Error(
        `need ${this.numImagesPerDigit} drawings per digit before submitting`,
      );
    }
    return this.recorded;
  }
}
