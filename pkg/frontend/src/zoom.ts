/** viewBox arithmetic for client-side pan and zoom over the vector map. */

export interface ViewBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export const MIN_ZOOM = 0.25; // cannot zoom out past 4x the initial view
export const MAX_ZOOM = 40;

export function viewBoxAttr(vb: ViewBox): string {
  return `${vb.x} ${vb.y} ${vb.w} ${vb.h}`;
}

/** Shift the view by a pixel delta measured on the on-screen element. */
export function panBy(vb: ViewBox, dxPx: number, dyPx: number, elementW: number, elementH: number): ViewBox {
  return {
    x: vb.x - (dxPx * vb.w) / elementW,
    y: vb.y - (dyPx * vb.h) / elementH,
    w: vb.w,
    h: vb.h,
  };
}

/** Zoom by a factor keeping the point under the cursor fixed.
 *
 * fx/fy are the cursor position as fractions of the element, 0..1.
 */
export function zoomAt(vb: ViewBox, fx: number, fy: number, factor: number, initial: ViewBox): ViewBox {
  const targetW = vb.w * factor;
  const zoomLevel = initial.w / targetW;
  if (zoomLevel < MIN_ZOOM || zoomLevel > MAX_ZOOM) {
    return vb;
  }
  const anchorX = vb.x + fx * vb.w;
  const anchorY = vb.y + fy * vb.h;
  const w = targetW;
  const h = vb.h * factor;
  return {
    x: anchorX - fx * w,
    y: anchorY - fy * h,
    w,
    h,
  };
}

/** Map a click on the element to viewBox (SVG user-space) coordinates. */
export function clientToViewBox(
  vb: ViewBox,
  offsetX: number,
  offsetY: number,
  elementW: number,
  elementH: number,
): { px: number; py: number } {
  return {
    px: vb.x + (offsetX / elementW) * vb.w,
    py: vb.y + (offsetY / elementH) * vb.h,
  };
}
