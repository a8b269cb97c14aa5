/** World-to-pixel mapping for the server-rendered SVG map.
 *
 * The server draws with a uniform scale, a y-flip, and the content centered,
 * and stamps the exact parameters on the SVG root as data attributes so we
 * can invert clicks without re-deriving anything. The fit/padding math is
 * mirrored here too for views we lay out ourselves.
 */

import type { Extent, NetworkDocument, WorldPoint } from "./types.js";

export const EXTENT_PADDING = 0.05;

export interface PixelPoint {
  px: number;
  py: number;
}

export class MapTransform {
  constructor(
    readonly scale: number,
    readonly centerX: number,
    readonly centerY: number,
    readonly widthPx: number,
    readonly heightPx: number,
  ) {}

  /** Mirror of the server's fit: uniform scale, content centered. */
  static fit(extent: Extent, widthPx: number, heightPx: number): MapTransform {
    const spanX = Math.max(extent.maxX - extent.minX, 1e-9);
    const spanY = Math.max(extent.maxY - extent.minY, 1e-9);
    const scale = Math.min(widthPx / spanX, heightPx / spanY);
    return new MapTransform(
      scale,
      (extent.minX + extent.maxX) / 2,
      (extent.minY + extent.maxY) / 2,
      widthPx,
      heightPx,
    );
  }

  /** Read the transform the server stamped onto its SVG root. */
  static fromSvg(svgText: string): MapTransform {
    const root = svgText.match(/<svg\b[^>]*>/);
    if (!root) {
      throw new Error("not an SVG document");
    }
    const attr = (name: string): number => {
      const m = root[0].match(new RegExp(`${name}="([^"]+)"`));
      if (!m) {
        throw new Error(`SVG root is missing ${name}`);
      }
      const value = Number(m[1]);
      if (!Number.isFinite(value)) {
        throw new Error(`SVG ${name} is not a number: ${m[1]}`);
      }
      return value;
    };
    return new MapTransform(
      attr("data-scale"),
      attr("data-cx"),
      attr("data-cy"),
      attr("width"),
      attr("height"),
    );
  }

  toPixel(point: WorldPoint): PixelPoint {
    return {
      px: (point.x - this.centerX) * this.scale + this.widthPx / 2,
      py: this.heightPx / 2 - (point.y - this.centerY) * this.scale,
    };
  }

  toWorld(pixel: PixelPoint): WorldPoint {
    return {
      x: (pixel.px - this.widthPx / 2) / this.scale + this.centerX,
      y: this.centerY - (pixel.py - this.heightPx / 2) / this.scale,
    };
  }

  /** One screen pixel expressed in world units; the pick tolerance. */
  worldPerPixel(): number {
    return 1 / this.scale;
  }
}

export function networkExtent(network: NetworkDocument): Extent {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  const take = (x: number, y: number) => {
    minX = Math.min(minX, x);
    minY = Math.min(minY, y);
    maxX = Math.max(maxX, x);
    maxY = Math.max(maxY, y);
  };
  for (const vertex of network.vertices) {
    take(vertex.x, vertex.y);
  }
  for (const segment of network.segments) {
    for (const [x, y] of segment.geometry) {
      take(x, y);
    }
  }
  if (!Number.isFinite(minX)) {
    throw new Error("network has no coordinates");
  }
  return { minX, minY, maxX, maxY };
}

/** The server pads the auto extent by 5% per side; same here. */
export function paddedExtent(extent: Extent): Extent {
  const padX = Math.max((extent.maxX - extent.minX) * EXTENT_PADDING, 1e-9);
  const padY = Math.max((extent.maxY - extent.minY) * EXTENT_PADDING, 1e-9);
  return {
    minX: extent.minX - padX,
    minY: extent.minY - padY,
    maxX: extent.maxX + padX,
    maxY: extent.maxY + padY,
  };
}

export function insideExtent(point: WorldPoint, extent: Extent): boolean {
  return (
    point.x >= extent.minX &&
    point.x <= extent.maxX &&
    point.y >= extent.minY &&
    point.y <= extent.maxY
  );
}
