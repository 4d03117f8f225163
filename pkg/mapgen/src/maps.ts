import type { Backbone, FeatureMap } from './backbone.js'
import type { GrayImage } from './image.js'

const ZERO_VARIANCE_TOL = 1e-12

/** Correlation of the target's feature stack against every feature-map
 *  position (zero-mean, unit-variance over window x channels). Windows that
 *  would overflow the map are trimmed, not padded, and degenerate windows
 *  score 0. This is the top-down modulation step: target features slide
 *  over image features. */
export function featureCorrelation(image: FeatureMap, target: FeatureMap): Float64Array {
  const { rows, cols, channels } = image
  const th = target.rows
  const tw = target.cols
  const cy = (th - 1) >> 1
  const cx = (tw - 1) >> 1

  const out = new Float64Array(rows * cols)
  for (let r = 0; r < rows; r++) {
    const a0 = Math.max(0, cy - r)
    const a1 = Math.min(th - 1, rows - 1 - r + cy)
    for (let c = 0; c < cols; c++) {
      const b0 = Math.max(0, cx - c)
      const b1 = Math.min(tw - 1, cols - 1 - c + cx)
      const n = (a1 - a0 + 1) * (b1 - b0 + 1) * channels
      let wSum = 0
      let wSq = 0
      let tSum = 0
      let tSq = 0
      let cross = 0
      for (let a = a0; a <= a1; a++) {
        const rr = r - cy + a
        for (let b = b0; b <= b1; b++) {
          const cc = c - cx + b
          for (let i = 0; i < channels; i++) {
            const v = image.data[(rr * cols + cc) * channels + i]
            const t = target.data[(a * tw + b) * channels + i]
            wSum += v
            wSq += v * v
            tSum += t
            tSq += t * t
            cross += v * t
          }
        }
      }
      const wSS = wSq - (wSum * wSum) / n
      const tSS = tSq - (tSum * tSum) / n
      if (wSS <= ZERO_VARIANCE_TOL || tSS <= ZERO_VARIANCE_TOL) continue
      out[r * cols + c] = (cross - (wSum * tSum) / n) / Math.sqrt(wSS * tSS)
    }
  }
  return out
}

/** Corner-aligned bilinear upscaling, the interpolation pinned in the
 *  sidecar metadata. */
export function bilinearResize(
  values: Float64Array,
  rows: number,
  cols: number,
  outRows: number,
  outCols: number,
): Float64Array {
  const out = new Float64Array(outRows * outCols)
  for (let r = 0; r < outRows; r++) {
    const rp = outRows === 1 ? (rows - 1) / 2 : (r * (rows - 1)) / (outRows - 1)
    const r0 = Math.min(Math.floor(rp), rows - 1)
    const r1 = Math.min(r0 + 1, rows - 1)
    const fr = rp - r0
    for (let c = 0; c < outCols; c++) {
      const cp = outCols === 1 ? (cols - 1) / 2 : (c * (cols - 1)) / (outCols - 1)
      const c0 = Math.min(Math.floor(cp), cols - 1)
      const c1 = Math.min(c0 + 1, cols - 1)
      const fc = cp - c0
      const top = values[r0 * cols + c0] * (1 - fc) + values[r0 * cols + c1] * fc
      const bot = values[r1 * cols + c0] * (1 - fc) + values[r1 * cols + c1] * fc
      out[r * outCols + c] = top * (1 - fr) + bot * fr
    }
  }
  return out
}

/** Min-max rescale to [0, 1]; constant inputs map to 0.5 by convention. */
export function minmaxScale(values: Float64Array): Float64Array {
  let lo = Infinity
  let hi = -Infinity
  for (const v of values) {
    if (v < lo) lo = v
    if (v > hi) hi = v
  }
  const out = new Float64Array(values.length)
  if (hi - lo <= 1e-12) {
    out.fill(0.5)
    return out
  }
  for (let i = 0; i < values.length; i++) out[i] = (values[i] - lo) / (hi - lo)
  return out
}

/** Attention map at image resolution, normalized to [0, 1]. */
export function attentionMap(image: GrayImage, target: GrayImage, backbone: Backbone): Float64Array {
  const fi = backbone.extract(image)
  const ft = backbone.extract(target)
  if (ft.rows > fi.rows || ft.cols > fi.cols) {
    throw new Error(
      `target feature map ${ft.rows}x${ft.cols} larger than image feature map ${fi.rows}x${fi.cols}`,
    )
  }
  const raw = featureCorrelation(fi, ft)
  const up = bilinearResize(raw, fi.rows, fi.cols, image.height, image.width)
  return minmaxScale(up)
}

function boxBlur(values: Float64Array, rows: number, cols: number, radius: number): Float64Array {
  // Two-pass separable box filter with edge clamping.
  const tmp = new Float64Array(rows * cols)
  const out = new Float64Array(rows * cols)
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      let acc = 0
      let n = 0
      for (let d = -radius; d <= radius; d++) {
        const cc = c + d
        if (cc >= 0 && cc < cols) {
          acc += values[r * cols + cc]
          n++
        }
      }
      tmp[r * cols + c] = acc / n
    }
  }
  for (let c = 0; c < cols; c++) {
    for (let r = 0; r < rows; r++) {
      let acc = 0
      let n = 0
      for (let d = -radius; d <= radius; d++) {
        const rr = r + d
        if (rr >= 0 && rr < rows) {
          acc += tmp[rr * cols + c]
          n++
        }
      }
      out[r * cols + c] = acc / n
    }
  }
  return out
}

/** Saliency prior: multi-scale local contrast modulated by a center-bias
 *  Gaussian, plus a floor so the center bias dominates featureless inputs.
 *  Values are nonnegative and normalized to [0, 1]. */
export function saliencyMap(image: GrayImage): Float64Array {
  const rows = image.height
  const cols = image.width
  const contrast = new Float64Array(rows * cols)
  for (const radius of [2, 4, 8]) {
    const center = boxBlur(image.data, rows, cols, radius)
    const surround = boxBlur(image.data, rows, cols, radius * 3)
    for (let i = 0; i < contrast.length; i++) {
      contrast[i] += Math.abs(center[i] - surround[i]) / 255.0
    }
  }
  const scaled = minmaxScale(contrast)
  const sigmaR = 0.35 * rows
  const sigmaC = 0.35 * cols
  const out = new Float64Array(rows * cols)
  const baseline = 0.1
  for (let r = 0; r < rows; r++) {
    const dr = r - (rows - 1) / 2
    for (let c = 0; c < cols; c++) {
      const dc = c - (cols - 1) / 2
      const bias = Math.exp(-(dr * dr) / (2 * sigmaR * sigmaR) - (dc * dc) / (2 * sigmaC * sigmaC))
      out[r * cols + c] = (scaled[r * cols + c] + baseline) * bias
    }
  }
  return minmaxScale(out)
}
