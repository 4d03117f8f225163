import { createHash } from 'node:crypto'
import { readFileSync } from 'node:fs'
import type { GrayImage } from './image.js'

export interface FeatureMap {
  rows: number
  cols: number
  channels: number
  /** row-major, channel-last */
  data: Float64Array
}

export interface ConvLayer {
  /** [out][in][ky][kx], 3x3 kernels */
  weights: number[][][][]
}

export interface Backbone {
  name: string
  weightsHash: string
  /** downsampling factor between image and feature coordinates */
  stride: number
  extract(image: GrayImage): FeatureMap
}

/** Deterministic 32-bit PRNG so the built-in filter bank is reproducible. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a |= 0
    a = (a + 0x6d2b79f5) | 0
    let t = Math.imul(a ^ (a >>> 15), 1 | a)
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

function makeLayer(rand: () => number, outCh: number, inCh: number): ConvLayer {
  const weights: number[][][][] = []
  for (let o = 0; o < outCh; o++) {
    const perIn: number[][][] = []
    for (let i = 0; i < inCh; i++) {
      const kernel: number[][] = []
      for (let ky = 0; ky < 3; ky++) {
        const row: number[] = []
        for (let kx = 0; kx < 3; kx++) {
          row.push((rand() * 2 - 1) / Math.sqrt(inCh * 9))
        }
        kernel.push(row)
      }
      perIn.push(kernel)
    }
    weights.push(perIn)
  }
  return { weights }
}

function hashLayers(layers: ConvLayer[]): string {
  const h = createHash('sha256')
  for (const layer of layers) {
    h.update(JSON.stringify(layer.weights))
  }
  return h.digest('hex')
}

function convRelu(input: FeatureMap, layer: ConvLayer): FeatureMap {
  // Edge-replicate padding: featureless (constant) inputs stay featureless,
  // so degenerate images normalize to the 0.5 convention downstream.
  const { rows, cols, channels } = input
  const outCh = layer.weights.length
  const out = new Float64Array(rows * cols * outCh)
  for (let o = 0; o < outCh; o++) {
    const kernels = layer.weights[o]
    for (let r = 0; r < rows; r++) {
      for (let c = 0; c < cols; c++) {
        let acc = 0
        for (let i = 0; i < channels; i++) {
          const kernel = kernels[i]
          for (let ky = -1; ky <= 1; ky++) {
            let rr = r + ky
            rr = rr < 0 ? 0 : rr >= rows ? rows - 1 : rr
            const krow = kernel[ky + 1]
            for (let kx = -1; kx <= 1; kx++) {
              let cc = c + kx
              cc = cc < 0 ? 0 : cc >= cols ? cols - 1 : cc
              acc += krow[kx + 1] * input.data[(rr * cols + cc) * channels + i]
            }
          }
        }
        out[(r * cols + c) * outCh + o] = acc > 0 ? acc : 0
      }
    }
  }
  return { rows, cols, channels: outCh, data: out }
}

function avgPool2(input: FeatureMap): FeatureMap {
  const rows = Math.max(1, Math.floor(input.rows / 2))
  const cols = Math.max(1, Math.floor(input.cols / 2))
  const { channels } = input
  const out = new Float64Array(rows * cols * channels)
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      for (let i = 0; i < channels; i++) {
        let acc = 0
        let n = 0
        for (let dy = 0; dy < 2; dy++) {
          for (let dx = 0; dx < 2; dx++) {
            const rr = r * 2 + dy
            const cc = c * 2 + dx
            if (rr < input.rows && cc < input.cols) {
              acc += input.data[(rr * input.cols + cc) * channels + i]
              n++
            }
          }
        }
        out[(r * cols + c) * channels + i] = acc / n
      }
    }
  }
  return { rows, cols, channels, data: out }
}

function makeBackbone(name: string, layers: ConvLayer[]): Backbone {
  return {
    name,
    weightsHash: hashLayers(layers),
    stride: 2 ** layers.length,
    extract(image: GrayImage): FeatureMap {
      const scaled = new Float64Array(image.width * image.height)
      for (let i = 0; i < scaled.length; i++) scaled[i] = image.data[i] / 255.0
      let features: FeatureMap = {
        rows: image.height,
        cols: image.width,
        channels: 1,
        data: scaled,
      }
      for (const layer of layers) {
        features = avgPool2(convRelu(features, layer))
      }
      return features
    },
  }
}

/** The shipped deterministic two-stage filter bank (1 -> 8 -> 16 channels,
 *  stride 4). Substitutes for a pretrained network where none is available;
 *  its identity and weight hash go into the sidecar metadata. */
export function builtinBackbone(): Backbone {
  const rand = mulberry32(0xc0ffee)
  const layers = [makeLayer(rand, 8, 1), makeLayer(rand, 16, 8)]
  return makeBackbone('builtin-bank-v1', layers)
}

/** Load external conv weights from JSON: {name, layers: [{weights: ...}]}. */
export function loadBackbone(path: string): Backbone {
  let raw: string
  try {
    raw = readFileSync(path, 'utf-8')
  } catch {
    throw new Error(
      `weights file not found: ${path}. Provide a weights JSON ` +
        `({name, layers: [{weights: [out][in][3][3]}]}) or omit --weights ` +
        `to use the built-in bank.`,
    )
  }
  const doc = JSON.parse(raw) as { name?: string; layers?: ConvLayer[] }
  if (!doc.layers || doc.layers.length === 0) {
    throw new Error(`${path}: no conv layers in weights file`)
  }
  return makeBackbone(doc.name ?? 'external', doc.layers)
}
