import { readFileSync } from 'node:fs'
import { PNG } from 'pngjs'

export interface GrayImage {
  width: number
  height: number
  /** luminance plane in [0, 255], row-major */
  data: Float64Array
}

// Same luminance weights the downstream engine uses.
const R_W = 0.2125
const G_W = 0.7154
const B_W = 0.0721

export function readImage(path: string): GrayImage {
  const bytes = readFileSync(path)
  if (bytes.length >= 2 && bytes[0] === 0x50 && bytes[1] === 0x35) {
    return parsePgm(bytes, path)
  }
  if (bytes.length >= 8 && bytes[0] === 0x89 && bytes[1] === 0x50) {
    return parsePng(bytes, path)
  }
  throw new Error(`${path}: unsupported image format (need binary PGM or PNG)`)
}

function parsePng(bytes: Buffer, path: string): GrayImage {
  const png = PNG.sync.read(bytes)
  // pngjs normalizes supported inputs to 8-bit RGBA.
  const data = new Float64Array(png.width * png.height)
  for (let i = 0; i < data.length; i++) {
    const o = i * 4
    data[i] = R_W * png.data[o] + G_W * png.data[o + 1] + B_W * png.data[o + 2]
  }
  return { width: png.width, height: png.height, data }
}

function parsePgm(bytes: Buffer, path: string): GrayImage {
  // P5 <width> <height> <maxval> with #-comments allowed between tokens.
  let pos = 2
  const tokens: number[] = []
  while (tokens.length < 3) {
    while (pos < bytes.length && isSpace(bytes[pos])) pos++
    if (bytes[pos] === 0x23) {
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++
      continue
    }
    let start = pos
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++
    tokens.push(Number(bytes.subarray(start, pos).toString('ascii')))
  }
  pos++ // single whitespace after maxval
  const [width, height, maxval] = tokens
  if (!(width > 0 && height > 0)) {
    throw new Error(`${path}: malformed PGM header`)
  }
  if (maxval > 255) {
    throw new Error(`${path}: unsupported bit depth (maxval ${maxval})`)
  }
  if (bytes.length - pos < width * height) {
    throw new Error(`${path}: truncated PGM payload`)
  }
  const data = new Float64Array(width * height)
  for (let i = 0; i < data.length; i++) {
    data[i] = bytes[pos + i]
  }
  return { width, height, data }
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d
}
