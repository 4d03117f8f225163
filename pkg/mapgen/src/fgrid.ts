import { readFileSync, writeFileSync } from 'node:fs'

export interface Fgrid {
  rows: number
  cols: number
  values: Float32Array // row-major, y-down
}

const MAGIC = 'FGRID v1 '

/** ASCII header line `FGRID v1 <rows> <cols>\n` followed by rows*cols
 *  little-endian binary32 values, row-major. */
export function writeFgrid(path: string, rows: number, cols: number, values: Float32Array): void {
  if (values.length !== rows * cols) {
    throw new Error(`payload has ${values.length} values, expected ${rows * cols}`)
  }
  const header = Buffer.from(`${MAGIC}${rows} ${cols}\n`, 'ascii')
  const payload = Buffer.allocUnsafe(values.length * 4)
  for (let i = 0; i < values.length; i++) {
    payload.writeFloatLE(values[i], i * 4)
  }
  writeFileSync(path, Buffer.concat([header, payload]))
}

export function readFgrid(path: string): Fgrid {
  const data = readFileSync(path)
  const magic = Buffer.from(MAGIC, 'ascii')
  if (!data.subarray(0, magic.length).equals(magic)) {
    throw new Error(`${path}: bad magic (byte offset 0)`)
  }
  const newline = data.indexOf(0x0a)
  if (newline < 0) {
    throw new Error(`${path}: unterminated header`)
  }
  const parts = data.subarray(magic.length, newline).toString('ascii').trim().split(/\s+/)
  const rows = Number(parts[0])
  const cols = Number(parts[1])
  if (!Number.isInteger(rows) || !Number.isInteger(cols) || rows < 1 || cols < 1) {
    throw new Error(`${path}: malformed header dimensions`)
  }
  const expected = rows * cols * 4
  const payload = data.subarray(newline + 1)
  if (payload.length !== expected) {
    throw new Error(`${path}: payload is ${payload.length} bytes, expected ${expected}`)
  }
  const values = new Float32Array(rows * cols)
  for (let i = 0; i < values.length; i++) {
    values[i] = payload.readFloatLE(i * 4)
  }
  return { rows, cols, values }
}
