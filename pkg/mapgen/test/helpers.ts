import { mkdtempSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'

export function makeTmpDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix))
}

export function writePgm(path: string, rows: number, cols: number, pixels: Uint8Array): void {
  const header = Buffer.from(`P5\n${cols} ${rows}\n255\n`, 'ascii')
  writeFileSync(path, Buffer.concat([header, Buffer.from(pixels)]))
}

/** Deterministic LCG so fixtures are reproducible across runs. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0
  return () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0
    return state / 4294967296
  }
}

export function randomPatch(rand: () => number, rows: number, cols: number): Uint8Array {
  const out = new Uint8Array(rows * cols)
  for (let i = 0; i < out.length; i++) {
    out[i] = 30 + Math.floor(rand() * 190)
  }
  return out
}

export function pasteIntoBlank(
  size: number,
  patch: Uint8Array,
  patchRows: number,
  patchCols: number,
  top: number,
  left: number,
): Uint8Array {
  const out = new Uint8Array(size * size)
  for (let r = 0; r < patchRows; r++) {
    for (let c = 0; c < patchCols; c++) {
      out[(top + r) * size + (left + c)] = patch[r * patchCols + c]
    }
  }
  return out
}
