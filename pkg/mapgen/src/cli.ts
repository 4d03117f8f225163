#!/usr/bin/env node
import { realpathSync, writeFileSync } from 'node:fs'
import { fileURLToPath } from 'node:url'
import { builtinBackbone, loadBackbone, type Backbone } from './backbone.js'
import { writeFgrid } from './fgrid.js'
import { readImage } from './image.js'
import { attentionMap, saliencyMap } from './maps.js'

export interface MapRequest {
  kind: 'attention' | 'saliency_prior'
  image: string
  template?: string
  out: string
  weights?: string
}

const USAGE =
  'usage: mapgen --kind {attention|saliency_prior} --image P [--template Q] --out R [--weights W]'

export function parseArgs(argv: string[]): MapRequest {
  const opts: Record<string, string> = {}
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    const value = argv[i + 1]
    if (!key.startsWith('--') || value === undefined) {
      throw new Error(USAGE)
    }
    opts[key.slice(2)] = value
  }
  const kind = opts['kind']
  if (kind !== 'attention' && kind !== 'saliency_prior') {
    throw new Error(`--kind must be attention or saliency_prior. ${USAGE}`)
  }
  if (!opts['image'] || !opts['out']) {
    throw new Error(USAGE)
  }
  if (kind === 'attention' && !opts['template']) {
    throw new Error('--kind attention requires --template')
  }
  return {
    kind,
    image: opts['image'],
    template: opts['template'],
    out: opts['out'],
    weights: opts['weights'],
  }
}

function writeSidecar(outPath: string, meta: Record<string, unknown>): void {
  const ordered = Object.fromEntries(Object.entries(meta).sort(([a], [b]) => (a < b ? -1 : 1)))
  writeFileSync(`${outPath}.meta.json`, JSON.stringify(ordered, null, 2) + '\n')
}

export function generate(req: MapRequest): void {
  const image = readImage(req.image)
  if (req.kind === 'attention') {
    const backbone: Backbone = req.weights ? loadBackbone(req.weights) : builtinBackbone()
    const target = readImage(req.template!)
    const att = attentionMap(image, target, backbone)
    writeFgrid(req.out, image.height, image.width, Float32Array.from(att))
    writeSidecar(req.out, {
      kind: 'attention',
      backbone: backbone.name,
      weights_hash: backbone.weightsHash,
      interpolation: 'bilinear',
      feature_stride: backbone.stride,
      fallback: req.weights === undefined,
    })
    return
  }
  const sal = saliencyMap(image)
  writeFgrid(req.out, image.height, image.width, Float32Array.from(sal))
  writeSidecar(req.out, {
    kind: 'saliency_prior',
    backbone: 'contrast-center-v1',
    interpolation: 'bilinear',
    // No reference saliency network ships with this tool; the documented
    // fallback (local contrast with center bias) is always flagged.
    fallback: true,
  })
}

export function main(argv: string[]): number {
  try {
    generate(parseArgs(argv))
    return 0
  } catch (err) {
    console.error(`mapgen: ${err instanceof Error ? err.message : String(err)}`)
    return 1
  }
}

function invokedDirectly(): boolean {
  if (process.argv[1] === undefined) return false
  try {
    return fileURLToPath(import.meta.url) === realpathSync(process.argv[1])
  } catch {
    return false
  }
}

if (invokedDirectly()) {
  process.exit(main(process.argv.slice(2)))
}
