#!/usr/bin/env node
/**
 * Exporter command line.
 *
 *   export     --corpus <file> --model <file> [--layers last4|layer:<k>]
 *              [--pool mean] --out <file>
 *   init-model --dim <n> --layers <n> [--seed <n>] --out <file>
 */

import { runExport } from './export';
import { writeModel } from './encoder';

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`--${name} is required`);
  return value;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === 'export') {
      const flags = parseFlags(rest);
      const result = runExport({
        corpusPath: need(flags, 'corpus'),
        modelPath: need(flags, 'model'),
        layerPolicy: flags.get('layers') ?? 'last4',
        pooling: (flags.get('pool') ?? 'mean') as 'mean',
        outPath: need(flags, 'out'),
      });
      console.log(
        `wrote ${result.written} sentences (dim ${result.dim}), ` +
          `skipped ${result.skipped.length}`,
      );
      return 0;
    }
    if (command === 'init-model') {
      const flags = parseFlags(rest);
      writeModel(
        need(flags, 'out'),
        Number(need(flags, 'dim')),
        Number(need(flags, 'layers')),
        Number(flags.get('seed') ?? '0'),
      );
      return 0;
    }
    console.error('usage: cli.js <export|init-model> [flags]');
    return 1;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

if (require.main === module) {
  process.exitCode = main(process.argv.slice(2));
}
