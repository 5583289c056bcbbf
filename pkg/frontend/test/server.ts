// Spawns the real twin service for integration tests and feeds it
// synthetic measurement documents through the public ingest endpoint.

import { spawn, type ChildProcess } from 'node:child_process';
import type { MeasurementDoc } from '../src/api.js';

export interface RunningServer {
  base: string;
  stop: () => void;
}

export async function startServer(): Promise<RunningServer> {
  const child: ChildProcess = spawn(
    'python3',
    ['-u', '-m', 'metrotwin.cli', 'serve', '--port', '0'],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  const base = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('server did not start')), 30_000);
    let buffer = '';
    child.stdout!.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/serving on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    child.stderr!.on('data', () => {});
    child.on('exit', (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early with code ${code}`));
    });
  });
  return {
    base,
    stop: () => {
      child.kill('SIGTERM');
    },
  };
}

export function recordDoc(i: number, overrides: Partial<MeasurementDoc> = {}): MeasurementDoc {
  const nominal = 50 + (i % 20) * 10;
  const deviation = 0.005 + (i % 7) * 0.003;
  const measured = nominal + deviation;
  return {
    schema_version: 1,
    record_id: `TS-${String(i).padStart(4, '0')}`,
    part_id: `P${String((i % 20) + 1).padStart(2, '0')}`,
    feature_id: `P${String((i % 20) + 1).padStart(2, '0')}-F1`,
    device: i % 2 === 0 ? 'CMM' : 'FaroArm',
    temperature_c: i % 4 < 2 ? 20.1 : 30.2,
    humidity_pct: 50.0,
    nominal_mm: nominal,
    measured_mm: measured,
    deviation_mm: measured - nominal, // float-exact identity
    tolerance_band_mm: 0.05,
    timestamp_utc: new Date(Date.UTC(2025, 0, 6, 8, 0, i % 3600)).toISOString().replace('.000Z', 'Z'),
    operator_id: 'op-01',
    duration_s: 120,
    repetition: 1,
    geometry: ['Cylinder', 'Cube', 'Sphere', 'TurbineBlade', 'GearAssembly'][i % 5],
    ...overrides,
  };
}
