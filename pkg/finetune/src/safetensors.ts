/**
 * Minimal writer/reader for the de-facto single-file tensor format:
 * an 8-byte little-endian header length, a JSON header mapping tensor
 * names to dtype/shape/byte-ranges, then the raw tensor data.
 */

export interface TensorSpec {
  name: string;
  shape: number[];
  data: Float32Array;
}

interface HeaderEntry {
  dtype: "F32";
  shape: number[];
  data_offsets: [number, number];
}

export function serializeTensors(tensors: TensorSpec[]): Buffer {
  const header: Record<string, HeaderEntry> = {};
  let offset = 0;
  const buffers: Buffer[] = [];
  for (const tensor of tensors) {
    const expected = tensor.shape.reduce((acc, n) => acc * n, 1);
    if (expected !== tensor.data.length) {
      throw new Error(
        `tensor ${tensor.name}: shape ${JSON.stringify(tensor.shape)} does not match ` +
          `${tensor.data.length} values`,
      );
    }
    const bytes = Buffer.from(tensor.data.buffer.slice(
      tensor.data.byteOffset,
      tensor.data.byteOffset + tensor.data.byteLength,
    ));
    header[tensor.name] = {
      dtype: "F32",
      shape: tensor.shape,
      data_offsets: [offset, offset + bytes.length],
    };
    offset += bytes.length;
    buffers.push(bytes);
  }
  const headerJson = Buffer.from(JSON.stringify(header), "utf-8");
  const lengthPrefix = Buffer.alloc(8);
  lengthPrefix.writeBigUInt64LE(BigInt(headerJson.length));
  return Buffer.concat([lengthPrefix, headerJson, ...buffers]);
}

export function parseTensors(buffer: Buffer): Map<string, { shape: number[]; data: Float32Array }> {
  const headerLength = Number(buffer.readBigUInt64LE(0));
  const header = JSON.parse(
    buffer.subarray(8, 8 + headerLength).toString("utf-8"),
  ) as Record<string, HeaderEntry>;
  const dataStart = 8 + headerLength;
  const out = new Map<string, { shape: number[]; data: Float32Array }>();
  for (const [name, entry] of Object.entries(header)) {
    if (name === "__metadata__") {
      continue;
    }
    const [start, end] = entry.data_offsets;
    const slice = buffer.subarray(dataStart + start, dataStart + end);
    const data = new Float32Array(
      slice.buffer.slice(slice.byteOffset, slice.byteOffset + slice.byteLength),
    );
    out.set(name, { shape: entry.shape, data });
  }
  return out;
}
