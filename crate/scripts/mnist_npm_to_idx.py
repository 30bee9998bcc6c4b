#!/usr/bin/env python3
"""Convert the digits bundled in the npm `mnist` package into idx files.

The npm package (https://registry.npmjs.org/mnist/-/mnist-1.1.0.tgz) ships
roughly 10k MNIST digits as per-digit JSON arrays of pixel intensities in
[0, 1], rounded to three decimals. This script writes them back out as a
standard idx3 image file and idx1 label file (big-endian, magic 2051/2049)
so the Rust loader can read them.

usage: mnist_npm_to_idx.py <mnist-x.y.z.tgz> <out-dir>
"""
import json
import struct
import sys
import tarfile
from pathlib import Path


def main() -> None:
    tgz, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    images, labels = bytearray(), bytearray()
    with tarfile.open(tgz) as tar:
        for digit in range(10):
            member = tar.extractfile(f"package/src/digits/{digit}.json")
            data = json.load(member)["data"]
            assert len(data) % 784 == 0
            images.extend(min(255, max(0, round(v * 255))) for v in data)
            labels.extend([digit] * (len(data) // 784))
    n = len(labels)
    (out / "images-idx3-ubyte").write_bytes(struct.pack(">IIII", 2051, n, 28, 28) + bytes(images))
    (out / "labels-idx1-ubyte").write_bytes(struct.pack(">II", 2049, n) + bytes(labels))
    print(f"wrote {n} digits to {out}")


if __name__ == "__main__":
    main()
