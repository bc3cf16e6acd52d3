#!/usr/bin/env python3
"""Build gzipped MNIST IDX files from the digit JSON shipped in the `mnist`
npm package (10,000 images, pixel values divided by 255).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_from_npm.py package/src/digits data/mnist

Each digit's images are split in order: the first 80% go to the train
files, the rest to the t10k files.
"""
import gzip
import json
import struct
import sys
from pathlib import Path

TRAIN_FRACTION = 0.8


def write(path, magic, dims, body):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(bytes(body))


def main(src, out):
    src, out = Path(src), Path(out)
    out.mkdir(parents=True, exist_ok=True)
    parts = {"train": ([], []), "t10k": ([], [])}
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        n = len(data) // 784
        cut = round(TRAIN_FRACTION * n)
        for i in range(n):
            pixels = [round(v * 255) for v in data[784 * i : 784 * (i + 1)]]
            images, labels = parts["train" if i < cut else "t10k"]
            images.append(pixels)
            labels.append(digit)
    for name, (images, labels) in parts.items():
        body = [p for img in images for p in img]
        write(out / f"{name}-images-idx3-ubyte.gz", 0x803, [len(images), 28, 28], body)
        write(out / f"{name}-labels-idx1-ubyte.gz", 0x801, [len(labels)], labels)
        print(f"{name}: {len(labels)} images")


if __name__ == "__main__":
    main(*sys.argv[1:3])
