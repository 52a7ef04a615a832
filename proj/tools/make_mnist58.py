#!/usr/bin/env python3
# Copyright 2026 The ATENT Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds the bundled MNIST 5-vs-8 IDX files in data/mnist58/.

Reads the original MNIST IDX files (plain or gzip) and keeps only digits
5 and 8: the first 1000 of each class from the training file, and every
5 and 8 of the test file. Output keeps the original digit labels and
the original record order.

Usage:
  python3 tools/make_mnist58.py --src /path/to/mnist --out data/mnist58

The npm package ``mnist-data`` carries the four original files under
package/data/ if the usual download mirrors are unreachable.
"""

import argparse
import gzip
import os
import struct

import numpy as np

DIGITS = (5, 8)
TRAIN_PER_CLASS = 1000


def read_file(path):
    for candidate in (path, path + ".gz"):
        if os.path.exists(candidate):
            opener = gzip.open if candidate.endswith(".gz") else open
            with opener(candidate, "rb") as f:
                return f.read()
    raise FileNotFoundError(path)


def read_idx(src, prefix):
    images = read_file(os.path.join(src, prefix + "-images-idx3-ubyte"))
    labels = read_file(os.path.join(src, prefix + "-labels-idx1-ubyte"))
    magic, n, rows, cols = struct.unpack(">IIII", images[:16])
    assert magic == 0x803 and rows == 28 and cols == 28
    lmagic, ln = struct.unpack(">II", labels[:8])
    assert lmagic == 0x801 and ln == n
    x = np.frombuffer(images[16:], dtype=np.uint8).reshape(n, rows * cols)
    y = np.frombuffer(labels[8:], dtype=np.uint8)
    return x, y


def write_idx(prefix, images, labels):
    with gzip.GzipFile(prefix + "-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(prefix + "-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--src", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)

    x, y = read_idx(args.src, "train")
    keep = np.zeros(len(y), dtype=bool)
    for d in DIGITS:
        keep[np.flatnonzero(y == d)[:TRAIN_PER_CLASS]] = True
    write_idx(os.path.join(args.out, "train"), x[keep], y[keep])
    print("train", int(keep.sum()))

    x, y = read_idx(args.src, "t10k")
    keep = np.isin(y, DIGITS)
    write_idx(os.path.join(args.out, "t10k"), x[keep], y[keep])
    print("t10k", int(keep.sum()))


if __name__ == "__main__":
    main()
