#!/usr/bin/env python3
# Copyright 2026 The qkd Authors
# SPDX-License-Identifier: Apache-2.0
"""Builds the bundled 5k MNIST subset (4000 train / 1000 test, stratified) as
gzipped IDX files from the mnist_5k.csv.gz table shipped in the mlxtend wheel.

usage: make_mnist5k.py MLXTEND_WHEEL OUT_DIR
"""
import gzip
import io
import struct
import sys
import zipfile

import numpy as np


def write_idx(path, array, magic):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in array.shape)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + array.astype(np.uint8).tobytes())


def main():
    wheel, out = sys.argv[1], sys.argv[2]
    raw = gzip.decompress(zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",").astype(np.uint8)
    pixels, labels = table[:, :-1], table[:, -1]
    train, test = [], []
    for c in range(10):
        idx = np.flatnonzero(labels == c)
        train.append(idx[:400])
        test.append(idx[400:])
    # interleave classes so a prefix of the file is still balanced
    train = np.stack(train, axis=1).reshape(-1)
    test = np.stack(test, axis=1).reshape(-1)
    for name, idx in (("train", train), ("t10k", test)):
        write_idx(f"{out}/{name}-images-idx3-ubyte.gz", pixels[idx].reshape(-1, 28, 28), 0x803)
        write_idx(f"{out}/{name}-labels-idx1-ubyte.gz", labels[idx], 0x801)


if __name__ == "__main__":
    main()
