#!/usr/bin/env python3
"""Build the desk-scale MNIST fixture in IDX format.

Source: npm package `mnist` 1.1.0, src/digits/<k>.json, which redistributes
10000 digits of the original MNIST database as pixel/255 floats. The digits are
shuffled with a fixed seed; the first 8000 become the training file and the
remaining 2000 the test file. Output files are gzipped IDX files with the
official magic numbers.

usage: build_mnist_desk.py <npm_mnist_package_dir> <out_dir>
"""
import gzip
import json
import os
import struct
import sys

import numpy as np


def write_idx_images(path, images):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    npm_dir, out = sys.argv[1:3]
    images, labels = [], []
    for digit in range(10):
        with open(os.path.join(npm_dir, "src", "digits", f"{digit}.json")) as f:
            raw = np.asarray(json.load(f)["data"], dtype=np.float64)
        px = np.rint(raw * 255.0).astype(np.uint8).reshape(-1, 784)
        images.append(px)
        labels.append(np.full(len(px), digit, dtype=np.uint8))
    train_x = np.concatenate(images)
    train_y = np.concatenate(labels)
    order = np.random.default_rng(20190101).permutation(len(train_x))
    all_x, all_y = train_x[order], train_y[order]
    train_x, train_y = all_x[:8000], all_y[:8000]
    test_x, test_y = all_x[8000:], all_y[8000:]

    os.makedirs(out, exist_ok=True)
    write_idx_images(os.path.join(out, "train-images-idx3-ubyte.gz"), train_x)
    write_idx_labels(os.path.join(out, "train-labels-idx1-ubyte.gz"), train_y)
    write_idx_images(os.path.join(out, "t10k-images-idx3-ubyte.gz"), test_x)
    write_idx_labels(os.path.join(out, "t10k-labels-idx1-ubyte.gz"), test_y)
    print(f"train {len(train_x)}  test {len(test_x)}")
    print("train class counts", np.bincount(train_y, minlength=10).tolist())
    print("test class counts", np.bincount(test_y, minlength=10).tolist())


if __name__ == "__main__":
    main()
