#!/usr/bin/env python3
"""Write a class-balanced MNIST subset in IDX format.

The source is the 5000-image MNIST sample bundled inside the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz: 784 pixel columns then the label). The
wheel is fetched with `pip download` when no path is given.

    python3 scripts/make_mnist_subset.py --per-class 100 --out data/mnist-1k
"""
import argparse
import glob
import gzip
import io
import os
import struct
import subprocess
import tempfile
import zipfile

import numpy as np


def find_wheel(path):
    if path:
        return path
    tmp = tempfile.mkdtemp()
    subprocess.check_call(["pip", "download", "--no-deps", "mlxtend==0.24.0", "-d", tmp])
    return glob.glob(os.path.join(tmp, "mlxtend-*.whl"))[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", default=None)
    ap.add_argument("--per-class", type=int, default=100)
    ap.add_argument("--out", default="data/mnist-1k")
    args = ap.parse_args()

    with zipfile.ZipFile(find_wheel(args.wheel)) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    labels = table[:, -1]
    # first `per_class` images of each digit, kept in source order
    keep = np.sort(np.concatenate(
        [np.flatnonzero(labels == c)[: args.per_class] for c in range(10)]))
    images = table[keep, :784].astype(np.uint8)
    labels = labels[keep].astype(np.uint8)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "train-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.tobytes())
    with open(os.path.join(args.out, "train-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.tobytes())
    print(f"wrote {len(images)} images to {args.out}")


if __name__ == "__main__":
    main()
