#!/usr/bin/env python3
"""Write class-balanced gzip IDX subsets of MNIST and Fashion-MNIST.

usage: make_subsets.py MNIST_IDX_DIR FASHION_JSON_DIR OUT_DIR [TRAIN_PER_CLASS TEST_PER_CLASS]

MNIST_IDX_DIR holds the four raw IDX files. FASHION_JSON_DIR holds 0.json .. 9.json
(one {"data": [[784 bytes], ...]} per class, 6000 training images first, the
1000 test images last).
"""
import gzip
import json
import os
import struct
import sys


def read_idx(path):
    with open(path, "rb") as f:
        raw = f.read()
    magic, count = struct.unpack(">II", raw[:8])
    if magic == 0x803:
        rows, cols = struct.unpack(">II", raw[8:16])
        size = rows * cols
        return [raw[16 + i * size : 16 + (i + 1) * size] for i in range(count)]
    return list(raw[8 : 8 + count])


def write_idx(out_dir, stem, images, labels):
    body = struct.pack(">IIII", 0x803, len(images), 28, 28) + b"".join(bytes(i) for i in images)
    with open(os.path.join(out_dir, f"{stem}-images-idx3-ubyte.gz"), "wb") as f:
        f.write(gzip.compress(body, mtime=0))
    body = struct.pack(">II", 0x801, len(labels)) + bytes(labels)
    with open(os.path.join(out_dir, f"{stem}-labels-idx1-ubyte.gz"), "wb") as f:
        f.write(gzip.compress(body, mtime=0))


def take_balanced(images, labels, per_class):
    seen = [0] * 10
    out_i, out_l = [], []
    for img, lab in zip(images, labels):
        if seen[lab] < per_class:
            seen[lab] += 1
            out_i.append(img)
            out_l.append(lab)
    return out_i, out_l


def interleave(per_class_lists):
    out_i, out_l = [], []
    longest = max(len(v) for v in per_class_lists)
    for k in range(longest):
        for lab, imgs in enumerate(per_class_lists):
            if k < len(imgs):
                out_i.append(imgs[k])
                out_l.append(lab)
    return out_i, out_l


def main():
    mnist_dir, fashion_dir, out = sys.argv[1:4]
    n_train = int(sys.argv[4]) if len(sys.argv) > 4 else 1500
    n_test = int(sys.argv[5]) if len(sys.argv) > 5 else 500

    m_out = os.path.join(out, "mnist")
    os.makedirs(m_out, exist_ok=True)
    for src, stem, n in (("train", "train", n_train), ("t10k", "t10k", n_test)):
        imgs = read_idx(os.path.join(mnist_dir, f"{src}-images-idx3-ubyte"))
        labs = read_idx(os.path.join(mnist_dir, f"{src}-labels-idx1-ubyte"))
        write_idx(m_out, stem, *take_balanced(imgs, labs, n))

    f_out = os.path.join(out, "fashion")
    os.makedirs(f_out, exist_ok=True)
    train, test = [], []
    for lab in range(10):
        with open(os.path.join(fashion_dir, f"{lab}.json")) as f:
            # the upstream class-0 file carries a couple of empty records
            data = [img for img in json.load(f)["data"] if len(img) == 28 * 28]
        train.append(data[:n_train])
        test.append(data[-1000:][:n_test])
    write_idx(f_out, "train", *interleave(train))
    write_idx(f_out, "t10k", *interleave(test))


if __name__ == "__main__":
    main()
