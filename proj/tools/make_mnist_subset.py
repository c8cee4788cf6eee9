#!/usr/bin/env python3
"""Write the 5000-image MNIST subset bundled with mlxtend as IDX files.

The subset holds 500 training images per digit. Usage:

    pip download --no-deps mlxtend -d /tmp/mlxtend
    python3 tools/make_mnist_subset.py /tmp/mlxtend/mlxtend-*.whl data/mnist5k
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    wheel, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as zf:
        text = gzip.decompress(zf.read(MEMBER)).decode()

    pixels = bytearray()
    labels = bytearray()
    count = 0
    for line in io.StringIO(text):
        cells = line.strip().split(",")
        if len(cells) != 785:
            continue
        pixels.extend(int(float(c)) for c in cells[:784])
        labels.append(int(float(cells[784])))
        count += 1

    with open(out_dir / "train-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, count, 28, 28))
        f.write(pixels)
    with open(out_dir / "train-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, count))
        f.write(labels)
    print(f"wrote {count} images to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
