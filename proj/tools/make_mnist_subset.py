#!/usr/bin/env python3
"""Write a 5,000-image MNIST training subset in the standard IDX layout.

The images come from the MNIST sample bundled with the `mlxtend` wheel
(5,000 digits from the MNIST training set, 500 per class, stored as CSV).
The rows are sorted by label in that source, so they are permuted with a
fixed seed before writing; otherwise the first 1,000 images would contain
only zeros and ones.

Usage:
    python3 tools/make_mnist_subset.py [--out data/mnist] [--wheel path.whl]

Without --wheel the wheel is fetched with `pip download mlxtend --no-deps`.
"""

import argparse
import glob
import gzip
import random
import struct
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def fetch_wheel(tmp: Path) -> Path:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "mlxtend", "--no-deps", "-d", str(tmp)],
        check=True,
        stdout=subprocess.DEVNULL,
    )
    wheels = glob.glob(str(tmp / "mlxtend-*.whl"))
    if not wheels:
        raise SystemExit("pip download did not produce an mlxtend wheel")
    return Path(wheels[0])


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--wheel", default=None)
    ap.add_argument("--seed", type=int, default=20170801)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as td:
        wheel = Path(args.wheel) if args.wheel else fetch_wheel(Path(td))
        raw = gzip.decompress(zipfile.ZipFile(wheel).read(CSV_MEMBER)).decode()

    rows = []
    for line in raw.splitlines():
        vals = [int(float(v)) for v in line.split(",")]
        if len(vals) != 785:
            raise SystemExit(f"unexpected row width {len(vals)}")
        rows.append((vals[:784], vals[784]))
    random.Random(args.seed).shuffle(rows)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = len(rows)
    with open(out / "train-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for pixels, _ in rows:
            f.write(bytes(pixels))
    with open(out / "train-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(label for _, label in rows))
    print(f"wrote {n} images to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
