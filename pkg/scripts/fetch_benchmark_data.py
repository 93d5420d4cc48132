#!/usr/bin/env python3
"""Download the a9a and ijcnn1 train/test splits used by the benchmark
reproduction tests into the data/ directory (or $ISOKERNEL_DATA).

Requires network access to www.csie.ntu.edu.tw. Roughly 40 MB on disk.
"""

import bz2
import os
import sys
import urllib.request

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary"

FILES = {
    "a9a": f"{BASE}/a9a",
    "a9a.t": f"{BASE}/a9a.t",
    "ijcnn1": f"{BASE}/ijcnn1.bz2",
    "ijcnn1.t": f"{BASE}/ijcnn1.t.bz2",
}


def fetch(dest_dir):
    os.makedirs(dest_dir, exist_ok=True)
    for name, url in FILES.items():
        dest = os.path.join(dest_dir, name)
        if os.path.exists(dest):
            print(f"{name}: already present")
            continue
        print(f"{name}: downloading {url}")
        raw = urllib.request.urlopen(url, timeout=120).read()
        if url.endswith(".bz2"):
            raw = bz2.decompress(raw)
        with open(dest, "wb") as fh:
            fh.write(raw)
        print(f"{name}: {len(raw) / 1e6:.1f} MB")


if __name__ == "__main__":
    default = os.path.join(os.path.dirname(__file__), "..", "data")
    fetch(sys.argv[1] if len(sys.argv) > 1 else
          os.environ.get("ISOKERNEL_DATA", default))
