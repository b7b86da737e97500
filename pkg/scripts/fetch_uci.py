#!/usr/bin/env python3
"""Download the four UCI benchmark datasets (LIBSVM text format) into data/.

Usage: python scripts/fetch_uci.py [target_dir]

Requires outbound network access to the LIBSVM dataset mirror. The acceptance
suite looks for these files under MLLKM_DATA_DIR (default: <repo>/data).
"""

import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary"

DATASETS = {
    "ionosphere_scale": (351, 34),
    "sonar_scale": (208, 60),
    "heart_scale": (270, 13),
    "diabetes_scale": (768, 8),
}


def fetch(name, target):
    url = f"{BASE}/{name}"
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        target.write_bytes(resp.read())


def main():
    target_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"
    target_dir.mkdir(parents=True, exist_ok=True)
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
    from mllkm.data import load_libsvm

    failures = 0
    for name, (n, d) in DATASETS.items():
        path = target_dir / name
        if not path.exists():
            try:
                fetch(name, path)
            except OSError as exc:
                print(f"  FAILED: {exc}")
                failures += 1
                continue
        ds = load_libsvm(path)
        status = "ok" if (ds.n, ds.dim) == (n, d) else f"UNEXPECTED SHAPE {(ds.n, ds.dim)}"
        print(f"  {name}: {ds.n} x {ds.dim} [{status}]")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
