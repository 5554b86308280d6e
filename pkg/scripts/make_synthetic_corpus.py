"""Regenerate the bundled synthetic corpus (manifest plus 16 kHz WAV clips)."""

from __future__ import annotations

import argparse
from pathlib import Path

from speechcue.synthetic import write_corpus

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "data" / "synthetic"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    manifest = write_corpus(args.out, args.seed)
    print(f"wrote {manifest}")


if __name__ == "__main__":
    main()
