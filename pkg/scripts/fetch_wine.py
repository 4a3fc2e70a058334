"""Download the UCI white-wine quality file (the only networked step).

    python scripts/fetch_wine.py [destination]

Default destination: data/winequality-white.csv. The file is ';'-separated
with a header row and the output column "quality".
"""

import hashlib
import sys
import urllib.request
from pathlib import Path

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/wine-quality/winequality-white.csv"
EXPECTED_ROWS = 4898


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    dest = Path(argv[0]) if argv else Path("data/winequality-white.csv")
    dest.parent.mkdir(parents=True, exist_ok=True)
    with urllib.request.urlopen(URL, timeout=60) as resp:
        payload = resp.read()
    rows = payload.decode("utf-8").strip().splitlines()
    if len(rows) - 1 != EXPECTED_ROWS:
        print(f"unexpected row count {len(rows) - 1} (expected {EXPECTED_ROWS})", file=sys.stderr)
        return 1
    tmp = dest.with_suffix(".part")
    tmp.write_bytes(payload)
    tmp.replace(dest)
    print(f"wrote {dest} ({len(payload)} bytes, sha256 {hashlib.sha256(payload).hexdigest()})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
