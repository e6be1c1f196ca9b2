"""Download the monthly international airline passenger totals (1949-1960).

This is the classic Box & Jenkins series G, 144 monthly values. The package does
not ship it; the copy under tests/data is a test fixture only.

    python3 scripts/fetch_airline.py airline.csv
"""

import argparse
import csv
import io
import sys
import urllib.request

URL = "https://raw.githubusercontent.com/jbrownlee/Datasets/master/airline-passengers.csv"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", help="destination CSV (month,passengers)")
    ap.add_argument("--url", default=URL)
    args = ap.parse_args(argv)

    with urllib.request.urlopen(args.url, timeout=30) as resp:
        text = resp.read().decode("utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if len(r) == 2]
    body = [(m, int(v)) for m, v in rows[1:]]
    if len(body) != 144:
        sys.exit(f"expected 144 monthly values, got {len(body)}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["month", "passengers"])
        w.writerows(body)
    print(f"wrote {len(body)} rows to {args.out}")


if __name__ == "__main__":
    main()
