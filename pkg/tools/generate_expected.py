"""Regenerate ``expected.json`` for every fixture scenario from the reference oracle.

Usage: python3 tools/generate_expected.py [--check]
"""

from __future__ import annotations

import argparse
import sys

import reference


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--check", action="store_true",
                        help="compare with the checked-in files instead of writing them")
    args = parser.parse_args(argv)
    manifest = reference.load_manifest()
    stale = 0
    for entry in manifest["entries"]:
        if entry["kind"] != "expected-decisions":
            continue
        path = reference.FIXTURES / entry["path"]
        text = reference.dumps(reference.expected_decisions(entry["scenario"]))
        if args.check:
            current = path.read_text(encoding="utf-8") if path.exists() else None
            if current != text:
                print(f"stale: {entry['path']}", file=sys.stderr)
                stale += 1
        else:
            path.write_text(text, encoding="utf-8")
            print(f"wrote {entry['path']}")
    return 1 if stale else 0


if __name__ == "__main__":
    sys.exit(main())
