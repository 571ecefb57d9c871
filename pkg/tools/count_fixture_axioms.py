"""Count classes and axioms of the bundled fixture stack and update the manifest snapshot.

Scenario-specific ontologies are excluded. Usage:
python3 tools/count_fixture_axioms.py [--check]
"""

from __future__ import annotations

import argparse
import json
import sys

import reference


def counts() -> dict:
    kb = reference.load_stack()
    return {"axioms": len(kb.axiom_set()), "classes": len(kb.classes),
            "individuals": len(kb.individuals)}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--check", action="store_true",
                        help="exit 1 if the manifest snapshot differs")
    args = parser.parse_args(argv)
    path = reference.FIXTURES / "manifest.json"
    manifest = json.loads(path.read_text(encoding="utf-8"))
    snapshot = counts()
    if args.check:
        if manifest.get("snapshot") != snapshot:
            print(f"snapshot {manifest.get('snapshot')} != counted {snapshot}", file=sys.stderr)
            return 1
        return 0
    manifest["snapshot"] = snapshot
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(snapshot))
    return 0


if __name__ == "__main__":
    sys.exit(main())
