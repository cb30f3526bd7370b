#!/usr/bin/env python3
"""Builds data/dataset.jsonl from data/games/*.gdl and data/queries.json.

Each record gets the minimal grammar computed by `gdlgen grammar-extract`.
Usage: tools/build_dataset.py <gdlgen-binary> [repo-root]
"""
import json
import pathlib
import subprocess
import sys


def main() -> int:
    binary = sys.argv[1]
    root = pathlib.Path(sys.argv[2] if len(sys.argv) > 2 else ".")
    grammar = root / "data" / "grammar" / "gdl.bnf"
    queries = json.loads((root / "data" / "queries.json").read_text())
    lines = []
    for entry in queries:
        game = root / "data" / "games" / f"{entry['id']}.gdl"
        description = " ".join(game.read_text().split())
        minimal = subprocess.run([binary, "grammar-extract", str(grammar), str(game)],
                                 check=True, capture_output=True, text=True).stdout
        record = {
            "id": entry["id"],
            "category": entry["category"],
            "query": f"Description: {entry['description']}\nRules: {entry['rules']}",
            "description": description,
            "grammar": minimal,
        }
        lines.append(json.dumps(record, ensure_ascii=False))
    (root / "data" / "dataset.jsonl").write_text("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
