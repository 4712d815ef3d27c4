#!/usr/bin/env python3
"""Runs every CLI subcommand on a small instance and validates its JSON against schemas/."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main() -> int:
    cli, schema_dir = Path(sys.argv[1]), Path(sys.argv[2])
    schemas = {p.name.split(".")[0]: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    for s in schemas.values():
        jsonschema.Draft202012Validator.check_schema(s)
    checked = 0

    def check(name, doc):
        nonlocal checked
        jsonschema.validate(doc, schemas[name])
        checked += 1

    def run(*args, ok=(0,)):
        p = subprocess.run([str(cli), *map(str, args)], capture_output=True, text=True)
        if p.returncode not in ok:
            raise SystemExit(f"{args[0]} exited {p.returncode}: {p.stderr}")
        return p

    with tempfile.TemporaryDirectory() as tmp:
        t = Path(tmp)
        run("generate", "--q-star", 4, "--q-tilde", 4, "--n-per", 100, "--c", 8, "--eps", "3/10",
            "--seed", 5, "--out", t / "g")
        check("graph", json.loads((t / "g/graph.json").read_text()))
        check("manifest", json.loads((t / "g/manifest.json").read_text()))

        run("detect", "--edges", t / "g/edges.txt", "--attributes", t / "g/attributes.csv", "--q", 4,
            "--tau-max", 3, "--out", t / "d", ok=(0, 4))
        check("result", json.loads((t / "d/result.json").read_text()))
        check("manifest", json.loads((t / "d/manifest.json").read_text()))

        run("eval", "--labels", t / "d/labels.txt", "--truth", t / "g/truth.txt",
            "--edges", t / "g/edges.txt", "--out", t / "e/eval.json")
        check("eval", json.loads((t / "e/eval.json").read_text()))
        check("manifest", json.loads((t / "e/eval.json.manifest.json").read_text()))

        run("confusion", "--labels", t / "d/labels.txt", "--truth", t / "g/truth.txt",
            "--divisor", 100, "--out", t / "cm.csv")
        check("manifest", json.loads((t / "cm.csv.manifest.json").read_text()))

        check("threshold", json.loads(run("threshold", "--eps", "11/24").stdout))
        check("threshold", json.loads(run("threshold", "--gamma", 1).stdout))

        run("sweep", "--eps-steps", 3, "--gamma-steps", 2, "--out", t / "sweep.csv")
        check("manifest", json.loads((t / "sweep.csv.manifest.json").read_text()))

        run("reproduce-table2", "--seeds", 1, "--n-per", 100, "--max-sweeps", 20,
            "--out", t / "t2", ok=(0, 4))
        check("table2", json.loads((t / "t2/table2.json").read_text()))
        check("manifest", json.loads((t / "t2/manifest.json").read_text()))

        bad = run("detect", "--edges", t / "g/edges.txt", "--attributes", t / "g/attributes.csv",
                  "--out", t / "x", ok=(2,))
        check("error", json.loads(bad.stderr.strip().splitlines()[-1]))
        bad = run("eval", "--labels", t / "g/edges.txt", "--truth", t / "g/truth.txt", ok=(3,))
        check("error", json.loads(bad.stderr.strip().splitlines()[-1]))

    print(f"{checked} documents valid")
    return 0


if __name__ == "__main__":
    sys.exit(main())
