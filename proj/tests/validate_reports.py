#!/usr/bin/env python3
"""Validates example problems and emitted reports against the shipped schemas."""

import json
import pathlib
import subprocess
import sys

import jsonschema
from referencing import Registry, Resource

exe, docs = sys.argv[1], pathlib.Path(sys.argv[2])
problem_schema = json.loads((docs / "problem.schema.json").read_text())
report_schema = json.loads((docs / "report.schema.json").read_text())
registry = Registry().with_resource("problem.schema.json", Resource.from_contents(problem_schema))
problem_validator = jsonschema.Draft202012Validator(problem_schema)
report_validator = jsonschema.Draft202012Validator(report_schema, registry=registry)

runs = {
    "solve_unique.json": [("solve", [], 0), ("distance", [], 0)],
    "solve_none.json": [("solve", [], 1), ("member", [], 1)],
    "member_szego.json": [("member", [], 0), ("boundary", [], 0), ("recognize", [], 0)],
    "extremal_diagonal.json": [("extremal", ["--samples", "20"], 0), ("recognize", [], 1)],
    "recognize_szego.json": [("recognize", [], 0), ("extremal", ["--samples", "10"], 0)],
    "theorem2_disc.json": [("verify", ["--theorem", t], 0) for t in ("1", "2", "3", "4", "lemmas")],
    "bidisc_member.json": [("member", [], 0), ("verify", ["--theorem", "1", "--samples", "20"], 0)],
    "bidisc_distance.json": [("distance", [], 0), ("verify", ["--theorem", "3", "--samples", "2"], 0)],
}

failures = 0


def fail(msg):
    global failures
    failures += 1
    print("FAIL:", msg)


def strip_timing(report):
    report = dict(report)
    report.pop("timing", None)
    return report


for name, commands in runs.items():
    path = docs / "examples" / name
    try:
        problem_validator.validate(json.loads(path.read_text()))
    except jsonschema.ValidationError as e:
        fail(f"{name}: problem schema: {e.message}")
    for command, extra, expected in commands:
        argv = [exe, command, "--in", str(path), *extra]
        outputs = []
        for _ in range(2):
            proc = subprocess.run(argv, capture_output=True, text=True)
            if proc.returncode != expected:
                fail(f"{name} {command}: exit {proc.returncode}, expected {expected}: {proc.stderr}")
            outputs.append(proc.stdout)
        try:
            reports = [json.loads(o) for o in outputs]
        except json.JSONDecodeError as e:
            fail(f"{name} {command}: report does not parse: {e}")
            continue
        try:
            report_validator.validate(reports[0])
        except jsonschema.ValidationError as e:
            fail(f"{name} {command}: report schema: {e.message}")
        if strip_timing(reports[0]) != strip_timing(reports[1]):
            fail(f"{name} {command}: reports differ between runs")
        if json.loads(json.dumps(reports[0])) != reports[0]:
            fail(f"{name} {command}: report does not round-trip")
        csv = subprocess.run(argv + ["--format", "csv"], capture_output=True, text=True).stdout.splitlines()
        if not csv or csv[0] != "command,instance-id,verdict,residual,seed" or len(csv) < 2:
            fail(f"{name} {command}: bad CSV report")
        print(f"ok  {name} {command} {' '.join(extra)}".rstrip())

print("schema validation:", "PASS" if failures == 0 else f"FAIL ({failures})")
sys.exit(1 if failures else 0)
