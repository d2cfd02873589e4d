"""Runs the CLI on representative inputs and validates every JSON report against the shipped schemas."""
import json
import pathlib
import subprocess
import sys

import jsonschema

exe = sys.argv[1]
schemas = pathlib.Path(sys.argv[2])

def load(name):
    return json.loads((schemas / f"{name}.v1.schema.json").read_text())

cases = [
    ("analysis", ["analyze", "--model", "sphere", "--param", "gamma=2"]),
    ("analysis", ["analyze", "--model", "brusselator", "--param", "a=1", "--param", "b=2.5", "--at", "1,2"]),
    ("analysis", ["analyze", "--model", "lane-emden", "--param", "n=2.5"]),
    ("analysis", ["analyze", "--model", "brane", "--param", "gamma=-2"]),
    ("analysis", ["analyze", "--model", "dark-energy", "--param", "lambda=2", "--at", "0.3,0.4"]),
    ("analysis", ["analyze", "--du", "v-u", "--dv", "-u", "--at", "0.5,0.5"]),
    ("analysis", ["analyze", "--du", "x*(1-x)-x*y", "--dv", "y*(x-k)", "--param", "k=0.5", "--box", "-0.5,1.5,-0.5,1.5"]),
    ("limit_cycle", ["limit-cycle", "--model", "brusselator", "--param", "a=1", "--param", "b=2.5", "--seed", "1.5,2.0"]),
    ("verify", ["verify", "--json", "--samples", "20"]),
]

failures = 0
for schema, args in cases:
    proc = subprocess.run([exe, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        print(f"FAIL {' '.join(args)}: exit {proc.returncode}: {proc.stderr.strip()}")
        failures += 1
        continue
    try:
        jsonschema.validate(json.loads(proc.stdout), load(schema))
        print(f"ok   {' '.join(args)}")
    except (json.JSONDecodeError, jsonschema.ValidationError) as e:
        print(f"FAIL {' '.join(args)}: {str(e).splitlines()[0]}")
        failures += 1
sys.exit(1 if failures else 0)
