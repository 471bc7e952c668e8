#!/usr/bin/env python3
"""Reduce a `qps multiscale` report to the regression fixture format used by the tests.

    qps multiscale --config c.cfg --out out/
    tools/make_fixture.py out/multiscale.json tests/fixtures/name.json
"""

import json
import sys

KEYS = ["s", "N", "grid_points", "grid_in_domain", "grid_surviving", "excluded",
        "mes_D", "mes_eliminated", "mes_Omega", "mes_E", "compl_D"]


def main(src, dst):
    doc = json.load(open(src))
    rep, cfg = doc["report"], doc["config"]
    fx = {
        "description": "recorded multiscale run; regenerate with qps multiscale and tools/make_fixture.py",
        "lambda": float(cfg["lambda"]),
        "x_grid": int(cfg["x_grid"]),
        "omega_grid": int(cfg["omega_grid"]),
        "schedule": rep["schedule"],
        "states": [{k: s[k] for k in KEYS} for s in rep["states"]],
        "all_pass": rep["all_pass"],
        "first_failure": rep["first_failure"],
        "h1_violations": next(a["violations"] for a in rep["states"][0]["audits"] if a["name"] == "h1_decay"),
    }
    with open(dst, "w") as out:
        json.dump(fx, out, indent=2)
        out.write("\n")


if __name__ == "__main__":
    main(*sys.argv[1:3])
