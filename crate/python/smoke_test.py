"""Smoke test for the Python extension.

Build it first:

    cargo build --release -p weil-shintani-py --features extension-module

then run `python3 python/smoke_test.py`. Set WEIL_SHINTANI_LIB to load a library
from another location.
"""

import importlib.machinery
import importlib.util
import json
import os
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    candidates = [os.environ.get("WEIL_SHINTANI_LIB")] + [
        str(ROOT / "target" / profile / name)
        for profile in ("release", "debug")
        for name in ("libweil_shintani_py.so", "libweil_shintani_py.dylib", "weil_shintani_py.dll")
    ]
    for path in filter(None, candidates):
        if os.path.exists(path):
            loader = importlib.machinery.ExtensionFileLoader("weil_shintani_py", path)
            spec = importlib.util.spec_from_file_location("weil_shintani_py", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("extension not built; see the module docstring")


def main():
    ws = load()

    t = ws.Tower(3, 1, 2)
    assert (t.p, t.base_degree, t.rel_degree) == (3, 1, 2)

    rep = ws.WeilRep(t, 1, 1)
    assert rep.dim == 3
    identity = [[1, 0], [0, 1]]
    assert rep.trace(identity) == "3/1,0/1"
    re, im = ws.approximate(3, rep.trace([[1, 1], [0, 1]]))
    assert abs(re * re + im * im - 3.0) < 1e-9

    assert ws.gyoja_norm(t, 1, identity) == ws.gyoja_norm(t, 0, identity)

    report = json.loads(ws.run("star", json.dumps({"m": 2, "sample": "30", "seed": 5})))
    assert report["summary"] == {"pass": 30, "fail": 0}, report["summary"]

    try:
        ws.Tower(4)
    except ValueError:
        pass
    else:
        raise AssertionError("composite characteristic accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
