#!/usr/bin/env python3
"""Builds the aosabc_py extension module and exercises every binding.

Run from anywhere:

    python3 python/smoke_test.py

The script compiles the extension with cargo, copies the shared library into
a temporary directory under the importable name, and asserts on solver,
instance, model and statistics behaviour. It ends with one line of output on
success and a traceback on failure.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension(workdir: Path) -> None:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "aosabc-py"],
        cwd=ROOT,
        check=True,
    )
    release = ROOT / "target" / "release"
    for name in ("libaosabc_py.so", "libaosabc_py.dylib", "aosabc_py.dll"):
        built = release / name
        if built.exists():
            shutil.copy(built, workdir / "aosabc_py.so")
            return
    raise FileNotFoundError(f"no aosabc_py shared library under {release}")


def check_onemax(aosabc_py) -> None:
    result = aosabc_py.solve_onemax(200, seed=3, iterations=120)
    assert result.instance_id == "onemax_200"
    assert result.seed == 3
    assert 0 < result.best_fitness <= 200
    assert len(result.best_solution) == 200
    assert set(result.best_solution) <= {"0", "1"}
    assert result.best_solution.count("1") == int(result.best_fitness)

    curve = result.best_curve()
    assert len(curve) == 120
    assert all(a <= b for a, b in zip(curve, curve[1:])), "best curve must be monotone"
    assert curve[-1] == result.best_fitness

    usage = result.op_usage()
    assert sorted(usage) == ["flip", "ibin", "n", "nb"]
    assert sum(usage.values()) == 2 * 20 * 120, "one selection per employed and onlooker event"

    again = aosabc_py.solve_onemax(200, seed=3, iterations=120)
    assert again.best_fitness == result.best_fitness
    assert again.best_solution == result.best_solution, "same seed, same run"


def check_sukp(aosabc_py, workdir: Path) -> None:
    inst = aosabc_py.SukpInstance.generate(12, 10, 0.3, 0.75, 7)
    assert inst.m == 12 and inst.n == 10 and inst.capacity > 0

    # Text round trip preserves the whole instance.
    clone = aosabc_py.SukpInstance.from_text(inst.to_text())
    assert clone.to_text() == inst.to_text()
    path = workdir / "instance.sukp"
    inst.save(path)
    assert aosabc_py.SukpInstance.load(path).to_text() == inst.to_text()

    # Repair always produces a feasible selection.
    repaired, profit = inst.evaluate("1" * 12)
    assert inst.union_weight(repaired) <= inst.capacity + 1e-9
    assert math.isclose(profit, inst.profit(repaired))
    assert inst.repair("1" * 12) == repaired

    # The solver stays within the enumerated optimum and gets close to it.
    _, optimum = inst.enumerate_optimum()
    result = aosabc_py.solve_sukp(inst, seed=2)
    assert result.best_fitness <= optimum + 1e-9
    assert result.best_fitness >= 0.9 * optimum
    assert inst.union_weight(result.best_solution) <= inst.capacity + 1e-9

    big = aosabc_py.SukpInstance.generate(30, 10, 0.3, 0.75, 7)
    try:
        big.enumerate_optimum()
        raise AssertionError("enumeration over 25 items should be refused")
    except ValueError:
        pass


def check_models(aosabc_py, workdir: Path) -> None:
    model = aosabc_py.Model()
    assert model.sections == 5
    assert model.feature_dim == 19
    assert model.entry_count == 20
    assert model.trained_on == "" and model.episodes == 0

    before = model.op_stats()
    assert sum(u for (u, _, _, _) in before.values()) == 0
    aosabc_py.solve_onemax(150, seed=4, iterations=80, model=model)
    after = model.op_stats()
    assert sum(u for (u, _, _, _) in after.values()) == 2 * 20 * 80, "training fills the counters"

    frozen_total = sum(u for (u, _, _, _) in after.values())
    aosabc_py.solve_onemax(150, seed=5, iterations=40, model=model, training=False)
    unchanged = sum(u for (u, _, _, _) in model.op_stats().values())
    assert unchanged == frozen_total, "training=False must freeze the model"

    path = workdir / "model.aos"
    model.save(path)
    loaded = aosabc_py.Model.load(path)
    assert loaded.sections == 5
    assert loaded.trained_on == "untrained"
    assert loaded.op_stats() == after, "archives round-trip exactly"

    fresh = aosabc_py.Model()
    halfway = model.blend(fresh, 0.5)
    model_q = {op: q for op, (_, _, _, q) in model.op_stats().items()}
    half_q = {op: q for op, (_, _, _, q) in halfway.op_stats().items()}
    for op, q in model_q.items():
        assert math.isclose(half_q[op], q / 2, rel_tol=1e-12, abs_tol=1e-12)

    try:
        aosabc_py.Model(0)
        raise AssertionError("zero sections should be rejected")
    except ValueError:
        pass


def check_stats(aosabc_py) -> None:
    p = aosabc_py.wilcoxon_signed_rank([1, 2, 3, 4, 5], [0, 1, 2, 3, 4])
    assert math.isclose(p, 0.0625, abs_tol=1e-12), "five positive pairs: p = 2/32"
    assert aosabc_py.wilcoxon_signed_rank([1, 2], [1, 2]) == 1.0

    assert aosabc_py.hamming("0101", "1101") == 1
    assert aosabc_py.hamming("0000", "0000") == 0
    try:
        aosabc_py.hamming("01", "011")
        raise AssertionError("length mismatch should be rejected")
    except ValueError:
        pass


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        build_extension(workdir)
        sys.path.insert(0, str(workdir))
        import aosabc_py

        check_onemax(aosabc_py)
        check_sukp(aosabc_py, workdir)
        check_models(aosabc_py, workdir)
        check_stats(aosabc_py)
    print("smoke test passed")


if __name__ == "__main__":
    main()
