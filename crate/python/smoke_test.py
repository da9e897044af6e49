"""Smoke test for the rigidmix_py extension.

Build first with `cargo build --release -p rigidmix-python`, then run
`python3 python/smoke_test.py`. The script loads the freshly built library
from target/release under its importable name.
"""

import importlib.util
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    built = next(
        (p for p in (ROOT / "target" / "release").glob("*rigidmix_py.*") if p.suffix in {".so", ".dylib", ".dll"}),
        None,
    )
    if built is None:
        sys.exit("extension not built: run `cargo build --release -p rigidmix-python`")
    tmp = Path(tempfile.mkdtemp())
    target = tmp / ("rigidmix_py" + (".pyd" if built.suffix == ".dll" else ".so"))
    shutil.copy(built, target)
    spec = importlib.util.spec_from_file_location("rigidmix_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def brute_correlation(heights_chain, n, a, b):
    """mu(T^n A ∩ B) / level width on an explicit staircase column, A and B in column 1."""
    column = list(range(heights_chain[1]))
    for cuts in range(3, 3 + len(heights_chain) - 2):
        nxt = []
        for j in range(cuts):
            nxt.extend(column)
            nxt.extend([None] * j)
        column = nxt
    h = len(column)
    hit = lost = 0
    for u, label in enumerate(column):
        if label not in a:
            continue
        v = u + n
        if not 0 <= v < h:
            lost += 1
        elif column[v] in b:
            hit += 1
    return hit, lost, h


def main():
    rm = load()

    plan = rm.staircase_plan(4)
    heights = rm.plan_heights(plan)
    assert heights == [1, 3, 12, 54, 280], heights

    real = rm.Realization(plan)
    assert real.height == 280
    width = Fraction(1, 2 * 3 * 4 * 5)
    for n in (0, 1, 7, 40, 133, -20):
        value, err = real.correlation(n, (1, [(0, 1)]), (1, [(1, 3)]))
        hit, lost, _ = brute_correlation(heights, n, {0}, {1, 2})
        assert (value, err) == (hit * width, lost * width), (n, value, err, hit, lost)

    rows = real.sweep('kind = "squares"', 1, 10_000, (1, [(0, 1)]), (1, [(0, 3)]))
    assert [n for n, _, _ in rows] == [k * k for k in range(1, 17)]

    freqs, coeffs = [5, 125, 3125, 78125], ["1/2"] * 4
    assert rm.fourier_coefficient(freqs, coeffs, 0) == 1
    assert rm.fourier_coefficient(freqs, coeffs, 5) == Fraction(1, 2)
    assert rm.fourier_coefficient(freqs, coeffs, 130) == Fraction(1, 4)
    assert rm.fourier_coefficient(freqs, coeffs, 7) == 0
    support = rm.riesz_support(freqs, -200, 200)
    assert support == sorted(support) and 120 in support and 7 not in support

    xs = rm.gaussian_sample([5, 125], ["1/2", "1/2"], 2000, 3)
    assert len(xs) == 2000 and xs == rm.gaussian_sample([5, 125], ["1/2", "1/2"], 2000, 3)

    bits, height = rm.height_mask([2, 2, 3], 1, 1, 3, 8)
    assert len(bits) == 2 and 7 <= height <= 8

    vv = 'kind = "geometric_intervals"\nbase = 2\nperiod = 2\n'
    assert rm.is_thick_in_window(vv, 0, 100, 3) == 19

    try:
        rm.Realization(plan, budget=10)
    except MemoryError:
        pass
    else:
        raise AssertionError("budget overrun should raise MemoryError")
    try:
        rm.fourier_coefficient([1, 2], ["1/2", "1/2"], 1)
    except ValueError:
        pass
    else:
        raise AssertionError("non-dissociated frequencies should raise ValueError")

    print("rigidmix_py smoke test passed")


if __name__ == "__main__":
    main()
