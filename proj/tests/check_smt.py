"""Run z3 on the emitted SMT-LIB goldens and compare with the expected verdicts."""
import json
import pathlib
import sys

try:
    import z3
except ImportError:
    print("z3 not available")
    sys.exit(77)


def main(directory: str) -> int:
    root = pathlib.Path(directory)
    expected = json.loads((root / "expected.json").read_text())
    failures = 0
    for name, want in sorted(expected.items()):
        solver = z3.Solver()
        solver.from_file(str(root / name))
        got = str(solver.check())
        status = "ok" if got == want else "MISMATCH"
        print(f"{name}: z3 {got}, checker {want} {status}")
        failures += got != want
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
