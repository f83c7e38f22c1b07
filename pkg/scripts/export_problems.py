"""Write the built-in instances and the example tensor to problems/*.json."""

import argparse
from pathlib import Path

from sparsecop.instances import EXAMPLES
from sparsecop.io import save_problem
from sparsecop.tensor import SymmetricTensor, save_tensor


def example_tensor() -> SymmetricTensor:
    """Quartic tensor on R^4 coupling neighbours (1,2), (2,3), (3,4)."""
    entries = [((1, 1, 1, 1), 1.0), ((2, 2, 2, 2), 2.0), ((3, 3, 3, 3), 2.0),
               ((4, 4, 4, 4), 1.0), ((1, 1, 2, 2), -1 / 6), ((2, 2, 3, 3), 1 / 6),
               ((3, 3, 4, 4), -1 / 6)]
    return SymmetricTensor.from_entries(4, 4, entries)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "problems"))
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    for name, build in EXAMPLES.items():
        save_problem(build(), out / f"{name}.json")
        print("wrote", out / f"{name}.json")
    save_tensor(example_tensor(), out / "tensor_chain4.json")
    print("wrote", out / "tensor_chain4.json")


if __name__ == "__main__":
    main()
