"""
Data Generation Script

Writes the example V-matrix files used by the CLI (delta, closure) and a
seeded corpus of random nonsingular V-matrices for batch runs.
"""

import json
import os

import numpy as np
import pandas as pd

from commrat import CommRat
from config import get_settings
from ncexpr import ExprStore
from vmatrix import comm_det, decompose, random_vmatrix

DATA_DIR = "data"

EXAMPLES = {
    "m2": [["x", "1"], ["1", "y"]],
    "x": [["x"]],
    "y": [["y"]],
    "two": [["y", "2"], ["x", "1"]],
    "three": [["x", "1", "0"], ["y", "x", "1"], ["1", "0", "y"]],
    "singular": [["x", "x"], ["x", "x"]],
}


def write_example_matrices(directory: str = DATA_DIR) -> list[str]:
    """
    Write each example matrix as {"entries": [[...], ...]}.

    Returns:
        list[str]: paths of the written files
    """
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, rows in EXAMPLES.items():
        path = os.path.join(directory, f"{name}.json")
        with open(path, "w") as handle:
            json.dump({"entries": rows}, handle, indent=2)
            handle.write("\n")
        paths.append(path)
    print(f"✓ Wrote {len(paths)} example matrices to {directory}/")
    return paths


def generate_vmatrix_corpus(count: int = 30, seed: int | None = None, directory: str = DATA_DIR) -> str:
    """
    Generate a corpus of random nonsingular V-matrices.

    Sizes cycle through 1..4 and coefficients are integers in [-2, 2]. Each
    row records the matrix, its commutative determinant and the designated
    element found by decompose, so later runs can be diffed against it.

    Args:
        count: number of matrices
        seed: sampling seed (defaults to NC_SEED)
        directory: output directory

    Returns:
        str: path of the CSV file
    """
    seed = get_settings().seed if seed is None else seed
    rng = np.random.default_rng(seed)
    store = ExprStore()
    records = []
    for index in range(count):
        k = index % 4 + 1
        m = random_vmatrix(rng, k)
        d = decompose(m, store=store)
        records.append(
            {
                "id": index,
                "k": k,
                "entries": json.dumps(m.to_texts()),
                "det": CommRat(comm_det(m)).to_text(),
                "pivots": json.dumps([list(p) for p in d.pivots]),
                "delta": str(d.delta),
                "ratio_law": d.ratio_law_holds(),
            }
        )
    frame = pd.DataFrame.from_records(records)
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, "vmatrix_corpus.csv")
    frame.to_csv(csv_path, index=False)
    print(f"✓ Generated {len(frame)} V-matrices (seed {seed})")
    print(f"✓ Saved to {csv_path}")
    return csv_path


if __name__ == "__main__":
    write_example_matrices()
    generate_vmatrix_corpus()
