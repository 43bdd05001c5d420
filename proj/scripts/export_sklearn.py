"""Export scikit-learn's bundled iris and digits datasets as headed CSVs."""

import csv
import pathlib
import sys

from sklearn import datasets


def export(name, bunch, out_dir):
    path = out_dir / f"{name}.csv"
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"f{k}" for k in range(bunch.data.shape[1])] + ["label"])
        for row, label in zip(bunch.data, bunch.target):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    print(path)


if __name__ == "__main__":
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    export("iris", datasets.load_iris(), out)
    export("digits", datasets.load_digits(), out)
