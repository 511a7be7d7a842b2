"""Regenerate the bundled binarized Iris table.

Each of the four measurements is thermometer-coded against its 20/40/60/80 %
quantiles, giving 16 binary features. The last column is the class index
(0 setosa, 1 versicolor, 2 virginica). Needs scikit-learn, which the package
itself does not depend on.
"""
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_iris


def main(out):
    iris = load_iris()
    x, y = iris.data, iris.target
    cuts = np.quantile(x, [0.2, 0.4, 0.6, 0.8], axis=0)
    rows = []
    for sample, label in zip(x, y):
        bits = [int(sample[j] > cuts[k, j]) for j in range(4) for k in range(4)]
        rows.append(" ".join(map(str, bits + [int(label)])))
    Path(out).write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/selftimed_tm/data/iris_binary.txt")
