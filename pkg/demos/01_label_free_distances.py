"""Label-free squared distances and permutation regions.

Two scalar targets with estimates at -4 and 3: the classic two-target
configuration.  Shows how the assignment-based distance ignores labeling,
how GOSPA reweights it, and how points are classified into permutation
regions.
"""

import numpy as np

from mospa import StackedState, gospa, ospa, region_index


def main():
    x_hat = StackedState(2, 1, [-4.0, 3.0])

    # swapping labels costs nothing
    swapped = StackedState(2, 1, [3.0, -4.0])
    print("distance to the label-swapped estimate:", ospa(swapped, x_hat))

    # a point midway between both modes is equally far from either labeling
    origin = StackedState(2, 1, [0.0, 0.0])
    print("distance from the origin:", ospa(origin, x_hat))

    # GOSPA with a per-target weight prefers the alignment that puts the
    # small error on the heavily weighted slot
    q = np.diag([4.0, 1.0])
    print("weighted distance from the origin:", gospa(origin, x_hat, q))

    # region classification: which permutation of the estimate is optimal?
    for point in ([-5.0, 4.0], [4.0, -5.0], [1.0, 1.0]):
        label = region_index(StackedState(2, 1, point), x_hat)
        print(f"point {point} -> permutation {label.permutation.mapping} "
              f"(region {label.index})")


if __name__ == "__main__":
    main()
