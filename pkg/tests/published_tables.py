"""Published DLT probability grids used as reference data in tests.

Rows are ascending levels of the first drug, columns ascending levels of
the second drug.  BOLD marks the cells published as the true MTD set for
theta = 0.3 with a selection half-width of 0.10.

The published tables are rounded to two decimals, and the rounding is
not consistent: some cells are truncated and others rounded upward, so a
handful of cells sit between 0.005 and 0.01 away from the generating
model.  VALUE_ERRATA pins those cells; everywhere else the model must
agree within the half-unit-in-last-place tolerance of 0.005.

BAND_EXTRA lists cells whose exact probability lies inside the band
|p - 0.3| <= 0.10 although the published table does not mark them bold;
the only such cell is printed as 0.20, exactly at the band edge.
"""

WORKING_ALPHAS = {1: 0.9, 2: 1.1, 3: 1.3, 4: 0.9, 5: 1.1, 6: 1.3}
WORKING_GAMMA = 1.0

GRIDS = {
    1: [[0.13, 0.22, 0.31, 0.39],
        [0.22, 0.31, 0.38, 0.46],
        [0.31, 0.38, 0.46, 0.52],
        [0.39, 0.46, 0.52, 0.58]],
    2: [[0.07, 0.14, 0.22, 0.30],
        [0.14, 0.21, 0.28, 0.36],
        [0.22, 0.28, 0.35, 0.42],
        [0.30, 0.36, 0.42, 0.48]],
    3: [[0.04, 0.09, 0.16, 0.23],
        [0.09, 0.14, 0.21, 0.27],
        [0.16, 0.21, 0.26, 0.33],
        [0.23, 0.27, 0.33, 0.39]],
    4: [[0.13, 0.19, 0.24, 0.29, 0.34, 0.39],
        [0.22, 0.27, 0.32, 0.37, 0.41, 0.46],
        [0.30, 0.35, 0.40, 0.44, 0.48, 0.52],
        [0.39, 0.43, 0.47, 0.51, 0.55, 0.58]],
    5: [[0.07, 0.11, 0.16, 0.20, 0.25, 0.30],
        [0.14, 0.18, 0.22, 0.27, 0.31, 0.35],
        [0.22, 0.26, 0.29, 0.33, 0.38, 0.42],
        [0.30, 0.33, 0.37, 0.40, 0.44, 0.48]],
    6: [[0.04, 0.07, 0.11, 0.14, 0.19, 0.23],
        [0.09, 0.12, 0.16, 0.19, 0.23, 0.27],
        [0.16, 0.18, 0.22, 0.25, 0.29, 0.33],
        [0.23, 0.25, 0.28, 0.32, 0.35, 0.39]],
}

BOLD = {
    1: {(0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1),
        (3, 0)},
    2: {(0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1), (2, 2),
        (3, 0), (3, 1)},
    3: {(0, 3), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 0), (3, 1),
        (3, 2), (3, 3)},
    4: {(0, 2), (0, 3), (0, 4), (0, 5), (1, 0), (1, 1), (1, 2), (1, 3),
        (2, 0), (2, 1), (3, 0)},
    5: {(0, 4), (0, 5), (1, 2), (1, 3), (1, 4), (1, 5), (2, 0), (2, 1),
        (2, 2), (2, 3), (2, 4), (3, 0), (3, 1), (3, 2)},
    6: {(0, 5), (1, 4), (1, 5), (2, 2), (2, 3), (2, 4), (2, 5), (3, 0),
        (3, 1), (3, 2), (3, 3), (3, 4), (3, 5)},
}

VALUE_ERRATA = {
    1: {(1, 2), (2, 1), (3, 3)},
    2: {(1, 3), (3, 1)},
    3: {(1, 2), (2, 1)},
    4: {(1, 1), (1, 4), (2, 0), (2, 1), (3, 5)},
    5: set(),
    6: {(0, 2), (0, 4), (1, 2), (2, 2), (3, 3)},
}

BAND_EXTRA = {1: set(), 2: set(), 3: set(), 4: set(), 5: {(0, 3)},
              6: set()}

TOL_EXACT = 0.005        # half-ulp of a two-decimal table
TOL_ERRATUM = 0.01       # inconsistent rounding never exceeds one ulp


def cell_tolerance(scenario: int, cell: tuple[int, int]) -> float:
    return TOL_ERRATUM if cell in VALUE_ERRATA[scenario] else TOL_EXACT
