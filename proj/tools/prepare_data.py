#!/usr/bin/env python3
# Copyright 2026 The fhedp Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes headered raw CSVs for the Adult and COMPAS tasks.

The source files are read from a copy of the `responsibly` 0.1.2 wheel,
which bundles the UCI Adult files and ProPublica's
compas-scores-two-years.csv. Output cells are left raw: missing values stay
as '?' and categoricals stay as strings, so that `fhedp_cli` does the
dropping, encoding and scaling.

    python3 tools/prepare_data.py responsibly-0.1.2-py3-none-any.whl data/
"""

import csv
import io
import os
import sys
import zipfile

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "sex", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
]

COMPAS_FEATURES = [
    "sex", "age", "race", "juv_fel_count", "juv_misd_count", "juv_other_count",
    "priors_count", "c_charge_degree",
]


def adult_rows(z):
    for name in ("adult.data", "adult.test"):
        text = z.read("responsibly/dataset/adult/" + name).decode("utf-8")
        for line in text.splitlines():
            if not line.strip() or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(ADULT_COLUMNS):
                continue
            cells[-1] = cells[-1].rstrip(".")
            yield cells


def compas_rows(z):
    text = z.read("responsibly/dataset/compas/compas-scores-two-years.csv").decode("utf-8")
    for r in csv.DictReader(io.StringIO(text)):
        # The usual ProPublica screening filter.
        try:
            days = int(r["days_b_screening_arrest"])
        except ValueError:
            continue
        if abs(days) > 30 or r["is_recid"] == "-1" or r["c_charge_degree"] == "O":
            continue
        if r["score_text"] == "N/A":
            continue
        yield [r[c] for c in COMPAS_FEATURES] + [r["two_year_recid"]]


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        n = 0
        for r in rows:
            w.writerow(r)
            n += 1
    print(f"{path}: {n} rows")


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    wheel, out = sys.argv[1], sys.argv[2]
    os.makedirs(out, exist_ok=True)
    with zipfile.ZipFile(wheel) as z:
        write(os.path.join(out, "adult.csv"), ADULT_COLUMNS, adult_rows(z))
        write(os.path.join(out, "compas.csv"), COMPAS_FEATURES + ["two_year_recid"], compas_rows(z))


if __name__ == "__main__":
    main()
