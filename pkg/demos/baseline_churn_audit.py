"""Audit what happens to existing scores when a new implementation arrives.

Under the study-local baseline, adding SYCL changes three MI250 efficiencies
even though no OpenACC, OpenMP or Kokkos measurement moved. Under a fixed
reference the same addition changes nothing but SYCL's own row.
"""

from ppmetrics import BaselinePolicy, StudyDefinition
from ppmetrics.audit import audit_change, check_reference_dominance, take_snapshot
from ppmetrics.csvio import dataset_path, read_measurements
from ppmetrics.render import render_diff, render_report

H = ("A100", "P100", "MI250")
REFS = {"A100": "CUDA", "P100": "CUDA", "MI250": "HIP"}


def load(name):
    return read_measurements(dataset_path(f"clovertree_{name}"))


def audit(title, policy, before, after):
    study = StudyDefinition("CloverTree", "default", H, policy)
    snap_b, snap_a = take_snapshot(study, before, before), take_snapshot(study, after, after)
    changes, report = audit_change(snap_b, snap_a)
    print(f"== {title}")
    print(render_diff(changes, snap_b.scores, snap_a.scores))
    print(render_report(report, "table"))
    print()
    return report


audit("study-local best", BaselinePolicy("study_local_best"), load("table1"), load("table2"))
fixed = BaselinePolicy("fixed_reference", REFS)
audit("fixed reference", fixed, load("table3_without_sycl"), load("table3"))

# A fixed reference only works while it stays the fastest code on its platform.
print("== reference dominance")
print(render_report(check_reference_dominance(load("table3"), fixed, H), "table"))
