"""Score the three bundled CloverTree tables.

Table 1 uses the fastest implementation on each platform as the baseline.
Table 2 adds a SYCL port that is faster on MI250, which quietly lowers every
other implementation's MI250 efficiency. Table 3 scores the same four ports
against fixed CUDA/HIP references instead.

Run with ``python demos/reproduce_tables.py``.
"""

from ppmetrics import BaselinePolicy, StudyDefinition, score_study
from ppmetrics.csvio import dataset_path, read_measurements
from ppmetrics.render import render_scores

H = ("A100", "P100", "MI250")
REFS = {"A100": "CUDA", "P100": "CUDA", "MI250": "HIP"}


def show(title, table, policy):
    rows = read_measurements(dataset_path(f"clovertree_{table}"))
    study = StudyDefinition("CloverTree", "default", H, policy)
    print(f"== {title}")
    print(render_scores(score_study(study, rows, rows), "table"))
    print()


show("Table 1: study-local best", "table1", BaselinePolicy("study_local_best"))
show("Table 2: study-local best, SYCL added", "table2", BaselinePolicy("study_local_best"))
show("Table 3: fixed CUDA/HIP references", "table3", BaselinePolicy("fixed_reference", REFS))

# OpenACC's Table 2 score is the plain mean of 100%, 50% and 50%.
rows = read_measurements(dataset_path("clovertree_table2"))
openacc = score_study(StudyDefinition("CloverTree", "default", H, BaselinePolicy("study_local_best")), rows)[0]
print(f"OpenACC after SYCL: {openacc.value:.4f}")
