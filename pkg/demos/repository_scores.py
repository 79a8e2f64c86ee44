"""Keep scores in an event-sourced repository and watch them follow new data.

The repository-wide baseline always uses the best result anywhere in the
store, so a later, faster submission is reflected in every score at once.
The score history makes those silent moves visible.
"""

import tempfile

from ppmetrics import BaselinePolicy, Measurement, StudyDefinition
from ppmetrics.cli import import_records
from ppmetrics.csvio import dataset_path, read_rows
from ppmetrics.store import Store

H = ("A100", "P100", "MI250")

with tempfile.TemporaryDirectory() as d:
    store = Store(d)
    records, labels = import_records(read_rows(dataset_path("clovertree_table1")), store)
    store.apply_many(records, labels=labels)
    store.apply(StudyDefinition("CloverTree", "default", H, BaselinePolicy("repository_best")))

    records, labels = import_records(read_rows(dataset_path("clovertree_table2")), store)
    store.apply_many(records, skip_duplicates=True, labels=labels)

    # a tuned Kokkos build shows up later
    result = store.apply(Measurement("CloverTree", "default", "Kokkos", "MI250", "runtime_seconds", 25.0,
                                     {"compiler": "hipcc 5.7", "compiler_flags": "-O3", "input_size": "default"}))
    print(f"event {result.seq} rescored {len(result.updated)} implementation(s)")

    for impl in ("OpenACC", "OpenMP", "Kokkos", "SYCL"):
        values = ", ".join(f"{v:.3f}" for v in store.history("CloverTree", "default", impl).values)
        print(f"{impl:8s} {values}")

    # reopening replays the log and lands on the same state
    assert Store(d).query_scores() == store.query_scores()
    print(f"replayed {Store(d).seq} events from {d}")
