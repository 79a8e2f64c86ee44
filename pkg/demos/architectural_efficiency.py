"""Score throughput against hardware peaks instead of against other codes.

Architectural baselines come from the platform, so they never move when new
implementations are added. The roofline variant caps the peak at what the
kernel's arithmetic intensity allows on each memory system.
"""

from ppmetrics import BaselinePolicy, Measurement, Platform, StudyDefinition, score_study
from ppmetrics.render import render_scores

# peaks in GFLOP/s and GB/s (FP64, vendor datasheets)
platforms = {
    "A100": Platform("A100", "NVIDIA", "gpu", peak_compute=9700.0, peak_mem_bw=1555.0),
    "P100": Platform("P100", "NVIDIA", "gpu", peak_compute=4700.0, peak_mem_bw=732.0),
    "MI250": Platform("MI250", "AMD", "gpu", peak_compute=23900.0, peak_mem_bw=3200.0),
}
gflops = {
    "OpenMP": {"A100": 310.0, "P100": 160.0, "MI250": 420.0},
    "Kokkos": {"A100": 350.0, "P100": 150.0, "MI250": 610.0},
}
rows = [Measurement("stencil", "256^3", impl, p, "throughput_gflops", v)
        for impl, per in gflops.items() for p, v in per.items()]
h = tuple(platforms)

for policy in (BaselinePolicy("architectural_theoretical"),
               BaselinePolicy("architectural_roofline", arithmetic_intensity=0.25)):
    study = StudyDefinition("stencil", "256^3", h, policy)
    print(f"== {policy.variant.value}")
    print(render_scores(score_study(study, rows, rows, platforms), "table"))
    print()
