"""Compare the three regularizer variants on part of the synthetic corpus.

R1 keeps the full l0 + l2 prior, R2 drops the image l2 term and R3 also
drops the kernel l0 term. Pass ``--full`` for all 32 trials (about a
minute per variant); the default runs two images.

    python3 demos/ablation.py [--full]
"""

import sys

from blinddeblur import evaluation
from blinddeblur.pipeline import SolverParams

images = evaluation.corpus_images()
if "--full" not in sys.argv:
    images = {k: images[k] for k in ("im01", "im02")}
kernels = evaluation.corpus_kernels()

print(f"{len(images) * len(kernels)} trials per variant")
for variant in ("R1", "R2", "R3"):
    records = evaluation.run_trials(images, kernels, SolverParams(variant=variant))
    s = evaluation.summarize(records)
    hist = evaluation.cumulative_histogram(records, max_bin=5)
    curve = " ".join(f"<{b}:{f:.2f}" for b, f in zip(hist.bins, hist.fractions))
    print(f"{variant}: mean ratio {s['mean_ratio']:.2f}, "
          f"{s['successes']}/{s['count']} below 3 | {curve}")
