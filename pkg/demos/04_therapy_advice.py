"""Rank therapy plans for a patient and check the ranking is stable."""
from pathlib import Path

from driftpac.kernels import KernelSpec
from driftpac.therapy import advise, rank_plans, read_plans

schema, plans = read_plans(Path(__file__).parent / "data" / "plans.txt")
spec = KernelSpec.gaussian(0.25)

for patient in [(1, 1, 2), (2, 2, 2), (5, 5, 5)]:
    ranking = rank_plans(plans, patient, spec, 0.01, schema)
    adv = advise(plans, patient, schema, spec, 0.01)
    scores = ", ".join(f"{pid} {score:.3f}" for pid, score in ranking.entries)
    print(f"patient {patient}: {scores}")
    print(f"  status {adv.status}, top plan {adv.top_plan}")
    if adv.status == "ABSTAIN":
        print(f"  worlds split as {dict(adv.histogram)}")
