"""Diagnosis under measurement drift.

Each oracle record is nudged to the corners of its +-2 sigma box, one
record at a time. One classifier per world, then the votes are fused.
"""
from pathlib import Path

from driftpac.domain import read_oracle
from driftpac.drift import diagnose, train_ensemble, world_count

oracle = read_oracle(Path(__file__).parent / "data" / "oracle.txt")
print(f"{world_count(oracle)} possible worlds from {len(oracle)} records")

ensemble = train_ensemble(oracle, seed=1)
for patient in [(1, 1, 1), (3, 3, 3), (4, 3, 3)]:
    print(f"\npatient {patient}")
    for strategy in ("cautious", "asymmetric", "voting"):
        d = diagnose(oracle, patient, strategy=strategy, seed=1,
                     ensemble=ensemble).decision
        pos, neg = d.tally
        print(f"  {strategy:<10} {d.label_token():<8} confidence {d.confidence:.3f} "
              f"({pos} positive / {neg} negative)")

# cautious abstains whenever any world disagrees; asymmetric raises an
# alarm if even one world says positive
