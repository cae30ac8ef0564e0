"""Train a kernel classifier on a small hand-made oracle."""
from pathlib import Path

from driftpac.domain import read_oracle, validate_oracle
from driftpac.kernels import KernelSpec, dumps_model, predict, train_classifier

oracle = read_oracle(Path(__file__).parent / "data" / "oracle.txt")
print(f"{len(oracle)} records, provenance: {oracle.provenance}")

report = validate_oracle(oracle)
print(f"inconsistent records: {report.inconsistent_records} "
      f"(rate {report.inconsistency_rate:.3f})")
# one tuple carries both labels, so no classifier can be perfect here

clf = train_classifier(oracle, KernelSpec.gaussian(0.25), seed=0)
print(f"training error: {clf.training_error:.3f}")
print(f"support points kept: {len(clf.coefficients)}")

for patient in [(1, 1, 1), (3, 3, 3), (5, 5, 5)]:
    label, margin = predict(clf, patient)
    print(f"  {patient}: {'positive' if label else 'negative'} (margin {margin:+.3f})")

# models serialize to JSON and load back exactly
print(f"\nmodel json is {len(dumps_model(clf))} bytes")
