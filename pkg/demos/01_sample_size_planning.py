"""How many labelled cases do we need?

Walks through the sample-size bound for a three-sign schema, then asks
the reverse question: given the cases we have, what precision can we
promise?
"""
from driftpac.config import default_schema
from driftpac.domain import valued_space_cardinality
from driftpac.pac import (PlanningQuery, achievable_delta, achievable_epsilon,
                          bound_table, min_sample_size)

schema = default_schema()
print(f"signs: {', '.join(schema.names)}")
print(f"valued space: {valued_space_cardinality(schema)} tuples")

query = PlanningQuery.for_schema(schema, epsilon=0.2, delta=0.2)
n = min_sample_size(query)
print(f"\nfor epsilon=0.2, delta=0.2 we need {n} cases")

# a clinic that can only collect 60 cases
have = 60
eps = achievable_epsilon(have, query.log_cardinality, 0.2)
print(f"with {have} cases, epsilon loosens to {eps:.3f} at the same delta")
est = achievable_delta(have, query.log_cardinality, 0.2)
if est.vacuous:
    print("keeping epsilon=0.2 instead leaves no useful reliability guarantee")
else:
    print(f"or keep epsilon=0.2 and accept delta={est.delta:.3f}")

print("\nthe full grid at ln|V| = 5:")
print(bound_table((0.1, 0.2, 0.3), (0.1, 0.2, 0.3), 5.0).to_text())
