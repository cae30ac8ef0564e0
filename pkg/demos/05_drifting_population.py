"""A population that drifts: how fast does an old classifier go stale?"""
from driftpac.config import default_schema
from driftpac.kernels import train_classifier
from driftpac.population import (PopulationConfig, disagreement, init_population,
                                 observed_error, sample_oracle, step_population)

cfg = PopulationConfig(default_schema(), size0=2000, birth_death_scale=5,
                       max_step=1, noise_rate=0.05, seed=3)
state = init_population(cfg)
clf = train_classifier(sample_oracle(state, 92, seed=0), seed=0)
print("tick  members  vs concept  vs observed")
for tick in range(0, 41):
    if tick % 10 == 0:
        print(f"{state.tick:>4}  {len(state):>7}  {disagreement(clf, state):>10.3f}"
              f"  {observed_error(clf, state):>11.3f}")
    state = step_population(state, cfg)

# the concept is fixed while sign values wander, so the labels move with
# the members and the error against the concept stays flat; what changes
# is which region of the sign space is populated
