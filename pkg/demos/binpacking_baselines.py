"""Compare first fit, best fit and a scalar priority heuristic on generated OR instances."""
import numpy as np

from spacevo.corpus import get
from spacevo.priolang import concrete
from spacevo.problems import (best_fit, excess_score, first_fit, gen_or_dataset,
                              l2_lower_bound, simulate_online)

data = gen_or_dataset(0, 20, 120)
bounds = [l2_lower_bound(i) for i in data]
ff = [first_fit(i) for i in data]
bf = [best_fit(i) for i in data]
heur = concrete(get("program_9_scalar").text())
p9 = [simulate_online(heur, i) for i in data]
print("mean L2 bound:", np.mean(bounds))
for name, used in (("first fit", ff), ("best fit", bf), ("program 9 (scalar)", p9)):
    print(f"{name:<20} bins={np.mean(used):7.2f} excess={excess_score(used, bounds):.4f}")
