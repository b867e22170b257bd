"""Print the cap-set constants obtained from three admissible-set sizes."""
from spacevo.problems import capacity_lower_bound

for s, n, w in [(237984, 24, 17), (1270863, 27, 19), (3003, 15, 10)]:
    r = capacity_lower_bound(s, n, w)
    print(f"s={s:>8} n={n} w={w}  ->  C={r.C:.6f}  (m={r.m}, dimension {r.dimension})")
