"""Greedy cap sets from a few hand-written priorities, checked against the cap-set property."""
from spacevo.priolang import concrete
from spacevo.problems import greedy_capset, is_capset

PRIORITIES = {
    "constant": "def priority(el, n):\n    return 0\n",
    "zeros first": "def priority(el, n):\n    return sum(1 for x in el if x == 0)\n",
    "twos last": "def priority(el, n):\n    return -sum(1 for x in el if x == 2)\n",
}

for n in (3, 4, 5):
    for name, text in PRIORITIES.items():
        cap = greedy_capset(concrete(text), n)
        assert is_capset(cap)
        print(f"n={n} {name:<12} size={len(cap)}")
