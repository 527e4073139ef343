"""Shared workload list for the experiment scripts."""

from joinunion.gen import GenSpec, generate_specs, preset_specs

# Small seeded workloads whose union fits the oracle (|U| <= 500).
SMALL = {
    "chain2": lambda: generate_specs(GenSpec(60, 0.5, 0, 2, "chain", 5), 11),
    "uq3": lambda: preset_specs("uq3", 40, seed=2),
    "chain4": lambda: generate_specs(GenSpec(25, 0.6, 0, 4, "chain", 5), 13),
    "cyclic": lambda: preset_specs("cyclic", 50, seed=4),
    "uq2": lambda: preset_specs("uq2", 20, seed=5),
}


def pick(names):
    names = names.split(",") if names else list(SMALL)
    return {n: SMALL[n]() for n in names}
