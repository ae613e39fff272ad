"""A process that deadlocks before its observable output is not
equivalent to one that emits it, even though neither leaks a secret.

Run with ``python3 walkthroughs/deadlock.py``.
"""

from pathlib import Path

from sessionflow.checker import Judgment
from sessionflow.security import dsni_equivalent
from sessionflow.semantics import reachable_states
from sessionflow.surface import parse_file, print_process

f = parse_file(Path(__file__).parent / "programs" / "deadlock.sp")

for name in ("Cycle", "Chain"):
    states, status = reachable_states(f.decl(name).body)
    print(f"{name}: {len(states)} reachable states")
    for key, verdict in sorted(status.items()):
        print(f"  {verdict}: {print_process(states[key])}")


def judgment(name):
    d = f.decl(name)
    return Judgment(f.lattice, d.body, d.running, d.interface)


emits, stuck = judgment("Emits"), judgment("Stuck")
v = dsni_equivalent(f.lattice, "L", emits, stuck)
print(f"\nEmits vs Stuck related: {v.related}")
print(f"  failed clause {v.failed_clause} on {v.interface_name}: {v.message}")
for line in v.witness_trace:
    print(f"  {line}")
print(f"Stuck vs Stuck related: {dsni_equivalent(f.lattice, 'L', stuck, stuck).related}")
