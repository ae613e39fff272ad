"""Typing and running the two-government scenario.

Run with ``python3 walkthroughs/governments.py``.
"""

from pathlib import Path

from sessionflow.checker import IllTyped, check
from sessionflow.semantics import enumerate_redexes
from sessionflow.surface import parse_file, print_process

HERE = Path(__file__).parent / "programs"

secure = parse_file(HERE / "governments.sp")
for decl in secure.decls:
    if decl.is_context:
        continue
    check(secure.lattice, decl.body, decl.running, decl.interface)
    print(f"{decl.name}: well typed at {decl.running}")

# Moving the government channels to H and intelligence to L breaks the
# secrecy side conditions: after branching on a high channel, the process
# may no longer output on a low one.
for variant in ("governments-swapped.sp", "governments-insecure.sp"):
    system = parse_file(HERE / variant).decl("System")
    try:
        check(secure.lattice, system.body, system.running, system.interface)
    except IllTyped as exc:
        print(f"\n{variant} rejected:")
        for issue in exc.issues:
            print(f"  {issue}")

print("\nTwo reduction steps of the secure system:")
p = secure.decl("System").body
for _ in range(2):
    step = enumerate_redexes(p)[0]
    p = step.reduct
    print(f"  {step.step_line()}")
    print(f"    {print_process(p)}")
