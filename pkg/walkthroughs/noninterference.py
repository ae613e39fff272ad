"""Comparing the two continuations of the high government's branch.

The secure pair differs only in a selection on a high channel, so a low
observer cannot tell the two apart.  The insecure pair selects different
labels on a low channel, and the relation produces a witness.

Run with ``python3 walkthroughs/noninterference.py``.
"""

from pathlib import Path

from sessionflow.checker import Judgment
from sessionflow.security import ContextSpec, dsni_equivalent, observably_equivalent, relevant
from sessionflow.semantics import normal_form
from sessionflow.surface import parse_file, print_process

f = parse_file(Path(__file__).parent / "programs" / "continuations.sp")


def judgment(name):
    d = f.decl(name)
    return Judgment(f.lattice, d.body, d.running, d.interface)


act = judgment("SecureAct")
r = relevant(f.lattice, "L", normal_form(act.process), act.context, act.running)
print("what a low observer can be influenced by in SecureAct:")
print(f"  {print_process(r.relevant_form)}")

for left, right in (("SecureAct", "SecureWait"), ("LeakInf1", "LeakInf2")):
    j1, j2 = judgment(left), judgment(right)
    same = observably_equivalent(f.lattice, "L", j1, j2)
    verdict = dsni_equivalent(f.lattice, "L", j1, j2, ContextSpec(depth=2))
    print(f"\n{left} vs {right}")
    print(f"  relevant parts agree: {same}")
    print(f"  related in every enumerated context pair: {verdict.related} "
          f"({verdict.pairs_checked} checked)")
    if not verdict.related:
        print(f"  failed clause {verdict.failed_clause} on {verdict.interface_name}: {verdict.message}")
        for side, net in zip(("left", "right"), verdict.witness):
            print(f"  {side}: {net.describe()}")
    for note in verdict.notes:
        print(f"  note: {note}")
