"""The hardness gadget: a two-sample, two-state tensor whose clone trees
spell out subset-sum certificates.

Every solution hangs each element vertex below the d vertex or the e-d
vertex, splitting B into two groups that sum to d and e-d.  When d = e-d
one partition vertex may also sit below the other, and the elements left
at the root then form the second group.
"""

from clonemix.ancestry import build_cladistic_graph
from clonemix.enumeration import enumerate_trees
from clonemix.oracle import subset_sum_feasible, subset_sum_instance, subset_sum_state_trees


def groups(T, B):
    """Elements grouped by their nearest partition vertex or the root."""
    picked = {"d": [], "e-d": [], "root": []}
    for v in T.vertices:
        if v.character < 2:
            continue
        # characters 0 and 1 are the d and e-d vertices, the rest are elements
        anchor = next(w for w in T.path_to_root(v)[1:] if w.character < 2)
        side = {0: "d", 1: "e-d"}.get(anchor.character, "root")
        picked[side].append(B[v.character - 2])
    return {k: sorted(g) for k, g in picked.items() if g}


for B, d in (([1, 2, 3], 3), ([2, 4], 3), ([3, 5, 7, 11], 15)):
    F, S = subset_sum_instance(B, d), subset_sum_state_trees(len(B))
    sols = enumerate_trees(build_cladistic_graph(F, S), F, S)
    print(f"B={B}, d={d}: DP says {'feasible' if subset_sum_feasible(B, d) else 'infeasible'}, {len(sols)} trees")
    for T in sols.trees:
        print("   " + ", ".join(f"{k}: {g} (sum {sum(g)})" for k, g in groups(T, B).items()))
    print()
