"""How read depth shrinks the noisy solution space.

With finite coverage each VAF becomes a confidence interval and the search
reports maximal trees that some frequency tensor inside the intervals can
generate.  Deeper sequencing narrows the intervals and the answer set.
"""

from clonemix.pipeline import solve_measurements
from clonemix.simulate import SimulationConfig, measurements, simulate_instance

n, m, seed = 4, 5, 2
clean = SimulationConfig(n=n, m=m, seed=seed)
sim = simulate_instance(clean)
exact = solve_measurements(measurements(sim, clean))
print(f"error-free data: {len(exact.solutions)} trees")

for coverage in (50, 1000, 10000):
    cfg = SimulationConfig(n=n, m=m, seed=seed, coverage=coverage)
    loci = measurements(simulate_instance(cfg), cfg)
    widest = max(float(s.vaf_ub - s.vaf_lb) for locus in loci for s in locus.samples)
    found = solve_measurements(loci, mode="noisy", largest_only=True)
    extends = any(sim.tree.is_subtree_of(T) for T in found.trees())
    print(f"{coverage:>6}x: widest VAF interval {widest:.3f}, {len(found.solutions)} largest trees, truth contained: {extends}")
