"""Chains versus cubes on the adversarial diagonal supports.

The supports A5 = {(k,k)} and A7 = {k*e1, k*e2, k*(1,1)} are disguised
low-dimensional problems: a single chain pattern captures them exactly up to
the moment truncation, while multilinear cubes cannot couple the diagonal
monomials at all.  The tightness score is the relaxation range divided by
the trivial per-monomial range (0 = tight, 1 = no better than box bounds).
"""

from patternrelax.bench import BenchConfig, records_to_csv, run_benchmark

cfg = BenchConfig(families=["A5", "A7"], methods=["M", "C", "MC"], samples=6,
                  base_seed=1)
records, summary = run_benchmark(cfg)

print(f"{len(records)} records")
print()
print(f"{'family':>8} {'method':>8} {'median triv':>12} {'q1':>8} {'q3':>8} "
      f"{'mean time':>10}")
for row in summary:
    print(f"{row['family']:>8} {row['method']:>8} {row['triv_median']:>12.4f} "
          f"{row['triv_q1']:>8.4f} {row['triv_q3']:>8.4f} "
          f"{row['mean_time_s']:>9.3f}s")

print()
print("first CSV rows:")
for line in records_to_csv(records).splitlines()[:7]:
    print(" ", line)
