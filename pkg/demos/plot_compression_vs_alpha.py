"""
Tree size against the mixing weight
===================================

Runs the repeated benchmark on crx and prints, for every alpha on the grid,
the mean test accuracy and the node count relative to the hard-label tree.
"""

from redt import BenchmarkConfig, load_benchmark, run_benchmark

report = run_benchmark(load_benchmark("crx"), runs=3, config=BenchmarkConfig(seed=1),
                       name="crx")
print(report.to_table())

print("alpha  test acc  nodes  rate")
for alpha, acc, nodes, rate in report.alpha_curve():
    bar = "#" * int(round(40 * rate))
    print(f"{alpha:5.1f}  {acc:8.3f}  {nodes:5.0f}  {rate:4.2f} {bar}")

# rank correlation between alpha and size; positive means softer labels give smaller trees
print("spearman", round(report.alpha_node_spearman(), 3))

# the CSV forms are what the command-line tool writes
print(report.to_csv().splitlines()[-3])
