"""All six methods on one two-stage QP instance, reported like the benchmark table.

Run with

    python3 demos/two_stage_qp.py
"""

from multicut_sa.bench import parse_config, render_table, run_bench

cfg = parse_config("""
instances = C1
algorithms = RSA, DA, S-1C, S-Max1C, M-1C, M-Max1C
iteration_targets = 200
seeds = 3
report_T = 5000
""")
markdown, _, _ = render_table(run_bench(cfg))
print(markdown)
