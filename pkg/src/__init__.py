"""qqlab: a desk-scale workbench for the set equality quantum query lower bound.

Implements and checks, on finite instances, every constructive piece of the
reduction from the r-to-one collision problem to one-to-one set equality.

Architecture:
    - core_model / reductions: instances, the group action Γ, the two reductions
    - inv_stats / probability: INV profiles, BAD, exact tails and union bounds
    - adversary: relation bound evaluator and the ComesFrom relation counts
    - query_sim: statevector Grover, amplitude amplification, upper-bound algorithms
    - bounds_pipeline: composition of the lower-bound terms and choice of r
    - cli: the `qqlab` command with JSON / CSV reports
"""

__version__ = "0.1.0"
