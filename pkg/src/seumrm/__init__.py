"""Dependability and performability analysis of scrubbed FPGA datapaths.

Modules
-------
charlib    component characterization and upset rates
cdfg       data-flow graphs and resource-constrained scheduling
model      coverage-refined Markov reward models
engine     transient, steady-state and reachability analysis
csl        property language (CSL subset with rewards and filters)
sim        Monte Carlo oracle with confidence intervals
explicit   explicit-state .tra/.lab/.rew exchange
reproduce  case-study tables and figure data with verdicts
cli        the ``seumrm`` command
"""

__version__ = "0.1.0"
