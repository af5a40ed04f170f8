"""
Throughput per LUT
==================

Expected normalized throughput says how much work a configuration delivers
once failures and degraded schedules are accounted for. Dividing by the
normalized area gives a single figure of merit for comparing designs.
"""

from seumrm.cdfg import list_schedule
from seumrm.model import overall_reward
from seumrm.reproduce import CaseStudy

cs = CaseStudy()

# degraded allocations need more control steps
for alloc in [{"add": 2, "mul": 2}, {"add": 1, "mul": 2}, {"add": 2, "mul": 1}, {"add": 1, "mul": 1}]:
    print(alloc, "->", list_schedule(cs.cdfg, alloc).c_steps, "steps")
print()

print(f"{'config':8}{'LUTs':>7}{'norm area':>11}{'throughput':>12}{'overall':>10}")
for name in ["C1", "C2", "C3", "C4"]:
    thr = cs.throughput(name, I=1, C=0.99)
    norm = cs.norm_area(name)
    print(f"{name:8}{cs.area(name):7d}{norm:11.4f}{thr:12.4f}{overall_reward(thr, norm):10.4f}")
