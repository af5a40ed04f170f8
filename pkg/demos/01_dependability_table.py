"""
Where does a scrubbed datapath spend its time?
==============================================

Build the Markov reward model of each shipped configuration and ask for the
long-run share of time in each dependability class, scaled to a ten-year
mission.
"""

from seumrm import csl
from seumrm.reproduce import CaseStudy

cs = CaseStudy()
YEARS_DAYS = 3650
CLASSES = ["operational", "degraded", "failed_safe", "failed_unsafe"]

# one scrub a day, 99% of upsets detected
print(f"{'config':8}" + "".join(f"{c:>15}" for c in CLASSES) + f"{'states':>8}")
for name in ["C1", "C2", "C3", "C4"]:
    mrm = cs.model(name, I=1, C=0.99)
    days = [csl.check(f'S=? [ "{c}" ]', mrm).payload * YEARS_DAYS for c in CLASSES]
    print(f"{name:8}" + "".join(f"{d:15.2f}" for d in days) + f"{mrm.n_states:8d}")

# the days are expected values; each row adds up to the whole mission
# spares raise the degraded share but leave operational time alone,
# because cold spares do not age until they are switched in
