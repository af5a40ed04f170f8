"""
How often should we scrub?
==========================

Sweep the scrub interval for the plain two-adder two-multiplier datapath
and look at the chance of getting through a 90-day window without a failure.
"""

from seumrm import csl
from seumrm.reproduce import CaseStudy

cs = CaseStudy()
MISSION = 90

reliable = csl.parse_property('P=? [ G<=T !"failed" ]')
safe = csl.parse_property('P=? [ G<=T !"failed_unsafe" ]')

print(f"{'interval':>9}{'reliability':>13}{'safety':>10}")
for interval in [1, 3, 5, 7, 9]:
    mrm = cs.model("C1", I=interval, C=0.99)
    r = csl.evaluate(reliable, mrm, constants={"T": MISSION}).payload
    s = csl.evaluate(safe, mrm, constants={"T": MISSION}).payload
    print(f"{interval:9d}{r:13.4f}{s:10.4f}")

# reliability drops as scrubs get rarer, since failed units stay failed for
# longer. Safety moves the other way: a scrub re-enables every unit, and
# while more units are active there are more chances of an undetected upset.

# the same sweep from the shell:
#   seumrm sweep --config C1 --param scrub_interval_days --values 1..9 \
#       --property 'P=? [ G<=T !"failed" ]' --const T=90
