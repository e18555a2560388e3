"""Humid-heat storylines and public-safety risk categories.

Computes the heat index from temperature and dewpoint, bins it by the NWS
caution / extreme caution / danger / extreme danger thresholds, and shows
how a hotter storyline shifts cells across categories.
"""

import numpy as np

from enstails import Field, Grid, heat_index, dewpoint_to_rh, risk_category
from enstails.heatindex import RiskCategory, risk_category_codes
from enstails.report import category_transition_table

print("heat index at selected conditions:")
for t, td in ((30.0, 18.0), (33.0, 26.0), (38.0, 28.0), (41.0, 31.0)):
    rh = dewpoint_to_rh(t, td)
    hi = heat_index(t, rh)
    print(f"  T={t:4.1f} Td={td:4.1f} -> RH={rh:5.1f}%  "
          f"heat index {hi:5.1f} degC  [{risk_category(hi).label}]")

# A small map: the realized summer maximum versus a hotter storyline.
grid = Grid(np.linspace(-40.0, 40.0, 5), np.arange(6) * 60.0)
rng = np.random.default_rng(12)
t_realized = rng.uniform(24.0, 40.0, grid.shape)
td_realized = t_realized - rng.uniform(2.0, 12.0, grid.shape)
hi_realized = heat_index(t_realized, dewpoint_to_rh(t_realized, td_realized))
hi_story = heat_index(t_realized + 4.0, dewpoint_to_rh(t_realized + 4.0, td_realized + 3.0))

realized = Field(grid=grid, values=hi_realized)
story = Field(grid=grid, values=hi_story)
table = category_transition_table(
    risk_category_codes(realized), risk_category_codes(story),
    np.ones(grid.shape, dtype=bool), grid,
)
print("\nrisk-category transitions, realized -> storyline (area fractions):")
for i in RiskCategory:
    for j in RiskCategory:
        if table.fractions[i, j] > 0:
            arrow = "stays at" if i == j else "->"
            print(f"  {table.fractions[i, j]:6.1%}  {i.label} {arrow} {j.label}")
