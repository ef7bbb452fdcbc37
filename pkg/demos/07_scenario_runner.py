# %% [markdown]
# # Declarative scenarios
#
# Every check above is also shipped as a JSON scenario.  The runner returns a
# report, and `write_outputs` stores it with plot-ready tables: cells, ECDF
# pairs and histograms.

# %%
import tempfile
from pathlib import Path

from typicality.cli import describe, list_scenarios, write_outputs
from typicality.scenarios import exit_code, load_config, run_scenario

for row in list_scenarios()[:5]:
    print(row)
print(describe("thm-2.4"))

# %%
out = Path(tempfile.mkdtemp())
for name in ("z3-exact-palm", "z3-wrong-mixture"):
    cfg = load_config(name)
    rep = run_scenario(cfg, n=500)
    paths = write_outputs(rep, out)
    print(name, rep.verdict, "exit", exit_code(rep.verdict), "scored", exit_code(rep.verdict, cfg["expect"], True))
    print("  wrote", [p.name for p in paths])
