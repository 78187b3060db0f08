# robustHorseshoe/scripts/geweke_check.py
"""Prior-vs-sampler moment comparison for one or all methods.

usage: python -m robustHorseshoe.scripts.geweke_check [method|all] [chains] [length]
"""
from __future__ import annotations
import os, logging
from typing import List

import pandas as pd

from robustHorseshoe.services.geweke import run_geweke
from robustHorseshoe.services.model import METHODS, Hyper, SamplerSpec

logging.basicConfig(level=os.getenv("LOGLEVEL","INFO"))
log = logging.getLogger("geweke_check")

# 既定値と違う値にして hyper の受け渡しも確かめる
CHECK_HYPER = Hyper(sigma2_beta0=4.0, e=2.0, f=1.5, c=3.0, d=2.0)

def run(methods: List[str], n_chains: int = 500, chain_length: int = 100) -> pd.DataFrame:
    tables = []
    for m in methods:
        spec = SamplerSpec.for_method(m, hyper=CHECK_HYPER, n_iter=2, burn_in=1)
        tables.append(run_geweke(spec, n_chains=n_chains, chain_length=chain_length))
    table = pd.concat(tables, ignore_index=True)
    worst = table.loc[table["z"].abs().groupby(table["method"]).idxmax()]
    for _, row in worst.iterrows():
        log.info("%-6s worst |z|=%.2f (%s, moment %d)", row["method"], abs(row["z"]), row["stat"], row["moment"])
    return table

if __name__ == "__main__":
    import sys
    if len(sys.argv) > 4:
        print("usage: python -m robustHorseshoe.scripts.geweke_check [method|all] [chains] [length]", file=sys.stderr)
        sys.exit(1)
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    names = list(METHODS) if which == "all" else [which]
    res = run(names, *(int(a) for a in sys.argv[2:]))
    print(res.to_string(index=False))
    sys.exit(0 if bool(res["ok"].all()) else 1)
