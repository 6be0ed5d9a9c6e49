"""
Observed constants of the harmonic-analysis estimates
=====================================================

Each estimate is sampled on a random band-limited ensemble; the ratio
lhs / rhs is reported per trial.  Bounded ratios that do not drift with the
resolution are the numerical counterpart of an inequality with a constant.
"""

from lpeuler.verify import INEQUALITY_IDS, FieldGenSpec, stability_sweep

ensemble = FieldGenSpec(seed=0)
print(f"{'id':<12}{'n=64':>12}{'n=128':>12}{'growth':>10}")
for iid in INEQUALITY_IDS:
    if iid == "peetre":
        # the Peetre sweep evaluates the maximal function on a refined grid and is the slowest
        trials = 10
    else:
        trials = 20
    rep = stability_sweep(iid, ensemble, (64, 128), n_trials=trials)
    a, b = rep.max_ratios
    print(f"{iid:<12}{a:>12.4g}{b:>12.4g}{rep.growth:>10.3f}")
