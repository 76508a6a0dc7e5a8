"""Generate a synthetic three-level book and look at what drives it.

The midprice is a tick random walk. With drift_coupling > 0, the chance of an
up move rises with the bid/ask volume imbalance of the previous snapshot, so
the volume features carry the direct signal. Because the imbalance factor is
persistent, recent price moves also echo it, so price features carry some too.
"""

import numpy as np

from mklob import SynthConfig, generate_synthetic
from mklob.labeling import CLASS_NAMES, label_arrays, true_classes
from mklob.lob_data import horizon_indices

series = generate_synthetic(SynthConfig(n_snapshots=5000, seed=1, drift_coupling=1.0))
print(f"{len(series)} snapshots over {(series.timestamps[-1] - series.timestamps[0]) / 3.6e6:.1f} hours")
print(f"midprice range {series.midprice.min():.4f} .. {series.midprice.max():.4f}")

v = series.volumes
imbalance = (v[:, :3].sum(1) - v[:, 3:].sum(1)) / v.sum(1)
step = np.diff(series.best_bid) / 1e-4
print(f"corr(imbalance_t, ticks moved into t+1) = {np.corrcoef(imbalance[:-1], step)[0, 1]:.3f}")

# class balance of the spread-crossing labels at each horizon
for h in (5, 10, 20, 50, 100, 200):
    fut = horizon_indices(series, h)
    ok = fut >= 0
    lab = label_arrays(series.best_bid[ok], series.best_ask[ok], series.best_bid[fut[ok]], series.best_ask[fut[ok]])
    cls = true_classes(lab)
    shares = [np.mean(cls == k) for k in range(3)]
    tied = np.mean(cls < 0)
    print(f"dt={h:>3}s  " + "  ".join(f"{n}={s:.2f}" for n, s in zip(CLASS_NAMES, shares)) + f"  tie={tied:.2f}")
