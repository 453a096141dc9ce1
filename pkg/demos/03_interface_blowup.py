"""Divergence of the uncorrected operator at a material interface.

With piecewise-constant moduli the operator value at an interface point
grows like one over the horizon: the kernel's odd symmetry is broken by the
modulus jump, leaving a half-ball third-moment term that scales like
1/horizon.  The fitted log-log slope is -1.
"""

import numpy as np

from peridyn import make_manufactured
from peridyn.analysis import geometric_deltas, interface_blowup

x0 = np.zeros(3)
for name in ("patch_jump_zero_traction", "gradient_jump"):
    field, material = make_manufactured(name)
    report = interface_blowup(material, field, x0, geometric_deltas(0.1, 1e-3, 5))
    print(f"{name}: |operator value| at the interface point")
    for d, v in zip(report.deltas, report.norms):
        print(f"  delta = {d:8.5f}: {v:12.5e}")
    print(f"  fitted slope {report.slope:+.4f} (blow-up rate 1/delta)\n")
