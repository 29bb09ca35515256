"""Virtual experiment signals derived from a dataset.

The collected data are reinterpreted as a noise-free regulation run
under the ideal controller: the virtual error is -y, the virtual
disturbance is Qd^-1 y, and the virtual control action is u - Qd^-1 y.
Qd^-1 is applied as a plain difference equation even when it carries a
marginal pole (Qd with a zero at z=1); the resulting drift is surfaced
as a diagnostic, not an error, because u - Qd^-1 y is exactly what the
estimators consume.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import lti
from .signals import Dataset


@dataclass(frozen=True)
class VirtualSignals:
    e_bar: np.ndarray
    d_bar: np.ndarray
    u_bar: np.ndarray
    ef_bar: np.ndarray

    @property
    def N(self):
        return len(self.u_bar)

    @property
    def max_abs_d_bar(self):
        """Drift diagnostic for the marginally stable Qd^-1 filtering."""
        return float(np.max(np.abs(self.d_bar)))


def make_virtual(
    d: Dataset,
    Qd: lti.TransferOperator,
    Cf: lti.TransferOperator,
    discard_prefix: int = 0,
) -> VirtualSignals:
    """Build e_bar, d_bar, u_bar and ef_bar from one dataset.

    ``discard_prefix`` drops that many leading samples from every series
    after construction (default 0: no transient discard).
    """
    Qd_inv = lti.tf_inv(Qd)
    e_bar = -d.y
    d_bar = lti.simulate(Qd_inv, d.y)
    u_bar = d.u - d_bar
    ef_bar = lti.simulate(Cf, e_bar)
    if discard_prefix:
        if discard_prefix >= len(u_bar):
            raise ValueError("discard_prefix leaves no samples")
        e_bar = e_bar[discard_prefix:]
        d_bar = d_bar[discard_prefix:]
        u_bar = u_bar[discard_prefix:]
        ef_bar = ef_bar[discard_prefix:]
    return VirtualSignals(e_bar=e_bar, d_bar=d_bar, u_bar=u_bar, ef_bar=ef_bar)


def dump_virtual(vs: VirtualSignals, path) -> None:
    """Debug aid: write the virtual signals in the dataset CSV dialect."""
    buf = io.StringIO()
    buf.write("t,e_bar,d_bar,u_bar,ef_bar\n")
    for t in range(vs.N):
        cells = [str(t + 1)] + [
            format(x[t], ".17g") for x in (vs.e_bar, vs.d_bar, vs.u_bar, vs.ef_bar)
        ]
        buf.write(",".join(cells) + "\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())
