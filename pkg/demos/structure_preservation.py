"""Positivity and trace preservation over a long horizon.

Two studies on T = 20 with tau = 0.1:

  1. Normalized full-rank midpoint on the 6-level pair (m = 36): the
     smallest eigenvalue over all 200 steps stays at or above zero to
     rounding and the trace sticks to one.

  2. Low-rank midpoint on the 4-site chain of 4-level systems (m = 256):
     the factor representation makes every iterate PSD by construction
     and normalization keeps Tr(X X+) - 1 at zero to machine precision,
     with or without a rank cap.  The printed series tracks the leading
     population, the trace defect and the factor rank.
"""

import numpy as np

from lindexp import (ExperimentSpec, LremConfig, ising_chain,
                     random_lowrank_states, run_structure_series)


def full_rank_study():
    model = ising_chain(6, 2)
    for scheme in ("frem-forward", "frem-backward"):
        spec = ExperimentSpec(model=model, scheme=scheme, grid=(200,),
                              horizon=20.0, seed=1)
        series = run_structure_series(spec)
        rows = series.rows
        print(f"{scheme:15s} min eigenvalue {min(r.min_eig for r in rows):.3e}"
              f"   max |Tr - 1| {max(abs(r.trace_drift) for r in rows):.3e}")


def low_rank_study():
    model = ising_chain(4, 4)
    states = random_lowrank_states(model.dim, 0.0, seed=1)
    cfg = LremConfig(1e-6, 1e-6, max_rank=64)
    for scheme, state in (("lrem-forward", states.initial_state),
                          ("lrem-backward", states.terminal_state)):
        spec = ExperimentSpec(model=model, scheme=scheme, grid=(200,),
                              horizon=20.0, config=cfg, initial_state=state)
        series = run_structure_series(spec, population_index=0)
        rows = series.rows
        drift = max(abs(r.trace_drift) for r in rows)
        print(f"\n{scheme}  max |Tr - 1| {drift:.3e}   "
              f"max rank {max(r.rank for r in rows)}")
        print(f"{'t':>6} {'population':>12} {'rank':>5}")
        for row in rows[:: len(rows) // 10]:
            print(f"{row.t:6.1f} {row.population:12.6f} {row.rank:5d}")
        assert drift <= 1e-14


def main():
    np.set_printoptions(precision=3)
    full_rank_study()
    low_rank_study()


if __name__ == "__main__":
    main()
