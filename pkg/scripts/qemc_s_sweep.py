"""Sweep the reverse-anneal pause depth s on one spin-glass instance.

For each s the chain restarts from the same SA cold start, so the sweep
isolates how much of the incumbent survives the reheat. Writes one trace
CSV per s plus a summary table.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from scqubo.io import persist_run
from scqubo.qubo import IsingProblem, QuboProblem, from_ising
from scqubo.samplers.exact import brute_force
from scqubo.samplers.sa import SaConfig, simulated_annealing
from scqubo.seeding import spawn_rng
from scqubo.strategies import ReverseScheduleConfig, qemc_chain, reverse_sa_sampler


def random_glass(seed: int, n: int) -> QuboProblem:
    rng = spawn_rng(seed, 0x51A5)
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            couplings[(i, j)] = float(rng.choice((-1.0, 1.0)))
    return from_ising(IsingProblem(n, np.zeros(n), couplings, 0.0))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/s_sweep")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=16)
    parser.add_argument("--s-values", default="0.1,0.3,0.5,0.7,0.9")
    parser.add_argument("--iterations", type=int, default=30)
    parser.add_argument("--batch", type=int, default=200)
    parser.add_argument("--sweeps", type=int, default=500)
    args = parser.parse_args()

    out = Path(args.out)
    problem = random_glass(args.seed, args.n)
    emin, _ = brute_force(problem)
    print(f"glass n={args.n} seed={args.seed}: ground state energy {emin:.4f}\n")

    s_values = [float(tok) for tok in args.s_values.split(",")]
    print(f"{'s':>5}  {'best':>9}  {'final':>9}  {'gap':>8}  iterations to best")
    for s in s_values:
        rcfg = ReverseScheduleConfig(s=s, sweeps=args.sweeps, reads=args.batch)
        rev = lambda req, rc=rcfg: reverse_sa_sampler(req, rc)
        cold = lambda req: simulated_annealing(
            req, SaConfig(sweeps=args.sweeps, reads=req.reads_or(args.batch))
        )
        trace = qemc_chain(
            problem,
            rev,
            iterations=args.iterations,
            batch=args.batch,
            seed=args.seed,
            cold_sampler=cold,
            metadata={"s": s},
        )
        persist_run(trace, out, f"sweep_s{s:g}", config={"s": s, "seed": args.seed})
        series = trace.global_best_series()
        first_best = int(np.argmax(series <= trace.best_energy + 1e-9))
        print(
            f"{s:>5.2f}  {trace.best_energy:>9.4f}  "
            f"{trace.records[-1].incumbent_energy:>9.4f}  "
            f"{trace.best_energy - emin:>8.4f}  {first_best}"
        )
    print(f"\ntraces written to {out}/")


if __name__ == "__main__":
    main()
