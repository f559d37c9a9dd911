"""
Run an experiment config across MPI ranks.

    mpiexec -n 8 python scripts/mpi_run_experiment.py sim3 --out-dir results/sim3

Cells are striped over ranks; rank 0 merges them in cell order and writes
the same CSV files as ``adadkrr run``.
"""
import argparse
import logging
import sys

from mpi4py import MPI

from adadkrr.experiment import (
    TrialCache,
    emit_outputs,
    iter_cells,
    load_config,
    merge_results,
    run_cell,
)

comm = MPI.COMM_WORLD
rank = comm.Get_rank()
size = comm.Get_size()

parser = argparse.ArgumentParser()
parser.add_argument("config")
parser.add_argument("--seed", type=int, default=None)
parser.add_argument("--out-dir", default=None)
parser.add_argument("--threads", type=int, default=1)
args = parser.parse_args()

logging.basicConfig(level=logging.INFO, format=f"[rank {rank}] %(levelname)s %(name)s: %(message)s")

config = load_config(args.config, seed=args.seed, out_dir=args.out_dir, threads=args.threads)
cache = TrialCache(config)
mine = []
for idx, cell in enumerate(iter_cells(config)):
    if idx % size == rank:
        mine.append(run_cell(config, cell, cache))

parts = comm.gather(mine, root=0)
if rank == 0:
    result = merge_results(parts, config)
    for path in emit_outputs(result, config.out_dir):
        logging.info("wrote %s", path)
    sys.exit(1 if result.aborted else 0)
