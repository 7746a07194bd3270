#!/usr/bin/env python3
"""MILP solver driver: reads a free-format MPS file, solves it with the
HiGHS solver bundled in scipy, and writes a plain-text solution file.

Usage:
    solve_mps.py MODEL.mps SOLUTION.txt [--time-limit S] [--gap G]
                 [--warm WARM.txt] [--effort E] [--verbose]

The objective sense is taken from a leading `* OBJSENSE MAX|MIN` comment;
MIN is assumed when absent. An optional warm-start file supplies
`<variable> <value>` lines that are handed to the solver as a starting
incumbent (empty or missing files are ignored).

Solution file dialect:
    =status= optimal|feasible|infeasible|unbounded|timeout|error
    =objective= <float>
    =gap= <float>
    <variable> <value>      (one line per variable)

Exit code 0 covers every solver outcome (including infeasible); nonzero
means the driver itself failed.
"""

import argparse
import os
import sys

import numpy as np
from scipy.optimize._highspy import _core


def read_objsense(path):
    with open(path) as fh:
        for line in fh:
            if not line.startswith("*"):
                if not line.strip():
                    continue
                break
            toks = line[1:].split()
            if len(toks) == 2 and toks[0] == "OBJSENSE":
                return toks[1] == "MAX"
    return False


def load_warm(path):
    if not path or not os.path.exists(path):
        return {}
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith(("*", "#")):
                continue
            name, value = line.split()
            values[name] = float(value)
    return values


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--gap", type=float, default=1e-4)
    ap.add_argument("--warm", default="")
    ap.add_argument("--effort", type=float, default=0.15,
                    help="HiGHS mip_heuristic_effort")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args()

    sense_max = read_objsense(args.model)

    h = _core._Highs()
    h.setOptionValue("output_flag", bool(args.verbose))
    status = h.readModel(args.model)
    if status == _core.HighsStatus.kError:
        print(f"failed to read {args.model}", file=sys.stderr)
        return 1
    if sense_max:
        h.changeObjectiveSense(_core.ObjSense.kMaximize)
    h.setOptionValue("time_limit", float(args.time_limit))
    h.setOptionValue("mip_rel_gap", float(args.gap))
    h.setOptionValue("mip_heuristic_effort", float(args.effort))
    h.setOptionValue("threads", 1)

    lp = h.getLp()
    names = list(lp.col_names_)
    warm = load_warm(args.warm)
    if warm:
        index = {n: i for i, n in enumerate(names)}
        idx = []
        vals = []
        for name, value in warm.items():
            i = index.get(name)
            if i is not None:
                idx.append(i)
                vals.append(value)
        if idx:
            h.setSolution(
                len(idx),
                np.asarray(idx, dtype=np.int32),
                np.asarray(vals, dtype=np.float64),
            )

    h.run()

    model_status = h.getModelStatus()
    info = h.getInfo()
    has_solution = info.primal_solution_status == _core.kSolutionStatusFeasible

    if model_status == _core.HighsModelStatus.kOptimal:
        status_word = "optimal"
    elif model_status == _core.HighsModelStatus.kInfeasible:
        status_word = "infeasible"
    elif model_status in (
        _core.HighsModelStatus.kUnbounded,
        _core.HighsModelStatus.kUnboundedOrInfeasible,
    ):
        status_word = "unbounded"
    elif has_solution:
        status_word = "feasible"
    elif model_status in (
        _core.HighsModelStatus.kTimeLimit,
        _core.HighsModelStatus.kIterationLimit,
        _core.HighsModelStatus.kSolutionLimit,
        _core.HighsModelStatus.kNodeLimit,
    ):
        status_word = "timeout"
    else:
        status_word = "error"

    with open(args.solution, "w") as out:
        out.write(f"=status= {status_word}\n")
        if has_solution:
            objective = h.getObjectiveValue()
            dual = info.mip_dual_bound
            is_mip = any(
                v == _core.HighsVarType.kInteger for v in lp.integrality_
            )
            if is_mip and np.isfinite(dual):
                gap = abs(objective - dual) / max(1e-10, abs(objective))
            else:
                gap = 0.0
            out.write(f"=objective= {float(objective)!r}\n")
            out.write(f"=gap= {float(gap)!r}\n")
            sol = h.getSolution()
            for name, value in zip(names, sol.col_value):
                out.write(f"{name} {float(value)!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
