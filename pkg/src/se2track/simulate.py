"""Fixed-step runs of a scenario, trajectory logs and summary metrics."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from . import kernel
from .liegroup import LogBranch
from .network import Topology
from .scenario import Scenario, check_scenario

CSV_HEADER = "t,node,theta,x,y,omega,vx,vy,u_theta,u_x,err_pose,err_twist"
CONVERGENCE_THRESHOLD = 0.1

_COL = {name: j for j, name in enumerate(kernel.COLUMNS)}


class NumericalDivergence(RuntimeError):
    def __init__(self, step: int, t: float, log: "TrajectoryLog | None" = None):
        super().__init__(f"state left the finite range at step {step} (t = {t:g} s)")
        self.step = step
        self.t = t
        self.log = log


def topology_arrays(topology: Topology):
    """CSR parent and weight arrays in the layout the kernels expect."""
    ptr, idx, wptr, w = [0], [], [0], []
    for i in range(topology.num_nodes):
        ps = topology.parents_of(i)
        idx.extend(ps)
        ptr.append(len(idx))
        if len(ps) > 1:
            w.extend(topology.weights_of(i))
        wptr.append(len(w))
    as_int = lambda a: np.asarray(a, dtype=np.int64)
    return as_int(ptr), as_int(idx), as_int(wptr), np.asarray(w, dtype=float)


@dataclass
class TrajectoryLog:
    """Per-step, per-node record; ``data[k, i]`` holds ``kernel.COLUMNS``."""

    data: np.ndarray
    dt: float

    @property
    def nsteps(self) -> int:
        return self.data.shape[0] - 1

    @property
    def num_nodes(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.data.shape[0]) * self.dt

    def column(self, name: str, node: int | None = None) -> np.ndarray:
        col = self.data[:, :, _COL[name]]
        return col if node is None else col[:, node]

    def rows(self) -> np.ndarray:
        """Flat (steps * nodes, 12) table in CSV column order."""
        k, n = self.data.shape[:2]
        out = np.empty((k, n, 12))
        out[:, :, 0] = self.times[:, None]
        out[:, :, 1] = np.arange(n)[None, :]
        out[:, :, 2:10] = self.data[:, :, 0:8]
        out[:, :, 10] = self.data[:, :, _COL["err_pose"]]
        out[:, :, 11] = self.data[:, :, _COL["err_twist"]]
        return out.reshape(k * n, 12)

    def write_csv(self, dest: str | Path | TextIO) -> None:
        fmt = ["%.9g", "%d"] + ["%.9g"] * 10
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="") as fh:
                self.write_csv(fh)
            return
        np.savetxt(dest, self.rows(), fmt=fmt, delimiter=",", header=CSV_HEADER, comments="")

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


@dataclass
class RunResult:
    scenario: Scenario
    log: TrajectoryLog
    summary: dict
    backend: str


def _convergence_time(err: np.ndarray, times: np.ndarray, threshold: float) -> float:
    above = np.nonzero(err >= threshold)[0]
    if above.size == 0:
        return 0.0
    last = above[-1]
    if last == err.size - 1:
        return math.inf
    return float(times[last + 1])


def summarize(sc: Scenario, log: TrajectoryLog, threshold: float = CONVERGENCE_THRESHOLD) -> dict:
    followers = range(1, log.num_nodes)
    end = log.data[-1]
    start = log.data[0]
    times = log.times
    per = {}
    for i in followers:
        root0 = start[i, _COL["root_err"]]
        per[i] = {
            "terminal_err": float(end[i, _COL["err_pos"]]),
            "terminal_err_pose": float(end[i, _COL["err_pose"]]),
            "terminal_err_twist": float(end[i, _COL["err_twist"]]),
            "terminal_err_ratio": float(end[i, _COL["root_err"]] / root0) if root0 > 0 else 0.0,
            "convergence_time": _convergence_time(log.column("err_pose", i), times, threshold),
        }
    summary = {
        name: max(p[name] for p in per.values())
        for name in ("terminal_err", "terminal_err_pose", "terminal_err_twist", "terminal_err_ratio", "convergence_time")
    }
    summary["max_abs_vy"] = float(np.abs(log.column("vy")).max())
    summary["max_target_vy"] = float(np.abs(log.data[:, 1:, _COL["target_vy"]]).max())
    summary["max_gbar_rate"] = float(np.abs(log.data[:, 1:, _COL["gbar_rate"]]).max())
    summary["followers"] = per
    return summary


METRICS = (
    "terminal_err",
    "terminal_err_pose",
    "terminal_err_twist",
    "terminal_err_ratio",
    "convergence_time",
    "max_abs_vy",
    "max_target_vy",
    "max_gbar_rate",
)


def run(sc: Scenario, backend: str | None = None) -> RunResult:
    order = check_scenario(sc)
    sim = kernel.get_simulate(backend)
    n, nsteps = sc.num_nodes, sc.nsteps
    ptr, idx, wptr, w = topology_arrays(sc.topology)
    offsets = np.zeros((n, 2))
    for i, off in sc.offsets.items():
        offsets[i] = off
    leader_u = sc.inputs.sample(np.arange(nsteps + 1) * sc.dt)
    out, status, last = sim(
        np.asarray(sc.initial, dtype=float),
        ptr, idx, wptr, w,
        np.asarray(order, dtype=np.int64),
        offsets,
        leader_u,
        np.asarray(sc.gains.as_tuple(), dtype=float),
        float(sc.dt),
        int(nsteps),
        sc.branch is LogBranch.MinusPi,
        sc.mode == "formation",
    )
    if status == kernel.DIVERGED:
        raise NumericalDivergence(last, last * sc.dt, TrajectoryLog(out[: last + 1], sc.dt))
    log = TrajectoryLog(out, sc.dt)
    name = backend or kernel.BACKEND
    return RunResult(sc, log, summarize(sc, log), name)
