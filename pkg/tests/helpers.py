"""Shared test utilities."""
import numpy as np

from gridrearrange.grid import GridSpec, Instance, Plan, validate_plan


def traj_plan(traj):
    """(T+1, n, dim) trajectory -> Plan."""
    return Plan(np.asarray(traj).transpose(1, 0, 2))


def check_traj(shape, traj, obstacles=()):
    grid = GridSpec(*shape, obstacles=frozenset(obstacles))
    traj = np.asarray(traj)
    inst = Instance(grid, [tuple(v) for v in traj[0]], [tuple(v) for v in traj[-1]])
    return validate_plan(grid, inst, traj_plan(traj))


def batch_valid(traj):
    """Vectorized collision check for (B, T+1, n, 2) trajectories on any grid."""
    B, T1, n, _ = traj.shape
    span = int(traj.max()) + 1
    ids = traj[..., 0] * span + traj[..., 1]
    srt = np.sort(ids, axis=2)
    ok = ~(srt[:, :, 1:] == srt[:, :, :-1]).any(axis=(1, 2))
    step = np.abs(np.diff(traj, axis=1)).sum(axis=3)
    ok &= (step <= 1).all(axis=(1, 2))
    for t in range(T1 - 1):
        u, v = ids[:, t], ids[:, t + 1]
        # agent at v at time t (or -1)
        inv = np.full((B, span * span), -1, dtype=np.int64)
        np.put_along_axis(inv, u, np.broadcast_to(np.arange(n), (B, n)), axis=1)
        other = np.take_along_axis(inv, v, axis=1)
        back = np.take_along_axis(v, np.maximum(other, 0), axis=1)
        ok &= ~((other >= 0) & (u != v) & (back == u)).any(axis=1)
    return ok
