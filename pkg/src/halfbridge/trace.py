"""Posterior draw containers and their on-disk formats."""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Trace", "read_trace_binary", "read_trace_csv"]

_MAGIC = b"HBTRACE1"


@dataclass
class Trace:
    '''
    Retained draws of one chain.

    Arguments
    ---------
    draws : ndarray of shape (T, d)
        Post-burn-in, thinned states; columns named by ``names``.
    names : list of str
    burn_in, thin : int
        Iterations discarded and thinning interval, so ``T * thin + burn_in``
        iterations were run.
    chain_id : int
    wall_time : float
        Seconds spent in the sampling loop.
    extra : dict
        Optional latent traces (``tau2``, ``v``) kept in debug mode.
    '''

    draws: np.ndarray
    names: list
    burn_in: int = 0
    thin: int = 1
    chain_id: int = 0
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def n_draws(self):
        return self.draws.shape[0]

    @property
    def total_iterations(self):
        return self.n_draws * self.thin + self.burn_in

    def column(self, name):
        return self.draws[:, self.names.index(name)]

    @property
    def beta(self):
        idx = [i for i, nm in enumerate(self.names) if nm.startswith("beta")]
        return self.draws[:, idx]

    def to_csv(self, path):
        np.savetxt(path, self.draws, delimiter=",", header=",".join(self.names),
                   comments="", fmt="%.17g")

    def to_binary(self, path):
        '''
        Column-major little-endian float64 dump.

        Layout: 8-byte magic, uint32 header length, UTF-8 JSON header
        (names and metadata), then ``d`` columns of ``T`` doubles each.
        '''
        meta = dict(names=list(self.names), rows=int(self.n_draws), burn_in=int(self.burn_in),
                    thin=int(self.thin), chain_id=int(self.chain_id),
                    wall_time=float(self.wall_time))
        head = json.dumps(meta).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(head)))
            fh.write(head)
            fh.write(np.asfortranarray(self.draws, dtype="<f8").tobytes(order="F"))


def read_trace_binary(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path}: not a trace file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        meta = json.loads(fh.read(hlen).decode("utf-8"))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    d = len(meta["names"])
    draws = raw.reshape((meta["rows"], d), order="F").astype(float)
    return Trace(draws, meta["names"], meta["burn_in"], meta["thin"], meta["chain_id"],
                 meta["wall_time"])


def read_trace_csv(path, chain_id=0):
    """Read a headered trace CSV (as written by :meth:`Trace.to_csv`)."""
    from .errors import ConfigurationError

    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise ConfigurationError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(parts)}")
            try:
                rows.append([float(x) for x in parts])
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ConfigurationError(f"{path}:2: no draws")
    return Trace(np.array(rows), header, chain_id=chain_id)
