"""Slot-level discrete-event simulation of both random-access systems.

`conventional`: collided devices are suppressed by the per-preamble
feedback and packets whose single-shot SINR misses the threshold are
dropped; nothing survives a slot.

`irt`: collision-free devices whose accumulated SINR is still below the
threshold stay in service and re-transmit in the next slot without a new
preamble, adding their combined-copy SINR until decoded.

Decoding uses the realized per-slot SINR of every concurrent transmitter;
a packet is acknowledged once its accumulated SINR reaches the threshold.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .analytic import effective_arrival_rate
from .chanmodel import assign_preambles, draw_channels, realized_sinr_all
from .params import SystemParams, UnstableSystemError

DEFAULT_Q_CAP = 10_000
DEFAULT_CEILING_FACTOR = 100.0

MODES = ("conventional", "irt")


@dataclass
class DeviceState:
    """One active collision-free device and its decoding progress."""

    id: int
    channel: np.ndarray
    q: int = 0
    accumulated_sinr: float = 0.0
    birth_slot: int = 0


@dataclass(frozen=True)
class SlotLedger:
    """Census of a single slot."""

    t: int
    arrivals: int                  # new collision-free devices
    raw_arrivals: int              # new active devices before preamble filtering
    pc_drops: int                  # dropped due to preamble collision
    decoded: int                   # acknowledged this slot
    sinr_drops: int                # dropped for low SINR (conventional only)
    in_service: int                # concurrent data transmitters this slot
    decoded_transmissions: int = 0  # sum of (q + 1) over this slot's decodes


@dataclass
class MetricsAccumulator:
    """Post-warmup averages of one trial plus whole-run conservation totals."""

    throughput: float = math.nan
    drop_rate: float = math.nan
    mean_in_service: float = math.nan
    mean_retx: float = math.nan
    unstable_flag: bool = False
    throughput_hw: float = math.nan
    mean_retx_hw: float = math.nan
    slots_run: int = 0
    warmup: int = 0
    decoded_total: int = 0
    raw_arrivals_total: int = 0
    pc_drops_total: int = 0
    sinr_drops_total: int = 0
    in_service_final: int = 0


def run_slot(mode: str, state: list[DeviceState], params: SystemParams,
             rng: np.random.Generator, t: int = 0,
             id_counter=None, type1_feedback: bool = True,
             ) -> tuple[list[DeviceState], SlotLedger]:
    """Advance the system by one slot.

    Draws the new arrivals, filters preamble collisions, computes every
    concurrent transmitter's realized SINR against the full concurrent set,
    accumulates, and decodes. Returns the surviving devices (always empty
    in conventional mode) and the slot census.

    With `type1_feedback` off, collided devices transmit undecodable data
    and are counted as interference before being dropped.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "conventional" and state:
        raise ValueError("conventional mode carries no devices across slots")
    if id_counter is None:
        id_counter = itertools.count()

    raw = int(rng.poisson(params.lam))
    _, pc_free = assign_preambles(raw, params.L, rng)
    arrivals = len(pc_free)
    pc_drops = raw - arrivals

    new_channels = draw_channels(arrivals, params.M, rng)
    newcomers = [DeviceState(id=next(id_counter), channel=new_channels[i],
                             birth_slot=t) for i in range(arrivals)]
    candidates = state + newcomers

    decoded = 0
    decoded_tx = 0
    survivors: list[DeviceState] = []
    if candidates:
        blocks = [np.vstack([d.channel for d in candidates])]
        if not type1_feedback and pc_drops > 0:
            blocks.append(draw_channels(pc_drops, params.M, rng))
        V = np.vstack(blocks) if len(blocks) > 1 else blocks[0]
        sinr = realized_sinr_all(V, params.gamma)
        for i, dev in enumerate(candidates):
            dev.accumulated_sinr += float(sinr[i])
            if dev.accumulated_sinr >= params.Gamma:
                decoded += 1
                decoded_tx += dev.q + 1
            elif mode == "irt":
                dev.q += 1
                survivors.append(dev)

    sinr_drops = len(candidates) - decoded if mode == "conventional" else 0

    ledger = SlotLedger(t=t, arrivals=arrivals, raw_arrivals=raw,
                        pc_drops=pc_drops, decoded=decoded,
                        sinr_drops=sinr_drops, in_service=len(candidates),
                        decoded_transmissions=decoded_tx)
    return survivors, ledger


def watchdog_ceiling(params: SystemParams) -> int:
    """Default in-service ceiling used to detect divergence."""
    lbar = effective_arrival_rate(params.lam, params.L)
    return int(DEFAULT_CEILING_FACTOR * max(lbar, 1.0))


def run_trial(mode: str, params: SystemParams, slots: int, warmup: int,
              seed, ceiling: int | None = None, q_cap: int = DEFAULT_Q_CAP,
              type1_feedback: bool = True, n_batches: int = 20,
              ) -> MetricsAccumulator:
    """Run one seeded trial of `slots` slots and aggregate metrics over the
    slots after `warmup`.

    The watchdog flags the trial unstable and stops early when the number
    of concurrent transmitters exceeds `ceiling` (default
    100 * max(lambda_bar, 1)) or any device exceeds `q_cap`
    re-transmissions. Metrics gathered up to that point are still reported,
    flagged.
    """
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    if slots <= warmup:
        raise ValueError("slots must exceed warmup")
    if ceiling is None:
        ceiling = watchdog_ceiling(params)
    rng = np.random.default_rng(seed)
    ids = itertools.count()

    devices: list[DeviceState] = []
    decoded_by_slot: list[int] = []
    retx_by_slot: list[int] = []
    drops_by_slot: list[int] = []
    in_service_by_slot: list[int] = []
    m = MetricsAccumulator(warmup=warmup)

    for t in range(slots):
        devices, ledger = run_slot(mode, devices, params, rng, t=t,
                                   id_counter=ids,
                                   type1_feedback=type1_feedback)
        m.raw_arrivals_total += ledger.raw_arrivals
        m.pc_drops_total += ledger.pc_drops
        m.sinr_drops_total += ledger.sinr_drops
        m.decoded_total += ledger.decoded
        if t >= warmup:
            decoded_by_slot.append(ledger.decoded)
            retx_by_slot.append(ledger.decoded_transmissions)
            drops_by_slot.append(ledger.pc_drops + ledger.sinr_drops)
            in_service_by_slot.append(ledger.in_service)
        m.slots_run = t + 1
        # survivors keep arrival order, so the head carries the largest q
        if ledger.in_service > ceiling or (devices and devices[0].q > q_cap):
            m.unstable_flag = True
            break

    m.in_service_final = len(devices)
    _finalize(m, decoded_by_slot, retx_by_slot, drops_by_slot,
              in_service_by_slot, n_batches)
    return m


def _finalize(m: MetricsAccumulator, decoded, retx, drops, in_service,
              n_batches: int) -> None:
    n = len(decoded)
    if n == 0:
        return
    decoded = np.asarray(decoded, dtype=float)
    retx = np.asarray(retx, dtype=float)
    m.throughput = float(decoded.mean())
    m.drop_rate = float(np.mean(drops))
    m.mean_in_service = float(np.mean(in_service))
    total_dec = decoded.sum()
    m.mean_retx = float(retx.sum() / total_dec) if total_dec > 0 else math.nan
    nb = min(n_batches, n)
    if nb >= 2:
        cut = (n // nb) * nb
        width = cut // nb
        dec_b = decoded[:cut].reshape(nb, -1).sum(axis=1)
        ret_b = retx[:cut].reshape(nb, -1).sum(axis=1)
        m.throughput_hw = float(1.96 * np.std(dec_b / width, ddof=1)
                                / math.sqrt(nb))
        ok = dec_b > 0
        if ok.sum() >= 2:
            ratios = ret_b[ok] / dec_b[ok]
            m.mean_retx_hw = float(1.96 * np.std(ratios, ddof=1)
                                   / math.sqrt(ok.sum()))


def measure_tau(params: SystemParams, slots: int, warmup: int, seed,
                **kwargs) -> float:
    """Mean total transmissions per decoded packet in the re-transmitting
    system. Raises UnstableSystemError if the watchdog trips."""
    m = run_trial("irt", params, slots, warmup, seed, **kwargs)
    if m.unstable_flag:
        raise UnstableSystemError("watchdog tripped; tau is unbounded")
    return m.mean_retx
