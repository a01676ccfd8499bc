"""Split-operator propagation of the multichannel vibronic TDSE and delay scans.

Each step is the symmetric (Strang) product

    exp(-i T dt/2) exp(-i V dt/2) exp(+i E(t) M dt) exp(-i V dt/2) exp(-i T dt/2)

with T the kinetic operator (diagonal in momentum space, shared by every
channel), V the channel potentials (diagonal on the grid) and M the constant
real dipole pattern. M has low rank (a star around the excited channel), so
its exponential is applied exactly from the eigenvectors with non-zero
eigenvalue; the decomposition is computed once per model and reused for
every grid point and step. Adjacent kinetic half steps are merged.

Scans are propagated in one of two ways:

``direct``
    one full propagation per (delay, phase) point.
``split``
    the pump is propagated once; for well separated pulses the free
    evolution up to the probe is applied exactly through the eigenvectors of
    the free one-step operator, and the probe window is applied as a
    precomputed response on the populated eigenvectors. Delays with
    overlapping pulses are propagated as one batch from pump-only
    checkpoints. Both give the same numbers up to rounding.
"""
from __future__ import annotations

import concurrent.futures as cf
import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, ScanError, UnitarityError
from .grid import SpatialGrid, TimeGrid, VibronicState, build_grid, harmonic_ground_state
from .potentials import SystemModel, benzene_preset
from .pulses import PhaseMaskTerm, PulseSequence, SpectralPulse, _real_field, default_pulse_sequence
from .units import HBAR

log = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-8
BOUNDARY_TOLERANCE = 1e-4
BATCH = 32  # trajectories per batch; fixed so results do not depend on worker count


def cos8_mask(grid: SpatialGrid, fraction: float = 0.1) -> np.ndarray:
    """Absorbing mask: 1 in the interior, falling as cos^8 to 0 over the outer ``fraction`` at each edge."""
    x = grid.x
    width = fraction * (grid.x_max - grid.x_min)
    mask = np.ones_like(x)
    lo = x < grid.x_min + width
    hi = x > grid.x_max - width
    mask[lo] = np.cos(0.5 * np.pi * (grid.x_min + width - x[lo]) / width) ** 8
    mask[hi] = np.cos(0.5 * np.pi * (x[hi] - (grid.x_max - width)) / width) ** 8
    return mask


class SplitOperatorPropagator:
    """Precomputed Strang propagator for one model, grid and time step."""

    def __init__(self, model: SystemModel, grid: SpatialGrid, dt: float = 0.005, absorbing_mask: bool = False):
        if dt == 0:
            raise ConfigurationError("dt must be non-zero")
        self.model = model
        self.grid = grid
        self.dt = dt
        self.n_channels = model.n_channels
        self.potentials = model.channel_potentials(grid)
        tk = 0.5 * model.kinetic_quantum * grid.k**2
        self.kin_full = np.exp(-1j * tk * dt / HBAR)
        self.kin_half = np.exp(-0.5j * tk * dt / HBAR)
        self.pot_half = np.exp(-0.5j * self.potentials * dt / HBAR)
        lam, vecs = np.linalg.eigh(model.coupling_matrix())
        keep = np.abs(lam) > 1e-14 * max(1.0, np.abs(lam).max())
        self.coupling_values = lam[keep]
        self.coupling_vectors = vecs[:, keep].T.copy()  # (rank, n_channels)
        self.mask = cos8_mask(grid) if absorbing_mask else None
        self._boundary = self._boundary_region(grid)

    @staticmethod
    def _boundary_region(grid):
        x = grid.x
        width = 0.1 * (grid.x_max - grid.x_min)
        return (x < grid.x_min + width) | (x > grid.x_max - width)

    # -- elementary operations on batches of shape (B, n_channels, n_points)

    def _kinetic(self, psi, phases):
        return np.fft.ifft(phases * np.fft.fft(psi, axis=-1), axis=-1)

    def _couple(self, psi, amplitude):
        """Apply exp(+i * amplitude * M); ``amplitude`` has shape (B,)."""
        for lam, u in zip(self.coupling_values, self.coupling_vectors):
            proj = np.sum(u[None, :, None] * psi, axis=1)  # (B, n_points)
            coef = np.expm1(1j * lam * amplitude)  # (B,)
            psi += u[None, :, None] * (coef[:, None] * proj)[:, None, :]
        return psi

    def _flush(self, psi, rows):
        taken = np.sum(np.abs(psi[rows, 2:, :]) ** 2, axis=(1, 2)) * self.grid.dx
        psi[rows, 2:, :] = 0.0
        return taken

    def evolve(self, psi, fields, flush_steps=None, record_every=None):
        """Propagate a batch through ``fields.shape[1]`` steps.

        ``psi`` has shape (B, n_channels, n_points) and is modified in place;
        ``fields`` has shape (B, n_steps) holding E at the step midpoints.
        ``flush_steps`` (B,) gives, per trajectory, the step after which the
        continuum population is harvested and removed (-1 for never).
        Returns ``(psi, harvested, absorbed, populations)``.
        """
        fields = np.atleast_2d(np.asarray(fields, dtype=float))
        nb, n_steps = fields.shape
        if psi.shape[0] != nb:
            raise ValueError("batch size of psi and fields differ")
        harvested = np.zeros(nb)
        absorbed = np.zeros(nb)
        flush_steps = np.full(nb, -1) if flush_steps is None else np.asarray(flush_steps)
        flush_at = {}
        for b, s in enumerate(flush_steps):
            if 0 <= s < n_steps:
                flush_at.setdefault(int(s), []).append(b)
        amp = fields * (self.dt / HBAR)
        populations = []
        dx = self.grid.dx
        psi = self._kinetic(psi, self.kin_half)
        for n in range(n_steps):
            psi *= self.pot_half
            psi = self._couple(psi, amp[:, n])
            psi *= self.pot_half
            rows = flush_at.get(n)
            if rows is not None:
                harvested[rows] += self._flush(psi, rows)
            if self.mask is not None:
                before = np.sum(np.abs(psi) ** 2, axis=(1, 2))
                psi *= self.mask
                absorbed += (before - np.sum(np.abs(psi) ** 2, axis=(1, 2))) * dx
            if record_every and n % record_every == 0:
                populations.append(np.sum(np.abs(psi) ** 2, axis=-1) * dx)
            psi = self._kinetic(psi, self.kin_half if n == n_steps - 1 else self.kin_full)
        return psi, harvested, absorbed, populations

    def free_step_operator(self, channel: int) -> np.ndarray:
        """Dense one-step field-free propagator for a channel (rows act on grid vectors)."""
        n = self.grid.n_points
        eye = np.eye(n, dtype=complex)
        half = np.fft.ifft(self.kin_half[:, None] * np.fft.fft(eye, axis=0), axis=0)
        return half @ (self.pot_half[channel][:, None] ** 2 * half)

    def boundary_population(self, psi) -> float:
        return float(np.max(np.sum(np.abs(psi[..., self._boundary]) ** 2, axis=(-1, -2)) * self.grid.dx))


@dataclass
class PropagationResult:
    final_state: VibronicState
    ionization_yield: float
    harvested: float = 0.0
    absorbed: float = 0.0
    times: np.ndarray | None = None
    channel_populations: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _check_norm(initial, final, harvested, absorbed, tolerance=NORM_TOLERANCE):
    drift = np.abs(final + harvested + absorbed - initial)
    worst = float(np.max(drift))
    if worst > tolerance * max(1.0, float(np.max(initial))):
        raise UnitarityError(f"unitarity violated: norm drift {worst:.3e} exceeds {tolerance:.1e}")
    return worst


def propagate(
    initial: VibronicState,
    model: SystemModel,
    field_values,
    tg: TimeGrid,
    absorbing_mask: bool = False,
    flush_after: float | None = None,
    record_every: int | None = None,
    backward: bool = False,
    propagator: SplitOperatorPropagator | None = None,
) -> PropagationResult:
    """Propagate ``initial`` under the real field sampled at ``tg.midpoints``.

    ``flush_after`` (fs) harvests the continuum population at that time; the
    harvested part is counted in the yield but no longer interacts with the
    field. ``backward`` runs the same steps with ``-dt`` (the caller supplies
    the field samples in reversed order).
    """
    field_values = np.asarray(field_values, dtype=float)
    if field_values.shape != (tg.n_steps,):
        raise ConfigurationError(f"field has {field_values.shape} samples, time grid has {tg.n_steps} steps")
    dt = -tg.dt if backward else tg.dt
    prop = propagator or SplitOperatorPropagator(model, initial.grid, dt, absorbing_mask)
    if prop.dt != dt or prop.grid != initial.grid:
        raise ConfigurationError("propagator was built for a different grid or step")
    psi = initial.channels[None].copy()
    norm0 = initial.total_norm()
    flush = None
    if flush_after is not None:
        flush = [int(round((flush_after - tg.t_start) / tg.dt)) - 1]
    psi, harvested, absorbed, pops = prop.evolve(psi, field_values[None], flush, record_every)
    final = VibronicState(initial.grid, psi[0])
    drift = _check_norm(np.array([norm0]), np.array([final.total_norm()]), harvested, absorbed)
    boundary = prop.boundary_population(psi)
    if boundary > BOUNDARY_TOLERANCE:
        warnings.warn(
            f"boundary population {boundary:.2e} exceeds {BOUNDARY_TOLERANCE:.0e}; "
            "enlarge the grid or enable the absorbing mask",
            RuntimeWarning,
            stacklevel=2,
        )
    cont = float(np.sum(final.channel_norms()[2:]))
    times = populations = None
    if record_every:
        idx = np.arange(0, tg.n_steps, record_every)
        times = tg.t_start + (idx + 1) * tg.dt
        populations = np.array([p[0] for p in pops])
    return PropagationResult(
        final,
        cont + float(harvested[0]),
        float(harvested[0]),
        float(absorbed[0]),
        times,
        populations,
        {"max_norm_drift": drift, "boundary_population": boundary},
    )


# -- delay scans ---------------------------------------------------------------------


@dataclass(frozen=True)
class Numerics:
    n_points: int = 256
    x_min: float = -8.0
    x_max: float = 8.0
    dt: float = 0.005
    support_threshold: float = 1e-3
    flush_min_delay: float = 45.0
    absorbing_mask: bool = False
    basis_tolerance: float = 1e-9

    @property
    def grid(self) -> SpatialGrid:
        return build_grid(self.n_points, self.x_min, self.x_max)


@dataclass(frozen=True)
class ScanSpec:
    delays: tuple
    phases: tuple = (0.0, math.pi)
    model: SystemModel = field(default_factory=benzene_preset)
    pulses: PulseSequence = field(default_factory=default_pulse_sequence)
    numerics: Numerics = field(default_factory=Numerics)
    method: str = "split"
    workers: int = 1

    def __post_init__(self):
        delays = tuple(float(d) for d in np.atleast_1d(self.delays))
        phases = tuple(float(p) for p in np.atleast_1d(self.phases))
        if not delays:
            raise ConfigurationError("scan needs at least one delay")
        if not phases:
            raise ConfigurationError("scan needs at least one phase")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ConfigurationError("delays must be strictly increasing")
        if self.method not in ("split", "direct"):
            raise ConfigurationError(f"unknown scan method {self.method!r}")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "phases", phases)


@dataclass
class IonizationTrace:
    """Yields on a (delay, phase) grid; ``yields[i, j]`` is delay i, phase j."""

    delays: np.ndarray
    phases: np.ndarray
    yields: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.phases = np.asarray(self.phases, dtype=float)
        self.yields = np.asarray(self.yields, dtype=float)
        if self.yields.shape != (self.delays.size, self.phases.size):
            raise ValueError(
                f"yields shape {self.yields.shape} inconsistent with {self.delays.size} delays x {self.phases.size} phases"
            )

    def column(self, phase: float, atol: float = 1e-9) -> np.ndarray:
        hits = np.flatnonzero(np.abs(np.angle(np.exp(1j * (self.phases - phase)))) < atol)
        if hits.size == 0:
            raise KeyError(f"trace has no phase column {phase!r}; phases are {self.phases.tolist()}")
        return self.yields[:, hits[0]]


def pulse_support(pulse: SpectralPulse, threshold: float):
    return pulse.support(threshold)


def tapered_field(pulse: SpectralPulse, times, threshold: float, t_ref: float = 0.0):
    """Real field of ``pulse`` windowed to its support.

    The window is 1 over the core and rolls off with a cos^2 edge to exactly
    zero at the support boundary, so pulses have compact support.
    ``t_ref`` shifts the pulse (used to reuse probe fields across delays).
    """
    lo, hi = pulse.support(threshold)
    lo += t_ref
    hi += t_ref
    times = np.asarray(times, dtype=float)
    values = np.zeros(times.size)
    inside = (times > lo) & (times < hi)
    if not inside.any():
        return values
    # synthesize over the whole support on a grid aligned with ``times`` so the
    # result does not depend on which slice of the pulse is requested
    idx = np.flatnonzero(inside)
    dt = (times[-1] - times[0]) / (times.size - 1) if times.size > 1 else (hi - lo)
    first = times[idx[0]] - dt * math.floor((times[idx[0]] - lo) / dt + 1e-9)
    count = int(math.floor((hi - first) / dt + 1e-9)) + 1
    full = _real_field_shifted(pulse, first + dt * np.arange(count), t_ref)
    pos = np.rint((times[idx] - first) / dt).astype(int)
    values[idx] = full[pos]
    edge = 0.25 * (hi - lo) / 2.0
    w = np.ones(times.size)
    rise = (times - lo) / edge
    fall = (hi - times) / edge
    w = np.where(rise < 1.0, np.sin(0.5 * np.pi * np.clip(rise, 0.0, 1.0)) ** 2, w)
    w = np.where(fall < 1.0, np.sin(0.5 * np.pi * np.clip(fall, 0.0, 1.0)) ** 2, w)
    return values * w * inside


def _real_field_shifted(pulse, times, t_ref):
    if t_ref == 0.0:
        return _real_field(pulse, times)
    return _real_field(pulse.with_mask(PhaseMaskTerm.delay_ramp(t_ref)), times)


class _ScanGeometry:
    """Time bookkeeping shared by the two scan methods."""

    def __init__(self, spec: ScanSpec):
        num = spec.numerics
        self.dt = num.dt
        pump, probe = spec.pulses.pump, spec.pulses.probe
        self.pump_lo, self.pump_hi = pump.support(num.support_threshold)
        self.probe_lo, self.probe_hi = probe.support(num.support_threshold)  # relative to the delay
        self.t0 = self.pump_lo

    def end_time(self, delay):
        return max(self.pump_hi, delay + self.probe_hi)

    def n_steps(self, delay):
        return int(math.ceil((self.end_time(delay) - self.t0) / self.dt - 1e-9))

    def separated(self, delay):
        return delay + self.probe_lo >= self.pump_hi

    def flush_time(self, delay, flush_min):
        return 0.5 * delay if delay >= flush_min else None


def _initial_state(spec: ScanSpec, grid: SpatialGrid) -> VibronicState:
    model = spec.model
    return harmonic_ground_state(
        grid, model.ground.quantum, model.ground.minimum_position, model.ground.quantum, model.n_channels
    )


def _sequence_fields(spec, delay, phase, times):
    num = spec.numerics
    e = tapered_field(spec.pulses.pump, times, num.support_threshold)
    e += _probe_only_field(spec, phase, times, t_ref=delay)
    return e


def _direct_point(spec: ScanSpec, delay: float, phase: float):
    num = spec.numerics
    grid = num.grid
    geo = _ScanGeometry(spec)
    n = geo.n_steps(delay)
    tg = TimeGrid(geo.t0, geo.t0 + n * geo.dt, geo.dt)
    e = _sequence_fields(spec, delay, phase, tg.midpoints)
    prop = SplitOperatorPropagator(spec.model, grid, geo.dt, num.absorbing_mask)
    flush = geo.flush_time(delay, num.flush_min_delay)
    res = propagate(_initial_state(spec, grid), spec.model, e, tg, num.absorbing_mask, flush, propagator=prop)
    return res.ionization_yield


def _direct_job(args):
    spec, delay, phase = args
    try:
        return _direct_point(spec, delay, phase)
    except Exception as exc:  # pragma: no cover - surfaced through ScanError
        raise ScanError(f"propagation failed: {exc}", delay, phase) from exc


class _SplitScanner:
    """Pump once, then exact free evolution and a probe-window response."""

    def __init__(self, spec: ScanSpec):
        self.spec = spec
        num = spec.numerics
        self.grid = num.grid
        self.geo = _ScanGeometry(spec)
        self.prop = SplitOperatorPropagator(spec.model, self.grid, num.dt, num.absorbing_mask)
        self.max_drift = 0.0
        self.max_boundary = 0.0

    # pump-only stage, recording checkpoints at the given step indices
    def pump_stage(self, checkpoints):
        geo, num = self.geo, self.spec.numerics
        n = int(math.ceil((geo.pump_hi - geo.t0) / geo.dt - 1e-9))
        n = max([n] + [c for c in checkpoints])
        tg = TimeGrid(geo.t0, geo.t0 + n * geo.dt, geo.dt)
        e = tapered_field(self.spec.pulses.pump, tg.midpoints, num.support_threshold)
        state = _initial_state(self.spec, self.grid)
        psi = state.channels[None].copy()
        saved = {}
        marks = sorted(set(checkpoints))
        start = 0
        for m in marks + [n]:
            if m > start:
                psi, h, a, _ = self.prop.evolve(psi, e[None, start:m])
                if h.any() or a.any():
                    raise AssertionError("unexpected harvest in pump stage")
            saved[m] = psi[0].copy()
            start = m
        self.pump_end_time = geo.t0 + n * geo.dt
        self.pump_end = saved[n]
        self._check(state.total_norm(), np.sum(np.abs(self.pump_end) ** 2) * self.grid.dx, 0.0, 0.0)
        return saved

    def _check(self, n0, n1, h, a):
        self.max_drift = max(self.max_drift, _check_norm(np.atleast_1d(n0), np.atleast_1d(n1), np.atleast_1d(h), np.atleast_1d(a)))

    def overlapping(self, delays, phase, checkpoints, length, workers=1, progress=None, wanted=None):
        """Batch-propagate delays whose probe starts during the pump stage.

        Every trajectory runs ``length`` steps and batches are always cut
        from the full ``delays`` list; only batches holding a ``wanted``
        delay are run. Batched FFTs round differently for different batch
        contents, so this keeps resumed scans bit-identical.
        """
        geo, num = self.geo, self.spec.numerics
        wanted = set(delays) if wanted is None else set(wanted)
        jobs, meta = [], []
        for chunk in _chunks(delays, BATCH):
            if not wanted.intersection(chunk):
                continue
            starts = [max(0, int(round((d + geo.probe_lo - geo.t0) / geo.dt))) for d in chunk]
            psi = np.stack([checkpoints[s] for s in starts])
            fields = np.zeros((len(chunk), length))
            flush = np.full(len(chunk), -1)
            for b, (d, s) in enumerate(zip(chunk, starts)):
                t_mid = geo.t0 + (s + np.arange(length) + 0.5) * geo.dt
                fields[b] = _sequence_fields(self.spec, d, phase, t_mid)
                ft = geo.flush_time(d, num.flush_min_delay)
                if ft is not None:
                    flush[b] = int(round((ft - geo.t0) / geo.dt)) - 1 - s
            jobs.append((self.spec, psi, fields, flush, False))
            meta.append(chunk)
        out = {}
        for chunk, res in zip(meta, _map(_evolve_batch, jobs, workers)):
            if isinstance(res, Exception):
                raise ScanError(f"propagation failed: {res}", chunk[0], phase)
            yields, drift, boundary = res
            self.max_drift = max(self.max_drift, drift)
            self.max_boundary = max(self.max_boundary, boundary)
            done = [(d, float(y)) for d, y in zip(chunk, yields) if d in wanted]
            out.update(done)
            if progress:
                progress([(d, phase, y) for d, y in done])
        return out

    def free_basis(self):
        """Eigen-decomposition of the free one-step operator for channels 0 and 1."""
        basis = []
        for ch in (0, 1):
            s = self.prop.free_step_operator(ch)
            t, z = scipy.linalg.schur(s, output="complex")
            basis.append((np.angle(np.diag(t)), z))
        return basis

    def separated(self, delays, phases, workers=1, progress=None):
        geo, num = self.geo, self.spec.numerics
        dx = self.grid.dx
        pump_end = self.pump_end.copy()
        harvested = float(np.sum(np.abs(pump_end[2:]) ** 2) * dx)
        pump_end[2:] = 0.0
        basis = self.free_basis()
        coeffs, thetas, vectors, channels = [], [], [], []
        for ch, (theta, z) in enumerate(basis):
            c = z.conj().T @ pump_end[ch]
            coeffs.append(c)
            thetas.append(theta)
            vectors.append(z)
            channels.append(np.full(c.size, ch))
        c_all = np.concatenate(coeffs)
        keep = np.abs(c_all) > num.basis_tolerance * np.abs(c_all).max()
        theta_all = np.concatenate(thetas)[keep]
        ch_all = np.concatenate(channels)[keep]
        z_all = np.concatenate([vectors[0], vectors[1]], axis=1)[:, keep]
        c_kept = c_all[keep]
        residual = float(np.sum(np.abs(c_all[~keep]) ** 2) * 1.0)
        k = c_kept.size
        # response of each kept eigenvector through the probe window
        n_probe = int(math.ceil((geo.probe_hi - geo.probe_lo) / geo.dt - 1e-9))
        t_mid = geo.probe_lo + (np.arange(n_probe) + 0.5) * geo.dt
        results = {}
        for phase in phases:
            e = _probe_only_field(self.spec, phase, t_mid)
            jobs = []
            for chunk in _chunks(list(range(k)), BATCH):
                psi = np.zeros((len(chunk), self.spec.model.n_channels, self.grid.n_points), dtype=complex)
                for b, j in enumerate(chunk):
                    psi[b, ch_all[j]] = z_all[:, j] / math.sqrt(dx)
                jobs.append((self.spec, psi, np.broadcast_to(e, (len(chunk), n_probe)).copy(), None, True))
            parts = []
            for res in _map(_evolve_batch, jobs, workers):
                if isinstance(res, Exception):
                    raise ScanError(f"probe-window response failed: {res}", delays[0], phase)
                cont, drift, boundary = res
                self.max_drift = max(self.max_drift, drift)
                self.max_boundary = max(self.max_boundary, boundary)
                parts.append(cont)
            resp = np.concatenate(parts)
            gram = np.einsum("iku,jku->ij", resp.conj(), resp) * dx
            for d in delays:
                s = (d + geo.probe_lo - self.pump_end_time) / geo.dt
                amp = c_kept * np.sqrt(dx) * np.exp(1j * s * theta_all)
                results[(d, phase)] = harvested + float(np.real(amp.conj() @ gram @ amp))
            if progress:
                progress([(d, phase, results[(d, phase)]) for d in delays])
        self.basis_size = k
        self.basis_residual = residual * dx
        return results


def _probe_only_field(spec, phase, times, t_ref=0.0):
    shaped = spec.pulses.probe.with_mask(PhaseMaskTerm.constant(phase))
    return tapered_field(shaped, times, spec.numerics.support_threshold, t_ref=t_ref)


def _evolve_batch(args):
    """Worker: propagate one batch; returns yields (or continuum parts), drift, boundary."""
    spec, psi, fields, flush, return_continuum = args
    try:
        num = spec.numerics
        prop = SplitOperatorPropagator(spec.model, num.grid, num.dt, num.absorbing_mask)
        dx = prop.grid.dx
        n0 = np.sum(np.abs(psi) ** 2, axis=(1, 2)) * dx
        psi, h, a, _ = prop.evolve(psi, fields, flush)
        n1 = np.sum(np.abs(psi) ** 2, axis=(1, 2)) * dx
        drift = _check_norm(n0, n1, h, a)
        boundary = prop.boundary_population(psi)
        if return_continuum:
            return psi[:, 2:], drift, boundary
        cont = np.sum(np.abs(psi[:, 2:]) ** 2, axis=(1, 2)) * dx
        return cont + h, drift, boundary
    except (UnitarityError, FloatingPointError, ValueError) as exc:
        return exc


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _chunks(items, size):
    items = list(items)
    for i in range(0, len(items), size):
        yield items[i : i + size]


def run_delay_scan(spec: ScanSpec, progress=None, completed=None) -> IonizationTrace:
    """Ionization yield for every (delay, phase) in ``spec``.

    ``progress`` is called with lists of ``(delay, phase, yield)`` as points
    finish; ``completed`` maps already known ``(delay, phase)`` points to
    their yields, which are reused instead of recomputed. Values do not
    depend on ``spec.workers`` or on which points were already completed.
    """
    delays, phases = spec.delays, spec.phases
    values = dict(completed or {})
    todo = [(d, p) for d in delays for p in phases if (d, p) not in values]
    diagnostics = {}
    if spec.method == "direct":
        jobs = [(spec, d, p) for d, p in todo]
        for (d, p), y in zip(todo, _map(_direct_job, jobs, spec.workers)):
            values[(d, p)] = y
            if progress:
                progress([(d, p, y)])
    elif todo:
        values.update(_split_scan(spec, todo, diagnostics, progress))
    yields = np.array([[values[(d, p)] for p in phases] for d in delays], dtype=float)
    if not np.all(np.isfinite(yields)):
        bad = np.argwhere(~np.isfinite(yields))[0]
        raise ScanError("non-finite yield", delays[bad[0]], phases[bad[1]])
    return IonizationTrace(np.array(delays), np.array(phases), yields, scan_metadata(spec, diagnostics))


def _split_scan(spec, todo, diagnostics, progress):
    scanner = _SplitScanner(spec)
    geo = scanner.geo
    dt = geo.dt
    todo_delays = sorted({d for d, _ in todo})
    commensurate = {d: abs(d / dt - round(d / dt)) < 1e-6 for d in spec.delays}
    all_overlap = [d for d in spec.delays if commensurate[d] and not geo.separated(d)]
    overlap = [d for d in todo_delays if d in all_overlap]
    separated = [d for d in todo_delays if geo.separated(d)]
    fallback = [d for d in todo_delays if not geo.separated(d) and not commensurate[d]]
    starts = {d: max(0, int(round((d + geo.probe_lo - geo.t0) / dt))) for d in all_overlap}
    length = max((geo.n_steps(d) - starts[d] for d in all_overlap), default=0)
    # checkpoints and batches come from the full scan, not only the pending
    # points, so a resumed scan repeats the same floating-point operations
    checkpoints = scanner.pump_stage([starts[d] for d in all_overlap])
    values = {}
    wanted = set(todo)
    for p in spec.phases:
        pending = [d for d in overlap if (d, p) in wanted]
        if not pending:
            continue
        found = scanner.overlapping(all_overlap, p, checkpoints, length, spec.workers, progress, pending)
        for d, y in found.items():
            values[(d, p)] = y
    if separated:
        phases = [p for p in spec.phases if any((d, p) in wanted for d in separated)]
        report = None
        if progress:
            def report(records):
                progress([r for r in records if (r[0], r[1]) in wanted])
        found = scanner.separated(separated, phases, spec.workers, report)
        values.update({k: v for k, v in found.items() if k in wanted})
        diagnostics["basis_size"] = scanner.basis_size
        diagnostics["basis_residual"] = scanner.basis_residual
    for d in fallback:
        for p in spec.phases:
            if (d, p) in wanted:
                values[(d, p)] = _direct_job((spec, d, p))
                if progress:
                    progress([(d, p, values[(d, p)])])
    diagnostics["max_norm_drift"] = scanner.max_drift
    diagnostics["boundary_population"] = scanner.max_boundary
    return values


def scan_metadata(spec: ScanSpec, diagnostics=None) -> dict:
    from dataclasses import asdict

    from . import __version__

    pulses = spec.pulses
    return {
        "schema": "attoscope.trace-meta/1",
        "tool_version": __version__,
        "model": spec.model.to_dict(),
        "pulses": {
            "pump": _pulse_dict(pulses.pump),
            "probe": _pulse_dict(pulses.probe),
        },
        "numerics": asdict(spec.numerics),
        "method": spec.method,
        "n_delays": len(spec.delays),
        "phases": list(spec.phases),
        "diagnostics": diagnostics or {},
        "flags": {
            # experimental values are not known; these record whether defaults were used
            "pulse_duration_is_default": abs(pulses.pump.duration - 15.0) < 1e-9 and abs(pulses.probe.duration - 15.0) < 1e-9,
            "pump_probe_ratio_is_default": pulses.pump.field_amplitude == pulses.probe.field_amplitude,
        },
    }


def _pulse_dict(p: SpectralPulse) -> dict:
    return {
        "central_frequency_rad_fs": p.central_frequency,
        "wavelength_nm": p.wavelength_nm,
        "spectral_fwhm_rad_fs": p.spectral_fwhm,
        "duration_fs": p.duration,
        "field_amplitude": p.field_amplitude,
        "phase_mask": [{"kind": t.kind, "value": t.value} for t in p.phase_mask],
    }


def convergence_check(
    spec: ScanSpec, refinements=("dt", "grid", "continuum"), tolerance=0.02, period_tolerance=0.002
) -> dict:
    """Relative change of yields, diff amplitude and carrier period under refinements.

    Yields and amplitudes must change by less than ``tolerance``, the carrier
    period (fitted when the scan has at least 8 delays) by less than
    ``period_tolerance``.
    """
    from .analysis import fit_sinusoid, phase_cycle

    if len(spec.delays) > 20:
        raise ConfigurationError("convergence_check expects a small scan (<= 20 delays)")

    def summarize(trace):
        diff, _ = phase_cycle(trace)
        out = {"mean_yield": float(np.mean(trace.yields)), "diff_amplitude": float(np.max(np.abs(diff)))}
        guess = spec.pulses.pump.central_frequency
        if len(spec.delays) >= 8:
            fit = fit_sinusoid(trace.delays, diff, guess, fit_frequency=True)
            out["carrier_period_as"] = 2e3 * math.pi / fit["omega"]
        return out

    base = summarize(run_delay_scan(spec))
    report = {"base": base, "refinements": {}, "tolerance": tolerance, "period_tolerance": period_tolerance}
    num = spec.numerics
    variants = {
        "dt": lambda s: replace(s, numerics=replace(num, dt=num.dt / 2)),
        "grid": lambda s: replace(s, numerics=replace(num, n_points=2 * num.n_points)),
        "continuum": lambda s: replace(s, model=s.model.with_continuum(s.model.continuum.refined())),
    }
    passed = True
    for name in refinements:
        refined = summarize(run_delay_scan(variants[name](spec)))
        changes = {k: abs(refined[k] - base[k]) / abs(base[k]) for k in base if base[k]}
        ok = all(v < (period_tolerance if k == "carrier_period_as" else tolerance) for k, v in changes.items())
        passed &= ok
        report["refinements"][name] = {"values": refined, "relative_change": changes, "passed": ok}
    report["passed"] = passed
    return report
