"""Frequency sweep, eigen-decomposition, trace tracking and the stability
criterion.

The system is declared stable iff at every frequency where an eigenvalue
trace of the nodal admittance matrix crosses the real axis (Im = 0), the
real part is positive.  Crossings with negative real part are the critical
(negatively damped) oscillatory modes.  A discrete Nyquist winding count
over the conjugate-closed eigenvalue loci is provided as a cross-check
oracle for tests; it is not part of the shipped verdict.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dq_core import FrequencyGrid
from .network_assembly import NetworkGraph, assemble_grid

# eigenvector-overlap score below which a tracking step is flagged
DEFAULT_OVERLAP_THRESHOLD = 0.5


class EigNonConvergenceError(RuntimeError):
    """The eigenvalue iteration failed to converge."""


class DefectiveMatrixWarning(UserWarning):
    """Right-eigenvector matrix is ill-conditioned; sensitivities unreliable."""


class BisectionError(RuntimeError):
    """Crossover refinement did not reach tolerance within the step cap."""


@dataclass(frozen=True)
class EigenSample:
    """Full spectrum at one frequency.

    w holds right eigenvectors as columns; u holds left eigenvectors as
    rows and equals inv(w), so u @ w = I (the biorthogonal normalization
    the first-order perturbation formulas assume).
    """

    f_hz: float
    lam: np.ndarray
    w: np.ndarray
    u: np.ndarray

    @property
    def size(self) -> int:
        return len(self.lam)


def eig_lr(m: np.ndarray, f_hz: float = float("nan")) -> EigenSample:
    """Eigenvalues with biorthogonal left/right eigenvectors.

    Warns DefectiveMatrixWarning when cond(W) exceeds 1e10 (near-defective
    matrix; left vectors via inversion lose accuracy there).
    """
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        lam, w = np.linalg.eig(m)
    except np.linalg.LinAlgError as e:
        raise EigNonConvergenceError(f"eig failed at f={f_hz} Hz: {e}") from e
    cond = np.linalg.cond(w)
    if cond > 1e10:
        warnings.warn(f"near-defective matrix at f={f_hz} Hz (cond(W)={cond:.2e})",
                      DefectiveMatrixWarning, stacklevel=2)
    u = np.linalg.inv(w)
    return EigenSample(f_hz, lam, w, u)


def default_workers() -> int:
    """Sweep parallelism, capped by the DAMP_PLANNER_THREADS env var."""
    cap = os.environ.get("DAMP_PLANNER_THREADS")
    if cap is not None:
        return max(1, int(cap))
    return 1


def sweep(g: NetworkGraph, grid: FrequencyGrid, workers: int | None = None) -> list[EigenSample]:
    """One EigenSample per grid frequency, in grid order.

    Chunks of the grid may be assembled and decomposed on parallel
    workers; each frequency is computed independently, so results do not
    depend on scheduling.
    """
    freqs = grid.hz
    if workers is None:
        workers = default_workers()

    def run_chunk(chunk: np.ndarray):
        mats = assemble_grid(g, chunk)
        try:
            lam, w = np.linalg.eig(mats)
            u = np.linalg.inv(w)
        except np.linalg.LinAlgError:
            # redo one by one to attach the offending frequency
            singles = [eig_lr(m, float(f)) for m, f in zip(mats, chunk)]
            lam = np.stack([s.lam for s in singles])
            w = np.stack([s.w for s in singles])
            u = np.stack([s.u for s in singles])
        return lam, w, u

    if workers <= 1 or len(freqs) < 64:
        parts = [run_chunk(freqs)]
        chunks = [freqs]
    else:
        chunks = np.array_split(freqs, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, chunks))

    samples: list[EigenSample] = []
    for chunk, (lam, w, u) in zip(chunks, parts):
        for k, f in enumerate(chunk):
            samples.append(EigenSample(float(f), lam[k], w[k], u[k]))
    return samples


@dataclass
class EigenTrace:
    """One eigenvalue followed across the sweep with a consistent identity.

    Trace ids are 1-based, assigned by descending |lambda| at the first
    sweep frequency.  discontinuities lists step indices whose
    eigenvector-overlap score fell below the threshold (never silently
    bridged, only flagged).
    """

    trace_id: int
    f_hz: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    w: np.ndarray
    overlaps: np.ndarray
    discontinuities: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.f_hz)


def _greedy_match(score: np.ndarray, lam_prev: np.ndarray, lam_next: np.ndarray) -> np.ndarray:
    """perm[k] = column of score assigned to row k, greedy by max score.

    Ties (equal scores) break toward the nearest eigenvalue in the
    complex plane, then lowest index, keeping the result deterministic.
    """
    m = score.shape[0]
    perm = np.full(m, -1)
    dist = np.abs(lam_prev[:, None] - lam_next[None, :])
    order = sorted(
        ((-score[a, b], dist[a, b], a, b) for a in range(m) for b in range(m)))
    taken_rows: set[int] = set()
    taken_cols: set[int] = set()
    for _, _, a, b in order:
        if a in taken_rows or b in taken_cols:
            continue
        perm[a] = b
        taken_rows.add(a)
        taken_cols.add(b)
        if len(taken_rows) == m:
            break
    return perm


def track(samples: Sequence[EigenSample],
          overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD) -> list[EigenTrace]:
    """Connect per-frequency spectra into continuous eigenvalue traces.

    Consecutive samples are matched greedily on the left/right
    eigenvector overlap |u_k(f) . w_j(f+df)| (1 for a perfectly continued
    pair under the biorthogonal normalization), so traces keep their
    identity through eigenvalue near-collisions where plain
    value-proximity matching would swap them.
    """
    if len(samples) < 2:
        raise ValueError("tracking needs at least 2 samples")
    m = samples[0].size
    nf = len(samples)

    idx = np.empty((nf, m), dtype=int)
    idx[0] = np.argsort(-np.abs(samples[0].lam), kind="stable")
    overlaps = np.ones((nf - 1, m))

    for t in range(nf - 1):
        cur, nxt = samples[t], samples[t + 1]
        score = np.abs(cur.u[idx[t]] @ nxt.w)
        perm = _greedy_match(score, cur.lam[idx[t]], nxt.lam)
        idx[t + 1] = perm
        overlaps[t] = score[np.arange(m), perm]

    f = np.array([s.f_hz for s in samples])
    traces = []
    for k in range(m):
        lam = np.array([samples[t].lam[idx[t, k]] for t in range(nf)])
        u = np.array([samples[t].u[idx[t, k]] for t in range(nf)])
        w = np.array([samples[t].w[:, idx[t, k]] for t in range(nf)])
        ov = overlaps[:, k]
        disc = tuple(int(i) for i in np.nonzero(ov < overlap_threshold)[0])
        traces.append(EigenTrace(k + 1, f, lam, u, w, ov, disc))
    return traces


@dataclass(frozen=True)
class CrossoverEvent:
    """A frequency where Im[lambda] of one trace crosses zero."""

    trace_id: int
    f_cr_hz: float
    re_lambda: float
    direction: str  # "falling" (+ to -) or "rising" (- to +)
    verdict: str    # "critical" if re_lambda < margin else "stable-crossing"


def _pick_matching_eig(sample: EigenSample, u_ref: np.ndarray) -> int:
    return int(np.argmax(np.abs(u_ref @ sample.w)))


def _refine_bisect(matrix_at: Callable[[float], np.ndarray],
                   f_lo: float, f_hi: float, im_lo: float,
                   u_ref: np.ndarray,
                   max_steps: int = 60) -> tuple[float, complex]:
    """Bisect on sign(Im[lambda]) with the eigenvalue re-identified by
    eigenvector overlap at every midpoint."""
    lam_best = None
    for _ in range(max_steps):
        f_mid = 0.5 * (f_lo + f_hi)
        smp = eig_lr(matrix_at(f_mid), f_mid)
        j = _pick_matching_eig(smp, u_ref)
        lam = smp.lam[j]
        if abs(lam.imag) <= 1e-6 * max(1.0, abs(lam.real)):
            return f_mid, lam
        lam_best = lam
        if (lam.imag > 0) == (im_lo > 0):
            f_lo = f_mid
            u_ref = smp.u[j]
        else:
            f_hi = f_mid
    raise BisectionError(
        f"crossover refinement at [{f_lo}, {f_hi}] Hz did not reach |Im| tolerance "
        f"in {max_steps} steps (last lambda={lam_best})")


def find_crossovers(trace: EigenTrace,
                    matrix_at: Callable[[float], np.ndarray] | None = None,
                    margin: float = 0.0) -> list[CrossoverEvent]:
    """Zero crossings of Im[lambda] along one trace.

    With matrix_at given, each detected sign change is refined by
    bisection on freshly assembled and decomposed matrices to
    |Im| <= 1e-6 * max(1, |Re|); without it the crossing is located by
    linear interpolation between the bracketing samples (test aid for
    synthetic traces).
    """
    events: list[CrossoverEvent] = []
    im = trace.lam.imag
    re = trace.lam.real
    f = trace.f_hz
    for t in range(len(trace) - 1):
        if im[t] == 0.0:
            direction = "falling" if im[t + 1] < 0 else "rising"
            events.append(_make_event(trace.trace_id, float(f[t]), float(re[t]),
                                      direction, margin))
            continue
        if im[t] * im[t + 1] < 0:
            direction = "falling" if im[t] > 0 else "rising"
            if matrix_at is not None:
                f_cr, lam = _refine_bisect(matrix_at, float(f[t]), float(f[t + 1]),
                                           float(im[t]), trace.u[t])
                events.append(_make_event(trace.trace_id, f_cr, float(lam.real),
                                          direction, margin))
            else:
                a = im[t] / (im[t] - im[t + 1])
                f_cr = float(f[t] + a * (f[t + 1] - f[t]))
                re_cr = float(re[t] + a * (re[t + 1] - re[t]))
                events.append(_make_event(trace.trace_id, f_cr, re_cr,
                                          direction, margin))
    if len(trace) and im[-1] == 0.0:
        events.append(_make_event(trace.trace_id, float(f[-1]), float(re[-1]),
                                  "rising" if im[-2] < 0 else "falling", margin))
    return events


def _make_event(trace_id: int, f_cr: float, re_cr: float, direction: str,
                margin: float) -> CrossoverEvent:
    verdict = "critical" if re_cr < margin else "stable-crossing"
    return CrossoverEvent(trace_id, f_cr, re_cr, direction, verdict)


@dataclass(frozen=True)
class StabilityReport:
    """Crossover events per trace and the overall verdict."""

    events: tuple[CrossoverEvent, ...]
    critical_trace_ids: tuple[int, ...]
    stable: bool

    @property
    def critical_events(self) -> tuple[CrossoverEvent, ...]:
        return tuple(e for e in self.events if e.verdict == "critical")


def assess(traces: Sequence[EigenTrace],
           matrix_at: Callable[[float], np.ndarray] | None = None,
           margin: float = 0.0) -> StabilityReport:
    """Stability verdict: stable iff every crossover has Re[lambda] > 0."""
    events: list[CrossoverEvent] = []
    for tr in traces:
        events.extend(find_crossovers(tr, matrix_at, margin))
    events.sort(key=lambda e: (e.f_cr_hz, e.trace_id))
    stable = all(e.re_lambda > 0.0 for e in events)
    crit = tuple(sorted({e.trace_id for e in events if e.verdict == "critical"}))
    return StabilityReport(tuple(events), crit, stable)


def nyquist_winding(trace: EigenTrace, origin_tol: float = 1e-9) -> int | None:
    """Discrete winding number of the conjugate-closed trace around 0.

    The positive-frequency locus is closed with its complex conjugate
    traversed backwards (exact only for real-coefficient systems, which
    is why this is a cross-check oracle rather than a shipped criterion).
    Returns None (indeterminate) when the polygon passes within
    origin_tol of the origin.
    """
    fwd = trace.lam
    closed = np.concatenate([fwd, np.conj(fwd[::-1])])
    nxt = np.roll(closed, -1)

    # distance from origin to each closing segment
    d = nxt - closed
    seg_len2 = np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(seg_len2 > 0,
                     -np.real(np.conj(d) * closed) / np.where(seg_len2 > 0, seg_len2, 1.0),
                     0.0)
    t = np.clip(t, 0.0, 1.0)
    dist = np.abs(closed + t * d)
    if np.min(dist) < origin_tol:
        return None

    ang = np.angle(nxt / closed)
    return int(round(float(np.sum(ang)) / (2.0 * np.pi)))


def analyze(g: NetworkGraph, grid: FrequencyGrid, workers: int | None = None,
            margin: float = 0.0,
            overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD):
    """Sweep, track and assess in one call.

    Returns (samples, traces, report); crossovers are bisection-refined
    against re-assembled matrices.
    """
    samples = sweep(g, grid, workers)
    traces = track(samples, overlap_threshold)
    matrix_at = lambda f: assemble_grid(g, np.asarray([f]))[0]
    report = assess(traces, matrix_at, margin)
    return samples, traces, report
