"""Time stepping: Strang splitting of the exact collision flow around a DIRK2 step.

One step of size ``dt``::

    collision(dt/2) -> DIRK2 transport/field(dt) -> collision(dt/2) -> filter

The DIRK2 tableau is the two-stage, stiffly accurate SDIRK with
``gamma = 1 - sqrt(2)/2``. Each implicit stage ``Y = X + gamma dt (L Y + G(Y))``
treats the Hermite/DG transport ``L`` implicitly and the field terms ``G``
(the ``A Phi`` coupling and the projected ``E D`` products) by Picard iteration
with the field frozen at the previous iterate.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgument, NumericFailure
from .system import HermiteState, VPFPSystem

__all__ = [
    "GAMMA",
    "TimeStepperConfig",
    "StageSolver",
    "collision_half_step",
    "filter_profile",
    "hou_li_filter",
    "transport_field_dirk2_step",
    "step",
    "run",
    "RunResult",
]

GAMMA = 1.0 - math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class TimeStepperConfig:
    dt: float = 0.1
    picard_tol: float = 1e-12
    picard_max_iters: int = 50
    filter_enabled: bool = True
    filter_alpha: float = 36.0
    filter_order: int = 36
    dealias_cut: float = 2.0 / 3.0
    filter_hard: bool = False
    nonlinear: bool = True
    stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidArgument("dt must be positive")
        if not self.picard_tol > 0:
            raise InvalidArgument("picard_tol must be positive")
        if self.picard_max_iters < 1:
            raise InvalidArgument("picard_max_iters must be at least 1")
        if self.filter_order <= 0 or self.filter_order % 2:
            raise InvalidArgument("filter_order must be a positive even integer")
        if not 0.0 <= self.dealias_cut <= 1.0:
            raise InvalidArgument("dealias_cut must lie in [0, 1]")
        if self.stride < 1:
            raise InvalidArgument("stride must be at least 1")

    def as_dict(self):
        return asdict(self)


def collision_half_step(state: HermiteState, params, dt_half) -> HermiteState:
    """Exact collision sub-flow: ``D_k <- exp(-k dt_half / tau0) D_k``."""
    k = np.arange(state.NH + 1)
    decay = np.exp(-k * dt_half / params.tau0)
    return HermiteState(state.mesh, state.degree, state.data * decay[:, None, None])


def filter_profile(NH, config: TimeStepperConfig) -> np.ndarray:
    """``sigma(k / NH)`` for ``k = 0..NH``; identity up to the dealiasing cut."""
    eta = np.arange(NH + 1) / NH
    if config.filter_hard:
        sigma = np.where(eta > config.dealias_cut, 0.0, 1.0)
    else:
        sigma = np.where(eta > config.dealias_cut,
                         np.exp(-config.filter_alpha * eta ** config.filter_order), 1.0)
    sigma[0] = 1.0
    return sigma


def hou_li_filter(state: HermiteState, config: TimeStepperConfig) -> HermiteState:
    sigma = filter_profile(state.NH, config)
    return HermiteState(state.mesh, state.degree, state.data * sigma[:, None, None])


class StageSolver:
    """Solver for ``(I - c L) Y = R`` with ``L`` the Hermite/DG transport block matrix.

    On uniform meshes ``A_h`` and ``A_h^*`` are block circulant in the cell
    index, so a real FFT along the cells splits the system into ``Nx//2 + 1``
    block-tridiagonal systems in the Hermite index, solved by block elimination.
    ``L`` is skew-symmetric (``A_h^* = A_h^T``), so ``I - c L`` has identity
    symmetric part and elimination without pivoting is stable. Non-uniform
    meshes fall back to a sparse LU factorization.
    """

    def __init__(self, system: VPFPSystem, c, method=None):
        self.system = system
        self.c = float(c)
        if method is None:
            method = "fourier" if system.mesh.is_uniform else "sparse_lu"
        if method not in ("fourier", "sparse_lu"):
            raise InvalidArgument(f"unknown stage solver {method!r}")
        self.method = method
        if method == "fourier":
            self._factor_fourier()
        else:
            n = system.transport_matrix().shape[0]
            M = sp.identity(n, format="csc") - self.c * system.transport_matrix().tocsc()
            self._lu = spla.splu(M.tocsc())

    @staticmethod
    def symbol(mat, nx, nb):
        """Fourier symbol ``sum_s a_s exp(2 pi i q s / Nx)``, ``q = 0..Nx//2``."""
        row = mat[:nb].toarray().reshape(nb, nx, nb).transpose(1, 0, 2)
        return (np.fft.ifft(row, axis=0) * nx)[: nx // 2 + 1]

    def _factor_fourier(self):
        s = self.system
        nx, nb, K = s.mesh.num_cells, s.params.m + 1, s.params.NH + 1
        Ahat = self.symbol(s.A, nx, nb)
        Ashat = self.symbol(s.A_star, nx, nb)
        sq = np.sqrt(np.arange(K))
        eye = np.eye(nb)
        # row k: Y_k + c sqrt(k) A Y_{k-1} - c sqrt(k+1) A* Y_{k+1}
        self._lower = [None] + [self.c * sq[k] * Ahat for k in range(1, K)]
        self._upper = [-self.c * sq[k + 1] * Ashat for k in range(K - 1)] + [None]
        winv = [np.broadcast_to(eye, Ahat.shape).astype(complex)]
        gain = [None]
        for k in range(1, K):
            g = self._lower[k] @ winv[k - 1]
            W = eye - g @ self._upper[k - 1]
            gain.append(g)
            winv.append(np.linalg.inv(W))
        self._winv, self._gain = winv, gain

    def solve(self, R):
        """``R`` has shape ``(NH+1, Nx, m+1)``; returns the solution in the same layout."""
        if self.method == "sparse_lu":
            return self._lu.solve(R.reshape(-1)).reshape(R.shape)
        nx = R.shape[1]
        Rh = np.fft.rfft(R, axis=1)
        K = R.shape[0]
        g = [Rh[0]]
        for k in range(1, K):
            g.append(Rh[k] - np.einsum("qab,qb->qa", self._gain[k], g[k - 1]))
        Y = [None] * K
        Y[-1] = np.einsum("qab,qb->qa", self._winv[-1], g[-1])
        for k in range(K - 2, -1, -1):
            rhs = g[k] - np.einsum("qab,qb->qa", self._upper[k], Y[k + 1])
            Y[k] = np.einsum("qab,qb->qa", self._winv[k], rhs)
        return np.fft.irfft(np.stack(Y), n=nx, axis=1)


class _StageCache:
    def __init__(self, system):
        self.system = system
        self._solvers = {}

    def get(self, c):
        key = float(c)
        if key not in self._solvers:
            if len(self._solvers) > 4:
                self._solvers.clear()
            self._solvers[key] = StageSolver(self.system, key)
        return self._solvers[key]


def _stage_cache(system):
    cache = getattr(system, "_stage_cache", None)
    if cache is None:
        cache = _StageCache(system)
        system._stage_cache = cache
    return cache


def _field(system, data, nonlinear):
    sol = system.solve_field(HermiteState(system.mesh, system.params.m, data).mode(0))
    return system.field_terms(data, sol, nonlinear)


def _implicit_stage(system, solver, X, c, config, guess):
    """Solve ``Y = X + c (L Y + G(Y))`` by Picard iteration on ``G``."""
    Y = guess
    incr = np.inf
    for it in range(1, config.picard_max_iters + 1):
        G = _field(system, Y, config.nonlinear)
        Y_new = solver.solve(X + c * G)
        incr = np.linalg.norm(Y_new - Y) / max(np.linalg.norm(Y_new), np.finfo(float).tiny)
        Y = Y_new
        if incr <= config.picard_tol:
            return Y, it
    raise NumericFailure(
        f"Picard iteration did not converge in {config.picard_max_iters} iterations "
        f"(last increment {incr:.2e})", residual=float(incr))


def transport_field_dirk2_step(state: HermiteState, system: VPFPSystem, dt,
                               config: TimeStepperConfig) -> HermiteState:
    """One DIRK2 step of the collisionless system ``dD/dt = L D + G(D)``."""
    if dt == 0:
        return state.copy()
    c = GAMMA * dt
    solver = _stage_cache(system).get(c)
    X = state.data
    F0 = system.transport_terms(state.flat()).reshape(X.shape) + _field(system, X, config.nonlinear)
    Y1, _ = _implicit_stage(system, solver, X, c, config, X + c * F0)
    F1 = (Y1 - X) / c
    X2 = X + (1.0 - GAMMA) * dt * F1
    Y2, _ = _implicit_stage(system, solver, X2, c, config, X2 + c * F1)
    return HermiteState(state.mesh, state.degree, Y2)


def step(state, system: VPFPSystem, dt, config: TimeStepperConfig) -> HermiteState:
    p = system.params
    s = collision_half_step(state, p, 0.5 * dt)
    s = transport_field_dirk2_step(s, system, dt, config)
    s = collision_half_step(s, p, 0.5 * dt)
    if config.filter_enabled:
        s = hou_li_filter(s, config)
    return s


@dataclass
class RunResult:
    state: HermiteState
    records: list
    times: list
    steps: int


def _step_schedule(t_end, dt):
    """Uniform steps of size ``dt``; a final short step lands exactly on ``t_end``."""
    if t_end < 0:
        raise InvalidArgument("t_end must be non-negative")
    if t_end == 0:
        return []
    n = math.floor(t_end / dt + 1e-9)
    sched = [dt] * n
    rest = t_end - n * dt
    if rest > 1e-9 * dt:
        sched.append(rest)
    return sched


def run(state0: HermiteState, system: VPFPSystem, config: TimeStepperConfig, t_end,
        observers=(), record=None, snapshot_times=()):
    """Advance ``state0`` to ``t_end``.

    ``record(t, state, system)`` builds one diagnostics record; it is called at
    ``t = 0``, every ``config.stride`` steps and at ``t_end``. The default is
    :func:`hermite_dg.diagnostics.make_record`. Each observer receives
    ``(t, state_copy, record)``. ``snapshot_times`` are hit exactly by
    shortening the preceding step, and observers are also called there.
    """
    if record is None:
        from .diagnostics import make_record
        record = make_record
    marks = sorted(set(float(t) for t in snapshot_times if 0 < t < t_end))
    # split the horizon at snapshot times so every mark is reached exactly
    pieces, start = [], 0.0
    for t in marks + [float(t_end)]:
        pieces.append((start, t))
        start = t

    records, times = [], []

    def emit(t, s):
        rec = record(t, s, system)
        records.append(rec)
        times.append(t)
        for obs in observers:
            obs(t, s.copy(), rec)

    state = state0.copy()
    emit(0.0, state)
    nsteps = 0
    for a, b in pieces:
        sched = _step_schedule(b - a, config.dt)
        for i, h in enumerate(sched):
            state = step(state, system, h, config)
            nsteps += 1
            last_of_piece = i == len(sched) - 1
            t = b if last_of_piece else a + config.dt * (i + 1)
            if nsteps % config.stride == 0 or last_of_piece:
                emit(t, state)
    return RunResult(state, records, times, nsteps)
