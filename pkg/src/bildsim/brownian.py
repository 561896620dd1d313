"""Two-level Brownian dynamics: underdamped and overdamped integrators,
Fokker-Planck consistency, and coarse-grained velocity estimators.

The underdamped level evolves (x, p) with friction gamma and bath noise; the
overdamped level evolves x alone with drift force/gamma and diffusion
T/gamma. With ``paper_units`` set, gamma is taken as 1 so the overdamped
transition density satisfies dP/dt = -d_x(f P) + T d2_x P verbatim.

Directional velocities are finite-increment conditional means: v_plus uses
the displacement leaving a bin, v_minus the displacement that arrived there.
Their half-difference is the osmotic velocity, equal in law to
-(T/gamma) d_x log P for stationary ensembles.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import NumericalError, RegimeError, ValidationError

DEFAULT_MIN_BIN_COUNT = 200


@dataclass(frozen=True)
class Potential:
    """Confining potential U(x) acting per particle.

    kinds: "free" (U = 0), "harmonic" (U = sum k_i x_i^2 / 2, spring constants
    per particle), "polynomial" (same 1-D polynomial in each coordinate,
    coefficients in ascending order).
    """

    kind: str
    spring_constants: tuple = ()
    coefficients: tuple = ()

    @classmethod
    def free(cls) -> "Potential":
        return cls(kind="free")

    @classmethod
    def harmonic(cls, k) -> "Potential":
        ks = tuple(float(v) for v in np.atleast_1d(k))
        if any(v <= 0 for v in ks):
            raise ValidationError("harmonic spring constants must be positive")
        return cls(kind="harmonic", spring_constants=ks)

    @classmethod
    def polynomial(cls, coefficients) -> "Potential":
        cs = tuple(float(c) for c in coefficients)
        if not cs:
            raise ValidationError("polynomial potential needs coefficients")
        return cls(kind="polynomial", coefficients=cs)

    def _springs(self, n_particles: int) -> np.ndarray:
        ks = np.asarray(self.spring_constants, dtype=float)
        if ks.size == 1:
            return np.full(n_particles, ks[0])
        if ks.size != n_particles:
            raise ValidationError(
                f"{ks.size} spring constants for {n_particles} particles"
            )
        return ks

    def energy(self, x: np.ndarray) -> np.ndarray:
        """U evaluated on positions of shape (..., n_particles)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "free":
            return np.zeros(x.shape[:-1])
        if self.kind == "harmonic":
            k = self._springs(x.shape[-1])
            return 0.5 * np.sum(k * x**2, axis=-1)
        poly = np.polynomial.Polynomial(self.coefficients)
        return np.sum(poly(x), axis=-1)

    def force(self, x: np.ndarray) -> np.ndarray:
        """-dU/dx_i, same shape as x."""
        x = np.asarray(x, dtype=float)
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            return -self._springs(x.shape[-1]) * x
        deriv = np.polynomial.Polynomial(self.coefficients).deriv()
        return -deriv(x)

    def validate_force(self, x: np.ndarray, h: float = 1e-5, rtol: float = 1e-6):
        """Check the analytic force against central differences of U."""
        x = np.asarray(x, dtype=float)
        f = self.force(x)
        for i in range(x.shape[-1]):
            step = np.zeros_like(x)
            step[..., i] = h
            fd = -(self.energy(x + step) - self.energy(x - step)) / (2 * h)
            scale = max(np.max(np.abs(f[..., i])), 1.0)
            if np.max(np.abs(fd - f[..., i])) > rtol * scale:
                raise ValidationError(
                    f"force component {i} disagrees with finite-difference gradient"
                )

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "harmonic":
            d["spring_constants"] = list(self.spring_constants)
        elif self.kind == "polynomial":
            d["coefficients"] = list(self.coefficients)
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "Potential":
        kind = obj.get("kind")
        if kind == "free":
            return cls.free()
        if kind == "harmonic":
            return cls.harmonic(obj.get("spring_constants", obj.get("k", ())))
        if kind == "polynomial":
            return cls.polynomial(obj.get("coefficients", ()))
        raise ValidationError(f"unknown potential kind {kind!r}")


@dataclass(frozen=True)
class LangevinConfig:
    """Full description of one simulation run.

    ``x_init`` / ``p_init`` are either a number (all trajectories start
    there) or "stationary" (draw from the equilibrium law; positions require
    a harmonic potential, momenta are N(0, m T)). ``store_every`` thins the
    stored time grid; the integration step is always ``dt``.
    """

    n_particles: int
    mass: float
    friction: float
    temperatures: tuple
    potential: Potential
    dt: float
    t_end: float
    n_trajectories: int
    seed: int
    paper_units: bool = False
    store_every: int = 1
    x_init: object = 0.0
    p_init: object = "stationary"

    def __post_init__(self):
        temps = tuple(float(t) for t in np.atleast_1d(self.temperatures))
        if len(temps) == 1:
            temps = temps * self.n_particles
        if len(temps) != self.n_particles:
            raise ValidationError(
                f"{len(temps)} temperatures for {self.n_particles} particles"
            )
        object.__setattr__(self, "temperatures", temps)
        for name in ("mass", "friction", "dt", "t_end"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if any(t < 0 for t in temps):
            raise ValidationError("temperatures must be nonnegative")
        if self.n_particles < 1 or self.n_trajectories < 1:
            raise ValidationError("n_particles and n_trajectories must be >= 1")
        if self.store_every < 1:
            raise ValidationError("store_every must be >= 1")

    @property
    def gamma(self) -> float:
        """Effective friction used in the overdamped mapping."""
        return 1.0 if self.paper_units else self.friction

    @property
    def tau_p(self) -> float:
        return self.mass / self.gamma

    @property
    def temps(self) -> np.ndarray:
        return np.asarray(self.temperatures, dtype=float)

    def diffusion_coefficients(self) -> np.ndarray:
        """Per-particle overdamped diffusion coefficients T_i / gamma."""
        return self.temps / self.gamma

    def to_dict(self) -> dict:
        return {
            "n_particles": self.n_particles,
            "mass": self.mass,
            "friction": self.friction,
            "temperatures": list(self.temperatures),
            "potential": self.potential.to_dict(),
            "dt": self.dt,
            "t_end": self.t_end,
            "n_trajectories": self.n_trajectories,
            "seed": self.seed,
            "paper_units": self.paper_units,
            "store_every": self.store_every,
            "x_init": self.x_init,
            "p_init": self.p_init,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LangevinConfig":
        obj = dict(obj)
        obj["potential"] = Potential.from_dict(obj["potential"])
        obj["temperatures"] = tuple(np.atleast_1d(obj["temperatures"]))
        return cls(**obj)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Stored positions (and momenta for underdamped runs) on a uniform grid.

    Shapes: times (n_times,), x and p (n_trajectories, n_times, n_particles).
    """

    times: np.ndarray
    x: np.ndarray
    p: Optional[np.ndarray]
    config: LangevinConfig

    @property
    def dt_store(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_times(self) -> int:
        return self.times.shape[0]


class TimescaleReport(NamedTuple):
    tau_p: float
    tau_x: float
    overdamped: bool
    tau_x_estimated: bool


def timescale_report(config: LangevinConfig) -> TimescaleReport:
    """Momentum and position relaxation times and the regime classification.

    tau_p = m/gamma always; tau_x = gamma/k for harmonic (slowest coordinate
    is the binding one, so the minimum over particles is used), infinite for
    free, and estimated from the position autocorrelation decay otherwise.
    Overdamped means tau_x >= 100 tau_p.
    """
    tau_p = config.tau_p
    estimated = False
    if config.potential.kind == "free":
        tau_x = math.inf
    elif config.potential.kind == "harmonic":
        ks = config.potential._springs(config.n_particles)
        tau_x = float(config.gamma / ks.max())
    else:
        tau_x = _estimate_tau_x(config)
        estimated = True
    overdamped = tau_x >= 100.0 * tau_p
    return TimescaleReport(tau_p, tau_x, overdamped, estimated)


def _estimate_tau_x(config: LangevinConfig) -> float:
    """Autocorrelation-decay estimate of tau_x from a short overdamped run."""
    probe = LangevinConfig(
        n_particles=config.n_particles,
        mass=config.mass,
        friction=config.friction,
        temperatures=config.temperatures,
        potential=config.potential,
        dt=config.dt,
        t_end=config.t_end,
        n_trajectories=min(config.n_trajectories, 2000),
        seed=config.seed,
        paper_units=config.paper_units,
        store_every=1,
        x_init=config.x_init,
        p_init=config.p_init,
    )
    ens = integrate_overdamped(probe, _skip_step_check=True)
    x = ens.x[:, :, 0]
    x = x - x.mean()
    var = np.mean(x * x)
    if var <= 0:
        return math.inf
    # first lag where the autocorrelation drops below 1/e
    for lag in range(1, ens.n_times):
        acf = np.mean(x[:, :-lag] * x[:, lag:]) / var
        if acf < 1.0 / math.e:
            return lag * ens.dt_store
    return math.inf


def _initial_positions(config: LangevinConfig, rng) -> np.ndarray:
    shape = (config.n_trajectories, config.n_particles)
    if isinstance(config.x_init, str):
        if config.x_init != "stationary":
            raise ValidationError(f"unknown x_init {config.x_init!r}")
        if config.potential.kind != "harmonic":
            raise ValidationError(
                "stationary position start requires a harmonic potential"
            )
        ks = config.potential._springs(config.n_particles)
        std = np.sqrt(config.temps / ks)
        return rng.standard_normal(shape) * std
    return np.full(shape, float(config.x_init))


def _initial_momenta(config: LangevinConfig, rng) -> np.ndarray:
    shape = (config.n_trajectories, config.n_particles)
    if isinstance(config.p_init, str):
        if config.p_init != "stationary":
            raise ValidationError(f"unknown p_init {config.p_init!r}")
        std = np.sqrt(config.mass * config.temps)
        return rng.standard_normal(shape) * std
    return np.full(shape, float(config.p_init))


def _check_finite(arr: np.ndarray, step: int, dt: float):
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise NumericalError(
            f"integration blew up at step {step} (t={step * dt:.4g}): "
            f"{bad} non-finite state entries"
        )


def integrate_underdamped(config: LangevinConfig) -> TrajectoryEnsemble:
    """Euler-Maruyama for dx = (p/m) dt, dp = (F - gamma p/m) dt + sqrt(2 gamma T) dW."""
    if config.dt > config.tau_p / 20.0:
        raise RegimeError(
            f"dt={config.dt:.3g} exceeds tau_p/20={config.tau_p / 20.0:.3g}; "
            "momentum dynamics would be under-resolved"
        )
    gamma = config.gamma
    m = config.mass
    n_steps = int(round(config.t_end / config.dt))
    rng = np.random.Generator(np.random.Philox(np.uint64(config.seed)))
    x = _initial_positions(config, rng)
    p = _initial_momenta(config, rng)
    noise_amp = np.sqrt(2.0 * gamma * config.temps * config.dt)
    store_idx = range(0, n_steps + 1, config.store_every)
    n_stored = len(store_idx)
    xs = np.empty((config.n_trajectories, n_stored, config.n_particles))
    ps = np.empty_like(xs)
    times = np.empty(n_stored)
    slot = 0
    for step in range(n_steps + 1):
        if step % config.store_every == 0:
            xs[:, slot] = x
            ps[:, slot] = p
            times[slot] = step * config.dt
            slot += 1
        if step == n_steps:
            break
        force = config.potential.force(x)
        xi = rng.standard_normal(x.shape)
        dp = (force - gamma * p / m) * config.dt + noise_amp * xi
        x = x + (p / m) * config.dt
        p = p + dp
        if step % 200 == 0:
            _check_finite(p, step, config.dt)
    _check_finite(xs, n_steps, config.dt)
    return TrajectoryEnsemble(times=times, x=xs, p=ps, config=config)


def integrate_overdamped(
    config: LangevinConfig, _skip_step_check: bool = False
) -> TrajectoryEnsemble:
    """Euler-Maruyama for dx = (F/gamma) dt + sqrt(2 T/gamma) dW."""
    gamma = config.gamma
    if not _skip_step_check and config.potential.kind == "harmonic":
        ks = config.potential._springs(config.n_particles)
        tau_x = gamma / ks.max()
        bound = min(1e-3 * tau_x, 2.0 * gamma / ks.max())
        if config.dt > bound:
            raise RegimeError(
                f"dt={config.dt:.3g} exceeds overdamped step bound {bound:.3g}"
            )
    n_steps = int(round(config.t_end / config.dt))
    rng = np.random.Generator(np.random.Philox(np.uint64(config.seed)))
    x = _initial_positions(config, rng)
    noise_amp = np.sqrt(2.0 * config.diffusion_coefficients() * config.dt)
    store_idx = range(0, n_steps + 1, config.store_every)
    n_stored = len(store_idx)
    xs = np.empty((config.n_trajectories, n_stored, config.n_particles))
    times = np.empty(n_stored)
    slot = 0
    for step in range(n_steps + 1):
        if step % config.store_every == 0:
            xs[:, slot] = x
            times[slot] = step * config.dt
            slot += 1
        if step == n_steps:
            break
        drift = config.potential.force(x) / gamma
        xi = rng.standard_normal(x.shape)
        x = x + drift * config.dt + noise_amp * xi
        if step % 200 == 0:
            _check_finite(x, step, config.dt)
    _check_finite(xs, n_steps, config.dt)
    return TrajectoryEnsemble(times=times, x=xs, p=None, config=config)


@dataclass(frozen=True)
class VelocityFieldEstimate:
    """Binned conditional-mean velocity with standard errors.

    Bins below the minimum occupancy carry NaN values (missing, never zero).
    """

    bin_centers: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    counts: np.ndarray
    epsilon: float
    bin_width: float


def _epsilon_steps(ensemble: TrajectoryEnsemble, epsilon: float) -> int:
    dt_store = ensemble.dt_store
    k = int(round(epsilon / dt_store))
    if k < 1 or abs(k * dt_store - epsilon) > 1e-9 * max(epsilon, dt_store):
        raise ValidationError(
            f"epsilon={epsilon:.3g} is not a multiple of the stored step "
            f"{dt_store:.3g}"
        )
    if epsilon < 2.0 * ensemble.config.dt - 1e-12:
        raise ValidationError(
            f"epsilon={epsilon:.3g} must be at least twice the integration "
            f"step {ensemble.config.dt:.3g}"
        )
    return k


def _binned_velocity(
    anchor: np.ndarray,
    velocity: np.ndarray,
    bin_edges: np.ndarray,
    epsilon: float,
    min_count: int,
) -> VelocityFieldEstimate:
    edges = np.asarray(bin_edges, dtype=float)
    idx = np.digitize(anchor, edges) - 1
    n_bins = edges.size - 1
    valid = (idx >= 0) & (idx < n_bins)
    idx = idx[valid]
    vel = velocity[valid]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=vel, minlength=n_bins)
    sq = np.bincount(idx, weights=vel * vel, minlength=n_bins)
    values = np.full(n_bins, np.nan)
    errs = np.full(n_bins, np.nan)
    ok = counts >= min_count
    values[ok] = sums[ok] / counts[ok]
    var = np.zeros(n_bins)
    var[ok] = np.maximum(sq[ok] / counts[ok] - values[ok] ** 2, 0.0)
    errs[ok] = np.sqrt(var[ok] / counts[ok])
    centers = 0.5 * (edges[:-1] + edges[1:])
    return VelocityFieldEstimate(
        bin_centers=centers,
        values=values,
        std_errors=errs,
        counts=counts,
        epsilon=epsilon,
        bin_width=float(edges[1] - edges[0]),
    )


def coarse_velocity_forward(
    ensemble: TrajectoryEnsemble,
    epsilon: float,
    bin_edges,
    particle: int = 0,
    min_count: int = DEFAULT_MIN_BIN_COUNT,
    t_index: int | None = None,
) -> VelocityFieldEstimate:
    """Forward velocity: mean of (x(t+eps) - x(t))/eps given x(t) in each bin.

    By default all start times are pooled, spaced by eps so windows are
    disjoint and the standard errors treat them as independent (justified by
    the Markov property); pooling assumes a stationary ensemble. Pass
    ``t_index`` to anchor at a single stored time instead.
    """
    k = _epsilon_steps(ensemble, epsilon)
    x = ensemble.x[:, :, particle]
    if t_index is not None:
        if not 0 <= t_index < ensemble.n_times - k:
            raise ValidationError(f"t_index {t_index} leaves no forward window")
        starts = np.array([t_index])
    else:
        starts = np.arange(0, ensemble.n_times - k, k)
    x0 = x[:, starts].ravel()
    disp = (x[:, starts + k] - x[:, starts]).ravel() / epsilon
    return _binned_velocity(x0, disp, bin_edges, epsilon, min_count)


def coarse_velocity_backward(
    ensemble: TrajectoryEnsemble,
    epsilon: float,
    bin_edges,
    particle: int = 0,
    min_count: int = DEFAULT_MIN_BIN_COUNT,
    t_index: int | None = None,
) -> VelocityFieldEstimate:
    """Backward velocity: mean of (x(t) - x(t-eps))/eps given x(t) in each bin."""
    k = _epsilon_steps(ensemble, epsilon)
    x = ensemble.x[:, :, particle]
    if t_index is not None:
        if not k <= t_index < ensemble.n_times:
            raise ValidationError(f"t_index {t_index} leaves no backward window")
        arrivals = np.array([t_index])
    else:
        arrivals = np.arange(k, ensemble.n_times, k)
    x1 = x[:, arrivals].ravel()
    disp = (x[:, arrivals] - x[:, arrivals - k]).ravel() / epsilon
    return _binned_velocity(x1, disp, bin_edges, epsilon, min_count)


def osmotic_velocity(
    v_plus: VelocityFieldEstimate, v_minus: VelocityFieldEstimate
) -> VelocityFieldEstimate:
    """Half-difference (v_minus - v_plus)/2 with propagated errors."""
    if v_plus.epsilon != v_minus.epsilon or not np.allclose(
        v_plus.bin_centers, v_minus.bin_centers
    ):
        raise ValidationError("velocity estimates use different bins or epsilon")
    values = 0.5 * (v_minus.values - v_plus.values)
    errs = 0.5 * np.sqrt(v_plus.std_errors**2 + v_minus.std_errors**2)
    return VelocityFieldEstimate(
        bin_centers=v_plus.bin_centers,
        values=values,
        std_errors=errs,
        counts=np.minimum(v_plus.counts, v_minus.counts),
        epsilon=v_plus.epsilon,
        bin_width=v_plus.bin_width,
    )


def nonsmoothness_witness(
    ensemble: TrajectoryEnsemble,
    epsilons,
    bin_center: float,
    bin_width: float = 0.1,
    particle: int = 0,
    min_count: int = DEFAULT_MIN_BIN_COUNT,
) -> list[dict]:
    """Gap |v_plus - v_minus| at one bin for a sweep of time increments.

    For non-smooth diffusive trajectories the gap stays bounded away from
    zero as epsilon shrinks toward the resolution limit.
    """
    edges = np.array([bin_center - bin_width / 2, bin_center + bin_width / 2])
    rows = []
    for eps in epsilons:
        vp = coarse_velocity_forward(ensemble, eps, edges, particle, min_count)
        vm = coarse_velocity_backward(ensemble, eps, edges, particle, min_count)
        gap = abs(vm.values[0] - vp.values[0])
        gap_err = float(np.hypot(vp.std_errors[0], vm.std_errors[0]))
        rows.append(
            {
                "epsilon": float(eps),
                "v_plus": float(vp.values[0]),
                "v_minus": float(vm.values[0]),
                "gap": float(gap),
                "gap_err": gap_err,
            }
        )
    return rows


class MomentumResolutionResult(NamedTuple):
    v_plus: float
    v_plus_err: float
    v_minus: float
    v_minus_err: float
    p_over_m: float


def momentum_resolution_check(
    ensemble: TrajectoryEnsemble,
    epsilon: float,
    p_center: float,
    p_width: float = 0.1,
    particle: int = 0,
) -> MomentumResolutionResult:
    """At time increments well below tau_p both directional velocities
    collapse to the instantaneous p/m of the momentum bin."""
    if ensemble.p is None:
        raise ValidationError("momentum resolution check needs an underdamped ensemble")
    tau_p = ensemble.config.tau_p
    if epsilon > tau_p / 50.0:
        raise RegimeError(
            f"epsilon={epsilon:.3g} exceeds tau_p/50={tau_p / 50.0:.3g}; at this "
            "resolution only coarse-grained velocities are defined"
        )
    k = _epsilon_steps(ensemble, epsilon)
    x = ensemble.x[:, :, particle]
    p = ensemble.p[:, :, particle]
    anchors = np.arange(k, ensemble.n_times - k, k)
    p_mid = p[:, anchors].ravel()
    fwd = (x[:, anchors + k] - x[:, anchors]).ravel() / epsilon
    bwd = (x[:, anchors] - x[:, anchors - k]).ravel() / epsilon
    in_bin = np.abs(p_mid - p_center) <= p_width / 2
    if in_bin.sum() < DEFAULT_MIN_BIN_COUNT:
        raise ValidationError(
            f"only {int(in_bin.sum())} samples in the momentum bin"
        )
    nf = in_bin.sum()
    vf, vb = fwd[in_bin], bwd[in_bin]
    return MomentumResolutionResult(
        v_plus=float(vf.mean()),
        v_plus_err=float(vf.std(ddof=1) / np.sqrt(nf)),
        v_minus=float(vb.mean()),
        v_minus_err=float(vb.std(ddof=1) / np.sqrt(nf)),
        p_over_m=float(p_center / ensemble.config.mass),
    )


def silverman_bandwidth(samples: np.ndarray) -> float:
    std = np.std(samples)
    q75, q25 = np.percentile(samples, [75, 25])
    a = min(std, (q75 - q25) / 1.34)
    return 0.9 * a * samples.size ** (-0.2)


def log_density_gradient(
    samples: np.ndarray, points: np.ndarray, bandwidth: float | None = None
) -> np.ndarray:
    """d/dx log of a Gaussian-kernel density estimate, at the given points."""
    s = np.asarray(samples, dtype=float).ravel()
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    h = silverman_bandwidth(s) if bandwidth is None else bandwidth
    grads = np.empty(pts.size)
    for i, x in enumerate(pts):
        z = (s - x) / h
        w = np.exp(-0.5 * z * z)
        grads[i] = np.sum(w * (s - x)) / (h * h * np.sum(w))
    return grads


def fokker_planck_residual(
    ensemble: TrajectoryEnsemble,
    n_bins: int = 81,
    x_range: tuple | None = None,
    smooth_sigma: float = 2.0,
) -> float:
    """Normalized residual of the overdamped transport equation on smoothed
    histogram densities.

    Requires a single-particle overdamped ensemble with at least 1e5
    trajectories; the residual dP/dt + d_x(f P) - D d2_x P is evaluated on
    the interior of the grid and normalized by the magnitude of the flux
    terms.
    """
    from scipy.ndimage import gaussian_filter1d

    if ensemble.config.n_particles != 1:
        raise ValidationError("residual check is implemented for one particle")
    if ensemble.x.shape[0] < 10**5:
        raise ValidationError(
            f"insufficient samples: {ensemble.x.shape[0]} trajectories, need 1e5"
        )
    x = ensemble.x[:, :, 0]
    if x_range is None:
        lo, hi = np.percentile(x, [0.5, 99.5])
    else:
        lo, hi = x_range
    edges = np.linspace(lo, hi, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    dx = centers[1] - centers[0]
    density = np.empty((ensemble.n_times, n_bins))
    for t in range(ensemble.n_times):
        hist, _ = np.histogram(x[:, t], bins=edges, density=True)
        density[t] = gaussian_filter1d(hist, smooth_sigma)
    dpdt = np.gradient(density, ensemble.dt_store, axis=0)
    drift = ensemble.config.potential.force(centers[:, None])[:, 0] / ensemble.config.gamma
    flux = drift[None, :] * density
    dflux = np.gradient(flux, dx, axis=1)
    diff_coeff = float(ensemble.config.diffusion_coefficients()[0])
    d2p = np.gradient(np.gradient(density, dx, axis=1), dx, axis=1)
    residual = dpdt + dflux - diff_coeff * d2p
    interior = (slice(1, -1), slice(4, -4))
    num = np.sqrt(np.mean(residual[interior] ** 2))
    den = np.sqrt(np.mean((np.abs(dflux) + np.abs(diff_coeff * d2p))[interior] ** 2))
    return float(num / max(den, 1e-300))
