//! Path simulation: exact-increment skeletons with killing at 0,
//! supremum sampling, first passage, and Brownian bridge argmax.
//!
//! Reproducibility contract: every run is parameterized by
//! `(seed, salt, workers)`. Worker `w` draws from an independent
//! ChaCha8 stream, work is partitioned by worker index (not by thread),
//! and results are merged in worker order, so output is bit-identical
//! for fixed `(seed, workers)` regardless of how rayon schedules the
//! workers onto threads.
//!
//! Killing discipline per family:
//! * Brownian: exact increments plus exact bridge-crossing resampling
//!   between grid points (`P(min < 0 | a, b) = exp(-2ab/σ²Δ)`), so
//!   killed-path laws carry no mesh bias at all.
//! * Stable: killing checked at grid points only; runs are repeated on
//!   a 2:1 coarser mesh and Richardson-extrapolated downstream.
//! * Subordinator-minus-drift: grid checks, plus a no-kill certificate
//!   (the path cannot cross within a step when `x - bΔ > 0` since jumps
//!   only go up), which confines mesh bias to near-barrier steps.

use crate::process::ProcessSpec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

/// Stream salts; every independent estimator gets its own lane.
pub mod salts {
    pub const CALIBRATION: u64 = 0x11;
    pub const ENSEMBLE_MAIN: u64 = 0x21;
    pub const ENSEMBLE_COARSE: u64 = 0x22;
    pub const ENSEMBLE_X0_PROBE: u64 = 0x23;
    pub const ENSEMBLE_DUAL: u64 = 0x24;
    pub const SUP_ORACLE: u64 = 0x31;
    pub const SUP_ORACLE_COARSE: u64 = 0x32;
    pub const FIRST_PASSAGE: u64 = 0x41;
    pub const FIRST_PASSAGE_COARSE: u64 = 0x42;
    pub const ATOM_ORACLE: u64 = 0x43;
    pub const BRIDGE: u64 = 0x51;
    pub const SPITZER: u64 = 0x61;
    pub const KILLED_FROM_X: u64 = 0x71;
    pub const LADDER_CHAIN: u64 = 0x81;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Independent RNG for worker `w` of the estimator tagged `salt`.
pub fn worker_rng(seed: u64, salt: u64, worker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ splitmix(salt));
    rng.set_stream(worker);
    rng
}

/// Split `n_total` across workers; returns per-worker counts.
fn partition(n_total: usize, workers: u32) -> Vec<usize> {
    let w = workers.max(1) as usize;
    let base = n_total / w;
    let rem = n_total % w;
    (0..w).map(|i| base + usize::from(i < rem)).collect()
}

/// Run `f(worker_rng, n_paths_for_worker)` per worker and collect the
/// results in worker order.
pub fn run_workers<T, F>(seed: u64, salt: u64, workers: u32, n_total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(ChaCha8Rng, usize) -> T + Sync,
{
    partition(n_total, workers)
        .into_par_iter()
        .enumerate()
        .map(|(w, n)| f(worker_rng(seed, salt, w as u64), n))
        .collect()
}

// ---------------------------------------------------------------------
// Increment samplers
// ---------------------------------------------------------------------

/// Chambers-Mallows-Stuck sampler for the strictly stable law with
/// characteristic exponent `|ξ|^α (1 - iβ sgn ξ tan(πα/2))` (unit
/// scale). `α = 1` is certified for `β = 0` only.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    shift_b: f64,
    scale_s: f64,
    inv_alpha: f64,
    expo: f64,
    cauchy: bool,
}

impl StableSampler {
    pub fn new(alpha: f64, beta: f64) -> Self {
        if alpha == 1.0 {
            assert_eq!(beta, 0.0, "alpha = 1 sampling certified only for beta = 0");
            return StableSampler { alpha, shift_b: 0.0, scale_s: 1.0, inv_alpha: 1.0, expo: 0.0, cauchy: true };
        }
        let tb = beta * (std::f64::consts::FRAC_PI_2 * alpha).tan();
        StableSampler {
            alpha,
            shift_b: tb.atan() / alpha,
            scale_s: (1.0 + tb * tb).powf(0.5 / alpha),
            inv_alpha: 1.0 / alpha,
            expo: (1.0 - alpha) / alpha,
            cauchy: false,
        }
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
        if self.cauchy {
            return (std::f64::consts::PI * (u - 0.5)).tan();
        }
        let v = std::f64::consts::PI * (u - 0.5);
        let w: f64 = {
            let e: f64 = Exp1.sample(rng);
            e.max(1e-300)
        };
        let avb = self.alpha * (v + self.shift_b);
        self.scale_s * avb.sin() / v.cos().powf(self.inv_alpha)
            * ((v - avb).cos().max(1e-300) / w).powf(self.expo)
    }
}

/// Kanter sampler for the positive stable law with Laplace transform
/// `e^{-λ^α}`, `α ∈ (0,1)`; `α = 1/2` uses the `1/(2Z²)` shortcut.
#[derive(Debug, Clone, Copy)]
pub struct PositiveStableSampler {
    alpha: f64,
    half: bool,
}

impl PositiveStableSampler {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0);
        PositiveStableSampler { alpha, half: alpha == 0.5 }
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.half {
            let z: f64 = StandardNormal.sample(rng);
            return 0.5 / (z * z).max(1e-300);
        }
        let a = self.alpha;
        let u = std::f64::consts::PI * rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
        let w: f64 = {
            let e: f64 = Exp1.sample(rng);
            e.max(1e-300)
        };
        let s1 = (a * u).sin() / u.sin().powf(1.0 / a);
        let s2 = (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a);
        s1 * s2
    }
}

/// One exact increment of the process over a step of length `dt`.
#[derive(Debug, Clone, Copy)]
pub enum Stepper {
    Gaussian { sigma: f64, mu: f64 },
    Stable { scale: f64, inv_alpha: f64, sampler: StableSampler },
    Smd { scale: f64, inv_alpha: f64, drift_b: f64, sampler: PositiveStableSampler },
}

impl Stepper {
    pub fn for_spec(spec: &ProcessSpec) -> Self {
        match *spec {
            ProcessSpec::Brownian { sigma, mu } => Stepper::Gaussian { sigma, mu },
            ProcessSpec::Stable { alpha, beta, scale } => Stepper::Stable {
                scale,
                inv_alpha: 1.0 / alpha,
                sampler: StableSampler::new(alpha, beta),
            },
            ProcessSpec::SubordinatorMinusDrift { alpha, scale, drift_b } => Stepper::Smd {
                scale,
                inv_alpha: 1.0 / alpha,
                drift_b,
                sampler: PositiveStableSampler::new(alpha),
            },
        }
    }

    /// Stepper of the dual process `-X`.
    pub fn for_dual(spec: &ProcessSpec) -> Self {
        match *spec {
            ProcessSpec::Brownian { sigma, mu } => Stepper::Gaussian { sigma, mu: -mu },
            ProcessSpec::Stable { alpha, beta, scale } => Stepper::Stable {
                scale,
                inv_alpha: 1.0 / alpha,
                sampler: StableSampler::new(alpha, -beta),
            },
            ProcessSpec::SubordinatorMinusDrift { .. } => {
                unimplemented!("dual of subordinator-minus-drift is not in the catalog")
            }
        }
    }

    #[inline]
    pub fn step<R: Rng>(&self, rng: &mut R, dt: f64) -> f64 {
        match self {
            Stepper::Gaussian { sigma, mu } => {
                let z: f64 = StandardNormal.sample(rng);
                mu * dt + sigma * dt.sqrt() * z
            }
            Stepper::Stable { scale, inv_alpha, sampler } => {
                scale * dt.powf(*inv_alpha) * sampler.sample(rng)
            }
            Stepper::Smd { scale, inv_alpha, drift_b, sampler } => {
                scale * dt.powf(*inv_alpha) * sampler.sample(rng) - drift_b * dt
            }
        }
    }
}

// ---------------------------------------------------------------------
// Time grids
// ---------------------------------------------------------------------

/// Geometrically graded mesh: the step near elapsed time `t` is about
/// `growth · t`, floored at `dt0` and capped at `dt_max`. Surviving
/// paths sit at distance ~ t^{1/α} from the barrier, so a step
/// proportional to `t` keeps the relative killing resolution constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedMesh {
    pub dt0: f64,
    pub growth: f64,
    pub dt_max: f64,
}

impl GradedMesh {
    pub fn refined(&self) -> GradedMesh {
        GradedMesh { dt0: self.dt0 / 2.0, growth: self.growth / 2.0, dt_max: self.dt_max / 2.0 }
    }

    /// Build the grid on `[0, t_end]`, inserting every monitor time
    /// exactly. Returns `(times, monitor_indices)`.
    pub fn grid(&self, t_end: f64, monitors: &[f64]) -> (Vec<f64>, Vec<usize>) {
        assert!(t_end > 0.0);
        let mut mons: Vec<f64> = monitors.to_vec();
        mons.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mons.dedup();
        assert!(mons.iter().all(|&m| m > 0.0 && m <= t_end * (1.0 + 1e-12)));
        let mut times = vec![0.0];
        let mut idx = Vec::with_capacity(mons.len());
        let mut next_mon = 0usize;
        let mut t = 0.0f64;
        while t < t_end - 1e-15 * t_end {
            let dt = (self.growth * t).clamp(self.dt0, self.dt_max);
            let mut nxt = (t + dt).min(t_end);
            if next_mon < mons.len() && mons[next_mon] <= nxt + 1e-15 {
                nxt = mons[next_mon];
            }
            times.push(nxt);
            if next_mon < mons.len() && (nxt - mons[next_mon]).abs() <= 1e-12 * nxt.max(1e-12) {
                idx.push(times.len() - 1);
                next_mon += 1;
            }
            t = nxt;
        }
        assert_eq!(idx.len(), mons.len(), "monitor embedding failed");
        (times, idx)
    }
}

// ---------------------------------------------------------------------
// Killed ensembles
// ---------------------------------------------------------------------

/// Surviving positions of paths started at `x0 > 0` and killed on first
/// entry of `(-∞, 0)`, recorded at each monitor time.
#[derive(Debug, Clone)]
pub struct KilledEnsemble {
    pub monitors: Vec<f64>,
    /// Per monitor: positions of paths still alive, merged in worker
    /// order (f32: KDE bandwidths dwarf the rounding).
    pub survivors: Vec<Vec<f32>>,
    pub n_paths: usize,
    pub x0: f64,
}

impl KilledEnsemble {
    pub fn survival_probability(&self, monitor_idx: usize) -> f64 {
        self.survivors[monitor_idx].len() as f64 / self.n_paths as f64
    }

    pub fn survival_stderr(&self, monitor_idx: usize) -> f64 {
        let p = self.survival_probability(monitor_idx);
        (p * (1.0 - p) / self.n_paths as f64).sqrt()
    }
}

/// Simulate the killed ensemble. The stepper argument lets the caller
/// run the dual process through the same machinery. Killing is checked
/// at grid points; for Brownian steppers pass `bridge_sigma2` to also
/// resample the exact bridge-crossing indicator between grid points.
/// For the subordinator-minus-drift family a mid-step dip below 0 that
/// ends above 0 is possible only in steps with `x_k ≤ bΔ`; the graded
/// mesh keeps those rare and the 2:1 mesh pair bounds the residual.
pub fn run_killed_with(
    stepper: Stepper,
    bridge_sigma2: Option<f64>,
    x0: f64,
    monitors: &[f64],
    mesh: GradedMesh,
    n_paths: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> KilledEnsemble {
    let t_end = monitors.iter().cloned().fold(0.0, f64::max);
    let (times, mon_idx) = mesh.grid(t_end, monitors);
    let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    // is_mon[k] = monitor index reached after step k, or MAX.
    let mut is_mon = vec![usize::MAX; dts.len()];
    for (mi, &gi) in mon_idx.iter().enumerate() {
        is_mon[gi - 1] = mi;
    }
    let n_mon = mon_idx.len();

    let per_worker = run_workers(seed, salt, workers, n_paths, |mut rng, n| {
        let mut buckets: Vec<Vec<f32>> = vec![Vec::new(); n_mon];
        for _ in 0..n {
            let mut x = x0;
            let mut alive = true;
            for (k, &dt) in dts.iter().enumerate() {
                let prev = x;
                x += stepper.step(&mut rng, dt);
                if x <= 0.0 {
                    alive = false;
                } else if let Some(s2) = bridge_sigma2 {
                    let p_cross = (-2.0 * prev * x / (s2 * dt)).exp();
                    if rng.gen::<f64>() < p_cross {
                        alive = false;
                    }
                }
                if !alive {
                    break;
                }
                let mi = is_mon[k];
                if mi != usize::MAX {
                    buckets[mi].push(x as f32);
                }
            }
        }
        buckets
    });

    let mut survivors: Vec<Vec<f32>> = vec![Vec::new(); n_mon];
    for bucket_set in per_worker {
        for (mi, mut b) in bucket_set.into_iter().enumerate() {
            survivors[mi].append(&mut b);
        }
    }
    let mut mons = monitors.to_vec();
    mons.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mons.dedup();
    KilledEnsemble { monitors: mons, survivors, n_paths, x0 }
}

/// Killed ensemble of the process itself (kill at first entry of
/// `(-∞,0)`, the `q*` side).
pub fn run_killed(
    spec: &ProcessSpec,
    x0: f64,
    monitors: &[f64],
    mesh: GradedMesh,
    n_paths: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> KilledEnsemble {
    let stepper = Stepper::for_spec(spec);
    let bridge = match *spec {
        ProcessSpec::Brownian { sigma, .. } => Some(sigma * sigma),
        _ => None,
    };
    run_killed_with(stepper, bridge, x0, monitors, mesh, n_paths, seed, salt, workers)
}

/// Killed ensemble of the dual process `-X` (the `q` side).
pub fn run_killed_dual(
    spec: &ProcessSpec,
    x0: f64,
    monitors: &[f64],
    mesh: GradedMesh,
    n_paths: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> KilledEnsemble {
    let stepper = Stepper::for_dual(spec);
    let bridge = match *spec {
        ProcessSpec::Brownian { sigma, .. } => Some(sigma * sigma),
        _ => None,
    };
    run_killed_with(stepper, bridge, x0, monitors, mesh, n_paths, seed, salt, workers)
}

// ---------------------------------------------------------------------
// Supremum samples
// ---------------------------------------------------------------------

/// Exact joint sampling of the Brownian running maximum via the
/// reflection law: given `X_t = x`, the maximum is
/// `(x + sqrt(x² - 2σ²t ln U)) / 2`. Drift enters only through `X_t`
/// (the bridge of a drifted Brownian motion is drift-free).
pub fn brownian_sup_samples(
    sigma: f64,
    mu: f64,
    t: f64,
    n: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> Vec<f32> {
    let parts = run_workers(seed, salt, workers, n, |mut rng, n_w| {
        let mut out = Vec::with_capacity(n_w);
        for _ in 0..n_w {
            let z: f64 = StandardNormal.sample(&mut rng);
            let x = mu * t + sigma * t.sqrt() * z;
            let u: f64 = rng.gen::<f64>().clamp(1e-300, 1.0);
            let m = 0.5 * (x + (x * x - 2.0 * sigma * sigma * t * u.ln()).sqrt());
            out.push(m as f32);
        }
        out
    });
    parts.concat()
}

/// Skeleton maxima of a catalog process on a uniform grid of `n_steps`
/// steps (mesh-biased; pair two meshes for extrapolation).
pub fn skeleton_sup_samples(
    spec: &ProcessSpec,
    t: f64,
    n_steps: usize,
    n: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> Vec<f32> {
    let stepper = Stepper::for_spec(spec);
    let dt = t / n_steps as f64;
    let parts = run_workers(seed, salt, workers, n, |mut rng, n_w| {
        let mut out = Vec::with_capacity(n_w);
        for _ in 0..n_w {
            let mut x = 0.0f64;
            let mut m = 0.0f64;
            for _ in 0..n_steps {
                x += stepper.step(&mut rng, dt);
                if x > m {
                    m = x;
                }
            }
            out.push(m as f32);
        }
        out
    });
    parts.concat()
}

// ---------------------------------------------------------------------
// First passage above 0 (subordinator-minus-drift)
// ---------------------------------------------------------------------

/// Skeleton estimates of the law of `τ⁺ = inf{t : X_t > 0}` from 0.
#[derive(Debug, Clone)]
pub struct FirstPassageUp {
    pub u_grid: Vec<f64>,
    /// `P(τ⁺ > u)` per grid point.
    pub survival: Vec<f64>,
    pub survival_se: Vec<f64>,
    /// `E e^{-τ⁺}`; paths not crossed by the horizon contribute 0 (the
    /// horizon is chosen so the omission is below the standard error).
    pub mean_exp_neg_tau: f64,
    pub se_exp_neg_tau: f64,
    pub n: usize,
}

pub fn smd_first_passage_up(
    spec: &ProcessSpec,
    u_grid: &[f64],
    horizon: f64,
    mesh: GradedMesh,
    n: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> FirstPassageUp {
    assert!(matches!(spec, ProcessSpec::SubordinatorMinusDrift { .. }));
    let stepper = Stepper::for_spec(spec);
    let (times, mon_idx) = mesh.grid(horizon, u_grid);
    let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mut is_mon = vec![usize::MAX; dts.len()];
    for (mi, &gi) in mon_idx.iter().enumerate() {
        is_mon[gi - 1] = mi;
    }
    struct Acc {
        counts: Vec<u64>,
        sum_e: f64,
        sum_e2: f64,
    }
    let n_mon = mon_idx.len();
    let parts = run_workers(seed, salt, workers, n, |mut rng, n_w| {
        let mut acc = Acc { counts: vec![0; n_mon], sum_e: 0.0, sum_e2: 0.0 };
        for _ in 0..n_w {
            let mut x = 0.0f64;
            for (k, &dt) in dts.iter().enumerate() {
                x += stepper.step(&mut rng, dt);
                if x > 0.0 {
                    let e = (-times[k + 1]).exp();
                    acc.sum_e += e;
                    acc.sum_e2 += e * e;
                    break;
                }
                let mi = is_mon[k];
                if mi != usize::MAX {
                    acc.counts[mi] += 1;
                }
            }
        }
        acc
    });
    let mut counts = vec![0u64; n_mon];
    let mut sum_e = 0.0;
    let mut sum_e2 = 0.0;
    for p in parts {
        for (c, pc) in counts.iter_mut().zip(p.counts) {
            *c += pc;
        }
        sum_e += p.sum_e;
        sum_e2 += p.sum_e2;
    }
    let nf = n as f64;
    let survival: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let survival_se: Vec<f64> = survival.iter().map(|&p| (p * (1.0 - p) / nf).sqrt()).collect();
    let mean = sum_e / nf;
    let var = (sum_e2 / nf - mean * mean).max(0.0);
    let mut grid = u_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    FirstPassageUp {
        u_grid: grid,
        survival,
        survival_se,
        mean_exp_neg_tau: mean,
        se_exp_neg_tau: (var / nf).sqrt(),
        n,
    }
}

/// Fraction of skeleton paths whose running maximum never goes above 0
/// by time `t` (estimates the supremum atom `P(sup = 0)`).
pub fn smd_atom_frequency(
    spec: &ProcessSpec,
    t: f64,
    mesh: GradedMesh,
    n: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> (f64, f64) {
    let stepper = Stepper::for_spec(spec);
    let (times, _) = mesh.grid(t, &[t]);
    let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let hits: u64 = run_workers(seed, salt, workers, n, |mut rng, n_w| {
        let mut stay = 0u64;
        for _ in 0..n_w {
            let mut x = 0.0f64;
            let mut crossed = false;
            for &dt in &dts {
                x += stepper.step(&mut rng, dt);
                if x > 0.0 {
                    crossed = true;
                    break;
                }
            }
            if !crossed {
                stay += 1;
            }
        }
        stay
    })
    .into_iter()
    .sum();
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

// ---------------------------------------------------------------------
// Brownian bridge argmax
// ---------------------------------------------------------------------

/// Times of the maximum of exact Brownian bridge skeletons from 0 to
/// `y` over `[0, t]`, at the fine mesh (`n_steps`) and, from the same
/// paths, at the 2:1 subsampled mesh. Nested refinement makes the
/// mesh-doubling comparison noise-free.
pub struct BridgeArgmax {
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
}

pub fn brownian_bridge_argmax(
    t: f64,
    y: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    salt: u64,
    workers: u32,
) -> BridgeArgmax {
    assert!(n_steps % 2 == 0);
    let dt = t / n_steps as f64;
    let sq = dt.sqrt();
    let parts = run_workers(seed, salt, workers, n_paths, |mut rng, n_w| {
        let mut fine = Vec::with_capacity(n_w);
        let mut coarse = Vec::with_capacity(n_w);
        let mut w = vec![0.0f64; n_steps + 1];
        for _ in 0..n_w {
            let mut acc = 0.0;
            for item in w.iter_mut().skip(1) {
                let z: f64 = StandardNormal.sample(&mut rng);
                acc += sq * z;
                *item = acc;
            }
            let w_t = w[n_steps];
            let mut best_f = (f64::NEG_INFINITY, 0usize);
            let mut best_c = (f64::NEG_INFINITY, 0usize);
            for (k, &wk) in w.iter().enumerate() {
                let frac = k as f64 / n_steps as f64;
                let b = wk - frac * (w_t - y);
                if b > best_f.0 {
                    best_f = (b, k);
                }
                if k % 2 == 0 && b > best_c.0 {
                    best_c = (b, k);
                }
            }
            fine.push(best_f.1 as f64 * dt);
            coarse.push(best_c.1 as f64 * dt);
        }
        (fine, coarse)
    });
    let mut fine = Vec::with_capacity(n_paths);
    let mut coarse = Vec::with_capacity(n_paths);
    for (f, c) in parts {
        fine.extend(f);
        coarse.extend(c);
    }
    BridgeArgmax { fine, coarse }
}

/// Monte Carlo estimate of `P(X_1 > 0)` with exact one-step sampling.
pub fn positivity_frequency(spec: &ProcessSpec, n: usize, seed: u64, workers: u32) -> (f64, f64) {
    let stepper = Stepper::for_spec(spec);
    let hits: u64 = run_workers(seed, salts::SPITZER, workers, n, |mut rng, n_w| {
        let mut c = 0u64;
        for _ in 0..n_w {
            if stepper.step(&mut rng, 1.0) > 0.0 {
                c += 1;
            }
        }
        c
    })
    .into_iter()
    .sum();
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_across_repeat_runs() {
        let spec = ProcessSpec::stable(1.0, 0.0, 1.0).unwrap();
        let mesh = GradedMesh { dt0: 1e-3, growth: 0.05, dt_max: 0.1 };
        let a = run_killed(&spec, 0.02, &[0.5, 1.0], mesh, 4000, 7, salts::ENSEMBLE_MAIN, 4);
        let b = run_killed(&spec, 0.02, &[0.5, 1.0], mesh, 4000, 7, salts::ENSEMBLE_MAIN, 4);
        assert_eq!(a.survivors, b.survivors, "same seed+workers must be bit-identical");
        let c = run_killed(&spec, 0.02, &[0.5, 1.0], mesh, 4000, 8, salts::ENSEMBLE_MAIN, 4);
        assert_ne!(a.survivors, c.survivors, "different seed must differ");
    }

    #[test]
    fn graded_mesh_embeds_monitors() {
        let mesh = GradedMesh { dt0: 1e-3, growth: 0.1, dt_max: 1.0 };
        let monitors = [0.013, 0.4, 1.0, 7.3, 25.0];
        let (times, idx) = mesh.grid(25.0, &monitors);
        for (&m, &i) in monitors.iter().zip(&idx) {
            assert!((times[i] - m).abs() < 1e-12);
        }
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn stable_sampler_positivity_matches_zolotarev() {
        let spec = ProcessSpec::stable(1.5, 0.5, 1.0).unwrap();
        let (p, se) = positivity_frequency(&spec, 400_000, 11, 4);
        let rho = spec.spitzer_rho().unwrap();
        assert!(
            (p - rho).abs() < 4.0 * se,
            "P(X_1>0) = {p} vs rho = {rho} (se {se})"
        );
    }

    #[test]
    fn positive_stable_laplace_transform() {
        // E e^{-S} = e^{-1} for the Kanter sampler at any alpha; checks
        // both the alpha = 1/2 shortcut and the general branch.
        for alpha in [0.5, 0.7] {
            let s = PositiveStableSampler::new(alpha);
            let mut rng = worker_rng(3, 99, 0);
            let n = 200_000;
            let mean: f64 = (0..n).map(|_| (-s.sample(&mut rng)).exp()).sum::<f64>() / n as f64;
            assert!(
                (mean - (-1.0f64).exp()).abs() < 2e-3,
                "alpha={alpha}: E e^-S = {mean}"
            );
        }
    }

    #[test]
    fn brownian_sup_matches_half_normal() {
        let m = brownian_sup_samples(1.0, 0.0, 1.0, 200_000, 5, salts::SUP_ORACLE, 4);
        // E sup = sqrt(2/π), P(sup <= 1) = 2Φ(1) - 1.
        let mean: f64 = m.iter().map(|&x| x as f64).sum::<f64>() / m.len() as f64;
        assert!((mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 5e-3);
        let p: f64 = m.iter().filter(|&&x| x <= 1.0).count() as f64 / m.len() as f64;
        assert!((p - 0.6826894921370859).abs() < 4e-3);
        assert!(m.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn brownian_killed_run_is_unbiased() {
        // Survival from x0 to time t is 2Φ(x0/√t) - 1 exactly; the
        // bridge-kill makes the skeleton exact even on a coarse mesh.
        let spec = ProcessSpec::brownian(1.0, 0.0).unwrap();
        let mesh = GradedMesh { dt0: 0.05, growth: 1.0, dt_max: 0.25 };
        let x0 = 0.4;
        let e = run_killed(&spec, x0, &[1.0], mesh, 400_000, 13, salts::ENSEMBLE_MAIN, 4);
        let p = e.survival_probability(0);
        let want = 2.0 * crate::special::normal_cdf(x0) - 1.0;
        let se = e.survival_stderr(0);
        assert!(
            (p - want).abs() < 4.0 * se,
            "survival {p} vs {want} (se {se})"
        );
    }

    #[test]
    fn smd_first_passage_laplace_matches_root() {
        // E e^{-τ⁺} = 1 - 1/(b Φ*(1)) = 2/(3+√5); skeleton crossing is
        // detected late, so the raw estimate sits slightly below and a
        // 2:1 Richardson step must close most of the gap.
        let spec = ProcessSpec::subordinator_minus_drift(0.5, 1.0, 1.0).unwrap();
        let grid = [1.0];
        let mesh = GradedMesh { dt0: 2e-4, growth: 0.02, dt_max: 0.5 };
        let coarse = smd_first_passage_up(&spec, &grid, 60.0, mesh, 150_000, 17, salts::FIRST_PASSAGE, 4);
        let fine = smd_first_passage_up(
            &spec,
            &grid,
            60.0,
            mesh.refined(),
            150_000,
            17,
            salts::FIRST_PASSAGE_COARSE,
            4,
        );
        let extrap = 2.0 * fine.mean_exp_neg_tau - coarse.mean_exp_neg_tau;
        let want = 1.0 - (3.0 - 5.0f64.sqrt()) / 2.0;
        let tol = 4.0 * fine.se_exp_neg_tau + (fine.mean_exp_neg_tau - coarse.mean_exp_neg_tau).abs();
        assert!(
            (extrap - want).abs() < tol.max(3e-3),
            "E e^-tau = {extrap} vs {want} (tol {tol})"
        );
    }

    #[test]
    fn bridge_argmax_uniform_moments() {
        let b = brownian_bridge_argmax(1.0, 0.0, 1 << 10, 50_000, 23, salts::BRIDGE, 4);
        let mean: f64 = b.fine.iter().sum::<f64>() / b.fine.len() as f64;
        assert!((mean - 0.5).abs() < 3.0 / (12.0f64 * 50_000.0).sqrt() + 1e-3);
        assert!(b.fine.iter().all(|&s| (0.0..=1.0).contains(&s)));
        // Coarse argmax lives on the even sub-grid of the same paths.
        for (f, c) in b.fine.iter().zip(&b.coarse) {
            assert!((f - c).abs() <= 1.0);
        }
    }
}
