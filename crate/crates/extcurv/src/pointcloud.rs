//! Coarse extrinsic curvature from Poisson point clouds.
//!
//! A Poisson process of intensity n·Lebesgue is restricted to the tube segments at
//! x₀ and y = exp_{x₀}(δv); the empirical curvature is κ̂ = 1 − W₁(η_{x₀}, η_y)/δ.
//! Both this δ-normalized value and the chord-normalized 1 − W₁/‖x₀ − y‖ are kept;
//! they differ by O(δ²).

use crate::error::{Error, Result};
use crate::estimator::{predicted_w1, CurvatureEstimate, Method};
use crate::geometry::ManifoldModel;
use crate::measures::{poisson_tube_with_volume, segment_volume, DiscreteMeasure, TubeSegmentSpec};
use crate::rng::{stream, Role};
use crate::transport::w1_exact;
use crate::vecops::{loglog_slope, median, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Extra draws allowed when a cloud comes back empty.
pub const MAX_RESAMPLES: usize = 3;
/// The rate condition log(n)·n^{−1/(m+k)} = o(δ³) is considered met below this ratio.
pub const RATE_RATIO_LIMIT: f64 = 0.2;

/// One rung of an intensity schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudLevel {
    /// Poisson intensity per unit ambient volume.
    pub intensity: f64,
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

/// A point-cloud study at x₀ in direction v.
#[derive(Debug, Clone)]
pub struct CloudExperiment {
    pub model: ManifoldModel,
    pub x0: Vector,
    pub v: Vector,
    pub levels: Vec<CloudLevel>,
    pub trials: usize,
    pub seed: u64,
    /// Error band the final level's median |κ̂ − κ_pred| must fall below.
    pub band: f64,
}

/// Per-trial outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudRecord {
    pub level: usize,
    pub trial: usize,
    pub intensity: f64,
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub source_atoms: usize,
    pub target_atoms: usize,
    pub w1: f64,
    pub chord: f64,
    /// 1 − W₁/δ.
    pub kappa_delta: f64,
    /// 1 − W₁/‖x₀ − y‖.
    pub kappa_chord: f64,
    /// Draws needed to get two nonempty clouds (1 = no resampling).
    pub attempts: usize,
}

impl CloudRecord {
    pub fn estimate(&self) -> Result<CurvatureEstimate> {
        CurvatureEstimate::new(self.w1, self.chord, Method::PointCloud, 0.0)
    }
}

/// (W₁, 1 − W₁/δ, 1 − W₁/chord) for two given clouds.
pub fn kappa_from_clouds(mu: &DiscreteMeasure, nu: &DiscreteMeasure, delta: f64, chord: f64) -> Result<(f64, f64, f64)> {
    if !(delta > 0.0) || !(chord > 0.0) {
        return Err(Error::Contract(format!("δ and the chord must be positive, got {delta} and {chord}")));
    }
    let (w1, _) = w1_exact(mu, nu)?;
    Ok((w1, 1.0 - w1 / delta, 1.0 - w1 / chord))
}

/// Segment specs and volumes of one level.
struct PreparedLevel {
    level: CloudLevel,
    source: TubeSegmentSpec,
    target: TubeSegmentSpec,
    source_volume: f64,
    target_volume: f64,
    chord: f64,
}

impl CloudExperiment {
    /// Validates widths against δ/4 and the trial count.
    pub fn new(
        model: ManifoldModel,
        x0: Vector,
        v: Vector,
        levels: Vec<CloudLevel>,
        trials: usize,
        seed: u64,
        band: f64,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Contract("a point-cloud experiment needs at least one level".into()));
        }
        if trials == 0 {
            return Err(Error::Contract("a point-cloud experiment needs at least one trial".into()));
        }
        for (i, l) in levels.iter().enumerate() {
            if !(l.intensity > 0.0) || !(l.delta > 0.0) || !(l.sigma > 0.0) || !(l.epsilon > 0.0) {
                return Err(Error::Contract(format!("level {i}: intensity, δ, σ and ε must be positive")));
            }
            if l.sigma.max(l.epsilon) > 0.25 * l.delta * (1.0 + 1e-12) {
                return Err(Error::Contract(format!("level {i}: σ ∨ ε exceeds δ/4")));
            }
        }
        model.fermi_chart(&x0, &v)?;
        Ok(Self { model, x0, v, levels, trials, seed, band })
    }

    /// log(n)·n^{−1/(m+k)}/δ³ at a level.
    pub fn rate_ratio(&self, level: usize) -> f64 {
        let l = &self.levels[level];
        let d = (self.model.dim() + self.model.codim()) as f64;
        l.intensity.ln() * l.intensity.powf(-1.0 / d) / l.delta.powi(3)
    }

    /// Whether the finest level satisfies the rate condition numerically.
    pub fn rate_condition_met(&self) -> bool {
        self.rate_ratio(self.levels.len() - 1) < RATE_RATIO_LIMIT
    }

    fn prepare(&self, level: usize) -> Result<PreparedLevel> {
        let l = *self.levels.get(level).ok_or_else(|| Error::Contract(format!("no level {level}")))?;
        let chart = self.model.fermi_chart(&self.x0, &self.v)?;
        let mut alpha = vec![0.0; self.model.dim()];
        alpha[0] = l.delta;
        let at_y = chart.frame(&alpha)?;
        let source = TubeSegmentSpec::new(self.model.clone(), self.x0.clone(), self.v.clone(), l.sigma, l.epsilon)?;
        let target = source.recentered(at_y.point.clone(), at_y.tangent[0].clone())?;
        Ok(PreparedLevel {
            source_volume: segment_volume(&source)?,
            target_volume: segment_volume(&target)?,
            chord: (&at_y.point - &self.x0).norm(),
            level: l,
            source,
            target,
        })
    }

    fn run_trial(&self, p: &PreparedLevel, level: usize, trial: usize) -> Result<CloudRecord> {
        let l = p.level;
        for attempt in 0..=MAX_RESAMPLES {
            let key = (trial * (MAX_RESAMPLES + 1) + attempt) as u64;
            let mu = poisson_tube_with_volume(
                &p.source,
                l.intensity,
                p.source_volume,
                &mut stream(self.seed, level as u64, key, Role::Source),
            );
            let nu = poisson_tube_with_volume(
                &p.target,
                l.intensity,
                p.target_volume,
                &mut stream(self.seed, level as u64, key, Role::Target),
            );
            let (mu, nu) = match (mu, nu) {
                (Err(Error::EmptyCloud), _) | (_, Err(Error::EmptyCloud)) => continue,
                (mu, nu) => (mu?, nu?),
            };
            let (w1, kappa_delta, kappa_chord) = kappa_from_clouds(&mu, &nu, l.delta, p.chord)?;
            return Ok(CloudRecord {
                level,
                trial,
                intensity: l.intensity,
                delta: l.delta,
                sigma: l.sigma,
                epsilon: l.epsilon,
                source_atoms: mu.len(),
                target_atoms: nu.len(),
                w1,
                chord: p.chord,
                kappa_delta,
                kappa_chord,
                attempts: attempt + 1,
            });
        }
        Err(Error::EmptyCloud)
    }

    /// κ̂ for one (level, trial); empty clouds are redrawn up to [`MAX_RESAMPLES`] times.
    pub fn empirical_kappa(&self, level: usize, trial: usize) -> Result<CloudRecord> {
        let p = self.prepare(level)?;
        self.run_trial(&p, level, trial)
    }

    /// All trials of one level, in trial order.
    pub fn run_level(&self, level: usize) -> Result<Vec<CloudRecord>> {
        let p = self.prepare(level)?;
        (0..self.trials).into_par_iter().map(|t| self.run_trial(&p, level, t)).collect()
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub intensity: f64,
    pub median_atoms: f64,
    pub kappa_pred: f64,
    pub median_kappa: f64,
    /// Median over trials of |κ̂ − κ_pred| (chord-normalized κ̂).
    pub median_abs_err: f64,
    /// Median of |κ̂_δ − (1 − W₁_pred/δ)| for the δ-normalized κ̂.
    pub median_abs_err_delta: f64,
    /// 95% Monte Carlo half-width of the median κ̂ (1.96·1.2533·s.d./√trials).
    pub mc_band: f64,
    pub rate_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub records: Vec<CloudRecord>,
    /// Log-log slope of the median error against the intensity.
    pub rate_slope: f64,
    /// Median errors decrease from each level to the next.
    pub monotone: bool,
    /// Final-level median error below the experiment's band.
    pub below_band: bool,
    pub rate_condition_met: bool,
    pub pass: bool,
}

/// Runs every level and tabulates median errors against the second-order prediction.
pub fn convergence_study(exp: &CloudExperiment) -> Result<ConvergenceStudy> {
    if exp.levels.len() < 3 {
        return Err(Error::Contract(format!("a convergence study needs at least 3 levels, got {}", exp.levels.len())));
    }
    let mut rows = Vec::with_capacity(exp.levels.len());
    let mut records = Vec::new();
    for (level, l) in exp.levels.iter().enumerate() {
        let recs = exp.run_level(level)?;
        let expansion = predicted_w1(&exp.model, &exp.x0, &exp.v, l.delta, l.sigma, l.epsilon)?;
        let pred = expansion.kappa;
        // The δ-normalized prediction, 1 − W₁_pred/δ, for the δ-normalized κ̂.
        let pred_delta = 1.0 - expansion.w1 / l.delta;
        let kappas: Vec<f64> = recs.iter().map(|r| r.kappa_chord).collect();
        let errs: Vec<f64> = kappas.iter().map(|k| (k - pred).abs()).collect();
        let errs_delta: Vec<f64> = recs.iter().map(|r| (r.kappa_delta - pred_delta).abs()).collect();
        let atoms: Vec<f64> = recs.iter().map(|r| r.source_atoms as f64).collect();
        let mean = kappas.iter().sum::<f64>() / kappas.len() as f64;
        let sd = if kappas.len() > 1 {
            (kappas.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (kappas.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        rows.push(ConvergenceRow {
            level,
            intensity: l.intensity,
            median_atoms: median(&atoms),
            kappa_pred: pred,
            median_kappa: median(&kappas),
            median_abs_err: median(&errs),
            median_abs_err_delta: median(&errs_delta),
            mc_band: 1.96 * 1.2533 * sd / (kappas.len() as f64).sqrt(),
            rate_ratio: exp.rate_ratio(level),
        });
        records.extend(recs);
    }
    let n: Vec<f64> = rows.iter().map(|r| r.intensity).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.median_abs_err.max(f64::MIN_POSITIVE)).collect();
    let monotone = rows.windows(2).all(|w| w[1].median_abs_err < w[0].median_abs_err);
    let below_band = rows.last().unwrap().median_abs_err < exp.band;
    Ok(ConvergenceStudy {
        rate_slope: loglog_slope(&n, &e),
        monotone,
        below_band,
        rate_condition_met: exp.rate_condition_met(),
        pass: monotone && below_band,
        rows,
        records,
    })
}

/// One intensity of a null study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullRow {
    pub intensity: f64,
    pub median_atoms: f64,
    pub median_w1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullStudy {
    pub rows: Vec<NullRow>,
    /// Log-log slope of the median W₁ against the intensity.
    pub slope: f64,
    /// −1/(m+k).
    pub reference_slope: f64,
}

/// W₁ between two independent Poisson clouds of the same segment, over intensities.
pub fn null_study(spec: &TubeSegmentSpec, intensities: &[f64], trials: usize, seed: u64) -> Result<NullStudy> {
    if intensities.len() < 2 || trials == 0 {
        return Err(Error::Contract("a null study needs at least two intensities and one trial".into()));
    }
    let volume = segment_volume(spec)?;
    let mut rows = Vec::with_capacity(intensities.len());
    for (i, &n) in intensities.iter().enumerate() {
        let out: Vec<(f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                for attempt in 0..=MAX_RESAMPLES {
                    let key = (t * (MAX_RESAMPLES + 1) + attempt) as u64;
                    let a = poisson_tube_with_volume(spec, n, volume, &mut stream(seed, i as u64, key, Role::Source));
                    let b = poisson_tube_with_volume(spec, n, volume, &mut stream(seed, i as u64, key, Role::Target));
                    match (a, b) {
                        (Err(Error::EmptyCloud), _) | (_, Err(Error::EmptyCloud)) => continue,
                        (a, b) => {
                            let (a, b) = (a?, b?);
                            return Ok((w1_exact(&a, &b)?.0, a.len() as f64));
                        }
                    }
                }
                Err(Error::EmptyCloud)
            })
            .collect::<Result<_>>()?;
        let w: Vec<f64> = out.iter().map(|o| o.0).collect();
        let atoms: Vec<f64> = out.iter().map(|o| o.1).collect();
        rows.push(NullRow { intensity: n, median_atoms: median(&atoms), median_w1: median(&w) });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.intensity).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.median_w1).collect();
    let d = (spec.manifold.dim() + spec.manifold.codim()) as f64;
    Ok(NullStudy { slope: loglog_slope(&x, &y), reference_slope: -1.0 / d, rows })
}
