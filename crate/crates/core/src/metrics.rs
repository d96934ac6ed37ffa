//! Attack-effect quantification: Hausdorff distance, matched-ray error
//! statistics, the four-way effect classifier, and the robustness
//! coefficient.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::fdd::LidarState;

/// Matched-ray error statistics between a benign and an attacked cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayErrorStats {
    /// Mean Euclidean displacement over rays present in both clouds, meters.
    pub mean_abs_error: f64,
    /// Largest matched-ray displacement, meters.
    pub max_abs_error: f64,
    /// Number of rays present in both clouds.
    pub matched_rays: usize,
    /// Fraction of benign rays missing from the attacked cloud, in [0, 1].
    pub dropped_fraction: f64,
    /// Rays present in the attacked cloud but absent from the benign one.
    pub injected_count: usize,
}

/// The four observable attack outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectLabel {
    /// Displacements within the sensor's own accuracy.
    None,
    /// Noticeable ranging errors (2 cm to 1 m mean displacement).
    PointsInterference,
    /// Points displaced beyond a meter or dropped outright.
    PointsRemoval,
    /// The supervision machine shut the sensor down.
    PowerOff,
}

impl EffectLabel {
    pub fn name(&self) -> &'static str {
        match self {
            EffectLabel::None => "none",
            EffectLabel::PointsInterference => "points_interference",
            EffectLabel::PointsRemoval => "points_removal",
            EffectLabel::PowerOff => "power_off",
        }
    }
}

/// Exact Hausdorff distance between the valid points of two clouds, meters.
///
/// `D_H = max(sup_a inf_b |a-b|, sup_b inf_a |a-b|)` over Cartesian
/// positions. Errors on empty inputs: total removal is a `dropped_fraction`
/// observation, not a distance. Exact for clouds up to 1e5 points a side —
/// the inner scan short-circuits once it beats the running supremum, which
/// prunes work without approximating.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    let pa: Vec<[f64; 3]> = a.valid_points().map(|p| p.cartesian()).collect();
    let pb: Vec<[f64; 3]> = b.valid_points().map(|p| p.cartesian()).collect();
    if pa.is_empty() {
        return Err(Error::EmptyCloud("first"));
    }
    if pb.is_empty() {
        return Err(Error::EmptyCloud("second"));
    }
    Ok(directed_sq(&pa, &pb).max(directed_sq(&pb, &pa)).sqrt())
}

/// Directed squared Hausdorff `sup_p inf_q |p-q|^2` with early break.
fn directed_sq(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    let mut sup = 0.0f64;
    for p in from {
        let mut inf = f64::INFINITY;
        for q in to {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            let dz = p[2] - q[2];
            let d = dx * dx + dy * dy + dz * dz;
            if d < inf {
                inf = d;
                if inf <= sup {
                    break; // cannot raise the supremum
                }
            }
        }
        if inf > sup {
            sup = inf;
        }
    }
    sup
}

/// Pair points by ray and summarize displacement, drops, and injections.
///
/// Only valid points participate: a point invalidated by supervision is a
/// dropped ray. The clouds must come from the same sensor configuration.
pub fn ray_error_stats(benign: &PointCloud, attacked: &PointCloud) -> Result<RayErrorStats> {
    if benign.config_id != attacked.config_id {
        return Err(Error::Comparison(
            "clouds come from different sensor configurations".into(),
        ));
    }
    let benign_by_ray: HashMap<(u32, u16), &crate::cloud::Point> =
        benign.valid_points().map(|p| (p.ray_id, p)).collect();
    let attacked_by_ray: HashMap<(u32, u16), &crate::cloud::Point> =
        attacked.valid_points().map(|p| (p.ray_id, p)).collect();

    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut matched = 0usize;
    for (ray, p) in &benign_by_ray {
        if let Some(q) = attacked_by_ray.get(ray) {
            let pa = p.cartesian();
            let qa = q.cartesian();
            let d = ((pa[0] - qa[0]).powi(2) + (pa[1] - qa[1]).powi(2) + (pa[2] - qa[2]).powi(2))
                .sqrt();
            sum += d;
            max = max.max(d);
            matched += 1;
        }
    }
    let benign_rays = benign_by_ray.len();
    let dropped = benign_rays - matched;
    let injected = attacked_by_ray
        .keys()
        .filter(|ray| !benign_by_ray.contains_key(*ray))
        .count();
    Ok(RayErrorStats {
        mean_abs_error: if matched > 0 { sum / matched as f64 } else { 0.0 },
        max_abs_error: max,
        matched_rays: matched,
        dropped_fraction: if benign_rays > 0 {
            dropped as f64 / benign_rays as f64
        } else {
            0.0
        },
        injected_count: injected,
    })
}

/// Classify an attack outcome from displacement statistics and the final
/// supervision state.
///
/// PowerOff dominates. Otherwise a mean displacement of at least 1 m or at
/// least half the rays dropped is Removal; a mean above the 2 cm accuracy
/// floor is Interference; anything else is no effect. Exactly 2 cm is no
/// effect; exactly 1 m is Removal.
pub fn classify_effect(stats: &RayErrorStats, final_state: LidarState) -> EffectLabel {
    if final_state == LidarState::PowerOff {
        return EffectLabel::PowerOff;
    }
    if stats.mean_abs_error >= 1.0 || stats.dropped_fraction >= 0.5 {
        return EffectLabel::PointsRemoval;
    }
    if stats.mean_abs_error > 0.02 {
        return EffectLabel::PointsInterference;
    }
    EffectLabel::None
}

/// Robustness coefficient: attacked average precision over benign.
pub fn robustness(ap_attacked: f64, ap_benign: f64) -> Result<f64> {
    if ap_benign == 0.0 {
        return Err(Error::Domain(
            "benign average precision must be nonzero".into(),
        ));
    }
    if !(0.0..=100.0).contains(&ap_attacked) || !(0.0..=100.0).contains(&ap_benign) {
        return Err(Error::Domain(
            "average precision values must lie in [0, 100]".into(),
        ));
    }
    Ok(ap_attacked / ap_benign)
}

/// One row of a frequency sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub frequency: f64,
    /// Hausdorff distance to the benign cloud; `None` when the attacked
    /// cloud kept no valid points ("removed-all").
    pub hausdorff: Option<f64>,
    pub label: EffectLabel,
    pub injected_count: usize,
}

/// Summarize a frequency sweep against a benign reference frame.
///
/// The distance column is the sentinel (`None`, printed `removed-all`)
/// whenever either side kept no valid points; total removal is reported
/// through the dropped fraction, not a distance.
pub fn sweep_report(
    results: &[(f64, PointCloud, LidarState)],
    benign: &PointCloud,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(results.len());
    for (frequency, attacked, state) in results {
        let stats = ray_error_stats(benign, attacked)?;
        let label = classify_effect(&stats, *state);
        let hd = if attacked.valid_count() == 0 || benign.valid_count() == 0 {
            None
        } else {
            Some(hausdorff(benign, attacked)?)
        };
        rows.push(SweepRow {
            frequency: *frequency,
            hausdorff: hd,
            label,
            injected_count: stats.injected_count,
        });
    }
    rows.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Ok(rows)
}

/// Write sweep rows as CSV; a fully removed cloud prints `removed-all`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "freq_hz,hausdorff_m,effect_label,injected_count")?;
    for row in rows {
        let hd = match row.hausdorff {
            Some(v) => v.to_string(),
            None => "removed-all".to_string(),
        };
        writeln!(
            w,
            "{},{},{},{}",
            row.frequency,
            hd,
            row.label.name(),
            row.injected_count
        )?;
    }
    Ok(())
}

/// Write ray-error statistics as a one-row CSV.
pub fn write_stats_csv<W: Write>(stats: &RayErrorStats, label: EffectLabel, mut w: W) -> Result<()> {
    writeln!(
        w,
        "mean_abs_error_m,max_abs_error_m,matched_rays,dropped_fraction,injected_count,effect_label"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{}",
        stats.mean_abs_error,
        stats.max_abs_error,
        stats.matched_rays,
        stats.dropped_fraction,
        stats.injected_count,
        label.name()
    )?;
    Ok(())
}
