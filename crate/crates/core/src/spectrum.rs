//! Intensity versus parallel momentum transfer, shared by all model levels.

use serde::Serialize;
use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffractionSpectrum {
    /// Model level that produced the spectrum, e.g. "hardwall" or "tdse/full".
    pub model: String,
    pub e_i: f64,
    pub theta_i: f64,
    pub delta_k: Vec<f64>,
    pub theta_d: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Intensity before any subtraction, when one was applied.
    pub intensity_raw: Option<Vec<f64>>,
}

impl DiffractionSpectrum {
    pub fn len(&self) -> usize {
        self.delta_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_k.is_empty()
    }

    /// Mean intensity over points with lo <= |ΔK| < hi, or None if the band is empty.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        band_mean(&self.delta_k, &self.intensity, lo, hi)
    }

    /// CSV with columns delta_k, theta_d_deg, intensity, intensity_raw.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta_k", "theta_d_deg", "intensity", "intensity_raw"])?;
        for i in 0..self.len() {
            let raw = self.intensity_raw.as_ref().map_or(self.intensity[i], |r| r[i]);
            w.write_record([
                format!("{:.10}", self.delta_k[i]),
                format!("{:.10}", self.theta_d[i].to_degrees()),
                format!("{:.12e}", self.intensity[i]),
                format!("{:.12e}", raw),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn band_mean(delta_k: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (sum, n) = delta_k
        .iter()
        .zip(values)
        .filter(|(k, _)| (lo..hi).contains(&k.abs()))
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Lobe structure of one side (sign of ΔK) of a spectrum, from the specular
/// peak out to the lobe beyond the one containing a reference transfer.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LobeAnalysis {
    /// |ΔK| of lobe maxima at or above `main_fraction` of the largest off-specular maximum.
    pub main_lobes: Vec<f64>,
    /// Weaker local maxima inside the analysed range.
    pub sub_lobes: Vec<f64>,
    /// Points on a falling flank where the log-slope drops below half of the
    /// steepest step on either side of it before steepening again.
    pub shoulders: Vec<f64>,
    /// |ΔK| at the end of the analysed range.
    pub range_end: f64,
}

impl LobeAnalysis {
    pub fn wing_count(&self) -> usize {
        self.sub_lobes.len() + self.shoulders.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct LobeCriteria {
    pub main_fraction: f64,
    pub slope_ratio: f64,
    /// Shoulders below this fraction of the largest off-specular maximum are ignored.
    pub floor: f64,
}

impl Default for LobeCriteria {
    fn default() -> Self {
        Self {
            main_fraction: 0.2,
            slope_ratio: 0.5,
            floor: 1e-3,
        }
    }
}

impl DiffractionSpectrum {
    /// Local maxima of |ΔK| on one side (`side` > 0 for ΔK ≥ 0), all of them.
    pub fn local_maxima(&self, side: f64) -> Vec<(f64, f64)> {
        let (x, y) = one_side(&self.delta_k, &self.intensity, side);
        (1..x.len().saturating_sub(1))
            .filter(|&j| y[j] > y[j - 1] && y[j] >= y[j + 1])
            .map(|j| (x[j], y[j]))
            .collect()
    }

    pub fn lobes(&self, side: f64, reference_dk: f64, crit: &LobeCriteria) -> LobeAnalysis {
        lobe_analysis(&self.delta_k, &self.intensity, side, reference_dk, crit)
    }
}

fn one_side(delta_k: &[f64], values: &[f64], side: f64) -> (Vec<f64>, Vec<f64>) {
    let s = if side < 0.0 { -1.0 } else { 1.0 };
    let mut pts: Vec<(f64, f64)> = delta_k
        .iter()
        .zip(values)
        .filter(|(k, _)| s * **k >= -1e-12)
        .map(|(k, v)| ((s * k).max(0.0), *v))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().unzip()
}

pub fn lobe_analysis(delta_k: &[f64], values: &[f64], side: f64, reference_dk: f64, crit: &LobeCriteria) -> LobeAnalysis {
    let (x, y) = one_side(delta_k, values, side);
    let n = x.len();
    if n < 4 {
        return LobeAnalysis::default();
    }
    let maxima: Vec<usize> = (1..n - 1).filter(|&j| y[j] > y[j - 1] && y[j] >= y[j + 1]).collect();
    let big = maxima.iter().map(|&j| y[j]).fold(0.0, f64::max);
    if big <= 0.0 {
        return LobeAnalysis::default();
    }
    let mut main = vec![0];
    main.extend(maxima.iter().copied().filter(|&j| y[j] >= crit.main_fraction * big));
    let r = (0..main.len())
        .min_by(|&a, &b| (x[main[a]] - reference_dk).abs().total_cmp(&(x[main[b]] - reference_dk).abs()))
        .unwrap();
    let end = main.get(r + 1).copied().unwrap_or(n - 1);

    let sub_lobes = maxima
        .iter()
        .filter(|&&j| j < end && y[j] < crit.main_fraction * big)
        .map(|&j| x[j])
        .collect();

    let log: Vec<f64> = y.iter().map(|v| v.max(1e-300).ln()).collect();
    let step: Vec<f64> = log.windows(2).map(|w| w[1] - w[0]).collect();
    let mut shoulders = Vec::new();
    for dir in [-1.0, 1.0] {
        // Runs of steps with the sign of `dir`: falling outward for -1, falling inward for +1.
        let mut run: Vec<usize> = Vec::new();
        for i in 0..=end.min(step.len()) {
            if i < end && dir * step[i] > 0.0 {
                run.push(i);
                continue;
            }
            let m: Vec<f64> = run.iter().map(|&i| step[i].abs()).collect();
            for k in 1..m.len().saturating_sub(1) {
                let before = m[..k].iter().cloned().fold(0.0, f64::max);
                let after = m[k + 1..].iter().cloned().fold(0.0, f64::max);
                let i = run[k];
                if m[k] < m[k - 1]
                    && m[k] <= m[k + 1]
                    && m[k] < crit.slope_ratio * before
                    && m[k] < crit.slope_ratio * after
                    && y[i].min(y[i + 1]) > crit.floor * big
                {
                    shoulders.push(0.5 * (x[i] + x[i + 1]));
                }
            }
            run.clear();
        }
    }
    shoulders.sort_by(f64::total_cmp);
    LobeAnalysis {
        main_lobes: main.iter().map(|&j| x[j]).collect(),
        sub_lobes,
        shoulders,
        range_end: x[end],
    }
}
