//! Gain curves (input current → steady firing rate) and their inverses.
//!
//! PIF and LIF have closed forms. Every other model is tabulated by
//! simulating one neuron per grid current and counting spikes after a
//! discarded transient; the counts are made monotone by isotonic
//! regression. The inverse interpolates on the strictly increasing part of
//! the table and starts at the rheobase, so small positive rates map to
//! currents just above firing onset rather than to a dead band.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::parse_f64;
use crate::neuron::{LifParams, NeuronModel};

/// LIF rate `[t_ref + (c/g_L) ln(u / (u − g_L Δv))]⁻¹` with `Δv = v_th − v_reset`;
/// zero at or below the rheobase `g_L Δv`.
pub fn lif_gain(p: &LifParams, u: f64) -> f64 {
    let rheobase = p.g_l * (p.v_th - p.v_reset);
    if !(u > rheobase) {
        return 0.0;
    }
    let isi = p.t_ref - (p.c / p.g_l) * (-rheobase / u).ln_1p();
    1.0 / isi
}

/// Current `g_L Δv / (1 − exp(g_L (t_ref − 1/a) / c))` that yields rate `a`;
/// zero rate maps to zero current.
pub fn lif_gain_inverse(p: &LifParams, a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("rate must be >= 0, got {a}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    if p.t_ref > 0.0 && a >= 1.0 / p.t_ref {
        return Err(Error::Saturation {
            rate: a,
            max: 1.0 / p.t_ref,
        });
    }
    let x = p.g_l * (p.t_ref - 1.0 / a) / p.c;
    Ok(p.g_l * (p.v_th - p.v_reset) / -x.exp_m1())
}

/// Simulation settings for [`tabulate_gain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulationSpec {
    pub grid: Vec<f64>,
    pub sim_time: f64,
    pub discard_time: f64,
    pub dt: f64,
}

impl TabulationSpec {
    /// `points` evenly spaced currents in `[0, i_max]`.
    pub fn uniform(i_max: f64, points: usize, sim_time: f64, discard_time: f64, dt: f64) -> Self {
        let grid = (0..points)
            .map(|k| i_max * k as f64 / (points - 1) as f64)
            .collect();
        Self {
            grid,
            sim_time,
            discard_time,
            dt,
        }
    }

    /// Model-specific defaults: 256 points, 2200 ms with 200 ms discarded
    /// (22 and 2 time units for the non-dimensional models).
    pub fn default_for(model: &NeuronModel) -> Self {
        let (sim, discard) = if model.is_biophysical() {
            (2200.0, 200.0)
        } else {
            (22.0, 2.0)
        };
        Self::uniform(default_max_current(model), 256, sim, discard, model.default_dt())
    }

    /// Width of one spike count in rate units.
    pub fn counting_resolution(&self) -> f64 {
        1.0 / (self.sim_time - self.discard_time)
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("current grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "current grid must be strictly increasing".into(),
            ));
        }
        if !(self.dt > 0.0 && self.discard_time >= 0.0 && self.sim_time > self.discard_time) {
            return Err(Error::InvalidParameter(format!(
                "need dt > 0 and sim_time > discard_time >= 0, got dt={}, sim={}, discard={}",
                self.dt, self.sim_time, self.discard_time
            )));
        }
        Ok(())
    }
}

/// Upper end of the default tabulation grid for each model.
pub fn default_max_current(model: &NeuronModel) -> f64 {
    match model {
        NeuronModel::Pif(_) => 5.0,
        NeuronModel::Lif(p) => 5.0 * p.g_l * (p.v_th - p.v_reset),
        NeuronModel::Gif(p) => 4.0 * p.g_l * (p.theta_inf - p.v_l),
        NeuronModel::MorrisLecar(_) => 200.0,
        NeuronModel::WangBuzsaki(_) => 10.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub model_id: String,
    pub dt: f64,
    pub sim_time: f64,
    pub discard_time: f64,
    pub rate_unit: String,
}

/// Monotone tabulated gain curve.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    pub header: TableHeader,
    pub currents: Vec<f64>,
    pub rates: Vec<f64>,
    inv_rates: Vec<f64>,
    inv_currents: Vec<f64>,
}

impl GainTable {
    pub fn new(header: TableHeader, currents: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if currents.len() != rates.len() {
            return Err(Error::DimensionMismatch {
                what: "gain table rates",
                expected: currents.len(),
                found: rates.len(),
            });
        }
        if currents.is_empty() {
            return Err(Error::InvalidParameter("gain table is empty".into()));
        }
        if currents.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "gain table currents must be strictly increasing".into(),
            ));
        }
        if rates.windows(2).any(|w| w[1] < w[0]) || rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidParameter(
                "gain table rates must be non-negative and non-decreasing".into(),
            ));
        }
        // inverse knots: the last silent current, then both ends of every
        // rising segment; flat runs appear as repeated rates
        let start = match rates.iter().rposition(|&r| r == 0.0) {
            Some(k) => currents[k],
            None => 0.0f64.min(currents[0]),
        };
        let mut inv_rates = vec![0.0];
        let mut inv_currents = vec![start];
        for k in 0..rates.len() {
            let rising_from_prev = k == 0 || rates[k] > rates[k - 1];
            if rates[k] > 0.0 && rising_from_prev {
                if k > 0 && rates[k - 1] > 0.0 && inv_currents.last() != Some(&currents[k - 1]) {
                    inv_rates.push(rates[k - 1]);
                    inv_currents.push(currents[k - 1]);
                }
                inv_rates.push(rates[k]);
                inv_currents.push(currents[k]);
            }
        }
        Ok(Self {
            header,
            currents,
            rates,
            inv_rates,
            inv_currents,
        })
    }

    pub fn max_rate(&self) -> f64 {
        *self.rates.last().unwrap()
    }

    /// Last grid current with zero rate.
    pub fn rheobase(&self) -> f64 {
        self.inv_currents[0]
    }

    /// First firing grid point `(current, rate)`. A large rate here relative
    /// to the neighbouring increments marks a discontinuous onset.
    pub fn onset(&self) -> Option<(f64, f64)> {
        self.inv_rates
            .get(1)
            .map(|&r| (self.inv_currents[1], r))
    }

    /// Piecewise-linear rate at `current`, clamped to the table ends.
    pub fn rate(&self, current: f64) -> f64 {
        interp(&self.currents, &self.rates, current)
    }

    /// Current producing `rate`. Zero maps to zero; rates above the table
    /// range are a saturation error.
    pub fn inverse(&self, rate: f64) -> Result<f64> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("rate must be >= 0, got {rate}")));
        }
        if rate == 0.0 {
            return Ok(0.0);
        }
        if rate > self.max_rate() {
            return Err(Error::Saturation {
                rate,
                max: self.max_rate(),
            });
        }
        let xs = &self.inv_rates;
        let k = xs.partition_point(|&v| v < rate);
        if xs[k] == rate {
            // flat run: report its first current
            return Ok(self.inv_currents[k]);
        }
        let (x0, x1) = (xs[k - 1], xs[k]);
        let (y0, y1) = (self.inv_currents[k - 1], self.inv_currents[k]);
        Ok(y0 + (y1 - y0) * (rate - x0) / (x1 - x0))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_string(&self.header).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "#{header}")?;
        writeln!(w, "current,rate")?;
        for (c, r) in self.currents.iter().zip(&self.rates) {
            writeln!(w, "{c},{r}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse("empty gain table".into()))??;
        let json = first
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("gain table must start with a '#' header line".into()))?;
        let header: TableHeader =
            serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        let cols = lines
            .next()
            .ok_or_else(|| Error::Parse("missing column header".into()))??;
        if cols.trim() != "current,rate" {
            return Err(Error::Parse(format!("unexpected column header '{cols}'")));
        }
        let (mut currents, mut rates) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (c, r) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad gain table row '{line}'")))?;
            currents.push(parse_f64(c)?);
            rates.push(parse_f64(r)?);
        }
        Self::new(header, currents, rates)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Linear interpolation on increasing `xs`, clamped at both ends.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Unweighted pool-adjacent-violators fit: the non-decreasing sequence
/// closest to `ys` in least squares.
pub fn isotonic(ys: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(ys.len());
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// Spike count of `model` driven by constant `current`, over
/// `(discard_time, sim_time]`.
pub fn count_spikes(model: &NeuronModel, current: f64, spec: &TabulationSpec) -> Result<u64> {
    let stepper = model.stepper(spec.dt)?;
    let mut st = stepper.initial_state();
    let steps = (spec.sim_time / spec.dt).round() as u64;
    let mut count = 0;
    for _ in 0..steps {
        let spiked = stepper
            .step(&mut st, current)
            .map_err(|_| Error::TabulationDiverged { current })?;
        if spiked && st.t > spec.discard_time {
            count += 1;
        }
    }
    Ok(count)
}

/// Tabulates the gain of `model`, one independent simulation per grid
/// current (run in parallel), then enforces monotonicity.
pub fn tabulate_gain(model: &NeuronModel, spec: &TabulationSpec) -> Result<GainTable> {
    spec.validate()?;
    model.validate()?;
    let window = spec.sim_time - spec.discard_time;
    let counts: Vec<Result<u64>> = spec
        .grid
        .par_iter()
        .map(|&i| count_spikes(model, i, spec))
        .collect();
    let raw = counts
        .into_iter()
        .map(|c| c.map(|n| n as f64 / window))
        .collect::<Result<Vec<_>>>()?;
    let header = TableHeader {
        model_id: model.id().to_string(),
        dt: spec.dt,
        sim_time: spec.sim_time,
        discard_time: spec.discard_time,
        rate_unit: if model.is_biophysical() { "1/ms" } else { "1/time" }.to_string(),
    };
    GainTable::new(header, spec.grid.clone(), isotonic(&raw))
}

/// Cache file name for a model and tabulation spec: model id plus a hash
/// of both serialized.
pub fn cache_key(model: &NeuronModel, spec: &TabulationSpec) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(model).expect("model serializes"));
    h.update(serde_json::to_vec(spec).expect("spec serializes"));
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("{}-{hex}.csv", model.id())
}

/// Loads the table from `cache_dir` if present, otherwise tabulates and
/// stores it there.
pub fn cached_gain_table(
    model: &NeuronModel,
    spec: &TabulationSpec,
    cache_dir: Option<&Path>,
) -> Result<GainTable> {
    let Some(dir) = cache_dir else {
        return tabulate_gain(model, spec);
    };
    let path: PathBuf = dir.join(cache_key(model, spec));
    if path.exists() {
        match GainTable::load(&path) {
            Ok(t) => return Ok(t),
            Err(e) => log::warn!("ignoring unreadable gain cache {}: {e}", path.display()),
        }
    }
    let table = tabulate_gain(model, spec)?;
    std::fs::create_dir_all(dir)?;
    // write then rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    table.save(&tmp)?;
    std::fs::rename(&tmp, &path)?;
    Ok(table)
}

/// A gain curve usable by the engine.
#[derive(Debug, Clone, PartialEq)]
pub enum GainCurve {
    /// Perfect integrator: rate `u / (v_th − v_reset)`.
    Pif { v_th: f64, v_reset: f64 },
    Lif(LifParams),
    Table(GainTable),
}

impl GainCurve {
    /// Closed-form curve for PIF/LIF models, `None` otherwise.
    pub fn analytic(model: &NeuronModel) -> Option<Self> {
        match model {
            NeuronModel::Pif(p) => Some(GainCurve::Pif {
                v_th: p.v_th,
                v_reset: p.v_reset,
            }),
            NeuronModel::Lif(p) => Some(GainCurve::Lif(p.clone())),
            _ => None,
        }
    }

    pub fn max_rate(&self) -> f64 {
        match self {
            GainCurve::Pif { .. } => f64::INFINITY,
            GainCurve::Lif(p) if p.t_ref > 0.0 => 1.0 / p.t_ref,
            GainCurve::Lif(_) => f64::INFINITY,
            GainCurve::Table(t) => t.max_rate(),
        }
    }

    pub fn rate(&self, current: f64) -> f64 {
        match self {
            GainCurve::Pif { v_th, v_reset } => current.max(0.0) / (v_th - v_reset),
            GainCurve::Lif(p) => lif_gain(p, current),
            GainCurve::Table(t) => t.rate(current),
        }
    }

    pub fn inverse(&self, rate: f64) -> Result<f64> {
        match self {
            GainCurve::Pif { v_th, v_reset } => {
                if !(rate >= 0.0) || !rate.is_finite() {
                    return Err(Error::InvalidParameter(format!("rate must be >= 0, got {rate}")));
                }
                Ok(rate * (v_th - v_reset))
            }
            GainCurve::Lif(p) => lif_gain_inverse(p, rate),
            GainCurve::Table(t) => t.inverse(rate),
        }
    }
}
