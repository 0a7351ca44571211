//! Experiment drivers: analytic criteria tables, Monte-Carlo FER sweeps,
//! entropy convergence curves and cost comparisons.

pub mod metrics;
pub mod report;

use std::thread;

use thiserror::Error;

use crate::catalog::{Catalog, CatalogEntry, CatalogError};
use crate::channel::{
    constraint_entropy_mod, criteria, transmit, ChannelError, ChannelSpec, CodeCriteria,
};
use crate::codes::{CodeError, CodeTree, ROOT};
use crate::combined::{rho_estimate, CombinedConfig, CombinedError, CostModel};
use crate::rng::frame_rng;
use crate::trellis::{DecodeError, SoftDecoder, StateModel, TrellisConfig};

pub use metrics::{hamming, levenshtein, nld};
pub use report::{sig6, Cell, Format, Report};

/// Normal quantile used for every reported confidence half-width.
pub const CI_Z: f64 = 1.96;

pub const BER_DEFINITION: &str =
    "BER = Hamming distance between transmitted bits and the winning path labels / L(X), pooled over frames";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Combined(#[from] CombinedError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub code_id: String,
    pub num_symbols: usize,
    pub ebn0_db: Vec<f64>,
    pub models: Vec<StateModel>,
    pub trials: u64,
    pub master_seed: u64,
    pub eta: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            code_id: "C5".into(),
            num_symbols: 100,
            ebn0_db: vec![6.0],
            models: vec![StateModel::Aggregated(1), StateModel::BitSymbol],
            trials: 10_000,
            master_seed: 1,
            eta: 1e-6,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if !(self.eta > 0.0 && self.eta < (-1f64).exp()) {
            return bad(format!("eta must lie in (0, 1/e), got {}", self.eta));
        }
        if self.num_symbols == 0 {
            return bad("L(S) must be >= 1".into());
        }
        if self.ebn0_db.iter().any(|x| x.is_nan()) {
            return bad("Eb/N0 values must be numbers".into());
        }
        if self.models.contains(&StateModel::Aggregated(0)) {
            return bad("T must be >= 1".into());
        }
        Ok(())
    }
}

const CRITERIA_COLUMNS: &[&str] = &[
    "code", "source", "ls", "ebn0_db", "eta", "d_eta", "p_sync", "h_delta_s", "mepl", "vepl",
    "epl_std_dev", "mdl", "excess_rate", "crossover", "lost_mass",
];

/// Analytic criteria for each listed code (no simulation).
pub fn run_criteria_table(
    catalog: &Catalog,
    codes: &[String],
    num_symbols: usize,
    ebn0_db: f64,
    eta: f64,
) -> Result<Report, HarnessError> {
    let channel = ChannelSpec::awgn(ebn0_db)?;
    let mut report = Report::new("criteria", CRITERIA_COLUMNS);
    report.note("delta_s = decoded symbol count - emitted symbol count");
    report.note("vepl is a variance; epl_std_dev is its square root");
    for id in codes {
        let entry = catalog.get(id)?;
        let c = criteria(&entry.code, &entry.source, num_symbols, &channel, eta)?;
        report.push(criteria_row(entry, num_symbols, ebn0_db, &c));
    }
    Ok(report)
}

fn criteria_row(entry: &CatalogEntry, ls: usize, ebn0: f64, c: &CodeCriteria) -> Vec<Cell> {
    let a = &c.analysis;
    vec![
        entry.id.clone().into(),
        entry.source_name.clone().into(),
        ls.into(),
        ebn0.into(),
        a.eta.into(),
        a.d_eta.into(),
        a.p_sync.into(),
        a.h_delta_s.into(),
        c.mepl.into(),
        c.vepl.into(),
        c.epl_std_dev.into(),
        c.mdl.into(),
        c.excess_rate.into(),
        a.crossover.into(),
        a.lost_mass.into(),
    ]
}

/// What one decoder did on one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameScore {
    pub frame_error: bool,
    pub bit_errors: u64,
    pub num_bits: u64,
    pub edit_distance: u64,
    pub branch_ops: u64,
    pub infeasible: bool,
}

/// Aggregate over frames for one (Eb/N0, T) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub ebn0_db: f64,
    pub model: StateModel,
    pub trials: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub edit_distance: u64,
    pub branch_ops: u64,
    pub infeasible: u64,
    /// Per-frame sums for the confidence intervals.
    ber_sum: f64,
    ber_sq: f64,
    nld_sq: f64,
    ls: usize,
}

impl CellStats {
    fn new(ebn0_db: f64, model: StateModel, ls: usize) -> Self {
        Self {
            ebn0_db,
            model,
            trials: 0,
            frame_errors: 0,
            bit_errors: 0,
            total_bits: 0,
            edit_distance: 0,
            branch_ops: 0,
            infeasible: 0,
            ber_sum: 0.0,
            ber_sq: 0.0,
            nld_sq: 0.0,
            ls,
        }
    }

    fn add(&mut self, s: &FrameScore) {
        self.trials += 1;
        self.frame_errors += u64::from(s.frame_error);
        self.bit_errors += s.bit_errors;
        self.total_bits += s.num_bits;
        self.edit_distance += s.edit_distance;
        self.branch_ops += s.branch_ops;
        self.infeasible += u64::from(s.infeasible);
        let ber = s.bit_errors as f64 / s.num_bits.max(1) as f64;
        let nld = s.edit_distance as f64 / self.ls as f64;
        self.ber_sum += ber;
        self.ber_sq += ber * ber;
        self.nld_sq += nld * nld;
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.trials.max(1) as f64
    }

    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.total_bits.max(1) as f64
    }

    pub fn nld(&self) -> f64 {
        self.edit_distance as f64 / (self.trials.max(1) as f64 * self.ls as f64)
    }

    pub fn mean_ops(&self) -> f64 {
        self.branch_ops as f64 / self.trials.max(1) as f64
    }

    /// Binomial standard deviation of the FER estimate.
    pub fn fer_sigma(&self) -> f64 {
        let p = self.fer();
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }

    fn mean_sigma(&self, mean: f64, sq: f64) -> f64 {
        let n = self.trials.max(1) as f64;
        if n < 2.0 {
            return 0.0;
        }
        ((sq / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt()
    }

    /// Standard error of the frame-averaged BER.
    pub fn ber_sigma(&self) -> f64 {
        let mean = self.ber_sum / self.trials.max(1) as f64;
        self.mean_sigma(mean, self.ber_sq)
    }

    pub fn nld_sigma(&self) -> f64 {
        self.mean_sigma(self.nld(), self.nld_sq)
    }
}

/// Scores of every configured decoder on frame `index`.
pub fn simulate_frame(
    entry: &CatalogEntry,
    decoder: &SoftDecoder,
    models: &[StateModel],
    num_symbols: usize,
    channel: &ChannelSpec,
    seed: u64,
    index: u64,
) -> Result<Vec<FrameScore>, HarnessError> {
    let mut rng = frame_rng(seed, index);
    let symbols = entry.source.sample(&mut rng, num_symbols);
    let bits = entry.code.encode(&symbols)?;
    let received = transmit(&bits, channel, &mut rng);
    models
        .iter()
        .map(|&model| {
            let cfg = TrellisConfig::new(model, num_symbols, bits.len())?;
            let r = decoder.decode(&cfg, &received, channel)?;
            Ok(FrameScore {
                frame_error: r.symbols != symbols,
                bit_errors: hamming(&bits, &r.path_bits) as u64,
                num_bits: bits.len() as u64,
                edit_distance: levenshtein(&symbols, &r.symbols) as u64,
                branch_ops: r.branch_ops,
                infeasible: !r.feasible,
            })
        })
        .collect()
}

fn workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

/// Monte-Carlo FER/BER/NLD for every (Eb/N0, T) pair of `config`. Each frame
/// is decoded by all configured models on the same received samples, so
/// cells at the same Eb/N0 are paired. The result depends only on `config`,
/// not on the number of worker threads.
pub fn run_fer_sweep(catalog: &Catalog, config: &ExperimentConfig) -> Result<Vec<CellStats>, HarnessError> {
    config.validate()?;
    let entry = catalog.get(&config.code_id)?;
    let decoder = SoftDecoder::new(&entry.code, &entry.source)?;
    let mut cells = Vec::new();
    for (ei, &ebn0) in config.ebn0_db.iter().enumerate() {
        let channel = ChannelSpec::awgn(ebn0)?;
        // Distinct frame streams per Eb/N0 point.
        let seed = config.master_seed.wrapping_add((ei as u64) << 40);
        let n = config.trials;
        let w = workers().min(n as usize).max(1) as u64;
        let chunk = n.div_ceil(w);
        let per_frame: Vec<Vec<FrameScore>> = thread::scope(|scope| {
            let handles: Vec<_> = (0..w)
                .map(|k| {
                    let (entry, decoder, channel) = (entry, &decoder, &channel);
                    scope.spawn(move || {
                        (k * chunk..((k + 1) * chunk).min(n))
                            .map(|i| {
                                simulate_frame(
                                    entry,
                                    decoder,
                                    &config.models,
                                    config.num_symbols,
                                    channel,
                                    seed,
                                    i,
                                )
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect::<Result<Vec<_>, _>>()
        })?
        .into_iter()
        .flatten()
        .collect();
        let mut stats: Vec<CellStats> = config
            .models
            .iter()
            .map(|&m| CellStats::new(ebn0, m, config.num_symbols))
            .collect();
        for frame in &per_frame {
            for (s, score) in stats.iter_mut().zip(frame) {
                s.add(score);
            }
        }
        cells.extend(stats);
    }
    Ok(cells)
}

const FER_COLUMNS: &[&str] = &[
    "code", "ls", "ebn0_db", "T", "trials", "fer", "fer_ci", "ber", "ber_ci", "nld", "nld_ci",
    "branch_ops_mean", "infeasible", "p_sync", "h_delta_s", "d_eta", "mepl", "vepl", "mdl",
    "excess_rate",
];

/// FER sweep plus the analytic columns of the code at each Eb/N0.
pub fn fer_report(catalog: &Catalog, config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let cells = run_fer_sweep(catalog, config)?;
    let entry = catalog.get(&config.code_id)?;
    let mut report = Report::new("fer-sweep", FER_COLUMNS);
    report.note(BER_DEFINITION);
    report.note("NLD = Levenshtein distance between emitted and decoded symbols / L(S)");
    report.note(format!("confidence half-widths at z = {CI_Z}"));
    report.note(format!("master_seed = {}", config.master_seed));
    for cell in &cells {
        let channel = ChannelSpec::awgn(cell.ebn0_db)?;
        let c = criteria(&entry.code, &entry.source, config.num_symbols, &channel, config.eta)?;
        report.push(vec![
            entry.id.clone().into(),
            config.num_symbols.into(),
            cell.ebn0_db.into(),
            cell.model.to_string().into(),
            cell.trials.into(),
            cell.fer().into(),
            (CI_Z * cell.fer_sigma()).into(),
            cell.ber().into(),
            (CI_Z * cell.ber_sigma()).into(),
            cell.nld().into(),
            (CI_Z * cell.nld_sigma()).into(),
            cell.mean_ops().into(),
            cell.infeasible.into(),
            c.analysis.p_sync.into(),
            c.analysis.h_delta_s.into(),
            c.analysis.d_eta.into(),
            c.mepl.into(),
            c.vepl.into(),
            c.mdl.into(),
            c.excess_rate.into(),
        ]);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyCurve {
    /// `(T, H(ΔS mod T))` for `T = 1..=t_max`.
    pub points: Vec<(u32, f64)>,
    /// The limit `H(ΔS)`.
    pub h_delta_s: f64,
}

impl EntropyCurve {
    pub fn to_report(&self, code_id: &str, ls: usize, ebn0_db: f64) -> Report {
        let mut r = Report::new("entropy-curve", &["code", "ls", "ebn0_db", "T", "h_mod_t", "h_delta_s"]);
        r.note("the last row (T empty) is the limit H(delta_s)");
        for &(t, h) in &self.points {
            r.push(vec![
                code_id.into(),
                ls.into(),
                ebn0_db.into(),
                t.into(),
                h.into(),
                self.h_delta_s.into(),
            ]);
        }
        r.push(vec![
            code_id.into(),
            ls.into(),
            ebn0_db.into(),
            Cell::Empty,
            self.h_delta_s.into(),
            self.h_delta_s.into(),
        ]);
        r
    }
}

/// `H(ΔS mod T)` for `T = 1..=t_max`.
pub fn run_entropy_convergence(
    catalog: &Catalog,
    code_id: &str,
    num_symbols: usize,
    ebn0_db: f64,
    t_max: u32,
    eta: f64,
) -> Result<EntropyCurve, HarnessError> {
    let entry = catalog.get(code_id)?;
    let channel = ChannelSpec::awgn(ebn0_db)?;
    let a = criteria(&entry.code, &entry.source, num_symbols, &channel, eta)?.analysis;
    let points = (1..=t_max.max(1))
        .map(|t| (t, constraint_entropy_mod(&a.delta_s, t)))
        .collect();
    Ok(EntropyCurve {
        points,
        h_delta_s: a.h_delta_s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostPoint {
    pub ebn0_db: f64,
    pub model: CostModel,
}

impl CostPoint {
    /// Measured `D_mtd / D_bal`.
    pub fn ratio(&self) -> f64 {
        self.model.d_mtd / self.model.d_bal
    }

    /// Measured `D_T3 / D_bal`.
    pub fn direct_ratio(&self) -> f64 {
        self.model.d_direct / self.model.d_bal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostCurve {
    pub t1: u32,
    pub t2: u32,
    pub points: Vec<CostPoint>,
    /// Eb/N0 where the measured `D_mtd / D_bal` crosses `T3`.
    pub crossing: Option<f64>,
    /// Crossings of `rho ± CI` with `rho_star`, bracketing the break-even
    /// point under the cost model.
    pub crossing_interval: (Option<f64>, Option<f64>),
}

impl CostCurve {
    pub fn t3(&self) -> u32 {
        self.t1 * self.t2
    }

    pub fn to_report(&self, code_id: &str, ls: usize) -> Report {
        let mut r = Report::new(
            "cost-curve",
            &[
                "code", "ls", "T1", "T2", "T3", "ebn0_db", "trials", "rho", "rho_ci", "rho_star",
                "d_bal", "d_mtd", "ratio", "projected_ratio", "direct_ratio",
            ],
        );
        let fmt = |x: Option<f64>| x.map_or("none".to_string(), sig6);
        r.note(format!("crossing ebn0_db where ratio = T3: {}", fmt(self.crossing)));
        r.note(format!(
            "break-even interval from rho CI: [{}, {}]",
            fmt(self.crossing_interval.0),
            fmt(self.crossing_interval.1)
        ));
        for p in &self.points {
            let m = &p.model;
            r.push(vec![
                code_id.into(),
                ls.into(),
                self.t1.into(),
                self.t2.into(),
                self.t3().into(),
                p.ebn0_db.into(),
                m.rho.trials.into(),
                m.rho.value().into(),
                m.rho.half_width(CI_Z).into(),
                m.rho_star.into(),
                m.d_bal.into(),
                m.d_mtd.into(),
                p.ratio().into(),
                (m.projected_d_mtd(self.t1, self.t2) / m.d_bal).into(),
                p.direct_ratio().into(),
            ]);
        }
        r
    }
}

/// First `x` where the piecewise-linear `(x, y)` series crosses `level`.
pub fn crossing_point(series: &[(f64, f64)], level: f64) -> Option<f64> {
    series.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let (a, b) = (y0 - level, y1 - level);
        if a == 0.0 {
            Some(x0)
        } else if a * b < 0.0 || b == 0.0 {
            Some(x0 + (x1 - x0) * a / (a - b))
        } else {
            None
        }
    })
}

/// Measured cost of combined decoding versus Eb/N0.
#[allow(clippy::too_many_arguments)]
pub fn run_cost_comparison(
    catalog: &Catalog,
    code_id: &str,
    num_symbols: usize,
    t1: u32,
    t2: u32,
    ebn0_db: &[f64],
    trials: u64,
    seed: u64,
) -> Result<CostCurve, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Config("trials must be >= 1".into()));
    }
    let entry = catalog.get(code_id)?;
    let cfg = CombinedConfig::new(t1, t2)?;
    let points = ebn0_db
        .iter()
        .enumerate()
        .map(|(i, &db)| {
            let channel = ChannelSpec::awgn(db)?;
            let seed = seed.wrapping_add((i as u64) << 40);
            let model = rho_estimate(&entry.code, &entry.source, &cfg, &channel, num_symbols, trials, seed)?;
            Ok(CostPoint { ebn0_db: db, model })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let t3 = f64::from(cfg.t3());
    let ratio: Vec<(f64, f64)> = points.iter().map(|p| (p.ebn0_db, p.ratio())).collect();
    let rho_star = crate::combined::rho_star(t1, t2);
    let band = |sign: f64| {
        let s: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.ebn0_db, p.model.rho.value() + sign * p.model.rho.half_width(CI_Z)))
            .collect();
        crossing_point(&s, rho_star)
    };
    Ok(CostCurve {
        t1,
        t2,
        crossing: crossing_point(&ratio, t3),
        crossing_interval: (band(-1.0), band(1.0)),
        points,
    })
}

/// ΔS of the unconstrained hard-decision parse: symbols completed while
/// parsing `bits` minus `num_symbols`. A trailing partial codeword does not
/// count.
pub fn hard_delta_s(tree: &CodeTree, bits: &[u8], num_symbols: usize) -> Result<i64, CodeError> {
    let (count, _) = tree.count_from(ROOT, bits)?;
    Ok(count as i64 - num_symbols as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 1;
        c.eta = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_sweep_is_error_free() {
        let cat = Catalog::builtin();
        let cfg = ExperimentConfig {
            code_id: "C7".into(),
            num_symbols: 30,
            ebn0_db: vec![f64::INFINITY],
            models: vec![StateModel::Aggregated(1), StateModel::Aggregated(4), StateModel::BitSymbol],
            trials: 40,
            ..Default::default()
        };
        for cell in run_fer_sweep(&cat, &cfg).unwrap() {
            assert_eq!((cell.fer(), cell.ber(), cell.nld()), (0.0, 0.0, 0.0));
            assert_eq!(cell.trials, 40);
        }
    }

    #[test]
    fn crossing_interpolates() {
        let s = [(1.0, 3.0), (2.0, 1.0), (3.0, 0.0)];
        assert_eq!(crossing_point(&s, 2.0), Some(1.5));
        assert_eq!(crossing_point(&s, 5.0), None);
    }

    #[test]
    fn criteria_table_row() {
        let cat = Catalog::builtin();
        let r = run_criteria_table(&cat, &["C5".into()], 100, 6.0, 1e-6).unwrap();
        assert_eq!(r.float(0, "d_eta"), Some(3.0));
        assert!((r.float(0, "p_sync").unwrap() - 0.9187).abs() < 1e-3);
        assert!((r.float(0, "mepl").unwrap() / 1.71023 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hard_parse_offset() {
        let cat = Catalog::builtin();
        let e = cat.get("C5").unwrap();
        let tree = CodeTree::build(&e.code).unwrap();
        let bits = e.code.encode(&[0, 3, 1]).unwrap();
        assert_eq!(hard_delta_s(&tree, &bits, 3).unwrap(), 0);
        assert_eq!(hard_delta_s(&tree, &bits[..bits.len() - 1], 3).unwrap(), -1);
    }
}
