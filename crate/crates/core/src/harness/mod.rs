//! Parameter sweeps, scaling fits and the correlation/fidelity comparison
//! behind the `decouple` command-line driver.

mod report;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    autocorrelations, matrix_power, propagator_infidelity, unitary_power, Boundary, Correlations, CouplingGraph,
    DisorderRealization, Operator, SpinBasis,
};
use crate::sequence::{parse_sequence_file, sequence_library, CycleCompiler, ImperfectionSet, PulseSequence};

pub use report::{
    fidelity_vs_cavg_report, fit_power_law, scaling_fit, spearman, CorrelationReport, CorrelationRow, ScalingFit,
};

pub const SWEEP_VERSION: u32 = 1;

/// Default evaluation time, in units of `τ`.
pub const DEFAULT_TOTAL_TAU: usize = 72;
pub const DEFAULT_COUPLING: f64 = 32.7e3;
pub const DEFAULT_TAU: f64 = 10e-6;
pub const DEFAULT_SPINS: usize = 8;

/// A library name, or else a path to a sequence file.
pub fn load_sequence(name_or_path: &str) -> Result<PulseSequence> {
    match sequence_library(name_or_path) {
        Err(Error::UnknownSequence(_)) if Path::new(name_or_path).is_file() => {
            parse_sequence_file(&fs::read_to_string(name_or_path)?)
        }
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Pulse interval (s).
    Tau,
    /// Frequency offset `Δ` (rad/s).
    Offset,
    /// Fractional rotation error `ε`.
    AngleError,
    /// Pulse width `t_w` (s).
    PulseWidth,
    /// Disorder width `W` (rad/s), averaged over `realizations`.
    #[serde(rename = "disorder_W")]
    DisorderW,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Tau => "tau",
            SweepAxis::Offset => "offset",
            SweepAxis::AngleError => "angle_error",
            SweepAxis::PulseWidth => "pulse_width",
            SweepAxis::DisorderW => "disorder_W",
        }
    }
}

fn default_spins() -> usize {
    DEFAULT_SPINS
}
fn default_boundary() -> Boundary {
    Boundary::Periodic
}
fn default_coupling() -> f64 {
    DEFAULT_COUPLING
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_total() -> usize {
    DEFAULT_TOTAL_TAU
}
fn default_realizations() -> usize {
    20
}

/// Sweep description (JSON document, see `docs/formats.md`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub version: u32,
    /// Library name or sequence file path.
    pub sequence: String,
    pub axis: SweepAxis,
    /// Strictly increasing values of the swept parameter.
    pub grid: Vec<f64>,
    /// Imperfections held fixed; the swept one is overwritten per point.
    #[serde(default)]
    pub fixed: ImperfectionSet,
    #[serde(default = "default_spins")]
    pub n_spins: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    /// Pulse interval for every axis but `tau`.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Correlation time in units of `τ`.
    #[serde(default = "default_total")]
    pub total_tau: usize,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(sequence: impl Into<String>, axis: SweepAxis, grid: Vec<f64>) -> Self {
        Self {
            version: SWEEP_VERSION,
            sequence: sequence.into(),
            axis,
            grid,
            fixed: ImperfectionSet::ideal(),
            n_spins: DEFAULT_SPINS,
            boundary: Boundary::Periodic,
            coupling: DEFAULT_COUPLING,
            tau: DEFAULT_TAU,
            total_tau: DEFAULT_TOTAL_TAU,
            realizations: default_realizations(),
            seed: 0,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != SWEEP_VERSION {
            return bad(format!("unsupported sweep version {}", self.version));
        }
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("grid must be finite and strictly increasing".into());
        }
        match self.axis {
            SweepAxis::Tau if self.grid[0] <= self.fixed.pulse_width => {
                return bad("tau grid must exceed the pulse width".into())
            }
            SweepAxis::PulseWidth if self.grid[0] < 0.0 || *self.grid.last().unwrap() >= self.tau => {
                return bad("pulse width grid must lie in [0, tau)".into())
            }
            SweepAxis::DisorderW if self.grid[0] < 0.0 => return bad("disorder widths must be >= 0".into()),
            SweepAxis::DisorderW if self.realizations == 0 => {
                return bad("disorder sweeps need at least one realization".into())
            }
            _ => {}
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() || !self.coupling.is_finite() {
            return bad("tau must be positive and coupling finite".into());
        }
        if self.total_tau == 0 {
            return bad("total_tau must be positive".into());
        }
        Ok(())
    }
}

/// Cycle counts at which correlations are taken for a length-`m` sequence
/// and a total time of `total` slots: `[total/m]` when `m` divides `total`,
/// otherwise the two neighbouring counts, whose results are averaged.
pub fn evaluation_cycles(m: usize, total: usize) -> Result<Vec<u64>> {
    if m == 0 || total < m {
        return Err(Error::InvalidArgument(format!("total time {total}τ is shorter than one {m}-slot cycle")));
    }
    let n = (total / m) as u64;
    Ok(if total % m == 0 { vec![n] } else { vec![n, n + 1] })
}

/// `(a + b)/2`, the rule used for 48-slot sequences at 72τ.
pub fn average_at_72tau(c48: f64, c96: f64) -> f64 {
    0.5 * (c48 + c96)
}

/// Correlations after `total` slots under the Floquet Hamiltonian of an
/// `m`-slot cycle, i.e. of `U^{total/m}` for non-integer powers.
pub fn exact_correlations(u_cycle: &Operator, m: usize, total: usize, basis: &SpinBasis) -> Result<Correlations> {
    let evolved = unitary_power(u_cycle, total as f64 / m as f64)?;
    autocorrelations(&evolved, basis)
}

/// One sequence under one condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEval {
    /// `1 − F` of the effective single-interval propagator.
    pub infidelity: f64,
    pub correlations: Correlations,
    pub c_avg: f64,
}

pub fn evaluate_sequence(
    seq: &PulseSequence,
    basis: &SpinBasis,
    graph: &CouplingGraph,
    imp: &ImperfectionSet,
    total_tau: usize,
) -> Result<PointEval> {
    let cycles = evaluation_cycles(seq.len(), total_tau)?;
    let u = CycleCompiler::new(basis, graph, imp, seq.tau())?.compile(seq.actions());
    let infidelity = propagator_infidelity(&u, seq.len(), &Operator::identity(basis.dim()))?;
    let mut sum = Correlations { xx: 0.0, yy: 0.0, zz: 0.0 };
    let mut c_avg = 0.0;
    for &n in &cycles {
        let c = autocorrelations(&matrix_power(&u, n), basis)?;
        sum.xx += c.xx;
        sum.yy += c.yy;
        sum.zz += c.zz;
        c_avg += c.average();
    }
    let k = cycles.len() as f64;
    let correlations = Correlations { xx: sum.xx / k, yy: sum.yy / k, zz: sum.zz / k };
    if !infidelity.is_finite() || !c_avg.is_finite() {
        return Err(Error::Numerical(format!("non-finite result for '{}'", seq.tokens())));
    }
    Ok(PointEval { infidelity, correlations, c_avg: c_avg / k })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub infidelity: f64,
    /// Present for ensemble axes only.
    pub infidelity_std: Option<f64>,
    pub c_xx: f64,
    pub c_yy: f64,
    pub c_zz: f64,
    pub c_avg: f64,
    pub c_avg_std: Option<f64>,
    pub realizations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub version: u32,
    pub sequence: String,
    pub axis: SweepAxis,
    pub n_spins: usize,
    pub boundary: Boundary,
    pub coupling: f64,
    pub tau: f64,
    pub total_tau: usize,
    pub points: Vec<SweepPoint>,
}

/// Seed of disorder realization `r`; shared by every grid point.
pub fn realization_seed(seed: u64, r: usize) -> u64 {
    let mut z = seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let seq = load_sequence(&spec.sequence)?;
    let name = seq.name().unwrap_or(&spec.sequence).to_string();
    let basis = SpinBasis::new(spec.n_spins, spec.boundary)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, spec.coupling);
    let points = spec
        .grid
        .par_iter()
        .map(|&value| {
            let mut imp = spec.fixed.clone();
            let mut tau = spec.tau;
            match spec.axis {
                SweepAxis::Tau => tau = value,
                SweepAxis::Offset => imp.offset = value,
                SweepAxis::AngleError => imp.angle_error = value,
                SweepAxis::PulseWidth => imp.pulse_width = value,
                SweepAxis::DisorderW => {}
            }
            let seq = seq.clone().with_tau(tau)?;
            if spec.axis != SweepAxis::DisorderW {
                let e = evaluate_sequence(&seq, &basis, &graph, &imp, spec.total_tau)?;
                return Ok(SweepPoint {
                    value,
                    infidelity: e.infidelity,
                    infidelity_std: None,
                    c_xx: e.correlations.xx,
                    c_yy: e.correlations.yy,
                    c_zz: e.correlations.zz,
                    c_avg: e.c_avg,
                    c_avg_std: None,
                    realizations: 1,
                });
            }
            let evals = (0..spec.realizations)
                .into_par_iter()
                .map(|r| {
                    let d = DisorderRealization::sample(spec.n_spins, value, realization_seed(spec.seed, r))?;
                    evaluate_sequence(&seq, &basis, &graph, &imp.clone().with_disorder(d), spec.total_tau)
                })
                .collect::<Result<Vec<_>>>()?;
            let pick = |f: fn(&PointEval) -> f64| evals.iter().map(f).collect::<Vec<_>>();
            let (infidelity, inf_std) = mean_std(&pick(|e| e.infidelity));
            let (c_avg, c_std) = mean_std(&pick(|e| e.c_avg));
            Ok(SweepPoint {
                value,
                infidelity,
                infidelity_std: Some(inf_std),
                c_xx: mean_std(&pick(|e| e.correlations.xx)).0,
                c_yy: mean_std(&pick(|e| e.correlations.yy)).0,
                c_zz: mean_std(&pick(|e| e.correlations.zz)).0,
                c_avg,
                c_avg_std: Some(c_std),
                realizations: spec.realizations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        version: SWEEP_VERSION,
        sequence: name,
        axis: spec.axis,
        n_spins: spec.n_spins,
        boundary: spec.boundary,
        coupling: spec.coupling,
        tau: spec.tau,
        total_tau: spec.total_tau,
        points,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    sequence: &'a str,
    axis: &'static str,
    value: f64,
    infidelity: f64,
    infidelity_std: Option<f64>,
    c_xx: f64,
    c_yy: f64,
    c_zz: f64,
    c_avg: f64,
    c_avg_std: Option<f64>,
    realizations: usize,
}

pub const SWEEP_CSV_HEADER: &str =
    "sequence,axis,value,infidelity,infidelity_std,c_xx,c_yy,c_zz,c_avg,c_avg_std,realizations";

pub fn sweep_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &result.points {
        w.serialize(CsvRow {
            sequence: &result.sequence,
            axis: result.axis.name(),
            value: p.value,
            infidelity: p.infidelity,
            infidelity_std: p.infidelity_std,
            c_xx: p.c_xx,
            c_yy: p.c_yy,
            c_zz: p.c_zz,
            c_avg: p.c_avg,
            c_avg_std: p.c_avg_std,
            realizations: p.realizations,
        })
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Writes JSON when the path ends in `.json`, CSV otherwise.
pub fn write_sweep(result: &SweepResult, path: &Path) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "json") {
        serde_json::to_string_pretty(result)?
    } else {
        sweep_csv(result)?
    };
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Axis;

    fn small(seq: &str, axis: SweepAxis, grid: Vec<f64>) -> SweepSpec {
        let mut s = SweepSpec::new(seq, axis, grid);
        s.n_spins = 4;
        s
    }

    #[test]
    fn cycle_counts_follow_the_72_tau_convention() {
        assert_eq!(evaluation_cycles(6, 72).unwrap(), vec![12]);
        assert_eq!(evaluation_cycles(12, 72).unwrap(), vec![6]);
        assert_eq!(evaluation_cycles(24, 72).unwrap(), vec![3]);
        assert_eq!(evaluation_cycles(48, 72).unwrap(), vec![1, 2]);
        assert_eq!(evaluation_cycles(72, 72).unwrap(), vec![1]);
        assert!(evaluation_cycles(96, 72).is_err());
        assert_eq!(average_at_72tau(1.0, 1.0), 1.0);
        assert!((average_at_72tau(0.9, 0.7) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(small("Ideal6", SweepAxis::Tau, vec![]).validate().is_err());
        assert!(small("Ideal6", SweepAxis::Tau, vec![2e-6, 1e-6]).validate().is_err());
        let mut d = small("yxx24", SweepAxis::DisorderW, vec![0.0, 1e4]);
        d.realizations = 0;
        assert!(d.validate().is_err());
        assert!(small("Ideal6", SweepAxis::PulseWidth, vec![0.0, 20e-6]).validate().is_err());
        let json = r#"{"version":1,"sequence":"Ideal6","axis":"disorder_W","grid":[1.0]}"#;
        let s: SweepSpec = serde_json::from_str(json).unwrap();
        assert_eq!((s.n_spins, s.boundary, s.coupling, s.tau, s.total_tau), (8, Boundary::Periodic, 32.7e3, 10e-6, 72));
        assert!(serde_json::from_str::<SweepSpec>(r#"{"version":1,"sequence":"x","axis":"tau","grid":[1],"typo":1}"#)
            .is_err());
    }

    #[test]
    fn identity_sequence_is_perfect_without_interactions() {
        let seq = PulseSequence::from_tokens("x -x", 5e-6).unwrap();
        let basis = SpinBasis::open(3).unwrap();
        let e = evaluate_sequence(&seq, &basis, &CouplingGraph::new(), &ImperfectionSet::ideal(), 72).unwrap();
        assert!(e.infidelity < 1e-14);
        assert!((e.c_avg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn averaging_rule_matches_explicit_powers() {
        let basis = SpinBasis::open(4).unwrap();
        let graph = CouplingGraph::nearest_neighbor(&basis, DEFAULT_COUPLING);
        let seq = sequence_library("yxx48").unwrap();
        let imp = ImperfectionSet::ideal().with_offset(2.0 * DEFAULT_COUPLING);
        let e = evaluate_sequence(&seq, &basis, &graph, &imp, 72).unwrap();
        let u = CycleCompiler::new(&basis, &graph, &imp, seq.tau()).unwrap().compile(seq.actions());
        let c1 = autocorrelations(&u, &basis).unwrap();
        let c2 = autocorrelations(&u.mul(&u), &basis).unwrap();
        assert!((e.c_avg - average_at_72tau(c1.average(), c2.average())).abs() < 1e-12);
        assert!((e.correlations.zz - 0.5 * (c1.zz + c2.zz)).abs() < 1e-12);
        let exact = exact_correlations(&u, 48, 72, &basis).unwrap();
        assert!(exact.zz <= 1.0 + 1e-12);
        let direct = crate::quantum::autocorrelation(&u, 1, Axis::Z, &basis).unwrap();
        assert!((direct - c1.zz).abs() < 1e-12);
    }

    #[test]
    fn sweeps_are_deterministic_and_report_std_only_for_disorder() {
        let mut d = small("yxx24", SweepAxis::DisorderW, vec![0.0, 2e4]);
        d.realizations = 3;
        d.seed = 9;
        let a = run_sweep(&d).unwrap();
        let b = run_sweep(&d).unwrap();
        assert_eq!(sweep_csv(&a).unwrap(), sweep_csv(&b).unwrap());
        assert_eq!(a.points[0].infidelity_std, Some(0.0));
        assert!(a.points[1].infidelity_std.unwrap() > 0.0);
        let csv = sweep_csv(&a).unwrap();
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);

        let t = run_sweep(&small("Ideal6", SweepAxis::Tau, vec![1e-6, 2e-6])).unwrap();
        assert!(t.points.iter().all(|p| p.infidelity_std.is_none() && p.realizations == 1));
        assert!(t.points[0].infidelity < t.points[1].infidelity);
        let line = sweep_csv(&t).unwrap().lines().nth(1).unwrap().to_string();
        assert!(line.starts_with("Ideal6,tau,"));
        assert!(line.contains(",,"));
    }

    #[test]
    fn uniform_disorder_equals_offset() {
        let basis = SpinBasis::open(4).unwrap();
        let graph = CouplingGraph::nearest_neighbor(&basis, DEFAULT_COUPLING);
        let seq = sequence_library("Angle12").unwrap();
        let a = evaluate_sequence(&seq, &basis, &graph, &ImperfectionSet::ideal().with_offset(3e4), 72).unwrap();
        let b = evaluate_sequence(
            &seq,
            &basis,
            &graph,
            &ImperfectionSet::ideal().with_disorder(DisorderRealization::uniform(4, 3e4)),
            72,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequences_load_by_name_or_path() {
        assert_eq!(load_sequence("WAHUHA").unwrap().len(), 6);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.seq");
        fs::write(&p, crate::sequence::emit_sequence_file(&sequence_library("SolidEcho").unwrap())).unwrap();
        assert_eq!(load_sequence(p.to_str().unwrap()).unwrap().len(), 2);
        assert!(matches!(load_sequence("NoSuch"), Err(Error::UnknownSequence(_))));
    }
}
