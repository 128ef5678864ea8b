//! The four subcommands. Grid points are evaluated in parallel and collected
//! in grid order, so the thread count never changes the output.

use bosonic_lab::bounds::{
    lemma1_rank_bound, simulation_rate, strong_converse_success_bound, tradeoff_point, weak_converse_rate_bound,
    CodeParams, ConverseSlack,
};
use bosonic_lab::channel::{
    delta3_upper, lemma2_output_shadow_bound, output_shadow_exact_with, ChannelParams, DiagonalInput, LossConvention,
};
use bosonic_lab::codebook::{
    audit_constraint_e1, codebook_rows, sample_codebook, sampled_cutoff_exceedances, GaussianEnsemble,
};
use bosonic_lab::concentration::{
    binomial_tail_below, chernoff_constant, geometric_sum_tail_at_least, hoeffding_lower_bound, hoeffding_threshold,
    monte_carlo_tail, BinomialTransmission, GeometricLaw, TailQuery,
};
use bosonic_lab::fock::PhotonDistribution;
use bosonic_lab::numerics::g_entropy;
use bosonic_lab::Error;
use rayon::prelude::*;

use crate::config::{Command, Convention, Delta1Spec, Delta3Spec, LemmaSelection, RateSpec, RunConfig};
use crate::table::{col, Cell, Column, Table};
use crate::CliError;

/// Slack for comparing an exact value against a bound in floating point.
const CHECK_TOL: f64 = 1e-12;

pub struct Outcome {
    pub tables: Vec<Table>,
    /// A proven inequality came out violated in some row.
    pub violation: bool,
    /// Extra files to write next to the main output: (path, contents).
    pub side_files: Vec<(std::path::PathBuf, String)>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Bounds => Ok(bounds(cfg)),
        Command::Lemmas => Ok(lemmas(cfg)),
        Command::Codebook => codebook(cfg),
        Command::Tails => Ok(tails(cfg)),
    }
}

pub fn schema(command: Command) -> Vec<(&'static str, &'static [Column])> {
    match command {
        Command::Bounds => vec![("bounds", BOUNDS_COLUMNS)],
        Command::Lemmas => vec![("lemmas", LEMMA_COLUMNS)],
        Command::Codebook => vec![("codebook", CODEBOOK_COLUMNS), ("summary", SUMMARY_COLUMNS)],
        Command::Tails => vec![("tails", TAIL_COLUMNS)],
    }
}

fn convention(cfg: &RunConfig) -> LossConvention {
    match cfg.convention {
        Convention::Transmitted => LossConvention::Transmitted,
        Convention::Swapped => LossConvention::IndexSwapped,
    }
}

fn status_of(err: &Error) -> &'static str {
    match err {
        Error::Precondition { .. } => "precondition",
        Error::TheoremViolation { .. } => "fail",
        _ => "error",
    }
}

fn resolve_delta1(spec: Delta1Spec, n: usize, cfg: &RunConfig) -> Result<f64, Error> {
    match spec {
        Delta1Spec::Value(v) => Ok(v),
        Delta1Spec::Preset => ConverseSlack::delta1_preset(n, cfg.preset_delta, cfg.preset_mean),
    }
}

fn resolve_delta3(spec: Delta3Spec, params: &ChannelParams, delta2: f64) -> Result<f64, Error> {
    match spec {
        Delta3Spec::Value(v) => Ok(v),
        Delta3Spec::Max => {
            let m = delta3_upper(params, delta2);
            if m.is_finite() {
                Ok(m)
            } else {
                Err(Error::Precondition {
                    what: "delta3 = max",
                    detail: format!("no finite largest value ({m})"),
                    admissible: "an explicit delta3".into(),
                })
            }
        }
    }
}

const BOUNDS_COLUMNS: &[Column] = &[
    col("eta", "transmissivity"),
    col("ns", "photon budget N_S per mode"),
    col("n", "number of modes"),
    col("rate", "rate R in bits per mode"),
    col("epsilon", "target error for the weak converse"),
    col("p", "vacuum mixture weight for the trade-off point"),
    col("delta1", "input shadow deficit"),
    col("delta2", "output cutoff slack"),
    col("delta3", "Hoeffding slack"),
    col("delta", "dimension slack used in the strong converse (derived at ηN_S + δ₂ unless given)"),
    col("capacity", "g(ηN_S)"),
    col("weak_rate_cap", "[g(ηN_S) + h₂(ε)] / (1 - ε); inf at ε = 1"),
    col("tradeoff_rate", "g(ηN_S / (1 - p)), the rate reached with error about p"),
    col("simulation_rate", "qubits per mode to simulate the channel on budget-respecting inputs"),
    col("dimension_term", "2^(-n(R - g(ηN_S) - δ₂ - δ))"),
    col("gentle_term", "2√(δ₁ + exp(-2δ₃²ηN_S n) + 2√δ₁)"),
    col("hoeffding_exp", "exp(-2δ₃²ηN_S n)"),
    col("exact_rank_term", "rank Π at the output cutoff divided by 2^(nR)"),
    col("raw_sum", "dimension_term + gentle_term, unclamped"),
    col("success_upper", "raw_sum clamped to [0, 1]"),
    col("exponential_regime", "R > g(ηN_S) + δ₂ + δ"),
    col("status", "ok, precondition (inadmissible slack) or error"),
    col("detail", "reason for a non-ok status"),
];

struct BoundsPoint {
    eta: f64,
    ns: f64,
    n: usize,
    rate: RateSpec,
    epsilon: f64,
    p: f64,
    delta1: Delta1Spec,
    delta2: f64,
    delta3: Delta3Spec,
    delta: Option<f64>,
}

fn bounds(cfg: &RunConfig) -> Outcome {
    let deltas: Vec<Option<f64>> = if cfg.delta.is_empty() {
        vec![None]
    } else {
        cfg.delta.iter().copied().map(Some).collect()
    };
    let mut grid = Vec::new();
    for &eta in &cfg.eta {
        for &ns in &cfg.ns {
            for &n in &cfg.n {
                for &rate in &cfg.rate {
                    for &epsilon in &cfg.epsilon {
                        for &p in &cfg.p {
                            for &delta1 in &cfg.delta1 {
                                for &delta2 in &cfg.delta2 {
                                    for &delta3 in &cfg.delta3 {
                                        for &delta in &deltas {
                                            grid.push(BoundsPoint {
                                                eta,
                                                ns,
                                                n,
                                                rate,
                                                epsilon,
                                                p,
                                                delta1,
                                                delta2,
                                                delta3,
                                                delta,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let rows: Vec<Vec<Cell>> = grid.par_iter().map(|pt| bounds_row(pt, cfg)).collect();
    let mut table = Table::new("bounds", BOUNDS_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Outcome {
        tables: vec![table],
        violation: false,
        side_files: Vec::new(),
    }
}

fn diverging(r: Result<f64, Error>) -> Cell {
    match r {
        Ok(v) => Cell::Real(v),
        Err(Error::Divergence { .. }) => Cell::Real(f64::INFINITY),
        Err(_) => Cell::Empty,
    }
}

fn bounds_row(pt: &BoundsPoint, cfg: &RunConfig) -> Vec<Cell> {
    let mut row = vec![
        Cell::Real(pt.eta),
        Cell::Real(pt.ns),
        Cell::Int(pt.n as u64),
        Cell::Empty,
        Cell::Real(pt.epsilon),
        Cell::Real(pt.p),
        Cell::Empty,
        Cell::Real(pt.delta2),
        Cell::Empty,
        Cell::opt(pt.delta),
    ];
    let fail = |mut row: Vec<Cell>, err: Error| {
        row.resize(BOUNDS_COLUMNS.len() - 2, Cell::Empty);
        row.push(Cell::text(status_of(&err)));
        row.push(Cell::text(err.to_string()));
        row
    };
    let params = match ChannelParams::new(pt.eta, pt.n, pt.ns) {
        Ok(p) => p,
        Err(e) => return fail(row, e),
    };
    let capacity = match g_entropy(params.output_budget()) {
        Ok(c) => c,
        Err(e) => return fail(row, e),
    };
    let rate = match pt.rate {
        RateSpec::Value(v) => v,
        RateSpec::AboveCapacity(x) => capacity + x,
    };
    row[3] = Cell::Real(rate);
    let delta1 = match resolve_delta1(pt.delta1, pt.n, cfg) {
        Ok(v) => v,
        Err(e) => return fail(row, e),
    };
    row[6] = Cell::Real(delta1);
    let delta3 = match resolve_delta3(pt.delta3, &params, pt.delta2) {
        Ok(v) => v,
        Err(e) => return fail(row, e),
    };
    row[8] = Cell::Real(delta3);
    let slack = ConverseSlack {
        delta: pt.delta,
        delta1,
        delta2: pt.delta2,
        delta3,
    };
    let code = CodeParams {
        epsilon: pt.epsilon,
        ..CodeParams::with_rate(rate)
    };
    let weak = diverging(weak_converse_rate_bound(pt.epsilon, &params));
    let trade = diverging(tradeoff_point(pt.p, &params).map(|(r, _)| r));
    let sim = Cell::opt(simulation_rate(&params).ok());
    let report = match strong_converse_success_bound(&code, &params, &slack) {
        Ok(r) => r,
        Err(e) => {
            let mut row = row;
            row.push(Cell::Real(capacity));
            row.push(weak);
            row.push(trade);
            row.push(sim);
            return fail(row, e);
        }
    };
    let term = |k: &str| Cell::opt(report.bound_terms.get(k).copied());
    row[9] = term("delta");
    row.extend([
        Cell::Real(capacity),
        weak,
        trade,
        sim,
        term("dimension_term"),
        term("gentle_term"),
        term("hoeffding_exp"),
        term("exact_rank_term"),
        term("raw_sum"),
        Cell::Real(report.success_upper),
        Cell::Bool(report.exponential_regime),
        Cell::text("ok"),
        Cell::text(""),
    ]);
    row
}

const LEMMA_COLUMNS: &[Column] = &[
    col("lemma", "1: rank of the cutoff projector; 2: output shadow after loss"),
    col("n", "number of modes"),
    col("ns", "photon budget N_S per mode"),
    col("eta", "transmissivity (lemma 2)"),
    col("delta1", "input shadow deficit (lemma 2)"),
    col("delta2", "output cutoff slack (lemma 2)"),
    col("delta3", "Hoeffding slack (lemma 2)"),
    col("input_cutoff", "⌈nN_S⌉"),
    col("output_cutoff", "⌈n(ηN_S + δ₂)⌉ (lemma 2)"),
    col("exact", "lemma 1: log₂ of the exact rank; lemma 2: smallest exact output shadow over admissible inputs"),
    col("bound", "lemma 1: n(g(N_S) + δ_min); lemma 2: 1 - 2√δ₁ - δ₁ - exp(-2δ₃²ηN_S n)"),
    col("margin", "lemma 1: bound - exact; lemma 2: exact - bound; nonnegative when the lemma holds"),
    col("exact_rank", "lemma 1: the exact rank C(⌈nN_S⌉ + n, n) in decimal"),
    col("status", "pass, fail (bound violated), precondition (inadmissible slack) or error"),
    col("detail", "reason for a non-pass status"),
];

enum LemmaPoint {
    One { n: usize, ns: f64 },
    Two { n: usize, ns: f64, eta: f64, delta1: Delta1Spec, delta2: f64, delta3: Delta3Spec },
}

fn lemmas(cfg: &RunConfig) -> Outcome {
    let mut grid = Vec::new();
    if matches!(cfg.lemma, LemmaSelection::One | LemmaSelection::Both) {
        for &n in &cfg.n {
            for &ns in &cfg.ns {
                grid.push(LemmaPoint::One { n, ns });
            }
        }
    }
    if matches!(cfg.lemma, LemmaSelection::Two | LemmaSelection::Both) {
        for &n in &cfg.n {
            for &ns in &cfg.ns {
                for &eta in &cfg.eta {
                    for &delta1 in &cfg.delta1 {
                        for &delta2 in &cfg.delta2 {
                            for &delta3 in &cfg.delta3 {
                                grid.push(LemmaPoint::Two { n, ns, eta, delta1, delta2, delta3 });
                            }
                        }
                    }
                }
            }
        }
    }
    let rows: Vec<Vec<Cell>> = grid.par_iter().map(|pt| lemma_row(pt, cfg)).collect();
    let status = LEMMA_COLUMNS.len() - 2;
    let violation = rows.iter().any(|r| r[status] == Cell::text("fail"));
    let mut table = Table::new("lemmas", LEMMA_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Outcome {
        tables: vec![table],
        violation,
        side_files: Vec::new(),
    }
}

fn lemma_row(pt: &LemmaPoint, cfg: &RunConfig) -> Vec<Cell> {
    let finish = |mut row: Vec<Cell>, status: &str, detail: String| {
        row.resize(LEMMA_COLUMNS.len() - 2, Cell::Empty);
        row.push(Cell::text(status));
        row.push(Cell::text(detail));
        row
    };
    match *pt {
        LemmaPoint::One { n, ns } => {
            let row = vec![
                Cell::Int(1),
                Cell::Int(n as u64),
                Cell::Real(ns),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Int((n as f64 * ns).ceil().max(0.0) as u64),
                Cell::Empty,
            ];
            match lemma1_rank_bound(n, ns) {
                Ok(r) => {
                    let margin = r.margin_bits();
                    let status = if margin >= -CHECK_TOL { "pass" } else { "fail" };
                    let mut row = row;
                    row.extend([
                        Cell::Real(r.log2_rank),
                        Cell::Real(r.bound.log2()),
                        Cell::Real(margin),
                        Cell::text(r.exact_rank.to_string()),
                    ]);
                    finish(row, status, String::new())
                }
                Err(e) => finish(row, status_of(&e), e.to_string()),
            }
        }
        LemmaPoint::Two { n, ns, eta, delta1, delta2, delta3 } => {
            let mut row = vec![
                Cell::Int(2),
                Cell::Int(n as u64),
                Cell::Real(ns),
                Cell::Real(eta),
                Cell::Empty,
                Cell::Real(delta2),
                Cell::Empty,
            ];
            let params = match ChannelParams::new(eta, n, ns) {
                Ok(p) => p,
                Err(e) => return finish(row, status_of(&e), e.to_string()),
            };
            row.push(Cell::Int(params.input_cutoff()));
            row.push(Cell::Int(params.output_cutoff(delta2)));
            let d1 = match resolve_delta1(delta1, n, cfg) {
                Ok(v) => v,
                Err(e) => return finish(row, status_of(&e), e.to_string()),
            };
            row[4] = Cell::Real(d1);
            let d3 = match resolve_delta3(delta3, &params, delta2) {
                Ok(v) => v,
                Err(e) => return finish(row, status_of(&e), e.to_string()),
            };
            row[6] = Cell::Real(d3);
            let bound = match lemma2_output_shadow_bound(d1, delta2, d3, &params) {
                Ok(b) => b,
                Err(e) => return finish(row, status_of(&e), e.to_string()),
            };
            // The infimum over inputs with shadow ≥ 1 - δ₁: mass 1 - δ₁ at the
            // input cutoff, the rest beyond every output cutoff.
            let mut pmf = vec![0.0; params.input_cutoff() as usize + 1];
            pmf[params.input_cutoff() as usize] = 1.0;
            let at_cutoff = PhotonDistribution::from_linear_pmf(&pmf).expect("point mass");
            let exact = match output_shadow_exact_with(
                &DiagonalInput::Total(&at_cutoff),
                eta,
                bound.output_cutoff,
                convention(cfg),
            ) {
                Ok(s) => (1.0 - d1) * s,
                Err(e) => return finish(row, status_of(&e), e.to_string()),
            };
            let margin = exact - bound.raw;
            let status = if margin >= -CHECK_TOL { "pass" } else { "fail" };
            row.extend([Cell::Real(exact), Cell::Real(bound.raw), Cell::Real(margin), Cell::Empty]);
            finish(row, status, String::new())
        }
    }
}

const CODEBOOK_COLUMNS: &[Column] = &[
    col("n", "number of modes"),
    col("ns", "photon budget N_S per mode"),
    col("delta", "ensemble offset; amplitudes have variance N_S - δ"),
    col("variance", "N' = N_S - δ"),
    col("seed", "codebook seed"),
    col("messages", "codewords M"),
    col("cutoff", "⌈nN_S⌉"),
    col("delta1", "C(δ, N')^(n/2), the deficit allowed by the constraint"),
    col("average_shadow", "(1/M) Σ Tr{Π ρ_m}, exact"),
    col("deficit", "1 - average_shadow"),
    col("e1_holds", "average_shadow ≥ 1 - δ₁"),
    col("worst_shadow", "smallest single-codeword shadow"),
    col("budget_violations", "codewords whose mean photon number per mode exceeds N_S"),
    col("sampled_exceedances", "codewords whose one sampled photon count exceeds the cutoff"),
];

const SUMMARY_COLUMNS: &[Column] = &[
    col("n", "number of modes"),
    col("ns", "photon budget N_S per mode"),
    col("delta", "ensemble offset"),
    col("variance", "N' = N_S - δ"),
    col("seeds", "codebooks sampled"),
    col("messages", "codewords per codebook"),
    col("cutoff", "⌈nN_S⌉"),
    col("chernoff_constant", "C(δ, N'/(N'+1))"),
    col("thermal_tail", "1 - Tr{Π θ(N')^⊗n}, exact"),
    col("chernoff_bound", "C^n"),
    col("thermal_bound_holds", "thermal_tail ≤ C^n"),
    col("delta1", "C^(n/2)"),
    col("e1_failures", "codebooks with average_shadow < 1 - δ₁"),
    col("e1_failure_frequency", "e1_failures / seeds"),
    col("e1_markov_bound", "min(1, thermal_tail / δ₁), the bound on the E₁ failure probability"),
    col("mean_deficit", "average of deficit over seeds; its expectation is thermal_tail"),
    col("deficit_stderr", "standard error of mean_deficit across seeds"),
    col("deficit_z", "(mean_deficit - thermal_tail) / deficit_stderr"),
    col("sampled_frequency", "sampled exceedances over seeds × messages"),
    col("sampled_z", "(sampled_frequency - thermal_tail) / binomial σ at thermal_tail"),
    col("epsilon", "decoding error target"),
    col("e2_markov_term", "ε: the Markov bound ε²/ε on the E₂ failure probability given mean error ≤ ε²"),
    col("e2_status", "decoder not constructed; only the Markov arithmetic is tabulated"),
    col("status", "pass, fail (exact inequality violated), outlier (a z-score beyond 4) or error"),
    col("detail", "reason for a non-pass status"),
];

fn codebook(cfg: &RunConfig) -> Result<Outcome, CliError> {
    for &n in &cfg.n {
        let size = (n as u64).saturating_mul(cfg.messages);
        if size > cfg.budget {
            return Err(CliError::Config(format!(
                "codebook of {} messages × {n} modes exceeds the budget {}",
                cfg.messages, cfg.budget
            )));
        }
    }
    let epsilon = cfg.epsilon.first().copied().unwrap_or(0.0);
    let mut per_seed = Table::new("codebook", CODEBOOK_COLUMNS);
    let mut summary = Table::new("summary", SUMMARY_COLUMNS);
    let mut violation = false;
    let mut side_files = Vec::new();
    for &n in &cfg.n {
        for &ns in &cfg.ns {
            for &delta in &cfg.delta {
                let variance = ns - delta;
                let cutoff = (n as f64 * ns).ceil().max(0.0) as u64;
                let head = [Cell::Int(n as u64), Cell::Real(ns), Cell::Real(delta), Cell::Real(variance)];
                let prep = (|| -> Result<_, Error> {
                    if n == 0 || !(variance >= 0.0) || !(delta > 0.0) {
                        return Err(Error::Domain {
                            what: "codebook",
                            detail: format!("need n > 0, δ > 0 and N_S - δ ≥ 0 (n = {n}, δ = {delta}, N_S = {ns})"),
                        });
                    }
                    if variance == 0.0 {
                        return Ok((None, 0.0, 0.0));
                    }
                    let opt = chernoff_constant(delta, variance / (variance + 1.0))?;
                    let tail = geometric_sum_tail_at_least(GeometricLaw::from_mean(variance)?, n as u64, cutoff + 1)
                        .linear()
                        .min(1.0);
                    let delta1 = (opt.ln_constant * n as f64 / 2.0).exp();
                    Ok((Some(opt.constant), tail, delta1))
                })();
                let (constant, tail, delta1) = match prep {
                    Ok(v) => v,
                    Err(e) => {
                        let mut row = head.to_vec();
                        row.extend([Cell::Int(cfg.seeds), Cell::Int(cfg.messages), Cell::Int(cutoff)]);
                        row.resize(SUMMARY_COLUMNS.len() - 2, Cell::Empty);
                        row.push(Cell::text(status_of(&e)));
                        row.push(Cell::text(e.to_string()));
                        summary.push(row);
                        continue;
                    }
                };
                let seeds: Vec<u64> = (0..cfg.seeds).map(|s| cfg.seed.wrapping_add(s)).collect();
                let audits: Vec<_> = seeds
                    .par_iter()
                    .map(|&seed| {
                        let ens = GaussianEnsemble::new(variance, n, seed).expect("validated above");
                        let book = sample_codebook(cfg.messages as usize, &ens).expect("validated above");
                        let audit = audit_constraint_e1(&book, cutoff, delta1, Some(ns));
                        let hits = sampled_cutoff_exceedances(&book, cutoff, seed);
                        (seed, audit, hits)
                    })
                    .collect();
                if let (Some(path), true) = (&cfg.codebook_out, side_files.is_empty()) {
                    let ens = GaussianEnsemble::new(variance, n, cfg.seed).expect("validated above");
                    let book = sample_codebook(cfg.messages as usize, &ens).expect("validated above");
                    side_files.extend(codebook_files(path, &ens, &book));
                }
                for (seed, audit, hits) in &audits {
                    let mut row = head.to_vec();
                    row.extend([
                        Cell::Int(*seed),
                        Cell::Int(cfg.messages),
                        Cell::Int(cutoff),
                        Cell::Real(delta1),
                        Cell::Real(audit.average_shadow),
                        Cell::Real(audit.deficit),
                        Cell::Bool(audit.passed),
                        Cell::Real(audit.worst_shadow),
                        Cell::Int(audit.budget_violations.len() as u64),
                        Cell::Int(*hits),
                    ]);
                    per_seed.push(row);
                }

                let k = audits.len() as f64;
                let failures = audits.iter().filter(|(_, a, _)| !a.passed).count() as u64;
                let deficits: Vec<f64> = audits.iter().map(|(_, a, _)| a.deficit).collect();
                let mean_deficit = deficits.iter().sum::<f64>() / k;
                let var = deficits.iter().map(|d| (d - mean_deficit).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
                let deficit_stderr = (var / k).sqrt();
                let deficit_z = if deficit_stderr > 0.0 {
                    (mean_deficit - tail) / deficit_stderr
                } else if mean_deficit == tail {
                    0.0
                } else {
                    f64::INFINITY
                };
                let draws = k * cfg.messages as f64;
                let sampled: u64 = audits.iter().map(|(_, _, h)| h).sum();
                let sampled_frequency = sampled as f64 / draws;
                let sigma = (tail * (1.0 - tail) / draws).sqrt();
                let sampled_z = if sigma > 0.0 {
                    (sampled_frequency - tail) / sigma
                } else if sampled_frequency == tail {
                    0.0
                } else {
                    f64::INFINITY
                };
                let chernoff_bound = constant.map(|c| c.powf(n as f64));
                let holds = chernoff_bound.is_none_or(|b| tail <= b * (1.0 + CHECK_TOL));
                let markov = if delta1 > 0.0 { (tail / delta1).min(1.0) } else { 0.0 };
                let (status, detail) = if !holds {
                    violation = true;
                    ("fail", format!("thermal tail {tail} exceeds C^n"))
                } else if deficit_z.abs() > 4.0 || sampled_z.abs() > 4.0 {
                    ("outlier", format!("deficit z {deficit_z}, sampled z {sampled_z}"))
                } else {
                    ("pass", String::new())
                };
                let mut row = head.to_vec();
                row.extend([
                    Cell::Int(cfg.seeds),
                    Cell::Int(cfg.messages),
                    Cell::Int(cutoff),
                    Cell::opt(constant),
                    Cell::Real(tail),
                    Cell::opt(chernoff_bound),
                    Cell::Bool(holds),
                    Cell::Real(delta1),
                    Cell::Int(failures),
                    Cell::Real(failures as f64 / k),
                    Cell::Real(markov),
                    Cell::Real(mean_deficit),
                    Cell::Real(deficit_stderr),
                    Cell::Real(deficit_z),
                    Cell::Real(sampled_frequency),
                    Cell::Real(sampled_z),
                    Cell::Real(epsilon),
                    Cell::Real(epsilon),
                    Cell::text("not_constructed"),
                    Cell::text(status),
                    Cell::text(detail),
                ]);
                summary.push(row);
            }
        }
    }
    Ok(Outcome {
        tables: vec![per_seed, summary],
        violation,
        side_files,
    })
}

/// Columnar codebook CSV and its JSON header.
fn codebook_files(
    path: &std::path::Path,
    ens: &GaussianEnsemble,
    book: &[bosonic_lab::codebook::CoherentCodeword],
) -> Vec<(std::path::PathBuf, String)> {
    let mut csv = format!(
        "# schema_version={}\nmessage_index,mode_index,re_alpha,im_alpha\n",
        crate::table::SCHEMA_VERSION
    );
    for (m, i, re, im) in codebook_rows(book) {
        csv.push_str(&format!(
            "{m},{i},{},{}\n",
            crate::table::format_real(re),
            crate::table::format_real(im)
        ));
    }
    let header = serde_json::json!({
        "schema_version": crate::table::SCHEMA_VERSION,
        "seed": ens.seed,
        "variance": ens.variance,
        "n": ens.n_modes,
        "M": book.len(),
    });
    let mut header_path = path.as_os_str().to_owned();
    header_path.push(".json");
    vec![
        (path.to_path_buf(), csv),
        (header_path.into(), format!("{}\n", serde_json::to_string_pretty(&header).expect("JSON encodes"))),
    ]
}

const TAIL_COLUMNS: &[Column] = &[
    col("family", "negative_binomial: Pr{Σ Zᵢ ≥ threshold} for geometric Zᵢ; binomial: Pr{K ≤ threshold} for K ~ Binomial(n, p)"),
    col("delta", "deviation δ (negative_binomial) or Hoeffding slack δ₃ (binomial)"),
    col("p", "geometric ratio Pr{Z = k} = pᵏ(1 - p), or success probability"),
    col("n", "summands or trials"),
    col("threshold", "⌈n(μ + δ)⌉ or ⌈n(p + δ)⌉"),
    col("exact", "exact tail"),
    col("bound", "Chernoff C(δ, p)^n (upper) or Hoeffding 1 - exp(-2δ²n) (lower)"),
    col("bound_holds", "exact ≤ bound (negative_binomial) or exact ≥ bound (binomial)"),
    col("mc_estimate", "sampled frequency; empty when samples = 0"),
    col("mc_stderr", "binomial standard error of mc_estimate"),
    col("status", "pass, fail (bound violated) or error"),
    col("detail", "reason for a non-pass status"),
];

fn tails(cfg: &RunConfig) -> Outcome {
    let mut grid = Vec::new();
    for &delta in &cfg.delta {
        for &p in &cfg.p {
            for &n in &cfg.n {
                for family in [0u8, 1] {
                    grid.push((delta, p, n, family));
                }
            }
        }
    }
    let rows: Vec<Vec<Cell>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(delta, p, n, family))| tail_row(delta, p, n, family, cfg.samples, cfg.seed.wrapping_add(i as u64)))
        .collect();
    let status = TAIL_COLUMNS.len() - 2;
    let violation = rows.iter().any(|r| r[status] == Cell::text("fail"));
    let mut table = Table::new("tails", TAIL_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Outcome {
        tables: vec![table],
        violation,
        side_files: Vec::new(),
    }
}

fn tail_row(delta: f64, p: f64, n: usize, family: u8, samples: u64, seed: u64) -> Vec<Cell> {
    let name = if family == 0 { "negative_binomial" } else { "binomial" };
    let mut row = vec![Cell::text(name), Cell::Real(delta), Cell::Real(p), Cell::Int(n as u64)];
    let computed = (|| -> Result<(u64, f64, f64, bool, TailQuery), Error> {
        if family == 0 {
            let law = GeometricLaw::new(p)?;
            let opt = chernoff_constant(delta, p)?;
            if n == 0 {
                return Err(Error::Domain { what: "tails", detail: "n must be positive".into() });
            }
            let threshold = (n as f64 * (law.mean() + delta)).ceil() as u64;
            let exact = geometric_sum_tail_at_least(law, n as u64, threshold).linear().min(1.0);
            let bound = opt.tail_bound(n as u64).linear();
            let query = TailQuery::GeometricSumAtLeast { law, n: n as u64, threshold };
            Ok((threshold, exact, bound, exact <= bound * (1.0 + CHECK_TOL), query))
        } else {
            let dist = BinomialTransmission::new(n as u64, p)?;
            let bound = hoeffding_lower_bound(n as u64, delta)?;
            let threshold = hoeffding_threshold(n as u64, p, delta);
            let exact = binomial_tail_below(dist, threshold);
            let query = TailQuery::BinomialBelow { dist, threshold };
            Ok((threshold, exact, bound, exact >= bound - CHECK_TOL, query))
        }
    })();
    match computed {
        Ok((threshold, exact, bound, holds, query)) => {
            row.extend([Cell::Int(threshold), Cell::Real(exact), Cell::Real(bound), Cell::Bool(holds)]);
            if samples > 0 {
                match monte_carlo_tail(query, samples, seed) {
                    Ok(est) => row.extend([Cell::Real(est.estimate), Cell::Real(est.stderr)]),
                    Err(_) => row.extend([Cell::Empty, Cell::Empty]),
                }
            } else {
                row.extend([Cell::Empty, Cell::Empty]);
            }
            row.push(Cell::text(if holds { "pass" } else { "fail" }));
            row.push(Cell::text(""));
        }
        Err(e) => {
            row.resize(TAIL_COLUMNS.len() - 2, Cell::Empty);
            row.push(Cell::text(status_of(&e)));
            row.push(Cell::text(e.to_string()));
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> RunConfig {
        RunConfig::defaults(command)
    }

    fn value(t: &Table, row: usize, name: &str) -> Cell {
        t.rows[row][t.column(name).unwrap()].clone()
    }

    #[test]
    fn bounds_rate_cap_at_unit_budget() {
        let mut c = cfg(Command::Bounds);
        c.eta = vec![1.0];
        c.ns = vec![1.0];
        c.n = vec![100];
        let out = run(&c).unwrap();
        let t = &out.tables[0];
        assert_eq!(value(t, 0, "weak_rate_cap"), Cell::Real(2.0));
        assert_eq!(value(t, 0, "capacity"), Cell::Real(2.0));
        assert_eq!(value(t, 0, "status"), Cell::text("ok"));
    }

    #[test]
    fn bounds_row_matches_library_report() {
        let mut c = cfg(Command::Bounds);
        c.eta = vec![0.5];
        c.ns = vec![1.0];
        c.n = vec![40];
        c.delta1 = vec![Delta1Spec::Value(1e-4)];
        let out = run(&c).unwrap();
        let t = &out.tables[0];
        let params = ChannelParams::new(0.5, 40, 1.0).unwrap();
        let d3 = delta3_upper(&params, 0.1);
        let rate = g_entropy(0.5).unwrap() + 0.5;
        let slack = ConverseSlack { delta: None, delta1: 1e-4, delta2: 0.1, delta3: d3 };
        let report = strong_converse_success_bound(&CodeParams::with_rate(rate), &params, &slack).unwrap();
        assert_eq!(value(t, 0, "raw_sum"), Cell::Real(report.bound_terms["raw_sum"]));
        assert_eq!(value(t, 0, "delta3"), Cell::Real(d3));
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        let mut c = cfg(Command::Bounds);
        c.eta.clear();
        let out = run(&c).unwrap();
        assert!(out.tables[0].rows.is_empty());
        assert!(!out.violation);
    }

    #[test]
    fn inadmissible_delta3_is_flagged_precondition() {
        let mut c = cfg(Command::Lemmas);
        c.lemma = LemmaSelection::Two;
        c.n = vec![100];
        c.delta3 = vec![Delta3Spec::Value(0.5)];
        let out = run(&c).unwrap();
        let t = &out.tables[0];
        assert_eq!(value(t, 0, "status"), Cell::text("precondition"));
        assert!(!out.violation);
    }

    #[test]
    fn lemma_grids_pass() {
        let mut c = cfg(Command::Lemmas);
        c.n = (1..=30).collect();
        c.ns = vec![0.5, 2.0];
        c.delta1 = vec![Delta1Spec::Value(0.01), Delta1Spec::Preset];
        let out = run(&c).unwrap();
        let t = &out.tables[0];
        let s = t.column("status").unwrap();
        assert!(t.rows.iter().all(|r| r[s] == Cell::text("pass") || r[s] == Cell::text("precondition")));
        assert!(t.rows.iter().any(|r| r[s] == Cell::text("pass") && r[0] == Cell::Int(2)));
        assert!(!out.violation);
    }

    #[test]
    fn tails_example_row() {
        let mut c = cfg(Command::Tails);
        c.delta = vec![1.0];
        c.p = vec![0.5];
        c.n = vec![1];
        let out = run(&c).unwrap();
        let t = &out.tables[0];
        assert_eq!(value(t, 0, "family"), Cell::text("negative_binomial"));
        let Cell::Real(exact) = value(t, 0, "exact") else { panic!() };
        let Cell::Real(bound) = value(t, 0, "bound") else { panic!() };
        assert!((exact - 0.25).abs() < 1e-14);
        assert!((bound - 0.84375).abs() < 1e-9);
        assert_eq!(value(t, 1, "family"), Cell::text("binomial"));
    }

    #[test]
    fn zero_variance_codebook_always_meets_constraint() {
        let mut c = cfg(Command::Codebook);
        c.n = vec![10];
        c.ns = vec![0.5];
        c.delta = vec![0.5];
        c.seeds = 5;
        c.messages = 8;
        let out = run(&c).unwrap();
        let t = &out.tables[0];
        let e1 = t.column("e1_holds").unwrap();
        assert!(t.rows.iter().all(|r| r[e1] == Cell::Bool(true)));
        assert_eq!(value(&out.tables[1], 0, "status"), Cell::text("pass"));
    }

    #[test]
    fn codebook_budget_is_enforced() {
        let mut c = cfg(Command::Codebook);
        c.budget = 10;
        assert!(matches!(run(&c), Err(CliError::Config(_))));
    }
}
