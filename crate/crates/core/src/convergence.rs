//! Sequences of σ-subalgebras and the μ-, ⊥- and μ⊥-convergence diagnostics.
//!
//! A sequence is only ever looked at through a finite window. Every verdict
//! is a tail-max test over the last quarter of that window ([`tail_start`]),
//! and every verdict is derived from a trace stored in the report.

use std::io;

use crate::condexp::{cond_exp, orth_complement};
use crate::error::{domain, Result};
use crate::measure::{default_m_max, lower_limit, tail_start, upper_limit, DyadicSpace, MeasurableSet, Partition};
use crate::orlicz::{distribution_norm, indicator_norm, norm, SimpleFunction, NORM_TOL};
use crate::young::{Young, YoungFunction};

pub const DEFAULT_WINDOW: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_BATTERY: usize = 32;
/// Levels at which Cesàro limit functions are cut into candidate sets.
pub const THRESHOLD_LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

/// How the terms `𝒜ₙ` of a sequence are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `𝒢_{2^j}` for the listed exponents `j`; the last exponent repeats.
    DyadicRefinement(Vec<u32>),
    /// The listed partitions in order, after which the last `period` of them
    /// cycle forever.
    Periodic { partitions: Vec<Partition>, period: usize },
    /// The window itself, listed term by term.
    Explicit(Vec<Partition>),
}

/// A sequence `{𝒜ₙ}` of partitions on one space, materialized over a window.
#[derive(Debug, Clone)]
pub struct AlgebraSequence {
    generator: Generator,
    window: Vec<Partition>,
    period: usize,
    // first index holding the same partition; saves recomputing repeats
    rep: Vec<usize>,
}

impl AlgebraSequence {
    pub fn new(space: &DyadicSpace, generator: Generator, window_length: usize) -> Result<Self> {
        if window_length < 4 {
            return domain(format!("window length must be at least 4, got {window_length}"));
        }
        let window: Vec<Partition> = match &generator {
            Generator::DyadicRefinement(exps) => {
                if exps.is_empty() {
                    return domain("dyadic refinement needs at least one exponent");
                }
                (0..window_length)
                    .map(|n| Partition::dyadic(space, exps[n.min(exps.len() - 1)]))
                    .collect::<Result<_>>()?
            }
            Generator::Periodic { partitions, period } => {
                if *period == 0 || *period > partitions.len() {
                    return domain(format!("period {period} does not fit {} partitions", partitions.len()));
                }
                let pre = partitions.len() - period;
                (0..window_length)
                    .map(|n| {
                        if n < pre {
                            partitions[n].clone()
                        } else {
                            partitions[pre + (n - pre) % period].clone()
                        }
                    })
                    .collect()
            }
            Generator::Explicit(ps) => {
                if ps.len() < window_length {
                    return domain(format!(
                        "explicit sequence has {} terms, window needs {window_length}",
                        ps.len()
                    ));
                }
                ps[..window_length].to_vec()
            }
        };
        for p in &window {
            space.ensure_same(p.space())?;
        }
        let period = match &generator {
            Generator::Periodic { period, .. } => *period,
            _ => detect_period(&window),
        };
        let rep = first_occurrences(&window);
        Ok(AlgebraSequence {
            generator,
            window,
            period,
            rep,
        })
    }

    pub fn dyadic_refinement(space: &DyadicSpace, exponents: Vec<u32>, window_length: usize) -> Result<Self> {
        Self::new(space, Generator::DyadicRefinement(exponents), window_length)
    }

    /// `𝒢_1, 𝒢_2, 𝒢_4, …, 𝒢_{2^K}`, then the finest partition forever.
    pub fn full_refinement(space: &DyadicSpace, window_length: usize) -> Result<Self> {
        Self::dyadic_refinement(space, (0..=space.k()).collect(), window_length)
    }

    pub fn constant(partition: &Partition, window_length: usize) -> Result<Self> {
        Self::periodic(vec![partition.clone()], 1, window_length)
    }

    pub fn periodic(partitions: Vec<Partition>, period: usize, window_length: usize) -> Result<Self> {
        let Some(first) = partitions.first() else {
            return domain("periodic sequence needs at least one partition");
        };
        let space = first.space().clone();
        Self::new(&space, Generator::Periodic { partitions, period }, window_length)
    }

    pub fn explicit(partitions: Vec<Partition>, window_length: usize) -> Result<Self> {
        let Some(first) = partitions.first() else {
            return domain("explicit sequence needs at least one partition");
        };
        let space = first.space().clone();
        Self::new(&space, Generator::Explicit(partitions), window_length)
    }

    pub fn space(&self) -> &DyadicSpace {
        self.window[0].space()
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn window(&self) -> &[Partition] {
        &self.window
    }

    pub fn window_length(&self) -> usize {
        self.window.len()
    }

    /// Declared period for periodic generators, detected from the window
    /// otherwise. When no period shows up, every tail index is its own class.
    pub fn period(&self) -> usize {
        self.period
    }

    /// `A = ⋁⋂`, with the default outer bound.
    pub fn lower_limit(&self) -> Result<Partition> {
        lower_limit(&self.window, default_m_max(self.window.len()))
    }

    /// `Ā = ⋂⋁`, with the default outer bound.
    pub fn upper_limit(&self) -> Result<Partition> {
        upper_limit(&self.window, default_m_max(self.window.len()))
    }

    /// Evaluates `f(𝒜ₙ)` once per distinct partition of the window.
    fn per_term<T: Clone>(&self, mut f: impl FnMut(&Partition) -> Result<T>) -> Result<Vec<T>> {
        let mut out: Vec<T> = Vec::with_capacity(self.window.len());
        for (n, p) in self.window.iter().enumerate() {
            let v = if self.rep[n] == n {
                f(p)?
            } else {
                out[self.rep[n]].clone()
            };
            out.push(v);
        }
        Ok(out)
    }

    fn distinct_tail(&self) -> Vec<&Partition> {
        let mut reps: Vec<usize> = self.tail_indices().map(|n| self.rep[n]).collect();
        reps.dedup();
        reps.sort_unstable();
        reps.dedup();
        reps.into_iter().map(|r| &self.window[r]).collect()
    }

    fn tail_indices(&self) -> std::ops::Range<usize> {
        tail_start(self.window.len())..self.window.len()
    }
}

fn first_occurrences(window: &[Partition]) -> Vec<usize> {
    (0..window.len())
        .map(|n| {
            (0..n)
                .find(|&m| window[m].n_blocks() == window[n].n_blocks() && window[m] == window[n])
                .unwrap_or(n)
        })
        .collect()
}

/// Smallest period of the second half of the window.
fn detect_period(window: &[Partition]) -> usize {
    let len = window.len();
    let start = len / 2;
    for p in 1..=(len - start) / 2 {
        if (start + p..len).all(|n| window[n] == window[n - p]) {
            return p;
        }
    }
    len - tail_start(len)
}

/// Largest value over the verdict tail.
pub fn tail_max(values: &[f64]) -> f64 {
    // adding zero turns a negative zero into a positive one
    values[tail_start(values.len())..].iter().copied().fold(0.0, f64::max) + 0.0
}

/// Smallest value over the verdict tail.
pub fn tail_min(values: &[f64]) -> f64 {
    values[tail_start(values.len())..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// One per-`n` series of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub metric: String,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn tail_max(&self) -> f64 {
        tail_max(&self.values)
    }

    pub fn tail_min(&self) -> f64 {
        tail_min(&self.values)
    }
}

/// An invariant evaluated alongside the verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Traces, verdicts and cross-checks of one diagnostic run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub window: usize,
    pub tol: f64,
    pub traces: Vec<Trace>,
    pub mu: Option<bool>,
    /// Every target block is approximable along some tail index.
    pub mu_subsequence: Option<bool>,
    pub perp: Option<bool>,
    pub muperp: Option<bool>,
    /// All conditional-expectation norm traces fall below `tol`.
    pub condexp: Option<bool>,
    pub checks: Vec<CrossCheck>,
}

impl ConvergenceReport {
    pub fn new(window: usize, tol: f64) -> Self {
        ConvergenceReport {
            window,
            tol,
            traces: Vec::new(),
            mu: None,
            mu_subsequence: None,
            perp: None,
            muperp: None,
            condexp: None,
            checks: Vec::new(),
        }
    }

    pub fn push_trace(&mut self, metric: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.window, "trace length must equal the window");
        // f64::max may hand back -0, which would leak into the CSV
        let values = values.into_iter().map(|v| v + 0.0).collect();
        self.traces.push(Trace {
            metric: metric.into(),
            values,
        });
    }

    pub fn push_check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CrossCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn trace(&self, metric: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.metric == metric)
    }

    pub fn check(&self, name: &str) -> Option<&CrossCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Appends the traces and checks of `other`; verdicts set in `other` win.
    pub fn absorb(&mut self, other: ConvergenceReport) {
        assert_eq!(self.window, other.window, "cannot merge reports over different windows");
        self.traces.extend(other.traces);
        self.checks.extend(other.checks);
        self.mu = other.mu.or(self.mu);
        self.mu_subsequence = other.mu_subsequence.or(self.mu_subsequence);
        self.perp = other.perp.or(self.perp);
        self.muperp = other.muperp.or(self.muperp);
        self.condexp = other.condexp.or(self.condexp);
    }

    /// `VERDICT mu=… perp=… muperp=…`, with `na` for verdicts not computed.
    pub fn verdict_line(&self) -> String {
        let show = |v: Option<bool>| v.map_or("na".to_string(), |b| b.to_string());
        format!(
            "VERDICT mu={} perp={} muperp={}",
            show(self.mu),
            show(self.perp),
            show(self.muperp)
        )
    }

    /// Writes the traces as `n,metric,value` rows under a header.
    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["n", "metric", "value"])?;
        for t in &self.traces {
            for (n, v) in t.values.iter().enumerate() {
                w.write_record([n.to_string(), t.metric.clone(), v.to_string()])?;
            }
        }
        w.flush()
    }
}

fn ensure_battery(seq: &AlgebraSequence, battery: &[SimpleFunction]) -> Result<()> {
    if battery.is_empty() {
        return domain("dual battery is empty");
    }
    for g in battery {
        seq.space().ensure_same(g.space())?;
    }
    Ok(())
}

/// `μ(A \ B)` and `μ(B \ A)`.
fn one_sided_measures(a: &MeasurableSet, b: &MeasurableSet) -> Result<(f64, f64)> {
    Ok((a.difference(b)?.measure(), b.difference(a)?.measure()))
}

/// μ-convergence of `seq` to the algebra of `target`.
///
/// For every block `D` of `target`, `Aₙ*` is the best block-union
/// approximation from `𝒜ₙ`. Two traces are kept, each a max over blocks:
/// `mu_distance` is `μ(Aₙ* Δ D)` and `mu_norm` is `N_φ(χ_{Aₙ*} − χ_D)`. The
/// verdict reads the distance trace. The norm trace is judged against
/// `N_φ` of an indicator of measure `tol`, and the check
/// `mu_orlicz_equivalence` asserts both sides agree.
pub fn mu_convergence_test(
    seq: &AlgebraSequence,
    target: &Partition,
    phi: &YoungFunction,
    tol: f64,
) -> Result<ConvergenceReport> {
    seq.space().ensure_same(target.space())?;
    let blocks = target.block_sets();
    let per_block: Vec<Vec<(f64, f64)>> = seq.per_term(|p| {
        blocks
            .iter()
            .map(|d| {
                let a = p.best_approx(d)?;
                let (plus, minus) = one_sided_measures(&a, d)?;
                let nv = distribution_norm(&[(1.0, plus), (-1.0, minus)], phi, NORM_TOL)?;
                Ok((a.symm_diff_measure(d)?, nv))
            })
            .collect()
    })?;
    let dist: Vec<f64> = per_block
        .iter()
        .map(|row| row.iter().map(|r| r.0).fold(0.0, f64::max))
        .collect();
    let norms: Vec<f64> = per_block
        .iter()
        .map(|row| row.iter().map(|r| r.1).fold(0.0, f64::max))
        .collect();
    let subsequence = (0..blocks.len()).all(|b| seq.tail_indices().any(|n| per_block[n][b].0 < tol));

    let norm_tol = indicator_norm(phi, tol)?;
    let by_distance = tail_max(&dist) < tol;
    let by_norm = tail_max(&norms) < norm_tol;
    let mut report = ConvergenceReport::new(seq.window_length(), tol);
    report.push_check(
        "mu_orlicz_equivalence",
        by_distance == by_norm,
        format!(
            "distance tail {:e} vs {tol:e}; norm tail {:e} vs {norm_tol:e}",
            tail_max(&dist),
            tail_max(&norms)
        ),
    );
    report.push_trace("mu_distance", dist);
    report.push_trace("mu_norm", norms);
    report.mu = Some(by_distance);
    report.mu_subsequence = Some(subsequence);
    Ok(report)
}

/// What the dual battery is paired against.
#[derive(Debug, Clone, Copy)]
pub enum PairingMode<'a> {
    /// `uₙ = χ_{Aₙ}` with `Aₙ` the block union of `𝒜ₙ` maximizing the
    /// magnitude of the pairing.
    Set,
    /// `uₙ = E(f̃ | 𝒜ₙ)` with `f̃ = (f + ‖f‖∞)/(2‖f‖∞)` taking values in `[0, 1]`.
    Function(&'a SimpleFunction),
}

/// `∫ E^⊥_𝔇(uₙ) g dμ` for each `g` of the battery (outer index) and each `n`.
///
/// In set mode the pairing equals `Σ_{B ⊆ Aₙ} ∫_B E^⊥_𝔇(g) dμ` because
/// `E^⊥_𝔇` is self-adjoint, so it is linear in the block mask: taking every
/// block with a positive contribution, or every block with a negative one,
/// maximizes the magnitude exactly. The reported value is the pairing of the
/// chosen set, computed directly.
pub fn weak_pairing_trace(
    seq: &AlgebraSequence,
    target: &Partition,
    mode: PairingMode<'_>,
    battery: &[SimpleFunction],
    phi: &YoungFunction,
) -> Result<Vec<Vec<f64>>> {
    phi.require_delta2()?;
    seq.space().ensure_same(target.space())?;
    ensure_battery(seq, battery)?;
    let space = seq.space();
    let rescaled = match mode {
        PairingMode::Set => None,
        PairingMode::Function(f) => {
            space.ensure_same(f.space())?;
            let s = f.sup_norm();
            Some(if s > 0.0 {
                f.map(|v| (v + s) / (2.0 * s))?
            } else {
                SimpleFunction::zero(space)
            })
        }
    };
    battery
        .iter()
        .map(|g| {
            let dual = orth_complement(g, target)?;
            seq.per_term(|p| {
                let u = match &rescaled {
                    None => SimpleFunction::indicator(&adversarial_set(p, &dual)?),
                    Some(ft) => cond_exp(ft, p)?,
                };
                orth_complement(&u, target)?.pairing(g)
            })
        })
        .collect()
}

fn adversarial_set(p: &Partition, dual: &SimpleFunction) -> Result<MeasurableSet> {
    let mut sums = vec![0.0; p.n_blocks()];
    for ((l, v), w) in p.labels().iter().zip(dual.values()).zip(dual.space().weights()) {
        sums[*l as usize] += v * w;
    }
    let pos: f64 = sums.iter().filter(|s| **s > 0.0).sum();
    let neg: f64 = sums.iter().filter(|s| **s < 0.0).sum();
    let take_positive = pos >= -neg;
    let mask = p
        .labels()
        .iter()
        .map(|l| {
            let s = sums[*l as usize];
            if take_positive {
                s > 0.0
            } else {
                s < 0.0
            }
        })
        .collect();
    dual.space().set_from_mask(mask)
}

/// ⊥-convergence of `seq` to the algebra of `target`.
///
/// The `perp_pairing` trace is the max over the battery of the adversarial
/// set-mode pairing magnitude. Also checks the estimated `A_⊥` against the
/// sandwich `A ⊆ A_⊥ ⊆ Ā`, and that the verdict agrees with `A_⊥ ⊆ 𝔇`.
pub fn perp_convergence_test(
    seq: &AlgebraSequence,
    target: &Partition,
    battery: &[SimpleFunction],
    phi: &YoungFunction,
    tol: f64,
) -> Result<ConvergenceReport> {
    let pairings = weak_pairing_trace(seq, target, PairingMode::Set, battery, phi)?;
    let trace = max_abs_over(&pairings, seq.window_length());
    let perp = tail_max(&trace) < tol;

    let lower = seq.lower_limit()?;
    let upper = seq.upper_limit()?;
    let aperp = aperp_estimate(seq)?;
    let mut report = ConvergenceReport::new(seq.window_length(), tol);
    report.push_check(
        "aperp_sandwich",
        aperp.refines(&lower)? && upper.refines(&aperp)?,
        format!(
            "lower {} blocks, A_perp estimate {} blocks, upper {} blocks",
            lower.n_blocks(),
            aperp.n_blocks(),
            upper.n_blocks()
        ),
    );
    let contained = target.refines(&aperp)?;
    report.push_check(
        "perp_iff_aperp_in_target",
        contained == perp,
        format!(
            "A_perp estimate inside target: {contained}; pairing tail {:e}",
            tail_max(&trace)
        ),
    );
    report.push_trace("perp_pairing", trace);
    report.perp = Some(perp);
    Ok(report)
}

fn max_abs_over(rows: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| rows.iter().map(|r| r[n].abs()).fold(0.0, f64::max))
        .collect()
}

/// `N_φ(E(f | 𝒜ₙ) − E(f | 𝔇))` per `n`; the verdict is `tail max < tol`.
pub fn condexp_convergence_test(
    f: &SimpleFunction,
    seq: &AlgebraSequence,
    target: &Partition,
    phi: &YoungFunction,
    tol: f64,
) -> Result<ConvergenceReport> {
    let trace = condexp_trace(f, seq, target, phi)?;
    let mut report = ConvergenceReport::new(seq.window_length(), tol);
    report.condexp = Some(tail_max(&trace) < tol);
    report.push_trace("condexp_norm", trace);
    Ok(report)
}

fn condexp_trace(
    f: &SimpleFunction,
    seq: &AlgebraSequence,
    target: &Partition,
    phi: &YoungFunction,
) -> Result<Vec<f64>> {
    phi.require_delta2()?;
    seq.space().ensure_same(target.space())?;
    seq.space().ensure_same(f.space())?;
    let limit = cond_exp(f, target)?;
    seq.per_term(|p| Ok(norm(&cond_exp(f, p)?.sub(&limit)?, phi)))
}

/// Runs the μ, ⊥ and conditional-expectation tests together and checks the
/// equivalence `μ⊥ ⇔ E(f | 𝒜ₙ) → E(f | 𝔇)` over the function battery.
///
/// Further checks: target-measurable functions are recovered whenever the μ
/// verdict holds, and function-mode pairings vanish whenever the ⊥ verdict
/// holds while never exceeding the set-mode pairing.
pub fn equivalence_test(
    seq: &AlgebraSequence,
    target: &Partition,
    functions: &[SimpleFunction],
    duals: &[SimpleFunction],
    phi: &YoungFunction,
    tol: f64,
) -> Result<ConvergenceReport> {
    if functions.is_empty() {
        return domain("function battery is empty");
    }
    let len = seq.window_length();
    let mut report = ConvergenceReport::new(len, tol);
    report.absorb(mu_convergence_test(seq, target, phi, tol)?);
    report.absorb(perp_convergence_test(seq, target, duals, phi, tol)?);
    let (mu, perp) = (report.mu == Some(true), report.perp == Some(true));

    let traces = functions
        .iter()
        .map(|f| condexp_trace(f, seq, target, phi))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = max_abs_over(&traces, len);
    let condexp = tail_max(&aggregate) < tol;
    report.condexp = Some(condexp);
    report.muperp = Some(mu && perp);
    report.push_check(
        "condexp_iff_muperp",
        condexp == (mu && perp),
        format!(
            "condexp {condexp}, mu {mu}, perp {perp}; norm tail {:e}",
            tail_max(&aggregate)
        ),
    );

    let mut recovered = true;
    for (f, t) in functions.iter().zip(&traces) {
        let measurable = cond_exp(f, target)?.sub(f)?.sup_norm() <= 1e-12 * f.sup_norm().max(1.0);
        if measurable && mu && tail_max(t) >= tol {
            recovered = false;
        }
    }
    report.push_check(
        "measurable_recovery",
        recovered,
        "target-measurable f converge when mu holds",
    );

    let set_mode = max_abs_over(&weak_pairing_trace(seq, target, PairingMode::Set, duals, phi)?, len);
    let mut dominated = true;
    let mut function_tail = 0.0_f64;
    for f in functions {
        let rows = weak_pairing_trace(seq, target, PairingMode::Function(f), duals, phi)?;
        let fm = max_abs_over(&rows, len);
        dominated &= fm.iter().zip(&set_mode).all(|(a, b)| *a <= b + 1e-12);
        function_tail = function_tail.max(tail_max(&fm));
    }
    report.push_check(
        "function_mode_pairing",
        dominated && (!perp || function_tail < tol),
        format!("function-mode tail {function_tail:e}; bounded by set mode: {dominated}"),
    );
    report.push_trace("condexp_norm", aggregate);
    Ok(report)
}

/// Checks `N_φ(E(χ_D | 𝒜ₙ) − χ_D) ≤ 2/φ⁻¹(1/(2μ(Aₙ* Δ D)))` for each `n`.
///
/// Returns the largest `lhs − rhs`; terms with `Aₙ* = D` are skipped, and
/// the result is `-∞` when every term was skipped.
pub fn indicator_bound_check(seq: &AlgebraSequence, d: &MeasurableSet, phi: &YoungFunction) -> Result<f64> {
    seq.space().ensure_same(d.space())?;
    let chi = SimpleFunction::indicator(d);
    let gaps = seq.per_term(|p| {
        let delta = p.best_approx(d)?.symm_diff_measure(d)?;
        if delta == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let lhs = norm(&cond_exp(&chi, p)?.sub(&chi)?, phi);
        let rhs = 2.0 / phi.inverse(1.0 / (2.0 * delta))?;
        Ok(lhs - rhs)
    })?;
    Ok(gaps.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// With `Aₙ = {E(χ_D | 𝒜ₙ) > ½}` and `fₙ = |E(χ_D | 𝒜ₙ) − χ_D|`, checks
/// `½μ(Aₙ Δ D) ≤ ∫fₙ dμ` and the Jensen step `⨍fₙ ≤ φ⁻¹(⨍φ(fₙ))`.
///
/// Returns the largest violation over both inequalities and all `n`.
pub fn set_recovery_check(seq: &AlgebraSequence, d: &MeasurableSet, phi: &YoungFunction) -> Result<f64> {
    seq.space().ensure_same(d.space())?;
    let space = seq.space();
    let chi = SimpleFunction::indicator(d);
    let gaps = seq.per_term(|p| {
        let e = cond_exp(&chi, p)?;
        let a = space.set_from_mask(e.values().iter().map(|v| *v > 0.5).collect())?;
        let fn_ = e.sub(&chi)?.abs();
        let integral = fn_.integrate();
        let recovery = 0.5 * a.symm_diff_measure(d)? - integral;
        let mean_phi = fn_.map(|v| phi.value(v))?.integrate() / space.total();
        let jensen = integral / space.total() - phi.inverse(mean_phi)?;
        Ok(recovery.max(jensen))
    })?;
    Ok(gaps.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn tail_distance_max(seq: &AlgebraSequence, set: &MeasurableSet) -> Result<f64> {
    let d = seq.per_term(|p| p.best_approx(set)?.symm_diff_measure(set))?;
    Ok(tail_max(&d))
}

/// Estimate of `A_μ`: the partition generated by those blocks of the lower
/// limit, the upper limit and the tail partitions that pass the tail-max
/// membership test.
pub fn amu_estimate(seq: &AlgebraSequence, tol: f64) -> Result<Partition> {
    let mut candidates = seq.lower_limit()?.block_sets();
    candidates.extend(seq.upper_limit()?.block_sets());
    for p in seq.distinct_tail() {
        candidates.extend(p.block_sets());
    }
    let mut members = Vec::new();
    for c in candidates {
        if tail_distance_max(seq, &c)? < tol {
            members.push(c);
        }
    }
    Partition::generated_by(seq.space(), &members)
}

/// Generating sets of the `A_⊥` estimate.
///
/// For each residue class of the period inside the tail and each block `B` of
/// the last partition in that class, the Cesàro average of
/// `χ_{best_approx(𝒜ₙ, B)}` along the class stands in for a weak subsequence
/// limit; it is cut at each of [`THRESHOLD_LEVELS`].
pub fn aperp_generators(seq: &AlgebraSequence) -> Result<Vec<MeasurableSet>> {
    let space = seq.space();
    let period = seq.period();
    let tail: Vec<usize> = seq.tail_indices().collect();
    let mut sets = Vec::new();
    for r in 0..period {
        let class: Vec<usize> = tail.iter().copied().filter(|n| n % period == r).collect();
        let Some(&last) = class.last() else { continue };
        for b in seq.window[last].block_sets() {
            let mut avg = vec![0.0; space.n_cells()];
            for &n in &class {
                let a = seq.window[n].best_approx(&b)?;
                for c in a.cells() {
                    avg[c] += 1.0;
                }
            }
            let count = class.len() as f64;
            for level in THRESHOLD_LEVELS {
                sets.push(space.set_from_mask(avg.iter().map(|v| v / count > level).collect())?);
            }
        }
    }
    Ok(sets)
}

/// The partition generated by [`aperp_generators`].
pub fn aperp_estimate(seq: &AlgebraSequence) -> Result<Partition> {
    Partition::generated_by(seq.space(), &aperp_generators(seq)?)
}

/// The four algebras `A ⊆ A_μ ⊆ A_⊥ ⊆ Ā` and the inclusions between them.
/// `amu` and `aperp` are estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub lower: Partition,
    pub amu: Partition,
    pub aperp: Partition,
    pub upper: Partition,
    /// Every block of the lower limit passes the `A_μ` membership test.
    pub lower_in_amu: bool,
    pub amu_in_aperp: bool,
    /// Every `A_⊥` generator is measurable for the upper limit.
    pub aperp_in_upper: bool,
    /// The `A_μ` and `A_⊥` estimates coincide.
    pub muperp: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_in_amu && self.amu_in_aperp && self.aperp_in_upper
    }

    pub fn all_equal(&self) -> bool {
        self.lower == self.amu && self.amu == self.aperp && self.aperp == self.upper
    }
}

pub fn sandwich_check(seq: &AlgebraSequence, tol: f64) -> Result<SandwichReport> {
    let lower = seq.lower_limit()?;
    let upper = seq.upper_limit()?;
    let mut lower_in_amu = true;
    for b in lower.block_sets() {
        lower_in_amu &= tail_distance_max(seq, &b)? < tol;
    }
    let generators = aperp_generators(seq)?;
    let mut aperp_in_upper = true;
    for g in &generators {
        aperp_in_upper &= upper.is_measurable(g)?;
    }
    let aperp = Partition::generated_by(seq.space(), &generators)?;
    let amu = amu_estimate(seq, tol)?;
    let amu_in_aperp = aperp.refines(&amu)?;
    let muperp = amu == aperp;
    Ok(SandwichReport {
        lower,
        amu,
        aperp,
        upper,
        lower_in_amu,
        amu_in_aperp,
        aperp_in_upper,
        muperp,
    })
}

/// Dual functions for the ⊥ tests: indicators of up to `size/2` blocks of the
/// join of the tail partitions, spread evenly over the blocks, then seeded
/// uniform `[-1, 1]` functions up to `size`.
pub fn dual_battery(seq: &AlgebraSequence, size: usize, seed: u64) -> Result<Vec<SimpleFunction>> {
    let mut join = Partition::trivial(seq.space());
    for p in seq.distinct_tail() {
        join = join.join(p)?;
    }
    let mut out = spread_block_indicators(&join, size / 2);
    let mut i = 0;
    while out.len() < size {
        out.push(SimpleFunction::random(seq.space(), seed.wrapping_add(i), -1.0, 1.0));
        i += 1;
    }
    Ok(out)
}

/// Functions for the conditional-expectation tests: indicators of up to
/// `size/2` target blocks, the identity, then seeded uniform `[-1, 1]`
/// functions up to `size`.
pub fn function_battery(target: &Partition, size: usize, seed: u64) -> Vec<SimpleFunction> {
    let mut out = spread_block_indicators(target, size / 2);
    if out.len() < size {
        out.push(SimpleFunction::identity(target.space()));
    }
    let mut i = 0;
    while out.len() < size {
        out.push(SimpleFunction::random(target.space(), seed.wrapping_add(i), -1.0, 1.0));
        i += 1;
    }
    out
}

/// `(n, N_φ(E(f | 𝒢ₙ) − f))` for `n = 1, 2, 4, …, n_max`, where `𝒢ₙ` is the
/// partition into `n` equal intervals. `n_max` must be a power of two no
/// larger than the number of cells, so that every interval is a union of
/// cells.
pub fn dyadic_example<Y: Young + ?Sized>(f: &SimpleFunction, phi: &Y, n_max: usize) -> Result<Vec<(usize, f64)>> {
    let space = f.space();
    if !n_max.is_power_of_two() || n_max > space.n_cells() {
        return domain(format!("n = {n_max} is not a power of two up to {}", space.n_cells()));
    }
    (0..=n_max.trailing_zeros())
        .map(|j| {
            let e = cond_exp(f, &Partition::dyadic(space, j)?)?;
            Ok((1usize << j, norm(&e.sub(f)?, phi)))
        })
        .collect()
}

fn spread_block_indicators(p: &Partition, count: usize) -> Vec<SimpleFunction> {
    let n = p.n_blocks();
    let take = count.min(n);
    (0..take)
        .map(|i| SimpleFunction::indicator(&p.block_set(i * n / take)))
        .collect()
}
