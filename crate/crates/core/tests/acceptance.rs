//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines show up in plain `cargo test` output; exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orlicz_lab::condexp::{cond_exp, quantization_bound, quantize_levels, tower_intersection_check};
use orlicz_lab::convergence::{
    dual_battery, dyadic_example, equivalence_test, function_battery, indicator_bound_check, sandwich_check,
    set_recovery_check, AlgebraSequence,
};
use orlicz_lab::measure::{DyadicSpace, MeasurableSet, Partition};
use orlicz_lab::orlicz::{modular, norm, SimpleFunction};
use orlicz_lab::young::YoungFunction;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn random_partition(space: &DyadicSpace, blocks: usize, rng: &mut impl Rng) -> Partition {
    let labels: Vec<usize> = (0..space.n_cells()).map(|_| rng.gen_range(0..blocks)).collect();
    Partition::from_labels(space, &labels).unwrap()
}

fn random_set(space: &DyadicSpace, rng: &mut impl Rng) -> MeasurableSet {
    let density = rng.gen_range(0.05..0.95);
    space
        .set_from_mask((0..space.n_cells()).map(|_| rng.gen_bool(density)).collect())
        .unwrap()
}

// Young functions written out again, independently of the library
fn phi_plain(phi: &YoungFunction, x: f64) -> f64 {
    match *phi {
        YoungFunction::Power { p } => x.powf(p),
        YoungFunction::PowerLog { p } => x.powf(p) * (std::f64::consts::E + x).ln(),
        YoungFunction::ExpMinus => {
            if x < 1e-3 {
                x * x / 2.0 + x * x * x / 6.0 + x.powi(4) / 24.0
            } else {
                x.exp() - 1.0 - x
            }
        }
    }
}

fn inverse_plain(phi: &YoungFunction, y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while phi_plain(phi, hi) < y {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_plain(phi, mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn block_average(f: &[f64], w: &[f64], labels: &[u32]) -> Vec<f64> {
    let n = *labels.iter().max().unwrap() as usize + 1;
    let (mut s, mut m) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..f.len() {
        s[labels[i] as usize] += f[i] * w[i];
        m[labels[i] as usize] += w[i];
    }
    labels
        .iter()
        .map(|l| {
            if m[*l as usize] > 0.0 {
                s[*l as usize] / m[*l as usize]
            } else {
                0.0
            }
        })
        .collect()
}

fn l2(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * a * b).sum::<f64>().sqrt()
}

fn families(rng: &mut impl Rng) -> Vec<YoungFunction> {
    vec![
        YoungFunction::power(rng.gen_range(1.2..4.0)).unwrap(),
        YoungFunction::power_log(rng.gen_range(1.0..3.0)).unwrap(),
        YoungFunction::ExpMinus,
    ]
}

fn c01_norm_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let space = DyadicSpace::random(10, 1).unwrap();
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for phi in families(&mut rng) {
        for _ in 0..200 {
            let set = random_set(&space, &mut rng);
            let got = norm(&SimpleFunction::indicator(&set), &phi);
            let oracle = 1.0 / inverse_plain(&phi, 1.0 / set.measure());
            worst = worst.max((got - oracle).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-8 && secs < 5.0,
        format!("max |N - 1/phi^-1(1/mu)| = {worst:.2e} (tol 1e-8), {secs:.2}s (limit 5s)"),
    )
}

fn c02_power2_is_l2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let sq = YoungFunction::power(2.0).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..200 {
        let space = DyadicSpace::random(rng.gen_range(2..11), i).unwrap();
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let f = SimpleFunction::random(&space, rng.gen(), -scale, scale);
        worst = worst.max((norm(&f, &sq) - l2(f.values(), space.weights())).abs());
    }
    verdict(worst <= 1e-8, format!("max |N - L2| = {worst:.2e} (tol 1e-8)"))
}

fn c03_dyadic_example() -> Verdict {
    let space = DyadicSpace::uniform(12).unwrap();
    let sq = YoungFunction::power(2.0).unwrap();
    let start = Instant::now();
    let trace = dyadic_example(&SimpleFunction::identity(&space), &sq, 4096).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let points = &trace[1..];
    let (mut worst, mut worst_n, mut misses) = (0.0_f64, 0, 0);
    let mut discrete = 0.0_f64;
    for &(n, err) in points {
        let n = n as f64;
        let dev = (err - 1.0 / (2.0 * 3f64.sqrt() * n)).abs();
        if dev > 1e-6 {
            misses += 1;
        }
        if dev > worst {
            (worst, worst_n) = (dev, n as usize);
        }
        // the same error on the 4096-point midpoint grid
        let grid = (1.0 / (12.0 * n * n) - 1.0 / (12.0 * 4096.0 * 4096.0)).max(0.0).sqrt();
        discrete = discrete.max((err - grid).abs());
    }
    let decreasing = points.windows(2).all(|w| w[1].1 < w[0].1);
    let last = points.last().unwrap().1;
    let pass = misses == 0 && decreasing && last < 1e-3 && secs < 10.0;
    verdict(
        pass,
        format!(
            "{misses}/12 points off 1/(2*sqrt3*n) by more than 1e-6, worst {worst:.2e} at n={worst_n}; \
             strictly decreasing {decreasing}; final {last:.2e} < 1e-3; {secs:.2}s; \
             midpoint-grid oracle agrees to {discrete:.1e}"
        ),
    )
}

fn c04_indicator_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = f64::NEG_INFINITY;
    let mut evaluated = 0;
    for i in 0..500 {
        let space = DyadicSpace::random(rng.gen_range(3..9), i).unwrap();
        let p = random_partition(&space, rng.gen_range(1..16), &mut rng);
        let seq = AlgebraSequence::constant(&p, 4).unwrap();
        let d = random_set(&space, &mut rng);
        let phi = families(&mut rng)[i as usize % 3];
        let v = indicator_bound_check(&seq, &d, &phi).unwrap();
        if v.is_finite() {
            evaluated += 1;
        }
        worst = worst.max(v);
    }
    verdict(
        worst <= 1e-9,
        format!("max lhs - rhs = {worst:.3e} over {evaluated} nondegenerate triples (tol 1e-9)"),
    )
}

fn c05_set_recovery() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..500 {
        let space = DyadicSpace::random(rng.gen_range(3..9), i).unwrap();
        let p = random_partition(&space, rng.gen_range(1..16), &mut rng);
        let seq = AlgebraSequence::constant(&p, 4).unwrap();
        let d = random_set(&space, &mut rng);
        let phi = families(&mut rng)[i as usize % 3];
        worst = worst.max(set_recovery_check(&seq, &d, &phi).unwrap());
    }
    verdict(worst <= 1e-12, format!("max violation {worst:.3e} (tol 1e-12)"))
}

fn c06_quantization() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst = f64::NEG_INFINITY;
    for phi in [
        YoungFunction::power(2.0).unwrap(),
        YoungFunction::power_log(1.0).unwrap(),
    ] {
        for levels in [1u32, 4, 16, 64] {
            for i in 0..100 {
                let space = DyadicSpace::random(rng.gen_range(3..9), i).unwrap();
                let f = SimpleFunction::random(&space, rng.gen(), 0.0, 1.0);
                let p = random_partition(&space, rng.gen_range(1..20), &mut rng);
                let g = cond_exp(&f, &p).unwrap().map(|v| v.clamp(0.0, 1.0)).unwrap();
                let err = g.sub(&quantize_levels(&g, levels).unwrap()).unwrap();
                let gap = norm(&err, &phi) - quantization_bound(&phi, space.total(), levels);
                worst = worst.max(gap);
            }
        }
    }
    verdict(
        worst <= 1e-9,
        format!("max N(g - g_N) - bound = {worst:.3e} (tol 1e-9)"),
    )
}

fn brute_meet(b: &[u32], c: &[u32]) -> Vec<usize> {
    // cells merge whenever they share a block of either partition
    let mut label: Vec<usize> = (0..b.len()).collect();
    loop {
        let mut changed = false;
        for i in 0..b.len() {
            for j in 0..b.len() {
                if (b[i] == b[j] || c[i] == c[j]) && label[j] < label[i] {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
        if !changed {
            return label;
        }
    }
}

fn c07_tower() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    for i in 0..200 {
        let space = DyadicSpace::random(6, i).unwrap();
        let f = SimpleFunction::random(&space, rng.gen(), -1.0, 1.0);
        let b = random_partition(&space, rng.gen_range(1..10), &mut rng);
        let c = random_partition(&space, rng.gen_range(1..10), &mut rng);
        worst = worst.max(tower_intersection_check(&f, &b, &c).unwrap());

        let w = space.weights();
        let meet = brute_meet(b.labels(), c.labels());
        let ec = block_average(f.values(), w, c.labels());
        let ebc = block_average(&ec, w, b.labels());
        let meet_u32: Vec<u32> = meet.iter().map(|v| *v as u32).collect();
        let em = block_average(f.values(), w, &meet_u32);
        let mut roots = meet.clone();
        roots.sort_unstable();
        roots.dedup();
        for r in roots {
            let (mut x, mut y) = (0.0, 0.0);
            for cell in (0..w.len()).filter(|&k| meet[k] == r) {
                x += ebc[cell] * w[cell];
                y += em[cell] * w[cell];
            }
            worst_oracle = worst_oracle.max((x - y).abs());
        }
    }
    verdict(
        worst <= 1e-12 && worst_oracle <= 1e-12,
        format!("max discrepancy {worst:.2e}, brute-force enumeration {worst_oracle:.2e} (tol 1e-12)"),
    )
}

fn c08_conditional_jensen() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let (mut modular_gap, mut norm_gap) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..500 {
        let space = DyadicSpace::random(rng.gen_range(2..9), i).unwrap();
        let f = SimpleFunction::random(&space, rng.gen(), -2.0, 2.0);
        let p = random_partition(&space, rng.gen_range(1..20), &mut rng);
        let phi = families(&mut rng)[i as usize % 3];
        let e = cond_exp(&f, &p).unwrap();
        let (lhs, rhs) = (modular(&e, &phi, 1.0).unwrap(), modular(&f, &phi, 1.0).unwrap());
        modular_gap = modular_gap.max((lhs - rhs) / rhs.max(1e-300));
        norm_gap = norm_gap.max(norm(&e, &phi) - norm(&f, &phi));
    }
    verdict(
        modular_gap <= 1e-12 && norm_gap <= 1e-9,
        format!("max relative modular excess {modular_gap:.2e}, max norm excess {norm_gap:.2e} (tol 1e-9)"),
    )
}

struct Case {
    name: &'static str,
    seq: AlgebraSequence,
    target: Partition,
    periodic: bool,
}

fn cases() -> Vec<Case> {
    let space = DyadicSpace::random(8, 42).unwrap();
    let uniform = DyadicSpace::uniform(8).unwrap();
    let dy = |s: &DyadicSpace, j| Partition::dyadic(s, j).unwrap();
    let sh = |s: &DyadicSpace, j| Partition::shifted_dyadic(s, j).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let r1 = random_partition(&space, 5, &mut rng);
    let r2 = random_partition(&space, 4, &mut rng);
    let r3 = random_partition(&space, 4, &mut rng);
    let r4 = random_partition(&space, 3, &mut rng);
    let w = 64;
    let case = |name, seq: AlgebraSequence, target, periodic| Case {
        name,
        seq,
        target,
        periodic,
    };
    let refining_c = AlgebraSequence::dyadic_refinement(&space, (2..=6).collect(), w).unwrap();
    let upper_c = refining_c.upper_limit().unwrap();
    // every periodic target differs from each term of its cycle, so the norm
    // trace stays away from zero on every step
    let periodic_l = AlgebraSequence::periodic(vec![dy(&space, 1), dy(&space, 3), sh(&space, 2)], 3, w).unwrap();
    vec![
        case(
            "refine to finest",
            AlgebraSequence::full_refinement(&space, w).unwrap(),
            Partition::finest(&space),
            false,
        ),
        case(
            "refine 0-5 to G_32",
            AlgebraSequence::dyadic_refinement(&uniform, (0..=5).collect(), w).unwrap(),
            dy(&uniform, 5),
            false,
        ),
        case("refine 2-6 to upper", refining_c, upper_c, false),
        case(
            "refine to G_8",
            AlgebraSequence::full_refinement(&space, w).unwrap(),
            dy(&space, 3),
            false,
        ),
        case(
            "constant G_8",
            AlgebraSequence::constant(&dy(&space, 3), w).unwrap(),
            dy(&space, 3),
            false,
        ),
        case(
            "constant random",
            AlgebraSequence::constant(&r1, w).unwrap(),
            r1.clone(),
            false,
        ),
        case(
            "constant G_16 to G_4",
            AlgebraSequence::constant(&dy(&space, 4), w).unwrap(),
            dy(&space, 2),
            false,
        ),
        case(
            "constant G_4 to G_16",
            AlgebraSequence::constant(&dy(&uniform, 2), w).unwrap(),
            dy(&uniform, 4),
            false,
        ),
        case(
            "G_4 / shifted G_4 to join",
            AlgebraSequence::periodic(vec![dy(&space, 2), sh(&space, 2)], 2, w).unwrap(),
            dy(&space, 2).join(&sh(&space, 2)).unwrap(),
            true,
        ),
        case(
            "G_4 / shifted G_4 to meet",
            AlgebraSequence::periodic(vec![dy(&uniform, 2), sh(&uniform, 2)], 2, w).unwrap(),
            Partition::trivial(&uniform),
            true,
        ),
        case(
            "random / random to third",
            AlgebraSequence::periodic(vec![r2, r3], 2, w).unwrap(),
            r4,
            true,
        ),
        case("three-cycle to G_4", periodic_l, dy(&space, 2), true),
    ]
}

/// `min over the cycle of max over f of ‖E(f|𝒜ₙ) − E(f|𝔇)‖₂`, from scratch.
fn periodic_margin(case: &Case, functions: &[SimpleFunction]) -> f64 {
    let w = case.seq.space().weights();
    let window = case.seq.window();
    let period = case.seq.period();
    let tail = window.len() - period..window.len();
    tail.map(|n| {
        functions
            .iter()
            .map(|f| {
                let a = block_average(f.values(), w, window[n].labels());
                let d = block_average(f.values(), w, case.target.labels());
                let diff: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x - y).collect();
                l2(&diff, w)
            })
            .fold(0.0, f64::max)
    })
    .fold(f64::INFINITY, f64::min)
}

fn c09_equivalence() -> Verdict {
    let sq = YoungFunction::power(2.0).unwrap();
    let mut agree = 0;
    let mut notes = Vec::new();
    let mut ok = true;
    for (i, case) in cases().iter().enumerate() {
        let functions = function_battery(&case.target, 8, i as u64);
        let duals = dual_battery(&case.seq, 32, i as u64).unwrap();
        let r = equivalence_test(&case.seq, &case.target, &functions, &duals, &sq, 1e-3).unwrap();
        let matches = r.condexp == r.muperp && r.checks_passed();
        agree += matches as usize;
        ok &= matches;
        if case.periodic {
            let measured = r.trace("condexp_norm").unwrap().tail_min();
            let oracle = periodic_margin(case, &functions);
            let fine = r.condexp == Some(false)
                && r.muperp == Some(false)
                && oracle > 0.0
                && (measured - oracle).abs() <= 1e-9 * oracle;
            ok &= fine;
            notes.push(format!("{}: margin {measured:.4} (oracle {oracle:.4})", case.name));
        }
    }
    verdict(ok, format!("{agree}/12 agree; {}", notes.join("; ")))
}

fn c10_sandwich() -> Verdict {
    let mut ok = true;
    let mut failures = Vec::new();
    for (i, case) in cases().iter().enumerate() {
        let s = sandwich_check(&case.seq, 1e-3).unwrap();
        let refining = i < 4;
        let fine = s.lower_in_amu && s.aperp_in_upper && (!refining || s.all_equal());
        if !fine {
            failures.push(case.name);
        }
        ok &= fine;
    }
    verdict(ok, format!("12 sequences, failures: {failures:?}"))
}

fn c11_best_approx() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let mut improvements = 0;
    for i in 0..100 {
        let space = DyadicSpace::random(rng.gen_range(2..7), i).unwrap();
        let p = random_partition(&space, rng.gen_range(1..13), &mut rng);
        let target = random_set(&space, &mut rng);
        let best = p.best_approx(&target).unwrap().symm_diff_measure(&target).unwrap();
        let blocks = p.block_sets();
        for bits in 0u32..(1 << blocks.len()) {
            let mut a = space.empty_set();
            for (k, b) in blocks.iter().enumerate() {
                if bits >> k & 1 == 1 {
                    a = a.union(b).unwrap();
                }
            }
            if a.symm_diff_measure(&target).unwrap() < best - 1e-15 {
                improvements += 1;
            }
        }
    }
    verdict(
        improvements == 0,
        format!("{improvements} block unions beat best_approx over 100 spaces"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("luxemburg-norm oracle", c01_norm_oracle),
        ("power(2) equals L2", c02_power2_is_l2),
        ("dyadic example", c03_dyadic_example),
        ("indicator bound", c04_indicator_bound),
        ("set recovery", c05_set_recovery),
        ("quantization bound", c06_quantization),
        ("tower on intersection", c07_tower),
        ("conditional jensen", c08_conditional_jensen),
        ("equivalence suite", c09_equivalence),
        ("sandwich", c10_sandwich),
        ("best approximation", c11_best_approx),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "acceptance {:>2} {name:<22} {status} [{:.2}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            v.detail
        );
        failed += !v.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
