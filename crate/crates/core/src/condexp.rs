//! Conditional expectation onto a partition, its orthogonal complement, and
//! level quantization.

use crate::error::{domain, Result};
use crate::measure::Partition;
use crate::orlicz::SimpleFunction;
use crate::young::Young;

/// `E(f | P)`: on each block, the weighted block average of `f`.
///
/// Blocks of zero mass get the value 0.
pub fn cond_exp(f: &SimpleFunction, partition: &Partition) -> Result<SimpleFunction> {
    f.space().ensure_same(partition.space())?;
    let n = partition.n_blocks();
    let mut sums = vec![0.0; n];
    let mut masses = vec![0.0; n];
    for ((v, w), l) in f.values().iter().zip(f.space().weights()).zip(partition.labels()) {
        sums[*l as usize] += v * w;
        masses[*l as usize] += w;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&masses)
        .map(|(s, m)| if *m > 0.0 { s / m } else { 0.0 })
        .collect();
    SimpleFunction::from_values(
        f.space(),
        partition.labels().iter().map(|l| means[*l as usize]).collect(),
    )
}

/// `E^⊥(f) = f − E(f | P)`.
pub fn orth_complement(f: &SimpleFunction, partition: &Partition) -> Result<SimpleFunction> {
    f.sub(&cond_exp(f, partition)?)
}

/// Floors each value of a `[0, 1]`-valued function onto the grid
/// `{0, 1/N, …, 1}`: a value in `[(k−1)/N, k/N)` becomes `(k−1)/N`.
pub fn quantize_levels(g: &SimpleFunction, levels: u32) -> Result<SimpleFunction> {
    if levels == 0 {
        return domain("quantization needs N >= 1");
    }
    if g.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return domain("quantization needs 0 <= g <= 1");
    }
    let n = levels as f64;
    g.map(|v| {
        let mut k = (v * n).floor();
        if k / n > v {
            k -= 1.0;
        }
        k / n
    })
}

/// `(φ(1)·μ(Ω) + 1) / N`, the Luxemburg-norm bound on the quantization error.
pub fn quantization_bound<Y: Young + ?Sized>(phi: &Y, total_mass: f64, levels: u32) -> f64 {
    (phi.value(1.0) * total_mass + 1.0) / levels as f64
}

/// Largest `|∫_D E_B(E(f|C)) dμ − ∫_D E(f | B∩C) dμ|` over the blocks `D` of
/// `B ∧ C`. Both integrals equal `∫_D f`, so the result is pure rounding.
pub fn tower_intersection_check(f: &SimpleFunction, b: &Partition, c: &Partition) -> Result<f64> {
    let meet = b.meet(c)?;
    let lhs = cond_exp(&cond_exp(f, c)?, b)?;
    let rhs = cond_exp(f, &meet)?;
    let mut worst = 0.0_f64;
    for block in meet.block_sets() {
        let d = (lhs.integrate_over(&block)? - rhs.integrate_over(&block)?).abs();
        worst = worst.max(d);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DyadicSpace;
    use crate::orlicz::{modular, norm};
    use crate::young::YoungFunction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_partition(space: &DyadicSpace, blocks: usize, rng: &mut impl Rng) -> Partition {
        let labels: Vec<usize> = (0..space.n_cells()).map(|_| rng.gen_range(0..blocks)).collect();
        Partition::from_labels(space, &labels).unwrap()
    }

    fn close(a: &SimpleFunction, b: &SimpleFunction, tol: f64) -> bool {
        a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn trivial_partition_gives_mean() {
        let s = DyadicSpace::uniform(8).unwrap();
        let e = cond_exp(&SimpleFunction::identity(&s), &Partition::trivial(&s)).unwrap();
        assert!(e.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn finest_partition_is_identity_map() {
        let s = DyadicSpace::random(6, 1).unwrap();
        let f = SimpleFunction::random(&s, 4, -2.0, 2.0);
        assert!(close(&cond_exp(&f, &Partition::finest(&s)).unwrap(), &f, 1e-15));
    }

    #[test]
    fn two_block_dyadic_example() {
        // n = 2: E(x | G_2) is 1/4 on [0,1/2) and 3/4 on [1/2,1)
        for k in 1..=8 {
            let s = DyadicSpace::uniform(k).unwrap();
            let e = cond_exp(&SimpleFunction::identity(&s), &Partition::dyadic(&s, 1).unwrap()).unwrap();
            let half = s.n_cells() / 2;
            assert!(e.values()[..half].iter().all(|v| (v - 0.25).abs() < 1e-15));
            assert!(e.values()[half..].iter().all(|v| (v - 0.75).abs() < 1e-15));
        }
    }

    #[test]
    fn zero_mass_block_gets_zero() {
        let s = DyadicSpace::from_weights(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let p = Partition::dyadic(&s, 1).unwrap();
        let f = SimpleFunction::from_values(&s, vec![5.0, 7.0, 1.0, 3.0]).unwrap();
        assert_eq!(cond_exp(&f, &p).unwrap().values(), &[0.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn orth_complement_examples() {
        let s = DyadicSpace::uniform(6).unwrap();
        let halves = Partition::dyadic(&s, 1).unwrap();
        let c = orth_complement(&SimpleFunction::constant(&s, 3.0), &halves).unwrap();
        assert!(c.is_null());
        let measurable = cond_exp(&SimpleFunction::random(&s, 1, 0.0, 1.0), &halves).unwrap();
        assert!(orth_complement(&measurable, &halves)
            .unwrap()
            .values()
            .iter()
            .all(|v| v.abs() < 1e-15));
        let saw = orth_complement(&SimpleFunction::identity(&s), &halves).unwrap();
        for b in halves.block_sets() {
            assert!(saw.integrate_over(&b).unwrap().abs() < 1e-15);
        }
        assert!((saw.values()[0] - (s.midpoint(0) - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn averaging_idempotence_linearity() {
        let s = DyadicSpace::random(6, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..30 {
            let p = random_partition(&s, rng.gen_range(1..10), &mut rng);
            let f = SimpleFunction::random(&s, seed, -1.0, 1.0);
            let g = SimpleFunction::random(&s, seed + 100, -1.0, 1.0);
            let e = cond_exp(&f, &p).unwrap();
            // every block union D
            let blocks = p.block_sets();
            for bits in 0u32..(1 << blocks.len().min(9)) {
                let mut d = s.empty_set();
                for (i, b) in blocks.iter().enumerate().take(9) {
                    if bits >> i & 1 == 1 {
                        d = d.union(b).unwrap();
                    }
                }
                let (x, y) = (e.integrate_over(&d).unwrap(), f.integrate_over(&d).unwrap());
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
            assert!(close(&cond_exp(&e, &p).unwrap(), &e, 1e-15));
            let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let lhs = cond_exp(&f.scale(a).add(&g.scale(b)).unwrap(), &p).unwrap();
            let rhs = e.scale(a).add(&cond_exp(&g, &p).unwrap().scale(b)).unwrap();
            assert!(close(&lhs, &rhs, 1e-12));
        }
    }

    #[test]
    fn tower_for_nested_partitions() {
        let s = DyadicSpace::random(6, 2).unwrap();
        let fine = Partition::dyadic(&s, 4).unwrap();
        let coarse = Partition::dyadic(&s, 2).unwrap();
        let f = SimpleFunction::random(&s, 8, -1.0, 1.0);
        let two_step = cond_exp(&cond_exp(&f, &fine).unwrap(), &coarse).unwrap();
        assert!(close(&two_step, &cond_exp(&f, &coarse).unwrap(), 1e-14));
    }

    #[test]
    fn conditional_jensen_contraction() {
        let s = DyadicSpace::random(6, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let phis = [
            YoungFunction::power(2.0).unwrap(),
            YoungFunction::power_log(1.0).unwrap(),
            YoungFunction::ExpMinus,
        ];
        for seed in 0..40 {
            let p = random_partition(&s, rng.gen_range(1..12), &mut rng);
            let f = SimpleFunction::random(&s, seed, -4.0, 4.0);
            let e = cond_exp(&f, &p).unwrap();
            for phi in &phis {
                let alpha = rng.gen_range(0.1..2.0);
                let lhs = modular(&e, phi, 1.0 / alpha).unwrap();
                let rhs = modular(&f, phi, 1.0 / alpha).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-12));
                assert!(norm(&e, phi) <= norm(&f, phi) + 1e-9);
            }
        }
    }

    #[test]
    fn quantize_examples() {
        let s = DyadicSpace::uniform(4).unwrap();
        let zero = SimpleFunction::zero(&s);
        assert_eq!(quantize_levels(&zero, 7).unwrap(), zero);
        let q = quantize_levels(&SimpleFunction::constant(&s, 0.35), 10).unwrap();
        assert!(q.values().iter().all(|v| (v - 0.3).abs() < 1e-15));
        let one = quantize_levels(&SimpleFunction::constant(&s, 1.0), 4).unwrap();
        assert!(one.values().iter().all(|v| *v == 1.0));
        assert!(quantize_levels(&SimpleFunction::constant(&s, 1.2), 4).is_err());
        assert!(quantize_levels(&SimpleFunction::constant(&s, -0.1), 4).is_err());
        assert!(quantize_levels(&zero, 0).is_err());
    }

    #[test]
    fn quantize_floors_onto_grid() {
        let s = DyadicSpace::uniform(8).unwrap();
        for n in [1u32, 3, 10, 64] {
            let g = SimpleFunction::random(&s, n as u64, 0.0, 1.0);
            let q = quantize_levels(&g, n).unwrap();
            for (a, b) in g.values().iter().zip(q.values()) {
                assert!(b <= a && a - b < 1.0 / n as f64);
                assert!(((b * n as f64).round() - b * n as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quantization_norm_bound() {
        let s = DyadicSpace::random(6, 5).unwrap();
        for phi in [
            YoungFunction::power(2.0).unwrap(),
            YoungFunction::power_log(2.0).unwrap(),
        ] {
            for n in [1u32, 4, 16, 64] {
                let g = SimpleFunction::random(&s, 40 + n as u64, 0.0, 1.0);
                let err = g.sub(&quantize_levels(&g, n).unwrap()).unwrap();
                assert!(norm(&err, &phi) <= quantization_bound(&phi, s.total(), n) + 1e-9);
            }
        }
    }

    #[test]
    fn tower_intersection_examples() {
        let s = DyadicSpace::random(6, 3).unwrap();
        let f = SimpleFunction::random(&s, 9, -1.0, 1.0);
        let b = Partition::dyadic(&s, 3).unwrap();
        assert!(tower_intersection_check(&f, &b, &b).unwrap() < 1e-15);
        let t = Partition::trivial(&s);
        assert!(tower_intersection_check(&f, &t, &b).unwrap() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let b = random_partition(&s, rng.gen_range(1..8), &mut rng);
            let c = random_partition(&s, rng.gen_range(1..8), &mut rng);
            assert!(tower_intersection_check(&f, &b, &c).unwrap() <= 1e-12);
        }
    }
}
