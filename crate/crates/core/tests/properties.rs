use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpm3_core::gf::{interpolate, lagrange_basis, lagrange_weights, Polynomial};
use rpm3_core::master::cluster_workers;
use rpm3_core::matrix::BlockPartition;
use rpm3_core::{MatrixFq, PrimeField, DEFAULT_MODULUS};

const Q: u64 = DEFAULT_MODULUS;

fn field() -> PrimeField {
    PrimeField::new(Q).unwrap()
}

fn elem() -> impl Strategy<Value = u64> {
    prop_oneof![0..Q, Just(0), Just(1), Just(Q - 1), Just(Q - 2)]
}

fn slow_mul(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % Q as u128) as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn field_axioms(a in elem(), b in elem(), c in elem()) {
        let f = field();
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, 0), a);
        prop_assert_eq!(f.mul(a, 1), a);
        prop_assert_eq!(f.add(a, f.neg(a)), 0);
        prop_assert_eq!(f.sub(a, b), f.add(a, f.neg(b)));
        prop_assert_eq!(f.mul(a, b), slow_mul(a, b));
        if a != 0 {
            let inv = f.inv(a).unwrap();
            prop_assert_eq!(slow_mul(a, inv), 1);
        } else {
            prop_assert!(f.inv(a).is_err());
        }
    }
}

fn distinct_points(count: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<u64> = Vec::with_capacity(count);
    while out.len() < count {
        let x = rand::Rng::gen_range(&mut rng, 0..Q);
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn interpolation_inverts_evaluation(
        coeffs in prop::collection::vec(0..Q, 1..=41),
        seed in any::<u64>(),
        extra in 0usize..4,
    ) {
        let f = field();
        let p = Polynomial::new(f, coeffs);
        let xs = distinct_points(p.coeffs().len().max(1) + extra, seed);
        let samples: Vec<(u64, u64)> = xs.iter().map(|&x| (x, p.eval(x))).collect();
        prop_assert_eq!(interpolate(&f, &samples).unwrap(), p);
    }

    #[test]
    fn basis_is_delta_and_sums_to_one(count in 1usize..12, seed in any::<u64>(), x in 0..Q) {
        let f = field();
        let pts = distinct_points(count, seed);
        for (i, &pi) in pts.iter().enumerate() {
            for (j, _) in pts.iter().enumerate() {
                let v = lagrange_basis(&f, &pts, j, pi).unwrap();
                prop_assert_eq!(v, u64::from(i == j));
            }
        }
        let w = lagrange_weights(&f, &pts, x).unwrap();
        prop_assert_eq!(w.iter().fold(0, |acc, &v| f.add(acc, v)), 1);
        for (j, &wj) in w.iter().enumerate() {
            prop_assert_eq!(wj, lagrange_basis(&f, &pts, j, x).unwrap());
        }
    }

    #[test]
    fn block_products_tile_the_product(
        r in 1usize..12, s in 1usize..6, l in 1usize..12,
        m in 1usize..5, k in 1usize..5, seed in any::<u64>(),
    ) {
        prop_assume!(m <= r && k <= l);
        let f = PrimeField::new(257).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = MatrixFq::random(f, r, s, &mut rng);
        let b = MatrixFq::random(f, s, l, &mut rng);
        let part = BlockPartition::new(r, s, l, m, k).unwrap();
        let ab = part.split_a(&a).unwrap();
        let bb = part.split_b(&b).unwrap();
        let full = a.matmul(&b).unwrap();
        let (br, bc) = part.c_block_shape();
        for (i, ai) in ab.iter().enumerate() {
            for (j, bj) in bb.iter().enumerate() {
                let cij = ai.matmul(bj).unwrap();
                for x in 0..br {
                    for y in 0..bc {
                        let (gr, gc) = (i * br + x, j * bc + y);
                        let expect = if gr < r && gc < l { full.get(gr, gc) } else { 0 };
                        prop_assert_eq!(cij.get(x, y), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn clustering_invariants(
        times in prop::collection::vec(0.0f64..20.0, 3..30),
        delta in 0.05f64..5.0,
        z in 1usize..4,
    ) {
        let n = times.len();
        let input: Vec<(usize, f64)> = times.iter().copied().enumerate().collect();
        let plan = cluster_workers(&input, delta, z);
        if n < 2 * z + 1 {
            prop_assert!(plan.is_err());
            return Ok(());
        }
        let plan = plan.unwrap();
        let total: usize = plan.clusters.iter().map(|c| c.size()).sum();
        prop_assert_eq!(total, n);
        let mut last_max = f64::NEG_INFINITY;
        for (i, c) in plan.clusters.iter().enumerate() {
            let u = i + 1;
            let min = if u == 1 { 2 * z + 1 } else { z + 1 };
            prop_assert!(c.size() >= min);
            prop_assert!(c.d >= 1);
            let base = if u == 1 { 2 * z - 1 } else { z - 1 };
            prop_assert_eq!(c.d, (c.size() - base) / 2);
            if i + 1 < plan.len() {
                prop_assert_eq!(c.size(), c.required);
            }
            // fastest first
            let lo = c.members.iter().map(|&w| times[w]).fold(f64::INFINITY, f64::min);
            prop_assert!(lo >= last_max);
            last_max = c.members.iter().map(|&w| times[w]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
}
