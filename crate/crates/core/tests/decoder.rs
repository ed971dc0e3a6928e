use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpm3_core::fountain::{draw_with, CoefVector, PeelingDecoder, ProductSymbol, RobustSoliton, SolitonParams};
use rpm3_core::{Error, MatrixFq, PrimeField};

/// Plain Gauss-Jordan over GF(q) on the 0/1 system, one unknown per `(i, j)`.
/// Returns `None` when the symbols do not pin down every unknown.
fn oracle_solve(symbols: &[ProductSymbol], m: usize, k: usize) -> Option<BTreeMap<(usize, usize), MatrixFq>> {
    let f = symbols.first()?.value.field();
    let q = f.modulus();
    let unknowns = m * k;
    let mut rows: Vec<(Vec<u64>, MatrixFq)> = symbols
        .iter()
        .map(|s| {
            let mut row = vec![0u64; unknowns];
            for (i, &ai) in s.coef_a.bits().iter().enumerate() {
                for (j, &bj) in s.coef_b.bits().iter().enumerate() {
                    if ai && bj {
                        row[i * k + j] = 1;
                    }
                }
            }
            (row, s.value.clone())
        })
        .collect();
    let pow = |b: u64, mut e: u64| {
        let mut acc = 1u128;
        let mut base = b as u128;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q as u128;
            }
            base = base * base % q as u128;
            e >>= 1;
        }
        acc as u64
    };
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..unknowns {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r].0[col] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = pow(rows[rank].0[col], q - 2);
        rows[rank]
            .0
            .iter_mut()
            .for_each(|v| *v = (*v as u128 * inv as u128 % q as u128) as u64);
        rows[rank].1 = rows[rank].1.scale(inv);
        for r in 0..rows.len() {
            if r != rank && rows[r].0[col] != 0 {
                let factor = rows[r].0[col];
                let (pr, pv) = (rows[rank].0.clone(), rows[rank].1.clone());
                for (v, &p) in rows[r].0.iter_mut().zip(&pr) {
                    *v = (*v + q - (factor as u128 * p as u128 % q as u128) as u64) % q;
                }
                rows[r].1.add_scaled(q - factor, &pv).unwrap();
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if rank < unknowns {
        return None;
    }
    Some(
        pivots
            .iter()
            .enumerate()
            .map(|(r, &col)| ((col / k, col % k), rows[r].1.clone()))
            .collect(),
    )
}

fn symbol(truth: &[MatrixFq], a: CoefVector, b: CoefVector) -> ProductSymbol {
    let k = b.len();
    let mut value = MatrixFq::zeros(truth[0].field(), truth[0].rows(), truth[0].cols());
    for i in a.support() {
        for j in b.support() {
            value.add_assign(&truth[i * k + j]).unwrap();
        }
    }
    ProductSymbol {
        coef_a: a,
        coef_b: b,
        value,
    }
}

fn as_map(truth: &[MatrixFq], k: usize) -> BTreeMap<(usize, usize), MatrixFq> {
    truth
        .iter()
        .enumerate()
        .map(|(p, c)| ((p / k, p % k), c.clone()))
        .collect()
}

#[test]
fn exhaustive_two_by_two_over_gf5() {
    let f = PrimeField::new(5).unwrap();
    let patterns: Vec<CoefVector> = [[true, false], [false, true], [true, true]]
        .iter()
        .map(|b| CoefVector::new(b.to_vec()).unwrap())
        .collect();
    let pairs: Vec<(CoefVector, CoefVector)> = patterns
        .iter()
        .flat_map(|a| patterns.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    assert_eq!(pairs.len(), 9);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut peeled, mut full_rank, mut checked) = (0, 0, 0);
    for len in 1..=4u32 {
        for code in 0..9usize.pow(len) {
            let truth: Vec<MatrixFq> = (0..4).map(|_| MatrixFq::random(f, 1, 1, &mut rng)).collect();
            let mut c = code;
            let seq: Vec<ProductSymbol> = (0..len)
                .map(|_| {
                    let (a, b) = pairs[c % 9].clone();
                    c /= 9;
                    symbol(&truth, a, b)
                })
                .collect();
            let oracle = oracle_solve(&seq, 2, 2);

            let mut peel = PeelingDecoder::peeling_only(2, 2);
            let mut full = PeelingDecoder::new(2, 2);
            for s in &seq {
                peel.push(s.clone()).unwrap();
                full.push(s.clone()).unwrap();
            }
            if peel.is_complete() {
                peeled += 1;
                assert_eq!(Some(peel.blocks().unwrap()), oracle, "sequence {code} of length {len}");
            }
            assert_eq!(full.is_complete(), oracle.is_some());
            if let Some(o) = &oracle {
                full_rank += 1;
                assert_eq!(&full.blocks().unwrap(), o);
                assert_eq!(o, &as_map(&truth, 2));
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 9 + 81 + 729 + 6561);
    assert!(peeled > 0 && full_rank >= peeled);
}

fn random_cases(m: usize, k: usize, cases: usize, seed: u64) {
    let f = PrimeField::new(2_147_483_647).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let da = RobustSoliton::new(m, SolitonParams::default()).unwrap();
    let db = RobustSoliton::new(k, SolitonParams::default()).unwrap();
    let mut peel_done = 0;
    for _ in 0..cases {
        let truth: Vec<MatrixFq> = (0..m * k).map(|_| MatrixFq::random(f, 2, 2, &mut rng)).collect();
        let mut peel = PeelingDecoder::peeling_only(m, k);
        let mut full = PeelingDecoder::new(m, k);
        let mut seen = Vec::new();
        while !full.is_complete() {
            let s = symbol(&truth, draw_with(&da, &mut rng), draw_with(&db, &mut rng));
            seen.push(s.clone());
            peel.push(s.clone()).unwrap();
            full.push(s).unwrap();
            assert!(seen.len() < 50 * m * k, "decoder never completed");
        }
        let oracle = oracle_solve(&seen, m, k).expect("full decoder completed on a full-rank system");
        assert_eq!(full.blocks().unwrap(), oracle);
        assert_eq!(oracle, as_map(&truth, k));
        // keep feeding the peeler a little so it has a chance to finish on its own
        for _ in 0..2 * m * k {
            if peel.is_complete() {
                break;
            }
            let s = symbol(&truth, draw_with(&da, &mut rng), draw_with(&db, &mut rng));
            seen.push(s.clone());
            peel.push(s).unwrap();
        }
        if peel.is_complete() {
            peel_done += 1;
            assert_eq!(peel.blocks().unwrap(), oracle_solve(&seen, m, k).unwrap());
        }
    }
    assert!(peel_done > 0);
}

#[test]
fn random_four_by_four() {
    random_cases(4, 4, 1000, 44);
}

#[test]
fn random_eight_by_eight() {
    random_cases(8, 8, 1000, 88);
}

#[test]
fn inconsistent_symbol_is_corruption() {
    let f = PrimeField::new(257).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth: Vec<MatrixFq> = (0..4).map(|_| MatrixFq::random(f, 1, 2, &mut rng)).collect();
    let mut dec = PeelingDecoder::new(2, 2);
    let unit = |l, i| CoefVector::unit(l, i).unwrap();
    dec.push(symbol(&truth, unit(2, 0), unit(2, 0))).unwrap();
    let mut bad = symbol(&truth, unit(2, 0), unit(2, 0));
    bad.value.set(0, 0, (bad.value.get(0, 0) + 1) % 257);
    assert!(matches!(dec.push(bad), Err(Error::Corruption(_))));
}

#[test]
fn soliton_empirical_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in [4usize, 8, 64] {
        let dist = RobustSoliton::new(k, SolitonParams::default()).unwrap();
        let draws = 100_000;
        let mut counts = vec![0usize; k + 1];
        for _ in 0..draws {
            counts[dist.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[0], 0);
        let tv: f64 = (1..=k)
            .map(|d| (counts[d] as f64 / draws as f64 - dist.pmf(d)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "k = {k}: total variation {tv}");
    }
}

#[test]
fn coefficient_degrees_follow_soliton() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dist = RobustSoliton::new(8, SolitonParams::default()).unwrap();
    let draws = 100_000;
    let mut counts = [0usize; 9];
    let mut hits = [0usize; 8];
    for _ in 0..draws {
        let c = draw_with(&dist, &mut rng);
        counts[c.degree()] += 1;
        for i in c.support() {
            hits[i] += 1;
        }
    }
    let tv: f64 = (1..=8)
        .map(|d| (counts[d] as f64 / draws as f64 - dist.pmf(d)).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.01, "total variation {tv}");
    // supports are uniform: every source is hit about equally often
    let mean = hits.iter().sum::<usize>() as f64 / 8.0;
    assert!(hits.iter().all(|&h| (h as f64 - mean).abs() / mean < 0.03), "{hits:?}");
}

/// Mean overhead of the full decoder on 8 x 8 blocks with random draws.
/// Pinned from a reference run; a drift beyond the tolerance means the
/// coefficient sampler or the decoder changed behaviour.
#[test]
fn overhead_regression_eight_by_eight() {
    let f = PrimeField::new(257).unwrap();
    let da = RobustSoliton::new(8, SolitonParams::default()).unwrap();
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<MatrixFq> = (0..64).map(|_| MatrixFq::random(f, 1, 1, &mut rng)).collect();
        let mut dec = PeelingDecoder::new(8, 8);
        while !dec.is_complete() {
            dec.push(symbol(&truth, draw_with(&da, &mut rng), draw_with(&da, &mut rng)))
                .unwrap();
        }
        let eps = dec.measured_overhead().unwrap();
        total += eps;
        worst = worst.max(eps);
    }
    let mean = total / 200.0;
    println!("mean overhead {mean:.6}, worst {worst:.4}");
    assert!((mean - EXPECTED_MEAN_OVERHEAD).abs() < 1e-3, "mean overhead {mean}");
}

const EXPECTED_MEAN_OVERHEAD: f64 = 0.011094;
