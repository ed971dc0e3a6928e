use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpm3_core::master::{run_protocol, ProtocolConfig};
use rpm3_core::privacy::{combinations, recover_from_pair, uniformity_audit};
use rpm3_core::simnet::WorkerModel;
use rpm3_core::{Error, MatrixFq, PrimeField};

fn run_with_transcript(q: u64, n: usize, z: usize, m: usize, k: usize, seed: u64) -> rpm3_core::RunOutcome {
    let f = PrimeField::new(q).unwrap();
    let workers: Vec<_> = (0..n)
        .map(|i| WorkerModel::shifted_exp(0.5 + (i % 3) as f64, 2.0))
        .collect();
    let mut cfg = ProtocolConfig::new(f, z, m, k, workers);
    cfg.record_transcript = true;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    let a = MatrixFq::random(f, 6, 4, &mut rng);
    let b = MatrixFq::random(f, 4, 6, &mut rng);
    let out = run_protocol(&cfg, &a, &b, seed).unwrap();
    assert_eq!(out.c, a.matmul(&b).unwrap());
    out
}

#[test]
fn every_colluding_set_recovers_the_randomness() {
    let mut subsets_checked = 0;
    for (n, z) in [(5usize, 1usize), (7, 2), (8, 2), (8, 1)] {
        for seed in 0..4 {
            let out = run_with_transcript(2_147_483_647, n, z, 2, 3, seed);
            for round in &out.transcript {
                for cl in &round.clusters {
                    let Some(pair) = &cl.pair else { continue };
                    for subset in combinations(cl.tasks.len(), z) {
                        let view: Vec<_> = subset.iter().map(|&i| cl.tasks[i].clone()).collect();
                        let got = recover_from_pair(&view, pair).unwrap();
                        assert_eq!(got.r, round.r, "round {} cluster {}", round.round, cl.cluster);
                        assert_eq!(got.s, round.s);
                        subsets_checked += 1;
                    }
                    if cl.tasks.len() > z {
                        let got = recover_from_pair(&cl.tasks, pair).unwrap();
                        assert_eq!(got.r, round.r);
                    }
                }
            }
        }
    }
    assert!(subsets_checked > 100);
}

#[test]
fn too_few_shares_are_rejected() {
    let out = run_with_transcript(2_147_483_647, 7, 2, 1, 1, 3);
    let cl = &out.transcript[0].clusters[0];
    let pair = cl.pair.as_ref().unwrap();
    assert!(matches!(
        recover_from_pair(&cl.tasks[..1], pair),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn tampered_share_is_inconsistent() {
    let out = run_with_transcript(2_147_483_647, 5, 1, 1, 1, 4);
    let cl = &out.transcript[0].clusters[0];
    let pair = cl.pair.as_ref().unwrap();
    let mut tasks = cl.tasks.clone();
    let v = tasks[2].f.get(0, 0);
    tasks[2].f.set(0, 0, (v + 1) % 2_147_483_647);
    assert!(matches!(recover_from_pair(&tasks, pair), Err(Error::Protocol(_))));
}

#[test]
fn small_field_end_to_end() {
    for seed in 0..10 {
        let out = run_with_transcript(11, 5, 1, 2, 2, seed);
        assert_eq!(out.points.alphas(), &[0, 1, 2]);
        assert_eq!(out.points.betas(), &[3, 4, 5, 6, 7]);
    }
}

#[test]
fn audit_is_exactly_private() {
    for (z, n) in [(1usize, 3usize), (2, 2), (1, 1)] {
        let rep = uniformity_audit(5, z, n, false).unwrap();
        assert_eq!(rep.tv_num, 0, "z = {z}, n = {n}");
        assert!(rep.subsets.iter().all(|s| s.uniform));
        assert_eq!(rep.subsets.len(), combinations(n, z).len());
    }
    assert!(uniformity_audit(7, 2, 4, false).unwrap().is_private());
}

#[test]
fn audit_sabotage_is_detected() {
    for (z, n) in [(1usize, 3usize), (2, 2)] {
        let rep = uniformity_audit(5, z, n, true).unwrap();
        assert!(rep.tv_num > 0);
        assert!(rep.subsets.iter().all(|s| s.tv_num > 0 && !s.uniform));
    }
}

#[test]
fn audit_limits() {
    assert!(matches!(uniformity_audit(5, 2, 5, false), Err(Error::Infeasible(_))));
    assert!(matches!(uniformity_audit(6, 1, 2, false), Err(Error::NotPrime(6))));
    assert!(matches!(uniformity_audit(101, 3, 20, false), Err(Error::TooLarge(_))));
}
