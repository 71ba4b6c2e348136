use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pir_core::baselines::{Example2Scheme, SharingScheme};
use pir_core::oracle::{brute_errorfree, brute_privacy, LinearScheme};
use pir_core::retrieval::{cyclic_v_for, decode_system, queries_for_mask};
use pir_core::storage::store;
use pir_core::{
    check_privacy, check_retrievability, construct, decode, encode_record, gen_queries, make_mds_parity, random_v,
    respond, CollusionPattern, ConstructOptions, FieldMatrix, ParityCheck, PrimeField, SystemParams,
};

fn all_ones(field: PrimeField, k: usize) -> ParityCheck {
    ParityCheck::new(FieldMatrix::from_fn(field, k, 1, |_, _| 1)).unwrap()
}

#[test]
fn exhaustive_sweep_over_gf2() {
    let p = SystemParams::new(2, 2, 3, 1, 1, 2, 2).unwrap();
    let parity = all_ones(p.field, 3);
    let phi = CollusionPattern::singletons(3);
    let mut certified = 0;
    for seed in 0..400 {
        let v = random_v(&p, &mut ChaCha8Rng::seed_from_u64(seed));
        if check_retrievability(&parity, &v, &p) && check_privacy(&v, &phi, &p).private {
            let scheme = LinearScheme::new(&parity, &v, p);
            assert_eq!(scheme.exhaustive_round_trip(), Ok(true), "seed {seed}");
            assert_eq!(brute_privacy(&scheme, &phi), Ok(true), "seed {seed}");
            certified += 1;
            if certified == 5 {
                break;
            }
        }
    }
    assert!(certified > 0);
}

#[test]
fn certified_schemes_decode_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (q, k, s) in [(65537, 3, 1), (65537, 5, 2), (101, 6, 3), (7, 4, 2)] {
        let built = construct(&ConstructOptions { n: 3, ..ConstructOptions::new(q, k, s) }).unwrap();
        let (p, parity, v) = (built.scheme.params, &built.scheme.parity, &built.scheme.v);
        for _ in 0..20 {
            let records: Vec<_> = (0..p.n)
                .map(|_| {
                    let info: Vec<u32> = (0..p.info_len()).map(|_| p.field.random(&mut rng)).collect();
                    encode_record(&info, p.l, parity).unwrap()
                })
                .collect();
            let nodes = store(&records, parity).unwrap();
            let m = rng.random_range(1..=p.n);
            let (_, queries) = gen_queries(v, m, &p, &mut rng).unwrap();
            let answers: Vec<_> = nodes.iter().zip(&queries).map(|(x, q)| respond(x, q, p.field).unwrap()).collect();
            assert_eq!(decode(v, parity, &answers, m, &p).unwrap(), records[m - 1]);
        }
    }
}

#[test]
fn algebra_never_overclaims_on_tiny_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let phi = CollusionPattern::singletons(3);
    for _ in 0..30 {
        let q = if rng.random_bool(0.5) { 2 } else { 3 };
        let p = SystemParams::new(q, 2, 3, 1, 1, 2, rng.random_range(1..=2)).unwrap();
        let parity = all_ones(p.field, 3);
        let v = random_v(&p, &mut rng);
        let scheme = LinearScheme::new(&parity, &v, p);
        if check_retrievability(&parity, &v, &p) {
            assert_eq!(brute_errorfree(&scheme), Ok(true));
        }
        if check_privacy(&v, &phi, &p).private {
            assert_eq!(brute_privacy(&scheme, &phi), Ok(true));
        }
    }
}

#[test]
fn cyclic_v_leaks_through_exhaustive_oracle() {
    let p = SystemParams::balanced(3, 2, 3, 1).unwrap();
    let parity = make_mds_parity(3, 1, p.field).unwrap();
    let v = cyclic_v_for(&p);
    let scheme = LinearScheme::new(&parity, &v, p);
    assert!(check_retrievability(&parity, &v, &p));
    assert_eq!(brute_privacy(&scheme, &CollusionPattern::singletons(3)), Ok(false));
}

#[test]
fn baselines_pass_their_oracles() {
    let f = PrimeField::new(2).unwrap();
    let sharing = SharingScheme::new(f, 2, 2).unwrap();
    assert_eq!(brute_privacy(&sharing, &CollusionPattern::singletons(2)), Ok(true));
    assert_eq!(brute_errorfree(&sharing), Ok(true));
    assert_eq!(brute_privacy(&Example2Scheme, &CollusionPattern::singletons(3)), Ok(true));
    assert_eq!(brute_errorfree(&Example2Scheme), Ok(true));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Answers are linear in the records: A(D + D') = A(D) + A(D').
    #[test]
    fn answers_are_linear(seed in any::<u64>(), m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = SystemParams::balanced(13, 2, 4, 2).unwrap();
        let parity = make_mds_parity(4, 2, p.field).unwrap();
        let v = random_v(&p, &mut rng);
        let mut draw = || -> Vec<_> {
            (0..p.n).map(|_| {
                let info: Vec<u32> = (0..p.info_len()).map(|_| p.field.random(&mut rng)).collect();
                encode_record(&info, p.l, &parity).unwrap()
            }).collect()
        };
        let (a, b) = (draw(), draw());
        let sum: Vec<_> = a.iter().zip(&b).map(|(x, y)| {
            let m = FieldMatrix::from_fn(p.field, p.l, p.k, |i, j| p.field.add(x.get(i, j), y.get(i, j)));
            pir_core::RecordMatrix::new(m, &parity).unwrap()
        }).collect();
        let mask = pir_core::MaskMatrix::random(&p, &mut rng);
        let queries = queries_for_mask(&v, m, &p, &mask).unwrap();
        let answer = |recs: &[pir_core::RecordMatrix]| -> Vec<u32> {
            store(recs, &parity).unwrap().iter().zip(&queries)
                .flat_map(|(x, q)| respond(x, q, p.field).unwrap().values).collect()
        };
        let (aa, ab, asum) = (answer(&a), answer(&b), answer(&sum));
        for i in 0..asum.len() {
            prop_assert_eq!(asum[i], p.field.add(aa[i], ab[i]));
        }
    }

    // The decoding system has exactly as many unknowns as the layout says.
    #[test]
    fn decode_system_shape(k in 2usize..7, s_off in 0usize..5) {
        let s = 1 + s_off % (k - 1);
        let p = SystemParams::balanced(65537, 2, k, s).unwrap();
        let parity = make_mds_parity(k, s, p.field).unwrap();
        let sys = decode_system(&cyclic_v_for(&p), &parity, &p);
        prop_assert_eq!(sys.shape(), (s * p.v_rows() + k * p.r, k * p.v_rows()));
    }
}
