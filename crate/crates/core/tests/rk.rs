mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varleb::field::{BoxDomain, FunctionDescriptor, Grid, GridFunction, Region, WeightField};
use varleb::maximal::RadiusSweep;
use varleb::rk::*;

fn random_family(seed: u64, g: &Arc<Grid>) -> FunctionFamily {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = r.gen_range(2..8);
    FunctionFamily::new((0..n).map(|_| function(&mut r, g)).collect(), "random").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tail_profile_is_nonincreasing(seed in any::<u64>(), x0 in -1.0f64..2.0) {
        let g = line(-1.0, 2.0, 301);
        let fam = random_family(seed, &g);
        let p = exponent(&mut ChaCha8Rng::seed_from_u64(seed ^ 1), g.domain(), 1.2, 4.0);
        let radii: Vec<f64> = (0..20).map(|k| 0.15 * k as f64).collect();
        let prof = vanishing_profile(&fam, &p, &WeightField::unit(&g), &[x0], &radii, 0.0).unwrap();
        for w in prof.sup_values.windows(2) {
            prop_assert!(w[1] <= w[0] && w[1] >= 0.0);
        }
    }

    #[test]
    fn net_size_is_nonincreasing_in_eps(seed in any::<u64>()) {
        let g = line(-1.0, 2.0, 201);
        let fam = random_family(seed, &g);
        let p = constant(g.domain(), 2.0);
        let dist = distance_matrix(&fam, &p, &WeightField::unit(&g)).unwrap();
        let diam = dist.iter().flatten().copied().fold(0.0, f64::max);
        let mut prev = usize::MAX;
        for k in 0..10 {
            let net = greedy_net(&dist, diam * 2f64.powi(-k) + 1e-300);
            prop_assert!(net.size >= 1 && net.size <= fam.len());
            for (i, &c) in net.assignment.iter().enumerate() {
                prop_assert!(dist[i][c] <= net.eps);
            }
            prop_assert!(prev == usize::MAX || net.size >= prev);
            prev = net.size;
        }
    }
}

#[test]
fn classify_is_deterministic() {
    let g = Arc::new(Grid::line(-1.0, 2.0, 1024).unwrap());
    let fam = FamilyDescriptor::new(FunctionDescriptor::indicator(vec![0.0], vec![1.0]), GeneratorKind::Mollify, 5, 0.1)
        .generate(&g)
        .unwrap();
    let p = constant(g.domain(), 2.0);
    let w = WeightField::unit(&g);
    let a = classify(&fam, &p, &w, 1.0, &RkConfig::default()).unwrap();
    let b = classify(&fam, &p, &w, 1.0, &RkConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn translates_of_unit_indicator_keep_unit_tail() {
    let g = line(0.0, 10.0, 2001);
    let members: Vec<_> = (0..9)
        .map(|k| GridFunction::indicator(&g, &Region::boxed(&[k as f64], &[k as f64 + 1.0])))
        .collect();
    let fam = FunctionFamily::new(members, "translates").unwrap();
    let radii: Vec<f64> = (0..=9).map(f64::from).collect();
    let prof = vanishing_profile(&fam, &constant(g.domain(), 2.0), &WeightField::unit(&g), &[0.0], &radii, 1e-2).unwrap();
    for (r, v) in radii.iter().zip(&prof.sup_values) {
        if *r < 9.0 {
            assert!((v - 1.0).abs() <= g.min_step(), "R = {r}: {v}");
        }
    }
    assert_eq!(prof.verdict, Verdict::Fail);
}

#[test]
fn mollified_bumps_are_equicontinuous() {
    let g = line(-2.0, 2.0, 2001);
    let members: Vec<_> = (0..5)
        .map(|k| FunctionDescriptor::bump(vec![0.0], 0.5 + 0.2 * k as f64).sample(&g).unwrap())
        .collect();
    let fam = FunctionFamily::new(members, "dilated bumps").unwrap();
    let sweep = RadiusSweep::geometric(0.004, 0.256, 7).unwrap();
    let prof = equicontinuity_profile(&fam, &constant(g.domain(), 2.0), &WeightField::unit(&g), 1.0, &sweep, 1e-2).unwrap();
    // roughly linear in r once the ball holds a few nodes
    for w in prof.sup_values[2..].windows(2) {
        assert!(w[1] >= w[0] && w[1] <= 2.2 * w[0], "{:?}", prof.sup_values);
    }
    assert_eq!(prof.verdict, Verdict::Pass);
}

#[test]
fn dyadic_oscillations_are_not_equicontinuous() {
    let g = line(-0.5, 1.5, 4096);
    let chi = GridFunction::indicator(&g, &Region::boxed(&[0.0], &[1.0]));
    let members: Vec<_> = (0..7)
        .map(|j| {
            let k = 2f64.powi(j);
            chi.mul(&GridFunction::from_fn(&g, |x| (k * x[0]).sin()).unwrap()).unwrap()
        })
        .collect();
    let fam = FunctionFamily::new(members, "oscillations").unwrap();
    let sweep = RadiusSweep::geometric(0.01, 0.08, 4).unwrap();
    let prof = equicontinuity_profile(&fam, &constant(g.domain(), 2.0), &WeightField::unit(&g), 1.0, &sweep, 1e-2).unwrap();
    assert!(prof.sup_values[0] >= 0.1, "{:?}", prof.sup_values);
    assert_eq!(prof.verdict, Verdict::Fail);
}

#[test]
fn net_examples() {
    let g = line(-1.0, 2.0, 1024);
    let p = constant(g.domain(), 2.0);
    let w = WeightField::unit(&g);
    let f = FunctionDescriptor::gaussian(vec![0.5], 0.3).sample(&g).unwrap();
    let copies = FunctionFamily::new(vec![f; 10], "copies").unwrap();
    assert_eq!(eps_net_oracle(&copies, &p, &w, 1e-12).unwrap().size, 1);

    let moll = FamilyDescriptor::new(FunctionDescriptor::indicator(vec![0.0], vec![1.0]), GeneratorKind::Mollify, 5, 0.1)
        .generate(&g)
        .unwrap();
    let dist = distance_matrix(&moll, &p, &w).unwrap();
    let diam = dist.iter().flatten().copied().fold(0.0, f64::max);
    assert_eq!(greedy_net(&dist, diam).size, 1);
}

#[test]
fn classification_of_canonical_families() {
    let chi = FunctionDescriptor::indicator(vec![0.0], vec![1.0]);
    let cases = [
        (FamilyDescriptor::new(chi.clone(), GeneratorKind::Mollify, 5, 0.1), (-1.0, 2.0), 0.5, RkVerdict::ConsistentCompact, vec![]),
        (
            FamilyDescriptor::new(FunctionDescriptor::bump(vec![0.5], 0.5), GeneratorKind::Translate, 10, 1.0),
            (0.0, 10.5),
            0.0,
            RkVerdict::ConsistentNoncompact,
            vec![Clause::Vanishing],
        ),
        (FamilyDescriptor::new(chi, GeneratorKind::Modulate, 7, 1.0), (-0.5, 1.5), 0.5, RkVerdict::ConsistentNoncompact, vec![Clause::Equicontinuity]),
    ];
    for (desc, (lo, hi), x0, verdict, failing) in cases {
        let g = Arc::new(Grid::with_default_resolution(BoxDomain::interval(lo, hi)).unwrap());
        let config = RkConfig {
            x0: Some(vec![x0]),
            ..Default::default()
        };
        let rep = classify(&desc.generate(&g).unwrap(), &constant(g.domain(), 2.0), &WeightField::unit(&g), 1.0, &config).unwrap();
        assert_eq!(rep.verdict, verdict, "{}", rep.label);
        assert_eq!(rep.failing_clauses, failing);
        let json = serde_json::to_value(&rep).unwrap();
        assert!(json["verdict"].as_str().unwrap().starts_with("consistent-"));
    }
}

#[test]
fn classify_checks_the_weight_hypothesis() {
    let g = line(0.0, 1.0, 257);
    let fam = FunctionFamily::new(vec![GridFunction::constant(&g, 1.0)], "one").unwrap();
    let w = WeightField::from_fn(&g, |x| if x[0] < 0.5 { 1e-200 } else { 1.0 }).unwrap();
    let err = classify(&fam, &constant(g.domain(), 2.0), &w, 1.0, &RkConfig::default());
    assert!(matches!(err, Err(varleb::Error::HypothesisFailure(_))));
}
