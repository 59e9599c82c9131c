//! Values frozen from independent high-precision arithmetic and brute-force
//! oracles.

use edm_coherence::completion::{complete_from_truth, sample_mask, MaskMode, SvtParams};
use edm_coherence::edm::RANK_REL_TOL;
use edm_coherence::nalgebra::DMatrix;
use edm_coherence::theory::{self, sample_complexity};
use edm_coherence::{
    build_edm, factor_edm, make_distribution, numerical_rank, sample_coordinates, Distribution,
    DistributionSpec, MomentSet,
};

fn uniform() -> Distribution {
    make_distribution(DistributionSpec::uniform(-1.0, 1.0)).unwrap()
}

fn uniform_moments() -> MomentSet {
    uniform().moments
}

const CLOSED_FORM_THETA: [f64; 10] = [
    37.82306177079,
    59.2208081984205,
    104.43142433887,
    178.098298135147,
    286.96511192423,
    438.213618765973,
    639.188017339758,
    897.304676171168,
    1220.01547648409,
    1614.79115000805,
];

#[test]
fn closed_form_theta_table() {
    for (i, want) in CLOSED_FORM_THETA.iter().enumerate() {
        let d = i + 1;
        let got = theory::theta_closed_form(d).unwrap();
        assert!((got - want).abs() <= 1e-9 * want, "d={d}: {got} vs {want}");
        let general = theory::theta(&uniform_moments(), d).unwrap();
        assert!(
            (general - want).abs() <= 1e-9 * want,
            "d={d}: {general} vs {want}"
        );
    }
}

#[test]
fn lambda_star_values() {
    let m = uniform_moments();
    let cases = [(1, 0.0793166882728897), (3, 0.12448360330523)];
    for (d, want) in cases {
        let got = theory::lambda_star_general(&m, d).unwrap();
        assert!((got - want).abs() < 1e-13, "d={d}: {got}");
    }
    let sym = theory::lambda_star_symmetric(&m, 2).unwrap();
    assert!((sym - 0.236403393096101).abs() < 1e-13);
    let p3 = theory::prior_work_lambda_min(3).unwrap();
    assert!((p3.lambda_min - 0.124484).abs() < 1e-6);
    let p1 = theory::prior_work_lambda_min(1).unwrap();
    assert!((p1.lambda_min - 0.0793166882728897).abs() < 1e-12);
}

#[test]
fn chernoff_at_and_below_n_min() {
    let th = CLOSED_FORM_THETA[1];
    let at = theory::chernoff_failure(th, 2, 0.5, 1748);
    let below = theory::chernoff_failure(th, 2, 0.5, 1747);
    assert!((at.eps - 0.0999298172545969).abs() < 1e-12);
    assert!((below.eps - 0.100140966337367).abs() < 1e-12);
    assert!(!at.vacuous);
}

#[test]
fn sample_complexity_at_n_min() {
    let th = theory::theta(&uniform_moments(), 2).unwrap();
    let mu0 = theory::mu0(th, 2, 0.5);
    let mu1 = theory::mu1(th, 2, 0.5);
    let sc = sample_complexity(mu0, mu1, 1748.0, 4, 3.0, 1.0).unwrap();
    // 549253150.37 from 30-digit arithmetic
    assert!(sc.m_general.abs_diff(549_253_151) <= 1);
    assert!(sc.general_vacuous);
    assert!(sc.m_improved.is_none());
    let threshold = 1748f64.powf(0.2) / mu0;
    assert!((threshold - 0.150336332510326).abs() < 1e-12);
}

#[test]
fn cli_style_rounded_moments() {
    let m = MomentSet::new(0.333333, 0.0, 0.2, 1.0).unwrap();
    let th = theory::theta(&m, 2).unwrap();
    assert!((th - CLOSED_FORM_THETA[1]).abs() < 1e-3);
}

/// Brute-force squared distances, one coordinate at a time.
fn oracle_edm(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..p.ncols() {
        for i in 0..n {
            for j in 0..n {
                let g = p[(i, k)] - p[(j, k)];
                out[(i, j)] += g * g;
            }
        }
    }
    out
}

#[test]
fn edm_matches_brute_force() {
    let cloud = sample_coordinates(&uniform(), 30, 3, 11).unwrap();
    let e = build_edm(&cloud).unwrap();
    assert!((&e.entries - oracle_edm(&cloud.coords)).abs().max() <= 1e-14);
    assert_eq!(e.entries, e.entries.transpose());
    let bound = 3.0 * 4.0;
    assert!(e.entries.iter().all(|&v| (0.0..=bound).contains(&v)));
}

#[test]
fn factorization_reconstructs() {
    let cloud = sample_coordinates(&uniform(), 50, 2, 3).unwrap();
    let e = build_edm(&cloud).unwrap().entries;
    let rec = factor_edm(&cloud).unwrap().reconstruct();
    assert!((&rec - &e).abs().max() <= 1e-12 * e.max());
    for i in 0..50 {
        assert!(rec[(i, i)].abs() <= 1e-14);
    }
}

#[test]
fn generic_cloud_rank() {
    let cloud = sample_coordinates(&uniform(), 50, 2, 5).unwrap();
    let e = build_edm(&cloud).unwrap();
    assert_eq!(numerical_rank(&e, RANK_REL_TOL).unwrap(), 4);
    // nalgebra's dense eigensolver as a second opinion
    let ev = e.entries.clone().symmetric_eigenvalues();
    let s1 = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert_eq!(ev.iter().filter(|v| v.abs() > 1e-10 * s1).count(), 4);
}

#[test]
fn permutation_permutes_edm() {
    let cloud = sample_coordinates(&uniform(), 12, 2, 17).unwrap();
    let perm: Vec<usize> = (0..12).map(|i| (i * 5 + 3) % 12).collect();
    let permuted = edm_coherence::NodeCloud::from_coords(DMatrix::from_fn(12, 2, |i, j| {
        cloud.coords[(perm[i], j)]
    }));
    let a = build_edm(&cloud).unwrap().entries;
    let b = build_edm(&permuted).unwrap().entries;
    for i in 0..12 {
        for j in 0..12 {
            assert_eq!(b[(i, j)], a[(perm[i], perm[j])]);
        }
    }
}

#[test]
fn svt_recovers_n100_instance() {
    let n = 100;
    let cloud = sample_coordinates(&uniform(), n, 2, 77).unwrap();
    let truth = build_edm(&cloud).unwrap().entries;
    let mask = sample_mask(n, 3500, MaskMode::SymmetricOffdiag, 78).unwrap();
    let mut params = SvtParams::standard(n, 3500, 2);
    params.max_iter = 500;
    let res = complete_from_truth(&truth, &mask, &params).unwrap();
    assert!(res.rel_error.unwrap() <= 1e-3, "{:?}", res.rel_error);
    assert!(res.iterations <= 500);
    assert!((&res.estimate - res.estimate.transpose()).abs().max() <= 1e-12);
}

#[test]
fn full_observation_is_exact() {
    let n = 15;
    let truth = build_edm(&sample_coordinates(&uniform(), n, 2, 4).unwrap())
        .unwrap()
        .entries;
    let mask = sample_mask(n, n * n, MaskMode::AllEntries, 1).unwrap();
    let res = complete_from_truth(&truth, &mask, &SvtParams::standard(n, n * n, 2)).unwrap();
    assert!(res.rel_error.unwrap() <= 1e-12);
}
