use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_balance::perturbation::{
    check_eta_condition, check_u_condition, eta_from_u, first_order_eigen_slopes, lemr_point, lemr_ratio_bound,
    qform_build, qform_kernel, trace_growth_check,
};
use spectral_balance::sampling::{random_orthogonal, unit_vector, wishart_pd, wishart_set, with_spectrum};
use spectral_balance::spectral::SpectralProfile;
use spectral_balance::{BalanceError, SymMatrix};

fn spd(rng: &mut ChaCha8Rng, s: &[f64]) -> DMatrix<f64> {
    let w = random_orthogonal(rng, s.len());
    &w * DMatrix::from_diagonal(&DVector::from_column_slice(s)) * w.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lemr_point_postconditions(seed in any::<u64>(), d in 1usize..12, c0 in 0.01f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u_tilde = unit_vector(&mut rng, d);
        let (u, r) = lemr_point(&u_tilde, c0).unwrap();
        prop_assert_eq!(r, lemr_ratio_bound(d, c0));
        let min_sq = u.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
        prop_assert!((&u - &u_tilde).norm() <= c0 * (1.0 + 1e-12));
        prop_assert!(min_sq >= c0 * c0 / d as f64 * (1.0 - 1e-12));
        prop_assert!(u.norm_squared() <= 0.5 * r * r * min_sq * (1.0 + 1e-12));
    }

    #[test]
    fn u_condition_implies_eta_condition(seed in any::<u64>(), d in 2usize..8, r in 1.2f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = vec![1.0];
        for _ in 1..d {
            let last: f64 = *s.last().unwrap();
            s.push(if rng.random_bool(0.5) { last / r } else { last });
        }
        let a = spd(&mut rng, &s);
        let profile = SpectralProfile::new(&a).unwrap();
        let u = DVector::from_fn(d, |_, _| rng.random_range(0.1..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        if check_u_condition(&profile, &u, r) {
            prop_assert!(check_eta_condition(&profile, &eta_from_u(&profile, &u), r));
        }
    }

    #[test]
    fn kernel_annihilates_the_form(seed in any::<u64>(), d in 3usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(2..d);
        let s: Vec<f64> = (0..d).map(|j| if j == 0 { 1.0 } else { rng.random_range(0.1..1.0) }).collect();
        let a = spd(&mut rng, &s);
        let set = wishart_set(&mut rng, d, 2, 1e3);
        match qform_build(&a, &set, &[0, 1], k) {
            Ok(q) if q.vectors.len() < d => {
                let u = qform_kernel(&q).unwrap();
                prop_assert!((u.norm() - 1.0).abs() < 1e-12);
                prop_assert!(q.value(&u) <= 1e-18);
            }
            Ok(_) | Err(BalanceError::AlreadyBalanced(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn trace_grows_at_least_linearly(seed in any::<u64>(), d in 2usize..7, eps in 1e-4f64..0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..d).map(|j| if j == 0 { 1.0 } else { rng.random_range(0.05..1.0) }).collect();
        let a = spd(&mut rng, &s);
        let m = wishart_pd(&mut rng, d, 1e3);
        let eta = unit_vector(&mut rng, d) * rng.random_range(0.1..3.0);
        prop_assert!(trace_growth_check(&a, &m, &eta, eps).pass);
    }

    #[test]
    fn slopes_match_central_differences(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..5.0)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let b = with_spectrum(&mut rng, &values);
        let eta = unit_vector(&mut rng, d);
        let slopes = first_order_eigen_slopes(&b, &eta).unwrap();
        let h = 1e-5;
        let at = |eps: f64| {
            let f = DMatrix::<f64>::identity(d, d) + &eta * eta.transpose() * eps;
            SymMatrix::symmetrize(&(&f * b.matrix() * &f)).eig().values
        };
        let (plus, minus) = (at(h), at(-h));
        // Only the top eigenvalue is compared: lower ones may be clustered
        // with a neighbour, where a one-sided slope is not a derivative.
        let central = (plus[0] - minus[0]) / (2.0 * h);
        let gap = values[0] - values[1];
        if gap > 1e-2 {
            prop_assert!((central - slopes[0].1).abs() <= 1e-5 * (1.0 + values[0]), "{} vs {}", central, slopes[0].1);
        }
    }
}

#[test]
fn repeated_top_eigenvalue_splits_one_copy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = with_spectrum(&mut rng, &[3.0, 3.0, 1.0]);
    let eta = unit_vector(&mut rng, 3);
    let slopes = first_order_eigen_slopes(&b, &eta).unwrap();
    assert_eq!(slopes[1].1, 0.0);
    let h = 1e-6;
    let f = DMatrix::<f64>::identity(3, 3) + &eta * eta.transpose() * h;
    let moved = SymMatrix::symmetrize(&(&f * b.matrix() * &f)).eig().values;
    assert!(((moved[0] - 3.0) / h - slopes[0].1).abs() < 1e-4);
    assert!(((moved[1] - 3.0) / h).abs() < 1e-4);
}
