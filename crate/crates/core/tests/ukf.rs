mod oracles;

use nalgebra::{DMatrix, DVector};
use oracles::{kalman, random_matrix, random_spd};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thermocut::ukf::{
    default_spread, predict, sigma_points, truncate, truncated_normal_moments, unscented_transform, update, Bounds,
    GaussianBelief, TruncatedUkf,
};

#[test]
fn linear_system_matches_kalman_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = 4;
    let f = DMatrix::identity(d, d) + random_matrix(&mut rng, d, d, 0.1);
    let h = random_matrix(&mut rng, 2, d, 1.0);
    let q = random_spd(&mut rng, d, 0.1) * 0.01;
    let r = random_spd(&mut rng, 2, 0.5) * 0.1;
    let noise = Normal::new(0.0, 1.0).unwrap();

    let mut kf = (DVector::from_element(d, 0.5), random_spd(&mut rng, d, 0.5));
    let mut ukf = GaussianBelief::new(kf.0.clone(), kf.1.clone()).unwrap();
    let mut truth = DVector::from_fn(d, |_, _| noise.sample(&mut rng));
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        truth = &f * &truth;
        let z = &h * &truth + DVector::from_fn(2, |_, _| 0.3 * noise.sample(&mut rng));
        kf = kalman(&kf.0, &kf.1, &f, &q, &h, &r, &z);
        let pred = predict(&ukf, |x| &f * x, &q, default_spread(d)).unwrap();
        ukf = update(&pred, |x| &h * x, &r, &z, default_spread(d)).unwrap();
        worst = worst.max((&ukf.mean - &kf.0).amax());
    }
    assert!(worst <= 1e-9, "max mean error {worst:e}");
    assert!((&ukf.cov - &kf.1).amax() <= 1e-9);
}

#[test]
fn unscented_transform_is_exact_for_affine_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 1..=6 {
        let b = GaussianBelief::new(DVector::from_fn(d, |i, _| i as f64), random_spd(&mut rng, d, 0.1)).unwrap();
        let a = random_matrix(&mut rng, 3, d, 2.0);
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let s = sigma_points(&b, default_spread(d)).unwrap();
        let out = unscented_transform(&s, |x| &a * x + &c).unwrap();
        assert!((&out.mean - (&a * &b.mean + &c)).amax() < 1e-10);
        assert!((&out.cov - &a * &b.cov * a.transpose()).amax() < 1e-9);
    }
}

#[test]
fn half_normal_moments_closed_form() {
    let (m, v) = truncated_normal_moments(0.0, f64::INFINITY).unwrap();
    let pi = std::f64::consts::PI;
    assert!((m - (2.0 / pi).sqrt()).abs() < 1e-6);
    assert!((v - (1.0 - 2.0 / pi)).abs() < 1e-6);
}

/// Independent route for a single bounded component: whiten along that
/// component with the explicit regression `x_j = mu_j + P_ji / P_ii (x_i - mu_i) + e_j`,
/// truncate the scalar, then add back the regression.
fn truncate_one_oracle(b: &GaussianBelief, i: usize, lo: f64, hi: f64) -> GaussianBelief {
    let d = b.dim();
    let sd = b.cov[(i, i)].sqrt();
    let (m, v) = truncated_normal_moments((lo - b.mean[i]) / sd, (hi - b.mean[i]) / sd).unwrap();
    let new_mi = b.mean[i] + sd * m;
    let new_vi = b.cov[(i, i)] * v;
    let beta = DVector::from_fn(d, |j, _| b.cov[(j, i)] / b.cov[(i, i)]);
    let resid = &b.cov - &beta * beta.transpose() * b.cov[(i, i)];
    let mean = &b.mean + &beta * (new_mi - b.mean[i]);
    let cov = resid + &beta * beta.transpose() * new_vi;
    GaussianBelief { mean, cov }
}

#[test]
fn truncation_matches_regression_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let b = GaussianBelief::new(DVector::from_vec(vec![0.3, -0.2, 1.0]), random_spd(&mut rng, 3, 0.2)).unwrap();
        let bounds = Bounds::unbounded(3).with(1, 0.0, 1.5).unwrap();
        let got = truncate(&b, &bounds).unwrap();
        let want = truncate_one_oracle(&b, 1, 0.0, 1.5);
        assert!((&got.mean - &want.mean).amax() < 1e-12);
        assert!((&got.cov - &want.cov).amax() < 1e-12);
    }
}

#[test]
fn truncated_filter_keeps_mean_inside_bounds() {
    let b = GaussianBelief::from_diagonal(DVector::from_vec(vec![0.1, 0.0]), &DVector::from_vec(vec![1.0, 1.0])).unwrap();
    let bounds = Bounds::new(DVector::from_vec(vec![0.0, -1.0]), DVector::from_vec(vec![1.0, 1.0])).unwrap();
    let mut f = TruncatedUkf::new(b, bounds.clone(), 0.5).unwrap();
    let r = DMatrix::identity(1, 1) * 0.01;
    for k in 0..30 {
        let z = DVector::from_element(1, if k % 2 == 0 { -5.0 } else { 5.0 });
        f.predict(|x| x.clone(), &(DMatrix::identity(2, 2) * 0.1)).unwrap();
        f.update(|x| DVector::from_element(1, x[0]), &r, &z).unwrap();
        assert!(bounds.contains_strictly(&f.belief.mean));
    }
}

#[test]
fn zero_process_noise_never_grows_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_matrix(&mut rng, 2, 4, 1.0);
    let r = DMatrix::identity(2, 2) * 0.2;
    let q = DMatrix::zeros(4, 4);
    let mut b = GaussianBelief::new(DVector::zeros(4), random_spd(&mut rng, 4, 0.5)).unwrap();
    for k in 0..40 {
        let before = b.trace();
        b = predict(&b, |x| x.clone(), &q, default_spread(4)).unwrap();
        b = update(&b, |x| &h * x, &r, &DVector::from_element(2, k as f64 * 0.1), default_spread(4)).unwrap();
        assert!(b.trace() <= before + 1e-12);
    }
}
