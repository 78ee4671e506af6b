use corisk::copulas::GaussianCopula;
use corisk::estimation::{
    fit_copula, fit_mixed_copula, fitting_error, log_likelihood, EmpiricalCopula, Family, FitConfig, Region,
};
use corisk::CopulaModel;

fn truth() -> CopulaModel {
    let g = GaussianCopula::equicorrelated(3, 0.08).unwrap();
    CopulaModel::Mixture(corisk::copulas::MixtureCopula::new([0.3, 0.5], g, 2.6, 9.4).unwrap())
}

#[test]
fn mixture_recovery_and_dominance() {
    let data = truth().sample(3000, 20240611).unwrap();
    let cfg = FitConfig::default();
    let t0 = std::time::Instant::now();
    let fit = fit_mixed_copula(&data, &cfg).unwrap();
    eprintln!("mixture fit {:?} {:?}", t0.elapsed(), fit);
    assert!(fit.converged && fit.grad_norm < 1e-5);
    let ll_true = log_likelihood(&truth(), &data).unwrap();
    assert!(fit.loglik >= ll_true - 1e-6, "{} < {}", fit.loglik, ll_true);
    let a1 = fit.param("a1").unwrap();
    let a2 = fit.param("a2").unwrap();
    assert!((a1 - 0.3).abs() <= 0.1 && (a2 - 0.5).abs() <= 0.1 && ((1.0 - a1 - a2) - 0.2).abs() <= 0.1);
    assert!((log_likelihood(&fit.model, &data).unwrap() - fit.loglik).abs() < 1e-8);
    assert!(fit.std_errors.iter().all(|s| s.is_finite() && *s > 0.0));
    assert!(fit.min_information_eigenvalue > 1e-10);

    for family in [Family::Gaussian, Family::Gumbel, Family::Clayton] {
        let single = fit_copula(&data, family, &cfg).unwrap();
        assert!(fit.loglik >= single.loglik - 1e-6, "{family:?}");
    }

    let emp = EmpiricalCopula::new(data.clone()).unwrap();
    let gauss = fit_copula(&data, Family::Gaussian, &cfg).unwrap();
    let cube = Region::cube(0.0, 1.0, 3).unwrap();
    let e_mix = fitting_error(&fit.model, &emp, &cube, 1 << 14, 5).unwrap();
    let e_gau = fitting_error(&gauss.model, &emp, &cube, 1 << 14, 5).unwrap();
    assert!(e_mix.value <= e_gau.value, "{e_mix:?} vs {e_gau:?}");
}

#[test]
fn pure_gaussian_data_favours_gaussian_weight() {
    let g = CopulaModel::Gaussian(GaussianCopula::equicorrelated(3, 0.5).unwrap());
    let cfg = FitConfig::default();
    let seeds = 50;
    let mut hits = 0;
    let t0 = std::time::Instant::now();
    for seed in 0..seeds {
        let data = g.sample(1000, 1000 + seed).unwrap();
        let fit = fit_mixed_copula(&data, &cfg).unwrap();
        assert!(fit.converged);
        if fit.param("a1").unwrap() > 0.9 {
            hits += 1;
        }
    }
    eprintln!("gaussian weight hits {hits}/{seeds} in {:?}", t0.elapsed());
    assert!(hits as f64 >= 0.8 * seeds as f64);
}

#[test]
fn independence_fitting_error_is_small() {
    let data = CopulaModel::independence(3).unwrap().sample(10_000, 99).unwrap();
    let emp = EmpiricalCopula::new(data).unwrap();
    let ind = CopulaModel::independence(3).unwrap();
    let cube = Region::cube(0.0, 1.0, 3).unwrap();
    let a = fitting_error(&ind, &emp, &cube, 1 << 14, 1).unwrap();
    assert!(a.value <= 0.01, "{a:?}");
    let b = fitting_error(&ind, &emp, &cube, 1 << 14, 2).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.value - b.value).abs() <= 2.0 * se.max(1e-12), "{a:?} {b:?}");
}
