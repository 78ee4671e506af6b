use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use corisk::measures::{contributions, MeasureRequest, MedianPolicy};
use corisk_ffi::*;

fn golden_model() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/model.json")
}

fn last_error() -> String {
    let p = corisk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn gumbel_cdf_matches_closed_form() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(corisk_copula_gumbel(2, 2.0, &mut c), CoriskStatus::Ok);
        assert_eq!(corisk_copula_dim(c), 2);
        let u = [0.3, 0.7];
        let mut v = 0.0;
        assert_eq!(corisk_copula_cdf(c, u.as_ptr(), 2, &mut v), CoriskStatus::Ok);
        let want = (-((-u[0].ln()).powi(2) + (-u[1].ln()).powi(2)).sqrt()).exp();
        assert!((v - want).abs() < 1e-14, "{v} vs {want}");
        // bivariate survival: 1 − u − v + C(u, v)
        assert_eq!(corisk_copula_survival(c, u.as_ptr(), 2, &mut v), CoriskStatus::Ok);
        assert!((v - (1.0 - u[0] - u[1] + want)).abs() < 1e-14);
        corisk_copula_free(c);
    }
}

#[test]
fn independent_exponentials_have_no_contribution() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(corisk_copula_independence(3, &mut c), CoriskStatus::Ok);
        let mut ms = [ptr::null_mut(); 3];
        for (i, m) in ms.iter_mut().enumerate() {
            assert_eq!(corisk_marginal_exponential(1.0 + i as f64, m), CoriskStatus::Ok);
        }
        let handles: Vec<*const CoriskMarginal> = ms.iter().map(|m| *m as *const _).collect();
        let mut model = ptr::null_mut();
        assert_eq!(corisk_model_new(c, handles.as_ptr(), 3, &mut model), CoriskStatus::Ok);
        corisk_copula_free(c);
        for m in ms {
            corisk_marginal_free(m);
        }
        assert_eq!(corisk_model_dim(model), 3);

        let tail = [0.9, 0.8];
        let mut v = 0.0;
        assert_eq!(corisk_mcovar(model, 0, 0.95, tail.as_ptr(), 2, &mut v), CoriskStatus::Ok);
        assert!((v - (-(0.05f64).ln())).abs() < 1e-10, "{v}");
        // ES of Exp(1) at p is VaR + 1
        assert_eq!(corisk_mcoes(model, 0, 0.95, tail.as_ptr(), 2, &mut v), CoriskStatus::Ok);
        assert!((v - (1.0 - (0.05f64).ln())).abs() < 1e-8, "{v}");

        let mut r = CoriskRiskReport::default();
        assert_eq!(
            corisk_contributions(model, 0, 0.95, tail.as_ptr(), 2, ptr::null(), 0, true, &mut r),
            CoriskStatus::Ok
        );
        assert!(r.has_median);
        for d in [r.delta_mcovar, r.delta_mcoes, r.delta_mmme, r.delta_med_mcovar, r.delta_med_mcoes] {
            assert!(d.abs() < 1e-8, "{d}");
        }
        corisk_model_free(model);
    }
}

#[test]
fn loaded_model_matches_the_library() {
    let path = CString::new(golden_model().to_str().unwrap()).unwrap();
    let text = std::fs::read_to_string(golden_model()).unwrap();
    let fitted: corisk::cli::pipeline::FittedModel = serde_json::from_str(&text).unwrap();
    let req = MeasureRequest::new(1, 0.975, vec![0.95, 0.9], vec![0.75, 0.25]).unwrap();
    let want = contributions(&fitted.joint, &req, MedianPolicy::Require).unwrap();
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(corisk_model_load(path.as_ptr(), &mut model), CoriskStatus::Ok);
        let mut r = CoriskRiskReport::default();
        let w = [0.75, 0.25];
        let st = corisk_contributions(model, 1, 0.975, req.p_tail.as_ptr(), 2, w.as_ptr(), 2, true, &mut r);
        assert_eq!(st, CoriskStatus::Ok);
        assert_eq!(r.mcovar, want.mcovar);
        assert_eq!(r.mcoes, want.mcoes);
        assert_eq!(r.mmme, want.mmme);
        assert_eq!(r.delta_r_mmme, want.delta_r_mmme);
        assert_eq!(Some(r.delta_r_med_mcoes), want.delta_r_med_mcoes);
        let mut v = 0.0;
        assert_eq!(corisk_mmme(model, 1, 0.975, req.p_tail.as_ptr(), 2, w.as_ptr(), 2, &mut v), CoriskStatus::Ok);
        assert_eq!(v, want.mmme);
        corisk_model_free(model);

        let json = CString::new(serde_json::to_string(&fitted.joint).unwrap()).unwrap();
        let mut bare = ptr::null_mut();
        assert_eq!(corisk_model_from_json(json.as_ptr(), &mut bare), CoriskStatus::Ok);
        assert_eq!(corisk_model_dim(bare), 3);
        corisk_model_free(bare);
    }
}

#[test]
fn failures_report_codes_and_messages() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(corisk_copula_clayton(3, -1.0, &mut c), CoriskStatus::InvalidParameter);
        assert!(c.is_null());
        assert!(last_error().contains("invalid parameter"));
        assert_eq!(corisk_copula_gumbel(3, 2.0, ptr::null_mut()), CoriskStatus::NullPointer);

        assert_eq!(corisk_copula_gumbel(3, 2.0, &mut c), CoriskStatus::Ok);
        assert!(corisk_last_error_message().is_null());
        let u = [0.5, 0.5];
        let mut v = 0.0;
        assert_eq!(corisk_copula_cdf(c, u.as_ptr(), 2, &mut v), CoriskStatus::DimensionMismatch);
        let bad = [0.5, 1.5, 0.5];
        assert_eq!(corisk_copula_cdf(c, bad.as_ptr(), 3, &mut v), CoriskStatus::OutOfDomain);
        corisk_copula_free(c);

        let mut m = ptr::null_mut();
        assert_eq!(corisk_marginal_gpd(0.2, 1.0, &mut m), CoriskStatus::Ok);
        assert_eq!(corisk_marginal_quantile(m, 1.0, &mut v), CoriskStatus::OutOfDomain);
        corisk_marginal_free(m);

        let missing = CString::new("/nonexistent/model.json").unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(corisk_model_load(missing.as_ptr(), &mut model), CoriskStatus::Input);
        let garbage = CString::new("{\"nope\": 1}").unwrap();
        assert_eq!(corisk_model_from_json(garbage.as_ptr(), &mut model), CoriskStatus::Input);

        let path = CString::new(golden_model().to_str().unwrap()).unwrap();
        assert_eq!(corisk_model_load(path.as_ptr(), &mut model), CoriskStatus::Ok);
        let tail = [0.9, 0.4];
        let w = [0.6, 0.6];
        assert_eq!(corisk_mmme(model, 0, 0.95, tail.as_ptr(), 2, w.as_ptr(), 2, &mut v), CoriskStatus::InvalidParameter);
        let mut r = CoriskRiskReport::default();
        assert_eq!(
            corisk_contributions(model, 0, 0.95, tail.as_ptr(), 2, ptr::null(), 0, true, &mut r),
            CoriskStatus::OutOfDomain
        );
        assert_eq!(
            corisk_contributions(model, 0, 0.95, tail.as_ptr(), 2, ptr::null(), 0, false, &mut r),
            CoriskStatus::Ok
        );
        assert!(!r.has_median && r.delta_med_mcovar.is_nan() && r.mcovar.is_finite());
        assert_eq!(corisk_mcovar(model, 0, 0.95, tail.as_ptr(), 3, &mut v), CoriskStatus::DimensionMismatch);
        corisk_model_free(model);
        corisk_model_free(ptr::null_mut());
    }
}

#[test]
fn status_names_match_error_kinds() {
    let name = |s: i32| unsafe { CStr::from_ptr(corisk_status_name(s)) }.to_str().unwrap().to_string();
    assert_eq!(name(CoriskStatus::Ok as i32), "ok");
    let e = corisk::CoriskError::InsufficientExcesses { got: 1, need: 2 };
    assert_eq!(name(CoriskStatus::from(&e) as i32), e.kind());
    let e = corisk::CoriskError::NonpositiveBenchmark { name: "VaR", value: 0.0 };
    assert_eq!(name(CoriskStatus::from(&e) as i32), e.kind());
    assert!(corisk_status_name(999).is_null());
    let v = unsafe { CStr::from_ptr(corisk_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
